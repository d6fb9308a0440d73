#include "cov3d/dataset.hpp"

#include "cov3d/errors.hpp"
#include "cov3d/image_io.hpp"
#include "cov3d/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace cov3d {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kManifestFormatVersion = 1;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

bool frame_file(const fs::path& path) {
  const std::string ext = path.extension().string();
  std::string lower;
  for (char c : ext) lower.push_back(static_cast<char>(std::tolower(c)));
  return lower == ".pgm" || lower == ".png";
}

}  // namespace

DatasetManifest DatasetManifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open manifest");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw IoError(path + ": manifest is not valid JSON: " + e.what());
  }
  if (!doc.is_object() || doc.value("format_version", -1) !=
                              kManifestFormatVersion) {
    throw VersionMismatchError(path + ": unsupported manifest version");
  }

  DatasetManifest manifest;
  manifest.base_dir = fs::path(path).parent_path().string();
  if (doc.contains("config")) {
    const json& config = doc.at("config");
    if (config.contains("resize")) {
      manifest.resize_width = config.at("resize").at(0).get<int>();
      manifest.resize_height = config.at("resize").at(1).get<int>();
    }
  }
  if (!doc.contains("entries") || !doc.at("entries").is_array()) {
    throw IoError(path + ": manifest has no entries");
  }
  for (const json& item : doc.at("entries")) {
    ManifestEntry entry;
    entry.path = item.at("path").get<std::string>();
    entry.label = item.at("label").get<std::string>();
    if (entry.label.empty()) throw IoError(path + ": empty label");
    entry.fold = item.value("fold", -1);
    if (item.contains("crop")) {
      const json& crop = item.at("crop");
      for (int i = 0; i < 4; ++i) {
        entry.crop[static_cast<std::size_t>(i)] =
            crop.at(static_cast<std::size_t>(i)).get<int>();
      }
      entry.has_crop = true;
    }
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

void DatasetManifest::save(const std::string& path) const {
  json doc;
  doc["format_version"] = kManifestFormatVersion;
  if (resize_width > 0 && resize_height > 0) {
    doc["config"]["resize"] = {resize_width, resize_height};
  } else {
    doc["config"] = json::object();
  }
  doc["entries"] = json::array();
  for (const ManifestEntry& entry : entries) {
    json item;
    item["path"] = entry.path;
    item["label"] = entry.label;
    if (entry.fold >= 0) item["fold"] = entry.fold;
    if (entry.has_crop) {
      item["crop"] = {entry.crop[0], entry.crop[1], entry.crop[2],
                      entry.crop[3]};
    }
    doc["entries"].push_back(std::move(item));
  }
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot write manifest");
  out << doc.dump(2) << "\n";
}

std::vector<std::string> DatasetManifest::class_names() const {
  std::set<std::string> names;
  for (const ManifestEntry& entry : entries) names.insert(entry.label);
  return {names.begin(), names.end()};
}

Video load_video(const std::string& dir,
                 std::optional<std::pair<int, int>> resize,
                 std::optional<std::array<int, 4>> crop) {
  if (!fs::is_directory(dir)) {
    throw MissingFramesError(dir + ": not a directory");
  }
  std::vector<std::string> files;
  for (const auto& item : fs::directory_iterator(dir)) {
    if (item.is_regular_file() && frame_file(item.path())) {
      files.push_back(item.path().string());
    }
  }
  if (files.empty()) throw MissingFramesError(dir + ": no frame files");
  std::sort(files.begin(), files.end());

  Video video;
  int t = 0;
  for (const std::string& file : files) {
    Frame frame = load_frame(file);
    if (crop) {
      frame = crop_frame(frame, (*crop)[0], (*crop)[1], (*crop)[2],
                         (*crop)[3]);
    }
    if (resize) frame = resize_bilinear(frame, resize->first, resize->second);
    if (t == 0) {
      video = Video::create(frame.width, frame.height,
                            static_cast<int>(files.size()));
    } else if (frame.width != video.width || frame.height != video.height) {
      throw InconsistentDimsError(file + ": frame size differs from " +
                                  files.front());
    }
    std::copy(frame.pixels.begin(), frame.pixels.end(),
              video.data.begin() + video.index(0, 0, t));
    ++t;
  }
  return video;
}

Video load_entry(const DatasetManifest& manifest,
                 const ManifestEntry& entry) {
  const fs::path dir = fs::path(manifest.base_dir) / entry.path;
  std::optional<std::pair<int, int>> resize;
  if (manifest.resize_width > 0 && manifest.resize_height > 0) {
    resize = {manifest.resize_width, manifest.resize_height};
  }
  std::optional<std::array<int, 4>> crop;
  if (entry.has_crop) crop = entry.crop;
  return load_video(dir.string(), resize, crop);
}

namespace {

struct Direction {
  double dx = 0.0;
  double dy = 0.0;
  bool vertical_bar = false;  // bar orthogonal to the motion
};

Direction direction_for(const std::string& name) {
  if (name == "left") return {-1.0, 0.0, true};
  if (name == "right") return {1.0, 0.0, true};
  if (name == "up") return {0.0, -1.0, false};
  if (name == "down") return {0.0, 1.0, false};
  throw ConfigError("unknown synthetic class '" + name +
                    "' (use left/right/up/down)");
}

// soft-edged bar profile around a wrapped coordinate distance
double bar_intensity(double distance, double half_width) {
  const double edge = half_width + 1.0 - std::abs(distance);
  return std::clamp(edge, 0.0, 1.0);
}

}  // namespace

DatasetManifest generate_synthetic(const SynthOptions& options,
                                   const std::string& out_dir) {
  if (options.samples_per_class < 1) {
    throw ConfigError("synthetic dataset needs samples_per_class >= 1");
  }
  if (options.class_names.empty()) {
    throw ConfigError("synthetic dataset needs at least one class");
  }
  if (options.width < 4 || options.height < 4 || options.frames < 2) {
    throw ConfigError("synthetic dataset volume too small");
  }
  for (const std::string& name : options.class_names) direction_for(name);

  fs::create_directories(out_dir);
  DatasetManifest manifest;
  manifest.base_dir = out_dir;

  const double background = 0.12;
  const double foreground = 0.88;

  for (std::size_t c = 0; c < options.class_names.size(); ++c) {
    const std::string& name = options.class_names[c];
    const Direction dir = direction_for(name);
    for (int s = 0; s < options.samples_per_class; ++s) {
      Rng rng(derive_seed(options.seed,
                          (static_cast<std::uint64_t>(c) << 20) |
                              static_cast<std::uint64_t>(s)));
      const double speed =
          options.speed * rng.uniform(1.0 - options.speed_jitter,
                                      1.0 + options.speed_jitter);
      const double span = dir.vertical_bar ? options.width : options.height;
      const double start = rng.uniform(0.0, span);
      const double half_width = span / 8.0 + rng.uniform(0.0, span / 16.0);

      std::ostringstream sample_name;
      sample_name << name << "_"
                  << std::setw(3) << std::setfill('0') << s;
      const fs::path sample_dir = fs::path(out_dir) / sample_name.str();
      fs::create_directories(sample_dir);

      for (int t = 0; t < options.frames; ++t) {
        const double center =
            start + speed * t * (dir.vertical_bar ? dir.dx : dir.dy);
        Frame frame;
        frame.width = options.width;
        frame.height = options.height;
        frame.pixels.resize(static_cast<std::size_t>(options.width) *
                            options.height);
        for (int y = 0; y < options.height; ++y) {
          for (int x = 0; x < options.width; ++x) {
            const double coord = dir.vertical_bar ? x : y;
            // wrapped distance keeps the bar in view over the clip
            double delta = std::fmod(coord - center, span);
            if (delta > span / 2.0) delta -= span;
            if (delta < -span / 2.0) delta += span;
            double value = background +
                           (foreground - background) *
                               bar_intensity(delta, half_width);
            if (options.noise > 0.0) {
              value += rng.uniform(-options.noise, options.noise);
            }
            frame.at(x, y) = static_cast<float>(std::clamp(value, 0.0, 1.0));
          }
        }
        std::ostringstream frame_name;
        frame_name << "frame_" << std::setw(4) << std::setfill('0') << t
                   << ".pgm";
        save_pgm((sample_dir / frame_name.str()).string(), frame);
      }

      ManifestEntry entry;
      entry.path = sample_name.str();
      entry.label = name;
      manifest.entries.push_back(std::move(entry));
    }
  }

  manifest.save((fs::path(out_dir) / "manifest.json").string());
  return manifest;
}

std::vector<int> assign_folds(const DatasetManifest& manifest, int folds,
                              std::uint64_t seed) {
  if (folds < 2) throw ConfigError("cross-validation needs folds >= 2");
  const std::vector<std::string> names = manifest.class_names();

  bool all_preassigned = !manifest.entries.empty();
  for (const ManifestEntry& entry : manifest.entries) {
    if (entry.fold < 0) all_preassigned = false;
  }
  std::vector<int> assignment(manifest.entries.size(), -1);
  if (all_preassigned) {
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
      if (manifest.entries[i].fold >= folds) {
        throw ConfigError("manifest fold id exceeds fold count");
      }
      assignment[i] = manifest.entries[i].fold;
    }
    return assignment;
  }

  Rng rng(derive_seed(seed, 0x666f6c64));  // fold-assignment stream
  for (std::size_t c = 0; c < names.size(); ++c) {
    std::vector<int> members;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
      if (manifest.entries[i].label == names[c]) {
        members.push_back(static_cast<int>(i));
      }
    }
    if (static_cast<int>(members.size()) < folds) {
      throw ClassTooSmallError("class '" + names[c] + "' has " +
                               std::to_string(members.size()) +
                               " samples, need >= " + std::to_string(folds));
    }
    rng.shuffle(members);
    for (std::size_t m = 0; m < members.size(); ++m) {
      assignment[static_cast<std::size_t>(members[m])] =
          static_cast<int>(m % static_cast<std::size_t>(folds));
    }
  }
  return assignment;
}

namespace {

// Keeps descriptor sources alive as long as the memory budget allows;
// eviction is LRU.
class SourceCache {
 public:
  SourceCache(const DatasetManifest& manifest, std::size_t budget_bytes)
      : manifest_(manifest), budget_(budget_bytes) {}

  std::shared_ptr<const DescriptorSource> get(int index) {
    auto it = cache_.find(index);
    if (it != cache_.end()) {
      touch(index);
      return it->second;
    }
    const Video video = load_entry(manifest_, manifest_.entries
                                                  [static_cast<std::size_t>(
                                                      index)]);
    auto source = std::make_shared<const DescriptorSource>(video);
    bytes_ += source->memory_bytes();
    cache_[index] = source;
    order_.push_back(index);
    while (bytes_ > budget_ && order_.size() > 1) {
      const int victim = order_.front();
      order_.erase(order_.begin());
      auto victim_it = cache_.find(victim);
      if (victim_it != cache_.end()) {
        bytes_ -= victim_it->second->memory_bytes();
        cache_.erase(victim_it);
      }
    }
    return source;
  }

 private:
  void touch(int index) {
    auto pos = std::find(order_.begin(), order_.end(), index);
    if (pos != order_.end()) {
      order_.erase(pos);
      order_.push_back(index);
    }
  }

  const DatasetManifest& manifest_;
  std::size_t budget_ = 0;
  std::size_t bytes_ = 0;
  std::map<int, std::shared_ptr<const DescriptorSource>> cache_;
  std::vector<int> order_;
};

std::vector<int> label_ids(const DatasetManifest& manifest,
                           const std::vector<std::string>& names) {
  std::vector<int> ids;
  ids.reserve(manifest.entries.size());
  for (const ManifestEntry& entry : manifest.entries) {
    const auto it = std::find(names.begin(), names.end(), entry.label);
    ids.push_back(static_cast<int>(it - names.begin()));
  }
  return ids;
}

}  // namespace

MulticlassModel train_from_manifest(const DatasetManifest& manifest,
                                    const BoostConfig& config) {
  if (manifest.entries.empty()) {
    throw ConfigError("manifest has no entries");
  }
  const std::vector<std::string> names = manifest.class_names();
  if (names.size() < 2) {
    throw ClassTooSmallError("training needs at least two classes");
  }
  const std::vector<int> ids = label_ids(manifest, names);

  SourceCache cache(manifest, IntegralOptions{}.memory_budget_bytes);
  const Dims dims = cache.get(0)->dims();
  return train_multiclass(
      [&cache](int index) { return cache.get(index); }, ids, names, dims,
      config);
}

EvalReport cross_validate(const DatasetManifest& manifest,
                          const BoostConfig& config, int folds,
                          std::uint64_t seed) {
  const auto total_start = std::chrono::steady_clock::now();
  const std::vector<std::string> names = manifest.class_names();
  if (names.size() < 2) {
    throw ClassTooSmallError("cross-validation needs at least two classes");
  }
  const std::vector<int> ids = label_ids(manifest, names);
  const std::vector<int> fold_of = assign_folds(manifest, folds, seed);
  const int n_classes = static_cast<int>(names.size());

  EvalReport report;
  report.labels = names;
  report.confusion.assign(static_cast<std::size_t>(n_classes),
                          std::vector<int>(static_cast<std::size_t>(n_classes),
                                           0));
  Matrix fold_class_correct = Matrix::Zero(folds, n_classes);
  Matrix fold_class_total = Matrix::Zero(folds, n_classes);

  SourceCache cache(manifest, IntegralOptions{}.memory_budget_bytes);
  const Dims dims = cache.get(0)->dims();

  for (int fold = 0; fold < folds; ++fold) {
    const auto fold_start = std::chrono::steady_clock::now();

    std::vector<int> train_indices;
    std::vector<int> test_indices;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
      (fold_of[i] == fold ? test_indices : train_indices)
          .push_back(static_cast<int>(i));
    }

    std::vector<int> train_labels;
    train_labels.reserve(train_indices.size());
    for (int i : train_indices) {
      train_labels.push_back(ids[static_cast<std::size_t>(i)]);
    }

    BoostConfig fold_config = config;
    fold_config.seed = derive_seed(config.seed,
                                   static_cast<std::uint64_t>(fold) + 101);
    MulticlassModel model = train_multiclass(
        [&cache, &train_indices](int local) {
          return cache.get(train_indices[static_cast<std::size_t>(local)]);
        },
        train_labels, names, dims, fold_config);

    FoldResult result;
    result.train_seconds = seconds_since(fold_start);

    const auto eval_start = std::chrono::steady_clock::now();
    int correct = 0;
    for (int i : test_indices) {
      const auto source = cache.get(i);
      const int predicted = predict(model, *source);
      const int truth = ids[static_cast<std::size_t>(i)];
      report.confusion[static_cast<std::size_t>(truth)]
                      [static_cast<std::size_t>(predicted)] += 1;
      fold_class_total(fold, truth) += 1.0;
      if (predicted == truth) {
        fold_class_correct(fold, truth) += 1.0;
        ++correct;
      }
    }
    result.eval_seconds = seconds_since(eval_start);
    result.accuracy = test_indices.empty()
                          ? 0.0
                          : static_cast<double>(correct) /
                                static_cast<double>(test_indices.size());
    report.folds.push_back(result);
  }

  int diagonal = 0;
  int total = 0;
  for (int a = 0; a < n_classes; ++a) {
    for (int b = 0; b < n_classes; ++b) {
      total += report.confusion[static_cast<std::size_t>(a)]
                               [static_cast<std::size_t>(b)];
      if (a == b) {
        diagonal += report.confusion[static_cast<std::size_t>(a)]
                                    [static_cast<std::size_t>(b)];
      }
    }
  }
  report.overall_accuracy =
      total > 0 ? static_cast<double>(diagonal) / total : 0.0;

  report.per_class_rates.assign(static_cast<std::size_t>(n_classes), 0.0);
  for (int c = 0; c < n_classes; ++c) {
    double sum = 0.0;
    int counted = 0;
    for (int fold = 0; fold < folds; ++fold) {
      if (fold_class_total(fold, c) > 0.0) {
        sum += fold_class_correct(fold, c) / fold_class_total(fold, c);
        ++counted;
      }
    }
    report.per_class_rates[static_cast<std::size_t>(c)] =
        counted > 0 ? sum / counted : 0.0;
  }
  report.total_seconds = seconds_since(total_start);
  return report;
}

std::string EvalReport::to_json(int indent) const {
  json doc;
  doc["labels"] = labels;
  doc["overall_accuracy"] = overall_accuracy;
  doc["per_class_rates"] = per_class_rates;
  doc["confusion"] = confusion;
  doc["folds"] = json::array();
  for (const FoldResult& fold : folds) {
    doc["folds"].push_back({{"accuracy", fold.accuracy},
                            {"train_seconds", fold.train_seconds},
                            {"eval_seconds", fold.eval_seconds}});
  }
  doc["total_seconds"] = total_seconds;
  // published results on the full benchmark datasets, for context only
  doc["literature_context"] = {
      {"ucf_sport_accuracy_percent", 93.91},
      {"cambridge_overall_percent", 93.0},
      {"cambridge_overall_stddev", 1.1},
  };
  return doc.dump(indent);
}

}  // namespace cov3d
