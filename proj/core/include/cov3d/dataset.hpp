#pragma once

#include "cov3d/boosting.hpp"
#include "cov3d/video.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cov3d {

struct ManifestEntry {
  std::string path;   // directory of frame files, relative to the manifest
  std::string label;
  int fold = -1;      // optional preassigned fold
  bool has_crop = false;
  std::array<int, 4> crop{};  // x1, y1, x2, y2 inclusive
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  int resize_width = 0;   // 0 = keep native resolution
  int resize_height = 0;
  std::string base_dir;   // resolved at load time; not serialized

  static DatasetManifest load(const std::string& path);
  void save(const std::string& path) const;

  /// Sorted unique labels; class ids used everywhere else are positions
  /// in this vector.
  std::vector<std::string> class_names() const;
};

/// Loads a directory of lexicographically ordered frames as a video,
/// applying the optional crop and resize. Intensities end up in [0, 1].
Video load_video(const std::string& dir,
                 std::optional<std::pair<int, int>> resize = {},
                 std::optional<std::array<int, 4>> crop = {});

/// Entry's video with the manifest resize/crop configuration applied.
Video load_entry(const DatasetManifest& manifest, const ManifestEntry& entry);

/// Synthetic translating-bar dataset. Every class moves a soft-edged
/// bar in one direction ("left", "right", "up", "down") with seeded
/// jitter on speed and start position; frames wrap around the volume.
struct SynthOptions {
  std::vector<std::string> class_names{"left", "right", "up"};
  int samples_per_class = 30;
  int width = 32;
  int height = 32;
  int frames = 16;
  std::uint64_t seed = 7;
  double speed = 2.0;         // pixels per frame before jitter
  double speed_jitter = 0.25; // relative, uniform in [1-j, 1+j]
  double noise = 0.0;         // additive uniform intensity noise
};

/// Writes PGM frames and a manifest.json under out_dir; byte-identical
/// for identical options.
DatasetManifest generate_synthetic(const SynthOptions& options,
                                   const std::string& out_dir);

struct FoldResult {
  double accuracy = 0.0;
  double train_seconds = 0.0;
  double eval_seconds = 0.0;
};

struct EvalReport {
  std::vector<std::string> labels;
  double overall_accuracy = 0.0;
  std::vector<double> per_class_rates;  // mean of per-fold rates
  std::vector<std::vector<int>> confusion;  // [true][predicted], pooled
  std::vector<FoldResult> folds;
  double total_seconds = 0.0;

  std::string to_json(int indent = 2) const;
};

/// Stratified seeded fold assignment; entries with preassigned folds
/// (all of them set) are honoured as-is. Throws ClassTooSmallError when
/// a class has fewer samples than folds.
std::vector<int> assign_folds(const DatasetManifest& manifest, int folds,
                              std::uint64_t seed);

/// Trains one multiclass model per fold on the remaining folds and
/// evaluates it on the held-out one.
EvalReport cross_validate(const DatasetManifest& manifest,
                          const BoostConfig& config, int folds,
                          std::uint64_t seed);

/// Trains a multiclass model on every manifest entry.
MulticlassModel train_from_manifest(const DatasetManifest& manifest,
                                    const BoostConfig& config);

}  // namespace cov3d
