#include "cov3d/boosting.hpp"

#include "cov3d/errors.hpp"
#include "cov3d/rng.hpp"
#include "cov3d/spd.hpp"
#include "cov3d/windows.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

namespace cov3d {

std::string mapper_kind_name(MapperKind kind) {
  switch (kind) {
    case MapperKind::wrlpp: return "wrlpp";
    case MapperKind::upper_triangle: return "upper";
    case MapperKind::identity_tangent: return "tangent";
    case MapperKind::karcher_tangent: return "karcher";
  }
  throw ConfigError("unknown mapper kind");
}

MapperKind mapper_kind_from_name(const std::string& name) {
  if (name == "wrlpp") return MapperKind::wrlpp;
  if (name == "upper") return MapperKind::upper_triangle;
  if (name == "tangent") return MapperKind::identity_tangent;
  if (name == "karcher") return MapperKind::karcher_tangent;
  throw ConfigError("unknown mapper kind: " + name);
}

void BoostConfig::validate() const {
  if (!(detection_rate > 0.0) || detection_rate > 1.0) {
    throw ConfigError("detection rate must lie in (0, 1]");
  }
  if (!(rejection_rate > 0.0) || rejection_rate > 1.0) {
    throw ConfigError("rejection rate must lie in (0, 1]");
  }
  if (margin < 0.0 || margin >= 1.0) {
    throw ConfigError("margin must lie in [0, 1)");
  }
  if (max_iterations < 1) throw ConfigError("max iterations must be >= 1");
  if (knn < 1) throw ConfigError("knn must be >= 1");
  if (projection_dim < 1) throw ConfigError("projection dim must be >= 1");
  if (!(min_frac > 0.0) || min_frac > 1.0 || !(step_frac > 0.0) ||
      step_frac > 1.0) {
    throw ConfigError("window fractions must lie in (0, 1]");
  }
  if (window_samples < 0) throw ConfigError("window samples must be >= 0");
  if (sigma < 0.0) throw ConfigError("sigma must be >= 0");
  if (threads < 0) throw ConfigError("threads must be >= 0");
}

ResponseValues logitboost_responses(const std::vector<int>& binary_labels,
                                    const Vector& probs) {
  const int n = static_cast<int>(binary_labels.size());
  if (probs.size() != n) {
    throw ConfigError("responses: labels/probs size mismatch");
  }
  ResponseValues out;
  out.z.resize(n);
  out.w.resize(n);
  for (int j = 0; j < n; ++j) {
    const double p = probs[j];
    if (!(p > 0.0) || !(p < 1.0)) {
      throw ConfigError("responses: probabilities must lie in (0, 1)");
    }
    const double y = binary_labels[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
    const double pq = p * (1.0 - p);
    out.z[j] = std::clamp((y - p) / pq, -kResponseClamp, kResponseClamp);
    out.w[j] = std::max(pq, kWeightFloor);
  }
  return out;
}

Vector fit_weak_learner(const Matrix& inputs, const Vector& z,
                        const Vector& w) {
  const int n = static_cast<int>(inputs.rows());
  const int r = static_cast<int>(inputs.cols());
  if (z.size() != n || w.size() != n || n < 2) {
    throw ConfigError("weak learner: bad design size");
  }
  Matrix design(n, r + 1);
  design.col(0).setOnes();
  design.rightCols(r) = inputs;

  const Matrix weighted = w.asDiagonal() * design;
  Matrix normal = design.transpose() * weighted;
  const Vector target = weighted.transpose() * z;

  Eigen::LDLT<Matrix> ldlt(normal);
  Vector beta = ldlt.solve(target);
  // rank deficiency shows up as a (near-)zero pivot in D
  const Vector pivots = ldlt.vectorD();
  const bool singular = ldlt.info() != Eigen::Success || !beta.allFinite() ||
                        pivots.minCoeff() <=
                            1e-12 * pivots.cwiseAbs().maxCoeff();
  if (singular) {
    // ridge on the slope block keeps the intercept free, so constant
    // inputs collapse onto the weighted mean of z
    normal.diagonal().tail(r).array() += 1e-8 * normal.trace();
    beta = normal.ldlt().solve(target);
  }
  return beta;
}

Vector WeakLearner::map(const Matrix& descriptor) const {
  switch (mapper) {
    case MapperKind::wrlpp:
      return project(wrlpp, descriptor);
    case MapperKind::upper_triangle:
      return vectorize_upper_triangle(descriptor);
    case MapperKind::identity_tangent:
      return vectorize_upper_triangle(matrix_log(descriptor));
    case MapperKind::karcher_tangent:
      return vectorize_upper_triangle(log_map(karcher_base, descriptor));
  }
  throw ConfigError("unknown mapper kind");
}

double WeakLearner::respond(const Matrix& descriptor) const {
  return evaluate_weak_learner(coeffs, map(descriptor));
}

namespace {

inline double prob_from_score(double f) {
  const double p = 0.5 * (1.0 + std::tanh(f));
  return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

double negative_log_likelihood(const std::vector<int>& labels,
                               const Vector& scores) {
  double nll = 0.0;
  for (int j = 0; j < scores.size(); ++j) {
    const double p = prob_from_score(scores[j]);
    nll -= labels[static_cast<std::size_t>(j)] ? std::log(p)
                                               : std::log(1.0 - p);
  }
  return nll;
}

// ceil(rate * count) as a 1-based rank, robust to the rate not being
// exactly representable
int boundary_rank(double rate, int count) {
  const int rank = static_cast<int>(
      std::ceil(rate * static_cast<double>(count) - 1e-9));
  return std::clamp(rank, 1, count);
}

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      body(i);
    }
  };
  std::vector<std::thread> pool;
  const int workers = std::min(threads, n);
  pool.reserve(static_cast<std::size_t>(workers) - 1);
  for (int i = 1; i < workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

// Descriptor sets, pairwise distances and weight-independent designs
// per window; immutable once built, shared across boosting iterations.
struct WindowData {
  std::vector<Matrix> descriptors;
  Matrix distances;       // only for the wrlpp mapper
  double median_sigma = 0.0;
  Matrix static_design;   // rows per sample, fixed mappers only
};

class WindowDataCache {
 public:
  WindowDataCache(const std::vector<const DescriptorSource*>& sources,
                  const std::vector<Window>& grid, MapperKind mapper)
      : sources_(sources), grid_(grid), mapper_(mapper) {}

  std::shared_ptr<const WindowData> get(int window_index) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = cache_.find(window_index);
      if (it != cache_.end()) return it->second;
    }
    auto data = std::make_shared<WindowData>(build(window_index));
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = cache_.emplace(window_index, std::move(data));
    return it->second;
  }

 private:
  WindowData build(int window_index) const {
    const Window& window = grid_[static_cast<std::size_t>(window_index)];
    WindowData data;
    data.descriptors.reserve(sources_.size());
    for (const DescriptorSource* source : sources_) {
      data.descriptors.push_back(source->descriptor(window));
    }
    switch (mapper_) {
      case MapperKind::wrlpp:
      case MapperKind::karcher_tangent:
        data.distances = pairwise_geodesic_distances(data.descriptors);
        data.median_sigma = median_of_distances(data.distances);
        break;
      case MapperKind::upper_triangle: {
        const int n = static_cast<int>(data.descriptors.size());
        for (int j = 0; j < n; ++j) {
          const Vector row = vectorize_upper_triangle(
              data.descriptors[static_cast<std::size_t>(j)]);
          if (j == 0) data.static_design.resize(n, row.size());
          data.static_design.row(j) = row.transpose();
        }
        break;
      }
      case MapperKind::identity_tangent: {
        const int n = static_cast<int>(data.descriptors.size());
        for (int j = 0; j < n; ++j) {
          const Vector row = vectorize_upper_triangle(matrix_log(
              data.descriptors[static_cast<std::size_t>(j)]));
          if (j == 0) data.static_design.resize(n, row.size());
          data.static_design.row(j) = row.transpose();
        }
        break;
      }
    }
    return data;
  }

  const std::vector<const DescriptorSource*>& sources_;
  const std::vector<Window>& grid_;
  MapperKind mapper_;
  std::mutex mutex_;
  std::map<int, std::shared_ptr<const WindowData>> cache_;
};

struct Candidate {
  bool ok = false;
  std::exception_ptr error;
  double nll = std::numeric_limits<double>::infinity();
  Vector coeffs;
  Vector updated_scores;  // F after this learner, for the winner
  double sigma = 0.0;
  Matrix projection;
  Matrix karcher_base;
  std::shared_ptr<const WindowData> data;
};

}  // namespace

BinaryClassifier train_binary(
    const std::vector<const DescriptorSource*>& sources,
    const std::vector<int>& binary_labels, const std::vector<Window>& grid,
    const BoostConfig& config, int label_a, int label_b,
    std::uint64_t seed) {
  config.validate();
  const int n = static_cast<int>(sources.size());
  if (static_cast<int>(binary_labels.size()) != n) {
    throw ConfigError("train_binary: labels size mismatch");
  }
  if (grid.empty()) throw EmptyGridError("train_binary: empty window grid");

  int n_pos = 0;
  for (int label : binary_labels) n_pos += label ? 1 : 0;
  const int n_neg = n - n_pos;
  if (n_pos < 2 || n_neg < 2) {
    throw PairTooSmallError("train_binary: both classes need >= 2 samples, got " +
                            std::to_string(n_pos) + " positive / " +
                            std::to_string(n_neg) + " negative");
  }

  const int threads = config.threads > 0
                          ? config.threads
                          : static_cast<int>(std::max(
                                1u, std::thread::hardware_concurrency()));
  const int k_eff = std::max(1, std::min(config.knn,
                                         std::min(n_pos, n_neg) - 1));
  const int r_eff = std::min(config.projection_dim, n - 1);

  WindowDataCache cache(sources, grid, config.mapper);
  Rng rng(seed);

  std::vector<int> pos_indices, neg_indices;
  for (int j = 0; j < n; ++j) {
    (binary_labels[static_cast<std::size_t>(j)] ? pos_indices : neg_indices)
        .push_back(j);
  }

  BinaryClassifier classifier;
  classifier.label_a = label_a;
  classifier.label_b = label_b;
  classifier.positive_label = std::min(label_a, label_b);

  Vector score = Vector::Zero(n);  // F(V)
  Vector probs = Vector::Constant(n, 0.5);
  classifier.nll_history.push_back(
      negative_log_likelihood(binary_labels, score));

  int boundary_positive = pos_indices.front();
  int boundary_negative = neg_indices.front();
  bool margin_met = false;

  for (int iteration = 0; iteration < config.max_iterations; ++iteration) {
    const ResponseValues responses =
        logitboost_responses(binary_labels, probs);

    std::vector<int> window_ids;
    if (config.window_samples > 0 &&
        config.window_samples < static_cast<int>(grid.size())) {
      window_ids = rng.sample_indices(static_cast<int>(grid.size()),
                                      config.window_samples);
    } else {
      window_ids.resize(grid.size());
      std::iota(window_ids.begin(), window_ids.end(), 0);
    }

    std::vector<Candidate> candidates(window_ids.size());
    parallel_for(
        static_cast<int>(window_ids.size()), threads, [&](int slot) {
          Candidate& out = candidates[static_cast<std::size_t>(slot)];
          try {
            const int wid = window_ids[static_cast<std::size_t>(slot)];
            auto data = cache.get(wid);
            Matrix design;
            switch (config.mapper) {
              case MapperKind::wrlpp: {
                const double sigma =
                    config.sigma > 0.0 ? config.sigma : data->median_sigma;
                WrlppModel model = fit_wrlpp_precomputed(
                    data->descriptors, data->distances, binary_labels,
                    responses.w, k_eff, r_eff, sigma);
                const Matrix kernel =
                    kernel_from_distances(data->distances, sigma);
                // per-column products mirror project() exactly, so
                // training scores reproduce bit-for-bit at eval time
                design.resize(n, model.projection.cols());
                for (int j = 0; j < n; ++j) {
                  const Vector column = kernel.col(j);
                  design.row(j) =
                      (model.projection.transpose() * column).transpose();
                }
                out.sigma = sigma;
                out.projection = std::move(model.projection);
                break;
              }
              case MapperKind::upper_triangle:
              case MapperKind::identity_tangent:
                design = data->static_design;
                break;
              case MapperKind::karcher_tangent: {
                std::vector<double> weights(
                    responses.w.data(),
                    responses.w.data() + responses.w.size());
                out.karcher_base =
                    karcher_mean(data->descriptors, weights).mean;
                const int dim =
                    static_cast<int>(data->descriptors[0].rows());
                design.resize(n, dim * (dim + 1) / 2);
                for (int j = 0; j < n; ++j) {
                  design.row(j) =
                      vectorize_upper_triangle(
                          log_map(out.karcher_base,
                                  data->descriptors
                                      [static_cast<std::size_t>(j)]))
                          .transpose();
                }
                break;
              }
            }
            out.coeffs = fit_weak_learner(design, responses.z, responses.w);
            out.updated_scores = score;
            for (int j = 0; j < n; ++j) {
              out.updated_scores[j] +=
                  0.5 * evaluate_weak_learner(out.coeffs,
                                              design.row(j).transpose());
            }
            out.nll =
                negative_log_likelihood(binary_labels, out.updated_scores);
            out.data = std::move(data);
            out.ok = true;
          } catch (...) {
            out.error = std::current_exception();
          }
        });

    // deterministic reduction: smallest nll, then lowest window index;
    // any window failure surfaces instead of being skipped
    int best_slot = -1;
    for (int slot = 0; slot < static_cast<int>(candidates.size()); ++slot) {
      const Candidate& c = candidates[static_cast<std::size_t>(slot)];
      if (c.error) std::rethrow_exception(c.error);
      if (!c.ok) continue;
      if (best_slot < 0 ||
          c.nll < candidates[static_cast<std::size_t>(best_slot)].nll) {
        best_slot = slot;
      }
    }
    if (best_slot < 0) {
      throw EigenFailureError("train_binary: no window produced a learner");
    }

    const Candidate& best = candidates[static_cast<std::size_t>(best_slot)];
    const int best_window = window_ids[static_cast<std::size_t>(best_slot)];

    WeakLearner learner;
    learner.window = grid[static_cast<std::size_t>(best_window)];
    learner.mapper = config.mapper;
    learner.coeffs = best.coeffs;
    if (config.mapper == MapperKind::wrlpp) {
      learner.wrlpp.sigma = best.sigma;
      learner.wrlpp.train_points = best.data->descriptors;
      learner.wrlpp.projection = best.projection;
    } else if (config.mapper == MapperKind::karcher_tangent) {
      learner.karcher_base = best.karcher_base;
    }

    score = best.updated_scores;
    for (int j = 0; j < n; ++j) probs[j] = prob_from_score(score[j]);
    classifier.learners.push_back(std::move(learner));
    classifier.nll_history.push_back(
        negative_log_likelihood(binary_labels, score));
    const std::size_t h = classifier.nll_history.size();
    if (classifier.nll_history[h - 1] >
        classifier.nll_history[h - 2] + 1e-6) {
      classifier.nll_violation = true;
    }

    // boundary samples in descending probability; ties keep index order
    auto sorted_desc = [&](const std::vector<int>& indices) {
      std::vector<int> out = indices;
      std::stable_sort(out.begin(), out.end(), [&](int a, int b) {
        return probs[a] > probs[b];
      });
      return out;
    };
    const std::vector<int> pos_sorted = sorted_desc(pos_indices);
    const std::vector<int> neg_sorted = sorted_desc(neg_indices);
    // last accepted positive: detection_rate of the positives sit above
    // it; last rejected negative: rejection_rate of the negatives sit
    // below it
    const int vp =
        pos_sorted[static_cast<std::size_t>(
            boundary_rank(config.detection_rate, n_pos) - 1)];
    const int vn =
        neg_sorted[static_cast<std::size_t>(
            n_neg - boundary_rank(config.rejection_rate, n_neg))];
    boundary_positive = vp;
    boundary_negative = vn;

    if (probs[vp] - probs[vn] >= config.margin) {
      margin_met = true;
      break;
    }
  }

  // the margin leaves a corridor [F(V_n), F(V_p)] of thresholds that
  // realize the detection and rejection rates on the training set; the
  // midpoint keeps held-out samples between the saturated training
  // scores on the correct side of the decision
  classifier.threshold =
      0.5 * (score[boundary_positive] + score[boundary_negative]);
  classifier.no_separation = !margin_met;
  return classifier;
}

double binary_raw_score(const BinaryClassifier& classifier,
                        const DescriptorSource& source) {
  double sum = 0.0;
  for (const WeakLearner& learner : classifier.learners) {
    sum += 0.5 * learner.respond(source.descriptor(learner.window));
  }
  return sum;
}

double eval_binary(const BinaryClassifier& classifier,
                   const DescriptorSource& source) {
  if (classifier.learners.empty()) {
    throw ConfigError("eval_binary: classifier has no learners");
  }
  return binary_raw_score(classifier, source) - classifier.threshold;
}

MulticlassModel train_multiclass(const SourceProvider& provider,
                                 const std::vector<int>& labels,
                                 const std::vector<std::string>& label_names,
                                 const Dims& dims, const BoostConfig& config) {
  config.validate();
  const int n_classes = static_cast<int>(label_names.size());
  if (n_classes < 2) {
    throw ClassTooSmallError("training needs at least two classes");
  }

  MulticlassModel model;
  model.labels = label_names;
  model.dims = dims;
  model.config = config;

  const std::vector<Window> grid =
      enumerate_windows(dims, config.min_frac, config.step_frac);

  int pair_index = 0;
  for (int a = 0; a < n_classes; ++a) {
    for (int b = a + 1; b < n_classes; ++b, ++pair_index) {
      std::vector<std::shared_ptr<const DescriptorSource>> holders;
      std::vector<const DescriptorSource*> pair_sources;
      std::vector<int> pair_labels;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != a && labels[i] != b) continue;
        auto source = provider(static_cast<int>(i));
        if (!(source->dims() == dims)) {
          throw InconsistentDimsError(
              "training sample dimensions differ from the model grid");
        }
        pair_sources.push_back(source.get());
        holders.push_back(std::move(source));
        pair_labels.push_back(labels[i] == a ? 1 : 0);  // a is positive
      }
      model.classifiers.push_back(train_binary(
          pair_sources, pair_labels, grid, config, a, b,
          derive_seed(config.seed, static_cast<std::uint64_t>(pair_index))));
    }
  }
  return model;
}

std::vector<double> binary_scores(const MulticlassModel& model,
                                  const DescriptorSource& source) {
  std::vector<double> scores;
  scores.reserve(model.classifiers.size());
  for (const BinaryClassifier& classifier : model.classifiers) {
    scores.push_back(eval_binary(classifier, source));
  }
  return scores;
}

int predict(const MulticlassModel& model, const DescriptorSource& source) {
  const std::vector<double> scores = binary_scores(model, source);

  // a single pair reduces to the binary decision: strictly positive
  // accepts the positive class, anything else (including a boundary
  // sample sitting exactly on the threshold) stays negative
  if (model.classifiers.size() == 1) {
    const BinaryClassifier& classifier = model.classifiers[0];
    const int negative_label = classifier.positive_label == classifier.label_a
                                   ? classifier.label_b
                                   : classifier.label_a;
    return scores[0] > 0.0 ? classifier.positive_label : negative_label;
  }

  std::vector<double> confidence(model.labels.size(), 0.0);
  for (std::size_t i = 0; i < model.classifiers.size(); ++i) {
    const BinaryClassifier& classifier = model.classifiers[i];
    const double score = scores[i];
    const int negative_label = classifier.positive_label == classifier.label_a
                                   ? classifier.label_b
                                   : classifier.label_a;
    const int voted = score > 0.0 ? classifier.positive_label
                                  : negative_label;
    confidence[static_cast<std::size_t>(voted)] += std::abs(score);
  }
  int best = 0;
  for (int c = 1; c < static_cast<int>(confidence.size()); ++c) {
    if (confidence[static_cast<std::size_t>(c)] >
        confidence[static_cast<std::size_t>(best)]) {
      best = c;
    }
  }
  return best;  // ties keep the lowest class id
}

std::vector<DetPoint> det_curve(const std::vector<double>& positive_scores,
                                const std::vector<double>& negative_scores,
                                int n_points) {
  if (positive_scores.empty() || negative_scores.empty()) {
    throw ConfigError("det_curve: both classes need scores");
  }
  if (n_points < 2) throw ConfigError("det_curve: need at least 2 points");

  double lo = positive_scores[0];
  double hi = positive_scores[0];
  for (double s : positive_scores) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  for (double s : negative_scores) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  const double pad = std::max(1e-9, 1e-6 * (hi - lo));
  lo -= pad;
  hi += pad;

  std::vector<DetPoint> curve(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) {
    const double tau = lo + (hi - lo) * i / (n_points - 1);
    int fp = 0;
    for (double s : negative_scores) fp += s > tau ? 1 : 0;
    int miss = 0;
    for (double s : positive_scores) miss += s <= tau ? 1 : 0;
    curve[static_cast<std::size_t>(i)] = {
        tau, static_cast<double>(fp) / negative_scores.size(),
        static_cast<double>(miss) / positive_scores.size()};
  }
  return curve;
}

}  // namespace cov3d
