#pragma once

#include "cov3d/descriptor.hpp"
#include "cov3d/types.hpp"
#include "cov3d/wrlpp.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace cov3d {

// LogitBoost working-response safeguards.
inline constexpr double kResponseClamp = 4.0;
inline constexpr double kWeightFloor = 1e-6;
inline constexpr double kProbabilityClamp = 1e-12;

/// Manifold-to-Euclidean mapping used by the weak learners.
enum class MapperKind {
  wrlpp,            // weighted Riemannian locality preserving projection
  upper_triangle,   // no mapping: vectorized upper triangle
  identity_tangent, // tangent space at the identity
  karcher_tangent,  // tangent space at the weighted Karcher mean
};

std::string mapper_kind_name(MapperKind kind);
MapperKind mapper_kind_from_name(const std::string& name);

struct BoostConfig {
  double detection_rate = 0.95;
  double rejection_rate = 0.95;
  double margin = 0.5;
  int max_iterations = 20;
  int knn = 5;
  int projection_dim = 10;   // clamped to N-1 at fit time
  double min_frac = 0.125;
  double step_frac = 0.125;
  int window_samples = 0;    // windows searched per iteration, 0 = all
  MapperKind mapper = MapperKind::wrlpp;
  double sigma = 0.0;        // 0 = median bandwidth heuristic
  std::uint64_t seed = 1;
  int threads = 0;           // 0 = hardware concurrency

  void validate() const;  // throws ConfigError
};

/// Newton-step responses and weights for binary labels y in {0,1} and
/// probabilities p in (0,1): w = p(1-p) floored, z = (y-p)/(p(1-p))
/// clamped.
struct ResponseValues {
  Vector z;
  Vector w;
};
ResponseValues logitboost_responses(const std::vector<int>& binary_labels,
                                    const Vector& probs);

/// Weighted least squares of z on [1, x] rows. Returns
/// [intercept, slopes...]. Singular normal equations get a ridge of
/// 1e-8 * trace on the slope block, which collapses degenerate designs
/// onto the intercept.
Vector fit_weak_learner(const Matrix& inputs, const Vector& z,
                        const Vector& w);

inline double evaluate_weak_learner(const Vector& coeffs, const Vector& x) {
  return coeffs[0] + coeffs.tail(coeffs.size() - 1).dot(x);
}

struct WeakLearner {
  Window window;
  MapperKind mapper = MapperKind::wrlpp;
  WrlppModel wrlpp;     // mapper == wrlpp
  Matrix karcher_base;  // mapper == karcher_tangent
  Vector coeffs;        // weighted regression, [intercept, slopes...]

  /// Mapped Euclidean representation of a descriptor.
  Vector map(const Matrix& descriptor) const;
  /// Regression response for a descriptor.
  double respond(const Matrix& descriptor) const;
};

struct BinaryClassifier {
  int label_a = 0;
  int label_b = 0;
  int positive_label = 0;
  double threshold = 0.0;
  bool no_separation = false;
  std::vector<WeakLearner> learners;
  // negative binomial log-likelihood: the pre-boosting value followed
  // by one entry per iteration
  std::vector<double> nll_history;
  bool nll_violation = false;  // an iteration increased the nll
};

/// Additive score F(V) = 1/2 sum_m g_m(map_m(descriptor)), before
/// thresholding.
double binary_raw_score(const BinaryClassifier& classifier,
                        const DescriptorSource& source);

/// binary_raw_score minus the trained threshold; positive means the
/// positive class.
double eval_binary(const BinaryClassifier& classifier,
                   const DescriptorSource& source);

/// One-vs-one LogitBoost with per-iteration manifold mapping over a
/// shared window grid. binary_labels holds 1 for the positive class.
/// Both classes need at least two samples (PairTooSmallError).
BinaryClassifier train_binary(
    const std::vector<const DescriptorSource*>& sources,
    const std::vector<int>& binary_labels, const std::vector<Window>& grid,
    const BoostConfig& config, int label_a, int label_b,
    std::uint64_t seed);

struct MulticlassModel {
  std::vector<std::string> labels;  // sorted; class id = position
  Dims dims;
  BoostConfig config;
  std::vector<BinaryClassifier> classifiers;  // one per unordered pair
};

/// Produces the descriptor source of training sample i. Sources may be
/// cached between calls; pair training holds them only while needed.
using SourceProvider =
    std::function<std::shared_ptr<const DescriptorSource>(int)>;

/// Trains one binary classifier per unordered label pair. The
/// lexicographically smaller label of each pair is the positive class.
MulticlassModel train_multiclass(const SourceProvider& provider,
                                 const std::vector<int>& labels,
                                 const std::vector<std::string>& label_names,
                                 const Dims& dims, const BoostConfig& config);

/// Scores of every pair classifier, in model order.
std::vector<double> binary_scores(const MulticlassModel& model,
                                  const DescriptorSource& source);

/// Voted class id: each classifier votes for one side of its pair with
/// confidence |score|; the class with the largest confidence sum wins,
/// ties go to the lowest class id. A two-class model reduces to the
/// single binary decision (positive iff score > 0).
int predict(const MulticlassModel& model, const DescriptorSource& source);

struct DetPoint {
  double threshold = 0.0;
  double fp_rate = 0.0;
  double miss_rate = 0.0;
};

/// Detection error trade-off curve from raw scores of both classes:
/// n_points thresholds equally spaced across the score range (slightly
/// widened), sorted ascending by threshold.
std::vector<DetPoint> det_curve(const std::vector<double>& positive_scores,
                                const std::vector<double>& negative_scores,
                                int n_points);

}  // namespace cov3d
