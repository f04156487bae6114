// Missing-label inference: mean-field sweeps in an MRF whose unary term is a
// class-conditional Gaussian times a co-occurrence prior and whose pairwise
// term rewards label agreement along affinity edges, alternated with EM
// refits of the Gaussians, and wrapped in the outer loop that re-derives the
// co-occurrence prior and retrains the classifier bank.
#pragma once

#include <functional>
#include <vector>

#include "attrprop/affinity.hpp"
#include "attrprop/classifiers.hpp"
#include "attrprop/data_model.hpp"
#include "attrprop/types.hpp"

namespace attrprop {

// Class-conditional Gaussians. Diagonal covariance by default; the full
// (ridge-regularized) covariance is kept behind a flag because it must be
// inverted even when the sample count is below the feature dimension.
struct GaussianParams {
  Vector mu0, mu1;
  Vector var0, var1;       // per-dimension variances, floored
  Scalar log_norm0 = 0;    // cached -(d/2) log(2 pi) - 0.5 sum log var
  Scalar log_norm1 = 0;
  bool full_cov = false;
  Matrix cov0, cov1;       // populated only when full_cov
  Matrix chol0, chol1;     // lower Cholesky factors of (cov + ridge I)
  Scalar full_log_norm0 = 0, full_log_norm1 = 0;

  Scalar log_density(const Eigen::Ref<const Vector>& x, int cls) const;
};

struct EmOptions {
  bool full_cov = false;
  Scalar ridge = 1e-4;      // added to full covariances before factorization
  Scalar var_floor = 1e-6;  // lower bound on diagonal variances
};

// Class means and population (divide-by-N) variances of the labeled split.
GaussianParams em_update(const Eigen::Ref<const Matrix>& X,
                         const std::vector<std::uint8_t>& labels,
                         const EmOptions& opts = {});

// +v when the labels agree, -v otherwise.
inline Scalar pairwise_log(Scalar v, int yi, int yj) { return yi == yj ? v : -v; }

// log N(x | mu_l, Sigma_l) + sum_{a'} log S_l(q_{a'}) with S_1 = sigmoid and
// S_0 = 1 - sigmoid, all in the log domain. `q` is the packed prior vector
// over the other attributes (may be empty).
Scalar unary_log(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& q, int cls,
                 const GaussianParams& params);

// Majority label of the k nearest labeled nodes; ties break toward the
// globally more frequent labeled class, then toward 1. Annotated nodes keep
// their labels.
std::vector<std::uint8_t> init_knn(const Eigen::Ref<const Matrix>& X,
                                   const std::vector<TriLabel>& labels, int k);

struct PropagationState {
  std::vector<std::uint8_t> labels;     // current y, 0/1
  std::vector<std::uint8_t> annotated;  // 1 = label fixed by an annotation
  Vector posterior;                     // p(y_i = 1)
  GaussianParams params;
  int iteration = 0;
};

// Two-class posterior for node i from the unary term plus the pairwise sum
// over its neighborhood, neighbor labels held fixed at the previous sweep's
// values (state.labels).
Scalar mean_field_posterior(const Eigen::Ref<const Matrix>& X, int i,
                            const PropagationState& state, const AffinityGraph& graph,
                            const Eigen::Ref<const Vector>& q_i);

struct MeanFieldConfig {
  Scalar tol = 1e-4;
  int max_sweeps = 50;
  bool stochastic = false;  // draw labels from the posterior instead of argmax
  int threads = 1;
};

struct MeanFieldResult {
  std::vector<std::uint8_t> labels;
  Vector posterior;
  int sweeps = 0;
  bool converged = false;
};

// Synchronous mean-field sweeps with fixed unary log-potentials (n x 2).
// Clamped nodes never change; used directly for oracle comparisons.
MeanFieldResult mean_field_infer(const Eigen::Ref<const Matrix>& unary,
                                 const AffinityGraph& graph,
                                 std::vector<std::uint8_t> initial_labels,
                                 const std::vector<std::uint8_t>& clamped,
                                 const MeanFieldConfig& cfg, std::uint64_t seed = 0);

struct PropagateConfig {
  int k_init = 10;
  Scalar tol = 1e-4;
  int max_sweeps = 50;
  bool stochastic = true;  // simulate labels from the posterior (argmax when false)
  EmOptions em;
  int threads = 1;
};

struct PropagateResult {
  std::vector<std::uint8_t> labels;  // completed 0/1 labels, annotations preserved
  Vector posterior;                  // p(y_i = 1) from the final sweep
  int sweeps = 0;
  bool converged = false;            // false = sweep budget exhausted (result still valid)
};

// KNN initialization, then alternating (mean-field sweep -> label assignment
// -> EM update) until the max-abs posterior change drops below tol. `q` holds
// one packed prior row per sample (zero columns when there are no other
// attributes).
PropagateResult propagate_attribute(const Eigen::Ref<const Matrix>& X,
                                    const AffinityGraph& graph,
                                    const Eigen::Ref<const Matrix>& q,
                                    const std::vector<TriLabel>& labels_in,
                                    const PropagateConfig& cfg, std::uint64_t seed);

struct Stage2Config {
  int M = 10;
  TrainConfig retrain;      // continues from the current bank each iteration
  PropagateConfig propagate;
  int threads = 1;
};

struct Stage2IterationStats {
  int m = 0;
  std::vector<int> sweeps;               // per attribute
  std::vector<std::uint8_t> converged;   // per attribute
  long pseudo_labels = 0;
  long label_changes = 0;  // pseudo labels that differ from the previous iteration
};

struct Stage2Result {
  // labels[i][a]: original annotation where present, pseudo label otherwise.
  // Remains Missing only when M = 0.
  std::vector<std::vector<TriLabel>> labels;
  std::vector<std::vector<std::uint8_t>> pseudo;  // 1 = imputed
  Matrix posteriors;  // n x K, NaN where never propagated
  ClassifierBank bank;
  std::vector<Stage2IterationStats> iterations;
};

// Observer invoked after each outer iteration with the refreshed bank and the
// current completed labels.
using Stage2Observer =
    std::function<void(int m, const ClassifierBank&, const std::vector<std::vector<TriLabel>>&)>;

// Outer alternating loop: re-derive the co-occurrence prior from the current
// bank, propagate every attribute (restarting from the KNN initialization),
// then retrain the bank on annotations plus pseudo labels.
Stage2Result stage2_loop(const Corpus& corpus, const ClassifierBank& initial_bank,
                         const AffinityGraph& graph, const Stage2Config& cfg,
                         std::uint64_t seed, const Stage2Observer& observer = {});

}  // namespace attrprop
