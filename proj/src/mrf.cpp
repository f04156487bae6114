#include "attrprop/mrf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "attrprop/error.hpp"
#include "attrprop/parallel.hpp"

namespace attrprop {

namespace {

constexpr Scalar kLog2Pi = 1.8378770664093454836;

Scalar diag_log_density(const Eigen::Ref<const Vector>& x, const Vector& mu, const Vector& var,
                        Scalar log_norm) {
  const Vector diff = x - mu;
  return log_norm - Scalar(0.5) * (diff.array().square() / var.array()).sum();
}

Scalar full_log_density(const Eigen::Ref<const Vector>& x, const Vector& mu, const Matrix& chol,
                        Scalar log_norm) {
  // Solve L z = (x - mu); the quadratic form is ||z||^2.
  const Vector z = chol.template triangularView<Eigen::Lower>().solve(x - mu);
  return log_norm - Scalar(0.5) * z.squaredNorm();
}

}  // namespace

Scalar GaussianParams::log_density(const Eigen::Ref<const Vector>& x, int cls) const {
  if (full_cov) {
    return cls == 1 ? full_log_density(x, mu1, chol1, full_log_norm1)
                    : full_log_density(x, mu0, chol0, full_log_norm0);
  }
  return cls == 1 ? diag_log_density(x, mu1, var1, log_norm1)
                  : diag_log_density(x, mu0, var0, log_norm0);
}

GaussianParams em_update(const Eigen::Ref<const Matrix>& X,
                         const std::vector<std::uint8_t>& labels, const EmOptions& opts) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  long n0 = 0, n1 = 0;
  for (int i = 0; i < n; ++i) {
    (labels[static_cast<std::size_t>(i)] ? n1 : n0) += 1;
  }
  if (n0 == 0 || n1 == 0) {
    throw_error(ErrorCode::empty_class,
                "em_update needs both classes, got " + std::to_string(n0) + " / " +
                    std::to_string(n1));
  }

  GaussianParams params;
  params.mu0 = Vector::Zero(d);
  params.mu1 = Vector::Zero(d);
  for (int i = 0; i < n; ++i) {
    (labels[static_cast<std::size_t>(i)] ? params.mu1 : params.mu0) += X.row(i).transpose();
  }
  params.mu0 /= static_cast<Scalar>(n0);
  params.mu1 /= static_cast<Scalar>(n1);

  params.var0 = Vector::Zero(d);
  params.var1 = Vector::Zero(d);
  for (int i = 0; i < n; ++i) {
    if (labels[static_cast<std::size_t>(i)]) {
      params.var1.array() += (X.row(i).transpose() - params.mu1).array().square();
    } else {
      params.var0.array() += (X.row(i).transpose() - params.mu0).array().square();
    }
  }
  params.var0 = (params.var0 / static_cast<Scalar>(n0)).cwiseMax(opts.var_floor);
  params.var1 = (params.var1 / static_cast<Scalar>(n1)).cwiseMax(opts.var_floor);
  params.log_norm0 =
      -Scalar(0.5) * (static_cast<Scalar>(d) * kLog2Pi + params.var0.array().log().sum());
  params.log_norm1 =
      -Scalar(0.5) * (static_cast<Scalar>(d) * kLog2Pi + params.var1.array().log().sum());

  if (opts.full_cov) {
    params.full_cov = true;
    params.cov0 = Matrix::Zero(d, d);
    params.cov1 = Matrix::Zero(d, d);
    for (int i = 0; i < n; ++i) {
      if (labels[static_cast<std::size_t>(i)]) {
        const Vector diff = X.row(i).transpose() - params.mu1;
        params.cov1.noalias() += diff * diff.transpose();
      } else {
        const Vector diff = X.row(i).transpose() - params.mu0;
        params.cov0.noalias() += diff * diff.transpose();
      }
    }
    params.cov0 /= static_cast<Scalar>(n0);
    params.cov1 /= static_cast<Scalar>(n1);
    const Matrix reg0 = params.cov0 + opts.ridge * Matrix::Identity(d, d);
    const Matrix reg1 = params.cov1 + opts.ridge * Matrix::Identity(d, d);
    Eigen::LLT<Matrix> llt0(reg0);
    Eigen::LLT<Matrix> llt1(reg1);
    if (llt0.info() != Eigen::Success || llt1.info() != Eigen::Success) {
      throw_error(ErrorCode::empty_class, "covariance factorization failed despite ridge");
    }
    params.chol0 = llt0.matrixL();
    params.chol1 = llt1.matrixL();
    params.full_log_norm0 = -Scalar(0.5) * static_cast<Scalar>(d) * kLog2Pi -
                            params.chol0.diagonal().array().log().sum();
    params.full_log_norm1 = -Scalar(0.5) * static_cast<Scalar>(d) * kLog2Pi -
                            params.chol1.diagonal().array().log().sum();
  }
  return params;
}

Scalar unary_log(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& q, int cls,
                 const GaussianParams& params) {
  Scalar total = params.log_density(x, cls);
  for (Eigen::Index a = 0; a < q.size(); ++a) {
    total += cls == 1 ? log_sigmoid(q[a]) : log_one_minus_sigmoid(q[a]);
  }
  return total;
}

std::vector<std::uint8_t> init_knn(const Eigen::Ref<const Matrix>& X,
                                   const std::vector<TriLabel>& labels, int k) {
  const int n = static_cast<int>(X.rows());
  std::vector<int> labeled;
  long positives = 0, negatives = 0;
  for (int i = 0; i < n; ++i) {
    const TriLabel l = labels[static_cast<std::size_t>(i)];
    if (is_annotated(l)) {
      labeled.push_back(i);
      (l == TriLabel::Positive ? positives : negatives) += 1;
    }
  }
  if (labeled.empty()) {
    throw_error(ErrorCode::no_labeled_data, "init_knn requires at least one labeled node");
  }
  // Majority ties break toward the globally more frequent class, then 1.
  const std::uint8_t tie_label = positives >= negatives ? 1 : 0;
  const int use_k = std::min<int>(k, static_cast<int>(labeled.size()));

  std::vector<std::uint8_t> out(static_cast<std::size_t>(n), 0);
  std::vector<std::pair<Scalar, int>> order;
  for (int i = 0; i < n; ++i) {
    const TriLabel l = labels[static_cast<std::size_t>(i)];
    if (is_annotated(l)) {
      out[static_cast<std::size_t>(i)] = l == TriLabel::Positive ? 1 : 0;
      continue;
    }
    order.clear();
    for (int j : labeled) {
      order.emplace_back((X.row(i) - X.row(j)).squaredNorm(), j);
    }
    std::partial_sort(order.begin(), order.begin() + use_k, order.end());
    int votes1 = 0;
    for (int r = 0; r < use_k; ++r) {
      if (labels[static_cast<std::size_t>(order[static_cast<std::size_t>(r)].second)] ==
          TriLabel::Positive) {
        ++votes1;
      }
    }
    const int votes0 = use_k - votes1;
    if (votes1 > votes0) {
      out[static_cast<std::size_t>(i)] = 1;
    } else if (votes0 > votes1) {
      out[static_cast<std::size_t>(i)] = 0;
    } else {
      out[static_cast<std::size_t>(i)] = tie_label;
    }
  }
  return out;
}

namespace {

Scalar posterior_from_scores(Scalar s0, Scalar s1) { return sigmoid(s1 - s0); }

// One synchronous sweep: posteriors for all unclamped nodes from the given
// unary log-potentials and the labels snapshot.
void sweep_posteriors(const Eigen::Ref<const Matrix>& unary, const AffinityGraph& graph,
                      const std::vector<std::uint8_t>& labels,
                      const std::vector<std::uint8_t>& clamped, Vector& posterior, int threads) {
  const int n = static_cast<int>(unary.rows());
  parallel_for(n, threads, [&](int i) {
    if (clamped[static_cast<std::size_t>(i)]) {
      posterior[i] = labels[static_cast<std::size_t>(i)] ? 1 : 0;
      return;
    }
    Scalar s0 = unary(i, 0);
    Scalar s1 = unary(i, 1);
    for (const auto& [j, v] : graph.adjacency[static_cast<std::size_t>(i)]) {
      const int yj = labels[static_cast<std::size_t>(j)];
      s0 += pairwise_log(v, 0, yj);
      s1 += pairwise_log(v, 1, yj);
    }
    posterior[i] = posterior_from_scores(s0, s1);
  });
}

// Serial assignment pass; the single RNG stream keeps stochastic draws
// independent of the thread count.
void assign_labels(const Vector& posterior, const std::vector<std::uint8_t>& clamped,
                   bool stochastic, std::mt19937_64& rng, std::vector<std::uint8_t>& labels) {
  std::uniform_real_distribution<Scalar> uniform(0, 1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (clamped[i]) {
      continue;
    }
    if (stochastic) {
      labels[i] = uniform(rng) < posterior[static_cast<Eigen::Index>(i)] ? 1 : 0;
    } else {
      labels[i] = posterior[static_cast<Eigen::Index>(i)] >= Scalar(0.5) ? 1 : 0;
    }
  }
}

Scalar max_unclamped_change(const Vector& now, const Vector& before,
                            const std::vector<std::uint8_t>& clamped) {
  Scalar change = 0;
  for (Eigen::Index i = 0; i < now.size(); ++i) {
    if (!clamped[static_cast<std::size_t>(i)]) {
      change = std::max(change, std::abs(now[i] - before[i]));
    }
  }
  return change;
}

}  // namespace

Scalar mean_field_posterior(const Eigen::Ref<const Matrix>& X, int i,
                            const PropagationState& state, const AffinityGraph& graph,
                            const Eigen::Ref<const Vector>& q_i) {
  Scalar s0 = unary_log(X.row(i).transpose(), q_i, 0, state.params);
  Scalar s1 = unary_log(X.row(i).transpose(), q_i, 1, state.params);
  for (const auto& [j, v] : graph.adjacency[static_cast<std::size_t>(i)]) {
    const int yj = state.labels[static_cast<std::size_t>(j)];
    s0 += pairwise_log(v, 0, yj);
    s1 += pairwise_log(v, 1, yj);
  }
  return posterior_from_scores(s0, s1);
}

MeanFieldResult mean_field_infer(const Eigen::Ref<const Matrix>& unary,
                                 const AffinityGraph& graph,
                                 std::vector<std::uint8_t> initial_labels,
                                 const std::vector<std::uint8_t>& clamped,
                                 const MeanFieldConfig& cfg, std::uint64_t seed) {
  const int n = static_cast<int>(unary.rows());
  MeanFieldResult result;
  result.labels = std::move(initial_labels);
  result.posterior.resize(n);
  Vector previous(n);
  for (int i = 0; i < n; ++i) {
    previous[i] = result.labels[static_cast<std::size_t>(i)] ? 1 : 0;
  }
  std::mt19937_64 rng(mix64(seed));
  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    result.sweeps = sweep;
    sweep_posteriors(unary, graph, result.labels, clamped, result.posterior, cfg.threads);
    assign_labels(result.posterior, clamped, cfg.stochastic, rng, result.labels);
    const Scalar change = max_unclamped_change(result.posterior, previous, clamped);
    previous = result.posterior;
    if (change < cfg.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

PropagateResult propagate_attribute(const Eigen::Ref<const Matrix>& X,
                                    const AffinityGraph& graph,
                                    const Eigen::Ref<const Matrix>& q,
                                    const std::vector<TriLabel>& labels_in,
                                    const PropagateConfig& cfg, std::uint64_t seed) {
  const int n = static_cast<int>(X.rows());
  if (graph.n != n) {
    throw_error(ErrorCode::dimension_mismatch,
                "graph has " + std::to_string(graph.n) + " nodes for " + std::to_string(n) +
                    " samples");
  }
  if (q.rows() != 0 && q.rows() != n) {
    throw_error(ErrorCode::dimension_mismatch, "prior matrix row count mismatch");
  }

  long positives = 0, negatives = 0;
  std::vector<std::uint8_t> clamped(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    const TriLabel l = labels_in[static_cast<std::size_t>(i)];
    if (is_annotated(l)) {
      clamped[static_cast<std::size_t>(i)] = 1;
      (l == TriLabel::Positive ? positives : negatives) += 1;
    }
  }
  if (positives + negatives == 0) {
    throw_error(ErrorCode::no_labeled_data, "propagation requires labeled nodes");
  }
  if (positives == 0 || negatives == 0) {
    throw_error(ErrorCode::empty_class, "propagation requires labeled nodes of both classes");
  }

  PropagateResult result;
  result.labels = init_knn(X, labels_in, cfg.k_init);
  result.posterior.resize(n);

  GaussianParams params = em_update(X, result.labels, cfg.em);
  const Vector empty_q(0);

  Vector previous(n);
  for (int i = 0; i < n; ++i) {
    previous[i] = result.labels[static_cast<std::size_t>(i)] ? 1 : 0;
  }

  Matrix unary(n, 2);
  std::mt19937_64 rng(mix64(seed));
  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    result.sweeps = sweep;
    parallel_for(n, cfg.threads, [&](int i) {
      if (q.rows() == n) {
        unary(i, 0) = unary_log(X.row(i).transpose(), q.row(i).transpose(), 0, params);
        unary(i, 1) = unary_log(X.row(i).transpose(), q.row(i).transpose(), 1, params);
      } else {
        unary(i, 0) = unary_log(X.row(i).transpose(), empty_q, 0, params);
        unary(i, 1) = unary_log(X.row(i).transpose(), empty_q, 1, params);
      }
    });
    sweep_posteriors(unary, graph, result.labels, clamped, result.posterior, cfg.threads);
    assign_labels(result.posterior, clamped, cfg.stochastic, rng, result.labels);
    params = em_update(X, result.labels, cfg.em);
    const Scalar change = max_unclamped_change(result.posterior, previous, clamped);
    previous = result.posterior;
    if (change < cfg.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

Stage2Result stage2_loop(const Corpus& corpus, const ClassifierBank& initial_bank,
                         const AffinityGraph& graph, const Stage2Config& cfg,
                         std::uint64_t seed, const Stage2Observer& observer) {
  const int n = corpus.size();
  const int k = corpus.attribute_count();
  const Matrix X = corpus.feature_matrix();

  Stage2Result result;
  result.bank = initial_bank;
  result.labels.assign(static_cast<std::size_t>(n),
                       std::vector<TriLabel>(static_cast<std::size_t>(k), TriLabel::Missing));
  result.pseudo.assign(static_cast<std::size_t>(n),
                       std::vector<std::uint8_t>(static_cast<std::size_t>(k), 0));
  result.posteriors =
      Matrix::Constant(n, k, std::numeric_limits<Scalar>::quiet_NaN());
  for (int i = 0; i < n; ++i) {
    result.labels[static_cast<std::size_t>(i)] = corpus.samples()[static_cast<std::size_t>(i)].labels;
  }

  std::vector<std::vector<TriLabel>> original_columns(static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a) {
    original_columns[static_cast<std::size_t>(a)] = corpus.labels_for(a);
  }

  std::vector<std::vector<std::uint8_t>> previous_pseudo(
      static_cast<std::size_t>(k), std::vector<std::uint8_t>(static_cast<std::size_t>(n), 0));

  for (int m = 1; m <= cfg.M; ++m) {
    Stage2IterationStats stats;
    stats.m = m;
    stats.sweeps.assign(static_cast<std::size_t>(k), 0);
    stats.converged.assign(static_cast<std::size_t>(k), 0);

    // Prior from the current bank; the sign of each entry still comes from
    // the original annotations, never from pseudo labels.
    CooccurrenceMatrix r;
    if (k >= 2) {
      r = cooccurrence(result.bank);
    }

    std::vector<PropagateResult> per_attr(static_cast<std::size_t>(k));
    const int outer_threads = k > 1 ? cfg.threads : 1;
    const int inner_threads = k > 1 ? 1 : cfg.threads;
    PropagateConfig prop = cfg.propagate;
    prop.threads = inner_threads;
    parallel_for(k, outer_threads, [&](int a) {
      Matrix q(n, std::max(0, k - 1));
      for (int i = 0; i < n; ++i) {
        if (k >= 2) {
          q.row(i) = prior_q(r, corpus.samples()[static_cast<std::size_t>(i)].labels, a)
                         .transpose();
        }
      }
      per_attr[static_cast<std::size_t>(a)] = propagate_attribute(
          X, graph, q, original_columns[static_cast<std::size_t>(a)], prop,
          derive_seed(seed, static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(a)));
    });

    for (int a = 0; a < k; ++a) {
      const PropagateResult& res = per_attr[static_cast<std::size_t>(a)];
      stats.sweeps[static_cast<std::size_t>(a)] = res.sweeps;
      stats.converged[static_cast<std::size_t>(a)] = res.converged ? 1 : 0;
      for (int i = 0; i < n; ++i) {
        const bool annotated =
            is_annotated(original_columns[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)]);
        result.posteriors(i, a) = res.posterior[i];
        if (annotated) {
          continue;
        }
        const std::uint8_t y = res.labels[static_cast<std::size_t>(i)];
        result.labels[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] =
            y ? TriLabel::Positive : TriLabel::Negative;
        result.pseudo[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] = 1;
        stats.pseudo_labels += 1;
        if (m > 1 && previous_pseudo[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] != y) {
          stats.label_changes += 1;
        }
        previous_pseudo[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] = y;
      }
    }

    // Retrain on annotations plus pseudo labels, continuing from the current
    // weights.
    TrainConfig retrain = cfg.retrain;
    retrain.threads = cfg.threads;
    std::vector<std::vector<TriLabel>> completed(static_cast<std::size_t>(k));
    for (int a = 0; a < k; ++a) {
      auto& column = completed[static_cast<std::size_t>(a)];
      column.resize(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        column[static_cast<std::size_t>(i)] =
            result.labels[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
      }
    }
    ClassifierBank refreshed = result.bank;
    parallel_for(k, cfg.threads, [&](int a) {
      refreshed.models[static_cast<std::size_t>(a)] = train_logistic(
          X, completed[static_cast<std::size_t>(a)], retrain,
          derive_seed(retrain.seed, static_cast<std::uint64_t>(m),
                      static_cast<std::uint64_t>(a)),
          &result.bank.models[static_cast<std::size_t>(a)]);
    });
    result.bank = std::move(refreshed);

    result.iterations.push_back(std::move(stats));
    if (observer) {
      observer(m, result.bank, result.labels);
    }
  }
  return result;
}

}  // namespace attrprop
