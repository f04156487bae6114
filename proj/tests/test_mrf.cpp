#include <doctest.h>

#include <cmath>
#include <random>

#include "attrprop/error.hpp"
#include "attrprop/mrf.hpp"
#include "attrprop/oracle.hpp"
#include "attrprop/synth.hpp"
#include "test_support.hpp"

using namespace attrprop;

namespace {

GaussianParams identical_gaussians(int d) {
  std::vector<std::uint8_t> labels = {0, 1, 0, 1};
  Matrix X(4, d);
  X.setZero();
  X.row(0).setConstant(-1);
  X.row(1).setConstant(-1);
  X.row(2).setConstant(1);
  X.row(3).setConstant(1);
  return em_update(X, labels);  // both classes see {-1, 1} per dimension
}

PropagationState make_state(std::vector<std::uint8_t> labels, GaussianParams params) {
  PropagationState state;
  state.labels = std::move(labels);
  state.annotated.assign(state.labels.size(), 0);
  state.posterior = Vector::Zero(static_cast<Eigen::Index>(state.labels.size()));
  state.params = std::move(params);
  return state;
}

}  // namespace

TEST_SUITE("mrf") {

TEST_CASE("init_knn: a single labeled positive floods everything") {
  Matrix X(4, 1);
  X << 0, 1, 2, 3;
  std::vector<TriLabel> labels = {TriLabel::Positive, TriLabel::Missing, TriLabel::Missing,
                                  TriLabel::Missing};
  const auto out = init_knn(X, labels, 3);
  CHECK(out == std::vector<std::uint8_t>{1, 1, 1, 1});
}

TEST_CASE("init_knn: balanced tie initializes to 1") {
  Matrix X(3, 1);
  X << -1, 1, 0;  // node 2 equidistant from one positive and one negative
  std::vector<TriLabel> labels = {TriLabel::Negative, TriLabel::Positive, TriLabel::Missing};
  const auto out = init_knn(X, labels, 2);
  CHECK(out[2] == 1);
}

TEST_CASE("init_knn: separated clusters initialize cluster-pure") {
  std::mt19937_64 rng(3);
  const int per = 20;
  Matrix X(2 * per, 2);
  X.topRows(per) = testing::random_matrix(per, 2, rng);
  X.bottomRows(per) = testing::random_matrix(per, 2, rng).array() + 30.0;
  std::vector<TriLabel> labels(2 * per, TriLabel::Missing);
  labels[0] = TriLabel::Negative;
  labels[per] = TriLabel::Positive;
  const auto out = init_knn(X, labels, 1);
  for (int i = 0; i < per; ++i) {
    CHECK(out[static_cast<std::size_t>(i)] == 0);
  }
  for (int i = per; i < 2 * per; ++i) {
    CHECK(out[static_cast<std::size_t>(i)] == 1);
  }
}

TEST_CASE("init_knn requires labeled data") {
  Matrix X(2, 1);
  X << 0, 1;
  std::vector<TriLabel> labels = {TriLabel::Missing, TriLabel::Missing};
  try {
    init_knn(X, labels, 1);
    FAIL("expected no-labeled-data error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::no_labeled_data);
  }
}

TEST_CASE("unary prior contribution with all-zero priors is |A\\a| log(1/2)") {
  const int d = 2;
  const GaussianParams params = identical_gaussians(d);
  Vector x = Vector::Zero(d);
  const Vector q = Vector::Zero(5);
  const Scalar gauss_only = params.log_density(x, 0);
  CHECK(unary_log(x, q, 0, params) ==
        doctest::Approx(gauss_only + 5 * std::log(0.5)).epsilon(1e-14));
  CHECK(unary_log(x, q, 1, params) == doctest::Approx(unary_log(x, q, 0, params)));
}

TEST_CASE("unary favors the class whose mean is at the sample") {
  Matrix X(4, 1);
  X << 10, 10.5, -10, -10.5;
  std::vector<std::uint8_t> labels = {1, 1, 0, 0};
  const GaussianParams params = em_update(X, labels);
  Vector x(1);
  x << 10.2;
  const Vector q(0);
  CHECK(unary_log(x, q, 1, params) > unary_log(x, q, 0, params));
}

TEST_CASE("sigmoid of the paper's example prior") {
  CHECK(sigmoid(0.3) == doctest::Approx(0.574442516811659).epsilon(1e-12));
}

TEST_CASE("pairwise term is +v on agreement and -v otherwise") {
  CHECK(pairwise_log(0.5, 1, 1) == 0.5);
  CHECK(pairwise_log(0.5, 0, 0) == 0.5);
  CHECK(pairwise_log(0.5, 1, 0) == -0.5);
  CHECK(pairwise_log(0.0, 1, 0) == 0.0);
}

TEST_CASE("isolated node with symmetric evidence sits at 1/2") {
  const GaussianParams params = identical_gaussians(2);
  AffinityGraph g;
  g.n = 1;
  g.adjacency.assign(1, {});
  PropagationState state = make_state({0}, params);
  Matrix X(1, 2);
  X.setZero();
  const Scalar p = mean_field_posterior(X, 0, state, g, Vector::Zero(0));
  CHECK(p == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("strong agreeing neighbors dominate a symmetric unary") {
  const GaussianParams params = identical_gaussians(2);
  const std::tuple<int, int, Scalar> edges[] = {{0, 1, 8.0}, {0, 2, 8.0}};
  const AffinityGraph g = graph_from_edges(3, edges);
  PropagationState state = make_state({0, 1, 1}, params);
  Matrix X = Matrix::Zero(3, 2);
  const Scalar p = mean_field_posterior(X, 0, state, g, Vector::Zero(0));
  CHECK(p > 1 - 1e-10);
}

TEST_CASE("mean-field posterior equals the oracle conditional on 3-node chains") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<Scalar> gauss(0, 1);
  std::uniform_real_distribution<Scalar> uniform(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    TinyMRF m;
    m.unary.resize(3, 2);
    for (int i = 0; i < 3; ++i) {
      m.unary(i, 0) = gauss(rng);
      m.unary(i, 1) = gauss(rng);
    }
    m.edges = {{0, 1, uniform(rng)}, {1, 2, uniform(rng)}};
    const AffinityGraph g = graph_from_edges(3, m.edges);
    std::vector<std::uint8_t> labels = {static_cast<std::uint8_t>(rng() % 2),
                                        static_cast<std::uint8_t>(rng() % 2),
                                        static_cast<std::uint8_t>(rng() % 2)};
    for (int i = 0; i < 3; ++i) {
      // The mean-field route: unary plus the pairwise sum over neighbors.
      Scalar s0 = m.unary(i, 0), s1 = m.unary(i, 1);
      for (const auto& [j, v] : g.adjacency[static_cast<std::size_t>(i)]) {
        s0 += pairwise_log(v, 0, labels[static_cast<std::size_t>(j)]);
        s1 += pairwise_log(v, 1, labels[static_cast<std::size_t>(j)]);
      }
      const Scalar mean_field = sigmoid(s1 - s0);
      CHECK(std::abs(mean_field - exact_conditional(m, i, labels)) < 1e-10);
    }
  }
}

TEST_CASE("em_update reproduces hand-computed moments") {
  Matrix X(3, 1);
  X << 0, 2, 7;
  std::vector<std::uint8_t> labels = {1, 1, 0};
  const GaussianParams params = em_update(X, labels);
  CHECK(params.mu1[0] == doctest::Approx(1.0));
  CHECK(params.var1[0] == doctest::Approx(1.0));  // population variance
  CHECK(params.mu0[0] == doctest::Approx(7.0));
  CHECK(params.var0[0] == doctest::Approx(1e-6));  // floored
}

TEST_CASE("em_update matches an independent recomputation") {
  std::mt19937_64 rng(55);
  const int n = 40, d = 3;
  const Matrix X = testing::random_matrix(n, d, rng);
  std::vector<std::uint8_t> labels(n);
  for (auto& l : labels) {
    l = static_cast<std::uint8_t>(rng() % 2);
  }
  labels[0] = 0;
  labels[1] = 1;
  const GaussianParams params = em_update(X, labels);
  for (int cls = 0; cls < 2; ++cls) {
    for (int j = 0; j < d; ++j) {
      Scalar sum = 0;
      long count = 0;
      for (int i = 0; i < n; ++i) {
        if (labels[static_cast<std::size_t>(i)] == cls) {
          sum += X(i, j);
          ++count;
        }
      }
      const Scalar mean = sum / static_cast<Scalar>(count);
      Scalar ss = 0;
      for (int i = 0; i < n; ++i) {
        if (labels[static_cast<std::size_t>(i)] == cls) {
          ss += (X(i, j) - mean) * (X(i, j) - mean);
        }
      }
      const Scalar var = std::max(1e-6, ss / static_cast<Scalar>(count));
      const Vector& mu = cls ? params.mu1 : params.mu0;
      const Vector& v = cls ? params.var1 : params.var0;
      CHECK(std::abs(mu[j] - mean) < 1e-12);
      CHECK(std::abs(v[j] - var) < 1e-12);
    }
  }
}

TEST_CASE("em_update needs both classes") {
  Matrix X(2, 1);
  X << 0, 1;
  try {
    em_update(X, {1, 1});
    FAIL("expected empty-class error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::empty_class);
  }
}

TEST_CASE("fully annotated corpus propagates to itself in one sweep") {
  std::mt19937_64 rng(9);
  const Matrix X = testing::random_matrix(20, 2, rng);
  const AffinityGraph g = build_graph(X, 4);
  std::vector<TriLabel> labels(20);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = i % 2 ? TriLabel::Positive : TriLabel::Negative;
  }
  PropagateConfig cfg;
  const PropagateResult res = propagate_attribute(X, g, Matrix(0, 0), labels, cfg, 1);
  CHECK(res.converged);
  CHECK(res.sweeps == 1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    CHECK(res.labels[i] == (labels[i] == TriLabel::Positive ? 1 : 0));
  }
}

TEST_CASE("two separated clusters recover hidden labels almost perfectly") {
  SynthConfig synth;
  synth.d = 8;
  synth.n_per_source = 400;
  synth.attributes = 1;
  synth.separation = 6;
  synth.labeled_fraction = 0.1;
  synth.seed = 31;
  const SynthCorpus data = gen_corpus(synth);
  const Matrix X = data.corpus.feature_matrix();
  const AffinityGraph g = build_graph(X, 10);
  PropagateConfig cfg;
  cfg.stochastic = false;
  const PropagateResult res =
      propagate_attribute(X, g, Matrix(0, 0), data.corpus.labels_for(0), cfg, 5);
  long correct = 0;
  for (int i = 0; i < data.corpus.size(); ++i) {
    correct += res.labels[static_cast<std::size_t>(i)] == data.truth[static_cast<std::size_t>(i)][0];
  }
  CHECK(static_cast<Scalar>(correct) / data.corpus.size() >= 0.99);
}

TEST_CASE("deterministic propagation tracks the enumeration oracle on tiny graphs") {
  // Unary gaps dominate sparse sub-unit couplings, as they do when Gaussian
  // log-likelihoods meet degree-normalized affinity weights.
  std::mt19937_64 rng(500);
  std::normal_distribution<Scalar> gauss(0, 2.5);
  std::uniform_real_distribution<Scalar> uniform(0, 1);
  long agree = 0, total = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 6 + static_cast<int>(rng() % 7);
    const Scalar edge_prob = Scalar(1.5) / (n - 1);
    TinyMRF m;
    m.unary.resize(n, 2);
    for (int i = 0; i < n; ++i) {
      m.unary(i, 0) = gauss(rng);
      m.unary(i, 1) = gauss(rng);
    }
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (uniform(rng) < edge_prob) {
          m.edges.emplace_back(i, j, uniform(rng));
        }
      }
    }
    const AffinityGraph g = graph_from_edges(n, m.edges);
    std::vector<std::uint8_t> init(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      init[static_cast<std::size_t>(i)] = m.unary(i, 1) >= m.unary(i, 0) ? 1 : 0;
    }
    MeanFieldConfig cfg;
    const MeanFieldResult res = mean_field_infer(
        m.unary, g, init, std::vector<std::uint8_t>(static_cast<std::size_t>(n), 0), cfg);
    const Vector marginals = exact_marginals(m);
    for (int i = 0; i < n; ++i) {
      agree += res.labels[static_cast<std::size_t>(i)] == (marginals[i] >= 0.5 ? 1 : 0);
      ++total;
    }
  }
  CHECK(static_cast<Scalar>(agree) / static_cast<Scalar>(total) >= 0.95);
}

TEST_CASE("annotated labels survive propagation verbatim") {
  std::mt19937_64 rng(62);
  const Matrix X = testing::random_matrix(60, 3, rng);
  const AffinityGraph g = build_graph(X, 5);
  std::vector<TriLabel> labels(60, TriLabel::Missing);
  for (int i = 0; i < 20; ++i) {
    labels[static_cast<std::size_t>(i)] = i % 2 ? TriLabel::Positive : TriLabel::Negative;
  }
  PropagateConfig cfg;
  const PropagateResult res = propagate_attribute(X, g, Matrix(0, 0), labels, cfg, 7);
  for (int i = 0; i < 20; ++i) {
    CHECK(res.labels[static_cast<std::size_t>(i)] == (i % 2 ? 1 : 0));
  }
}

TEST_CASE("missing attributes leave the posterior unchanged") {
  const GaussianParams params = identical_gaussians(2);
  const std::tuple<int, int, Scalar> edges[] = {{0, 1, 0.7}};
  const AffinityGraph g = graph_from_edges(2, edges);
  PropagationState state = make_state({0, 1}, params);
  Matrix X(2, 2);
  X << 0.3, -0.1, 0.2, 0.4;
  const Scalar without = mean_field_posterior(X, 0, state, g, Vector::Zero(0));
  const Scalar with_missing = mean_field_posterior(X, 0, state, g, Vector::Zero(6));
  CHECK(std::abs(without - with_missing) <= 1e-12);
}

TEST_CASE("posterior normalization and label-flip symmetry") {
  std::mt19937_64 rng(71);
  std::normal_distribution<Scalar> gauss(0, 1);
  std::uniform_real_distribution<Scalar> uniform(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix X(5, 2);
    for (int i = 0; i < 5; ++i) {
      X(i, 0) = gauss(rng);
      X(i, 1) = gauss(rng);
    }
    std::vector<std::uint8_t> labels(5);
    for (auto& l : labels) {
      l = static_cast<std::uint8_t>(rng() % 2);
    }
    labels[0] = 0;
    labels[1] = 1;
    GaussianParams params = em_update(X, labels);
    std::vector<std::tuple<int, int, Scalar>> edges;
    for (int i = 0; i < 5; ++i) {
      for (int j = i + 1; j < 5; ++j) {
        if (uniform(rng) < 0.5) {
          edges.emplace_back(i, j, uniform(rng));
        }
      }
    }
    const AffinityGraph g = graph_from_edges(5, edges);
    Vector q(3);
    q << uniform(rng) - 0.5, uniform(rng) - 0.5, uniform(rng) - 0.5;

    PropagationState state = make_state(labels, params);

    // Flip the whole problem: swap classes, negate priors.
    GaussianParams flipped_params = params;
    std::swap(flipped_params.mu0, flipped_params.mu1);
    std::swap(flipped_params.var0, flipped_params.var1);
    std::swap(flipped_params.log_norm0, flipped_params.log_norm1);
    std::vector<std::uint8_t> flipped_labels = labels;
    for (auto& l : flipped_labels) {
      l = static_cast<std::uint8_t>(1 - l);
    }
    PropagationState flipped = make_state(flipped_labels, flipped_params);

    for (int i = 0; i < 5; ++i) {
      const Scalar p = mean_field_posterior(X, i, state, g, q);
      const Scalar p_flip = mean_field_posterior(X, i, flipped, g, Vector(-q));
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      CHECK(std::abs(p + (1 - p) - 1.0) <= 1e-12);   // normalization
      CHECK(std::abs(p_flip - (1 - p)) <= 1e-12);    // symmetry
    }
  }
}

TEST_CASE("shifting all unary log-potentials leaves posteriors unchanged") {
  std::mt19937_64 rng(83);
  std::normal_distribution<Scalar> gauss(0, 1);
  TinyMRF m;
  const int n = 6;
  m.unary.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    m.unary(i, 0) = gauss(rng);
    m.unary(i, 1) = gauss(rng);
  }
  m.edges = {{0, 1, 0.4}, {1, 2, 0.2}, {3, 4, 0.9}, {4, 5, 0.1}, {0, 5, 0.6}};
  const AffinityGraph g = graph_from_edges(n, m.edges);
  std::vector<std::uint8_t> init(n, 0);
  MeanFieldConfig cfg;
  const std::vector<std::uint8_t> clamped(n, 0);
  const MeanFieldResult base = mean_field_infer(m.unary, g, init, clamped, cfg);
  const Matrix shifted = m.unary.array() + 37.0;  // exp-domain scaling by e^37
  const MeanFieldResult moved = mean_field_infer(shifted, g, init, clamped, cfg);
  CHECK((base.posterior - moved.posterior).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(base.labels == moved.labels);
}

TEST_CASE("stochastic propagation is reproducible for a fixed seed") {
  std::mt19937_64 rng(90);
  const Matrix X = testing::random_matrix(50, 3, rng);
  const AffinityGraph g = build_graph(X, 5);
  std::vector<TriLabel> labels(50, TriLabel::Missing);
  for (int i = 0; i < 12; ++i) {
    labels[static_cast<std::size_t>(i)] = i % 2 ? TriLabel::Positive : TriLabel::Negative;
  }
  PropagateConfig cfg;
  cfg.stochastic = true;
  const PropagateResult a = propagate_attribute(X, g, Matrix(0, 0), labels, cfg, 17);
  const PropagateResult b = propagate_attribute(X, g, Matrix(0, 0), labels, cfg, 17);
  CHECK(a.labels == b.labels);
  CHECK((a.posterior - b.posterior).cwiseAbs().maxCoeff() == 0.0);
  PropagateConfig threaded = cfg;
  threaded.threads = 4;
  const PropagateResult c = propagate_attribute(X, g, Matrix(0, 0), labels, threaded, 17);
  CHECK(a.labels == c.labels);
  CHECK((a.posterior - c.posterior).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("stage2 with M=0 returns the inputs untouched") {
  SynthConfig synth;
  synth.d = 4;
  synth.n_per_source = 40;
  synth.sources = 2;
  synth.attributes = 2;
  synth.labeled_fraction = 0.6;
  synth.seed = 3;
  const SynthCorpus data = gen_corpus(synth);
  TrainConfig tc;
  tc.epochs = 3;
  tc.seed = 1;
  const ClassifierBank bank = train_bank(data.corpus, tc);
  const AffinityGraph g = build_graph(data.corpus.feature_matrix(), 6);
  Stage2Config cfg;
  cfg.M = 0;
  const Stage2Result res = stage2_loop(data.corpus, bank, g, cfg, 4);
  CHECK(res.iterations.empty());
  for (int a = 0; a < bank.size(); ++a) {
    CHECK(res.bank.models[static_cast<std::size_t>(a)].w ==
          bank.models[static_cast<std::size_t>(a)].w);
  }
  for (int i = 0; i < data.corpus.size(); ++i) {
    CHECK(res.labels[static_cast<std::size_t>(i)] ==
          data.corpus.samples()[static_cast<std::size_t>(i)].labels);
    for (int a = 0; a < 2; ++a) {
      CHECK(res.pseudo[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] == 0);
      CHECK(std::isnan(res.posteriors(i, a)));
    }
  }
}

TEST_CASE("stage2 defaults to M=10 and fills every missing label") {
  Stage2Config defaults;
  CHECK(defaults.M == 10);

  SynthConfig synth;
  synth.d = 4;
  synth.n_per_source = 30;
  synth.sources = 2;
  synth.attributes = 2;
  synth.visibility = disjoint_visibility(2, 2);
  synth.seed = 8;
  const SynthCorpus data = gen_corpus(synth);
  TrainConfig tc;
  tc.epochs = 5;
  const ClassifierBank bank = train_bank(data.corpus, tc);
  const AffinityGraph g = build_graph(data.corpus.feature_matrix(), 5);
  Stage2Config cfg;
  cfg.M = 2;
  cfg.retrain.epochs = 2;
  int observed = 0;
  const Stage2Result res = stage2_loop(data.corpus, bank, g, cfg, 4,
                                       [&](int, const ClassifierBank&,
                                           const std::vector<std::vector<TriLabel>>&) {
                                         ++observed;
                                       });
  CHECK(observed == 2);
  CHECK(res.iterations.size() == 2);
  for (int i = 0; i < data.corpus.size(); ++i) {
    for (int a = 0; a < 2; ++a) {
      CHECK(res.labels[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] !=
            TriLabel::Missing);
      const bool was_annotated = is_annotated(
          data.corpus.samples()[static_cast<std::size_t>(i)].labels[static_cast<std::size_t>(a)]);
      if (was_annotated) {
        CHECK(res.labels[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] ==
              data.corpus.samples()[static_cast<std::size_t>(i)].labels[static_cast<std::size_t>(a)]);
        CHECK(res.pseudo[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] == 0);
      } else {
        CHECK(res.pseudo[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] == 1);
      }
    }
  }
}

}  // TEST_SUITE
