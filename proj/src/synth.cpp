#include "attrprop/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "attrprop/csv.hpp"
#include "attrprop/error.hpp"

namespace attrprop {

std::vector<std::vector<int>> disjoint_visibility(int attributes, int sources) {
  std::vector<std::vector<int>> map(static_cast<std::size_t>(sources));
  for (int a = 0; a < attributes; ++a) {
    const int s = static_cast<int>(static_cast<long long>(a) * sources / attributes);
    map[static_cast<std::size_t>(s)].push_back(a);
  }
  return map;
}

namespace {

void validate(const SynthConfig& cfg) {
  if (cfg.d < 1 || cfg.n_per_source < 1 || cfg.sources < 1 || cfg.attributes < 1) {
    throw_error(ErrorCode::invalid_config, "synthetic counts must be positive");
  }
  if (cfg.correlation < -1 || cfg.correlation > 1) {
    throw_error(ErrorCode::invalid_config, "correlation must lie in [-1, 1]");
  }
  if (cfg.labeled_fraction < 0 || cfg.labeled_fraction > 1) {
    throw_error(ErrorCode::invalid_config, "labeled_fraction must lie in [0, 1]");
  }
  if (!cfg.visibility.empty() &&
      static_cast<int>(cfg.visibility.size()) != cfg.sources) {
    throw_error(ErrorCode::invalid_config, "visibility map must have one entry per source");
  }
  if (cfg.nuisance_dims < 0 || cfg.nuisance_dims >= cfg.d || !(cfg.nuisance_scale > 0)) {
    throw_error(ErrorCode::invalid_config,
                "nuisance dimensions must leave at least one signal dimension");
  }
  // Equicorrelated Gaussian copula is positive semidefinite only when
  // rho >= -1/(K-1).
  if (cfg.attributes > 1 &&
      cfg.correlation < -Scalar(1) / static_cast<Scalar>(cfg.attributes - 1)) {
    throw_error(ErrorCode::infeasible_correlation,
                "equicorrelation " + format_double(cfg.correlation) + " is infeasible for " +
                    std::to_string(cfg.attributes) + " attributes");
  }
}

Vector random_unit(std::mt19937_64& rng, int d) {
  std::normal_distribution<Scalar> gauss(0, 1);
  Vector v(d);
  for (int j = 0; j < d; ++j) {
    v[j] = gauss(rng);
  }
  const Scalar norm = v.norm();
  return norm > 0 ? Vector(v / norm) : Vector::Unit(d, 0);
}

}  // namespace

SynthCorpus gen_corpus(const SynthConfig& cfg) {
  validate(cfg);
  const int k = cfg.attributes;
  const int d = cfg.d;
  const int n = cfg.n_per_source * cfg.sources;

  std::mt19937_64 rng(mix64(cfg.seed));
  std::normal_distribution<Scalar> gauss(0, 1);
  std::uniform_real_distribution<Scalar> uniform(0, 1);

  // Signed attribute directions; class means per attribute are +/- v_a at
  // half the requested separation. One coordinate per attribute keeps the
  // per-attribute class-conditional distribution Gaussian with a diagonal
  // covariance; when the signal subspace is too small the directions fall
  // back to random units. Trailing nuisance dimensions stay signal-free.
  const int signal_dims = d - cfg.nuisance_dims;
  auto subspace_unit = [&]() {
    Vector v = Vector::Zero(d);
    v.head(signal_dims) = random_unit(rng, signal_dims);
    return v;
  };
  std::vector<Vector> directions;
  directions.reserve(static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a) {
    directions.push_back(k <= signal_dims ? Vector(Vector::Unit(d, a) * (cfg.separation / 2))
                                          : Vector(subspace_unit() * (cfg.separation / 2)));
  }
  std::vector<Vector> source_shift;
  source_shift.reserve(static_cast<std::size_t>(cfg.sources));
  for (int s = 0; s < cfg.sources; ++s) {
    source_shift.push_back(cfg.shift > 0 ? Vector(subspace_unit() * cfg.shift)
                                         : Vector(Vector::Zero(d)));
  }

  // Equicorrelated latent z = sqrt(rho) * g0 + sqrt(1-rho) * g_a for rho >= 0;
  // the general case uses a Cholesky factor of the equicorrelation matrix.
  Matrix chol;
  if (k > 1) {
    Matrix corr = Matrix::Constant(k, k, cfg.correlation);
    corr.diagonal().setOnes();
    Eigen::LLT<Matrix> llt(corr + Scalar(1e-12) * Matrix::Identity(k, k));
    if (llt.info() != Eigen::Success) {
      throw_error(ErrorCode::infeasible_correlation, "correlation matrix is not PSD");
    }
    chol = llt.matrixL();
  }

  std::vector<std::vector<int>> visibility = cfg.visibility;
  if (visibility.empty()) {
    visibility.assign(static_cast<std::size_t>(cfg.sources), {});
    for (auto& list : visibility) {
      list.resize(static_cast<std::size_t>(k));
      for (int a = 0; a < k; ++a) {
        list[static_cast<std::size_t>(a)] = a;
      }
    }
  }

  std::vector<Attribute> registry;
  registry.reserve(static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a) {
    registry.push_back({"a" + std::to_string(a), a});
  }

  SynthCorpus out;
  out.truth.reserve(static_cast<std::size_t>(n));
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(n));
  Vector z(k), g(k);
  char id_buf[32];

  for (int s = 0; s < cfg.sources; ++s) {
    std::vector<std::uint8_t> visible(static_cast<std::size_t>(k), 0);
    for (int a : visibility[static_cast<std::size_t>(s)]) {
      if (a < 0 || a >= k) {
        throw_error(ErrorCode::invalid_config, "visibility references an unknown attribute");
      }
      visible[static_cast<std::size_t>(a)] = 1;
    }
    for (int i = 0; i < cfg.n_per_source; ++i) {
      for (int a = 0; a < k; ++a) {
        g[a] = gauss(rng);
      }
      if (k > 1) {
        z = chol * g;
      } else {
        z = g;
      }
      std::vector<std::uint8_t> labels(static_cast<std::size_t>(k));
      for (int a = 0; a < k; ++a) {
        labels[static_cast<std::size_t>(a)] = z[a] > 0 ? 1 : 0;
      }

      Sample sample;
      std::snprintf(id_buf, sizeof(id_buf), "s%d_%05d", s, i);
      sample.id = id_buf;
      sample.source = "s" + std::to_string(s);
      sample.features = source_shift[static_cast<std::size_t>(s)];
      for (int a = 0; a < k; ++a) {
        sample.features += (labels[static_cast<std::size_t>(a)] ? 1 : -1) *
                           directions[static_cast<std::size_t>(a)];
      }
      for (int j = 0; j < d; ++j) {
        sample.features[j] += (j < signal_dims ? 1 : cfg.nuisance_scale) * gauss(rng);
      }
      sample.labels.assign(static_cast<std::size_t>(k), TriLabel::Missing);
      for (int a = 0; a < k; ++a) {
        if (!visible[static_cast<std::size_t>(a)]) {
          continue;
        }
        if (uniform(rng) < cfg.labeled_fraction) {
          sample.labels[static_cast<std::size_t>(a)] =
              labels[static_cast<std::size_t>(a)] ? TriLabel::Positive : TriLabel::Negative;
        }
      }
      samples.push_back(std::move(sample));
      out.truth.push_back(std::move(labels));
    }
  }
  out.corpus = Corpus(std::move(registry), std::move(samples));
  return out;
}

SynthPairs gen_pairs(const SynthConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  const int count = cfg.pairs.count;
  const int d = cfg.d;
  const int planted = std::max(1, cfg.pairs.planted_dim);
  if (!cfg.pairs.positive_rate.empty() &&
      cfg.pairs.positive_rate.size() != static_cast<std::size_t>(kTraitCount)) {
    throw_error(ErrorCode::invalid_config, "positive_rate needs one entry per trait");
  }

  std::mt19937_64 rng(mix64(seed));
  std::normal_distribution<Scalar> gauss(0, 1);
  std::uniform_real_distribution<Scalar> uniform(0, 1);

  // Planted rule parameters: a fusion map and per-trait readouts.
  Matrix planted_projection(2 * d, planted);
  for (int c = 0; c < planted; ++c) {
    for (int r = 0; r < 2 * d; ++r) {
      planted_projection(r, c) = gauss(rng) / std::sqrt(static_cast<Scalar>(2 * d));
    }
  }
  Matrix trait_fused = Matrix::Zero(kTraitCount, planted);
  Vector trait_ratio = Vector::Zero(kTraitCount);
  for (int t = 0; t < kTraitCount; ++t) {
    switch (cfg.pairs.rule) {
      case PairRule::SpatialRatio:
        trait_ratio[t] = 1;
        break;
      case PairRule::Fused:
        trait_fused.row(t) = random_unit(rng, planted).transpose();
        break;
      case PairRule::Mixed:
        trait_fused.row(t) = random_unit(rng, planted).transpose();
        trait_ratio[t] = 1;
        break;
    }
  }

  SynthPairs out;
  out.pairs.reserve(static_cast<std::size_t>(count));
  out.member_ids.reserve(static_cast<std::size_t>(count));
  std::vector<Sample> faces;
  faces.reserve(2 * static_cast<std::size_t>(count));
  Matrix scores(count, kTraitCount);
  char id_buf[32];

  const Scalar img_w = 1000, img_h = 1000;
  std::uniform_real_distribution<Scalar> position(0, 700);
  std::normal_distribution<Scalar> log_scale(std::log(Scalar(80)), Scalar(0.35));

  for (int p = 0; p < count; ++p) {
    FacePair pair;
    std::snprintf(id_buf, sizeof(id_buf), "pair%05d", p);
    pair.id = id_buf;
    pair.left.resize(d);
    pair.right.resize(d);
    for (int j = 0; j < d; ++j) {
      pair.left[j] = gauss(rng);
    }
    for (int j = 0; j < d; ++j) {
      pair.right[j] = gauss(rng);
    }

    FaceBox bl, br;
    bl.w = std::exp(log_scale(rng));
    bl.h = bl.w * (Scalar(0.9) + Scalar(0.2) * uniform(rng));
    br.w = std::exp(log_scale(rng));
    br.h = br.w * (Scalar(0.9) + Scalar(0.2) * uniform(rng));
    bl.x = position(rng);
    bl.y = position(rng);
    br.x = position(rng);
    br.y = position(rng);
    bl.img_w = br.img_w = img_w;
    bl.img_h = br.img_h = img_h;
    pair.cue = spatial_cues(bl, br, img_w, img_h);

    Vector u(2 * d);
    u << pair.left, pair.right;
    const Vector fused = planted_projection.transpose() * u;
    const Scalar log_ratio = std::log(pair.cue[10]);
    for (int t = 0; t < kTraitCount; ++t) {
      scores(p, t) = trait_fused.row(t).dot(fused) + trait_ratio[t] * log_ratio;
    }

    Sample left_face, right_face;
    left_face.id = pair.id + "_l";
    right_face.id = pair.id + "_r";
    left_face.source = right_face.source = "pairs";
    left_face.features = pair.left;
    right_face.features = pair.right;
    left_face.box = bl;
    right_face.box = br;
    faces.push_back(std::move(left_face));
    faces.push_back(std::move(right_face));

    out.member_ids.emplace_back(pair.id + "_l", pair.id + "_r");
    out.pairs.push_back(std::move(pair));
  }

  // Thresholds: empirical quantiles when a target positive rate is given.
  for (int t = 0; t < kTraitCount; ++t) {
    Scalar threshold = 0;
    if (!cfg.pairs.positive_rate.empty() && count > 0) {
      std::vector<Scalar> column(scores.col(t).begin(), scores.col(t).end());
      std::sort(column.begin(), column.end());
      const Scalar rate = std::clamp(cfg.pairs.positive_rate[static_cast<std::size_t>(t)],
                                     Scalar(0), Scalar(1));
      const auto cut = static_cast<std::size_t>(
          std::min<long long>(count - 1, std::llround((1 - rate) * count)));
      threshold = column[cut];
    }
    for (int p = 0; p < count; ++p) {
      out.pairs[static_cast<std::size_t>(p)].traits[static_cast<std::size_t>(t)] =
          scores(p, t) > threshold ? TriLabel::Positive : TriLabel::Negative;
    }
  }

  out.face_corpus = Corpus({}, std::move(faces));
  return out;
}

SynthConfig load_synth_config_json(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw_error(ErrorCode::invalid_config, "invalid config JSON in " + path + ": " + e.what());
  }
  SynthConfig cfg;
  cfg.d = doc.value("d", cfg.d);
  cfg.n_per_source = doc.value("n_per_source", cfg.n_per_source);
  cfg.sources = doc.value("sources", cfg.sources);
  cfg.attributes = doc.value("attributes", cfg.attributes);
  cfg.correlation = doc.value("correlation", cfg.correlation);
  cfg.shift = doc.value("shift", cfg.shift);
  cfg.separation = doc.value("separation", cfg.separation);
  cfg.labeled_fraction = doc.value("labeled_fraction", cfg.labeled_fraction);
  cfg.nuisance_dims = doc.value("nuisance_dims", cfg.nuisance_dims);
  cfg.nuisance_scale = doc.value("nuisance_scale", cfg.nuisance_scale);
  cfg.seed = doc.value("seed", cfg.seed);
  if (doc.contains("visibility")) {
    const auto& vis = doc["visibility"];
    if (vis.is_string()) {
      const std::string mode = vis.get<std::string>();
      if (mode == "disjoint") {
        cfg.visibility = disjoint_visibility(cfg.attributes, cfg.sources);
      } else if (mode != "all") {
        throw_error(ErrorCode::invalid_config, "visibility must be 'all', 'disjoint', or lists");
      }
    } else {
      cfg.visibility = vis.get<std::vector<std::vector<int>>>();
    }
  }
  if (doc.contains("pairs")) {
    const auto& pairs = doc["pairs"];
    cfg.pairs.count = pairs.value("count", cfg.pairs.count);
    cfg.pairs.planted_dim = pairs.value("planted_dim", cfg.pairs.planted_dim);
    const std::string rule = pairs.value("rule", std::string("mixed"));
    if (rule == "spatial_ratio") {
      cfg.pairs.rule = PairRule::SpatialRatio;
    } else if (rule == "fused") {
      cfg.pairs.rule = PairRule::Fused;
    } else if (rule == "mixed") {
      cfg.pairs.rule = PairRule::Mixed;
    } else {
      throw_error(ErrorCode::invalid_config, "unknown pair rule '" + rule + "'");
    }
    if (pairs.contains("positive_rate")) {
      cfg.pairs.positive_rate = pairs["positive_rate"].get<std::vector<Scalar>>();
    }
  }
  validate(cfg);
  return cfg;
}

void save_synth_config_json(const SynthConfig& cfg, const std::string& path) {
  nlohmann::ordered_json doc;
  doc["d"] = cfg.d;
  doc["n_per_source"] = cfg.n_per_source;
  doc["sources"] = cfg.sources;
  doc["attributes"] = cfg.attributes;
  doc["correlation"] = cfg.correlation;
  doc["shift"] = cfg.shift;
  doc["separation"] = cfg.separation;
  doc["labeled_fraction"] = cfg.labeled_fraction;
  doc["nuisance_dims"] = cfg.nuisance_dims;
  doc["nuisance_scale"] = cfg.nuisance_scale;
  doc["seed"] = cfg.seed;
  doc["visibility"] = cfg.visibility.empty() ? nlohmann::ordered_json("all")
                                             : nlohmann::ordered_json(cfg.visibility);
  nlohmann::ordered_json pairs;
  pairs["count"] = cfg.pairs.count;
  pairs["planted_dim"] = cfg.pairs.planted_dim;
  pairs["rule"] = cfg.pairs.rule == PairRule::SpatialRatio
                      ? "spatial_ratio"
                      : (cfg.pairs.rule == PairRule::Fused ? "fused" : "mixed");
  if (!cfg.pairs.positive_rate.empty()) {
    pairs["positive_rate"] = cfg.pairs.positive_rate;
  }
  doc["pairs"] = std::move(pairs);
  write_text_file(path, doc.dump(2) + "\n");
}

}  // namespace attrprop
