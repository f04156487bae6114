#include "attrprop/relation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "attrprop/csv.hpp"
#include "attrprop/error.hpp"

namespace attrprop {

Vector spatial_cues(const FaceBox& left, const FaceBox& right, Scalar img_w, Scalar img_h) {
  if (!(left.w > 0) || !(left.h > 0) || !(right.w > 0) || !(right.h > 0) || !(img_w > 0) ||
      !(img_h > 0)) {
    throw_error(ErrorCode::nonpositive_box, "boxes and image dimensions must be positive");
  }
  const Scalar xl = left.x / img_w, yl = left.y / img_h;
  const Scalar wl = left.w / img_w, hl = left.h / img_h;
  const Scalar xr = right.x / img_w, yr = right.y / img_h;
  const Scalar wr = right.w / img_w, hr = right.h / img_h;
  Vector cue(kSpatialCueDim);
  cue << xl, yl, wl, hl, xr, yr, wr, hr, (xl - xr) / wl, (yl - yr) / hl, wl / wr;
  return cue;
}

Vector spatial_cues(const FaceBox& left, const FaceBox& right) {
  if (left.img_w != right.img_w || left.img_h != right.img_h) {
    throw_error(ErrorCode::nonpositive_box, "paired boxes come from images of different sizes");
  }
  return spatial_cues(left, right, left.img_w, left.img_h);
}

RelationModel init_relation_model(int d, int k, std::uint64_t seed, Fusion fusion) {
  RelationModel model;
  model.fusion = fusion;
  model.projection.resize(2 * d, k);
  model.traits = Matrix::Zero(kTraitCount, k + kSpatialCueDim);
  std::mt19937_64 rng(mix64(seed));
  std::normal_distribution<Scalar> gauss(0, 1 / std::sqrt(static_cast<Scalar>(2 * d)));
  for (int c = 0; c < model.projection.cols(); ++c) {
    for (int r = 0; r < model.projection.rows(); ++r) {
      model.projection(r, c) = gauss(rng);
    }
  }
  return model;
}

namespace {

Vector stack_pair(const Eigen::Ref<const Vector>& x_left,
                  const Eigen::Ref<const Vector>& x_right) {
  Vector u(x_left.size() + x_right.size());
  u << x_left, x_right;
  return u;
}

}  // namespace

Vector fuse(const Eigen::Ref<const Vector>& x_left, const Eigen::Ref<const Vector>& x_right,
            const RelationModel& model) {
  if (x_left.size() + x_right.size() != model.projection.rows()) {
    throw_error(ErrorCode::dimension_mismatch,
                "fuse: concatenated feature dimension does not match the projection");
  }
  Vector fused = model.projection.transpose() * stack_pair(x_left, x_right);
  if (model.fusion == Fusion::Tanh) {
    fused = fused.array().tanh();
  }
  return fused;
}

Vector predict_traits(const Eigen::Ref<const Vector>& x_left,
                      const Eigen::Ref<const Vector>& x_right,
                      const Eigen::Ref<const Vector>& cue, const RelationModel& model) {
  if (cue.size() != kSpatialCueDim) {
    throw_error(ErrorCode::dimension_mismatch, "spatial cue must have 11 entries");
  }
  const Vector fused = fuse(x_left, x_right, model);
  Vector input(kSpatialCueDim + fused.size());
  input << cue, fused;
  Vector probs(kTraitCount);
  for (int t = 0; t < kTraitCount; ++t) {
    probs[t] = sigmoid(model.traits.row(t).dot(input));
  }
  return probs;
}

namespace {

struct BatchTerms {
  Scalar loss = 0;          // per-trait mean cross-entropy, summed over traits
  long labeled = 0;         // labeled (pair, trait) entries in the batch
  Matrix grad_projection;
  Matrix grad_traits;
};

// Shared forward/backward over a selection of pairs. Each trait's
// cross-entropy is averaged over that trait's labeled entries, so masking
// one trait never rescales another trait's objective. Decay is applied by
// the caller.
BatchTerms accumulate(const RelationModel& model, const std::vector<FacePair>& pairs,
                      const std::vector<int>& indices, bool use_spatial_cues,
                      bool want_gradients) {
  const int k = model.fused_dim();
  BatchTerms terms;
  if (want_gradients) {
    terms.grad_projection = Matrix::Zero(model.projection.rows(), model.projection.cols());
    terms.grad_traits = Matrix::Zero(model.traits.rows(), model.traits.cols());
  }

  Eigen::Array<Scalar, kTraitCount, 1> trait_count;
  trait_count.setZero();
  for (int idx : indices) {
    const FacePair& pair = pairs[static_cast<std::size_t>(idx)];
    for (int t = 0; t < kTraitCount; ++t) {
      if (is_annotated(pair.traits[static_cast<std::size_t>(t)])) {
        trait_count[t] += 1;
        terms.labeled += 1;
      }
    }
  }

  Vector input(kSpatialCueDim + k);
  for (int idx : indices) {
    const FacePair& pair = pairs[static_cast<std::size_t>(idx)];
    const Vector u = stack_pair(pair.left, pair.right);
    Vector fused = model.projection.transpose() * u;
    if (model.fusion == Fusion::Tanh) {
      fused = fused.array().tanh();
    }
    if (use_spatial_cues) {
      input << pair.cue, fused;
    } else {
      input.head(kSpatialCueDim).setZero();
      input.tail(k) = fused;
    }

    Vector fused_grad = Vector::Zero(k);
    for (int t = 0; t < kTraitCount; ++t) {
      const TriLabel label = pair.traits[static_cast<std::size_t>(t)];
      if (!is_annotated(label)) {
        continue;
      }
      const Scalar y = label == TriLabel::Positive ? 1 : 0;
      const Scalar s = model.traits.row(t).dot(input);
      terms.loss += (y * softplus(-s) + (1 - y) * softplus(s)) / trait_count[t];
      if (want_gradients) {
        const Scalar residual = (sigmoid(s) - y) / trait_count[t];
        terms.grad_traits.row(t) += residual * input.transpose();
        fused_grad += residual * model.traits.row(t).tail(k).transpose();
      }
    }
    if (want_gradients) {
      if (model.fusion == Fusion::Tanh) {
        fused_grad.array() *= (1 - fused.array().square());
      }
      terms.grad_projection.noalias() += u * fused_grad.transpose();
    }
  }
  return terms;
}

std::vector<int> all_indices(std::size_t n) {
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < n; ++i) {
    idx[i] = static_cast<int>(i);
  }
  return idx;
}

}  // namespace

Scalar relation_loss(const RelationModel& model, const std::vector<FacePair>& pairs,
                     Scalar weight_decay, bool use_spatial_cues) {
  const BatchTerms terms =
      accumulate(model, pairs, all_indices(pairs.size()), use_spatial_cues, false);
  return terms.loss + Scalar(0.5) * weight_decay *
                          (model.traits.squaredNorm() + model.projection.squaredNorm());
}

void relation_grad(const RelationModel& model, const std::vector<FacePair>& pairs,
                   Scalar weight_decay, Matrix& grad_projection, Matrix& grad_traits,
                   bool use_spatial_cues) {
  const BatchTerms terms =
      accumulate(model, pairs, all_indices(pairs.size()), use_spatial_cues, true);
  grad_projection = terms.grad_projection + weight_decay * model.projection;
  grad_traits = terms.grad_traits + weight_decay * model.traits;
}

RelationModel train_relation(const std::vector<FacePair>& pairs,
                             const RelationTrainConfig& cfg, std::uint64_t seed) {
  if (pairs.empty()) {
    throw_error(ErrorCode::empty_set, "train_relation requires at least one pair");
  }
  const int d = static_cast<int>(pairs.front().left.size());
  for (const FacePair& p : pairs) {
    if (p.left.size() != d || p.right.size() != d || p.cue.size() != kSpatialCueDim) {
      throw_error(ErrorCode::dimension_mismatch, "inconsistent pair dimensions");
    }
  }
  // A lone pair is the overfit-one-sample sanity case and is exempt from the
  // two-class requirement.
  if (pairs.size() > 1) {
    for (int t = 0; t < kTraitCount; ++t) {
      long positives = 0, negatives = 0;
      for (const FacePair& p : pairs) {
        const TriLabel l = p.traits[static_cast<std::size_t>(t)];
        if (l == TriLabel::Positive) ++positives;
        if (l == TriLabel::Negative) ++negatives;
      }
      if (positives == 0 || negatives == 0) {
        throw_error(ErrorCode::degenerate_trait,
                    std::string("trait '") +
                        std::string(kTraitNames[static_cast<std::size_t>(t)]) +
                        "' lacks a class among annotated labels");
      }
    }
  }

  RelationModel model = init_relation_model(d, cfg.fused_dim, derive_seed(seed, 0), cfg.fusion);
  Matrix velocity_projection = Matrix::Zero(model.projection.rows(), model.projection.cols());
  Matrix velocity_traits = Matrix::Zero(model.traits.rows(), model.traits.cols());

  std::mt19937_64 rng(mix64(derive_seed(seed, 1)));
  std::vector<int> order = all_indices(pairs.size());
  const int batch = std::max(1, cfg.batch_size);
  std::vector<int> slice;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(batch));
      slice.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                   order.begin() + static_cast<std::ptrdiff_t>(stop));
      BatchTerms terms = accumulate(model, pairs, slice, cfg.use_spatial_cues, true);
      if (terms.labeled == 0) {
        continue;
      }
      terms.grad_projection += cfg.weight_decay * model.projection;
      terms.grad_traits += cfg.weight_decay * model.traits;

      velocity_traits = cfg.momentum * velocity_traits - cfg.learning_rate * terms.grad_traits;
      model.traits += velocity_traits;
      if (!cfg.freeze_projection) {
        velocity_projection =
            cfg.momentum * velocity_projection - cfg.learning_rate * terms.grad_projection;
        model.projection += velocity_projection;
      }
    }
  }
  return model;
}

Matrix temporal_smooth(const Eigen::Ref<const Matrix>& probs, int window) {
  if (window < 1 || window % 2 == 0) {
    throw_error(ErrorCode::invalid_config,
                "smoothing window must be odd and >= 1, got " + std::to_string(window));
  }
  const int t_count = static_cast<int>(probs.rows());
  const int half = window / 2;
  Matrix smoothed(probs.rows(), probs.cols());
  for (int t = 0; t < t_count; ++t) {
    const int lo = std::max(0, t - half);
    const int hi = std::min(t_count - 1, t + half);
    smoothed.row(t) = probs.middleRows(lo, hi - lo + 1).colwise().mean();
  }
  return smoothed;
}

void save_relation_json(const RelationModel& model, const std::string& path) {
  nlohmann::ordered_json doc;
  doc["dims"] = {{"d", model.feature_dim()},
                 {"k", model.fused_dim()},
                 {"fusion", model.fusion == Fusion::Tanh ? "tanh" : "linear"}};
  std::vector<Scalar> w_r;
  w_r.reserve(static_cast<std::size_t>(model.projection.size()));
  for (int r = 0; r < model.projection.rows(); ++r) {
    for (int c = 0; c < model.projection.cols(); ++c) {
      w_r.push_back(model.projection(r, c));
    }
  }
  doc["W_R"] = std::move(w_r);
  nlohmann::ordered_json traits = nlohmann::ordered_json::array();
  for (int t = 0; t < kTraitCount; ++t) {
    std::vector<Scalar> row(model.traits.row(t).begin(), model.traits.row(t).end());
    traits.push_back(std::move(row));
  }
  doc["traits"] = std::move(traits);
  write_text_file(path, doc.dump(2) + "\n");
}

RelationModel load_relation_json(const std::string& path) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw_error(ErrorCode::schema_error, "invalid relation JSON in " + path + ": " + e.what());
  }
  RelationModel model;
  const int d = doc.at("dims").at("d").get<int>();
  const int k = doc.at("dims").at("k").get<int>();
  const std::string fusion = doc.at("dims").value("fusion", "linear");
  model.fusion = fusion == "tanh" ? Fusion::Tanh : Fusion::Linear;
  const auto& w_r = doc.at("W_R");
  if (static_cast<int>(w_r.size()) != 2 * d * k) {
    throw_error(ErrorCode::schema_error, "W_R length does not match dims in " + path);
  }
  model.projection.resize(2 * d, k);
  std::size_t pos = 0;
  for (int r = 0; r < 2 * d; ++r) {
    for (int c = 0; c < k; ++c) {
      model.projection(r, c) = w_r[pos++].get<Scalar>();
    }
  }
  const auto& traits = doc.at("traits");
  if (traits.size() != kTraitCount) {
    throw_error(ErrorCode::schema_error, "expected 8 trait vectors in " + path);
  }
  model.traits.resize(kTraitCount, k + kSpatialCueDim);
  for (int t = 0; t < kTraitCount; ++t) {
    const auto& row = traits[static_cast<std::size_t>(t)];
    if (static_cast<int>(row.size()) != k + kSpatialCueDim) {
      throw_error(ErrorCode::schema_error, "trait vector length mismatch in " + path);
    }
    for (int c = 0; c < k + kSpatialCueDim; ++c) {
      model.traits(t, c) = row[static_cast<std::size_t>(c)].get<Scalar>();
    }
  }
  return model;
}

std::vector<FacePair> load_pairs_csv(const std::string& path, const Corpus& corpus) {
  const CsvTable table = read_csv(path);
  std::vector<std::string> expected = {"id", "left_id", "right_id"};
  for (auto name : kTraitNames) {
    expected.emplace_back(name);
  }
  if (table.header != expected) {
    throw_error(ErrorCode::schema_error,
                "pair file header must be id,left_id,right_id,<the 8 trait columns>");
  }
  std::vector<FacePair> pairs;
  pairs.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    if (row.size() != expected.size()) {
      throw_error(ErrorCode::schema_error, "malformed pair row in " + path);
    }
    FacePair pair;
    pair.id = row[0];
    const int left = corpus.sample_index(row[1]);
    const int right = corpus.sample_index(row[2]);
    if (left < 0 || right < 0) {
      throw_error(ErrorCode::id_mismatch,
                  "pair '" + pair.id + "' references samples missing from the corpus");
    }
    const Sample& sl = corpus.samples()[static_cast<std::size_t>(left)];
    const Sample& sr = corpus.samples()[static_cast<std::size_t>(right)];
    if (!sl.box || !sr.box) {
      throw_error(ErrorCode::schema_error,
                  "pair '" + pair.id + "' references samples without face boxes");
    }
    pair.left = sl.features;
    pair.right = sr.features;
    pair.cue = spatial_cues(*sl.box, *sr.box);
    for (int t = 0; t < kTraitCount; ++t) {
      const std::string& cell = row[static_cast<std::size_t>(t) + 3];
      if (cell.empty()) {
        pair.traits[static_cast<std::size_t>(t)] = TriLabel::Missing;
      } else if (cell == "1") {
        pair.traits[static_cast<std::size_t>(t)] = TriLabel::Positive;
      } else if (cell == "0") {
        pair.traits[static_cast<std::size_t>(t)] = TriLabel::Negative;
      } else {
        throw_error(ErrorCode::schema_error,
                    "unknown trait value '" + cell + "' in pair '" + pair.id + "'");
      }
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

void save_pairs_csv(const std::vector<FacePair>& pairs,
                    const std::vector<std::pair<std::string, std::string>>& member_ids,
                    const std::string& path) {
  if (member_ids.size() != pairs.size()) {
    throw_error(ErrorCode::dimension_mismatch, "member id list does not match the pair list");
  }
  std::ostringstream out;
  out << "id,left_id,right_id";
  for (auto name : kTraitNames) {
    out << ',' << name;
  }
  out << "\n";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out << pairs[i].id << ',' << member_ids[i].first << ',' << member_ids[i].second;
    for (TriLabel l : pairs[i].traits) {
      out << ',';
      if (l == TriLabel::Positive) {
        out << '1';
      } else if (l == TriLabel::Negative) {
        out << '0';
      }
    }
    out << "\n";
  }
  write_text_file(path, out.str());
}

}  // namespace attrprop
