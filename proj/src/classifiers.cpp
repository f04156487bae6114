#include "attrprop/classifiers.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "attrprop/csv.hpp"
#include "attrprop/error.hpp"
#include "attrprop/parallel.hpp"

namespace attrprop {

Scalar predict_prob(const LogisticModel& model, const Eigen::Ref<const Vector>& x) {
  if (x.size() != model.w.size()) {
    throw_error(ErrorCode::dimension_mismatch,
                "predict_prob: feature dimension " + std::to_string(x.size()) +
                    " does not match model dimension " + std::to_string(model.w.size()));
  }
  return sigmoid(model.w.dot(x) + model.b);
}

namespace {

// Cross-entropy of a logit against a 0/1 target, computed as
// y*softplus(-s) + (1-y)*softplus(s).
inline Scalar logit_cross_entropy(Scalar s, Scalar y) {
  return y * softplus(-s) + (1 - y) * softplus(s);
}

}  // namespace

Scalar masked_logistic_loss(const LogisticModel& model, const Eigen::Ref<const Matrix>& X,
                            const std::vector<TriLabel>& labels, Scalar weight_decay,
                            const std::vector<Scalar>& sample_weights) {
  Scalar total = 0;
  Scalar weight_sum = 0;
  for (int i = 0; i < X.rows(); ++i) {
    const TriLabel l = labels[static_cast<std::size_t>(i)];
    if (!is_annotated(l)) {
      continue;
    }
    const Scalar wi = sample_weights.empty() ? 1 : sample_weights[static_cast<std::size_t>(i)];
    const Scalar s = model.w.dot(X.row(i)) + model.b;
    total += wi * logit_cross_entropy(s, l == TriLabel::Positive ? 1 : 0);
    weight_sum += wi;
  }
  if (weight_sum > 0) {
    total /= weight_sum;
  }
  return total + Scalar(0.5) * weight_decay * model.w.squaredNorm();
}

void masked_logistic_grad(const LogisticModel& model, const Eigen::Ref<const Matrix>& X,
                          const std::vector<TriLabel>& labels, Scalar weight_decay,
                          Vector& grad_w, Scalar& grad_b,
                          const std::vector<Scalar>& sample_weights) {
  grad_w = Vector::Zero(model.w.size());
  grad_b = 0;
  Scalar weight_sum = 0;
  for (int i = 0; i < X.rows(); ++i) {
    const TriLabel l = labels[static_cast<std::size_t>(i)];
    if (!is_annotated(l)) {
      continue;
    }
    const Scalar wi = sample_weights.empty() ? 1 : sample_weights[static_cast<std::size_t>(i)];
    const Scalar s = model.w.dot(X.row(i)) + model.b;
    const Scalar residual = wi * (sigmoid(s) - (l == TriLabel::Positive ? 1 : 0));
    grad_w.noalias() += residual * X.row(i).transpose();
    grad_b += residual;
    weight_sum += wi;
  }
  if (weight_sum > 0) {
    grad_w /= weight_sum;
    grad_b /= weight_sum;
  }
  grad_w += weight_decay * model.w;
}

LogisticModel train_logistic(const Eigen::Ref<const Matrix>& X,
                             const std::vector<TriLabel>& labels, const TrainConfig& cfg,
                             std::uint64_t seed, const LogisticModel* init) {
  const int d = static_cast<int>(X.cols());
  LogisticModel model;
  if (init != nullptr) {
    model = *init;
  } else {
    model.w = Vector::Zero(d);
    model.b = 0;
  }

  std::vector<int> annotated;
  long positives = 0, negatives = 0;
  for (int i = 0; i < X.rows(); ++i) {
    const TriLabel l = labels[static_cast<std::size_t>(i)];
    if (is_annotated(l)) {
      annotated.push_back(i);
      (l == TriLabel::Positive ? positives : negatives) += 1;
    }
  }
  if (positives == 0 || negatives == 0) {
    throw_error(ErrorCode::degenerate_attribute,
                "training requires both classes, got " + std::to_string(positives) +
                    " positive / " + std::to_string(negatives) + " negative labels");
  }

  std::vector<Scalar> weights;
  if (cfg.class_weighting) {
    const Scalar n = static_cast<Scalar>(annotated.size());
    const Scalar wp = n / (2 * static_cast<Scalar>(positives));
    const Scalar wn = n / (2 * static_cast<Scalar>(negatives));
    weights.assign(static_cast<std::size_t>(X.rows()), 0);
    for (int i : annotated) {
      weights[static_cast<std::size_t>(i)] =
          labels[static_cast<std::size_t>(i)] == TriLabel::Positive ? wp : wn;
    }
  }

  std::mt19937_64 rng(mix64(seed));
  Vector velocity_w = Vector::Zero(d);
  Scalar velocity_b = 0;
  Vector grad_w(d);
  const int batch = std::max(1, cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(annotated.begin(), annotated.end(), rng);
    for (std::size_t start = 0; start < annotated.size(); start += static_cast<std::size_t>(batch)) {
      const std::size_t stop = std::min(annotated.size(), start + static_cast<std::size_t>(batch));
      grad_w.setZero();
      Scalar grad_b = 0;
      Scalar weight_sum = 0;
      for (std::size_t p = start; p < stop; ++p) {
        const int i = annotated[p];
        const Scalar wi = weights.empty() ? 1 : weights[static_cast<std::size_t>(i)];
        const Scalar s = model.w.dot(X.row(i)) + model.b;
        const Scalar y = labels[static_cast<std::size_t>(i)] == TriLabel::Positive ? 1 : 0;
        const Scalar residual = wi * (sigmoid(s) - y);
        grad_w.noalias() += residual * X.row(i).transpose();
        grad_b += residual;
        weight_sum += wi;
      }
      grad_w /= weight_sum;
      grad_b /= weight_sum;
      grad_w += cfg.weight_decay * model.w;

      velocity_w = cfg.momentum * velocity_w - cfg.learning_rate * grad_w;
      velocity_b = cfg.momentum * velocity_b - cfg.learning_rate * grad_b;
      model.w += velocity_w;
      model.b += velocity_b;
    }
  }
  return model;
}

ClassifierBank train_bank(const Corpus& corpus, const TrainConfig& cfg) {
  const int k = corpus.attribute_count();
  const Matrix X = corpus.feature_matrix();

  std::vector<std::vector<TriLabel>> columns(static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a) {
    columns[static_cast<std::size_t>(a)] = corpus.labels_for(a);
    long positives = 0, negatives = 0;
    for (TriLabel l : columns[static_cast<std::size_t>(a)]) {
      if (l == TriLabel::Positive) ++positives;
      if (l == TriLabel::Negative) ++negatives;
    }
    if (positives == 0 || negatives == 0) {
      throw_error(ErrorCode::degenerate_attribute,
                  "attribute '" + corpus.registry()[static_cast<std::size_t>(a)].id +
                      "' lacks a class: " + std::to_string(positives) + " positive / " +
                      std::to_string(negatives) + " negative labels");
    }
  }

  ClassifierBank bank;
  bank.attribute_ids.resize(static_cast<std::size_t>(k));
  bank.models.resize(static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a) {
    bank.attribute_ids[static_cast<std::size_t>(a)] =
        corpus.registry()[static_cast<std::size_t>(a)].id;
  }
  parallel_for(k, cfg.threads, [&](int a) {
    bank.models[static_cast<std::size_t>(a)] =
        train_logistic(X, columns[static_cast<std::size_t>(a)], cfg,
                       derive_seed(cfg.seed, static_cast<std::uint64_t>(a)));
  });
  return bank;
}

CooccurrenceMatrix cooccurrence(const ClassifierBank& bank) {
  const int k = bank.size();
  if (k < 2) {
    throw_error(ErrorCode::undefined_correlation,
                "co-occurrence requires at least 2 attributes, got " + std::to_string(k));
  }
  const int d = static_cast<int>(bank.models.front().w.size());

  Matrix centered(k, d);
  Vector norms(k);
  for (int a = 0; a < k; ++a) {
    const Vector& w = bank.models[static_cast<std::size_t>(a)].w;
    const Vector c = w.array() - w.mean();
    const Scalar norm = c.norm();
    if (!(norm > 0)) {
      throw_error(ErrorCode::undefined_correlation,
                  "attribute '" + bank.attribute_ids[static_cast<std::size_t>(a)] +
                      "' has a zero-variance weight vector");
    }
    centered.row(a) = c.transpose();
    norms[a] = norm;
  }

  CooccurrenceMatrix result;
  result.attribute_ids = bank.attribute_ids;
  result.r = Matrix::Identity(k, k);
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      const Scalar r = centered.row(a).dot(centered.row(b)) / (norms[a] * norms[b]);
      const Scalar clipped = std::clamp(r, Scalar(-1), Scalar(1));
      result.r(a, b) = clipped;
      result.r(b, a) = clipped;
    }
  }
  return result;
}

Vector prior_q(const CooccurrenceMatrix& r, const std::vector<TriLabel>& sample_labels,
               int attr_index) {
  const int k = static_cast<int>(r.attribute_ids.size());
  if (attr_index < 0 || attr_index >= k) {
    throw_error(ErrorCode::schema_error, "prior_q: attribute index out of range");
  }
  Vector q(k - 1);
  int out = 0;
  for (int other = 0; other < k; ++other) {
    if (other == attr_index) {
      continue;
    }
    switch (sample_labels[static_cast<std::size_t>(other)]) {
      case TriLabel::Positive:
        q[out] = r.r(attr_index, other);
        break;
      case TriLabel::Negative:
        q[out] = -r.r(attr_index, other);
        break;
      case TriLabel::Missing:
        q[out] = 0;
        break;
    }
    ++out;
  }
  return q;
}

void save_bank_json(const ClassifierBank& bank, const std::string& path) {
  nlohmann::ordered_json doc;
  for (int a = 0; a < bank.size(); ++a) {
    const LogisticModel& m = bank.models[static_cast<std::size_t>(a)];
    nlohmann::ordered_json entry;
    entry["w"] = std::vector<Scalar>(m.w.data(), m.w.data() + m.w.size());
    entry["b"] = m.b;
    doc[bank.attribute_ids[static_cast<std::size_t>(a)]] = std::move(entry);
  }
  write_text_file(path, doc.dump(2) + "\n");
}

ClassifierBank load_bank_json(const std::string& path) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw_error(ErrorCode::schema_error, "invalid bank JSON in " + path + ": " + e.what());
  }
  ClassifierBank bank;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    LogisticModel m;
    const auto& w = it.value().at("w");
    m.w.resize(static_cast<Eigen::Index>(w.size()));
    for (std::size_t j = 0; j < w.size(); ++j) {
      m.w[static_cast<Eigen::Index>(j)] = w[j].get<Scalar>();
    }
    m.b = it.value().at("b").get<Scalar>();
    bank.attribute_ids.push_back(it.key());
    bank.models.push_back(std::move(m));
  }
  return bank;
}

}  // namespace attrprop
