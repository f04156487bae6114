// Per-attribute binary logistic classifiers with missing-label masking, and
// the attribute co-occurrence prior derived from their weight vectors.
#pragma once

#include <string>
#include <vector>

#include "attrprop/data_model.hpp"
#include "attrprop/types.hpp"

namespace attrprop {

struct LogisticModel {
  Vector w;
  Scalar b = 0;
};

struct ClassifierBank {
  std::vector<std::string> attribute_ids;  // registry order
  std::vector<LogisticModel> models;       // aligned with attribute_ids

  int size() const { return static_cast<int>(models.size()); }
};

struct TrainConfig {
  int epochs = 30;
  int batch_size = 32;
  Scalar learning_rate = 1e-3;
  Scalar momentum = 0.9;
  Scalar weight_decay = 1e-4;
  bool class_weighting = false;  // inverse-frequency sample weights
  int threads = 1;
  std::uint64_t seed = 0;
};

Scalar predict_prob(const LogisticModel& model, const Eigen::Ref<const Vector>& x);

// Mean cross-entropy over annotated samples plus (decay/2)*||w||^2. Missing
// labels contribute nothing. `sample_weights` may be empty (all ones).
Scalar masked_logistic_loss(const LogisticModel& model, const Eigen::Ref<const Matrix>& X,
                            const std::vector<TriLabel>& labels, Scalar weight_decay,
                            const std::vector<Scalar>& sample_weights = {});

void masked_logistic_grad(const LogisticModel& model, const Eigen::Ref<const Matrix>& X,
                          const std::vector<TriLabel>& labels, Scalar weight_decay,
                          Vector& grad_w, Scalar& grad_b,
                          const std::vector<Scalar>& sample_weights = {});

// SGD with momentum on the masked loss. `init` continues from an existing
// model instead of a zero start.
LogisticModel train_logistic(const Eigen::Ref<const Matrix>& X,
                             const std::vector<TriLabel>& labels, const TrainConfig& cfg,
                             std::uint64_t seed, const LogisticModel* init = nullptr);

// One model per registry attribute. Requires every attribute to carry at
// least one positive and one negative annotation.
ClassifierBank train_bank(const Corpus& corpus, const TrainConfig& cfg);

struct CooccurrenceMatrix {
  std::vector<std::string> attribute_ids;
  Matrix r;  // symmetric, unit diagonal, entries in [-1, 1]
};

// Pearson correlation of classifier weight vectors (bias excluded).
CooccurrenceMatrix cooccurrence(const ClassifierBank& bank);

// Signed co-occurrence prior for one sample and one target attribute: the
// entry for a' is +r[a][a'] when a' is annotated positive, -r[a][a'] when
// negative, and 0 when missing. Packed over a' != a in registry order.
Vector prior_q(const CooccurrenceMatrix& r, const std::vector<TriLabel>& sample_labels,
               int attr_index);

// JSON document mapping attribute-id -> {w: [...], b: number} in registry
// order.
void save_bank_json(const ClassifierBank& bank, const std::string& path);
ClassifierBank load_bank_json(const std::string& path);

}  // namespace attrprop
