// Pairwise relation head: a shared linear projection fuses two face feature
// vectors, and eight independent logistic traits are read from the fused
// representation concatenated with an 11-dim spatial-cue vector.
#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "attrprop/data_model.hpp"
#include "attrprop/types.hpp"

namespace attrprop {

inline constexpr int kTraitCount = 8;
inline constexpr int kSpatialCueDim = 11;

inline constexpr std::array<std::string_view, kTraitCount> kTraitNames = {
    "dominant", "competitive", "trusting",      "warm",
    "friendly", "involved",    "demonstrative", "assured"};

// 11 cues: both boxes as (x/W, y/H, w/W, h/H), the relative offsets
// (x_l - x_r)/w_l and (y_l - y_r)/h_l over the normalized values, and the
// scale ratio w_l/w_r.
Vector spatial_cues(const FaceBox& left, const FaceBox& right, Scalar img_w, Scalar img_h);

// Convenience overload taking the image size from the boxes (must agree).
Vector spatial_cues(const FaceBox& left, const FaceBox& right);

enum class Fusion { Linear, Tanh };

struct RelationModel {
  Matrix projection;  // (2d) x k
  Matrix traits;      // kTraitCount x (k + kSpatialCueDim); cue block first
  Fusion fusion = Fusion::Linear;

  int feature_dim() const { return static_cast<int>(projection.rows()) / 2; }
  int fused_dim() const { return static_cast<int>(projection.cols()); }
};

// Projection entries i.i.d. normal with std 1/sqrt(2d); trait weights zero.
RelationModel init_relation_model(int d, int k, std::uint64_t seed,
                                  Fusion fusion = Fusion::Linear);

// x_g = P^T [x_l; x_r], optionally passed through tanh.
Vector fuse(const Eigen::Ref<const Vector>& x_left, const Eigen::Ref<const Vector>& x_right,
            const RelationModel& model);

// Eight independent probabilities sigmoid(w_t . [cue; x_g]).
Vector predict_traits(const Eigen::Ref<const Vector>& x_left,
                      const Eigen::Ref<const Vector>& x_right,
                      const Eigen::Ref<const Vector>& cue, const RelationModel& model);

struct FacePair {
  std::string id;
  Vector left;
  Vector right;
  Vector cue;  // kSpatialCueDim entries
  std::array<TriLabel, kTraitCount> traits{};
};

struct RelationTrainConfig {
  int fused_dim = 256;
  int epochs = 30;
  int batch_size = 32;
  Scalar learning_rate = 1e-3;
  Scalar momentum = 0.9;
  Scalar weight_decay = 1e-4;
  bool use_spatial_cues = true;   // when false, cues are zeroed during training
  bool freeze_projection = false;
  Fusion fusion = Fusion::Linear;
  std::uint64_t seed = 0;
};

// Mean masked cross-entropy over labeled (pair, trait) entries plus
// (decay/2) * (||traits||^2 + ||projection||^2).
Scalar relation_loss(const RelationModel& model, const std::vector<FacePair>& pairs,
                     Scalar weight_decay, bool use_spatial_cues = true);

void relation_grad(const RelationModel& model, const std::vector<FacePair>& pairs,
                   Scalar weight_decay, Matrix& grad_projection, Matrix& grad_traits,
                   bool use_spatial_cues = true);

// SGD with momentum on the masked objective. Every trait must carry both
// classes among its annotated labels.
RelationModel train_relation(const std::vector<FacePair>& pairs,
                             const RelationTrainConfig& cfg, std::uint64_t seed);

// Centered moving average per trait over a T x kTraitCount sequence; frames
// near the boundary average over the part of the window that exists.
Matrix temporal_smooth(const Eigen::Ref<const Matrix>& probs, int window);

// JSON {W_R: row-major array, traits: 8 arrays, dims}.
void save_relation_json(const RelationModel& model, const std::string& path);
RelationModel load_relation_json(const std::string& path);

// Pair CSV `id,left_id,right_id,<trait columns>` with tri-state cells;
// features and boxes resolve through the corpus.
std::vector<FacePair> load_pairs_csv(const std::string& path, const Corpus& corpus);
void save_pairs_csv(const std::vector<FacePair>& pairs,
                    const std::vector<std::pair<std::string, std::string>>& member_ids,
                    const std::string& path);

}  // namespace attrprop
