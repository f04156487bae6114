// Seeded synthetic corpora and relation-pair sets with known ground truth.
//
// Attributes come from a latent Gaussian copula thresholded at zero, so the
// pairwise co-occurrence strength is controllable. Features are drawn
// class-conditionally Gaussian per attribute (one signed direction per
// attribute) with an additive per-source mean shift and unit noise.
#pragma once

#include <string>
#include <vector>

#include "attrprop/data_model.hpp"
#include "attrprop/relation.hpp"
#include "attrprop/types.hpp"

namespace attrprop {

enum class PairRule {
  SpatialRatio,  // traits depend only on the face scale ratio
  Fused,         // traits depend only on a planted fused-feature rule
  Mixed,         // traits depend on both cues and fused features
};

struct PairGenConfig {
  int count = 0;
  int planted_dim = 8;  // dimension of the planted fused space
  PairRule rule = PairRule::Mixed;
  // Optional per-trait positive rates (8 entries) for imbalance presets;
  // empty means balanced thresholds at 0.5.
  std::vector<Scalar> positive_rate;
};

struct SynthConfig {
  int d = 16;
  int n_per_source = 100;
  int sources = 1;
  int attributes = 1;
  Scalar correlation = 0;      // latent equicorrelation of attributes, in [-1, 1]
  Scalar shift = 0;            // per-source mean offset magnitude
  Scalar separation = 4;       // distance between class means, in noise-sigma units
  Scalar labeled_fraction = 1; // chance a visible (sample, attribute) is annotated
  // Trailing dimensions that carry no attribute signal, only noise scaled by
  // nuisance_scale; they stress metric-based methods.
  int nuisance_dims = 0;
  Scalar nuisance_scale = 3;
  // Per-source visible attribute indices; empty means every attribute is
  // visible to every source.
  std::vector<std::vector<int>> visibility;
  std::uint64_t seed = 0;
  PairGenConfig pairs;
};

// Disjoint block visibility: attribute a belongs to source a * S / K.
std::vector<std::vector<int>> disjoint_visibility(int attributes, int sources);

struct SynthCorpus {
  Corpus corpus;                                    // masked labels
  std::vector<std::vector<std::uint8_t>> truth;     // n x K full labels
};

SynthCorpus gen_corpus(const SynthConfig& cfg);

struct SynthPairs {
  std::vector<FacePair> pairs;                                   // fully labeled
  Corpus face_corpus;                                            // features + boxes
  std::vector<std::pair<std::string, std::string>> member_ids;   // per pair
};

SynthPairs gen_pairs(const SynthConfig& cfg, std::uint64_t seed);

SynthConfig load_synth_config_json(const std::string& path);
void save_synth_config_json(const SynthConfig& cfg, const std::string& path);

}  // namespace attrprop
