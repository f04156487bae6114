// Heterogeneous multi-source datasets with tri-state attribute labels.
//
// A Corpus joins a feature table with per-attribute labels that may be
// missing for any sample. Missing is an explicit third state: downstream
// training and propagation branch on annotated-vs-not, so it is never
// encoded as a sentinel number.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "attrprop/types.hpp"

namespace attrprop {

enum class TriLabel : std::uint8_t { Negative = 0, Positive = 1, Missing = 2 };

inline bool is_annotated(TriLabel l) { return l != TriLabel::Missing; }

struct Attribute {
  std::string id;
  int index = 0;  // ordinal position in the registry, contiguous from 0
};

// Face bounding box in pixel units together with the source image size.
struct FaceBox {
  Scalar x = 0;
  Scalar y = 0;
  Scalar w = 0;
  Scalar h = 0;
  Scalar img_w = 0;
  Scalar img_h = 0;
};

struct Sample {
  std::string id;
  std::string source;
  Vector features;
  std::vector<TriLabel> labels;  // aligned with the registry, one per attribute
  std::optional<FaceBox> box;
};

class Corpus {
 public:
  Corpus() = default;
  // Validates invariants: unique sample ids, uniform feature dimension,
  // contiguous registry indices, one label slot per attribute.
  Corpus(std::vector<Attribute> registry, std::vector<Sample> samples);

  const std::vector<Attribute>& registry() const { return registry_; }
  const std::vector<Sample>& samples() const { return samples_; }

  int size() const { return static_cast<int>(samples_.size()); }
  int attribute_count() const { return static_cast<int>(registry_.size()); }
  int feature_dim() const {
    return samples_.empty() ? 0 : static_cast<int>(samples_.front().features.size());
  }

  // Registry index for an attribute id, or -1 when unknown.
  int attribute_index(std::string_view id) const;

  // Sample index for a sample id, or -1 when unknown.
  int sample_index(std::string_view id) const;

  // Features stacked row-wise, one row per sample.
  Matrix feature_matrix() const;

  // One label column, aligned with sample order.
  std::vector<TriLabel> labels_for(int attr_index) const;

 private:
  std::vector<Attribute> registry_;
  std::vector<Sample> samples_;
  std::unordered_map<std::string, int> attr_lookup_;
  std::unordered_map<std::string, int> sample_lookup_;
};

// Reads the feature CSV (header `id,f0,...`) and label CSV (header
// `id,source,<attr>...`, cells `1`/`0`/empty). Samples without a label row
// get all-missing labels. An optional box CSV (`id,x,y,w,h,img_w,img_h`)
// attaches face boxes.
Corpus load_corpus(const std::string& features_path, const std::string& labels_path,
                   const std::string& boxes_path = {});

// Inverse of load_corpus; finite floating-point features round-trip bit-exactly.
void save_corpus(const Corpus& corpus, const std::string& features_path,
                 const std::string& labels_path, const std::string& boxes_path = {});

// Union of attribute registries; samples keep their source tags and get
// Missing for attributes their corpus of origin never defined.
Corpus merge(std::span<const Corpus> corpora);

}  // namespace attrprop
