// Balanced/overall accuracy metrics and prediction-vs-truth reports.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "attrprop/data_model.hpp"
#include "attrprop/types.hpp"

namespace attrprop {

struct BinaryCounts {
  std::int64_t positives = 0;       // ground-truth positives N_p
  std::int64_t negatives = 0;       // ground-truth negatives N_n
  std::int64_t true_positives = 0;  // n_p
  std::int64_t true_negatives = 0;  // n_n
};

// 0.5 * (n_p/N_p + n_n/N_n); both classes must be present.
Scalar balanced_accuracy(const BinaryCounts& counts);

// (n_p + n_n) / (N_p + N_n); the set must be nonempty.
Scalar overall_accuracy(const BinaryCounts& counts);

// name -> (id -> probability). std::map keeps iteration deterministic.
struct Predictions {
  std::map<std::string, std::map<std::string, Scalar>> values;
};

// name -> (id -> tri-state truth); Missing rows are excluded from counts.
struct TruthLabels {
  std::vector<std::string> name_order;  // column order of the source file
  std::map<std::string, std::map<std::string, TriLabel>> values;
};

struct ReportRow {
  std::string name;
  BinaryCounts counts;
  Scalar balanced = 0;  // NaN when one truth class is absent
  Scalar overall = 0;
};

struct ReportConfig {
  Scalar threshold = 0.5;
  // Multiclass-style decision: per id, only the name with the highest
  // probability is predicted positive.
  bool argmax_mode = false;
};

// One row per name appearing in both inputs, in truth column order. Throws
// id_mismatch when no (id, name) pair overlaps at all.
std::vector<ReportRow> report(const Predictions& predictions, const TruthLabels& truth,
                              const ReportConfig& cfg = {});

// CSV `name,N_p,N_n,n_p,n_n,balanced_acc,overall_acc` (or a JSON array).
std::string render_report_csv(const std::vector<ReportRow>& rows);
std::string render_report_json(const std::vector<ReportRow>& rows);

// Long form `id,<name column>,probability` (e.g. relation predictions), or a
// wide label-schema file whose 0/1 cells are taken as hard predictions.
Predictions load_predictions_csv(const std::string& path);

// Label-schema file (`id,source,<attr>...`, extra pseudo/posterior columns
// ignored) or pair-schema file (`id,left_id,right_id,<trait>...`).
TruthLabels load_truth_csv(const std::string& path);

}  // namespace attrprop
