#include "attrprop/eval.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "attrprop/csv.hpp"
#include "attrprop/error.hpp"
#include "attrprop/relation.hpp"

namespace attrprop {

Scalar balanced_accuracy(const BinaryCounts& counts) {
  if (counts.positives <= 0 || counts.negatives <= 0) {
    throw_error(ErrorCode::one_class_absent,
                "balanced accuracy needs both classes, got N_p=" +
                    std::to_string(counts.positives) +
                    ", N_n=" + std::to_string(counts.negatives));
  }
  return Scalar(0.5) * (static_cast<Scalar>(counts.true_positives) /
                            static_cast<Scalar>(counts.positives) +
                        static_cast<Scalar>(counts.true_negatives) /
                            static_cast<Scalar>(counts.negatives));
}

Scalar overall_accuracy(const BinaryCounts& counts) {
  const std::int64_t total = counts.positives + counts.negatives;
  if (total <= 0) {
    throw_error(ErrorCode::empty_set, "overall accuracy over an empty set");
  }
  return static_cast<Scalar>(counts.true_positives + counts.true_negatives) /
         static_cast<Scalar>(total);
}

std::vector<ReportRow> report(const Predictions& predictions, const TruthLabels& truth,
                              const ReportConfig& cfg) {
  // Names evaluated: truth column order restricted to predicted names.
  std::vector<std::string> names;
  for (const std::string& name : truth.name_order) {
    if (predictions.values.count(name) > 0) {
      names.push_back(name);
    }
  }

  // In argmax mode a prediction is positive only where it is the per-id
  // maximum across the evaluated names.
  std::map<std::string, std::string> argmax_name;
  if (cfg.argmax_mode) {
    std::map<std::string, Scalar> best;
    for (const std::string& name : names) {
      for (const auto& [id, prob] : predictions.values.at(name)) {
        auto it = best.find(id);
        if (it == best.end() || prob > it->second) {
          best[id] = prob;
          argmax_name[id] = name;
        }
      }
    }
  }

  std::vector<ReportRow> rows;
  long matched = 0;
  for (const std::string& name : names) {
    const auto& preds = predictions.values.at(name);
    const auto& truths = truth.values.at(name);
    ReportRow row;
    row.name = name;
    for (const auto& [id, label] : truths) {
      if (!is_annotated(label)) {
        continue;
      }
      auto it = preds.find(id);
      if (it == preds.end()) {
        continue;
      }
      ++matched;
      const bool predicted_positive = cfg.argmax_mode
                                          ? argmax_name[id] == name
                                          : it->second >= cfg.threshold;
      if (label == TriLabel::Positive) {
        row.counts.positives += 1;
        row.counts.true_positives += predicted_positive ? 1 : 0;
      } else {
        row.counts.negatives += 1;
        row.counts.true_negatives += predicted_positive ? 0 : 1;
      }
    }
    rows.push_back(std::move(row));
  }
  if (matched == 0) {
    throw_error(ErrorCode::id_mismatch, "no (id, name) pair is shared by predictions and truth");
  }
  for (ReportRow& row : rows) {
    row.balanced = (row.counts.positives > 0 && row.counts.negatives > 0)
                       ? balanced_accuracy(row.counts)
                       : std::numeric_limits<Scalar>::quiet_NaN();
    row.overall = (row.counts.positives + row.counts.negatives) > 0
                      ? overall_accuracy(row.counts)
                      : std::numeric_limits<Scalar>::quiet_NaN();
  }
  return rows;
}

std::string render_report_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  out << "name,N_p,N_n,n_p,n_n,balanced_acc,overall_acc\n";
  for (const ReportRow& row : rows) {
    out << row.name << ',' << row.counts.positives << ',' << row.counts.negatives << ','
        << row.counts.true_positives << ',' << row.counts.true_negatives << ','
        << (std::isnan(row.balanced) ? "nan" : format_double(row.balanced)) << ','
        << (std::isnan(row.overall) ? "nan" : format_double(row.overall)) << "\n";
  }
  return out.str();
}

std::string render_report_json(const std::vector<ReportRow>& rows) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const ReportRow& row : rows) {
    nlohmann::ordered_json entry;
    entry["name"] = row.name;
    entry["N_p"] = row.counts.positives;
    entry["N_n"] = row.counts.negatives;
    entry["n_p"] = row.counts.true_positives;
    entry["n_n"] = row.counts.true_negatives;
    if (std::isnan(row.balanced)) {
      entry["balanced_acc"] = nullptr;
    } else {
      entry["balanced_acc"] = row.balanced;
    }
    if (std::isnan(row.overall)) {
      entry["overall_acc"] = nullptr;
    } else {
      entry["overall_acc"] = row.overall;
    }
    doc.push_back(std::move(entry));
  }
  return doc.dump(2) + "\n";
}

namespace {

bool looks_like_label_schema(const std::vector<std::string>& header) {
  return header.size() >= 2 && header[0] == "id" && header[1] == "source";
}

bool looks_like_pair_schema(const std::vector<std::string>& header) {
  return header.size() >= 3 && header[0] == "id" && header[1] == "left_id" &&
         header[2] == "right_id";
}

TriLabel parse_tri(const std::string& cell, const std::string& context) {
  if (cell.empty()) {
    return TriLabel::Missing;
  }
  if (cell == "1") {
    return TriLabel::Positive;
  }
  if (cell == "0") {
    return TriLabel::Negative;
  }
  throw_error(ErrorCode::schema_error, "unknown label value '" + cell + "' in " + context);
}

// Wide files may carry trailing pseudo/posterior columns next to the label
// columns; treat only the remaining columns as names.
bool is_auxiliary_column(const std::string& name) {
  return name == "pseudo" || name == "posterior" || name.ends_with("_pseudo") ||
         name.ends_with("_posterior");
}

}  // namespace

Predictions load_predictions_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  Predictions out;
  if (table.header.size() == 3 && table.header[0] == "id" && table.header[2] == "probability") {
    const std::string& name_col = table.header[1];
    for (const auto& row : table.rows) {
      if (row.size() != 3) {
        throw_error(ErrorCode::schema_error, "malformed prediction row in " + path);
      }
      out.values[row[1]][row[0]] = parse_double(row[2], "prediction row '" + row[0] + "'");
    }
    (void)name_col;
    return out;
  }
  if (looks_like_label_schema(table.header) || looks_like_pair_schema(table.header)) {
    const std::size_t first_name = looks_like_label_schema(table.header) ? 2 : 3;
    for (const auto& row : table.rows) {
      if (row.size() != table.header.size()) {
        throw_error(ErrorCode::schema_error, "malformed prediction row in " + path);
      }
      for (std::size_t c = first_name; c < table.header.size(); ++c) {
        if (is_auxiliary_column(table.header[c])) {
          continue;
        }
        const TriLabel label = parse_tri(row[c], "prediction row '" + row[0] + "'");
        if (is_annotated(label)) {
          out.values[table.header[c]][row[0]] = label == TriLabel::Positive ? 1 : 0;
        }
      }
    }
    return out;
  }
  throw_error(ErrorCode::schema_error,
              "prediction file must be id,<name>,probability or a label/pair table: " + path);
}

TruthLabels load_truth_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  TruthLabels out;
  std::size_t first_name = 0;
  if (looks_like_label_schema(table.header)) {
    first_name = 2;
  } else if (looks_like_pair_schema(table.header)) {
    first_name = 3;
  } else {
    throw_error(ErrorCode::schema_error,
                "truth file must use the label or pair schema: " + path);
  }
  for (std::size_t c = first_name; c < table.header.size(); ++c) {
    if (!is_auxiliary_column(table.header[c])) {
      out.name_order.push_back(table.header[c]);
      out.values[table.header[c]];
    }
  }
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) {
      throw_error(ErrorCode::schema_error, "malformed truth row in " + path);
    }
    for (std::size_t c = first_name; c < table.header.size(); ++c) {
      if (is_auxiliary_column(table.header[c])) {
        continue;
      }
      out.values[table.header[c]][row[0]] = parse_tri(row[c], "truth row '" + row[0] + "'");
    }
  }
  return out;
}

}  // namespace attrprop
