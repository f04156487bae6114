#include "attrprop/data_model.hpp"

#include <filesystem>
#include <sstream>

#include "attrprop/csv.hpp"
#include "attrprop/error.hpp"

namespace attrprop {

Corpus::Corpus(std::vector<Attribute> registry, std::vector<Sample> samples)
    : registry_(std::move(registry)), samples_(std::move(samples)) {
  for (std::size_t a = 0; a < registry_.size(); ++a) {
    registry_[a].index = static_cast<int>(a);
    auto [it, inserted] = attr_lookup_.emplace(registry_[a].id, static_cast<int>(a));
    if (!inserted) {
      throw_error(ErrorCode::duplicate_id, "duplicate attribute id: " + registry_[a].id);
    }
  }
  const int d = samples_.empty() ? 0 : static_cast<int>(samples_.front().features.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const Sample& s = samples_[i];
    if (static_cast<int>(s.features.size()) != d) {
      throw_error(ErrorCode::dimension_mismatch,
                  "sample '" + s.id + "' has feature dimension " +
                      std::to_string(s.features.size()) + ", expected " + std::to_string(d));
    }
    if (s.labels.size() != registry_.size()) {
      throw_error(ErrorCode::schema_error,
                  "sample '" + s.id + "' carries " + std::to_string(s.labels.size()) +
                      " labels for a registry of " + std::to_string(registry_.size()));
    }
    auto [it, inserted] = sample_lookup_.emplace(s.id, static_cast<int>(i));
    if (!inserted) {
      throw_error(ErrorCode::duplicate_id, "duplicate sample id: " + s.id);
    }
  }
}

int Corpus::attribute_index(std::string_view id) const {
  auto it = attr_lookup_.find(std::string(id));
  return it == attr_lookup_.end() ? -1 : it->second;
}

int Corpus::sample_index(std::string_view id) const {
  auto it = sample_lookup_.find(std::string(id));
  return it == sample_lookup_.end() ? -1 : it->second;
}

Matrix Corpus::feature_matrix() const {
  Matrix X(size(), feature_dim());
  for (int i = 0; i < size(); ++i) {
    X.row(i) = samples_[static_cast<std::size_t>(i)].features.transpose();
  }
  return X;
}

std::vector<TriLabel> Corpus::labels_for(int attr_index) const {
  std::vector<TriLabel> column(samples_.size(), TriLabel::Missing);
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    column[i] = samples_[i].labels[static_cast<std::size_t>(attr_index)];
  }
  return column;
}

namespace {

TriLabel parse_label_cell(const std::string& cell, const std::string& context) {
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

}  // namespace

Corpus load_corpus(const std::string& features_path, const std::string& labels_path,
                   const std::string& boxes_path) {
  const CsvTable feat = read_csv(features_path);
  if (feat.header.empty() || feat.header[0] != "id") {
    throw_error(ErrorCode::schema_error, "feature file must start with an 'id' column: " + features_path);
  }
  const int d = static_cast<int>(feat.header.size()) - 1;

  std::vector<Sample> samples;
  samples.reserve(feat.rows.size());
  for (const auto& row : feat.rows) {
    if (static_cast<int>(row.size()) - 1 != d) {
      throw_error(ErrorCode::dimension_mismatch,
                  "feature row '" + (row.empty() ? std::string() : row[0]) + "' has " +
                      std::to_string(row.size() - 1) + " values, expected " + std::to_string(d));
    }
    Sample s;
    s.id = row[0];
    s.features.resize(d);
    for (int j = 0; j < d; ++j) {
      s.features[j] = parse_double(row[static_cast<std::size_t>(j) + 1],
                                   "feature row '" + s.id + "'");
    }
    samples.push_back(std::move(s));
  }

  const CsvTable lab = read_csv(labels_path);
  if (lab.header.size() < 2 || lab.header[0] != "id" || lab.header[1] != "source") {
    throw_error(ErrorCode::schema_error,
                "label file must start with 'id,source' columns: " + labels_path);
  }
  std::vector<Attribute> registry;
  for (std::size_t c = 2; c < lab.header.size(); ++c) {
    registry.push_back({lab.header[c], static_cast<int>(c - 2)});
  }

  std::unordered_map<std::string, int> sample_pos;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i].labels.assign(registry.size(), TriLabel::Missing);
    sample_pos.emplace(samples[i].id, static_cast<int>(i));
  }

  for (const auto& row : lab.rows) {
    if (row.size() != lab.header.size()) {
      throw_error(ErrorCode::schema_error,
                  "label row '" + (row.empty() ? std::string() : row[0]) + "' has " +
                      std::to_string(row.size()) + " cells, expected " +
                      std::to_string(lab.header.size()));
    }
    auto it = sample_pos.find(row[0]);
    if (it == sample_pos.end()) {
      throw_error(ErrorCode::schema_error,
                  "label row references unknown sample id '" + row[0] + "'");
    }
    Sample& s = samples[static_cast<std::size_t>(it->second)];
    s.source = row[1];
    for (std::size_t c = 2; c < row.size(); ++c) {
      s.labels[c - 2] = parse_label_cell(row[c], "label row '" + s.id + "'");
    }
  }

  if (!boxes_path.empty()) {
    const CsvTable box = read_csv(boxes_path);
    const std::vector<std::string> expected = {"id", "x", "y", "w", "h", "img_w", "img_h"};
    if (box.header != expected) {
      throw_error(ErrorCode::schema_error, "box file header must be id,x,y,w,h,img_w,img_h");
    }
    for (const auto& row : box.rows) {
      if (row.size() != expected.size()) {
        throw_error(ErrorCode::schema_error, "malformed box row in " + boxes_path);
      }
      auto it = sample_pos.find(row[0]);
      if (it == sample_pos.end()) {
        throw_error(ErrorCode::schema_error,
                    "box row references unknown sample id '" + row[0] + "'");
      }
      FaceBox b;
      b.x = parse_double(row[1], "box row");
      b.y = parse_double(row[2], "box row");
      b.w = parse_double(row[3], "box row");
      b.h = parse_double(row[4], "box row");
      b.img_w = parse_double(row[5], "box row");
      b.img_h = parse_double(row[6], "box row");
      samples[static_cast<std::size_t>(it->second)].box = b;
    }
  }

  return Corpus(std::move(registry), std::move(samples));
}

void save_corpus(const Corpus& corpus, const std::string& features_path,
                 const std::string& labels_path, const std::string& boxes_path) {
  std::ostringstream feat;
  feat << "id";
  for (int j = 0; j < corpus.feature_dim(); ++j) {
    feat << ",f" << j;
  }
  feat << "\n";
  for (const Sample& s : corpus.samples()) {
    feat << s.id;
    for (int j = 0; j < s.features.size(); ++j) {
      feat << ',' << format_double(s.features[j]);
    }
    feat << "\n";
  }
  write_text_file(features_path, feat.str());

  std::ostringstream lab;
  lab << "id,source";
  for (const Attribute& a : corpus.registry()) {
    lab << ',' << a.id;
  }
  lab << "\n";
  for (const Sample& s : corpus.samples()) {
    lab << s.id << ',' << s.source;
    for (TriLabel l : s.labels) {
      lab << ',';
      if (l == TriLabel::Positive) {
        lab << '1';
      } else if (l == TriLabel::Negative) {
        lab << '0';
      }
    }
    lab << "\n";
  }
  write_text_file(labels_path, lab.str());

  if (!boxes_path.empty()) {
    std::ostringstream box;
    box << "id,x,y,w,h,img_w,img_h\n";
    for (const Sample& s : corpus.samples()) {
      if (!s.box) {
        continue;
      }
      box << s.id << ',' << format_double(s.box->x) << ',' << format_double(s.box->y) << ','
          << format_double(s.box->w) << ',' << format_double(s.box->h) << ','
          << format_double(s.box->img_w) << ',' << format_double(s.box->img_h) << "\n";
    }
    write_text_file(boxes_path, box.str());
  }
}

Corpus merge(std::span<const Corpus> corpora) {
  std::vector<Attribute> registry;
  std::unordered_map<std::string, int> attr_pos;
  int d = -1;
  for (const Corpus& c : corpora) {
    if (c.size() > 0) {
      if (d < 0) {
        d = c.feature_dim();
      } else if (c.feature_dim() != d) {
        throw_error(ErrorCode::dimension_mismatch,
                    "cannot merge corpora with feature dimensions " + std::to_string(d) +
                        " and " + std::to_string(c.feature_dim()));
      }
    }
    for (const Attribute& a : c.registry()) {
      if (attr_pos.emplace(a.id, static_cast<int>(registry.size())).second) {
        registry.push_back({a.id, static_cast<int>(registry.size())});
      }
    }
  }

  std::vector<Sample> samples;
  for (const Corpus& c : corpora) {
    for (const Sample& s : c.samples()) {
      Sample out = s;
      out.labels.assign(registry.size(), TriLabel::Missing);
      for (const Attribute& a : c.registry()) {
        out.labels[static_cast<std::size_t>(attr_pos.at(a.id))] =
            s.labels[static_cast<std::size_t>(a.index)];
      }
      samples.push_back(std::move(out));
    }
  }
  return Corpus(std::move(registry), std::move(samples));
}

}  // namespace attrprop
