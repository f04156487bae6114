#include "attrprop/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "attrprop/csv.hpp"
#include "attrprop/error.hpp"

namespace attrprop {

namespace fs = std::filesystem;

Corpus load_corpus_dir(const std::string& dir) {
  const fs::path base(dir);
  const fs::path boxes = base / "boxes.csv";
  return load_corpus((base / "features.csv").string(), (base / "labels.csv").string(),
                     fs::exists(boxes) ? boxes.string() : std::string());
}

void run_synth_gen(const SynthConfig& cfg, const std::string& out_dir) {
  const fs::path base(out_dir);
  fs::create_directories(base / "truth");

  SynthCorpus data = gen_corpus(cfg);
  Corpus corpus = data.corpus;

  SynthPairs pair_data;
  if (cfg.pairs.count > 0) {
    pair_data = gen_pairs(cfg, derive_seed(cfg.seed, 0x9a13));
    const Corpus merged_inputs[] = {corpus, pair_data.face_corpus};
    corpus = merge(merged_inputs);
  }

  save_corpus(corpus, (base / "features.csv").string(), (base / "labels.csv").string(),
              cfg.pairs.count > 0 ? (base / "boxes.csv").string() : std::string());

  // Unmasked attribute labels for the generated samples.
  {
    std::ostringstream lab;
    lab << "id,source";
    for (const Attribute& attr : data.corpus.registry()) {
      lab << ',' << attr.id;
    }
    lab << "\n";
    for (std::size_t i = 0; i < data.truth.size(); ++i) {
      const Sample& s = data.corpus.samples()[i];
      lab << s.id << ',' << s.source;
      for (std::uint8_t y : data.truth[i]) {
        lab << ',' << (y ? '1' : '0');
      }
      lab << "\n";
    }
    write_text_file((base / "truth" / "labels.csv").string(), lab.str());
  }

  if (cfg.pairs.count > 0) {
    save_pairs_csv(pair_data.pairs, pair_data.member_ids, (base / "pairs.csv").string());
  }
}

void run_train_classifiers(const std::string& corpus_dir, const TrainConfig& cfg,
                           const std::string& out_bank) {
  const Corpus corpus = load_corpus_dir(corpus_dir);
  const ClassifierBank bank = train_bank(corpus, cfg);
  save_bank_json(bank, out_bank);
}

void run_build_graph(const std::string& corpus_dir, int h, int threads,
                     const std::string& out_graph) {
  const Corpus corpus = load_corpus_dir(corpus_dir);
  const AffinityGraph graph = build_graph(corpus.feature_matrix(), h, threads);
  save_graph_csv(graph, out_graph);
}

void write_completed_labels(const Corpus& corpus, const Stage2Result& result,
                            const std::string& path) {
  const int k = corpus.attribute_count();
  std::ostringstream out;
  out << "id,source";
  for (const Attribute& a : corpus.registry()) {
    out << ',' << a.id;
  }
  if (k == 1) {
    out << ",pseudo,posterior";
  } else {
    for (const Attribute& a : corpus.registry()) {
      out << ',' << a.id << "_pseudo";
    }
    for (const Attribute& a : corpus.registry()) {
      out << ',' << a.id << "_posterior";
    }
  }
  out << "\n";
  for (int i = 0; i < corpus.size(); ++i) {
    const Sample& s = corpus.samples()[static_cast<std::size_t>(i)];
    out << s.id << ',' << s.source;
    for (int a = 0; a < k; ++a) {
      const TriLabel l = result.labels[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
      out << ',';
      if (l == TriLabel::Positive) {
        out << '1';
      } else if (l == TriLabel::Negative) {
        out << '0';
      }
    }
    for (int a = 0; a < k; ++a) {
      out << ','
          << static_cast<int>(result.pseudo[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)]);
    }
    for (int a = 0; a < k; ++a) {
      out << ',';
      const Scalar p = result.posteriors(i, a);
      if (!std::isnan(p)) {
        out << format_double(p);
      }
    }
    out << "\n";
  }
  write_text_file(path, out.str());
}

PropagateSummary run_propagate(const std::string& corpus_dir, const std::string& bank_path,
                               const std::string& graph_path, const Stage2Config& cfg,
                               std::uint64_t seed, const std::string& out_labels,
                               const std::string& out_bank) {
  const Corpus corpus = load_corpus_dir(corpus_dir);
  ClassifierBank bank = load_bank_json(bank_path);
  if (static_cast<int>(bank.attribute_ids.size()) != corpus.attribute_count()) {
    throw_error(ErrorCode::schema_error,
                "bank attribute count does not match the corpus registry");
  }
  for (int a = 0; a < corpus.attribute_count(); ++a) {
    if (bank.attribute_ids[static_cast<std::size_t>(a)] !=
        corpus.registry()[static_cast<std::size_t>(a)].id) {
      throw_error(ErrorCode::schema_error, "bank attribute order does not match the corpus");
    }
  }
  const AffinityGraph graph = load_graph_csv(graph_path);

  const Stage2Result result = stage2_loop(corpus, bank, graph, cfg, seed);
  write_completed_labels(corpus, result, out_labels);
  if (!out_bank.empty()) {
    save_bank_json(result.bank, out_bank);
  }

  PropagateSummary summary;
  summary.attributes = corpus.attribute_count();
  for (const Stage2IterationStats& stats : result.iterations) {
    summary.pseudo_labels = stats.pseudo_labels;
    for (std::uint8_t c : stats.converged) {
      if (!c) {
        summary.non_converged_runs += 1;
      }
    }
  }
  return summary;
}

void run_train_relation(const std::string& pairs_path, const std::string& corpus_dir,
                        const RelationTrainConfig& cfg, std::uint64_t seed,
                        const std::string& out_model) {
  const Corpus corpus = load_corpus_dir(corpus_dir);
  const std::vector<FacePair> pairs = load_pairs_csv(pairs_path, corpus);
  const RelationModel model = train_relation(pairs, cfg, seed);
  save_relation_json(model, out_model);
}

void run_predict_relation(const std::string& pairs_path, const std::string& corpus_dir,
                          const std::string& model_path, int smooth_window,
                          const std::string& out_preds) {
  const Corpus corpus = load_corpus_dir(corpus_dir);
  const std::vector<FacePair> pairs = load_pairs_csv(pairs_path, corpus);
  const RelationModel model = load_relation_json(model_path);

  Matrix probs(static_cast<Eigen::Index>(pairs.size()), kTraitCount);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    probs.row(static_cast<Eigen::Index>(p)) =
        predict_traits(pairs[p].left, pairs[p].right, pairs[p].cue, model).transpose();
  }
  const Matrix smoothed = temporal_smooth(probs, smooth_window);

  std::ostringstream out;
  out << "id,trait,probability\n";
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    for (int t = 0; t < kTraitCount; ++t) {
      out << pairs[p].id << ',' << kTraitNames[static_cast<std::size_t>(t)] << ','
          << format_double(smoothed(static_cast<Eigen::Index>(p), t)) << "\n";
    }
  }
  write_text_file(out_preds, out.str());
}

std::string run_evaluate(const std::string& pred_path, const std::string& truth_path,
                         const ReportConfig& cfg, const std::string& format,
                         const std::string& out_report) {
  const Predictions predictions = load_predictions_csv(pred_path);
  const TruthLabels truth = load_truth_csv(truth_path);
  const std::vector<ReportRow> rows = report(predictions, truth, cfg);
  std::string rendered;
  if (format == "json") {
    rendered = render_report_json(rows);
  } else if (format == "csv") {
    rendered = render_report_csv(rows);
  } else {
    throw_error(ErrorCode::invalid_config, "report format must be csv or json");
  }
  if (!out_report.empty()) {
    write_text_file(out_report, rendered);
  }
  return rendered;
}

}  // namespace attrprop
