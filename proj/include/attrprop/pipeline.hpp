// File-level orchestration behind the CLI subcommands. Every function reads
// and writes the documented CSV/JSON formats so runs are reproducible and
// byte-comparable.
#pragma once

#include <string>

#include "attrprop/eval.hpp"
#include "attrprop/mrf.hpp"
#include "attrprop/relation.hpp"
#include "attrprop/synth.hpp"

namespace attrprop {

// Loads <dir>/features.csv + labels.csv, and boxes.csv when present.
Corpus load_corpus_dir(const std::string& dir);

// Writes the corpus files plus truth/labels.csv; adds boxes.csv and
// pairs.csv when the config requests pairs.
void run_synth_gen(const SynthConfig& cfg, const std::string& out_dir);

void run_train_classifiers(const std::string& corpus_dir, const TrainConfig& cfg,
                           const std::string& out_bank);

void run_build_graph(const std::string& corpus_dir, int h, int threads,
                     const std::string& out_graph);

// Completed labels: the label schema plus pseudo/posterior columns. With a
// single attribute the extra columns are named `pseudo` and `posterior`;
// otherwise `<attr>_pseudo` and `<attr>_posterior` per attribute.
void write_completed_labels(const Corpus& corpus, const Stage2Result& result,
                            const std::string& path);

struct PropagateSummary {
  int attributes = 0;
  long pseudo_labels = 0;
  int non_converged_runs = 0;  // propagation runs that hit the sweep budget
};

PropagateSummary run_propagate(const std::string& corpus_dir, const std::string& bank_path,
                               const std::string& graph_path, const Stage2Config& cfg,
                               std::uint64_t seed, const std::string& out_labels,
                               const std::string& out_bank = {});

void run_train_relation(const std::string& pairs_path, const std::string& corpus_dir,
                        const RelationTrainConfig& cfg, std::uint64_t seed,
                        const std::string& out_model);

// Predictions CSV `id,trait,probability`; probabilities smoothed over the
// pair-file order with a centered window.
void run_predict_relation(const std::string& pairs_path, const std::string& corpus_dir,
                          const std::string& model_path, int smooth_window,
                          const std::string& out_preds);

// Returns the rendered report (same bytes as the written file).
std::string run_evaluate(const std::string& pred_path, const std::string& truth_path,
                         const ReportConfig& cfg, const std::string& format,
                         const std::string& out_report);

}  // namespace attrprop
