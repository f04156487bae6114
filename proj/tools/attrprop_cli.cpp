// attrprop command-line front end.
//
// Subcommands cover the full pipeline: synthetic data generation, stage-1
// classifier training, affinity graph construction, label propagation,
// relation-head training/prediction, and evaluation. All randomness flows
// from the per-subcommand --seed flag; reruns with identical inputs produce
// byte-identical outputs regardless of --threads.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "attrprop/error.hpp"
#include "attrprop/parallel.hpp"
#include "attrprop/pipeline.hpp"

namespace {

using namespace attrprop;

struct CommonTrainFlags {
  int epochs = 30;
  int batch = 32;
  double lr = 1e-3;
  double momentum = 0.9;
  double decay = 1e-4;
};

void add_train_flags(CLI::App* cmd, CommonTrainFlags& flags) {
  cmd->add_option("--epochs", flags.epochs, "SGD epochs");
  cmd->add_option("--batch", flags.batch, "mini-batch size");
  cmd->add_option("--lr", flags.lr, "learning rate");
  cmd->add_option("--momentum", flags.momentum, "momentum coefficient");
  cmd->add_option("--decay", flags.decay, "L2 weight decay");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attribute propagation and relation-trait pipeline"};
  app.set_help_flag("--help", "print help");  // keeps -h free for build-graph --h
  app.require_subcommand(1);
  int threads = default_thread_count();
  app.add_option("--threads", threads, "worker thread cap (results are thread-count invariant)");

  // synth-gen
  auto* synth_cmd = app.add_subcommand("synth-gen", "generate a synthetic corpus");
  std::string synth_config, synth_out;
  synth_cmd->add_option("--config", synth_config, "synthetic config JSON")->required();
  synth_cmd->add_option("--out", synth_out, "output directory")->required();

  // train-classifiers
  auto* train_cmd = app.add_subcommand("train-classifiers", "stage-1 per-attribute training");
  std::string train_corpus, train_out;
  CommonTrainFlags train_flags;
  std::uint64_t train_seed = 0;
  bool train_class_weighting = false;
  train_cmd->add_option("--corpus", train_corpus, "corpus directory")->required();
  train_cmd->add_option("--out", train_out, "output bank JSON")->required();
  train_cmd->add_option("--seed", train_seed, "RNG seed");
  train_cmd->add_flag("--class-weighting", train_class_weighting,
                      "inverse-frequency sample weighting");
  add_train_flags(train_cmd, train_flags);

  // build-graph
  auto* graph_cmd = app.add_subcommand("build-graph", "locally-scaled kNN affinity graph");
  graph_cmd->set_help_flag("--help", "print help");
  std::string graph_corpus, graph_out;
  int graph_h = 10;
  graph_cmd->add_option("--corpus", graph_corpus, "corpus directory")->required();
  graph_cmd->add_option("--h", graph_h, "neighbor count");
  graph_cmd->add_option("--out", graph_out, "output graph CSV")->required();

  // propagate
  auto* prop_cmd = app.add_subcommand("propagate", "alternating propagation + retraining");
  std::string prop_corpus, prop_bank, prop_graph, prop_out, prop_out_bank;
  CommonTrainFlags prop_flags;
  prop_flags.epochs = 10;  // per-iteration refinement epochs
  int prop_m = 10, prop_k_init = 10, prop_max_sweeps = 50;
  double prop_tol = 1e-4;
  std::uint64_t prop_seed = 0;
  bool prop_deterministic = false, prop_full_cov = false;
  prop_cmd->add_option("--corpus", prop_corpus, "corpus directory")->required();
  prop_cmd->add_option("--bank", prop_bank, "stage-1 bank JSON")->required();
  prop_cmd->add_option("--graph", prop_graph, "graph CSV")->required();
  prop_cmd->add_option("--M", prop_m, "outer alternating iterations");
  prop_cmd->add_option("--seed", prop_seed, "RNG seed");
  prop_cmd->add_option("--out", prop_out, "completed labels CSV")->required();
  prop_cmd->add_option("--out-bank", prop_out_bank, "refreshed bank JSON");
  prop_cmd->add_option("--k-init", prop_k_init, "kNN initialization neighbor count");
  prop_cmd->add_option("--tol", prop_tol, "posterior convergence tolerance");
  prop_cmd->add_option("--max-sweeps", prop_max_sweeps, "mean-field sweep budget");
  prop_cmd->add_flag("--deterministic", prop_deterministic,
                     "argmax labels instead of posterior simulation");
  prop_cmd->add_flag("--full-cov", prop_full_cov, "full ridge-regularized covariances");
  add_train_flags(prop_cmd, prop_flags);

  // train-relation
  auto* rel_cmd = app.add_subcommand("train-relation", "train the pairwise relation head");
  std::string rel_pairs, rel_corpus, rel_out;
  CommonTrainFlags rel_flags;
  int rel_k = 256;
  std::uint64_t rel_seed = 0;
  bool rel_no_spatial = false, rel_tanh = false;
  rel_cmd->add_option("--pairs", rel_pairs, "pair CSV")->required();
  rel_cmd->add_option("--corpus", rel_corpus, "corpus directory")->required();
  rel_cmd->add_option("--out", rel_out, "output model JSON")->required();
  rel_cmd->add_option("--k", rel_k, "fused representation dimension");
  rel_cmd->add_option("--seed", rel_seed, "RNG seed");
  rel_cmd->add_flag("--no-spatial-cues", rel_no_spatial, "zero the spatial cues while training");
  rel_cmd->add_flag("--tanh-fusion", rel_tanh, "elementwise tanh after the projection");
  add_train_flags(rel_cmd, rel_flags);

  // predict-relation
  auto* pred_cmd = app.add_subcommand("predict-relation", "predict trait probabilities");
  std::string pred_pairs, pred_corpus, pred_model, pred_out;
  int pred_smooth = 1;
  pred_cmd->add_option("--pairs", pred_pairs, "pair CSV")->required();
  pred_cmd->add_option("--corpus", pred_corpus, "corpus directory")->required();
  pred_cmd->add_option("--model", pred_model, "relation model JSON")->required();
  pred_cmd->add_option("--smooth", pred_smooth, "odd moving-average window (1 = off)");
  pred_cmd->add_option("--out", pred_out, "output predictions CSV")->required();

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "balanced/overall accuracy report");
  std::string eval_pred, eval_truth, eval_out, eval_format = "csv", eval_mode = "threshold";
  double eval_threshold = 0.5;
  eval_cmd->add_option("--pred", eval_pred, "prediction CSV")->required();
  eval_cmd->add_option("--truth", eval_truth, "truth CSV")->required();
  eval_cmd->add_option("--out", eval_out, "output report path");
  eval_cmd->add_option("--threshold", eval_threshold, "positive-decision threshold");
  eval_cmd->add_option("--format", eval_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  eval_cmd->add_option("--mode", eval_mode, "threshold or argmax")
      ->check(CLI::IsMember({"threshold", "argmax"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) {
      run_synth_gen(load_synth_config_json(synth_config), synth_out);
      std::cout << "wrote corpus to " << synth_out << "\n";
    } else if (*train_cmd) {
      TrainConfig cfg;
      cfg.epochs = train_flags.epochs;
      cfg.batch_size = train_flags.batch;
      cfg.learning_rate = train_flags.lr;
      cfg.momentum = train_flags.momentum;
      cfg.weight_decay = train_flags.decay;
      cfg.class_weighting = train_class_weighting;
      cfg.threads = threads;
      cfg.seed = train_seed;
      run_train_classifiers(train_corpus, cfg, train_out);
      std::cout << "wrote bank to " << train_out << "\n";
    } else if (*graph_cmd) {
      run_build_graph(graph_corpus, graph_h, threads, graph_out);
      std::cout << "wrote graph to " << graph_out << "\n";
    } else if (*prop_cmd) {
      Stage2Config cfg;
      cfg.M = prop_m;
      cfg.retrain.epochs = prop_flags.epochs;
      cfg.retrain.batch_size = prop_flags.batch;
      cfg.retrain.learning_rate = prop_flags.lr;
      cfg.retrain.momentum = prop_flags.momentum;
      cfg.retrain.weight_decay = prop_flags.decay;
      cfg.retrain.seed = prop_seed;
      cfg.propagate.k_init = prop_k_init;
      cfg.propagate.tol = prop_tol;
      cfg.propagate.max_sweeps = prop_max_sweeps;
      cfg.propagate.stochastic = !prop_deterministic;
      cfg.propagate.em.full_cov = prop_full_cov;
      cfg.threads = threads;
      const PropagateSummary summary =
          run_propagate(prop_corpus, prop_bank, prop_graph, cfg, prop_seed, prop_out,
                        prop_out_bank);
      if (summary.non_converged_runs > 0) {
        std::cerr << "warning: " << summary.non_converged_runs
                  << " propagation run(s) hit the sweep budget before the posterior "
                     "converged\n";
      }
      std::cout << "wrote completed labels to " << prop_out << " (" << summary.pseudo_labels
                << " pseudo labels)\n";
    } else if (*rel_cmd) {
      RelationTrainConfig cfg;
      cfg.fused_dim = rel_k;
      cfg.epochs = rel_flags.epochs;
      cfg.batch_size = rel_flags.batch;
      cfg.learning_rate = rel_flags.lr;
      cfg.momentum = rel_flags.momentum;
      cfg.weight_decay = rel_flags.decay;
      cfg.use_spatial_cues = !rel_no_spatial;
      cfg.fusion = rel_tanh ? Fusion::Tanh : Fusion::Linear;
      cfg.seed = rel_seed;
      run_train_relation(rel_pairs, rel_corpus, cfg, rel_seed, rel_out);
      std::cout << "wrote relation model to " << rel_out << "\n";
    } else if (*pred_cmd) {
      run_predict_relation(pred_pairs, pred_corpus, pred_model, pred_smooth, pred_out);
      std::cout << "wrote predictions to " << pred_out << "\n";
    } else if (*eval_cmd) {
      ReportConfig cfg;
      cfg.threshold = eval_threshold;
      cfg.argmax_mode = eval_mode == "argmax";
      const std::string rendered = run_evaluate(eval_pred, eval_truth, cfg, eval_format, eval_out);
      std::cout << rendered;
    }
  } catch (const Error& e) {
    std::cerr << "error[E" << static_cast<int>(e.code()) << " " << error_code_name(e.code())
              << "]: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
