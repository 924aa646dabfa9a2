#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lisor/cluster.hpp"
#include "lisor/errors.hpp"
#include "lisor/experiment.hpp"
#include "lisor/export.hpp"

namespace fs = std::filesystem;
using namespace lisor;
using ordered_json = nlohmann::ordered_json;

namespace {

// Command-line overrides for ExperimentConfig. Unset flags keep the base
// config's value.
struct ConfigFlags {
  std::string config_path;
  std::optional<std::string> task;
  std::vector<std::string> kinds;
  std::optional<std::size_t> d_emb, hidden, layers;
  std::optional<double> lr;
  std::optional<std::size_t> epochs, batch_size, min_epochs;
  std::optional<double> init_scale, early_stop_acc, clip_norm;
  std::optional<std::string> method;
  std::optional<std::size_t> k_min, k_max, n_trials;
  std::optional<double> target_accuracy;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<std::size_t> n_train, n_valid, n_test, min_len, max_len;
  std::optional<std::size_t> trace_layer;
  std::optional<double> position_scale;
};

void add_config_flags(CLI::App* app, ConfigFlags& f) {
  const ExperimentConfig a = default_config("0110");
  const ExperimentConfig b = default_config("000");
  auto both = [](auto x, auto y) {
    std::ostringstream o;
    o << "0110: " << x << ", 000: " << y;
    return o.str();
  };
  app->add_option("--config", f.config_path, "JSON config; flags below override its fields")
      ->check(CLI::ExistingFile);
  app->add_option("--task", f.task, "Task name: 0110 or 000")->default_str("0110");
  app->add_option("--kinds", f.kinds, "Cell kinds")->default_str("MGU SRN GRU LSTM")->delimiter(',');
  app->add_option("--d-emb", f.d_emb, "Embedding width")->default_str(std::to_string(a.dims.d_emb));
  app->add_option("--hidden", f.hidden, "Hidden units per layer")->default_str(std::to_string(a.dims.hidden));
  app->add_option("--layers", f.layers, "Stacked layers")->default_str(std::to_string(a.dims.layers));
  app->add_option("--lr", f.lr, "Adam learning rate")->default_str(std::to_string(a.hyper.learning_rate));
  app->add_option("--epochs", f.epochs, "Maximum epochs")->default_str(both(a.hyper.epochs, b.hyper.epochs));
  app->add_option("--batch-size", f.batch_size, "Minibatch size")->default_str(std::to_string(a.hyper.batch_size));
  app->add_option("--min-epochs", f.min_epochs, "Epochs before early stopping may trigger")
      ->default_str(both(a.hyper.min_epochs, b.hyper.min_epochs));
  app->add_option("--init-scale", f.init_scale, "Weights drawn from U(-s, s)")
      ->default_str(std::to_string(a.hyper.init_scale));
  app->add_option("--early-stop-acc", f.early_stop_acc, "Stop once training accuracy reaches this")
      ->default_str(std::to_string(a.hyper.early_stop_acc));
  app->add_option("--clip-norm", f.clip_norm, "Global gradient-norm clip, <= 0 disables")
      ->default_str(std::to_string(a.hyper.clip_norm));
  app->add_option("--method", f.method, "LISOR-k (kmeans++) or LISOR-x (kmeans-x)")->default_str("LISOR-k");
  app->add_option("--k-min", f.k_min, "Smallest k swept")->default_str(std::to_string(a.k_min));
  app->add_option("--k-max", f.k_max, "Largest k swept")->default_str(both(a.k_max, b.k_max));
  app->add_option("--n-trials", f.n_trials, "Trials per kind")->default_str(std::to_string(a.n_trials));
  app->add_option("--target-accuracy", f.target_accuracy, "FSA accuracy defining min_k")
      ->default_str(both(a.target_accuracy, b.target_accuracy));
  app->add_option("--seed", f.seed, "Base seed; trial t uses seed + t")->default_str(std::to_string(a.seed));
  app->add_option("--output-dir", f.output_dir, "Run directory")->default_str(both(a.output_dir, b.output_dir));
  app->add_option("--n-train", f.n_train, "Training sequences")->default_str(both(a.n_train, b.n_train));
  app->add_option("--n-valid", f.n_valid, "Validation sequences (000 only)")->default_str(std::to_string(b.n_valid));
  app->add_option("--n-test", f.n_test, "Test sequences")->default_str(both(a.n_test, b.n_test));
  app->add_option("--min-len", f.min_len, "Shortest sequence (000 only)")->default_str(std::to_string(b.min_len));
  app->add_option("--max-len", f.max_len, "Longest sequence (000 only)")->default_str(std::to_string(b.max_len));
  app->add_option("--trace-layer", f.trace_layer, "Layer whose hidden states are clustered")->default_str("top");
  app->add_option("--position-scale", f.position_scale, "Scale of the LISOR-x position feature")
      ->default_str(std::to_string(a.position_scale));
}

template <class T, class U>
void set_if(const std::optional<T>& v, U& out) {
  if (v) out = *v;
}

// Base config: --config, else the config recorded in the run directory when
// `use_recorded`, else the task defaults. Flags are applied on top.
ExperimentConfig resolve_config(const ConfigFlags& f, bool use_recorded) {
  ExperimentConfig cfg;
  if (!f.config_path.empty()) {
    cfg = load_config(f.config_path);
  } else {
    cfg = default_config(f.task.value_or("0110"));
    if (f.output_dir) cfg.output_dir = *f.output_dir;
    const fs::path recorded = fs::path(cfg.output_dir) / "config.json";
    if (use_recorded && fs::exists(recorded)) cfg = load_config(recorded.string());
  }
  set_if(f.task, cfg.task);
  if (!f.kinds.empty()) {
    cfg.kinds.clear();
    for (const auto& k : f.kinds) cfg.kinds.push_back(parse_cell_kind(k));
  }
  set_if(f.d_emb, cfg.dims.d_emb);
  set_if(f.hidden, cfg.dims.hidden);
  set_if(f.layers, cfg.dims.layers);
  set_if(f.lr, cfg.hyper.learning_rate);
  set_if(f.epochs, cfg.hyper.epochs);
  set_if(f.batch_size, cfg.hyper.batch_size);
  set_if(f.min_epochs, cfg.hyper.min_epochs);
  set_if(f.init_scale, cfg.hyper.init_scale);
  set_if(f.early_stop_acc, cfg.hyper.early_stop_acc);
  set_if(f.clip_norm, cfg.hyper.clip_norm);
  if (f.method) cfg.method = parse_cluster_method(*f.method);
  set_if(f.k_min, cfg.k_min);
  set_if(f.k_max, cfg.k_max);
  set_if(f.n_trials, cfg.n_trials);
  set_if(f.target_accuracy, cfg.target_accuracy);
  set_if(f.seed, cfg.seed);
  set_if(f.output_dir, cfg.output_dir);
  set_if(f.n_train, cfg.n_train);
  set_if(f.n_valid, cfg.n_valid);
  set_if(f.n_test, cfg.n_test);
  set_if(f.min_len, cfg.min_len);
  set_if(f.max_len, cfg.max_len);
  if (f.trace_layer) cfg.trace_layer = *f.trace_layer;
  set_if(f.position_scale, cfg.position_scale);
  validate(cfg);
  return cfg;
}

Dataset obtain_dataset(const ExperimentConfig& cfg, bool create) {
  const fs::path path = dataset_path(cfg);
  if (fs::exists(path)) return load_dataset(path.string());
  if (!create) throw Error("dataset '" + path.string() + "' not found; run gen-data first");
  Dataset ds = make_dataset(cfg);
  fs::create_directories(path.parent_path());
  save_dataset(path.string(), ds);
  return ds;
}

void print_class_balance(const Dataset& ds) {
  std::printf("positive rate: train %.4f, validation %.4f, test %.4f\n", positive_rate(ds.train),
              positive_rate(ds.validation), positive_rate(ds.test));
}

std::vector<Symbol> parse_tokens(const std::string& text, const Alphabet& alphabet) {
  std::vector<std::string> parts;
  if (text.find(',') != std::string::npos || text.find(' ') != std::string::npos) {
    std::string cur;
    for (char ch : text) {
      if (ch == ',' || ch == ' ') {
        if (!cur.empty()) parts.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    if (!cur.empty()) parts.push_back(cur);
  } else {
    // Single-character alphabets allow "0110".
    for (char ch : text) parts.emplace_back(1, ch);
  }
  std::vector<Symbol> out;
  for (const auto& p : parts) out.push_back(alphabet.index(p));
  return out;
}

std::string compact(const std::string& json_text) { return ordered_json::parse(json_text).dump(); }

void write_sweep_fsas(const fs::path& path, const SweepResult& sweep) {
  std::ostringstream out;
  for (const auto& p : sweep.curve) {
    ordered_json j;
    j["k"] = p.k;
    j["n_states"] = p.n_states;
    j["accuracy"] = p.accuracy;
    j["fsa"] = ordered_json::parse(fsa_to_json(p.fsa));
    out << j.dump() << '\n';
  }
  write_text_file(path, out.str());
}

SweepResult read_sweep_fsas(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  SweepResult sweep;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = ordered_json::parse(line);
    sweep.curve.push_back(SweepPoint{j.at("k").get<std::size_t>(), j.at("n_states").get<std::size_t>(),
                                     j.at("accuracy").get<double>(), fsa_from_json(j.at("fsa").dump())});
  }
  return sweep;
}

void write_dot_files(const fs::path& stem, const Fsa& fsa, const DotOptions& opts) {
  write_text_file(fs::path(stem).replace_extension(".dot"), to_dot(fsa, opts));
  if (opts.merge_edges) write_text_file(fs::path(stem).replace_extension(".classes.json"), word_classes_json(fsa, opts));
}

// ---- subcommands ----

int cmd_gen_data(const ConfigFlags& f, const std::string& out_path) {
  const ExperimentConfig cfg = resolve_config(f, false);
  const Dataset ds = make_dataset(cfg);
  const fs::path path = out_path.empty() ? dataset_path(cfg) : fs::path(out_path);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_dataset(path.string(), ds);
  std::printf("wrote %s (train %zu, validation %zu, test %zu)\n", path.string().c_str(), ds.train.size(),
              ds.validation.size(), ds.test.size());
  print_class_balance(ds);
  return 0;
}

int cmd_train(const ConfigFlags& f, std::optional<std::size_t> only_trial) {
  const ExperimentConfig cfg = resolve_config(f, false);
  const Dataset ds = obtain_dataset(cfg, true);
  write_text_file(fs::path(cfg.output_dir) / "config.json", config_to_json(cfg) + "\n");
  print_class_balance(ds);
  int failures = 0;
  for (CellKind kind : cfg.kinds) {
    for (std::size_t t = 0; t < cfg.n_trials; ++t) {
      if (only_trial && *only_trial != t + 1) continue;
      const fs::path dir = trial_dir(cfg, kind, t);
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const TrainResult r = run_train_trial(cfg, ds, kind, t);
        fs::create_directories(dir);
        save_model((dir / "model.json").string(), r.model);
        write_text_file(dir / "history.csv", history_csv(r.history));
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ordered_json j;
        j["kind"] = std::string(to_string(kind));
        j["trial"] = t + 1;
        j["seed"] = trial_seed(cfg, t);
        j["epochs_run"] = r.history.size();
        j["best_epoch"] = r.best_epoch;
        j["train_acc"] = accuracy(r.model, ds.train);
        j["valid_acc"] = accuracy(r.model, ds.validation);
        j["test_acc"] = ds.test.empty() ? ordered_json(nullptr) : ordered_json(accuracy(r.model, ds.test));
        write_text_file(dir / "train.json", j.dump(2) + "\n");
        std::printf("%s trial %zu: best epoch %zu, valid acc %.4f, test acc %.4f (%.1fs)\n",
                    std::string(to_string(kind)).c_str(), t + 1, r.best_epoch, j["valid_acc"].get<double>(),
                    j["test_acc"].is_null() ? 0.0 : j["test_acc"].get<double>(), secs);
      } catch (const Error& e) {
        ++failures;
        std::fprintf(stderr, "%s trial %zu failed: %s\n", std::string(to_string(kind)).c_str(), t + 1, e.what());
      }
    }
  }
  return failures == 0 ? 0 : 1;
}

ordered_json extraction_summary(const ExperimentConfig& cfg, const TrialExtraction& x) {
  ordered_json j;
  j["min_k"] = x.min_k;
  j["reached"] = x.reached;
  j["target_accuracy"] = cfg.target_accuracy;
  j["not_reached_sentinel"] = not_reached_sentinel(cfg);
  j["exported_k"] = x.sweep.curve[x.chosen].k;
  j["exported_n_states"] = x.sweep.curve[x.chosen].n_states;
  j["rnn_valid_acc"] = x.rnn_valid_acc;
  j["rnn_test_acc"] = x.rnn_test_acc;
  j["fsa_valid_acc"] = x.fsa_valid_acc;
  j["fsa_test_acc"] = x.fsa_test_acc;
  return j;
}

void write_extraction(const fs::path& dir, const ExperimentConfig& cfg, const TrialExtraction& x,
                      ordered_json summary) {
  write_text_file(dir / "sweep.csv", sweep_csv(x.sweep));
  write_sweep_fsas(dir / "sweep_fsas.jsonl", x.sweep);
  summary.update(extraction_summary(cfg, x));
  write_text_file(dir / "summary.json", summary.dump(2) + "\n");
  const Fsa& fsa = x.sweep.curve[x.chosen].fsa;
  save_fsa((dir / "fsa.json").string(), fsa);
  DotOptions dot;
  dot.merge_edges = true;
  write_dot_files(dir / "fsa", fsa, dot);
}

int cmd_extract(const ConfigFlags& f, const std::string& model_path, const std::string& out_dir) {
  const ExperimentConfig cfg = resolve_config(f, true);
  const Dataset ds = obtain_dataset(cfg, false);
  if (!model_path.empty()) {
    const RnnModel model = load_model(model_path);
    const TrialExtraction x = run_extract(cfg, ds, model, cfg.seed);
    const fs::path dir = out_dir.empty() ? fs::path(model_path).parent_path() : fs::path(out_dir);
    ordered_json s;
    s["model"] = model_path;
    write_extraction(dir, cfg, x, s);
    std::printf("min_k %zu%s, FSA accuracy valid %.4f test %.4f\n", x.min_k, x.reached ? "" : " (not reached)",
                x.fsa_valid_acc, x.fsa_test_acc);
    return 0;
  }
  int failures = 0;
  for (CellKind kind : cfg.kinds) {
    for (std::size_t t = 0; t < cfg.n_trials; ++t) {
      const fs::path dir = trial_dir(cfg, kind, t);
      try {
        const RnnModel model = load_model((dir / "model.json").string());
        const TrialExtraction x = run_extract(cfg, ds, model, trial_seed(cfg, t));
        ordered_json s;
        s["kind"] = std::string(to_string(kind));
        s["trial"] = t + 1;
        s["seed"] = trial_seed(cfg, t);
        write_extraction(dir, cfg, x, s);
        std::printf("%s trial %zu: min_k %zu%s, FSA accuracy valid %.4f test %.4f\n",
                    std::string(to_string(kind)).c_str(), t + 1, x.min_k, x.reached ? "" : " (not reached)",
                    x.fsa_valid_acc, x.fsa_test_acc);
      } catch (const Error& e) {
        ++failures;
        std::fprintf(stderr, "%s trial %zu: %s\n", std::string(to_string(kind)).c_str(), t + 1, e.what());
      }
    }
  }
  return failures == 0 ? 0 : 1;
}

int cmd_ensemble(const ConfigFlags& f, const std::vector<std::string>& fsa_paths, const std::string& data_path,
                 const std::string& out_path) {
  if (!fsa_paths.empty()) {
    Dataset ds;
    if (!data_path.empty()) {
      ds = load_dataset(data_path);
    } else {
      ds = obtain_dataset(resolve_config(f, true), false);
    }
    std::vector<Fsa> members;
    double sum = 0.0;
    for (const auto& p : fsa_paths) {
      members.push_back(load_fsa(p));
      const double a = accuracy(members.back(), ds.test);
      sum += a;
      std::printf("%s: %.4f\n", p.c_str(), a);
    }
    const FsaEnsemble ens(std::move(members));
    const double mean = sum / static_cast<double>(fsa_paths.size());
    const double acc = accuracy(ens, ds.test);
    std::printf("mean individual %.4f, ensemble %.4f\n", mean, acc);
    if (!out_path.empty()) {
      ordered_json j;
      j["split"] = "test";
      j["members"] = fsa_paths;
      j["mean_individual"] = mean;
      j["ensemble"] = acc;
      write_text_file(out_path, j.dump(2) + "\n");
    }
    return 0;
  }
  const ExperimentConfig cfg = resolve_config(f, true);
  if (cfg.n_trials % 2 == 0) throw ConfigError("ensembling needs an odd number of trials");
  const Dataset ds = obtain_dataset(cfg, false);
  int failures = 0;
  for (CellKind kind : cfg.kinds) {
    try {
      std::vector<SweepResult> sweeps;
      for (std::size_t t = 0; t < cfg.n_trials; ++t)
        sweeps.push_back(read_sweep_fsas(trial_dir(cfg, kind, t) / "sweep_fsas.jsonl"));
      std::vector<const SweepResult*> ptrs;
      for (const auto& s : sweeps) ptrs.push_back(&s);
      const auto rows = ensemble_over_k(ptrs, ds.test);
      const fs::path path = fs::path(cfg.output_dir) / ("ensemble_" + std::string(to_string(kind)) + ".csv");
      write_text_file(path, ensemble_csv(rows));
      std::size_t better = 0;
      double worst_gap = 0.0;
      for (const auto& r : rows) {
        if (r.ensemble > r.mean_individual) ++better;
        worst_gap = std::min(worst_gap, r.ensemble - r.mean_individual);
      }
      std::printf("%s: ensemble beats the mean at %zu of %zu k, worst gap %.4f -> %s\n",
                  std::string(to_string(kind)).c_str(), better, rows.size(), worst_gap, path.string().c_str());
    } catch (const Error& e) {
      ++failures;
      std::fprintf(stderr, "%s: %s\n", std::string(to_string(kind)).c_str(), e.what());
    }
  }
  return failures == 0 ? 0 : 1;
}

int cmd_report(const ConfigFlags& f) {
  const ExperimentConfig cfg = resolve_config(f, true);
  std::map<std::pair<CellKind, std::size_t>, double> cells;
  for (CellKind kind : cfg.kinds) {
    for (std::size_t t = 0; t < cfg.n_trials; ++t) {
      const fs::path p = trial_dir(cfg, kind, t) / "summary.json";
      if (!fs::exists(p)) continue;
      try {
        const auto j = ordered_json::parse(read_text_file(p));
        cells[{kind, t}] = j.at("min_k").get<double>();
      } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "%s: %s\n", p.string().c_str(), e.what());
      }
    }
  }
  const ReportGrid grid = make_report(cfg.kinds, cfg.n_trials, cells);
  const std::string text = report_text(grid);
  write_text_file(fs::path(cfg.output_dir) / "report.txt", text);
  write_text_file(fs::path(cfg.output_dir) / "report.json", report_json(grid, cfg) + "\n");
  std::fputs(text.c_str(), stdout);
  return grid.missing.empty() ? 0 : 1;
}

int cmd_export_dot(const std::string& fsa_path, std::string out_path, bool merge, std::size_t max_label,
                   const std::string& highlight) {
  const Fsa fsa = load_fsa(fsa_path);
  DotOptions opts;
  opts.merge_edges = merge;
  opts.max_label_symbols = max_label;
  if (!highlight.empty()) opts.highlight_path = parse_tokens(highlight, fsa.alphabet());
  if (out_path.empty()) out_path = fs::path(fsa_path).replace_extension(".dot").string();
  write_dot_files(out_path, fsa, opts);
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int cmd_grad_check(GradCheckOptions opts, const std::vector<std::string>& kinds, double tol) {
  if (!kinds.empty()) {
    opts.kinds.clear();
    for (const auto& k : kinds) opts.kinds.push_back(parse_cell_kind(k));
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = grad_check_suite(opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool ok = true;
  for (const auto& r : rows) {
    const bool pass = r.max_rel_error < tol;
    ok = ok && pass;
    std::printf("%-5s max relative error %.3e %s\n", std::string(to_string(r.kind)).c_str(), r.max_rel_error,
                pass ? "ok" : "FAIL");
  }
  std::printf("%.2fs\n", secs);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train recurrent classifiers, extract automata from their hidden states, and render them"};
  app.require_subcommand(1);

  ConfigFlags gen_flags, train_flags, extract_flags, ens_flags, report_flags;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  add_config_flags(gen, gen_flags);
  std::string gen_out;
  gen->add_option("--out", gen_out, "Dataset path")->default_str("<output-dir>/data.jsonl");

  auto* train = app.add_subcommand("train", "Train one model per (kind, trial)");
  add_config_flags(train, train_flags);
  std::optional<std::size_t> only_trial;
  train->add_option("--trial", only_trial, "Run only this trial (1-based)");

  auto* extract = app.add_subcommand("extract", "Sweep k and extract automata from trained models");
  add_config_flags(extract, extract_flags);
  std::string model_path, extract_out;
  extract->add_option("--model", model_path, "Extract from this checkpoint only")->check(CLI::ExistingFile);
  extract->add_option("--out-dir", extract_out, "Output directory for --model")->default_str("model's directory");

  auto* ens = app.add_subcommand("ensemble", "Majority-vote accuracy of the trials' automata");
  add_config_flags(ens, ens_flags);
  std::vector<std::string> fsa_paths;
  std::string ens_data, ens_out;
  ens->add_option("--fsa", fsa_paths, "Ensemble these FSA files instead of the run's sweeps")
      ->check(CLI::ExistingFile);
  ens->add_option("--data", ens_data, "Dataset for --fsa")->default_str("<output-dir>/data.jsonl")
      ->check(CLI::ExistingFile);
  ens->add_option("--out", ens_out, "JSON result path for --fsa");

  auto* report = app.add_subcommand("report", "Tabulate min_k over trials and kinds");
  add_config_flags(report, report_flags);

  auto* dot = app.add_subcommand("export-dot", "Render an FSA as Graphviz DOT");
  std::string dot_fsa, dot_out, highlight;
  bool merge = false;
  std::size_t max_label = 8;
  dot->add_option("--fsa", dot_fsa, "FSA JSON")->required()->check(CLI::ExistingFile);
  dot->add_option("--out", dot_out, "DOT path")->default_str("<fsa>.dot");
  dot->add_flag("--merge", merge, "Merge parallel edges into word classes");
  dot->add_option("--max-label-symbols", max_label, "Longest symbol list shown on a merged edge")
      ->capture_default_str()->check(CLI::PositiveNumber);
  dot->add_option("--highlight", highlight, "Token path to mark in red, e.g. 0110 or 0,1,1,0");

  auto* gc = app.add_subcommand("grad-check", "Compare BPTT gradients with finite differences");
  GradCheckOptions gc_opts;
  std::vector<std::string> gc_kinds;
  double tol = 1e-4;
  gc->add_option("--kinds", gc_kinds, "Cell kinds")->default_str("MGU SRN GRU LSTM")->delimiter(',');
  gc->add_option("--n-models", gc_opts.n_models, "Random models per kind")->capture_default_str();
  gc->add_option("--hidden", gc_opts.hidden, "Hidden units")->capture_default_str();
  gc->add_option("--max-layers", gc_opts.max_layers, "Layer counts cycle 1..max")->capture_default_str();
  gc->add_option("--min-len", gc_opts.min_len, "Shortest sequence")->capture_default_str();
  gc->add_option("--max-len", gc_opts.max_len, "Longest sequence")->capture_default_str();
  gc->add_option("--eps", gc_opts.eps, "Central-difference step")->capture_default_str();
  gc->add_option("--seed", gc_opts.seed, "Seed")->capture_default_str();
  gc->add_option("--tol", tol, "Pass threshold on the max relative error")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen_data(gen_flags, gen_out);
    if (*train) return cmd_train(train_flags, only_trial);
    if (*extract) return cmd_extract(extract_flags, model_path, extract_out);
    if (*ens) return cmd_ensemble(ens_flags, fsa_paths, ens_data, ens_out);
    if (*report) return cmd_report(report_flags);
    if (*dot) return cmd_export_dot(dot_fsa, dot_out, merge, max_label, highlight);
    if (*gc) return cmd_grad_check(gc_opts, gc_kinds, tol);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
