#include "lisor/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "lisor/errors.hpp"
#include "lisor/random.hpp"

namespace lisor {

using ordered_json = nlohmann::ordered_json;

ExperimentConfig default_config(const std::string& task) {
  ExperimentConfig cfg;
  cfg.task = task;
  cfg.dims = {2, 10, 3};
  cfg.hyper.learning_rate = 0.01;
  cfg.hyper.init_scale = 0.5;
  cfg.hyper.batch_size = 32;
  cfg.hyper.early_stop_acc = 1.0;
  if (task == "0110") {
    cfg.n_train = 1000;
    cfg.n_valid = 16;
    cfg.n_test = 100;
    cfg.min_len = cfg.max_len = 4;
    cfg.k_min = 2;
    cfg.k_max = 64;
    cfg.target_accuracy = 1.0;
    cfg.hyper.epochs = 200;
    cfg.hyper.min_epochs = 40;
    cfg.output_dir = "runs/task_0110";
  } else if (task == "000") {
    cfg.n_train = 3000;
    cfg.n_valid = 500;
    cfg.n_test = 500;
    cfg.min_len = 4;
    cfg.max_len = 12;
    cfg.k_min = 2;
    cfg.k_max = 200;
    cfg.target_accuracy = 0.7;
    cfg.hyper.epochs = 60;
    cfg.hyper.min_epochs = 20;
    cfg.output_dir = "runs/task_000";
  } else {
    throw ConfigError("unknown task '" + task + "' (expected \"0110\" or \"000\")");
  }
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  label_oracle(cfg.task, {0});
  if (cfg.kinds.empty()) throw ConfigError("at least one cell kind is required");
  if (cfg.k_min < 2) throw ConfigError("k_range minimum must be at least 2");
  if (cfg.k_max < cfg.k_min) throw ConfigError("k_range maximum must not be below its minimum");
  if (cfg.n_trials < 1) throw ConfigError("n_trials must be positive");
  if (!(cfg.target_accuracy >= 0.0 && cfg.target_accuracy <= 1.0))
    throw ConfigError("target_accuracy must be in [0, 1]");
  if (cfg.dims.layers < 1 || cfg.dims.hidden < 1 || cfg.dims.d_emb < 1)
    throw ConfigError("dims must be positive");
  if (cfg.trace_layer && *cfg.trace_layer >= cfg.dims.layers)
    throw ConfigError("trace_layer must be below the layer count");
  if (!(cfg.position_scale > 0.0)) throw ConfigError("position_scale must be positive");
  validate(cfg.hyper);
}

namespace {

template <class T>
void read_if(const ordered_json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig config_from_json(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("<config>", e.what());
  }
  if (!j.is_object()) throw ParseError("<config>", "expected a JSON object");
  const std::string task = j.value("task", std::string("0110"));
  ExperimentConfig cfg = default_config(task);
  std::string field = "<config>";
  try {
    field = "kinds";
    if (j.contains("kinds")) {
      cfg.kinds.clear();
      for (const auto& k : j.at("kinds")) cfg.kinds.push_back(parse_cell_kind(k.get<std::string>()));
    }
    field = "dims";
    if (j.contains("dims")) {
      const auto& d = j.at("dims");
      read_if(d, "d_emb", cfg.dims.d_emb);
      read_if(d, "hidden", cfg.dims.hidden);
      read_if(d, "layers", cfg.dims.layers);
    }
    field = "hyper";
    if (j.contains("hyper")) {
      const auto& h = j.at("hyper");
      read_if(h, "learning_rate", cfg.hyper.learning_rate);
      read_if(h, "epochs", cfg.hyper.epochs);
      read_if(h, "batch_size", cfg.hyper.batch_size);
      read_if(h, "init_scale", cfg.hyper.init_scale);
      read_if(h, "early_stop_acc", cfg.hyper.early_stop_acc);
      read_if(h, "min_epochs", cfg.hyper.min_epochs);
      read_if(h, "clip_norm", cfg.hyper.clip_norm);
      read_if(h, "beta1", cfg.hyper.beta1);
      read_if(h, "beta2", cfg.hyper.beta2);
      read_if(h, "adam_eps", cfg.hyper.adam_eps);
    }
    field = "method";
    if (j.contains("method")) cfg.method = parse_cluster_method(j.at("method").get<std::string>());
    field = "k_range";
    if (j.contains("k_range")) {
      const auto r = j.at("k_range").get<std::vector<std::size_t>>();
      if (r.size() != 2) throw ParseError("k_range", "expected [min, max]");
      cfg.k_min = r[0];
      cfg.k_max = r[1];
    }
    field = "n_trials";
    read_if(j, "n_trials", cfg.n_trials);
    field = "target_accuracy";
    read_if(j, "target_accuracy", cfg.target_accuracy);
    field = "seed";
    read_if(j, "seed", cfg.seed);
    field = "output_dir";
    read_if(j, "output_dir", cfg.output_dir);
    field = "data";
    if (j.contains("data")) {
      const auto& d = j.at("data");
      read_if(d, "n_train", cfg.n_train);
      read_if(d, "n_valid", cfg.n_valid);
      read_if(d, "n_test", cfg.n_test);
      read_if(d, "min_len", cfg.min_len);
      read_if(d, "max_len", cfg.max_len);
    }
    field = "trace_layer";
    if (j.contains("trace_layer") && !j.at("trace_layer").is_null())
      cfg.trace_layer = j.at("trace_layer").get<std::size_t>();
    field = "position_scale";
    read_if(j, "position_scale", cfg.position_scale);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(field, e.what());
  } catch (const ConfigError& e) {
    throw ParseError(field, e.what());
  }
  validate(cfg);
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["task"] = cfg.task;
  auto kinds = ordered_json::array();
  for (auto k : cfg.kinds) kinds.push_back(std::string(to_string(k)));
  j["kinds"] = kinds;
  j["dims"] = {{"d_emb", cfg.dims.d_emb}, {"hidden", cfg.dims.hidden}, {"layers", cfg.dims.layers}};
  j["hyper"] = {{"learning_rate", cfg.hyper.learning_rate}, {"epochs", cfg.hyper.epochs},
                {"batch_size", cfg.hyper.batch_size},       {"init_scale", cfg.hyper.init_scale},
                {"early_stop_acc", cfg.hyper.early_stop_acc}, {"min_epochs", cfg.hyper.min_epochs},
                {"clip_norm", cfg.hyper.clip_norm},         {"beta1", cfg.hyper.beta1},
                {"beta2", cfg.hyper.beta2},                 {"adam_eps", cfg.hyper.adam_eps}};
  j["method"] = cfg.method == ClusterMethod::KMeansPP ? "LISOR-k" : "LISOR-x";
  j["k_range"] = {cfg.k_min, cfg.k_max};
  j["n_trials"] = cfg.n_trials;
  j["target_accuracy"] = cfg.target_accuracy;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["data"] = {{"n_train", cfg.n_train}, {"n_valid", cfg.n_valid}, {"n_test", cfg.n_test},
               {"min_len", cfg.min_len}, {"max_len", cfg.max_len}};
  j["trace_layer"] = cfg.trace_layer ? ordered_json(*cfg.trace_layer) : ordered_json(nullptr);
  j["position_scale"] = cfg.position_scale;
  return j.dump(2);
}

ExperimentConfig load_config(const std::string& path) { return config_from_json(read_text_file(path)); }

Dataset make_dataset(const ExperimentConfig& cfg) {
  if (cfg.task == "0110") {
    Task0110Options o;
    o.n_train = cfg.n_train;
    o.n_test = cfg.n_test;
    o.seed = cfg.seed;
    return gen_task_0110(o);
  }
  if (cfg.task == "000") {
    Task000Options o;
    o.n_train = cfg.n_train;
    o.n_valid = cfg.n_valid;
    o.n_test = cfg.n_test;
    o.min_len = cfg.min_len;
    o.max_len = cfg.max_len;
    o.seed = cfg.seed;
    return gen_task_000(o);
  }
  throw ConfigError("unknown task '" + cfg.task + "'");
}

std::vector<std::size_t> k_values(const ExperimentConfig& cfg) {
  std::vector<std::size_t> ks;
  for (std::size_t k = cfg.k_min; k <= cfg.k_max; ++k) ks.push_back(k);
  return ks;
}

std::size_t not_reached_sentinel(const ExperimentConfig& cfg) { return cfg.k_max + 1; }

const std::vector<Sequence>& fsa_eval_split(const ExperimentConfig& cfg, const Dataset& ds) {
  if (cfg.task == "0110" || ds.test.empty()) return ds.validation;
  return ds.test;
}

std::uint64_t trial_seed(const ExperimentConfig& cfg, std::size_t trial) { return cfg.seed + trial; }

HyperParams trial_hyper(const ExperimentConfig& cfg, std::size_t trial) {
  HyperParams hp = cfg.hyper;
  hp.seed = trial_seed(cfg, trial);
  return hp;
}

TrainResult run_train_trial(const ExperimentConfig& cfg, const Dataset& ds, CellKind kind,
                            std::size_t trial) {
  return train_model(kind, ds, cfg.dims, trial_hyper(cfg, trial));
}

TrialExtraction run_extract(const ExperimentConfig& cfg, const Dataset& ds, const RnnModel& model,
                            std::uint64_t seed) {
  if (ds.validation.empty()) throw ConfigError("extraction needs a validation split");
  ForwardOptions fo;
  fo.trace_layer = cfg.trace_layer;
  const TracePool pool = collect_traces(model, ds.validation, fo);
  ExtractOptions eo;
  eo.cluster.position_scale = cfg.position_scale;

  TrialExtraction out;
  out.sweep = sweep_k(model, pool, k_values(cfg), fsa_eval_split(cfg, ds), cfg.target_accuracy,
                      cfg.method, seed, eo);
  out.reached = out.sweep.min_k.has_value();
  out.min_k = out.reached ? *out.sweep.min_k : not_reached_sentinel(cfg);
  if (out.reached) {
    out.chosen = *out.sweep.min_k - cfg.k_min;
  } else {
    for (std::size_t i = 0; i < out.sweep.curve.size(); ++i)
      if (out.sweep.curve[i].accuracy > out.sweep.curve[out.chosen].accuracy) out.chosen = i;
  }
  out.rnn_valid_acc = accuracy(model, ds.validation);
  const Fsa& fsa = out.sweep.curve[out.chosen].fsa;
  out.fsa_valid_acc = accuracy(fsa, ds.validation);
  if (!ds.test.empty()) {
    out.rnn_test_acc = accuracy(model, ds.test);
    out.fsa_test_acc = accuracy(fsa, ds.test);
  }
  return out;
}

std::vector<EnsembleRow> ensemble_over_k(const std::vector<const SweepResult*>& sweeps,
                                         std::span<const Sequence> split) {
  if (sweeps.empty()) throw ConfigError("ensemble needs at least one sweep");
  const std::size_t n = sweeps.front()->curve.size();
  for (const auto* s : sweeps)
    if (s->curve.size() != n) throw ConfigError("ensemble sweeps have different k grids");
  std::vector<EnsembleRow> rows;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Fsa> members;
    double sum = 0.0;
    for (const auto* s : sweeps) {
      if (s->curve[i].k != sweeps.front()->curve[i].k)
        throw ConfigError("ensemble sweeps have different k grids");
      sum += accuracy(s->curve[i].fsa, split);
      members.push_back(s->curve[i].fsa);
    }
    const FsaEnsemble ens(std::move(members));
    rows.push_back({sweeps.front()->curve[i].k, sum / static_cast<double>(sweeps.size()), accuracy(ens, split)});
  }
  return rows;
}

namespace {
std::string fmt_double(double v) {
  std::ostringstream o;
  o << std::setprecision(10) << v;
  return o.str();
}
}  // namespace

std::string sweep_csv(const SweepResult& sweep) {
  std::ostringstream out;
  out << "k,accuracy\n";
  for (const auto& p : sweep.curve) out << p.k << ',' << fmt_double(p.accuracy) << '\n';
  return out.str();
}

std::string ensemble_csv(const std::vector<EnsembleRow>& rows) {
  std::ostringstream out;
  out << "k,mean_individual,ensemble\n";
  for (const auto& r : rows) out << r.k << ',' << fmt_double(r.mean_individual) << ',' << fmt_double(r.ensemble) << '\n';
  return out.str();
}

ReportGrid make_report(const std::vector<CellKind>& kinds, std::size_t n_trials,
                       const std::map<std::pair<CellKind, std::size_t>, double>& min_k) {
  ReportGrid g;
  g.kinds = kinds;
  g.n_trials = n_trials;
  g.cells.assign(n_trials, std::vector<std::optional<double>>(kinds.size()));
  g.averages.assign(kinds.size(), std::nullopt);
  for (std::size_t c = 0; c < kinds.size(); ++c) {
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t t = 0; t < n_trials; ++t) {
      auto it = min_k.find({kinds[c], t});
      if (it == min_k.end()) {
        g.missing.push_back(std::string(to_string(kinds[c])) + "/trial_" + std::to_string(t + 1));
        continue;
      }
      g.cells[t][c] = it->second;
      sum += it->second;
      ++present;
    }
    if (present > 0) g.averages[c] = sum / static_cast<double>(present);
  }
  return g;
}

std::string report_text(const ReportGrid& grid) {
  std::ostringstream out;
  auto cell = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string("-"); };
  out << std::left << std::setw(10) << "RNN Type";
  for (auto k : grid.kinds) out << std::setw(8) << to_string(k);
  out << '\n';
  for (std::size_t t = 0; t < grid.n_trials; ++t) {
    out << std::setw(10) << ("Trial " + std::to_string(t + 1));
    for (const auto& v : grid.cells[t]) out << std::setw(8) << cell(v);
    out << '\n';
  }
  out << std::setw(10) << "Average";
  for (const auto& v : grid.averages) out << std::setw(8) << cell(v);
  out << '\n';
  if (!grid.missing.empty()) {
    out << "missing:";
    for (const auto& m : grid.missing) out << ' ' << m;
    out << '\n';
  }
  return out.str();
}

std::string report_json(const ReportGrid& grid, const ExperimentConfig& cfg) {
  ordered_json j;
  j["task"] = cfg.task;
  j["method"] = cfg.method == ClusterMethod::KMeansPP ? "LISOR-k" : "LISOR-x";
  j["target_accuracy"] = cfg.target_accuracy;
  j["k_range"] = {cfg.k_min, cfg.k_max};
  j["not_reached_sentinel"] = not_reached_sentinel(cfg);
  auto kinds = ordered_json::array();
  for (auto k : grid.kinds) kinds.push_back(std::string(to_string(k)));
  j["kinds"] = kinds;
  auto to_json = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  auto trials = ordered_json::array();
  for (const auto& row : grid.cells) {
    auto r = ordered_json::array();
    for (const auto& v : row) r.push_back(to_json(v));
    trials.push_back(r);
  }
  j["trials"] = trials;
  ordered_json avg;
  for (std::size_t c = 0; c < grid.kinds.size(); ++c) avg[std::string(to_string(grid.kinds[c]))] = to_json(grid.averages[c]);
  j["average"] = avg;
  j["missing"] = grid.missing;
  return j.dump(2);
}

std::vector<GradCheckRow> grad_check_suite(const GradCheckOptions& opts) {
  if (opts.n_models == 0 || opts.hidden == 0 || opts.max_layers == 0)
    throw ConfigError("grad check needs at least one model, unit and layer");
  if (opts.min_len < 1 || opts.max_len < opts.min_len) throw ConfigError("invalid grad check length range");
  std::vector<GradCheckRow> rows;
  for (CellKind kind : opts.kinds) {
    GradCheckRow row{kind, 0.0};
    for (std::size_t i = 0; i < opts.n_models; ++i) {
      Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(kind) * 1000003u + i));
      const ModelDims dims{2, opts.hidden, 1 + (i % opts.max_layers)};
      RnnModel model = RnnModel::random(kind, Alphabet::binary(), dims, 1.0, rng);
      for (auto t : model.params.tensors())
        for (double& x : t) x = rng.uniform(-1.0, 1.0);
      Sequence seq;
      const std::size_t len = opts.min_len + rng.index(opts.max_len - opts.min_len + 1);
      for (std::size_t j = 0; j < len; ++j) seq.tokens.push_back(static_cast<Symbol>(rng.index(2)));
      seq.label = static_cast<Label>(rng.index(2));
      row.max_rel_error = std::max(row.max_rel_error, grad_check(model, seq, opts.eps));
    }
    rows.push_back(row);
  }
  return rows;
}

std::filesystem::path dataset_path(const ExperimentConfig& cfg) {
  return std::filesystem::path(cfg.output_dir) / "data.jsonl";
}

std::filesystem::path trial_dir(const ExperimentConfig& cfg, CellKind kind, std::size_t trial) {
  return std::filesystem::path(cfg.output_dir) / std::string(to_string(kind)) /
         ("trial_" + std::to_string(trial + 1));
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace lisor
