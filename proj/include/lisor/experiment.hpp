#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lisor/data.hpp"
#include "lisor/fsa.hpp"
#include "lisor/rnn.hpp"
#include "lisor/train.hpp"

namespace lisor {

struct ExperimentConfig {
  std::string task = "0110";
  std::vector<CellKind> kinds{kAllCellKinds.begin(), kAllCellKinds.end()};
  ModelDims dims;
  HyperParams hyper;
  ClusterMethod method = ClusterMethod::KMeansPP;
  std::size_t k_min = 2;
  std::size_t k_max = 64;
  std::size_t n_trials = 5;
  double target_accuracy = 1.0;
  std::uint64_t seed = 1;
  std::string output_dir = "runs";

  std::size_t n_train = 1000;
  std::size_t n_valid = 16;
  std::size_t n_test = 100;
  std::size_t min_len = 4;
  std::size_t max_len = 12;

  std::optional<std::size_t> trace_layer;
  double position_scale = 1.0;
};

// Settings used for the two synthetic tasks: dataset sizes, k range, target
// accuracy and a training recipe that converges at desk scale.
ExperimentConfig default_config(const std::string& task);

// Throws ConfigError on inconsistent settings.
void validate(const ExperimentConfig& cfg);

// Overlays the fields present in `json_text` on default_config(task), where
// task comes from the document (default "0110").
ExperimentConfig config_from_json(const std::string& json_text);
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

Dataset make_dataset(const ExperimentConfig& cfg);

std::vector<std::size_t> k_values(const ExperimentConfig& cfg);

// Sentinel recorded when a sweep never reaches the target: k_max + 1.
std::size_t not_reached_sentinel(const ExperimentConfig& cfg);

// Split the FSA accuracy tables are computed on: the exhaustive validation
// set for task "0110", the test split otherwise.
const std::vector<Sequence>& fsa_eval_split(const ExperimentConfig& cfg, const Dataset& ds);

std::uint64_t trial_seed(const ExperimentConfig& cfg, std::size_t trial);

HyperParams trial_hyper(const ExperimentConfig& cfg, std::size_t trial);

TrainResult run_train_trial(const ExperimentConfig& cfg, const Dataset& ds, CellKind kind,
                            std::size_t trial);

struct TrialExtraction {
  SweepResult sweep;
  std::size_t min_k = 0;  // sentinel when not reached
  bool reached = false;
  // Curve entry whose FSA is exported: min_k, or the most accurate k.
  std::size_t chosen = 0;
  double rnn_valid_acc = 0.0;
  double rnn_test_acc = 0.0;
  // Accuracy of the chosen FSA on the validation and test splits.
  double fsa_valid_acc = 0.0;
  double fsa_test_acc = 0.0;
};

TrialExtraction run_extract(const ExperimentConfig& cfg, const Dataset& ds, const RnnModel& model,
                            std::uint64_t seed);

struct EnsembleRow {
  std::size_t k = 0;
  double mean_individual = 0.0;
  double ensemble = 0.0;
};

// Majority vote of the i-th FSA of every sweep, per k, on `split`. All sweeps
// must share the same k grid.
std::vector<EnsembleRow> ensemble_over_k(const std::vector<const SweepResult*>& sweeps,
                                         std::span<const Sequence> split);

std::string sweep_csv(const SweepResult& sweep);
std::string ensemble_csv(const std::vector<EnsembleRow>& rows);

struct ReportGrid {
  std::vector<CellKind> kinds;
  std::size_t n_trials = 0;
  // cells[trial][kind index]; empty when the trial's summary is missing.
  std::vector<std::vector<std::optional<double>>> cells;
  std::vector<std::optional<double>> averages;
  std::vector<std::string> missing;
};

// Averages include sentinel cells as-is and skip missing ones.
ReportGrid make_report(const std::vector<CellKind>& kinds, std::size_t n_trials,
                       const std::map<std::pair<CellKind, std::size_t>, double>& min_k);
std::string report_text(const ReportGrid& grid);
std::string report_json(const ReportGrid& grid, const ExperimentConfig& cfg);

struct GradCheckOptions {
  std::vector<CellKind> kinds{kAllCellKinds.begin(), kAllCellKinds.end()};
  std::size_t n_models = 10;
  std::size_t hidden = 4;
  // Layer counts alternate between 1 and max_layers.
  std::size_t max_layers = 2;
  std::size_t min_len = 3;
  std::size_t max_len = 6;
  double eps = 1e-5;
  std::uint64_t seed = 100;
};

struct GradCheckRow {
  CellKind kind;
  double max_rel_error = 0.0;
};

// Random models with every parameter drawn from U(-1, 1), one random binary
// sequence each; worst relative error per kind.
std::vector<GradCheckRow> grad_check_suite(const GradCheckOptions& opts);

// Output layout under cfg.output_dir.
std::filesystem::path dataset_path(const ExperimentConfig& cfg);
std::filesystem::path trial_dir(const ExperimentConfig& cfg, CellKind kind, std::size_t trial);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace lisor
