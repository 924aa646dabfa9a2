#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "lisor/data.hpp"
#include "lisor/random.hpp"

namespace lisor {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class CellKind { SRN, MGU, GRU, LSTM };

inline constexpr std::array<CellKind, 4> kAllCellKinds{CellKind::MGU, CellKind::SRN,
                                                       CellKind::GRU, CellKind::LSTM};

std::string_view to_string(CellKind kind);
CellKind parse_cell_kind(std::string_view name);

// Number of sigmoid gates: SRN 0, MGU 1, GRU 2, LSTM 3.
std::size_t gate_count(CellKind kind);

// Number of (W, b) blocks a cell owns: the gates plus one candidate.
std::size_t block_count(CellKind kind);

// Block names in storage order, e.g. MGU -> {"f", "h"}. The candidate block is
// always last.
std::vector<std::string> block_names(CellKind kind);

// One recurrent layer. Every W is d x (d + d_in) acting on [h_{t-1}, x_t].
struct CellParams {
  CellKind kind = CellKind::MGU;
  std::vector<Matrix> W;
  std::vector<Vector> b;

  static CellParams zeros(CellKind kind, std::size_t hidden, std::size_t input);

  std::size_t hidden() const { return static_cast<std::size_t>(b.front().size()); }
  std::size_t input() const { return static_cast<std::size_t>(W.front().cols()) - hidden(); }
};

struct LayerState {
  Vector h;
  Vector c;  // empty unless LSTM
};

struct ModelDims {
  std::size_t d_emb = 2;
  std::size_t hidden = 10;
  std::size_t layers = 3;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// Every trainable tensor of a model. The same layout doubles as the gradient
// container, so gradients are shape-congruent by construction.
struct Parameters {
  Matrix embedding;  // |alphabet| x d_emb, row per symbol
  std::vector<CellParams> layers;
  Vector classifier_w;
  double classifier_b = 0.0;

  // Flat mutable/const views over every tensor in a fixed order:
  // embedding, then per layer W_0, b_0, W_1, b_1, ..., then classifier w, b.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  std::vector<std::string> tensor_names() const;

  std::size_t scalar_count() const;
  Parameters zeros_like() const;
};

using GradientSet = Parameters;

struct RnnModel {
  CellKind kind = CellKind::MGU;
  ModelDims dims;
  Alphabet alphabet;
  bool train_embedding = false;
  Parameters params;

  static RnnModel zeros(CellKind kind, const Alphabet& alphabet, const ModelDims& dims);

  // Weights uniform in [-scale, scale], biases zero. The embedding starts
  // one-hot when d_emb >= |alphabet|, otherwise uniform like the weights.
  static RnnModel random(CellKind kind, const Alphabet& alphabet, const ModelDims& dims,
                         double scale, Rng& rng);

  std::size_t alphabet_size() const { return alphabet.size(); }
};

double sigmoid(double x);

// One step of a single layer. Throws ShapeError on inconsistent dimensions.
LayerState cell_step(const CellParams& params, const LayerState& state, const Vector& x);

struct HiddenTrace {
  std::vector<Vector> h;        // recorded layer's h_t, t = 1..T
  std::vector<Symbol> symbols;  // x_t
  double p = 0.5;               // classifier probability on the final top-layer h_T
};

struct ForwardOptions {
  // Layer whose states are recorded (0-based); the top layer when unset.
  std::optional<std::size_t> trace_layer;
};

HiddenTrace forward(const RnnModel& model, const std::vector<Symbol>& tokens,
                    const ForwardOptions& opts = {});

double classifier_probability(const RnnModel& model, const Vector& h);
Label classify_vector(const RnnModel& model, const Vector& h);
Label predict(const RnnModel& model, const Sequence& seq);

// Serialization: {"version":"lisor-model-v1", ...} with row-major matrices.
std::string model_to_json(const RnnModel& model);
RnnModel model_from_json(const std::string& text);
void save_model(const std::string& path, const RnnModel& model);
RnnModel load_model(const std::string& path);

bool operator==(const RnnModel& a, const RnnModel& b);

}  // namespace lisor
