#pragma once

// Forward step with cached intermediates and the matching backward pass for
// every cell kind. Shared by inference and BPTT.

#include "lisor/rnn.hpp"

namespace lisor::detail {

// Block slots per kind (see block_names):
//   SRN  {h}
//   MGU  {f, h}
//   GRU  {z, r, h}
//   LSTM {f, i, o, c}
struct StepCache {
  Vector h_prev;
  Vector c_prev;
  Vector x;
  Vector concat;            // [h_prev, x]
  Vector gated_concat;      // MGU/GRU: [gate (.) h_prev, x]
  std::vector<Vector> gates;
  Vector candidate;         // tanh output
  Vector c;                 // LSTM cell
  Vector tanh_c;            // LSTM tanh(c)
  Vector h;
};

void check_shapes(const CellParams& params, const LayerState& state, const Vector& x);

void step_forward(const CellParams& params, const Vector& h_prev, const Vector& c_prev,
                  const Vector& x, StepCache& cache);

// Accumulates parameter gradients into grad and writes gradients w.r.t. the
// step inputs. dc / dc_prev are ignored for non-LSTM kinds.
void step_backward(const CellParams& params, const StepCache& cache, const Vector& dh,
                   const Vector& dc, CellParams& grad, Vector& dh_prev, Vector& dc_prev,
                   Vector& dx);

inline Vector sigmoid_vec(const Vector& a) {
  return a.unaryExpr([](double v) { return sigmoid(v); });
}

inline Vector tanh_vec(const Vector& a) { return a.array().tanh().matrix(); }

}  // namespace lisor::detail
