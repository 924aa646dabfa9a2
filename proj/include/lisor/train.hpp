#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lisor/data.hpp"
#include "lisor/rnn.hpp"

namespace lisor {

struct HyperParams {
  double learning_rate = 1e-3;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  double init_scale = 0.1;
  // Stop once full-pass training accuracy reaches this value.
  double early_stop_acc = 1.0;
  // Early stopping is only considered from this epoch on.
  std::size_t min_epochs = 0;
  // Global gradient-norm clip; <= 0 disables clipping.
  double clip_norm = 5.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

void validate(const HyperParams& hp);

struct LossAndGrads {
  double loss = 0.0;
  GradientSet grads;
};

// Mean binary cross-entropy of the batch and its exact BPTT gradient with
// respect to every parameter (embedding included, even when frozen).
// Throws NumericalError naming the batch index of a sequence whose logit is
// not finite.
LossAndGrads loss_and_grads(const RnnModel& model, std::span<const Sequence> batch);

double batch_loss(const RnnModel& model, std::span<const Sequence> batch);

// Max relative error |a - n| / max(1e-8, |a| + |n|) between `analytic` and
// central differences of the single-sequence loss, over every scalar. The
// differenced loss is evaluated by an independent extended-precision forward
// pass.
double compare_gradients(const RnnModel& model, const Sequence& seq, const GradientSet& analytic,
                         double eps);

double grad_check(const RnnModel& model, const Sequence& seq, double eps);

double global_norm(const GradientSet& grads);

class Adam {
 public:
  Adam(const Parameters& shape, const HyperParams& hp);

  // One bias-corrected update. Frozen embeddings are left untouched.
  void step(RnnModel& model, const GradientSet& grads);

 private:
  Parameters m_;
  Parameters v_;
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  std::uint64_t t_ = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0;
  double valid_acc = 0.0;
};

struct TrainResult {
  RnnModel model;  // snapshot with the best validation accuracy (latest on ties)
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
};

double model_accuracy(const RnnModel& model, std::span<const Sequence> split);

// Mini-batch Adam from a freshly initialized model (seeded by hp.seed).
TrainResult train_model(CellKind kind, const Dataset& dataset, const ModelDims& dims,
                        const HyperParams& hp);

// Same loop, starting from the given parameters.
TrainResult train_from(RnnModel initial, const Dataset& dataset, const HyperParams& hp);

// CSV: epoch,loss,train_acc,valid_acc
std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace lisor
