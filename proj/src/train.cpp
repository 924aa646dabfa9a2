#include "lisor/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cell_math.hpp"
#include "lisor/errors.hpp"
#include "lisor/random.hpp"

namespace lisor {

namespace {

// -log(1e-12): the loss of a prediction clamped at 1e-12 from the wrong end.
const double kMaxLoss = -std::log(1e-12);

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

struct SequenceLoss {
  double loss;
  double dlogit;
};

// BCE with p clamped to [1e-12, 1 - 1e-12], computed from the logit.
SequenceLoss logit_loss(double z, Label y) {
  const double raw = softplus(z) - static_cast<double>(y) * z;
  if (raw >= kMaxLoss) return {kMaxLoss, 0.0};
  return {raw, sigmoid(z) - static_cast<double>(y)};
}

void check_batch(const RnnModel& model, std::span<const Sequence> batch) {
  if (batch.empty()) throw InputError("batch must not be empty");
  for (const auto& s : batch) validate(s, model.alphabet);
}

// Forward pass keeping every step cache, then BPTT into grads scaled by `scale`.
double accumulate_sequence(const RnnModel& model, const Sequence& seq, std::size_t index,
                           double scale, GradientSet& grads,
                           std::vector<std::vector<detail::StepCache>>& caches) {
  const std::size_t L = model.params.layers.size();
  const std::size_t T = seq.tokens.size();
  const auto d = static_cast<Eigen::Index>(model.dims.hidden);
  const bool lstm = model.kind == CellKind::LSTM;

  caches.resize(L);
  for (auto& c : caches) c.resize(std::max(c.size(), T));
  const Vector zero = Vector::Zero(d);
  for (std::size_t t = 0; t < T; ++t) {
    Vector input = model.params.embedding.row(seq.tokens[t]).transpose();
    for (std::size_t l = 0; l < L; ++l) {
      const Vector& h_prev = t == 0 ? zero : caches[l][t - 1].h;
      const Vector& c_prev = (!lstm || t == 0) ? zero : caches[l][t - 1].c;
      detail::step_forward(model.params.layers[l], h_prev, c_prev, input, caches[l][t]);
      input = caches[l][t].h;
    }
  }

  const Vector& h_top = caches[L - 1][T - 1].h;
  const double z = model.params.classifier_w.dot(h_top) + model.params.classifier_b;
  if (!std::isfinite(z))
    throw NumericalError("non-finite logit for sequence " + std::to_string(index), index);
  const auto [loss, dlogit] = logit_loss(z, seq.label);
  const double dz = dlogit * scale;

  grads.classifier_w += dz * h_top;
  grads.classifier_b += dz;

  std::vector<Vector> dh_next(L, zero);
  std::vector<Vector> dc_next(L, zero);
  Vector dh_prev, dc_prev, dx;
  for (std::size_t t = T; t-- > 0;) {
    Vector from_above = (t == T - 1) ? Vector(dz * model.params.classifier_w) : zero;
    for (std::size_t l = L; l-- > 0;) {
      const Vector dh = dh_next[l] + from_above;
      detail::step_backward(model.params.layers[l], caches[l][t], dh, dc_next[l], grads.layers[l],
                            dh_prev, dc_prev, dx);
      dh_next[l] = dh_prev;
      if (lstm) dc_next[l] = dc_prev;
      from_above = dx;
    }
    grads.embedding.row(seq.tokens[t]) += from_above.transpose();
  }
  return loss;
}

// Straight-line evaluation of one sequence's loss in long double, written
// against the cell equations directly (no Eigen, no step caches). Used as the
// finite-difference oracle so that round-off in the loss does not swamp
// gradients of order 1e-8.
using Real = long double;
using RealVec = std::vector<Real>;

RealVec affine(const Matrix& W, const Vector& b, const RealVec& left, const RealVec& right) {
  RealVec out(static_cast<std::size_t>(W.rows()));
  for (Eigen::Index r = 0; r < W.rows(); ++r) {
    Real acc = b(r);
    Eigen::Index c = 0;
    for (Real v : left) acc += static_cast<Real>(W(r, c++)) * v;
    for (Real v : right) acc += static_cast<Real>(W(r, c++)) * v;
    out[static_cast<std::size_t>(r)] = acc;
  }
  return out;
}

Real sigmoid_ld(Real x) { return x >= 0 ? 1 / (1 + std::exp(-x)) : std::exp(x) / (1 + std::exp(x)); }

RealVec map(RealVec v, Real (*f)(Real)) {
  for (auto& x : v) x = f(x);
  return v;
}

Real tanh_ld(Real x) { return std::tanh(x); }

Real reference_loss(const RnnModel& model, const Sequence& seq) {
  const std::size_t L = model.params.layers.size();
  const std::size_t d = model.dims.hidden;
  std::vector<RealVec> h(L, RealVec(d, 0)), c(L, RealVec(d, 0));
  for (Symbol t : seq.tokens) {
    RealVec x(static_cast<std::size_t>(model.params.embedding.cols()));
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = model.params.embedding(t, static_cast<Eigen::Index>(j));
    for (std::size_t l = 0; l < L; ++l) {
      const auto& p = model.params.layers[l];
      RealVec next(d);
      switch (model.kind) {
        case CellKind::SRN:
          next = map(affine(p.W[0], p.b[0], h[l], x), tanh_ld);
          break;
        case CellKind::MGU: {
          const RealVec f = map(affine(p.W[0], p.b[0], h[l], x), sigmoid_ld);
          RealVec fh(d);
          for (std::size_t i = 0; i < d; ++i) fh[i] = f[i] * h[l][i];
          const RealVec cand = map(affine(p.W[1], p.b[1], fh, x), tanh_ld);
          for (std::size_t i = 0; i < d; ++i) next[i] = (1 - f[i]) * h[l][i] + f[i] * cand[i];
          break;
        }
        case CellKind::GRU: {
          const RealVec z = map(affine(p.W[0], p.b[0], h[l], x), sigmoid_ld);
          const RealVec r = map(affine(p.W[1], p.b[1], h[l], x), sigmoid_ld);
          RealVec rh(d);
          for (std::size_t i = 0; i < d; ++i) rh[i] = r[i] * h[l][i];
          const RealVec cand = map(affine(p.W[2], p.b[2], rh, x), tanh_ld);
          for (std::size_t i = 0; i < d; ++i) next[i] = (1 - z[i]) * h[l][i] + z[i] * cand[i];
          break;
        }
        case CellKind::LSTM: {
          const RealVec f = map(affine(p.W[0], p.b[0], h[l], x), sigmoid_ld);
          const RealVec in = map(affine(p.W[1], p.b[1], h[l], x), sigmoid_ld);
          const RealVec o = map(affine(p.W[2], p.b[2], h[l], x), sigmoid_ld);
          const RealVec cand = map(affine(p.W[3], p.b[3], h[l], x), tanh_ld);
          for (std::size_t i = 0; i < d; ++i) {
            c[l][i] = f[i] * c[l][i] + in[i] * cand[i];
            next[i] = o[i] * std::tanh(c[l][i]);
          }
          break;
        }
      }
      h[l] = next;
      x = std::move(next);
    }
  }
  Real z = model.params.classifier_b;
  for (std::size_t i = 0; i < d; ++i) z += static_cast<Real>(model.params.classifier_w(static_cast<Eigen::Index>(i))) * h[L - 1][i];
  const Real raw = std::max(z, Real{0}) + std::log1p(std::exp(-std::abs(z))) - static_cast<Real>(seq.label) * z;
  return std::min(raw, static_cast<Real>(kMaxLoss));
}

}  // namespace

void validate(const HyperParams& hp) {
  if (!(hp.learning_rate >= 0.0)) throw ConfigError("learning_rate must be non-negative");
  if (hp.batch_size < 1) throw ConfigError("batch_size must be positive");
  if (hp.epochs < 1) throw ConfigError("epochs must be positive");
  if (!(hp.init_scale > 0.0)) throw ConfigError("init_scale must be positive");
  if (!(hp.early_stop_acc > 0.0 && hp.early_stop_acc <= 1.0))
    throw ConfigError("early_stop_acc must be in (0, 1]");
  if (!(hp.beta1 >= 0.0 && hp.beta1 < 1.0 && hp.beta2 >= 0.0 && hp.beta2 < 1.0))
    throw ConfigError("Adam betas must be in [0, 1)");
  if (!(hp.adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
}

LossAndGrads loss_and_grads(const RnnModel& model, std::span<const Sequence> batch) {
  check_batch(model, batch);
  LossAndGrads out;
  out.grads = model.params.zeros_like();
  const double scale = 1.0 / static_cast<double>(batch.size());
  std::vector<std::vector<detail::StepCache>> caches;
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i)
    total += accumulate_sequence(model, batch[i], i, scale, out.grads, caches);
  out.loss = total * scale;
  return out;
}

double batch_loss(const RnnModel& model, std::span<const Sequence> batch) {
  check_batch(model, batch);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto trace = forward(model, batch[i].tokens);
    // Recompute the logit from the top-layer state rather than inverting p.
    const Vector& h = trace.h.back();
    const double z = model.params.classifier_w.dot(h) + model.params.classifier_b;
    if (!std::isfinite(z))
      throw NumericalError("non-finite logit for sequence " + std::to_string(i), i);
    total += logit_loss(z, batch[i].label).loss;
  }
  return total / static_cast<double>(batch.size());
}

double compare_gradients(const RnnModel& model, const Sequence& seq, const GradientSet& analytic,
                         double eps) {
  if (!(eps > 0.0 && eps < 1e-2)) throw ConfigError("grad_check eps must be in (0, 1e-2)");
  RnnModel probe = model;
  auto params = probe.params.tensors();
  const auto grads = analytic.tensors();
  if (params.size() != grads.size()) throw ShapeError("gradient set does not match the model");
  validate(seq, model.alphabet);
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != grads[k].size()) throw ShapeError("gradient tensor shape mismatch");
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double saved = params[k][i];
      const double hi = saved + eps;
      const double lo = saved - eps;
      params[k][i] = hi;
      const Real up = reference_loss(probe, seq);
      params[k][i] = lo;
      const Real down = reference_loss(probe, seq);
      params[k][i] = saved;
      const double numeric = static_cast<double>((up - down) / (static_cast<Real>(hi) - static_cast<Real>(lo)));
      const double a = grads[k][i];
      const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

double grad_check(const RnnModel& model, const Sequence& seq, double eps) {
  if (!(eps > 0.0 && eps < 1e-2)) throw ConfigError("grad_check eps must be in (0, 1e-2)");
  const auto analytic = loss_and_grads(model, std::span<const Sequence>(&seq, 1));
  return compare_gradients(model, seq, analytic.grads, eps);
}

double global_norm(const GradientSet& grads) {
  double sq = 0.0;
  for (const auto& t : grads.tensors())
    for (double g : t) sq += g * g;
  return std::sqrt(sq);
}

Adam::Adam(const Parameters& shape, const HyperParams& hp)
    : m_(shape.zeros_like()),
      v_(shape.zeros_like()),
      lr_(hp.learning_rate),
      beta1_(hp.beta1),
      beta2_(hp.beta2),
      eps_(hp.adam_eps) {}

void Adam::step(RnnModel& model, const GradientSet& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto p = model.params.tensors();
  auto m = m_.tensors();
  auto v = v_.tensors();
  const auto g = grads.tensors();
  // Tensor 0 is the embedding.
  for (std::size_t k = model.train_embedding ? 0 : 1; k < p.size(); ++k) {
    for (std::size_t i = 0; i < p[k].size(); ++i) {
      m[k][i] = beta1_ * m[k][i] + (1.0 - beta1_) * g[k][i];
      v[k][i] = beta2_ * v[k][i] + (1.0 - beta2_) * g[k][i] * g[k][i];
      p[k][i] -= lr_ * (m[k][i] / c1) / (std::sqrt(v[k][i] / c2) + eps_);
    }
  }
}

double model_accuracy(const RnnModel& model, std::span<const Sequence> split) {
  if (split.empty()) throw InputError("accuracy needs a non-empty split");
  std::size_t correct = 0;
  for (const auto& s : split) correct += predict(model, s) == s.label;
  return static_cast<double>(correct) / static_cast<double>(split.size());
}

TrainResult train_model(CellKind kind, const Dataset& dataset, const ModelDims& dims,
                        const HyperParams& hp) {
  validate(hp);
  Rng rng(derive_seed(hp.seed, 0));
  RnnModel model = RnnModel::random(kind, dataset.alphabet, dims, hp.init_scale, rng);
  model.train_embedding = dataset.alphabet.size() > 2 || dims.d_emb < dataset.alphabet.size();
  return train_from(std::move(model), dataset, hp);
}

TrainResult train_from(RnnModel model, const Dataset& dataset, const HyperParams& hp) {
  validate(hp);
  if (dataset.train.empty()) throw ConfigError("training split is empty");
  validate(dataset);

  Rng shuffle_rng(derive_seed(hp.seed, 1));
  Adam adam(model.params, hp);
  std::vector<std::size_t> order(dataset.train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Sequence> batch;
  const auto& eval_split = dataset.validation.empty() ? dataset.train : dataset.validation;

  TrainResult result;
  result.model = model;
  double best_valid = -1.0;
  for (std::size_t epoch = 1; epoch <= hp.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.index(i)]);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
      const std::size_t end = std::min(order.size(), start + hp.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(dataset.train[order[i]]);
      LossAndGrads lg;
      try {
        lg = loss_and_grads(model, batch);
      } catch (const NumericalError& e) {
        throw TrainingError(std::string("training diverged: ") + e.what() + " at epoch " +
                                std::to_string(epoch),
                            epoch);
      }
      if (!std::isfinite(lg.loss))
        throw TrainingError("training diverged at epoch " + std::to_string(epoch), epoch);
      if (!model.train_embedding) lg.grads.embedding.setZero();
      if (hp.clip_norm > 0.0) {
        const double norm = global_norm(lg.grads);
        if (norm > hp.clip_norm) {
          const double s = hp.clip_norm / norm;
          for (auto t : lg.grads.tensors())
            for (double& g : t) g *= s;
        }
      }
      adam.step(model, lg.grads);
      loss_sum += lg.loss;
      ++batches;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(batches);
    rec.train_acc = model_accuracy(model, dataset.train);
    rec.valid_acc = model_accuracy(model, eval_split);
    result.history.push_back(rec);
    if (rec.valid_acc >= best_valid) {
      best_valid = rec.valid_acc;
      result.model = model;
      result.best_epoch = epoch;
    }
    if (epoch >= hp.min_epochs && rec.train_acc >= hp.early_stop_acc) break;
  }
  return result;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,loss,train_acc,valid_acc\n";
  for (const auto& r : history)
    out << r.epoch << ',' << r.loss << ',' << r.train_acc << ',' << r.valid_acc << '\n';
  return out.str();
}

}  // namespace lisor
