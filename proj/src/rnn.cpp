#include "lisor/rnn.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "cell_math.hpp"
#include "json.hpp"
#include "lisor/errors.hpp"

namespace lisor {

using ordered_json = nlohmann::ordered_json;

namespace {
constexpr const char* kModelVersion = "lisor-model-v1";
}

std::string_view to_string(CellKind kind) {
  switch (kind) {
    case CellKind::SRN: return "SRN";
    case CellKind::MGU: return "MGU";
    case CellKind::GRU: return "GRU";
    case CellKind::LSTM: return "LSTM";
  }
  return "?";
}

CellKind parse_cell_kind(std::string_view name) {
  for (CellKind k : kAllCellKinds)
    if (to_string(k) == name) return k;
  throw ConfigError("unknown cell kind '" + std::string(name) + "' (expected SRN, MGU, GRU, LSTM)");
}

std::size_t gate_count(CellKind kind) {
  switch (kind) {
    case CellKind::SRN: return 0;
    case CellKind::MGU: return 1;
    case CellKind::GRU: return 2;
    case CellKind::LSTM: return 3;
  }
  return 0;
}

std::size_t block_count(CellKind kind) { return gate_count(kind) + 1; }

std::vector<std::string> block_names(CellKind kind) {
  switch (kind) {
    case CellKind::SRN: return {"h"};
    case CellKind::MGU: return {"f", "h"};
    case CellKind::GRU: return {"z", "r", "h"};
    case CellKind::LSTM: return {"f", "i", "o", "c"};
  }
  return {};
}

CellParams CellParams::zeros(CellKind kind, std::size_t hidden, std::size_t input) {
  CellParams p;
  p.kind = kind;
  const auto d = static_cast<Eigen::Index>(hidden);
  const auto cols = static_cast<Eigen::Index>(hidden + input);
  for (std::size_t i = 0; i < block_count(kind); ++i) {
    p.W.push_back(Matrix::Zero(d, cols));
    p.b.push_back(Vector::Zero(d));
  }
  return p;
}

std::vector<std::span<double>> Parameters::tensors() {
  std::vector<std::span<double>> out;
  out.emplace_back(embedding.data(), static_cast<std::size_t>(embedding.size()));
  for (auto& layer : layers) {
    for (std::size_t i = 0; i < layer.W.size(); ++i) {
      out.emplace_back(layer.W[i].data(), static_cast<std::size_t>(layer.W[i].size()));
      out.emplace_back(layer.b[i].data(), static_cast<std::size_t>(layer.b[i].size()));
    }
  }
  out.emplace_back(classifier_w.data(), static_cast<std::size_t>(classifier_w.size()));
  out.emplace_back(&classifier_b, 1);
  return out;
}

std::vector<std::span<const double>> Parameters::tensors() const {
  auto mutable_views = const_cast<Parameters*>(this)->tensors();
  return {mutable_views.begin(), mutable_views.end()};
}

std::vector<std::string> Parameters::tensor_names() const {
  std::vector<std::string> names{"embedding"};
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (const auto& block : block_names(layers[l].kind)) {
      names.push_back("layer" + std::to_string(l) + ".W_" + block);
      names.push_back("layer" + std::to_string(l) + ".b_" + block);
    }
  }
  names.emplace_back("classifier.w");
  names.emplace_back("classifier.b");
  return names;
}

std::size_t Parameters::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.size();
  return n;
}

Parameters Parameters::zeros_like() const {
  Parameters z;
  z.embedding = Matrix::Zero(embedding.rows(), embedding.cols());
  for (const auto& layer : layers) z.layers.push_back(CellParams::zeros(layer.kind, layer.hidden(), layer.input()));
  z.classifier_w = Vector::Zero(classifier_w.size());
  z.classifier_b = 0.0;
  return z;
}

RnnModel RnnModel::zeros(CellKind kind, const Alphabet& alphabet, const ModelDims& dims) {
  if (dims.layers < 1) throw ConfigError("model needs at least one layer");
  if (dims.hidden < 1 || dims.d_emb < 1) throw ConfigError("model dimensions must be positive");
  if (alphabet.size() == 0) throw ConfigError("model needs a non-empty alphabet");
  RnnModel m;
  m.kind = kind;
  m.dims = dims;
  m.alphabet = alphabet;
  m.params.embedding = Matrix::Zero(static_cast<Eigen::Index>(alphabet.size()),
                                    static_cast<Eigen::Index>(dims.d_emb));
  for (std::size_t l = 0; l < dims.layers; ++l)
    m.params.layers.push_back(CellParams::zeros(kind, dims.hidden, l == 0 ? dims.d_emb : dims.hidden));
  m.params.classifier_w = Vector::Zero(static_cast<Eigen::Index>(dims.hidden));
  return m;
}

RnnModel RnnModel::random(CellKind kind, const Alphabet& alphabet, const ModelDims& dims,
                          double scale, Rng& rng) {
  RnnModel m = zeros(kind, alphabet, dims);
  auto fill = [&](auto& tensor) {
    for (Eigen::Index i = 0; i < tensor.size(); ++i) tensor.data()[i] = rng.uniform(-scale, scale);
  };
  if (dims.d_emb >= alphabet.size()) {
    for (Eigen::Index s = 0; s < m.params.embedding.rows(); ++s) m.params.embedding(s, s) = 1.0;
  } else {
    fill(m.params.embedding);
  }
  for (auto& layer : m.params.layers)
    for (auto& W : layer.W) fill(W);
  fill(m.params.classifier_w);
  return m;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace detail {

void check_shapes(const CellParams& params, const LayerState& state, const Vector& x) {
  if (params.W.size() != block_count(params.kind) || params.b.size() != params.W.size())
    throw ShapeError("cell has " + std::to_string(params.W.size()) + " blocks, " +
                     std::string(to_string(params.kind)) + " needs " +
                     std::to_string(block_count(params.kind)));
  const auto d = static_cast<Eigen::Index>(params.hidden());
  for (std::size_t i = 0; i < params.W.size(); ++i) {
    if (params.W[i].rows() != d || params.b[i].size() != d ||
        params.W[i].cols() != params.W.front().cols())
      throw ShapeError("inconsistent cell block shapes");
  }
  if (state.h.size() != d) throw ShapeError("hidden state has length " + std::to_string(state.h.size()) +
                                            ", expected " + std::to_string(d));
  if (params.kind == CellKind::LSTM && state.c.size() != d)
    throw ShapeError("LSTM cell state has wrong length");
  if (x.size() != params.W.front().cols() - d)
    throw ShapeError("input has length " + std::to_string(x.size()) + ", expected " +
                     std::to_string(params.W.front().cols() - d));
}

namespace {
Vector concat(const Vector& a, const Vector& b) {
  Vector out(a.size() + b.size());
  out << a, b;
  return out;
}
}  // namespace

void step_forward(const CellParams& p, const Vector& h_prev, const Vector& c_prev, const Vector& x,
                  StepCache& cache) {
  cache.h_prev = h_prev;
  cache.x = x;
  cache.concat = concat(h_prev, x);
  cache.gates.clear();
  switch (p.kind) {
    case CellKind::SRN:
      cache.candidate = tanh_vec(p.W[0] * cache.concat + p.b[0]);
      cache.h = cache.candidate;
      break;
    case CellKind::MGU: {
      cache.gates.push_back(sigmoid_vec(p.W[0] * cache.concat + p.b[0]));
      const Vector& f = cache.gates[0];
      cache.gated_concat = concat(f.cwiseProduct(h_prev), x);
      cache.candidate = tanh_vec(p.W[1] * cache.gated_concat + p.b[1]);
      cache.h = (1.0 - f.array()).matrix().cwiseProduct(h_prev) + f.cwiseProduct(cache.candidate);
      break;
    }
    case CellKind::GRU: {
      cache.gates.push_back(sigmoid_vec(p.W[0] * cache.concat + p.b[0]));
      cache.gates.push_back(sigmoid_vec(p.W[1] * cache.concat + p.b[1]));
      const Vector& z = cache.gates[0];
      const Vector& r = cache.gates[1];
      cache.gated_concat = concat(r.cwiseProduct(h_prev), x);
      cache.candidate = tanh_vec(p.W[2] * cache.gated_concat + p.b[2]);
      cache.h = (1.0 - z.array()).matrix().cwiseProduct(h_prev) + z.cwiseProduct(cache.candidate);
      break;
    }
    case CellKind::LSTM: {
      for (int g = 0; g < 3; ++g) cache.gates.push_back(sigmoid_vec(p.W[g] * cache.concat + p.b[g]));
      cache.candidate = tanh_vec(p.W[3] * cache.concat + p.b[3]);
      cache.c_prev = c_prev;
      cache.c = cache.gates[0].cwiseProduct(c_prev) + cache.gates[1].cwiseProduct(cache.candidate);
      cache.tanh_c = tanh_vec(cache.c);
      cache.h = cache.gates[2].cwiseProduct(cache.tanh_c);
      break;
    }
  }
}

void step_backward(const CellParams& p, const StepCache& cache, const Vector& dh, const Vector& dc,
                   CellParams& grad, Vector& dh_prev, Vector& dc_prev, Vector& dx) {
  const Eigen::Index d = cache.h.size();
  const Eigen::Index din = cache.x.size();
  auto sigmoid_grad = [](const Vector& s) { return s.array() * (1.0 - s.array()); };
  auto tanh_grad = [](const Vector& t) { return 1.0 - t.array().square(); };

  Vector dconcat = Vector::Zero(d + din);
  switch (p.kind) {
    case CellKind::SRN: {
      const Vector da = (dh.array() * tanh_grad(cache.candidate)).matrix();
      grad.W[0].noalias() += da * cache.concat.transpose();
      grad.b[0] += da;
      dconcat.noalias() += p.W[0].transpose() * da;
      dh_prev = dconcat.head(d);
      break;
    }
    case CellKind::MGU:
    case CellKind::GRU: {
      // MGU reuses one gate as both update and reset; GRU has separate z, r.
      const bool gru = p.kind == CellKind::GRU;
      const Vector& update = cache.gates[0];
      const Vector& reset = gru ? cache.gates[1] : cache.gates[0];
      const std::size_t cand = gru ? 2 : 1;

      Vector d_update = (dh.array() * (cache.candidate - cache.h_prev).array()).matrix();
      const Vector dcand = dh.cwiseProduct(update);
      dh_prev = (dh.array() * (1.0 - update.array())).matrix();

      const Vector da_h = (dcand.array() * tanh_grad(cache.candidate)).matrix();
      grad.W[cand].noalias() += da_h * cache.gated_concat.transpose();
      grad.b[cand] += da_h;
      const Vector dgated = p.W[cand].transpose() * da_h;
      const Vector dgh = dgated.head(d);
      dconcat.tail(din) += dgated.tail(din);
      dh_prev += dgh.cwiseProduct(reset);
      const Vector d_reset = dgh.cwiseProduct(cache.h_prev);

      if (gru) {
        const Vector da_z = (d_update.array() * sigmoid_grad(update)).matrix();
        const Vector da_r = (d_reset.array() * sigmoid_grad(reset)).matrix();
        grad.W[0].noalias() += da_z * cache.concat.transpose();
        grad.b[0] += da_z;
        grad.W[1].noalias() += da_r * cache.concat.transpose();
        grad.b[1] += da_r;
        dconcat.noalias() += p.W[0].transpose() * da_z;
        dconcat.noalias() += p.W[1].transpose() * da_r;
      } else {
        d_update += d_reset;
        const Vector da_f = (d_update.array() * sigmoid_grad(update)).matrix();
        grad.W[0].noalias() += da_f * cache.concat.transpose();
        grad.b[0] += da_f;
        dconcat.noalias() += p.W[0].transpose() * da_f;
      }
      dh_prev += dconcat.head(d);
      break;
    }
    case CellKind::LSTM: {
      const Vector& f = cache.gates[0];
      const Vector& i = cache.gates[1];
      const Vector& o = cache.gates[2];
      const Vector d_o = dh.cwiseProduct(cache.tanh_c);
      const Vector dc_total =
          dc + (dh.array() * o.array() * tanh_grad(cache.tanh_c)).matrix();
      const Vector d_f = dc_total.cwiseProduct(cache.c_prev);
      const Vector d_i = dc_total.cwiseProduct(cache.candidate);
      const Vector d_cand = dc_total.cwiseProduct(i);
      dc_prev = dc_total.cwiseProduct(f);

      const std::array<Vector, 4> da{
          (d_f.array() * sigmoid_grad(f)).matrix(), (d_i.array() * sigmoid_grad(i)).matrix(),
          (d_o.array() * sigmoid_grad(o)).matrix(),
          (d_cand.array() * tanh_grad(cache.candidate)).matrix()};
      for (std::size_t k = 0; k < 4; ++k) {
        grad.W[k].noalias() += da[k] * cache.concat.transpose();
        grad.b[k] += da[k];
        dconcat.noalias() += p.W[k].transpose() * da[k];
      }
      dh_prev = dconcat.head(d);
      break;
    }
  }
  dx = dconcat.tail(din);
}

}  // namespace detail

LayerState cell_step(const CellParams& params, const LayerState& state, const Vector& x) {
  detail::check_shapes(params, state, x);
  detail::StepCache cache;
  detail::step_forward(params, state.h, state.c, x, cache);
  LayerState next;
  next.h = std::move(cache.h);
  if (params.kind == CellKind::LSTM) next.c = std::move(cache.c);
  return next;
}

namespace {

void check_tokens(const RnnModel& model, const std::vector<Symbol>& tokens) {
  if (tokens.empty()) throw InputError("cannot run the model on an empty sequence");
  for (Symbol t : tokens) {
    if (t >= model.alphabet_size())
      throw InputError("token " + std::to_string(t) + " outside alphabet of size " +
                       std::to_string(model.alphabet_size()));
  }
}

}  // namespace

HiddenTrace forward(const RnnModel& model, const std::vector<Symbol>& tokens,
                    const ForwardOptions& opts) {
  check_tokens(model, tokens);
  const std::size_t L = model.params.layers.size();
  const std::size_t traced = opts.trace_layer.value_or(L - 1);
  if (traced >= L) throw ConfigError("trace layer " + std::to_string(traced) + " out of range");
  const auto d = static_cast<Eigen::Index>(model.dims.hidden);

  std::vector<LayerState> states(L);
  for (auto& s : states) {
    s.h = Vector::Zero(d);
    if (model.kind == CellKind::LSTM) s.c = Vector::Zero(d);
  }
  HiddenTrace trace;
  trace.h.reserve(tokens.size());
  trace.symbols = tokens;
  detail::StepCache cache;
  for (Symbol t : tokens) {
    Vector input = model.params.embedding.row(t).transpose();
    for (std::size_t l = 0; l < L; ++l) {
      detail::step_forward(model.params.layers[l], states[l].h, states[l].c, input, cache);
      states[l].h = cache.h;
      if (model.kind == CellKind::LSTM) states[l].c = cache.c;
      input = cache.h;
    }
    trace.h.push_back(states[traced].h);
  }
  trace.p = classifier_probability(model, states[L - 1].h);
  return trace;
}

double classifier_probability(const RnnModel& model, const Vector& h) {
  if (h.size() != model.params.classifier_w.size())
    throw ShapeError("classifier expects length " + std::to_string(model.params.classifier_w.size()) +
                     ", got " + std::to_string(h.size()));
  return sigmoid(model.params.classifier_w.dot(h) + model.params.classifier_b);
}

Label classify_vector(const RnnModel& model, const Vector& h) {
  return classifier_probability(model, h) > 0.5 ? 1 : 0;
}

Label predict(const RnnModel& model, const Sequence& seq) {
  return forward(model, seq.tokens).p > 0.5 ? 1 : 0;
}

namespace {

ordered_json matrix_json(const Matrix& m) {
  ordered_json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  auto data = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  j["data"] = std::move(data);
  return j;
}

ordered_json vector_json(const Vector& v) {
  auto a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

double finite_number(const ordered_json& j, const std::string& field) {
  if (!j.is_number()) throw ParseError(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ParseError(field, "non-finite value");
  return v;
}

Matrix parse_matrix(const ordered_json& j, const std::string& field, Eigen::Index rows,
                    Eigen::Index cols) {
  if (!j.is_object()) throw ParseError(field, "expected a matrix object");
  if (j.at("rows").get<Eigen::Index>() != rows || j.at("cols").get<Eigen::Index>() != cols)
    throw ParseError(field, "expected shape " + std::to_string(rows) + "x" + std::to_string(cols));
  const auto& data = j.at("data");
  if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw ParseError(field + ".data", "wrong element count");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = finite_number(data[static_cast<std::size_t>(r * cols + c)], field + ".data");
  return m;
}

Vector parse_vector(const ordered_json& j, const std::string& field, Eigen::Index size) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size)
    throw ParseError(field, "expected an array of length " + std::to_string(size));
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = finite_number(j[static_cast<std::size_t>(i)], field);
  return v;
}

const ordered_json& field_at(const ordered_json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(path + key, "missing field");
  return j.at(key);
}

}  // namespace

std::string model_to_json(const RnnModel& model) {
  ordered_json j;
  j["version"] = kModelVersion;
  j["kind"] = std::string(to_string(model.kind));
  j["dims"] = {{"d_emb", model.dims.d_emb}, {"hidden", model.dims.hidden}, {"layers", model.dims.layers}};
  j["alphabet"] = model.alphabet.symbols();
  j["train_embedding"] = model.train_embedding;
  j["embedding"] = matrix_json(model.params.embedding);
  auto layers = ordered_json::array();
  const auto names = block_names(model.kind);
  for (const auto& layer : model.params.layers) {
    ordered_json lj;
    for (std::size_t i = 0; i < names.size(); ++i) {
      lj["W_" + names[i]] = matrix_json(layer.W[i]);
      lj["b_" + names[i]] = vector_json(layer.b[i]);
    }
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  j["classifier"] = {{"w", vector_json(model.params.classifier_w)}, {"b", model.params.classifier_b}};
  return j.dump(1);
}

RnnModel model_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("<document>", e.what());
  }
  try {
    const auto& version = field_at(j, "version", "");
    if (!version.is_string() || version.get<std::string>() != kModelVersion)
      throw ParseError("version", "expected \"" + std::string(kModelVersion) + "\"");
    const CellKind kind = parse_cell_kind(field_at(j, "kind", "").get<std::string>());
    const auto& dj = field_at(j, "dims", "");
    ModelDims dims{field_at(dj, "d_emb", "dims.").get<std::size_t>(),
                   field_at(dj, "hidden", "dims.").get<std::size_t>(),
                   field_at(dj, "layers", "dims.").get<std::size_t>()};
    Alphabet alphabet(field_at(j, "alphabet", "").get<std::vector<std::string>>());
    RnnModel m = RnnModel::zeros(kind, alphabet, dims);
    m.train_embedding = field_at(j, "train_embedding", "").get<bool>();
    m.params.embedding = parse_matrix(field_at(j, "embedding", ""), "embedding", m.params.embedding.rows(),
                                      m.params.embedding.cols());
    const auto& layers = field_at(j, "layers", "");
    if (!layers.is_array() || layers.size() != dims.layers)
      throw ParseError("layers", "expected " + std::to_string(dims.layers) + " layers");
    const auto names = block_names(kind);
    for (std::size_t l = 0; l < dims.layers; ++l) {
      auto& layer = m.params.layers[l];
      const std::string prefix = "layers[" + std::to_string(l) + "].";
      for (std::size_t i = 0; i < names.size(); ++i) {
        layer.W[i] = parse_matrix(field_at(layers[l], "W_" + names[i], prefix), prefix + "W_" + names[i],
                                  layer.W[i].rows(), layer.W[i].cols());
        layer.b[i] = parse_vector(field_at(layers[l], "b_" + names[i], prefix), prefix + "b_" + names[i],
                                  layer.b[i].size());
      }
    }
    const auto& cj = field_at(j, "classifier", "");
    m.params.classifier_w = parse_vector(field_at(cj, "w", "classifier."), "classifier.w",
                                         m.params.classifier_w.size());
    m.params.classifier_b = finite_number(field_at(cj, "b", "classifier."), "classifier.b");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("<document>", e.what());
  } catch (const ConfigError& e) {
    throw ParseError("<document>", e.what());
  }
}

void save_model(const std::string& path, const RnnModel& model) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << model_to_json(model) << '\n';
}

RnnModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

bool operator==(const RnnModel& a, const RnnModel& b) {
  if (a.kind != b.kind || !(a.dims == b.dims) || !(a.alphabet == b.alphabet) ||
      a.train_embedding != b.train_embedding)
    return false;
  const auto ta = a.params.tensors();
  const auto tb = b.params.tensors();
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i)
    if (!std::equal(ta[i].begin(), ta[i].end(), tb[i].begin(), tb[i].end())) return false;
  return true;
}

}  // namespace lisor
