#include "lisor/fsa.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "lisor/errors.hpp"
#include "lisor/train.hpp"

namespace lisor {

using ordered_json = nlohmann::ordered_json;

namespace {
constexpr const char* kFsaVersion = "lisor-fsa-v1";
}

CountTensor::CountTensor(std::size_t n_states, std::size_t n_symbols)
    : n_states_(n_states), n_symbols_(n_symbols), counts_(n_symbols * (n_states + 1) * n_states, 0) {}

std::size_t CountTensor::index(Symbol s, std::size_t from, std::size_t to) const {
  if (s >= n_symbols_ || from > n_states_ || to >= n_states_)
    throw InputError("count index (" + std::to_string(s) + ", " + std::to_string(from) + ", " +
                     std::to_string(to) + ") out of range");
  return (static_cast<std::size_t>(s) * (n_states_ + 1) + from) * n_states_ + to;
}

std::uint64_t CountTensor::at(Symbol s, std::size_t from, std::size_t to) const {
  return counts_[index(s, from, to)];
}

std::uint64_t& CountTensor::at(Symbol s, std::size_t from, std::size_t to) {
  return counts_[index(s, from, to)];
}

std::uint64_t CountTensor::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

TransitionTable::TransitionTable(std::size_t n_states, std::size_t n_symbols)
    : rows_(n_states + 1), cols_(n_symbols), table_(rows_ * cols_, kUndefined) {}

CountTensor build_counts(const TracePool& pool, const Clustering& clustering, std::size_t n_symbols) {
  if (clustering.assign.size() != pool.points.size())
    throw StructuralError("clustering covers " + std::to_string(clustering.assign.size()) +
                          " points, pool has " + std::to_string(pool.points.size()));
  validate(pool);
  CountTensor counts(clustering.k, n_symbols);
  std::size_t prev = counts.start_row();
  for (std::size_t p = 0; p < pool.points.size(); ++p) {
    const auto& point = pool.points[p];
    const std::size_t cur = clustering.assign[p];
    if (cur >= clustering.k) throw StructuralError("assignment outside [0, k)");
    const std::size_t from = point.position == 1 ? counts.start_row() : prev;
    ++counts.at(point.symbol, from, cur);
    prev = cur;
  }
  return counts;
}

TransitionTable determinize(const CountTensor& counts) {
  TransitionTable t(counts.n_states(), counts.n_symbols());
  for (Symbol s = 0; s < counts.n_symbols(); ++s) {
    for (std::size_t from = 0; from <= counts.n_states(); ++from) {
      std::uint64_t best = 0;
      StateId arg = kUndefined;
      for (std::size_t to = 0; to < counts.n_states(); ++to) {
        const auto c = counts.at(s, from, to);
        if (c > best) {
          best = c;
          arg = static_cast<StateId>(to);
        }
      }
      t.at(from, s) = arg;
    }
  }
  return t;
}

std::vector<StateId> accepting_states(const Clustering& clustering, const TracePool& pool,
                                      const RnnModel& model) {
  if (clustering.assign.size() != pool.points.size())
    throw StructuralError("clustering does not cover the pool");
  const auto d = static_cast<Eigen::Index>(pool.d);
  std::vector<Vector> sums(clustering.k, Vector::Zero(d));
  std::vector<std::size_t> sizes(clustering.k, 0);
  for (std::size_t p = 0; p < pool.points.size(); ++p) {
    sums[clustering.assign[p]] += pool.points[p].h;
    ++sizes[clustering.assign[p]];
  }
  std::vector<StateId> out;
  for (std::size_t c = 0; c < clustering.k; ++c) {
    if (sizes[c] == 0) continue;
    const Vector mean = sums[c] / static_cast<double>(sizes[c]);
    if (classify_vector(model, mean) == 1) out.push_back(static_cast<StateId>(c));
  }
  return out;
}

Fsa::Fsa(Alphabet alphabet, std::size_t n_states, std::vector<StateId> accepting,
         TransitionTable transitions)
    : alphabet_(std::move(alphabet)),
      n_states_(n_states),
      accepting_(std::move(accepting)),
      accepting_mask_(n_states, false),
      transitions_(std::move(transitions)) {
  if (alphabet_.size() == 0) throw StructuralError("FSA alphabet is empty");
  if (n_states_ == 0) throw StructuralError("FSA needs at least one state");
  if (transitions_.rows() != n_states_ + 1 || transitions_.cols() != alphabet_.size())
    throw StructuralError("transition table is " + std::to_string(transitions_.rows()) + "x" +
                          std::to_string(transitions_.cols()) + ", expected " +
                          std::to_string(n_states_ + 1) + "x" + std::to_string(alphabet_.size()));
  for (std::size_t r = 0; r < transitions_.rows(); ++r) {
    for (Symbol s = 0; s < transitions_.cols(); ++s) {
      const StateId t = transitions_.at(r, s);
      if (t != kUndefined && (t < 0 || static_cast<std::size_t>(t) >= n_states_))
        throw StructuralError("transition target " + std::to_string(t) + " out of range");
    }
  }
  std::sort(accepting_.begin(), accepting_.end());
  if (std::adjacent_find(accepting_.begin(), accepting_.end()) != accepting_.end())
    throw StructuralError("duplicate accepting state");
  for (StateId a : accepting_) {
    if (a < 0 || static_cast<std::size_t>(a) >= n_states_)
      throw StructuralError("accepting state " + std::to_string(a) + " is not a real state");
    accepting_mask_[static_cast<std::size_t>(a)] = true;
  }
}

bool Fsa::is_accepting(StateId s) const {
  return s >= 0 && static_cast<std::size_t>(s) < n_states_ && accepting_mask_[static_cast<std::size_t>(s)];
}

StateId fsa_step(const Fsa& fsa, StateId state, Symbol symbol) {
  if (state < 0 || state > fsa.start())
    throw InputError("state " + std::to_string(state) + " out of range");
  if (symbol >= fsa.alphabet().size())
    throw InputError("symbol " + std::to_string(symbol) + " outside alphabet");
  const StateId next = fsa.transitions().at(static_cast<std::size_t>(state), symbol);
  if (next != kUndefined) return next;
  return state == fsa.start() ? 0 : state;
}

std::vector<StateId> fsa_path(const Fsa& fsa, const std::vector<Symbol>& tokens) {
  std::vector<StateId> path{fsa.start()};
  for (Symbol t : tokens) path.push_back(fsa_step(fsa, path.back(), t));
  return path;
}

Label fsa_classify(const Fsa& fsa, const Sequence& seq) {
  StateId state = fsa.start();
  for (Symbol t : seq.tokens) state = fsa_step(fsa, state, t);
  return fsa.is_accepting(state) ? 1 : 0;
}

FsaEnsemble::FsaEnsemble(std::vector<Fsa> members) : members_(std::move(members)) {
  if (members_.empty() || members_.size() % 2 == 0)
    throw ConfigError("ensemble needs an odd number of members, got " + std::to_string(members_.size()));
  for (const auto& m : members_)
    if (!(m.alphabet() == members_.front().alphabet()))
      throw ConfigError("ensemble members have different alphabets");
}

Label ensemble_classify(const FsaEnsemble& ensemble, const Sequence& seq) {
  std::size_t votes = 0;
  for (const auto& m : ensemble.members()) votes += fsa_classify(m, seq) == 1;
  return 2 * votes > ensemble.members().size() ? 1 : 0;
}

namespace {

template <class Predict>
double accuracy_of(std::span<const Sequence> split, Predict&& predict) {
  if (split.empty()) throw InputError("accuracy needs a non-empty split");
  std::size_t correct = 0;
  for (const auto& s : split) correct += predict(s) == s.label;
  return static_cast<double>(correct) / static_cast<double>(split.size());
}

}  // namespace

double accuracy(const Fsa& fsa, std::span<const Sequence> split) {
  return accuracy_of(split, [&](const Sequence& s) { return fsa_classify(fsa, s); });
}

double accuracy(const RnnModel& model, std::span<const Sequence> split) {
  return model_accuracy(model, split);
}

double accuracy(const FsaEnsemble& ensemble, std::span<const Sequence> split) {
  return accuracy_of(split, [&](const Sequence& s) { return ensemble_classify(ensemble, s); });
}

Extraction extract_fsa(const RnnModel& model, const TracePool& pool, std::size_t k,
                       ClusterMethod method, Rng& rng, const ExtractOptions& opts) {
  if (k < 1) throw ConfigError("k must be at least 1");
  Clustering clustering = cluster_pool(pool, k, method, rng, opts.cluster);
  CountTensor counts = build_counts(pool, clustering, model.alphabet_size());
  TransitionTable table = determinize(counts);
  auto accepting = accepting_states(clustering, pool, model);
  Fsa fsa(model.alphabet, clustering.k, std::move(accepting), std::move(table));
  return {std::move(clustering), std::move(counts), std::move(fsa)};
}

Fsa build_fsa(const RnnModel& model, const TracePool& pool, std::size_t k, ClusterMethod method,
              Rng& rng, const ExtractOptions& opts) {
  return extract_fsa(model, pool, k, method, rng, opts).fsa;
}

SweepResult sweep_k(const RnnModel& model, const TracePool& pool, const std::vector<std::size_t>& ks,
                    std::span<const Sequence> eval_split, double target, ClusterMethod method,
                    std::uint64_t seed, const ExtractOptions& opts) {
  if (ks.empty()) throw ConfigError("k sweep needs at least one value");
  if (!std::is_sorted(ks.begin(), ks.end()) || std::adjacent_find(ks.begin(), ks.end()) != ks.end())
    throw ConfigError("k sweep values must be strictly ascending");
  if (ks.front() < 1) throw ConfigError("k sweep values must be positive");

  std::size_t distinct = 0;
  if (method == ClusterMethod::KMeansX) {
    distinct = count_distinct(augment_position(pool, opts.cluster.position_scale));
  } else {
    std::vector<Vector> raw;
    raw.reserve(pool.points.size());
    for (const auto& p : pool.points) raw.push_back(p.h);
    distinct = count_distinct(raw);
  }

  SweepResult result;
  for (std::size_t k : ks) {
    const std::size_t used = std::min(k, distinct);
    Rng rng(derive_seed(seed, k));
    Fsa fsa = build_fsa(model, pool, used, method, rng, opts);
    const double acc = accuracy(fsa, eval_split);
    if (!result.min_k && acc >= target) result.min_k = k;
    result.curve.push_back({k, used, acc, std::move(fsa)});
  }
  return result;
}

std::string fsa_to_json(const Fsa& fsa) {
  ordered_json j;
  j["version"] = kFsaVersion;
  j["alphabet"] = fsa.alphabet().symbols();
  j["n_states"] = fsa.n_states();
  j["start"] = fsa.start();
  j["accepting"] = fsa.accepting();
  auto rows = ordered_json::array();
  for (std::size_t r = 0; r < fsa.transitions().rows(); ++r) {
    auto row = ordered_json::array();
    for (Symbol s = 0; s < fsa.transitions().cols(); ++s) row.push_back(fsa.transitions().at(r, s));
    rows.push_back(std::move(row));
  }
  j["T"] = std::move(rows);
  return j.dump();
}

Fsa fsa_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("<document>", e.what());
  }
  auto require = [&](const char* key) -> const ordered_json& {
    if (!j.is_object() || !j.contains(key)) throw ParseError(key, "missing field");
    return j.at(key);
  };
  const auto& version = require("version");
  if (!version.is_string() || version.get<std::string>() != kFsaVersion)
    throw ParseError("version", "expected \"" + std::string(kFsaVersion) + "\"");

  Alphabet alphabet;
  std::size_t n_states = 0;
  std::vector<StateId> accepting;
  try {
    alphabet = Alphabet(require("alphabet").get<std::vector<std::string>>());
  } catch (const std::exception& e) {
    throw ParseError("alphabet", e.what());
  }
  try {
    n_states = require("n_states").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("n_states", e.what());
  }
  try {
    if (require("start").get<std::int64_t>() != static_cast<std::int64_t>(n_states))
      throw ParseError("start", "start state must equal n_states");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("start", e.what());
  }
  try {
    accepting = require("accepting").get<std::vector<StateId>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("accepting", e.what());
  }
  for (StateId a : accepting)
    if (a < 0 || static_cast<std::size_t>(a) >= n_states)
      throw ParseError("accepting", "state " + std::to_string(a) + " is not a real state");
  const auto& rows = require("T");
  if (!rows.is_array() || rows.size() != n_states + 1)
    throw ParseError("T", "expected " + std::to_string(n_states + 1) + " rows");
  TransitionTable table(n_states, alphabet.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string where = "T[" + std::to_string(r) + "]";
    if (!rows[r].is_array() || rows[r].size() != alphabet.size())
      throw ParseError(where, "expected " + std::to_string(alphabet.size()) + " columns");
    for (Symbol s = 0; s < alphabet.size(); ++s) {
      if (!rows[r][s].is_number_integer()) throw ParseError(where, "expected integer state ids");
      table.at(r, s) = rows[r][s].get<StateId>();
    }
  }
  try {
    return Fsa(std::move(alphabet), n_states, std::move(accepting), std::move(table));
  } catch (const StructuralError& e) {
    throw ParseError("T", e.what());
  }
}

void save_fsa(const std::string& path, const Fsa& fsa) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << fsa_to_json(fsa) << '\n';
}

Fsa load_fsa(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return fsa_from_json(ss.str());
}

}  // namespace lisor
