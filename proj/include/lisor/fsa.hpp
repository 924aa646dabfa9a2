#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lisor/cluster.hpp"
#include "lisor/data.hpp"
#include "lisor/rnn.hpp"

namespace lisor {

using StateId = std::int32_t;
inline constexpr StateId kUndefined = -1;

// Per-symbol transition counts N_s of shape (|Q| + 1) x |Q|. Row |Q| is the
// start state.
class CountTensor {
 public:
  CountTensor(std::size_t n_states, std::size_t n_symbols);

  std::size_t n_states() const { return n_states_; }
  std::size_t n_symbols() const { return n_symbols_; }
  std::size_t start_row() const { return n_states_; }

  std::uint64_t at(Symbol s, std::size_t from, std::size_t to) const;
  std::uint64_t& at(Symbol s, std::size_t from, std::size_t to);
  std::uint64_t total() const;

  friend bool operator==(const CountTensor&, const CountTensor&) = default;

 private:
  std::size_t index(Symbol s, std::size_t from, std::size_t to) const;

  std::size_t n_states_;
  std::size_t n_symbols_;
  std::vector<std::uint64_t> counts_;
};

// Rows 0..|Q|-1 are real states, row |Q| is the start state; one column per
// symbol; entries are successor ids or kUndefined.
class TransitionTable {
 public:
  TransitionTable(std::size_t n_states, std::size_t n_symbols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  StateId at(std::size_t row, Symbol s) const { return table_[row * cols_ + s]; }
  StateId& at(std::size_t row, Symbol s) { return table_[row * cols_ + s]; }

  friend bool operator==(const TransitionTable&, const TransitionTable&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<StateId> table_;
};

CountTensor build_counts(const TracePool& pool, const Clustering& clustering, std::size_t n_symbols);

// Most frequent successor per (state, symbol); ties to the lowest state,
// all-zero rows to kUndefined.
TransitionTable determinize(const CountTensor& counts);

// Clusters whose mean original hidden vector the model classifies positive.
// Returned sorted ascending; empty clusters are never accepting.
std::vector<StateId> accepting_states(const Clustering& clustering, const TracePool& pool,
                                      const RnnModel& model);

class Fsa {
 public:
  // Validates determinism, id ranges and |alphabet| columns; throws
  // StructuralError otherwise.
  Fsa(Alphabet alphabet, std::size_t n_states, std::vector<StateId> accepting,
      TransitionTable transitions);

  const Alphabet& alphabet() const { return alphabet_; }
  std::size_t n_states() const { return n_states_; }
  StateId start() const { return static_cast<StateId>(n_states_); }
  const std::vector<StateId>& accepting() const { return accepting_; }
  bool is_accepting(StateId s) const;
  const TransitionTable& transitions() const { return transitions_; }

  friend bool operator==(const Fsa& a, const Fsa& b) {
    return a.alphabet_ == b.alphabet_ && a.n_states_ == b.n_states_ && a.accepting_ == b.accepting_ &&
           a.transitions_ == b.transitions_;
  }

 private:
  Alphabet alphabet_;
  std::size_t n_states_;
  std::vector<StateId> accepting_;
  std::vector<bool> accepting_mask_;
  TransitionTable transitions_;
};

// T(state, symbol). An undefined transition stays put at a real state and
// falls to state 0 from the start state.
StateId fsa_step(const Fsa& fsa, StateId state, Symbol symbol);

// Visited states, starting with the start state (length T + 1).
std::vector<StateId> fsa_path(const Fsa& fsa, const std::vector<Symbol>& tokens);

Label fsa_classify(const Fsa& fsa, const Sequence& seq);

class FsaEnsemble {
 public:
  // Throws ConfigError on an even or zero member count or mismatched alphabets.
  explicit FsaEnsemble(std::vector<Fsa> members);

  const std::vector<Fsa>& members() const { return members_; }

 private:
  std::vector<Fsa> members_;
};

// 1 iff strictly more than half of the members vote 1.
Label ensemble_classify(const FsaEnsemble& ensemble, const Sequence& seq);

double accuracy(const Fsa& fsa, std::span<const Sequence> split);
double accuracy(const RnnModel& model, std::span<const Sequence> split);
double accuracy(const FsaEnsemble& ensemble, std::span<const Sequence> split);

struct ExtractOptions {
  ClusterOptions cluster;
};

struct Extraction {
  Clustering clustering;
  CountTensor counts;
  Fsa fsa;
};

// Cluster the pool, count transitions, determinize, pick accepting states.
// The alphabet is the model's.
Extraction extract_fsa(const RnnModel& model, const TracePool& pool, std::size_t k,
                       ClusterMethod method, Rng& rng, const ExtractOptions& opts = {});

Fsa build_fsa(const RnnModel& model, const TracePool& pool, std::size_t k, ClusterMethod method,
              Rng& rng, const ExtractOptions& opts = {});

struct SweepPoint {
  std::size_t k = 0;
  // Clusters actually used: k capped at the number of distinct points.
  std::size_t n_states = 0;
  double accuracy = 0.0;
  Fsa fsa;
};

struct SweepResult {
  std::optional<std::size_t> min_k;  // empty when the target is never met
  std::vector<SweepPoint> curve;
};

// One FSA per k, each clustered with its own stream derive_seed(seed, k).
SweepResult sweep_k(const RnnModel& model, const TracePool& pool, const std::vector<std::size_t>& ks,
                    std::span<const Sequence> eval_split, double target, ClusterMethod method,
                    std::uint64_t seed, const ExtractOptions& opts = {});

// {"version":"lisor-fsa-v1","alphabet":..,"n_states":..,"start":..,
//  "accepting":..,"T":[[..],..]} with -1 for undefined entries.
std::string fsa_to_json(const Fsa& fsa);
Fsa fsa_from_json(const std::string& text);
void save_fsa(const std::string& path, const Fsa& fsa);
Fsa load_fsa(const std::string& path);

}  // namespace lisor
