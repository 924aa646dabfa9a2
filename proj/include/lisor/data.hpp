#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace lisor {

using Symbol = std::uint32_t;
using Label = int;

// Ordered set of distinct symbol strings; a symbol's index is its position.
class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> symbols);

  static Alphabet binary() { return Alphabet({"0", "1"}); }

  std::size_t size() const { return symbols_.size(); }
  const std::string& symbol(Symbol index) const;
  Symbol index(const std::string& symbol) const;
  bool contains(const std::string& symbol) const { return lookup_.count(symbol) > 0; }
  const std::vector<std::string>& symbols() const { return symbols_; }

  friend bool operator==(const Alphabet& a, const Alphabet& b) {
    return a.symbols_ == b.symbols_;
  }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, Symbol> lookup_;
};

struct Sequence {
  std::vector<Symbol> tokens;
  Label label = 0;

  friend bool operator==(const Sequence&, const Sequence&) = default;
};

struct Dataset {
  Alphabet alphabet;
  std::vector<Sequence> train;
  std::vector<Sequence> validation;
  std::vector<Sequence> test;
  std::string task_name;
  std::uint64_t seed = 0;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Throws InputError if a sequence is empty or has a token outside the alphabet.
void validate(const Sequence& seq, const Alphabet& alphabet);
void validate(const Dataset& dataset);

// Ground-truth labels of the synthetic tasks: "0110" accepts exactly the
// string 0110; "000" accepts any string containing three consecutive zeros.
Label label_oracle(const std::string& task, const std::vector<Symbol>& tokens);

struct Task0110Options {
  std::size_t n_train = 1000;
  std::size_t n_test = 100;
  std::uint64_t seed = 0;
  // Fill the training split by cycling through the 16 distinct strings
  // instead of sampling.
  bool enumerate_train = false;
};

struct Task000Options {
  std::size_t n_train = 3000;
  std::size_t n_valid = 500;
  std::size_t n_test = 500;
  std::size_t min_len = 4;
  std::size_t max_len = 12;
  std::uint64_t seed = 0;
};

// All 2^length binary strings in lexicographic order.
std::vector<std::vector<Symbol>> enumerate_binary(std::size_t length);

Dataset gen_task_0110(const Task0110Options& opts);
Dataset gen_task_000(const Task000Options& opts);

// Fraction of label-1 sequences; 0 for an empty split.
double positive_rate(const std::vector<Sequence>& split);

// JSON Lines: a header {"alphabet":[..],"task":..,"seed":..} followed by one
// {"split":..,"tokens":[..],"label":..} object per sequence.
void write_dataset(std::ostream& out, const Dataset& dataset);
Dataset read_dataset(std::istream& in);
void save_dataset(const std::string& path, const Dataset& dataset);
Dataset load_dataset(const std::string& path);

}  // namespace lisor
