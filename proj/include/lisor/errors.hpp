#pragma once

#include <stdexcept>
#include <string>

namespace lisor {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid task names, option combinations, or experiment configs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Dimension mismatch between vectors, matrices, or parameter sets.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Out-of-range tokens, states, or symbols.
class InputError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::size_t sequence_index)
      : Error(what), sequence_index_(sequence_index) {}
  std::size_t sequence_index() const { return sequence_index_; }

 private:
  std::size_t sequence_index_;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, std::size_t epoch)
      : Error(what), epoch_(epoch) {}
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

class ClusteringError : public Error {
 public:
  using Error::Error;
};

// Inconsistent pool/clustering/count structures.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Malformed serialized input. field() names the offending key.
class ParseError : public Error {
 public:
  ParseError(const std::string& field, const std::string& what)
      : Error("parse error at '" + field + "': " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace lisor
