#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace decompnet {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Vector/matrix lengths disagree with the model or each other.
struct ShapeError : Error {
  using Error::Error;
};

// Caller violated a precondition (index out of range, empty dataset, ...).
struct UsageError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct NumericError : Error {
  using Error::Error;
};

// A sweep produced a non-finite value or one above the divergence guard.
struct DivergenceError : Error {
  DivergenceError(int sweep_index, int branch_index, const std::string& what)
      : Error(what), sweep(sweep_index), branch(branch_index) {}
  int sweep;
  int branch;
};

struct ParseError : Error {
  ParseError(std::size_t byte_offset, const std::string& what)
      : Error(what + " (at byte " + std::to_string(byte_offset) + ")"),
        offset(byte_offset) {}
  std::size_t offset;
};

struct LoadError : Error {
  LoadError(std::string path, const std::string& what)
      : Error(path + ": " + what), field_path(std::move(path)) {}
  std::string field_path;
};

}  // namespace decompnet
