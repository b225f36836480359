#pragma once

#include <stdexcept>
#include <string>

namespace gapsim {

// Error categories. The CLI maps each one onto a distinct exit code.
enum class ErrorKind {
  Config,
  Io,
  Embedding,
  HorizonExhausted,
  Range,
  InsufficientData,
  Numerical,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

class EmbeddingError : public Error {
public:
  EmbeddingError(const std::string& what, double most_negative)
      : Error(ErrorKind::Embedding, what), most_negative_(most_negative) {}

  double most_negative_eigenvalue() const noexcept { return most_negative_; }

private:
  double most_negative_;
};

// A zero inside the requested window has no recorded successor; the caller
// has to simulate a longer path.
class HorizonExhausted : public Error {
public:
  explicit HorizonExhausted(const std::string& what)
      : Error(ErrorKind::HorizonExhausted, what) {}
};

class RangeError : public Error {
public:
  RangeError(const std::string& what, double lo, double hi)
      : Error(ErrorKind::Range, what), lo_(lo), hi_(hi) {}

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

private:
  double lo_;
  double hi_;
};

class InsufficientData : public Error {
public:
  explicit InsufficientData(const std::string& what)
      : Error(ErrorKind::InsufficientData, what) {}
};

class NumericalError : public Error {
public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::Numerical, what) {}
};

}  // namespace gapsim
