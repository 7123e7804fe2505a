#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace simnet {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  DimensionError(std::string axis, std::ptrdiff_t expected, std::ptrdiff_t actual);
  const std::string& axis() const { return axis_; }

 private:
  std::string axis_;
};

// Pivot of a stage block fell below the relative singularity threshold.
class SingularError : public Error {
 public:
  SingularError(std::ptrdiff_t stage, double relative_pivot);
  std::ptrdiff_t stage() const { return stage_; }

 private:
  std::ptrdiff_t stage_;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(std::string what, int iteration);
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(std::string what, std::vector<std::ptrdiff_t> columns);
  const std::vector<std::ptrdiff_t>& columns() const { return columns_; }

 private:
  std::vector<std::ptrdiff_t> columns_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0);
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace simnet
