#include "simnet/errors.hpp"

#include <sstream>

namespace simnet {

namespace {

std::string dimension_message(const std::string& axis, std::ptrdiff_t expected, std::ptrdiff_t actual) {
  std::ostringstream os;
  os << "dimension mismatch on " << axis << ": expected " << expected << ", got " << actual;
  return os.str();
}

std::string singular_message(std::ptrdiff_t stage, double pivot) {
  std::ostringstream os;
  os << "singular stage block at stage " << stage << " (relative pivot " << pivot << ")";
  return os.str();
}

std::string columns_message(const std::string& what, const std::vector<std::ptrdiff_t>& columns) {
  std::ostringstream os;
  os << what << " (columns:";
  for (auto c : columns) os << ' ' << c;
  os << ')';
  return os.str();
}

}  // namespace

DimensionError::DimensionError(std::string axis, std::ptrdiff_t expected, std::ptrdiff_t actual)
    : Error(dimension_message(axis, expected, actual)), axis_(std::move(axis)) {}

SingularError::SingularError(std::ptrdiff_t stage, double relative_pivot)
    : Error(singular_message(stage, relative_pivot)), stage_(stage) {}

DivergenceError::DivergenceError(std::string what, int iteration)
    : Error(what + " at iteration " + std::to_string(iteration)), iteration_(iteration) {}

ConvergenceError::ConvergenceError(std::string what, std::vector<std::ptrdiff_t> columns)
    : Error(columns_message(what, columns)), columns_(std::move(columns)) {}

ConfigError::ConfigError(const std::string& what, int line)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

}  // namespace simnet
