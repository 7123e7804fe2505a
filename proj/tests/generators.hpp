#pragma once

// Hand-rolled random generators for property tests. Every case derives its
// own engine from (suite seed, case index), so a failing case can be rerun
// alone.

#include <cstdint>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "simnet/netcore.hpp"

namespace testgen {

using simnet::netcore::cplx;
using simnet::netcore::CMatrix;
using simnet::netcore::Index;

using Engine = std::mt19937_64;

inline Engine engine(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(index), 0x5eedu};
  return Engine(seq);
}

inline double real(Engine& e, double lo = -1.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(e);
}

inline int integer(Engine& e, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(e); }

template <typename T>
const T& pick(Engine& e, const std::vector<T>& values) {
  return values[static_cast<std::size_t>(integer(e, 0, static_cast<int>(values.size()) - 1))];
}

inline cplx complex(Engine& e) { return {real(e), real(e)}; }

inline CMatrix matrix(Engine& e, Index rows, Index cols) {
  CMatrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = complex(e);
  }
  return m;
}

inline Eigen::VectorXd phases(Engine& e, Index n) {
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = real(e, -3.14159, 3.14159);
  return v;
}

// Runs body(engine, case) for `cases` independent cases and tags failures with the case index.
template <typename Body>
void for_all(int cases, std::uint64_t seed, Body body) {
  for (int c = 0; c < cases; ++c) {
    SCOPED_TRACE(testing::Message() << "case " << c << " seed " << seed);
    Engine e = engine(seed, static_cast<std::uint64_t>(c));
    body(e, c);
    if (testing::Test::HasFatalFailure()) return;
  }
}

inline double rel_diff(const CMatrix& a, const CMatrix& b) {
  const double scale = b.norm();
  return scale == 0.0 ? (a - b).norm() : (a - b).norm() / scale;
}

}  // namespace testgen
