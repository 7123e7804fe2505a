#include "simnet/netcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "simnet/errors.hpp"

namespace simnet::netcore {

namespace {

void require_positive(Index value, const char* axis) {
  if (value <= 0) throw DimensionError(axis, 1, value);
}

// Bounding box of the nonzero entries of a block.
struct Support {
  Index r0 = 0, r1 = 0, c0 = 0, c1 = 0;

  bool empty() const { return r0 >= r1 || c0 >= c1; }
  Index rows() const { return r1 - r0; }
  Index cols() const { return c1 - c0; }
};

Support support_of(const CMatrix& m) {
  Support s{m.rows(), 0, m.cols(), 0};
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      if (m(i, j) != cplx(0.0, 0.0)) {
        s.r0 = std::min(s.r0, i);
        s.r1 = std::max(s.r1, i + 1);
        s.c0 = std::min(s.c0, j);
        s.c1 = std::max(s.c1, j + 1);
      }
    }
  }
  if (s.empty()) return Support{};
  return s;
}

bool is_exact_identity(const CMatrix& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      if (m(i, j) != (i == j ? cplx(1.0, 0.0) : cplx(0.0, 0.0))) return false;
    }
  }
  return true;
}

// One factored diagonal block of the sweep.
struct FactoredBlock {
  bool identity = false;
  Eigen::PartialPivLU<CMatrix> lu;

  template <typename Derived>
  CMatrix solve(const Eigen::MatrixBase<Derived>& rhs) const {
    if (identity) return rhs;
    return lu.solve(rhs);
  }
};

FactoredBlock factor_block(const CMatrix& block, Index stage, double threshold) {
  FactoredBlock f;
  const double scale = block.norm();
  if (!std::isfinite(scale) || scale == 0.0) throw SingularError(stage, 0.0);
  f.lu.compute(block);
  const double min_pivot = f.lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  const double relative = min_pivot / scale;
  if (!(relative >= threshold)) throw SingularError(stage, relative);
  return f;
}

WaveMatrix gather_rows(const WaveMatrix& x, const std::vector<Index>& rows) {
  WaveMatrix out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = x.row(rows[i]);
  return out;
}

WaveMatrix solve_dense(const StageOperator& op, const WaveMatrix& b, const SolveOptions& options) {
  const CMatrix dense = op.to_dense();
  const double scale = dense.norm();
  Eigen::PartialPivLU<CMatrix> lu(dense);
  const auto pivots = lu.matrixLU().diagonal().cwiseAbs();
  Index worst = 0;
  const double min_pivot = pivots.minCoeff(&worst);
  const double relative = scale > 0.0 ? min_pivot / scale : 0.0;
  if (!(relative >= options.pivot_threshold)) throw SingularError(worst / op.block_size(), relative);
  WaveMatrix x = lu.solve(b);
  if (options.rows_of_interest) return gather_rows(x, *options.rows_of_interest);
  return x;
}

// Block LU (Thomas) sweep over stages: forward elimination, then back
// substitution down to the first stage that holds a requested row. Products
// are restricted to the stored boxes, so structurally zero couplings cost
// nothing and fill-in is only formed where it can occur.
WaveMatrix solve_stage_recursive(const StageOperator& op, const WaveMatrix& b, const SolveOptions& options) {
  const Index q_count = op.stages();
  const Index nb = op.block_size();

  Index first_needed_stage = 0;
  if (options.rows_of_interest) {
    first_needed_stage = q_count;
    for (Index r : *options.rows_of_interest) first_needed_stage = std::min(first_needed_stage, r / nb);
  }

  std::vector<FactoredBlock> factors(static_cast<std::size_t>(q_count));
  std::vector<StageBlock> coupling(static_cast<std::size_t>(q_count));  // D'_q^{-1} U_q
  std::vector<CMatrix> y(static_cast<std::size_t>(q_count));

  for (Index q = 0; q < q_count; ++q) {
    const auto uq = static_cast<std::size_t>(q);
    const StageBlock& d = op.diagonal(q);
    CMatrix rhs = b.middleRows(q * nb, nb);
    std::optional<CMatrix> pivot;
    if (!d.is_identity()) pivot = d.to_dense(nb);
    if (q > 0) {
      const StageBlock& l = op.lower(q);
      const StageBlock& c = coupling[uq - 1];
      if (!l.is_zero()) {
        const Index i0 = std::max(l.col, c.row);
        const Index i1 = std::min(l.col + l.values.cols(), c.row + c.values.rows());
        if (!c.is_zero() && i0 < i1) {
          if (!pivot) pivot = d.to_dense(nb);
          pivot->block(l.row, c.col, l.values.rows(), c.values.cols()).noalias() -=
              l.values.middleCols(i0 - l.col, i1 - i0) * c.values.middleRows(i0 - c.row, i1 - i0);
        }
        rhs.middleRows(l.row, l.values.rows()).noalias() -=
            l.values * y[uq - 1].middleRows(l.col, l.values.cols());
      }
    }
    if (pivot) {
      factors[uq] = factor_block(*pivot, q, options.pivot_threshold);
    } else {
      factors[uq].identity = true;
    }
    y[uq] = factors[uq].solve(rhs);

    if (q + 1 < q_count) {
      const StageBlock& u = op.upper(q);
      if (u.is_zero() || factors[uq].identity) {
        coupling[uq] = u;
      } else {
        CMatrix cols = CMatrix::Zero(nb, u.values.cols());
        cols.middleRows(u.row, u.values.rows()) = u.values;
        coupling[uq] = StageBlock{0, u.col, factors[uq].solve(cols), false};
      }
    }
  }

  WaveMatrix x = WaveMatrix::Zero(op.size(), b.cols());
  x.middleRows((q_count - 1) * nb, nb) = y.back();
  for (Index q = q_count - 2; q >= first_needed_stage; --q) {
    const auto uq = static_cast<std::size_t>(q);
    auto xq = x.middleRows(q * nb, nb);
    xq = y[uq];
    const StageBlock& c = coupling[uq];
    if (!c.is_zero()) {
      xq.middleRows(c.row, c.values.rows()).noalias() -=
          c.values * x.middleRows((q + 1) * nb + c.col, c.values.cols());
    }
  }
  if (options.rows_of_interest) return gather_rows(x, *options.rows_of_interest);
  return x;
}

}  // namespace

// ---------------------------------------------------------------------------
// PortPartition

PortPartition PortPartition::make(Index tx, Index rx, Index stages, Index per_layer) {
  require_positive(tx, "tx_ports");
  require_positive(rx, "rx_ports");
  require_positive(stages, "stages");
  require_positive(per_layer, "ports_per_layer");
  return PortPartition{tx, rx, stages, per_layer};
}

Index PortPartition::port(Index stage, Side side, Index element) const {
  return stage_offset(stage) + (side == Side::kB ? ports_per_layer : 0) + element;
}

Index PortPartition::cell_port_a(Index cell) const {
  return port(cell / ports_per_layer, Side::kA, cell % ports_per_layer);
}

Index PortPartition::cell_port_b(Index cell) const {
  return port(cell / ports_per_layer, Side::kB, cell % ports_per_layer);
}

// ---------------------------------------------------------------------------
// BlockBandedMatrix

BlockBandedMatrix::BlockBandedMatrix(PortPartition partition)
    : partition_(partition),
      row_cover_(static_cast<std::size_t>(partition.internal_ports()), 0),
      tiles_(static_cast<std::size_t>(6 * partition.layers())) {}

const CMatrix* BlockBandedMatrix::layer_block(Index row_layer, Index col_layer) const {
  const Index slot = col_layer - 2 * (row_layer / 2) + 2;
  if (row_layer < 0 || row_layer >= partition_.layers() || slot < 0 || slot >= 6) return nullptr;
  const auto& tile = tiles_[static_cast<std::size_t>(6 * row_layer + slot)];
  return tile ? &*tile : nullptr;
}

void BlockBandedMatrix::add_block(Index row, Index col, CMatrix values) {
  const Index n = size();
  if (row < 0 || row + values.rows() > n) throw DimensionError("block rows", n, row + values.rows());
  if (col < 0 || col + values.cols() > n) throw DimensionError("block cols", n, col + values.cols());
  if (values.rows() == 0 || values.cols() == 0) return;
  const Index row_stage = partition_.stage_of(row);
  const Index col_stage = partition_.stage_of(col);
  if (partition_.stage_of(row + values.rows() - 1) != row_stage ||
      partition_.stage_of(col + values.cols() - 1) != col_stage) {
    throw GeometryError("block straddles a stage boundary");
  }
  if (std::abs(row_stage - col_stage) > 1) {
    throw GeometryError("block couples non-adjacent stages " + std::to_string(row_stage) + " and " +
                        std::to_string(col_stage));
  }
  const Index bound = 2 * partition_.ports_per_layer;
  for (Index r = row; r < row + values.rows(); ++r) {
    auto& cover = row_cover_[static_cast<std::size_t>(r)];
    if (cover + values.cols() > bound) {
      throw GeometryError("row " + std::to_string(r) + " exceeds " + std::to_string(bound) + " nonzero columns");
    }
  }
  for (Index r = row; r < row + values.rows(); ++r) row_cover_[static_cast<std::size_t>(r)] += values.cols();
  const Index k = partition_.ports_per_layer;
  for (Index lr = row / k; lr * k < row + values.rows(); ++lr) {
    for (Index lc = col / k; lc * k < col + values.cols(); ++lc) {
      const Index r0 = std::max(row, lr * k);
      const Index r1 = std::min(row + values.rows(), (lr + 1) * k);
      const Index c0 = std::max(col, lc * k);
      const Index c1 = std::min(col + values.cols(), (lc + 1) * k);
      auto& tile = tiles_[static_cast<std::size_t>(6 * lr + lc - 2 * (lr / 2) + 2)];
      if (!tile) tile = CMatrix::Zero(k, k);
      tile->block(r0 - lr * k, c0 - lc * k, r1 - r0, c1 - c0) += values.block(r0 - row, c0 - col, r1 - r0, c1 - c0);
    }
  }
  blocks_.push_back(PlacedBlock{row, col, std::move(values)});
}

CMatrix BlockBandedMatrix::to_dense() const {
  CMatrix dense = CMatrix::Zero(size(), size());
  for (const auto& b : blocks_) dense.block(b.row, b.col, b.values.rows(), b.values.cols()) += b.values;
  return dense;
}

BlockBandedMatrix BlockBandedMatrix::from_dense(const CMatrix& dense, const PortPartition& partition) {
  const Index n = partition.internal_ports();
  if (dense.rows() != n) throw DimensionError("rows", n, dense.rows());
  if (dense.cols() != n) throw DimensionError("cols", n, dense.cols());
  const Index k = partition.ports_per_layer;
  BlockBandedMatrix out(partition);
  for (Index lr = 0; lr < partition.layers(); ++lr) {
    for (Index lc = 0; lc < partition.layers(); ++lc) {
      auto block = dense.block(lr * k, lc * k, k, k);
      if ((block.array() == cplx(0.0, 0.0)).all()) continue;
      out.add_block(lr * k, lc * k, block);
    }
  }
  return out;
}

Index BlockBandedMatrix::max_row_nonzeros() const {
  if (row_cover_.empty()) return 0;
  return *std::max_element(row_cover_.begin(), row_cover_.end());
}

std::size_t BlockBandedMatrix::multiply_cost() const {
  std::size_t cost = 0;
  for (const auto& b : blocks_) cost += static_cast<std::size_t>(b.values.rows() * b.values.cols());
  return cost;
}

CMatrix BlockBandedMatrix::stage_block(Index row_stage, Index col_stage) const {
  const Index ns = partition_.stage_size();
  CMatrix out = CMatrix::Zero(ns, ns);
  const Index r_off = partition_.stage_offset(row_stage);
  const Index c_off = partition_.stage_offset(col_stage);
  for (const auto& b : blocks_) {
    if (partition_.stage_of(b.row) != row_stage || partition_.stage_of(b.col) != col_stage) continue;
    out.block(b.row - r_off, b.col - c_off, b.values.rows(), b.values.cols()) += b.values;
  }
  return out;
}

WaveMatrix mul_block_banded(const BlockBandedMatrix& a, const WaveMatrix& x) {
  if (x.rows() != a.size()) throw DimensionError("rows of X", a.size(), x.rows());
  WaveMatrix y = WaveMatrix::Zero(a.size(), x.cols());
  for (const auto& b : a.blocks()) {
    y.middleRows(b.row, b.values.rows()).noalias() += b.values * x.middleRows(b.col, b.values.cols());
  }
  return y;
}

// ---------------------------------------------------------------------------
// CellMatrix

CellMatrix::CellMatrix(PortPartition partition, std::vector<Cell2> cells)
    : partition_(partition), cells_(std::move(cells)) {
  if (static_cast<Index>(cells_.size()) != partition_.cells()) {
    throw DimensionError("cells", partition_.cells(), static_cast<Index>(cells_.size()));
  }
}

CellMatrix CellMatrix::zero(const PortPartition& partition) {
  return CellMatrix(partition, std::vector<Cell2>(static_cast<std::size_t>(partition.cells()), Cell2::Zero()));
}

WaveMatrix CellMatrix::apply(const WaveMatrix& x) const {
  if (x.rows() != partition_.internal_ports()) throw DimensionError("rows of X", partition_.internal_ports(), x.rows());
  WaveMatrix y(x.rows(), x.cols());
  for (Index p = 0; p < cell_count(); ++p) {
    const Index m = partition_.cell_port_a(p);
    const Index n = partition_.cell_port_b(p);
    const Cell2& c = cell(p);
    for (Index j = 0; j < x.cols(); ++j) {
      const cplx bm = x(m, j);
      const cplx bn = x(n, j);
      y(m, j) = c(0, 0) * bm + c(0, 1) * bn;
      y(n, j) = c(1, 0) * bm + c(1, 1) * bn;
    }
  }
  return y;
}

CMatrix CellMatrix::to_dense() const {
  const Index n = partition_.internal_ports();
  CMatrix dense = CMatrix::Zero(n, n);
  for (Index p = 0; p < cell_count(); ++p) {
    const Index m = partition_.cell_port_a(p);
    const Index nn = partition_.cell_port_b(p);
    const Cell2& c = cell(p);
    dense(m, m) = c(0, 0);
    dense(m, nn) = c(0, 1);
    dense(nn, m) = c(1, 0);
    dense(nn, nn) = c(1, 1);
  }
  return dense;
}

CellMatrix CellMatrix::conjugate() const {
  std::vector<Cell2> out(cells_.size());
  std::transform(cells_.begin(), cells_.end(), out.begin(), [](const Cell2& c) { return Cell2(c.conjugate()); });
  return CellMatrix(partition_, std::move(out));
}

Eigen::VectorXcd CellMatrix::stage_entries(Index stage, Index row_side, Index col_side) const {
  const Index k = partition_.ports_per_layer;
  Eigen::VectorXcd d(k);
  for (Index e = 0; e < k; ++e) d(e) = cell(stage * k + e)(row_side, col_side);
  return d;
}

CMatrix CellMatrix::left_multiply_stage(Index stage, const CMatrix& m) const {
  const Index k = partition_.ports_per_layer;
  CMatrix out(m.rows(), m.cols());
  out.topRows(k) = stage_entries(stage, 0, 0).asDiagonal() * m.topRows(k);
  out.topRows(k) += stage_entries(stage, 0, 1).asDiagonal() * m.bottomRows(k);
  out.bottomRows(k) = stage_entries(stage, 1, 0).asDiagonal() * m.topRows(k);
  out.bottomRows(k) += stage_entries(stage, 1, 1).asDiagonal() * m.bottomRows(k);
  return out;
}

CMatrix CellMatrix::right_multiply_stage(Index stage, const CMatrix& m) const {
  const Index k = partition_.ports_per_layer;
  CMatrix out(m.rows(), m.cols());
  out.leftCols(k) = m.leftCols(k) * stage_entries(stage, 0, 0).asDiagonal();
  out.leftCols(k) += m.rightCols(k) * stage_entries(stage, 1, 0).asDiagonal();
  out.rightCols(k) = m.leftCols(k) * stage_entries(stage, 0, 1).asDiagonal();
  out.rightCols(k) += m.rightCols(k) * stage_entries(stage, 1, 1).asDiagonal();
  return out;
}

// ---------------------------------------------------------------------------
// StageOperator

StageBlock StageBlock::from_dense(const CMatrix& m) {
  if (m.rows() == m.cols() && m.rows() > 0 && is_exact_identity(m)) return StageBlock{0, 0, CMatrix(), true};
  const Support s = support_of(m);
  if (s.empty()) return StageBlock{};
  return StageBlock{s.r0, s.c0, m.block(s.r0, s.c0, s.rows(), s.cols()), false};
}

StageBlock StageBlock::identity_minus(const CMatrix& m) {
  const Support s = support_of(m);
  if (s.empty()) return StageBlock{0, 0, CMatrix(), true};
  return StageBlock{s.r0, s.c0, -m.block(s.r0, s.c0, s.rows(), s.cols()), true};
}

CMatrix StageBlock::to_dense(Index block_size) const {
  CMatrix out = CMatrix::Zero(block_size, block_size);
  if (identity) out.setIdentity();
  if (values.size() > 0) out.block(row, col, values.rows(), values.cols()) += values;
  return out;
}

StageBlock StageBlock::adjoint() const { return StageBlock{col, row, values.adjoint(), identity}; }

StageOperator::StageOperator(Index stages, Index block_size) : block_size_(block_size) {
  require_positive(stages, "stages");
  require_positive(block_size, "block_size");
  const auto q = static_cast<std::size_t>(stages);
  diagonal_.resize(q);
  lower_.resize(q - 1);
  upper_.resize(q - 1);
}

void StageOperator::check(const StageBlock& block, bool off_diagonal) const {
  if (off_diagonal && block.identity) throw GeometryError("identity flag on an off-diagonal stage block");
  if (block.values.size() == 0) return;
  if (block.row < 0 || block.row + block.values.rows() > block_size_) {
    throw DimensionError("stage block rows", block_size_, block.row + block.values.rows());
  }
  if (block.col < 0 || block.col + block.values.cols() > block_size_) {
    throw DimensionError("stage block cols", block_size_, block.col + block.values.cols());
  }
}

void StageOperator::set_diagonal(Index q, StageBlock block) {
  check(block, false);
  diagonal_.at(static_cast<std::size_t>(q)) = std::move(block);
}

void StageOperator::set_lower(Index q, StageBlock block) {
  check(block, true);
  lower_.at(static_cast<std::size_t>(q - 1)) = std::move(block);
}

void StageOperator::set_upper(Index q, StageBlock block) {
  check(block, true);
  upper_.at(static_cast<std::size_t>(q)) = std::move(block);
}

CMatrix StageOperator::to_dense() const {
  const Index nb = block_size_;
  CMatrix dense = CMatrix::Zero(size(), size());
  for (Index q = 0; q < stages(); ++q) {
    dense.block(q * nb, q * nb, nb, nb) = diagonal(q).to_dense(nb);
    if (q > 0) dense.block(q * nb, (q - 1) * nb, nb, nb) = lower(q).to_dense(nb);
    if (q + 1 < stages()) dense.block(q * nb, (q + 1) * nb, nb, nb) = upper(q).to_dense(nb);
  }
  return dense;
}

StageOperator StageOperator::adjoint() const {
  StageOperator out(stages(), block_size_);
  for (Index q = 0; q < stages(); ++q) {
    out.diagonal_[static_cast<std::size_t>(q)] = diagonal(q).adjoint();
    if (q + 1 < stages()) {
      out.upper_[static_cast<std::size_t>(q)] = lower(q + 1).adjoint();
      out.lower_[static_cast<std::size_t>(q)] = upper(q).adjoint();
    }
  }
  return out;
}

namespace {

// y.rows(offset + block rows) += block * x.rows(x_offset + block cols)
void accumulate_block(const StageBlock& block, const WaveMatrix& x, Index x_offset, Eigen::Ref<WaveMatrix> y) {
  if (block.identity) y += x.middleRows(x_offset, y.rows());
  if (block.values.size() == 0) return;
  y.middleRows(block.row, block.values.rows()).noalias() +=
      block.values * x.middleRows(x_offset + block.col, block.values.cols());
}

}  // namespace

WaveMatrix StageOperator::apply(const WaveMatrix& x) const {
  if (x.rows() != size()) throw DimensionError("rows of X", size(), x.rows());
  const Index nb = block_size_;
  WaveMatrix y = WaveMatrix::Zero(size(), x.cols());
  for (Index q = 0; q < stages(); ++q) {
    auto yq = y.middleRows(q * nb, nb);
    accumulate_block(diagonal(q), x, q * nb, yq);
    if (q > 0) accumulate_block(lower(q), x, (q - 1) * nb, yq);
    if (q + 1 < stages()) accumulate_block(upper(q), x, (q + 1) * nb, yq);
  }
  return y;
}

StageOperator sensitivity_operator(const CellMatrix& w, const BlockBandedMatrix& s, ProductOrder order) {
  if (!(w.partition() == s.partition())) throw DimensionError("partition cells", s.partition().cells(), w.cell_count());
  const PortPartition& part = s.partition();
  const Index q_count = part.stages;
  StageOperator op(q_count, part.stage_size());
  auto product = [&](Index qr, Index qc) -> CMatrix {
    const CMatrix sb = s.stage_block(qr, qc);
    return order == ProductOrder::kCellFirst ? w.left_multiply_stage(qr, sb) : w.right_multiply_stage(qc, sb);
  };
  for (Index q = 0; q < q_count; ++q) {
    op.set_diagonal(q, StageBlock::identity_minus(product(q, q)));
    if (q > 0) op.set_lower(q, StageBlock::from_dense(-product(q, q - 1)));
    if (q + 1 < q_count) op.set_upper(q, StageBlock::from_dense(-product(q, q + 1)));
  }
  return op;
}

StageOperator augmented_sensitivity_operator(const CellMatrix& jb, const CellMatrix& jc, const BlockBandedMatrix& s) {
  if (!(jb.partition() == s.partition()) || !(jc.partition() == s.partition())) {
    throw DimensionError("partition cells", s.partition().cells(), jb.cell_count());
  }
  const PortPartition& part = s.partition();
  const Index q_count = part.stages;
  const Index k = part.ports_per_layer;

  // Assembled per K x K layer tile. With sides R, I, C in {A, B}:
  //   (R, C)           -= Jb[R,I] S[I,C]        (R, conj C)      -= Jc[R,I] conj S[I,C]
  //   (conj R, C)      -= conj Jc[R,I] S[I,C]   (conj R, conj C) -= conj Jb[R,I] conj S[I,C]
  // where J[R,I] is the diagonal of cell entries (R, I). Augmented stage
  // offsets: A -> 0, conj A -> K, B -> 2K, conj B -> 3K.
  struct Term {
    const CMatrix* s;
    Eigen::VectorXcd j;
    Index tile_row;
    Index tile_col;
    bool conj_s;
  };
  auto product = [&](Index qr, Index qc, bool diagonal) -> StageBlock {
    std::vector<Term> terms;
    for (Index i = 0; i < 2; ++i) {
      for (Index c = 0; c < 2; ++c) {
        const CMatrix* sic = s.layer_block(2 * qr + i, 2 * qc + c);
        if (sic == nullptr) continue;
        for (Index r = 0; r < 2; ++r) {
          const Eigen::VectorXcd b = jb.stage_entries(qr, r, i);
          const Eigen::VectorXcd x = jc.stage_entries(qr, r, i);
          if (!b.isZero(0.0)) {
            terms.push_back(Term{sic, b, 2 * r, 2 * c, false});
            terms.push_back(Term{sic, b.conjugate(), 2 * r + 1, 2 * c + 1, true});
          }
          if (!x.isZero(0.0)) {
            terms.push_back(Term{sic, x, 2 * r, 2 * c + 1, true});
            terms.push_back(Term{sic, x.conjugate(), 2 * r + 1, 2 * c, false});
          }
        }
      }
    }
    StageBlock out;
    out.identity = diagonal;
    if (terms.empty()) return out;
    Index r0 = 4, r1 = 0, c0 = 4, c1 = 0;
    for (const auto& t : terms) {
      r0 = std::min(r0, t.tile_row);
      r1 = std::max(r1, t.tile_row + 1);
      c0 = std::min(c0, t.tile_col);
      c1 = std::max(c1, t.tile_col + 1);
    }
    out.row = r0 * k;
    out.col = c0 * k;
    out.values = CMatrix::Zero((r1 - r0) * k, (c1 - c0) * k);
    for (const auto& t : terms) {
      auto tile = out.values.block((t.tile_row - r0) * k, (t.tile_col - c0) * k, k, k);
      if (t.conj_s) {
        tile.noalias() -= t.j.asDiagonal() * t.s->conjugate();
      } else {
        tile.noalias() -= t.j.asDiagonal() * (*t.s);
      }
    }
    return out;
  };
  StageOperator op(q_count, 4 * k);
  for (Index q = 0; q < q_count; ++q) {
    op.set_diagonal(q, product(q, q, true));
    if (q > 0) op.set_lower(q, product(q, q - 1, false));
    if (q + 1 < q_count) op.set_upper(q, product(q, q + 1, false));
  }
  return op;
}

namespace {

Index layer_rows(Index rows, Index layers) {
  if (layers <= 0) throw DimensionError("layers", 1, layers);
  const Index k = rows / layers;
  if (k * layers != rows) throw DimensionError("rows of X", layers * k, rows);
  return k;
}

}  // namespace

WaveMatrix augment(const WaveMatrix& x, Index layers) {
  const Index k = layer_rows(x.rows(), layers);
  WaveMatrix out(2 * x.rows(), x.cols());
  for (Index l = 0; l < layers; ++l) {
    out.middleRows(2 * l * k, k) = x.middleRows(l * k, k);
    out.middleRows(2 * l * k + k, k) = x.middleRows(l * k, k).conjugate();
  }
  return out;
}

WaveMatrix augmented_top(const WaveMatrix& x_aug, Index layers) {
  const Index k = layer_rows(x_aug.rows(), 2 * layers);
  WaveMatrix out(layers * k, x_aug.cols());
  for (Index l = 0; l < layers; ++l) out.middleRows(l * k, k) = x_aug.middleRows(2 * l * k, k);
  return out;
}

WaveMatrix augmented_bottom(const WaveMatrix& x_aug, Index layers) {
  const Index k = layer_rows(x_aug.rows(), 2 * layers);
  WaveMatrix out(layers * k, x_aug.cols());
  for (Index l = 0; l < layers; ++l) out.middleRows(l * k, k) = x_aug.middleRows(2 * l * k + k, k);
  return out;
}

WaveMatrix solve_structured(const StageOperator& op, const WaveMatrix& b, const SolveOptions& options) {
  if (b.rows() != op.size()) throw DimensionError("rows of B", op.size(), b.rows());
  if (options.rows_of_interest) {
    for (Index r : *options.rows_of_interest) {
      if (r < 0 || r >= op.size()) throw DimensionError("rows_of_interest", op.size(), r);
    }
  }
  if (options.method == SolveMethod::kDense) return solve_dense(op, b, options);
  return solve_stage_recursive(op, b, options);
}

}  // namespace simnet::netcore
