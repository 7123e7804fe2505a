#pragma once

// Power-wave network types and the stage-partitioned structured solvers.
//
// Internal port ordering is stage-major: for stage q = 0..Q-1 the K side-A
// ports come first, then the K side-B ports. Cell p = q*K + k joins port
// m(p) = q*2K + k (side A) with n(p) = q*2K + K + k (side B). Every other
// module relies on this layout.

#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace simnet::netcore {

using cplx = std::complex<double>;
using Index = Eigen::Index;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Cell2 = Eigen::Matrix2cd;

// Normalized power waves (sqrt(W)); rows are ports, columns are excitations.
using WaveMatrix = Eigen::MatrixXcd;

enum class Side { kA = 0, kB = 1 };

struct PortPartition {
  Index tx_ports = 1;         // L
  Index rx_ports = 1;         // M
  Index stages = 1;           // Q
  Index ports_per_layer = 1;  // K

  static PortPartition make(Index tx, Index rx, Index stages, Index per_layer);

  Index internal_ports() const { return 2 * stages * ports_per_layer; }
  Index layers() const { return 2 * stages; }
  Index cells() const { return stages * ports_per_layer; }
  Index stage_size() const { return 2 * ports_per_layer; }
  Index stage_offset(Index stage) const { return stage * stage_size(); }
  Index layer_offset(Index layer) const { return layer * ports_per_layer; }
  Index port(Index stage, Side side, Index element) const;
  Index stage_of(Index port) const { return port / stage_size(); }
  Index cell_port_a(Index cell) const;
  Index cell_port_b(Index cell) const;
  // Offset of the last layer (stage Q-1, side B): the only ports seen by the receiver.
  Index last_layer_offset() const { return internal_ports() - ports_per_layer; }

  bool operator==(const PortPartition&) const = default;
};

struct PlacedBlock {
  Index row = 0;
  Index col = 0;
  CMatrix values;
};

// Internal scattering block S_EE restricted to the stage band. Each placed
// block must sit inside one stage row-range and one stage column-range, and
// the two stages may differ by at most one.
class BlockBandedMatrix {
 public:
  explicit BlockBandedMatrix(PortPartition partition);

  void add_block(Index row, Index col, CMatrix values);

  const PortPartition& partition() const { return partition_; }
  const std::vector<PlacedBlock>& blocks() const { return blocks_; }
  Index size() const { return partition_.internal_ports(); }

  CMatrix to_dense() const;
  // Splits a dense matrix into K x K layer blocks, dropping exact-zero ones.
  static BlockBandedMatrix from_dense(const CMatrix& dense, const PortPartition& partition);

  // Structural bound on nonzero columns in any row.
  Index max_row_nonzeros() const;
  // Complex multiply-accumulates needed per excitation column.
  std::size_t multiply_cost() const;
  // Dense 2K x 2K block coupling stage row_stage to stage col_stage.
  CMatrix stage_block(Index row_stage, Index col_stage) const;
  // Sum of the placed blocks over one K x K layer tile; null when no block touches it.
  const CMatrix* layer_block(Index row_layer, Index col_layer) const;

 private:
  PortPartition partition_;
  std::vector<PlacedBlock> blocks_;
  std::vector<Index> row_cover_;
  // Per row layer, the six column layers of the adjacent stages.
  std::vector<std::optional<CMatrix>> tiles_;
};

WaveMatrix mul_block_banded(const BlockBandedMatrix& a, const WaveMatrix& x);

// Cell-level 2x2 block-diagonal matrix in the internal port ordering
// (terminations Gamma, Jacobians J_b / J_c). Cell block maps [b_m; b_n] to [a_m; a_n].
class CellMatrix {
 public:
  CellMatrix(PortPartition partition, std::vector<Cell2> cells);
  static CellMatrix zero(const PortPartition& partition);

  const PortPartition& partition() const { return partition_; }
  Index cell_count() const { return static_cast<Index>(cells_.size()); }
  const Cell2& cell(Index p) const { return cells_[static_cast<std::size_t>(p)]; }
  Cell2& cell(Index p) { return cells_[static_cast<std::size_t>(p)]; }

  WaveMatrix apply(const WaveMatrix& x) const;
  CMatrix to_dense() const;
  CellMatrix conjugate() const;

  // Diagonal of entries (row_side, col_side) over the cells of one stage.
  Eigen::VectorXcd stage_entries(Index stage, Index row_side, Index col_side) const;

  // W_q * m for a matrix whose 2K rows are indexed like stage q's ports.
  CMatrix left_multiply_stage(Index stage, const CMatrix& m) const;
  // m * W_q for a matrix whose 2K columns are indexed like stage q's ports.
  CMatrix right_multiply_stage(Index stage, const CMatrix& m) const;

 private:
  PortPartition partition_;
  std::vector<Cell2> cells_;
};

// One block of a StageOperator: `values` sits at (row, col) inside the
// block_size x block_size block and everything outside it is zero; the
// identity is added on top when `identity` is set.
struct StageBlock {
  Index row = 0;
  Index col = 0;
  CMatrix values;
  bool identity = false;

  // Trimmed to the bounding box of the nonzeros; an exact identity is flagged.
  static StageBlock from_dense(const CMatrix& m);
  // I - m, trimmed like from_dense.
  static StageBlock identity_minus(const CMatrix& m);

  bool is_zero() const { return !identity && values.size() == 0; }
  bool is_identity() const { return identity && values.size() == 0; }
  CMatrix to_dense(Index block_size) const;
  StageBlock adjoint() const;
};

// Block-tridiagonal operator over the stage partition, uniform block size.
// Unset blocks are zero.
class StageOperator {
 public:
  StageOperator(Index stages, Index block_size);

  Index stages() const { return static_cast<Index>(diagonal_.size()); }
  Index block_size() const { return block_size_; }
  Index size() const { return stages() * block_size_; }

  const StageBlock& diagonal(Index q) const { return diagonal_[static_cast<std::size_t>(q)]; }
  // Block (q, q-1); q >= 1.
  const StageBlock& lower(Index q) const { return lower_[static_cast<std::size_t>(q - 1)]; }
  // Block (q, q+1); q <= Q-2.
  const StageBlock& upper(Index q) const { return upper_[static_cast<std::size_t>(q)]; }

  void set_diagonal(Index q, StageBlock block);
  void set_lower(Index q, StageBlock block);
  void set_upper(Index q, StageBlock block);

  CMatrix to_dense() const;
  StageOperator adjoint() const;
  WaveMatrix apply(const WaveMatrix& x) const;

 private:
  void check(const StageBlock& block, bool off_diagonal) const;

  Index block_size_;
  std::vector<StageBlock> diagonal_;
  std::vector<StageBlock> lower_;
  std::vector<StageBlock> upper_;
};

enum class ProductOrder {
  kCellFirst,     // I - W * S
  kNetworkFirst,  // I - S * W
};

StageOperator sensitivity_operator(const CellMatrix& w, const BlockBandedMatrix& s, ProductOrder order);

// Widely-linear operator I - J~ S~ with J~ = [[Jb, Jc], [conj Jc, conj Jb]] and
// S~ = diag(S, conj S), on the layer-interleaved augmented variable: each
// layer's K entries are followed by their conjugates, so stage q holds
// [x_A; conj x_A; x_B; conj x_B]. Keeps forward and backward couplings in
// disjoint contiguous row ranges, as in the plain operator.
StageOperator augmented_sensitivity_operator(const CellMatrix& jb, const CellMatrix& jc,
                                             const BlockBandedMatrix& s);

// Layer-interleaved augmentation and the extraction of its x and conj-x parts.
WaveMatrix augment(const WaveMatrix& x, Index layers);
WaveMatrix augmented_top(const WaveMatrix& x_aug, Index layers);
WaveMatrix augmented_bottom(const WaveMatrix& x_aug, Index layers);

enum class SolveMethod { kStructured, kDense };

struct SolveOptions {
  SolveMethod method = SolveMethod::kStructured;
  // When set, only these rows of the solution are returned (in this order).
  std::optional<std::vector<Index>> rows_of_interest;
  double pivot_threshold = 1e-12;
};

WaveMatrix solve_structured(const StageOperator& op, const WaveMatrix& b, const SolveOptions& options = {});

}  // namespace simnet::netcore
