#pragma once

// Block susceptance matrices of the augmented DC power-flow model
//
//   [dP_G]   [B_GG  B_GB] [dtheta_G]
//   [dP_D] = [B_BG  B_BB] [dtheta_D]
//
// with generator internal nodes in the G block and load buses in the B block.
// Off-diagonal entries are -b, diagonals the sum of incident susceptances, so
// every row of the full matrix sums to zero (no shunts).

#include <rocof/error.hpp>
#include <rocof/grid_model.hpp>

#include <Eigen/Dense>

#include <map>
#include <ostream>
#include <span>

namespace rocof {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Smallest equilibrated reciprocal condition number accepted as invertible.
inline constexpr double kInvertibilityThreshold = 1e-12;

struct InvertibilityCertificate {
  bool invertible = false;
  double reciprocal_condition_estimate = 0.0;
};

/// Immutable block matrices plus a cached LU of B_BB. Safe to share across
/// threads once constructed.
class SusceptanceBlocks {
public:
  SusceptanceBlocks(Matrix b_gg, Matrix b_gb, Matrix b_bb, std::vector<BusId> generator_ids,
                    std::vector<BusId> load_ids)
      : b_gg_(std::move(b_gg)),
        b_gb_(std::move(b_gb)),
        b_bg_(b_gb_.transpose()),
        b_bb_(std::move(b_bb)),
        generator_ids_(std::move(generator_ids)),
        load_ids_(std::move(load_ids)) {
    const auto n = b_gg_.rows();
    const auto m = b_bb_.rows();
    if (b_gg_.cols() != n || b_bb_.cols() != m || b_gb_.rows() != n || b_gb_.cols() != m ||
        static_cast<Eigen::Index>(generator_ids_.size()) != n ||
        static_cast<Eigen::Index>(load_ids_.size()) != m)
      throw ArgumentError("inconsistent susceptance block dimensions");
    for (Eigen::Index i = 0; i < n; ++i) gen_index_.emplace(generator_ids_[i], i);
    for (Eigen::Index j = 0; j < m; ++j) load_index_.emplace(load_ids_[j], j);
    factorize();
  }

  Eigen::Index num_generators() const noexcept { return b_gg_.rows(); }
  Eigen::Index num_loads() const noexcept { return b_bb_.rows(); }

  const Matrix& b_gg() const noexcept { return b_gg_; }
  const Matrix& b_gb() const noexcept { return b_gb_; }
  const Matrix& b_bg() const noexcept { return b_bg_; }
  const Matrix& b_bb() const noexcept { return b_bb_; }

  const std::vector<BusId>& generator_ids() const noexcept { return generator_ids_; }
  const std::vector<BusId>& load_ids() const noexcept { return load_ids_; }
  const std::map<BusId, Eigen::Index>& gen_index() const noexcept { return gen_index_; }
  const std::map<BusId, Eigen::Index>& load_index() const noexcept { return load_index_; }

  /// The (n+m)x(n+m) matrix in generator-then-load order.
  Matrix full() const {
    const auto n = num_generators();
    const auto m = num_loads();
    Matrix out(n + m, n + m);
    out << b_gg_, b_gb_, b_bg_, b_bb_;
    return out;
  }

  const InvertibilityCertificate& certificate() const noexcept { return certificate_; }

  /// Solves B_BB x = rhs with the cached factorization.
  Vector solve(const Vector& rhs) const {
    if (rhs.size() != num_loads()) throw ArgumentError("rhs length does not match load count");
    if (!certificate_.invertible)
      throw InternalConsistencyError("B_BB is numerically singular (rcond estimate " +
                                     std::to_string(certificate_.reciprocal_condition_estimate) + ")");
    if (rhs.isZero(0.0)) return Vector::Zero(rhs.size());
    // Equilibrated system: (D B D) y = D rhs, x = D y.
    Vector x = scale_.asDiagonal() * lu_.solve(scale_.asDiagonal() * rhs);
    // One step of iterative refinement.
    const Vector r = rhs - b_bb_ * x;
    x += scale_.asDiagonal() * lu_.solve(scale_.asDiagonal() * r);
    return x;
  }

  Matrix solve(const Matrix& rhs) const {
    if (rhs.rows() != num_loads()) throw ArgumentError("rhs rows do not match load count");
    if (!certificate_.invertible) throw InternalConsistencyError("B_BB is numerically singular");
    Matrix x = scale_.asDiagonal() * lu_.solve(scale_.asDiagonal() * rhs);
    const Matrix r = rhs - b_bb_ * x;
    x += scale_.asDiagonal() * lu_.solve(scale_.asDiagonal() * r);
    return x;
  }

private:
  void factorize() {
    const auto m = b_bb_.rows();
    scale_ = Vector::Ones(m);
    certificate_ = {};
    if (m == 0) return;
    const Vector diag = b_bb_.diagonal();
    if (!diag.allFinite() || (diag.array() <= 0.0).any()) return;
    scale_ = diag.array().rsqrt();
    const Matrix equilibrated = scale_.asDiagonal() * b_bb_ * scale_.asDiagonal();
    lu_.compute(equilibrated);
    const double rcond = lu_.rcond();
    certificate_.reciprocal_condition_estimate = std::isfinite(rcond) ? rcond : 0.0;
    certificate_.invertible = certificate_.reciprocal_condition_estimate > kInvertibilityThreshold;
  }

  Matrix b_gg_;
  Matrix b_gb_;
  Matrix b_bg_;
  Matrix b_bb_;
  std::vector<BusId> generator_ids_;
  std::vector<BusId> load_ids_;
  std::map<BusId, Eigen::Index> gen_index_;
  std::map<BusId, Eigen::Index> load_index_;
  Vector scale_;
  Eigen::PartialPivLU<Matrix> lu_;
  InvertibilityCertificate certificate_;
};

/// Assembles the four blocks. Parallel lines are summed.
inline SusceptanceBlocks assemble_blocks(const GridModel& grid) {
  require_valid(grid);
  const auto n = static_cast<Eigen::Index>(grid.num_generators());
  const auto m = static_cast<Eigen::Index>(grid.num_loads());

  Matrix b_gg = Matrix::Zero(n, n);
  Matrix b_gb = Matrix::Zero(n, m);
  Matrix b_bb = Matrix::Zero(m, m);

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& g = grid.generators[static_cast<std::size_t>(i)];
    const auto j = static_cast<Eigen::Index>(grid.load_index(g.terminal));
    const double b = g.internal_susceptance_pu;
    b_gg(i, i) += b;
    b_gb(i, j) -= b;
    b_bb(j, j) += b;
  }
  for (const auto& line : grid.lines) {
    const auto a = static_cast<Eigen::Index>(grid.load_index(line.from));
    const auto c = static_cast<Eigen::Index>(grid.load_index(line.to));
    const double b = line.susceptance_pu;
    b_bb(a, a) += b;
    b_bb(c, c) += b;
    b_bb(a, c) -= b;
    b_bb(c, a) -= b;
  }

  std::vector<BusId> gen_ids;
  gen_ids.reserve(grid.generators.size());
  for (const auto& g : grid.generators) gen_ids.push_back(g.bus);
  return SusceptanceBlocks(std::move(b_gg), std::move(b_gb), std::move(b_bb), std::move(gen_ids),
                           grid.load_buses);
}

/// Certifies that B_BB is invertible. On a connected grid a failure is an
/// internal-consistency error, never a silent result.
inline InvertibilityCertificate certify_invertible(const SusceptanceBlocks& blocks) {
  const auto& cert = blocks.certificate();
  if (!cert.invertible)
    throw InternalConsistencyError("B_BB failed invertibility certification (rcond estimate " +
                                   std::to_string(cert.reciprocal_condition_estimate) + ")");
  return cert;
}

/// x = B_BB^{-1} rhs.
inline Vector solve_bbb(const SusceptanceBlocks& blocks, const Vector& rhs) { return blocks.solve(rhs); }

/// Debug dump: one row per nonzero entry of the full matrix.
inline void write_blocks_csv(const SusceptanceBlocks& blocks, std::ostream& os) {
  os << "row_bus,col_bus,block,value_pu\n";
  const auto n = blocks.num_generators();
  const auto m = blocks.num_loads();
  const Matrix full = blocks.full();
  auto id = [&](Eigen::Index k) -> const BusId& {
    return k < n ? blocks.generator_ids()[static_cast<std::size_t>(k)]
                 : blocks.load_ids()[static_cast<std::size_t>(k - n)];
  };
  auto block = [&](Eigen::Index r, Eigen::Index c) {
    return std::string(r < n ? "G" : "B") + (c < n ? "G" : "B");
  };
  char buf[64];
  for (Eigen::Index r = 0; r < n + m; ++r) {
    for (Eigen::Index c = 0; c < n + m; ++c) {
      if (full(r, c) == 0.0) continue;
      std::snprintf(buf, sizeof buf, "%.9g", full(r, c));
      os << id(r) << ',' << id(c) << ",B_" << block(r, c) << ',' << buf << '\n';
    }
  }
}

}  // namespace rocof
