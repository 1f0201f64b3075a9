#pragma once

// Least-cost virtual inertia purchase that keeps the initial RoCoF of every
// generator bus within +/- rocof_max for every modeled contingency. Load
// buses need no rows of their own: their RoCoF is a convex combination of
// generator RoCoFs.
//
// For generator i and contingency k, with s_ik = -f0 * delta_pg_ik:
//
//   -2 r (h0_i + hv_i) <= s_ik          (lower side, dual sigma_lo)
//    s_ik <= 2 r (h0_i + hv_i)          (upper side, dual sigma_hi)
//    0 <= hv_i <= h_max_i - h0_i
//
// and the nodal price is rho_i = 2 r * sum_k (sigma_hi_ik + sigma_lo_ik).

#include <rocof/error.hpp>
#include <rocof/grid_model.hpp>
#include <rocof/lp.hpp>
#include <rocof/rocof_engine.hpp>
#include <rocof/susceptance.hpp>

#include <cmath>
#include <set>
#include <utility>

namespace rocof {

inline constexpr double kKktTolerance = 1e-7;
inline constexpr double kAuditToleranceHzPerS = 1e-6;
inline constexpr double kPriceRouteTolerance = 1e-9;

inline constexpr const char* kRowRocofLower = "rocof_lower";
inline constexpr const char* kRowRocofUpper = "rocof_upper";

struct DispatchProblem {
  GridModel grid;
  std::vector<Disturbance> contingencies;
  double rocof_max_hz_per_s = 0.0;
  std::vector<ImpactDistribution> impacts;  // one per contingency
};

/// How RoCoF rows are scaled in the LP.
enum class RowScaling {
  normalized,  // divided by 2 r: duals in currency per MW s
  unscaled,    // 2r h form, duals are sigma_lo / sigma_hi
};

struct BuiltDispatch {
  DispatchProblem problem;
  lp::LpStandardForm lp;
};

inline BuiltDispatch build_dispatch(const GridModel& grid, const std::vector<Disturbance>& contingencies,
                                    double rocof_max_hz_per_s, RowScaling scaling = RowScaling::normalized) {
  if (contingencies.empty()) throw ArgumentError("empty contingency set");
  if (!(std::isfinite(rocof_max_hz_per_s) && rocof_max_hz_per_s > 0.0))
    throw ArgumentError("rocof_max must be positive");

  const auto blocks = assemble_blocks(grid);
  BuiltDispatch out;
  out.problem.grid = grid;
  out.problem.contingencies = contingencies;
  out.problem.rocof_max_hz_per_s = rocof_max_hz_per_s;
  for (const auto& d : contingencies) out.problem.impacts.push_back(distribute_impact(grid, blocks, d));

  auto& lp = out.lp;
  const std::size_t n = grid.num_generators();
  for (const auto& g : grid.generators)
    lp.add_variable("hv_" + g.bus.value, g.cost_per_mws, 0.0, g.h_max_mws - g.h0_mws);

  const double two_r = 2.0 * rocof_max_hz_per_s;
  const double scale = scaling == RowScaling::normalized ? 1.0 / two_r : 1.0;
  lp::Vector coeffs = lp::Vector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < contingencies.size(); ++k) {
    const auto& dpg = out.problem.impacts[k].delta_pg_mw;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double s = -grid.f0_hz * dpg[ii];
      const double h0 = grid.generators[i].h0_mws;
      coeffs.setZero();
      coeffs[ii] = -two_r * scale;
      lp.add_row(coeffs, (s + two_r * h0) * scale, {kRowRocofLower, i, k});
      lp.add_row(coeffs, (-s + two_r * h0) * scale, {kRowRocofUpper, i, k});
    }
  }
  return out;
}

inline BuiltDispatch build_dispatch(const GridModel& grid, const ContingencySet& set, double p_dis_mw,
                                    double rocof_max_hz_per_s, RowScaling scaling = RowScaling::normalized) {
  return build_dispatch(grid, expand_contingencies(grid, set, p_dis_mw), rocof_max_hz_per_s, scaling);
}

struct DispatchAudit {
  BusId worst_bus;
  double worst_rocof_hz_per_s = 0.0;
  std::size_t worst_contingency = 0;
};

struct DispatchSolution {
  lp::Status status = lp::Status::infeasible;
  Vector h_v_mws;
  double objective = 0.0;
  Matrix sigma_lo;  // n x K, duals of the lower-side rows as written
  Matrix sigma_hi;  // n x K
  Vector prices;    // currency per MW s
  lp::KktResiduals kkt;
  bool degenerate = false;
  /// (generator index, contingency index) pairs that no purchase can fix.
  std::vector<std::pair<std::size_t, std::size_t>> infeasible_pairs;
  DispatchAudit audit;
};

/// rho_i = 2 r * sum_k (sigma_hi_ik + sigma_lo_ik).
inline Vector extract_prices(const DispatchSolution& solution, double rocof_max_hz_per_s) {
  if (solution.status != lp::Status::optimal)
    throw ArgumentError(std::string("prices need an optimal dispatch (status ") + lp::to_string(solution.status) + ")");
  return 2.0 * rocof_max_hz_per_s * (solution.sigma_hi + solution.sigma_lo).rowwise().sum();
}

namespace detail {

inline void split_duals(const lp::LpStandardForm& lp, const lp::Vector& duals, std::size_t n, std::size_t k_count,
                        Matrix& lo, Matrix& hi) {
  lo = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k_count));
  hi = lo;
  for (Eigen::Index r = 0; r < lp.num_rows(); ++r) {
    const auto& tag = lp.tags[static_cast<std::size_t>(r)];
    auto& target = tag.kind == kRowRocofLower ? lo : hi;
    target(static_cast<Eigen::Index>(tag.generator), static_cast<Eigen::Index>(tag.contingency)) += duals[r];
  }
}

}  // namespace detail

/// Builds and solves the dispatch, extracts prices through both row scalings
/// and audits the awarded inertia against every contingency.
inline DispatchSolution dispatch(const GridModel& grid, const std::vector<Disturbance>& contingencies,
                                 double rocof_max_hz_per_s) {
  const auto built = build_dispatch(grid, contingencies, rocof_max_hz_per_s, RowScaling::normalized);
  const auto& lp = built.lp;
  const std::size_t n = grid.num_generators();
  const std::size_t k_count = contingencies.size();

  DispatchSolution out;
  const auto sol = lp::solve_lp(lp);
  out.status = sol.status;
  if (sol.status == lp::Status::unbounded)
    throw InternalConsistencyError("inertia dispatch reported unbounded; costs are non-negative and the box is finite");
  if (sol.status == lp::Status::infeasible) {
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    for (auto r : sol.infeasible_rows) {
      const auto& tag = lp.tags[static_cast<std::size_t>(r)];
      pairs.insert({tag.generator, tag.contingency});
    }
    out.infeasible_pairs.assign(pairs.begin(), pairs.end());
    return out;
  }

  out.kkt = lp::kkt_residuals(lp, sol);
  if (!(out.kkt.max() <= kKktTolerance))
    throw InternalConsistencyError("dispatch KKT residual " + std::to_string(out.kkt.max()) + " exceeds tolerance");
  out.h_v_mws = sol.x;
  out.objective = sol.objective;
  out.degenerate = sol.degenerate;

  // Unscaled rows give sigma directly; prices follow from them.
  const auto unscaled = build_dispatch(grid, contingencies, rocof_max_hz_per_s, RowScaling::unscaled);
  const auto unscaled_sol = lp::solve_lp(unscaled.lp);
  if (unscaled_sol.status != lp::Status::optimal)
    throw InternalConsistencyError("row scaling changed the dispatch status");
  detail::split_duals(unscaled.lp, unscaled_sol.row_duals, n, k_count, out.sigma_lo, out.sigma_hi);
  out.prices = extract_prices(out, rocof_max_hz_per_s);
  out.degenerate = out.degenerate || unscaled_sol.degenerate;

  // Normalized-row duals are already per MW s.
  Matrix lo, hi;
  detail::split_duals(lp, sol.row_duals, n, k_count, lo, hi);
  const Vector direct = (lo + hi).rowwise().sum();
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    const double tol = kPriceRouteTolerance * std::max(1.0, std::abs(direct[i]));
    if (std::abs(direct[i] - out.prices[i]) > tol && !out.degenerate)
      throw InternalConsistencyError("nodal price routes disagree at generator " +
                                     grid.generators[static_cast<std::size_t>(i)].bus.value);
  }

  // Audit: every bus under every contingency with the awarded inertia.
  const auto blocks = assemble_blocks(grid);
  auto t = std::make_shared<const PropagationMatrix>(propagation_matrix(blocks));
  std::vector<double> inertia(n);
  for (std::size_t i = 0; i < n; ++i)
    inertia[i] = grid.generators[i].h0_mws + out.h_v_mws[static_cast<Eigen::Index>(i)];
  double worst = -1.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    const auto report = nodal_rocof_report(grid, blocks, t, contingencies[k], inertia);
    if (std::abs(report.worst_rocof) > worst + kWorstBusTieToleranceHzPerS) {
      worst = std::abs(report.worst_rocof);
      out.audit = {report.worst_bus, report.worst_rocof, k};
    }
  }
  if (worst > rocof_max_hz_per_s + kAuditToleranceHzPerS)
    throw InternalConsistencyError("post-dispatch RoCoF " + std::to_string(out.audit.worst_rocof_hz_per_s) +
                                   " Hz/s at " + out.audit.worst_bus.value + " exceeds the limit");
  return out;
}

inline DispatchSolution dispatch(const GridModel& grid, const ContingencySet& set, double p_dis_mw,
                                 double rocof_max_hz_per_s) {
  return dispatch(grid, expand_contingencies(grid, set, p_dis_mw), rocof_max_hz_per_s);
}

}  // namespace rocof
