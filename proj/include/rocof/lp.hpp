#pragma once

// Small dense linear programs
//
//   min  c'x   s.t.  A x <= b,   l <= x <= u   (l finite, u may be +inf)
//
// solved with a two-phase tableau simplex under Bland's rule, so the
// returned basis (and therefore the duals of a degenerate problem) is a
// deterministic function of the input.
//
// Dual sign convention: every multiplier is >= 0 and enters the Lagrangian
// as  c'x + lambda'(Ax - b) + mu'(x - u) - nu'(x - l).

#include <rocof/error.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace rocof::lp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr std::size_t kNoIndex = static_cast<std::size_t>(-1);

/// Where an inequality row came from.
struct RowTag {
  std::string kind;
  std::size_t generator = kNoIndex;
  std::size_t contingency = kNoIndex;
};

struct LpStandardForm {
  Vector objective;
  Vector lower;
  Vector upper;
  std::vector<std::string> variable_names;
  Matrix rows;  // one inequality per row
  Vector rhs;
  std::vector<RowTag> tags;

  Eigen::Index num_variables() const noexcept { return objective.size(); }
  Eigen::Index num_rows() const noexcept { return rows.rows(); }

  Eigen::Index add_variable(std::string name, double cost, double lo, double hi) {
    const auto j = objective.size();
    objective.conservativeResize(j + 1);
    lower.conservativeResize(j + 1);
    upper.conservativeResize(j + 1);
    objective[j] = cost;
    lower[j] = lo;
    upper[j] = hi;
    variable_names.push_back(std::move(name));
    rows.conservativeResize(rows.rows(), j + 1);
    if (rows.rows() > 0) rows.col(j).setZero();
    return j;
  }

  /// Appends coeffs' x <= rhs_value; coeffs must cover every variable.
  Eigen::Index add_row(const Vector& coeffs, double rhs_value, RowTag tag) {
    if (coeffs.size() != num_variables()) throw ArgumentError("LP row has wrong length");
    const auto r = rows.rows();
    rows.conservativeResize(r + 1, num_variables());
    rows.row(r) = coeffs.transpose();
    rhs.conservativeResize(r + 1);
    rhs[r] = rhs_value;
    tags.push_back(std::move(tag));
    return r;
  }

  void check_well_formed() const {
    const auto n = num_variables();
    if (lower.size() != n || upper.size() != n || rows.cols() != n || rhs.size() != rows.rows() ||
        static_cast<Eigen::Index>(tags.size()) != rows.rows())
      throw ArgumentError("LP dimensions are inconsistent");
    if (!objective.allFinite() || !rows.allFinite() || !rhs.allFinite() || !lower.allFinite())
      throw ArgumentError("LP data must be finite (lower bounds included)");
    for (Eigen::Index j = 0; j < n; ++j)
      if (std::isnan(upper[j]) || upper[j] == -kInfinity) throw ArgumentError("bad upper bound");
  }
};

enum class Status { optimal, infeasible, unbounded };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
  }
  return "unknown";
}

struct LpSolution {
  Status status = Status::infeasible;
  Vector x;
  double objective = 0.0;
  Vector row_duals;    // lambda, per inequality row
  Vector upper_duals;  // mu, per variable (0 where u is infinite)
  Vector lower_duals;  // nu, per variable
  Vector row_slack;    // b - A x
  std::vector<Eigen::Index> infeasible_rows;  // rows unsatisfiable anywhere in the box
  bool degenerate = false;
  std::size_t iterations = 0;
};

struct KktResiduals {
  double primal = 0.0;
  double dual = 0.0;
  double stationarity = 0.0;
  double complementarity = 0.0;
  double gap = 0.0;

  double max() const { return std::max({primal, dual, stationarity, complementarity, gap}); }
};

namespace detail {

class Tableau {
public:
  Tableau(Eigen::Index rows, Eigen::Index cols) : t_(Matrix::Zero(rows, cols + 1)), basis_(rows) {}

  double& at(Eigen::Index r, Eigen::Index c) { return t_(r, c); }
  double& rhs(Eigen::Index r) { return t_(r, t_.cols() - 1); }
  Eigen::Index rows() const { return t_.rows(); }
  Eigen::Index cols() const { return t_.cols() - 1; }
  std::vector<Eigen::Index>& basis() { return basis_; }

  void pivot(Eigen::Index r, Eigen::Index c, Vector& reduced, double& objective) {
    t_.row(r) /= t_(r, c);
    t_(r, c) = 1.0;
    for (Eigen::Index k = 0; k < t_.rows(); ++k) {
      if (k == r) continue;
      const double f = t_(k, c);
      if (f != 0.0) {
        t_.row(k) -= f * t_.row(r);
        t_(k, c) = 0.0;
      }
    }
    const double f = reduced[c];
    if (f != 0.0) {
      reduced -= f * t_.row(r).head(cols()).transpose();
      objective += f * t_(r, t_.cols() - 1);
      reduced[c] = 0.0;
    }
    basis_[static_cast<std::size_t>(r)] = c;
  }

  // One pivot under Bland's rule: lowest-index improving column, ratio-test
  // ties broken by lowest basic variable index.
  enum class StepResult { optimal, pivoted, unbounded };

  StepResult step(Vector& reduced, double& objective, const std::vector<bool>& allowed, double tol) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < cols(); ++j) {
      if (allowed[static_cast<std::size_t>(j)] && reduced[j] < -tol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) return StepResult::optimal;
    Eigen::Index leave = -1;
    double best = kInfinity;
    for (Eigen::Index r = 0; r < rows(); ++r) {
      const double a = t_(r, enter);
      if (a <= kPivotTolerance) continue;
      const double ratio = rhs(r) / a;
      const double eps = 1e-12 * (1.0 + std::abs(ratio));
      if (leave < 0 || ratio < best - eps) {
        best = ratio;
        leave = r;
      } else if (std::abs(ratio - best) <= eps &&
                 basis_[static_cast<std::size_t>(r)] < basis_[static_cast<std::size_t>(leave)]) {
        leave = r;
      }
    }
    if (leave < 0) return StepResult::unbounded;
    pivot(leave, enter, reduced, objective);
    return StepResult::pivoted;
  }

  static constexpr double kPivotTolerance = 1e-11;

private:
  Matrix t_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace detail

/// Rows that cannot hold anywhere inside the variable box.
inline std::vector<Eigen::Index> rows_infeasible_in_box(const LpStandardForm& lp) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < lp.num_rows(); ++i) {
    double lowest = 0.0;
    for (Eigen::Index j = 0; j < lp.num_variables(); ++j) {
      const double a = lp.rows(i, j);
      if (a > 0.0) lowest += a * lp.lower[j];
      else if (a < 0.0) lowest += a * lp.upper[j];
    }
    if (lowest > lp.rhs[i] + 1e-9 * (1.0 + std::abs(lp.rhs[i]))) out.push_back(i);
  }
  return out;
}

inline LpSolution solve_lp(const LpStandardForm& lp) {
  lp.check_well_formed();
  const Eigen::Index n = lp.num_variables();
  const Eigen::Index r_orig = lp.num_rows();

  LpSolution sol;
  sol.infeasible_rows = rows_infeasible_in_box(lp);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (lp.upper[j] < lp.lower[j]) {
      sol.status = Status::infeasible;
      return sol;
    }
  }

  // Shift y = x - l >= 0; finite upper bounds become extra rows.
  std::vector<Eigen::Index> bounded;
  for (Eigen::Index j = 0; j < n; ++j)
    if (std::isfinite(lp.upper[j])) bounded.push_back(j);
  const Eigen::Index m = r_orig + static_cast<Eigen::Index>(bounded.size());

  Matrix a = Matrix::Zero(m, n);
  Vector b(m);
  a.topRows(r_orig) = lp.rows;
  b.head(r_orig) = lp.rhs - lp.rows * lp.lower;
  for (std::size_t k = 0; k < bounded.size(); ++k) {
    const auto r = r_orig + static_cast<Eigen::Index>(k);
    a(r, bounded[k]) = 1.0;
    b[r] = lp.upper[bounded[k]] - lp.lower[bounded[k]];
  }

  Eigen::Index num_art = 0;
  for (Eigen::Index r = 0; r < m; ++r)
    if (b[r] < 0.0) ++num_art;

  // Columns: [structural n | slack m | artificial num_art].
  const Eigen::Index slack0 = n;
  const Eigen::Index art0 = n + m;
  const Eigen::Index cols = n + m + num_art;
  detail::Tableau tab(m, cols);
  Eigen::Index next_art = art0;
  for (Eigen::Index r = 0; r < m; ++r) {
    const double sign = b[r] < 0.0 ? -1.0 : 1.0;
    for (Eigen::Index j = 0; j < n; ++j) tab.at(r, j) = sign * a(r, j);
    tab.at(r, slack0 + r) = sign;
    tab.rhs(r) = sign * b[r];
    if (sign < 0.0) {
      tab.at(r, next_art) = 1.0;
      tab.basis()[static_cast<std::size_t>(r)] = next_art++;
    } else {
      tab.basis()[static_cast<std::size_t>(r)] = slack0 + r;
    }
  }

  const double scale = 1.0 + (lp.objective.size() ? lp.objective.cwiseAbs().maxCoeff() : 0.0);
  const double tol = 1e-10 * scale;
  const std::size_t max_iterations = 50 * static_cast<std::size_t>(cols + m) + 1000;

  // Phase 1: minimize the sum of artificials.
  std::vector<bool> allowed(static_cast<std::size_t>(cols), true);
  if (num_art > 0) {
    Vector reduced = Vector::Zero(cols);
    double phase1 = 0.0;
    for (Eigen::Index r = 0; r < m; ++r) {
      if (tab.basis()[static_cast<std::size_t>(r)] >= art0) {
        for (Eigen::Index j = 0; j < cols; ++j) reduced[j] -= tab.at(r, j);
        phase1 += tab.rhs(r);
      }
    }
    for (Eigen::Index j = art0; j < cols; ++j) reduced[j] = 0.0;
    for (;;) {
      if (++sol.iterations > max_iterations) throw InternalConsistencyError("simplex iteration limit (phase 1)");
      const auto res = tab.step(reduced, phase1, allowed, 1e-12);
      if (res != detail::Tableau::StepResult::pivoted) break;
    }
    double infeasibility = 0.0;
    for (Eigen::Index r = 0; r < m; ++r)
      if (tab.basis()[static_cast<std::size_t>(r)] >= art0) infeasibility += tab.rhs(r);
    if (infeasibility > 1e-9 * (1.0 + b.cwiseAbs().maxCoeff())) {
      sol.status = Status::infeasible;
      return sol;
    }
    // Drive zero-level artificials out of the basis.
    for (Eigen::Index r = 0; r < m; ++r) {
      if (tab.basis()[static_cast<std::size_t>(r)] < art0) continue;
      for (Eigen::Index j = 0; j < art0; ++j) {
        if (std::abs(tab.at(r, j)) > detail::Tableau::kPivotTolerance) {
          tab.pivot(r, j, reduced, phase1);
          break;
        }
      }
    }
    for (Eigen::Index j = art0; j < cols; ++j) allowed[static_cast<std::size_t>(j)] = false;
  }

  // Phase 2.
  Vector cost = Vector::Zero(cols);
  cost.head(n) = lp.objective;
  Vector reduced = cost;
  double z = 0.0;
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto bv = tab.basis()[static_cast<std::size_t>(r)];
    const double cb = cost[bv];
    if (cb == 0.0) continue;
    for (Eigen::Index j = 0; j < cols; ++j) reduced[j] -= cb * tab.at(r, j);
    z += cb * tab.rhs(r);
  }
  for (;;) {
    if (++sol.iterations > max_iterations) throw InternalConsistencyError("simplex iteration limit (phase 2)");
    const auto res = tab.step(reduced, z, allowed, tol);
    if (res == detail::Tableau::StepResult::optimal) break;
    if (res == detail::Tableau::StepResult::unbounded) {
      sol.status = Status::unbounded;
      return sol;
    }
  }

  Vector values = Vector::Zero(cols);
  for (Eigen::Index r = 0; r < m; ++r) values[tab.basis()[static_cast<std::size_t>(r)]] = tab.rhs(r);

  sol.status = Status::optimal;
  sol.infeasible_rows.clear();
  sol.x = values.head(n) + lp.lower;
  sol.objective = lp.objective.dot(sol.x);
  sol.row_slack = lp.rhs - lp.rows * sol.x;
  sol.row_duals = reduced.segment(slack0, r_orig).cwiseMax(0.0);
  sol.upper_duals = Vector::Zero(n);
  for (std::size_t k = 0; k < bounded.size(); ++k)
    sol.upper_duals[bounded[k]] = std::max(0.0, reduced[slack0 + r_orig + static_cast<Eigen::Index>(k)]);
  sol.lower_duals = reduced.head(n).cwiseMax(0.0);

  // A constraint that is tight with a zero multiplier admits alternative
  // optimal duals.
  for (Eigen::Index i = 0; i < r_orig && !sol.degenerate; ++i) {
    if (std::abs(sol.row_slack[i]) <= 1e-9 * (1.0 + std::abs(lp.rhs[i])) && sol.row_duals[i] <= 1e-12)
      sol.degenerate = true;
  }
  return sol;
}

/// Scaled KKT residuals of an optimal solution.
inline KktResiduals kkt_residuals(const LpStandardForm& lp, const LpSolution& sol) {
  KktResiduals k;
  if (sol.status != Status::optimal) throw ArgumentError("KKT residuals need an optimal solution");
  const Eigen::Index n = lp.num_variables();
  const double obj_scale = 1.0 + std::abs(sol.objective);

  const Vector ax = lp.rows * sol.x;
  for (Eigen::Index i = 0; i < lp.num_rows(); ++i)
    k.primal = std::max(k.primal, (ax[i] - lp.rhs[i]) / (1.0 + std::abs(lp.rhs[i])));
  for (Eigen::Index j = 0; j < n; ++j) {
    k.primal = std::max(k.primal, (lp.lower[j] - sol.x[j]) / (1.0 + std::abs(lp.lower[j])));
    if (std::isfinite(lp.upper[j]))
      k.primal = std::max(k.primal, (sol.x[j] - lp.upper[j]) / (1.0 + std::abs(lp.upper[j])));
  }
  k.primal = std::max(k.primal, 0.0);

  const double min_dual = std::min({sol.row_duals.size() ? sol.row_duals.minCoeff() : 0.0,
                                    sol.upper_duals.minCoeff(), sol.lower_duals.minCoeff()});
  k.dual = std::max(0.0, -min_dual);

  const Vector grad = lp.objective + lp.rows.transpose() * sol.row_duals + sol.upper_duals - sol.lower_duals;
  for (Eigen::Index j = 0; j < n; ++j)
    k.stationarity = std::max(k.stationarity, std::abs(grad[j]) / (1.0 + std::abs(lp.objective[j])));

  for (Eigen::Index i = 0; i < lp.num_rows(); ++i)
    k.complementarity = std::max(k.complementarity, std::abs(sol.row_duals[i] * sol.row_slack[i]) / obj_scale);
  double dual_obj = -lp.rhs.dot(sol.row_duals) + lp.lower.dot(sol.lower_duals);
  for (Eigen::Index j = 0; j < n; ++j) {
    k.complementarity = std::max(k.complementarity,
                                 std::abs(sol.lower_duals[j] * (sol.x[j] - lp.lower[j])) / obj_scale);
    if (std::isfinite(lp.upper[j])) {
      k.complementarity = std::max(k.complementarity,
                                   std::abs(sol.upper_duals[j] * (lp.upper[j] - sol.x[j])) / obj_scale);
      dual_obj -= lp.upper[j] * sol.upper_duals[j];
    }
  }
  k.gap = std::abs(sol.objective - dual_obj) / obj_scale;
  return k;
}

}  // namespace rocof::lp
