#pragma once

// Initial (t = 0+) nodal RoCoF after a sudden load step.
//
// Generator rotor angles cannot move at 0+, so the step is shared among the
// machines through the network alone:
//
//   dP_G = B_GB B_BB^{-1} dP_D
//
// Each machine then decelerates according to its own inertia, and load-bus
// frequencies follow through T = -B_BB^{-1} B_BG, a row-stochastic matrix.
//
// Sign convention: a load increase of p MW is an injection change of -p at
// the load bus, delta_pg >= 0 and RoCoF = -f0 * delta_pg / (2 H) <= 0 (Hz/s).

#include <rocof/error.hpp>
#include <rocof/grid_model.hpp>
#include <rocof/susceptance.hpp>

#include <atomic>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <thread>
#include <variant>

namespace rocof {

inline constexpr double kConservationToleranceMw = 1e-6;
inline constexpr double kRowSumTolerance = 1e-9;
inline constexpr double kNonnegativityTolerance = 1e-12;
inline constexpr double kWorstBusTieToleranceHzPerS = 1e-9;

struct Disturbance {
  BusId bus;
  double p_dis_mw = 0.0;  // load increase

  friend bool operator==(const Disturbance&, const Disturbance&) = default;
};

struct ImpactDistribution {
  Vector delta_pg_mw;  // increase in electrical output per generator
  double conservation_residual_mw = 0.0;
};

struct PropagationMatrix {
  Matrix t;  // m x n
  double max_row_sum_error = 0.0;
  double min_entry = 0.0;
  bool nonnegative = true;
};

enum class BusKind { generator, load };

inline const char* to_string(BusKind k) { return k == BusKind::generator ? "generator" : "load"; }

struct BusRocof {
  BusId id;
  BusKind kind;
  double rocof_hz_per_s;
};

struct RoCoFReport {
  Disturbance disturbance;
  ImpactDistribution impact;
  std::shared_ptr<const PropagationMatrix> propagation;
  Vector gen_rocof;   // Hz/s, generator order
  Vector load_rocof;  // Hz/s, load order
  std::vector<BusId> generator_ids;
  std::vector<BusId> load_ids;
  BusId worst_bus;
  BusKind worst_kind = BusKind::generator;
  double worst_rocof = 0.0;

  /// Generators first, then loads, each in grid order.
  std::vector<BusRocof> buses() const {
    std::vector<BusRocof> out;
    out.reserve(generator_ids.size() + load_ids.size());
    for (std::size_t i = 0; i < generator_ids.size(); ++i)
      out.push_back({generator_ids[i], BusKind::generator, gen_rocof[static_cast<Eigen::Index>(i)]});
    for (std::size_t j = 0; j < load_ids.size(); ++j)
      out.push_back({load_ids[j], BusKind::load, load_rocof[static_cast<Eigen::Index>(j)]});
    return out;
  }
};

/// Thrown when the largest |RoCoF| is not at a generator bus. Carries the
/// full report for diagnostics.
class RocofAssumptionBreach : public ModelAssumptionBreach {
public:
  RocofAssumptionBreach(std::string message, RoCoFReport report)
      : ModelAssumptionBreach(std::move(message)), report_(std::move(report)) {}
  const RoCoFReport& report() const noexcept { return report_; }

private:
  RoCoFReport report_;
};

inline ImpactDistribution distribute_impact(const GridModel& grid, const SusceptanceBlocks& blocks,
                                            const Disturbance& d) {
  const auto it = blocks.load_index().find(d.bus);
  if (it == blocks.load_index().end())
    throw ArgumentError("disturbance bus '" + d.bus.value + "' is not a load bus");
  if (!(std::isfinite(d.p_dis_mw) && d.p_dis_mw > 0.0))
    throw ArgumentError("disturbance size must be positive (got " + std::to_string(d.p_dis_mw) + " MW)");

  Vector injection = Vector::Zero(blocks.num_loads());
  injection[it->second] = -d.p_dis_mw / grid.s_base_mva;
  const Vector theta_d = solve_bbb(blocks, injection);

  ImpactDistribution out;
  out.delta_pg_mw = grid.s_base_mva * (blocks.b_gb() * theta_d);
  out.conservation_residual_mw = std::abs(out.delta_pg_mw.sum() - d.p_dis_mw);
  if (!(out.conservation_residual_mw <= kConservationToleranceMw))
    throw InternalConsistencyError("power impact not conserved: residual " +
                                   std::to_string(out.conservation_residual_mw) + " MW");
  return out;
}

inline ImpactDistribution distribute_impact(const GridModel& grid, const Disturbance& d) {
  return distribute_impact(grid, assemble_blocks(grid), d);
}

/// RoCoF_i = -f0 * delta_pg_i / (2 H_i) for explicit total inertia H (MW s).
inline Vector generator_rocof(const ImpactDistribution& impact, double f0_hz,
                              std::span<const double> inertia_mws) {
  const auto n = impact.delta_pg_mw.size();
  if (static_cast<Eigen::Index>(inertia_mws.size()) != n)
    throw ArgumentError("inertia vector length does not match generator count");
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = inertia_mws[static_cast<std::size_t>(i)];
    if (!(std::isfinite(h) && h > 0.0))
      throw ArgumentError("generator " + std::to_string(i) + " has no inertia; RoCoF undefined");
    out[i] = -f0_hz * impact.delta_pg_mw[i] / (2.0 * h);
  }
  return out;
}

inline std::vector<double> synchronous_inertia(const GridModel& grid) {
  std::vector<double> h;
  h.reserve(grid.generators.size());
  for (const auto& g : grid.generators) h.push_back(g.h0_mws);
  return h;
}

/// Uses the synchronous inertia h0 of each generator.
inline Vector generator_rocof(const ImpactDistribution& impact, const GridModel& grid) {
  const auto h = synchronous_inertia(grid);
  return generator_rocof(impact, grid.f0_hz, h);
}

/// T = -B_BB^{-1} B_BG; every row sums to one on a connected grid.
inline PropagationMatrix propagation_matrix(const SusceptanceBlocks& blocks) {
  certify_invertible(blocks);
  PropagationMatrix out;
  out.t = -blocks.solve(blocks.b_bg());
  out.max_row_sum_error = (out.t.rowwise().sum().array() - 1.0).abs().maxCoeff();
  out.min_entry = out.t.minCoeff();
  out.nonnegative = out.min_entry >= -kNonnegativityTolerance;
  if (!(out.max_row_sum_error <= kRowSumTolerance))
    throw InternalConsistencyError("propagation matrix rows do not sum to one (max error " +
                                   std::to_string(out.max_row_sum_error) + ")");
  return out;
}

inline Vector load_rocof(const PropagationMatrix& t, const Vector& gen_rocof) {
  if (t.t.cols() != gen_rocof.size())
    throw ArgumentError("propagation matrix has " + std::to_string(t.t.cols()) + " columns but " +
                        std::to_string(gen_rocof.size()) + " generator RoCoF values were given");
  return t.t * gen_rocof;
}

namespace detail {

// Largest |RoCoF|; among buses within the tie tolerance, generator buses win,
// then lexicographic id order. Returns false if no generator is within the
// tolerance of the maximum.
inline bool pick_worst_bus(RoCoFReport& r) {
  const auto buses = r.buses();
  double peak = 0.0;
  for (const auto& b : buses) peak = std::max(peak, std::abs(b.rocof_hz_per_s));
  const BusRocof* best = nullptr;
  const BusRocof* best_load = nullptr;
  for (const auto& b : buses) {
    if (std::abs(b.rocof_hz_per_s) < peak - kWorstBusTieToleranceHzPerS) continue;
    auto& slot = b.kind == BusKind::generator ? best : best_load;
    if (slot == nullptr || b.id < slot->id) slot = &b;
  }
  const BusRocof* chosen = best != nullptr ? best : best_load;
  r.worst_bus = chosen->id;
  r.worst_kind = chosen->kind;
  r.worst_rocof = chosen->rocof_hz_per_s;
  return best != nullptr;
}

}  // namespace detail

/// Full nodal report from precomputed blocks and T. `inertia_mws` overrides
/// the synchronous inertia (e.g. h0 + awarded virtual inertia).
inline RoCoFReport nodal_rocof_report(const GridModel& grid, const SusceptanceBlocks& blocks,
                                      std::shared_ptr<const PropagationMatrix> t, const Disturbance& d,
                                      std::span<const double> inertia_mws = {}) {
  RoCoFReport r;
  r.disturbance = d;
  r.impact = distribute_impact(grid, blocks, d);
  r.propagation = std::move(t);
  const auto h0 = synchronous_inertia(grid);
  r.gen_rocof = generator_rocof(r.impact, grid.f0_hz, inertia_mws.empty() ? std::span<const double>(h0) : inertia_mws);
  r.load_rocof = load_rocof(*r.propagation, r.gen_rocof);
  r.generator_ids = blocks.generator_ids();
  r.load_ids = blocks.load_ids();
  if (!detail::pick_worst_bus(r)) {
    const std::string msg = "largest initial RoCoF (" + std::to_string(r.worst_rocof) + " Hz/s) at load bus '" +
                            r.worst_bus.value + "' for disturbance at '" + d.bus.value + "'; T min entry " +
                            std::to_string(r.propagation->min_entry);
    throw RocofAssumptionBreach(msg, std::move(r));
  }
  return r;
}

inline RoCoFReport nodal_rocof_report(const GridModel& grid, const Disturbance& d,
                                      std::span<const double> inertia_mws = {}) {
  const auto blocks = assemble_blocks(grid);
  auto t = std::make_shared<const PropagationMatrix>(propagation_matrix(blocks));
  return nodal_rocof_report(grid, blocks, std::move(t), d, inertia_mws);
}

/// Sentinel: one disturbance of the given size at every load bus.
struct AllLoadBuses {};

using ContingencySet = std::variant<std::vector<Disturbance>, AllLoadBuses>;

inline std::vector<Disturbance> expand_contingencies(const GridModel& grid, const ContingencySet& set,
                                                     double p_dis_mw) {
  std::vector<Disturbance> out;
  if (std::holds_alternative<AllLoadBuses>(set)) {
    for (const auto& l : grid.load_buses) out.push_back({l, p_dis_mw});
  } else {
    out = std::get<std::vector<Disturbance>>(set);
  }
  if (out.empty()) throw ArgumentError("empty contingency set");
  return out;
}

struct ScreeningResult {
  std::vector<RoCoFReport> reports;       // input order
  Vector max_abs_delta_pg_mw;             // per generator, over all contingencies
  std::vector<std::size_t> binding_contingency;  // argmax of the above, per generator
  std::size_t worst_report = 0;           // contingency with the largest |RoCoF|
};

/// Runs nodal_rocof_report over a contingency set. B_BB is factorized once;
/// work is spread over `threads` workers and merged in input order.
inline ScreeningResult screen_contingencies(const GridModel& grid, const ContingencySet& set, double p_dis_mw,
                                            unsigned threads = 1) {
  const auto contingencies = expand_contingencies(grid, set, p_dis_mw);
  const auto blocks = assemble_blocks(grid);
  auto t = std::make_shared<const PropagationMatrix>(propagation_matrix(blocks));

  const std::size_t k_total = contingencies.size();
  std::vector<std::optional<RoCoFReport>> slots(k_total);
  std::vector<std::exception_ptr> errors(k_total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < k_total; k = next++) {
      try {
        slots[k] = nodal_rocof_report(grid, blocks, t, contingencies[k]);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(k_total)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  ScreeningResult out;
  const auto n = blocks.num_generators();
  out.max_abs_delta_pg_mw = Vector::Zero(n);
  out.binding_contingency.assign(static_cast<std::size_t>(n), 0);
  out.reports.reserve(k_total);
  for (auto& s : slots) out.reports.push_back(std::move(*s));
  for (std::size_t k = 0; k < k_total; ++k) {
    const auto& r = out.reports[k];
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(r.impact.delta_pg_mw[i]) > out.max_abs_delta_pg_mw[i]) {
        out.max_abs_delta_pg_mw[i] = std::abs(r.impact.delta_pg_mw[i]);
        out.binding_contingency[static_cast<std::size_t>(i)] = k;
      }
    }
    if (std::abs(r.worst_rocof) > std::abs(out.reports[out.worst_report].worst_rocof) + kWorstBusTieToleranceHzPerS)
      out.worst_report = k;
  }
  return out;
}

/// Generator trip approximated as a load increase of its pre-trip output at
/// its terminal bus, with the unit removed from the grid.
inline std::pair<GridModel, Disturbance> generator_trip(const GridModel& grid, const BusId& generator,
                                                        double output_mw) {
  const auto i = grid.generator_index(generator);
  if (i == GridModel::npos) throw ArgumentError("unknown generator '" + generator.value + "'");
  GridModel reduced = grid;
  const BusId terminal = reduced.generators[i].terminal;
  reduced.generators.erase(reduced.generators.begin() + static_cast<std::ptrdiff_t>(i));
  require_valid(reduced);
  return {std::move(reduced), Disturbance{terminal, output_mw}};
}

}  // namespace rocof
