#include <rocof/inertia_dispatch.hpp>

#include "support/fixtures.hpp"
#include "support/random_grid.hpp"

#include <gtest/gtest.h>

using namespace rocof;

namespace {

const std::vector<Disturbance> kStarStep{{"L1", 150.0}};

// Smallest total cost over an integer grid of virtual-inertia awards that
// keeps every generator within the limit; nullopt if no grid point works.
std::optional<double> grid_search_objective(const GridModel& g, const std::vector<ImpactDistribution>& impacts,
                                            double rocof_max) {
  const std::size_t n = g.num_generators();
  std::vector<long> limit(n);
  for (std::size_t i = 0; i < n; ++i) limit[i] = static_cast<long>(std::floor(g.generators[i].h_max_mws - g.generators[i].h0_mws));
  std::vector<long> hv(n, 0);
  std::optional<double> best;
  for (;;) {
    bool ok = true;
    for (std::size_t k = 0; k < impacts.size() && ok; ++k) {
      for (std::size_t i = 0; i < n && ok; ++i) {
        const double h = g.generators[i].h0_mws + static_cast<double>(hv[i]);
        const double rocof = -g.f0_hz * impacts[k].delta_pg_mw[static_cast<Eigen::Index>(i)] / (2.0 * h);
        ok = std::abs(rocof) <= rocof_max * (1.0 + 1e-12);
      }
    }
    if (ok) {
      double cost = 0.0;
      for (std::size_t i = 0; i < n; ++i) cost += g.generators[i].cost_per_mws * static_cast<double>(hv[i]);
      if (!best || cost < *best) best = cost;
    }
    std::size_t d = 0;
    while (d < n && hv[d] == limit[d]) hv[d++] = 0;
    if (d == n) break;
    ++hv[d];
  }
  return best;
}

}  // namespace

TEST(BuildDispatch, StarStructure) {
  const auto built = build_dispatch(fixture::star_grid(), kStarStep, 1.0);
  EXPECT_EQ(built.lp.num_variables(), 2);
  EXPECT_EQ(built.lp.num_rows(), 4);
  EXPECT_EQ(built.lp.lower, Vector::Zero(2));
  EXPECT_DOUBLE_EQ(built.lp.upper[0], 4500.0);
  EXPECT_DOUBLE_EQ(built.lp.upper[1], 3000.0);
  ASSERT_EQ(built.problem.impacts.size(), 1u);
  for (const auto& tag : built.lp.tags) EXPECT_NE(tag.generator, lp::kNoIndex);
}

TEST(BuildDispatch, RowArithmetic) {
  // 2500 <= 2 (500 + hv1)  ->  hv1 >= 750;  5000 <= 2 (2000 + hv2)  ->  hv2 >= 500.
  const auto built = build_dispatch(fixture::star_grid(), kStarStep, 1.0);
  const auto& lp = built.lp;
  ASSERT_EQ(lp.tags[0].kind, kRowRocofLower);
  EXPECT_DOUBLE_EQ(lp.rows(0, 0), -1.0);
  EXPECT_NEAR(lp.rhs[0], -750.0, 1e-9);
  ASSERT_EQ(lp.tags[2].kind, kRowRocofLower);
  EXPECT_EQ(lp.tags[2].generator, 1u);
  EXPECT_NEAR(lp.rhs[2], -500.0, 1e-9);
  // Upper-side rows are slack by construction.
  EXPECT_GT(lp.rhs[1], 0.0);
  EXPECT_GT(lp.rhs[3], 0.0);

  const auto unscaled = build_dispatch(fixture::star_grid(), kStarStep, 1.0, RowScaling::unscaled);
  EXPECT_DOUBLE_EQ(unscaled.lp.rows(0, 0), -2.0);
  EXPECT_NEAR(unscaled.lp.rhs[0], -1500.0, 1e-9);
}

TEST(BuildDispatch, LooseLimitLeavesEveryRowSlack) {
  const auto built = build_dispatch(fixture::star_grid(), kStarStep, 10.0);
  for (Eigen::Index r = 0; r < built.lp.num_rows(); ++r) EXPECT_GT(built.lp.rhs[r], 0.0);
}

TEST(BuildDispatch, Errors) {
  EXPECT_THROW(build_dispatch(fixture::star_grid(), std::vector<Disturbance>{}, 1.0), ArgumentError);
  EXPECT_THROW(build_dispatch(fixture::star_grid(), kStarStep, 0.0), ArgumentError);
  EXPECT_THROW(build_dispatch(fixture::star_grid(), kStarStep, -1.0), ArgumentError);
}

TEST(Dispatch, StarAwardsAndPrices) {
  const auto s = dispatch(fixture::star_grid(), kStarStep, 1.0);
  ASSERT_EQ(s.status, lp::Status::optimal);
  EXPECT_NEAR(s.h_v_mws[0], 750.0, 1e-9);
  EXPECT_NEAR(s.h_v_mws[1], 500.0, 1e-9);
  EXPECT_NEAR(s.objective, 1250.0, 1e-9);
  EXPECT_NEAR(s.prices[0], 1.0, 1e-12);
  EXPECT_NEAR(s.prices[1], 1.0, 1e-12);
  EXPECT_NEAR(s.sigma_lo(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(s.sigma_hi(0, 0), 0.0, 1e-12);
  EXPECT_LE(s.kkt.max(), 1e-7);
  EXPECT_NEAR(s.audit.worst_rocof_hz_per_s, -1.0, 1e-9);
  EXPECT_FALSE(s.degenerate);
}

TEST(Dispatch, LooseLimitBuysNothing) {
  const auto s = dispatch(fixture::star_grid(), kStarStep, 5.0);
  ASSERT_EQ(s.status, lp::Status::optimal);
  EXPECT_TRUE(s.h_v_mws.isZero(0.0));
  EXPECT_TRUE(s.prices.isZero(0.0));
  EXPECT_EQ(s.objective, 0.0);
}

TEST(Dispatch, InfeasibleNamesGeneratorAndContingency) {
  auto g = fixture::star_grid();
  g.generators[0].h_max_mws = 1000.0;  // G1 needs 1250 in total
  const auto s = dispatch(g, kStarStep, 1.0);
  EXPECT_EQ(s.status, lp::Status::infeasible);
  ASSERT_EQ(s.infeasible_pairs.size(), 1u);
  EXPECT_EQ(s.infeasible_pairs[0], std::make_pair(std::size_t{0}, std::size_t{0}));
  EXPECT_THROW(extract_prices(s, 1.0), ArgumentError);
}

TEST(Dispatch, ChainAllLoadBuses) {
  const auto s = dispatch(fixture::chain_grid(), AllLoadBuses{}, 150.0, 1.0);
  ASSERT_EQ(s.status, lp::Status::optimal);
  const double need = 50.0 * (18000.0 / 140.0) / 2.0 - 1000.0;
  EXPECT_NEAR(s.h_v_mws[0], need, 1e-9);
  EXPECT_NEAR(s.h_v_mws[1], need, 1e-9);
  EXPECT_NEAR(s.prices[0], 1.0, 1e-12);
  // G1 is bound by the step at L1 only.
  EXPECT_GT(s.sigma_lo(0, 0), 0.0);
  EXPECT_EQ(s.sigma_lo(0, 1), 0.0);
  EXPECT_GT(s.sigma_lo(1, 1), 0.0);
  EXPECT_NEAR(std::abs(s.audit.worst_rocof_hz_per_s), 1.0, 1e-9);
}

TEST(Dispatch, PriceEqualsCostOfBindingSupplier) {
  auto g = fixture::star_grid();
  g.generators[0].cost_per_mws = 3.0;
  g.generators[1].cost_per_mws = 0.25;
  const auto s = dispatch(g, kStarStep, 1.0);
  EXPECT_NEAR(s.prices[0], 3.0, 1e-12);
  EXPECT_NEAR(s.prices[1], 0.25, 1e-12);
  EXPECT_NEAR(s.objective, 3.0 * 750.0 + 0.25 * 500.0, 1e-9);
}

class DispatchProperties : public ::testing::Test {
protected:
  std::mt19937_64 rng{77};

  // Random grid with a random contingency subset and a limit between 0.3 and 3 Hz/s.
  std::tuple<GridModel, std::vector<Disturbance>, double> instance(std::size_t max_gens = 6) {
    fixture::RandomGridOptions opt;
    opt.max_generators = max_gens;
    opt.max_loads = 12;
    auto g = fixture::random_connected_grid(rng, opt);
    std::vector<Disturbance> ks;
    std::uniform_real_distribution<double> p(10.0, 600.0);
    for (const auto& l : g.load_buses)
      if (ks.empty() || std::bernoulli_distribution(0.5)(rng)) ks.push_back({l, p(rng)});
    const double r = std::uniform_real_distribution<double>(0.3, 3.0)(rng);
    // Ceilings high enough that both r and r / 2 are feasible.
    const auto built = build_dispatch(g, ks, r);
    for (std::size_t i = 0; i < g.num_generators(); ++i) {
      double need = 0.0;
      for (const auto& imp : built.problem.impacts)
        need = std::max(need, g.f0_hz * imp.delta_pg_mw[static_cast<Eigen::Index>(i)] / (2.0 * r));
      g.generators[i].h_max_mws = std::max(g.generators[i].h_max_mws, 2.5 * need);
    }
    return {std::move(g), std::move(ks), r};
  }
};

TEST_F(DispatchProperties, KktBindingPriceAndAudit) {
  for (int trial = 0; trial < 100; ++trial) {
    const auto [g, ks, r] = instance();
    const auto s = dispatch(g, ks, r);
    ASSERT_EQ(s.status, lp::Status::optimal);
    ASSERT_LE(s.kkt.max(), 1e-7);
    ASSERT_LE(std::abs(s.audit.worst_rocof_hz_per_s), r + 1e-6);
    ASSERT_GE(s.prices.minCoeff(), 0.0);

    const auto built = build_dispatch(g, ks, r);
    for (std::size_t i = 0; i < g.num_generators(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      double min_slack = lp::kInfinity;
      for (Eigen::Index row = 0; row < built.lp.num_rows(); ++row) {
        if (built.lp.tags[static_cast<std::size_t>(row)].generator != i) continue;
        min_slack = std::min(min_slack, built.lp.rhs[row] - built.lp.rows.row(row).dot(s.h_v_mws));
      }
      const double tight = 1e-7 * (1.0 + g.generators[i].h_max_mws);
      if (s.prices[ii] > 0.0) {
        ASSERT_LE(min_slack, tight);
      }
      if (min_slack > tight) {
        ASSERT_EQ(s.prices[ii], 0.0);
      }
    }
  }
}

TEST_F(DispatchProperties, TighterLimitNeverCheaper) {
  for (int trial = 0; trial < 50; ++trial) {
    const auto [g, ks, r] = instance();
    const auto loose = dispatch(g, ks, r);
    const auto tight = dispatch(g, ks, r / 2.0);
    ASSERT_EQ(loose.status, lp::Status::optimal);
    ASSERT_EQ(tight.status, lp::Status::optimal);
    ASSERT_GE(tight.objective, loose.objective - 1e-9 * (1.0 + loose.objective));
  }
}

TEST_F(DispatchProperties, GridSearchAgreesOnSmallInstances) {
  int checked = 0;
  for (int trial = 0; trial < 12; ++trial) {
    auto [g, ks, r] = instance(2);
    // Keep the search box small: ceiling just above what is needed.
    const auto built = build_dispatch(g, ks, r);
    for (std::size_t i = 0; i < g.num_generators(); ++i) {
      double need = 0.0;
      for (const auto& imp : built.problem.impacts)
        need = std::max(need, g.f0_hz * imp.delta_pg_mw[static_cast<Eigen::Index>(i)] / (2.0 * r));
      g.generators[i].h0_mws = std::max(1.0, need - 120.0);
      g.generators[i].h_max_mws = g.generators[i].h0_mws + 200.0;
    }
    const auto s = dispatch(g, ks, r);
    const auto brute = grid_search_objective(g, build_dispatch(g, ks, r).problem.impacts, r);
    ASSERT_EQ(s.status == lp::Status::optimal, brute.has_value());
    if (!brute) continue;
    double step_cost = 0.0;
    for (const auto& gen : g.generators) step_cost += gen.cost_per_mws;
    ASSERT_GE(*brute, s.objective - 1e-9);
    ASSERT_LE(*brute - s.objective, step_cost);
    ++checked;
  }
  EXPECT_GT(checked, 5);
}
