#include <rocof/rocof_engine.hpp>

#include "support/dense_oracle.hpp"
#include "support/fixtures.hpp"
#include "support/random_grid.hpp"

#include <gtest/gtest.h>

using namespace rocof;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

ImpactDistribution impact_of(std::initializer_list<double> v) {
  ImpactDistribution d;
  d.delta_pg_mw = vec(v);
  return d;
}

}  // namespace

TEST(DistributeImpact, LoneGeneratorAbsorbsEverything) {
  const auto d = distribute_impact(fixture::single_machine_grid(), {"L1", 150.0});
  ASSERT_EQ(d.delta_pg_mw.size(), 1);
  EXPECT_NEAR(d.delta_pg_mw[0], 150.0, 1e-12);
  EXPECT_LE(d.conservation_residual_mw, 1e-9);
}

TEST(DistributeImpact, StarSplitsByInternalSusceptance) {
  const auto d = distribute_impact(fixture::star_grid(), {"L1", 150.0});
  EXPECT_NEAR(d.delta_pg_mw[0], 50.0, 1e-12);
  EXPECT_NEAR(d.delta_pg_mw[1], 100.0, 1e-12);
}

TEST(DistributeImpact, Chain) {
  // (1/140) [180, 30] pu on a 100 MVA base.
  const auto d = distribute_impact(fixture::chain_grid(), {"L1", 150.0});
  EXPECT_NEAR(d.delta_pg_mw[0], 18000.0 / 140.0, 1e-10);
  EXPECT_NEAR(d.delta_pg_mw[1], 3000.0 / 140.0, 1e-10);
}

TEST(DistributeImpact, RejectsBadDisturbances) {
  const auto g = fixture::star_grid();
  EXPECT_THROW(distribute_impact(g, {"G1", 150.0}), ArgumentError);
  EXPECT_THROW(distribute_impact(g, {"L7", 150.0}), ArgumentError);
  EXPECT_THROW(distribute_impact(g, {"L1", 0.0}), ArgumentError);
  EXPECT_THROW(distribute_impact(g, {"L1", -5.0}), ArgumentError);
}

TEST(GeneratorRocof, SwingEquationValues) {
  const double h1[] = {1000.0};
  EXPECT_DOUBLE_EQ(generator_rocof(impact_of({150.0}), 50.0, h1)[0], -3.75);

  const auto star = generator_rocof(impact_of({50.0, 100.0}), fixture::star_grid());
  EXPECT_DOUBLE_EQ(star[0], -2.5);
  EXPECT_DOUBLE_EQ(star[1], -1.25);

  const double h2[] = {500.0, 2000.0};
  EXPECT_TRUE(generator_rocof(impact_of({0.0, 0.0}), 50.0, h2).isZero(0.0));
}

TEST(GeneratorRocof, ZeroInertiaIsAnError) {
  const double h[] = {0.0};
  EXPECT_THROW(generator_rocof(impact_of({150.0}), 50.0, h), ArgumentError);
  const double h2[] = {1000.0, 1000.0};
  EXPECT_THROW(generator_rocof(impact_of({150.0}), 50.0, h2), ArgumentError);
}

TEST(PropagationMatrix, HandValues) {
  const auto single = propagation_matrix(assemble_blocks(fixture::single_machine_grid()));
  EXPECT_NEAR(single.t(0, 0), 1.0, 1e-15);

  const auto star = propagation_matrix(assemble_blocks(fixture::star_grid()));
  EXPECT_NEAR(star.t(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(star.t(0, 1), 2.0 / 3.0, 1e-15);

  const auto chain = propagation_matrix(assemble_blocks(fixture::chain_grid()));
  EXPECT_NEAR(chain.t(0, 0), 6.0 / 7.0, 1e-15);
  EXPECT_NEAR(chain.t(0, 1), 1.0 / 7.0, 1e-15);
  EXPECT_NEAR(chain.t(1, 0), 1.0 / 7.0, 1e-15);
  EXPECT_NEAR(chain.t(1, 1), 6.0 / 7.0, 1e-15);
  EXPECT_TRUE(chain.nonnegative);
}

TEST(LoadRocof, HandValues) {
  PropagationMatrix one;
  one.t = Matrix::Ones(1, 1);
  EXPECT_DOUBLE_EQ(load_rocof(one, vec({-3.75}))[0], -3.75);

  const auto star = propagation_matrix(assemble_blocks(fixture::star_grid()));
  EXPECT_NEAR(load_rocof(star, vec({-2.5, -1.25}))[0], -5.0 / 3.0, 1e-14);

  // Generator RoCoF of the chain: -f0 dPg / 2H with H = 1000.
  const auto chain = propagation_matrix(assemble_blocks(fixture::chain_grid()));
  const Vector gen = vec({-50.0 * 18000.0 / 140.0 / 2000.0, -50.0 * 3000.0 / 140.0 / 2000.0});
  const Vector load = load_rocof(chain, gen);
  EXPECT_NEAR(load[0], -2.832, 5e-4);
  EXPECT_NEAR(load[1], -0.918, 5e-4);

  EXPECT_THROW(load_rocof(chain, vec({1.0})), ArgumentError);
}

TEST(NodalRocofReport, Star) {
  const auto r = nodal_rocof_report(fixture::star_grid(), {"L1", 150.0});
  EXPECT_EQ(r.worst_bus, BusId("G1"));
  EXPECT_EQ(r.worst_kind, BusKind::generator);
  EXPECT_NEAR(r.worst_rocof, -2.5, 1e-12);
  EXPECT_NEAR(r.load_rocof[0], -5.0 / 3.0, 1e-12);
  const auto buses = r.buses();
  ASSERT_EQ(buses.size(), 3u);
  EXPECT_EQ(buses[2].id, BusId("L1"));
  EXPECT_EQ(buses[2].kind, BusKind::load);
}

TEST(NodalRocofReport, Chain) {
  const auto r = nodal_rocof_report(fixture::chain_grid(), {"L1", 150.0});
  EXPECT_EQ(r.worst_bus, BusId("G1"));
  EXPECT_NEAR(r.worst_rocof, -3.2142857142857, 1e-9);
  EXPECT_NEAR(r.gen_rocof[1], -0.5357142857143, 1e-9);
}

TEST(NodalRocofReport, TiesPreferGeneratorsThenLexicographicId) {
  GridModel g;
  g.load_buses = {"A1", "A2"};
  g.generators = {{"Gb", "A1", 1000.0, 2000.0, 10.0, 1.0}, {"Ga", "A1", 1000.0, 2000.0, 10.0, 1.0}};
  g.lines = {{"A1", "A2", 5.0}};
  const auto r = nodal_rocof_report(g, {"A2", 100.0});
  // Every bus has the same RoCoF; "A1" sorts first but is a load bus.
  EXPECT_EQ(r.worst_bus, BusId("Ga"));
  EXPECT_NEAR(r.load_rocof[0], r.worst_rocof, 1e-12);
}

TEST(NodalRocofReport, LoadBusMaximumIsFlagged) {
  RoCoFReport r;
  r.generator_ids = {"G1", "G2"};
  r.load_ids = {"L1"};
  r.gen_rocof = vec({-1.0, -2.0});
  r.load_rocof = vec({-2.5});  // impossible with a row-stochastic, nonnegative T
  EXPECT_FALSE(detail::pick_worst_bus(r));
  EXPECT_EQ(r.worst_bus, BusId("L1"));
  EXPECT_EQ(r.worst_kind, BusKind::load);

  r.load_rocof = vec({-2.0 + 5e-10});  // within tie tolerance of G2
  EXPECT_TRUE(detail::pick_worst_bus(r));
  EXPECT_EQ(r.worst_bus, BusId("G2"));
}

TEST(ScreenContingencies, ChainIsSymmetric) {
  const auto s = screen_contingencies(fixture::chain_grid(), AllLoadBuses{}, 150.0);
  ASSERT_EQ(s.reports.size(), 2u);
  EXPECT_EQ(s.reports[0].worst_bus, BusId("G1"));
  EXPECT_EQ(s.reports[1].worst_bus, BusId("G2"));
  EXPECT_NEAR(s.reports[0].worst_rocof, -3.2142857142857, 1e-9);
  EXPECT_NEAR(s.reports[1].worst_rocof, -3.2142857142857, 1e-9);
  EXPECT_NEAR(s.max_abs_delta_pg_mw[0], 18000.0 / 140.0, 1e-9);
  EXPECT_NEAR(s.max_abs_delta_pg_mw[1], 18000.0 / 140.0, 1e-9);
  EXPECT_EQ(s.binding_contingency[0], 0u);
  EXPECT_EQ(s.binding_contingency[1], 1u);
}

TEST(ScreenContingencies, SingleLoadMatchesNodalReport) {
  const auto g = fixture::single_machine_grid();
  const auto s = screen_contingencies(g, AllLoadBuses{}, 150.0);
  ASSERT_EQ(s.reports.size(), 1u);
  const auto r = nodal_rocof_report(g, {"L1", 150.0});
  EXPECT_EQ(s.reports[0].worst_bus, r.worst_bus);
  EXPECT_EQ(s.reports[0].gen_rocof, r.gen_rocof);
  EXPECT_EQ(s.reports[0].load_rocof, r.load_rocof);
}

TEST(ScreenContingencies, StarSummary) {
  const auto s = screen_contingencies(fixture::star_grid(), AllLoadBuses{}, 150.0);
  ASSERT_EQ(s.reports.size(), 1u);
  EXPECT_NEAR(s.max_abs_delta_pg_mw[0], 50.0, 1e-12);
  EXPECT_NEAR(s.max_abs_delta_pg_mw[1], 100.0, 1e-12);
}

TEST(ScreenContingencies, EmptySetAndBadEntries) {
  EXPECT_THROW(screen_contingencies(fixture::star_grid(), std::vector<Disturbance>{}, 150.0), ArgumentError);
  EXPECT_THROW(screen_contingencies(fixture::star_grid(), std::vector<Disturbance>{{"G1", 1.0}}, 0.0), ArgumentError);
}

TEST(ScreenContingencies, ParallelMatchesSerialInInputOrder) {
  std::mt19937_64 rng(5);
  const auto g = fixture::random_connected_grid(rng);
  const auto serial = screen_contingencies(g, AllLoadBuses{}, 120.0, 1);
  const auto parallel = screen_contingencies(g, AllLoadBuses{}, 120.0, 4);
  ASSERT_EQ(serial.reports.size(), parallel.reports.size());
  for (std::size_t k = 0; k < serial.reports.size(); ++k) {
    EXPECT_EQ(serial.reports[k].disturbance, parallel.reports[k].disturbance);
    EXPECT_EQ(serial.reports[k].gen_rocof, parallel.reports[k].gen_rocof);
    EXPECT_EQ(serial.reports[k].load_rocof, parallel.reports[k].load_rocof);
  }
  EXPECT_EQ(serial.max_abs_delta_pg_mw, parallel.max_abs_delta_pg_mw);
  EXPECT_EQ(serial.worst_report, parallel.worst_report);
}

TEST(GeneratorTrip, BecomesLoadStepAtTerminal) {
  const auto [reduced, d] = generator_trip(fixture::star_grid(), "G2", 100.0);
  EXPECT_EQ(reduced.num_generators(), 1u);
  EXPECT_EQ(d.bus, BusId("L1"));
  EXPECT_EQ(d.p_dis_mw, 100.0);
  const auto r = nodal_rocof_report(reduced, d);
  EXPECT_NEAR(r.worst_rocof, -50.0 * 100.0 / (2.0 * 500.0), 1e-12);
  EXPECT_THROW(generator_trip(fixture::single_machine_grid(), "G1", 10.0), InvalidGridError);
}

// Property suite over random connected grids.
class RandomGridProperties : public ::testing::Test {
protected:
  std::mt19937_64 rng{2024};
};

TEST_F(RandomGridProperties, RowStochasticNonnegativeT) {
  for (int trial = 0; trial < 300; ++trial) {
    const auto g = fixture::random_connected_grid(rng);
    const auto t = propagation_matrix(assemble_blocks(g));
    ASSERT_LE((t.t.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-9);
    ASSERT_GE(t.t.minCoeff(), -1e-12);
    ASSERT_TRUE(t.nonnegative);

    const auto naive = fixture::naive_propagation(g);
    for (Eigen::Index r = 0; r < t.t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.t.cols(); ++c) ASSERT_NEAR(t.t(r, c), naive[r][c], 1e-10);
  }
}

TEST_F(RandomGridProperties, ImpactConservationAndOracle) {
  for (int trial = 0; trial < 300; ++trial) {
    const auto g = fixture::random_connected_grid(rng);
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, g.num_loads() - 1)(rng);
    const double p = std::uniform_real_distribution<double>(1.0, 1000.0)(rng);
    const auto d = distribute_impact(g, {g.load_buses[j], p});
    ASSERT_LE(std::abs(d.delta_pg_mw.sum() - p), 1e-6);
    ASSERT_GE(d.delta_pg_mw.minCoeff(), -1e-9);
    const auto naive = fixture::naive_impact(g, j, p);
    for (std::size_t i = 0; i < naive.size(); ++i)
      ASSERT_NEAR(d.delta_pg_mw[static_cast<Eigen::Index>(i)], naive[i], 1e-8 * p);
  }
}

TEST_F(RandomGridProperties, LargestRocofAtGeneratorAndLoadsInterpolate) {
  for (int trial = 0; trial < 300; ++trial) {
    const auto g = fixture::random_connected_grid(rng);
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, g.num_loads() - 1)(rng);
    const double p = std::uniform_real_distribution<double>(1.0, 1000.0)(rng);
    const auto r = nodal_rocof_report(g, {g.load_buses[j], p});
    ASSERT_EQ(r.worst_kind, BusKind::generator);
    const double lo = r.gen_rocof.minCoeff(), hi = r.gen_rocof.maxCoeff();
    const double slack = 1e-12 * std::max(1.0, std::abs(lo));
    ASSERT_GE(r.load_rocof.minCoeff(), lo - slack);
    ASSERT_LE(r.load_rocof.maxCoeff(), hi + slack);
    for (double v : r.gen_rocof) ASSERT_LE(v, 0.0);
  }
}

TEST_F(RandomGridProperties, DoublingInertiaHalvesRocofExactly) {
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = fixture::random_connected_grid(rng);
    const Disturbance d{g.load_buses.front(), 200.0};
    const auto base = nodal_rocof_report(g, d);
    auto doubled_inertia = synchronous_inertia(g);
    for (auto& h : doubled_inertia) h *= 2.0;
    const auto doubled = nodal_rocof_report(g, d, doubled_inertia);
    ASSERT_EQ(doubled.gen_rocof, (base.gen_rocof * 0.5).eval());
    ASSERT_EQ(doubled.load_rocof, (base.load_rocof * 0.5).eval());
    ASSERT_EQ(doubled.worst_bus, base.worst_bus);
  }
}
