#pragma once

#include <rocof/grid_model.hpp>

namespace rocof::fixture {

// Two generators (b_int 5 and 10) sharing one load bus.
inline GridModel star_grid() {
  GridModel g;
  g.f0_hz = 50.0;
  g.s_base_mva = 100.0;
  g.load_buses = {"L1"};
  g.generators = {{"G1", "L1", 500.0, 5000.0, 5.0, 1.0}, {"G2", "L1", 2000.0, 5000.0, 10.0, 1.0}};
  return g;
}

// G1 - L1 - L2 - G2, internal susceptance 10, line 2.
inline GridModel chain_grid() {
  GridModel g;
  g.f0_hz = 50.0;
  g.s_base_mva = 100.0;
  g.load_buses = {"L1", "L2"};
  g.generators = {{"G1", "L1", 1000.0, 5000.0, 10.0, 1.0}, {"G2", "L2", 1000.0, 5000.0, 10.0, 1.0}};
  g.lines = {{"L1", "L2", 2.0}};
  return g;
}

inline GridModel single_machine_grid(double b_int = 10.0, double h0 = 1000.0) {
  GridModel g;
  g.load_buses = {"L1"};
  g.generators = {{"G1", "L1", h0, 5000.0, b_int, 1.0}};
  return g;
}

}  // namespace rocof::fixture
