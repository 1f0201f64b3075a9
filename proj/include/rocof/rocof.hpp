#pragma once

#include <rocof/error.hpp>
#include <rocof/grid_model.hpp>
#include <rocof/inertia_dispatch.hpp>
#include <rocof/lp.hpp>
#include <rocof/report_io.hpp>
#include <rocof/rocof_engine.hpp>
#include <rocof/susceptance.hpp>
#include <rocof/swing_oracle.hpp>
