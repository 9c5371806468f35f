#pragma once

#include "kinetic_brw/brw_engine.hpp"
#include "kinetic_brw/errors.hpp"
#include "kinetic_brw/fixed_point.hpp"
#include "kinetic_brw/initial_laws.hpp"
#include "kinetic_brw/kinetic_solver.hpp"
#include "kinetic_brw/random.hpp"
#include "kinetic_brw/spectral.hpp"
#include "kinetic_brw/stats.hpp"
#include "kinetic_brw/weight_models.hpp"
