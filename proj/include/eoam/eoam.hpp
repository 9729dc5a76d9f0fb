#pragma once

#include "eoam/config.hpp"
#include "eoam/grid.hpp"
#include "eoam/inverse_dynamics.hpp"
#include "eoam/io.hpp"
#include "eoam/lookup_table.hpp"
#include "eoam/ocp.hpp"
#include "eoam/outputs.hpp"
#include "eoam/path.hpp"
#include "eoam/phase_diagram.hpp"
#include "eoam/runtime.hpp"
#include "eoam/scenario.hpp"
#include "eoam/units.hpp"
#include "eoam/vehicle.hpp"
