#pragma once

#include "cpcs/config.hpp"
#include "cpcs/csv.hpp"
#include "cpcs/lindblad.hpp"
#include "cpcs/models.hpp"
#include "cpcs/operators.hpp"
#include "cpcs/pulse.hpp"
#include "cpcs/regression.hpp"
#include "cpcs/scan.hpp"
#include "cpcs/superop.hpp"
#include "cpcs/system.hpp"
#include "cpcs/trajectory.hpp"
#include "cpcs/units.hpp"
