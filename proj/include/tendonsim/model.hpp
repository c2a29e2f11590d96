#pragma once

#include "tendonsim/model/inertia.hpp"
#include "tendonsim/model/input_matrix.hpp"
#include "tendonsim/model/kinematics.hpp"
#include "tendonsim/model/params.hpp"
#include "tendonsim/model/potential.hpp"
#include "tendonsim/model/state.hpp"
