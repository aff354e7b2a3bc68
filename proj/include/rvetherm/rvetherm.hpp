#pragma once

#include "config.hpp"
#include "geometry.hpp"
#include "morphology.hpp"
#include "solver.hpp"
#include "spec.hpp"
#include "stochastic.hpp"
#include "sweep.hpp"
