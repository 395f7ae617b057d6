#pragma once

// Umbrella header.

#include "riskpess/bounds.hpp"
#include "riskpess/dataset.hpp"
#include "riskpess/error.hpp"
#include "riskpess/estimators.hpp"
#include "riskpess/experiments.hpp"
#include "riskpess/io.hpp"
#include "riskpess/learner.hpp"
#include "riskpess/parallel.hpp"
#include "riskpess/risk.hpp"
#include "riskpess/rng.hpp"
#include "riskpess/simlab.hpp"
#include "riskpess/step_fn.hpp"
