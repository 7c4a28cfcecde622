// Umbrella header.

#pragma once

#include "semc/completion.hpp"
#include "semc/dense.hpp"
#include "semc/experiment.hpp"
#include "semc/expression.hpp"
#include "semc/io.hpp"
#include "semc/manifold.hpp"
#include "semc/metrics.hpp"
#include "semc/solver.hpp"
#include "semc/synth.hpp"
