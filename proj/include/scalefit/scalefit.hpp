// Umbrella header.
#pragma once

#include "scalefit/analysis.hpp"
#include "scalefit/core.hpp"
#include "scalefit/io.hpp"
#include "scalefit/nonlinear.hpp"
#include "scalefit/piecewise.hpp"
#include "scalefit/regression.hpp"
#include "scalefit/report.hpp"
#include "scalefit/synth.hpp"
