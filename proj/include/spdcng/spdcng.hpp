#pragma once

// Umbrella header for the library (the CLI lives in spdcng/cli.hpp).

#include "spdcng/quadrature.hpp"
#include "spdcng/specfun.hpp"
#include "spdcng/shape_integrals.hpp"
#include "spdcng/shape_constants.hpp"
#include "spdcng/distributions.hpp"
#include "spdcng/moments.hpp"
#include "spdcng/entropy.hpp"
#include "spdcng/gstate.hpp"
