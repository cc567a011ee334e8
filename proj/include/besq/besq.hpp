#pragma once

// Umbrella header: the full squared-Bessel projection toolkit.

#include "besq/quadrature.hpp"
#include "besq/specfun.hpp"
#include "besq/projection.hpp"
#include "besq/rng.hpp"
#include "besq/simulate.hpp"
#include "besq/verify.hpp"
