// Umbrella header.

#pragma once

#include "latblock/certificate.hpp"
#include "latblock/config.hpp"
#include "latblock/error.hpp"
#include "latblock/evade.hpp"
#include "latblock/lattice.hpp"
#include "latblock/mat2.hpp"
#include "latblock/numeric.hpp"
#include "latblock/parse.hpp"
#include "latblock/polynomial.hpp"
#include "latblock/quat.hpp"
#include "latblock/sl2.hpp"
