#pragma once

// Umbrella header.

#include "filtlab/certify.hpp"
#include "filtlab/config.hpp"
#include "filtlab/dichotomy.hpp"
#include "filtlab/eigen.hpp"
#include "filtlab/error.hpp"
#include "filtlab/evolve.hpp"
#include "filtlab/expr.hpp"
#include "filtlab/grid.hpp"
#include "filtlab/io.hpp"
#include "filtlab/model.hpp"
#include "filtlab/quadrature.hpp"
#include "filtlab/runner.hpp"
#include "filtlab/steady.hpp"
