#pragma once

// Umbrella header.

#include "roughflow/besov.hpp"
#include "roughflow/commutator.hpp"
#include "roughflow/fft.hpp"
#include "roughflow/flux.hpp"
#include "roughflow/forge.hpp"
#include "roughflow/grid.hpp"
#include "roughflow/harness/experiments.hpp"
#include "roughflow/kernel.hpp"
#include "roughflow/oracle.hpp"
#include "roughflow/regression.hpp"
#include "roughflow/rng.hpp"
#include "roughflow/scheme.hpp"
