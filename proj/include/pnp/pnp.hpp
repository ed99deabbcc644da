#pragma once

#include "pnp/config.hpp"
#include "pnp/denoisers.hpp"
#include "pnp/diagnostics.hpp"
#include "pnp/experiment.hpp"
#include "pnp/fidelity.hpp"
#include "pnp/io.hpp"
#include "pnp/phantom.hpp"
#include "pnp/rng.hpp"
#include "pnp/signal.hpp"
#include "pnp/solvers.hpp"
#include "pnp/transforms.hpp"
