#pragma once

#include "mcmcdegen/errors.hpp"
#include "mcmcdegen/rng.hpp"
#include "mcmcdegen/special.hpp"
#include "mcmcdegen/sampling.hpp"
#include "mcmcdegen/model.hpp"
#include "mcmcdegen/kernels.hpp"
#include "mcmcdegen/stats.hpp"
#include "mcmcdegen/transport.hpp"
#include "mcmcdegen/parallel.hpp"
#include "mcmcdegen/metrics.hpp"
#include "mcmcdegen/asymptotics.hpp"
#include "mcmcdegen/diagnostics.hpp"
#include "mcmcdegen/io.hpp"
#include "mcmcdegen/harness.hpp"
#include "mcmcdegen/oracles.hpp"
