#pragma once

#include "gdsim/aggregate.hpp"
#include "gdsim/bench.hpp"
#include "gdsim/checks.hpp"
#include "gdsim/engine.hpp"
#include "gdsim/errors.hpp"
#include "gdsim/globals.hpp"
#include "gdsim/ids.hpp"
#include "gdsim/models/epidemic.hpp"
#include "gdsim/models/hk.hpp"
#include "gdsim/parallel.hpp"
#include "gdsim/partition.hpp"
#include "gdsim/rng.hpp"
#include "gdsim/schema.hpp"
#include "gdsim/simulation.hpp"
#include "gdsim/spatial.hpp"
#include "gdsim/transition.hpp"
#include "gdsim/value.hpp"
