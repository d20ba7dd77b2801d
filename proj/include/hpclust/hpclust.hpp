#pragma once

#include "hpclust/baselines.hpp"
#include "hpclust/bench.hpp"
#include "hpclust/core.hpp"
#include "hpclust/engine.hpp"
#include "hpclust/io.hpp"
#include "hpclust/lloyd.hpp"
#include "hpclust/parallel.hpp"
#include "hpclust/rng.hpp"
#include "hpclust/seeding.hpp"
