// Umbrella header for the library.
#pragma once

#include "almrl/actor_critic.hpp"
#include "almrl/baselines.hpp"
#include "almrl/harness.hpp"
#include "almrl/market.hpp"
#include "almrl/rng.hpp"
#include "almrl/stats.hpp"
