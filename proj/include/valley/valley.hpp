#pragma once

#include "valley/model.hpp"
#include "valley/fitness.hpp"
#include "valley/landscape.hpp"
#include "valley/theory.hpp"
#include "valley/rng.hpp"
#include "valley/bdp.hpp"
#include "valley/engine.hpp"
#include "valley/ode.hpp"
#include "valley/stats.hpp"
#include "valley/harness.hpp"
#include "valley/io.hpp"
