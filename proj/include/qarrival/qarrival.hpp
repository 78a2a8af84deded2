#pragma once

#include "qarrival/abm.hpp"
#include "qarrival/belief.hpp"
#include "qarrival/coupling.hpp"
#include "qarrival/dists.hpp"
#include "qarrival/error.hpp"
#include "qarrival/fluid.hpp"
#include "qarrival/scenario.hpp"
#include "qarrival/signal.hpp"
#include "qarrival/solver.hpp"
#include "qarrival/workload.hpp"
