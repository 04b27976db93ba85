#pragma once

#include "ssbfs/error.hpp"
#include "ssbfs/graph.hpp"
#include "ssbfs/protocol.hpp"
#include "ssbfs/execution.hpp"
#include "ssbfs/adversary.hpp"
#include "ssbfs/scheduler.hpp"
#include "ssbfs/analysis.hpp"
#include "ssbfs/scenarios.hpp"
#include "ssbfs/driver.hpp"
