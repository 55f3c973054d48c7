#pragma once

#include "errors.hpp"
#include "vehicle.hpp"
#include "dynamics.hpp"
#include "plan.hpp"
#include "world.hpp"
#include "rollout.hpp"
#include "metrics.hpp"
#include "validator.hpp"
#include "schema.hpp"
#include "fixture.hpp"
#include "agents.hpp"
#include "llm_client.hpp"
#include "orchestrator.hpp"
#include "config.hpp"
#include "report.hpp"
