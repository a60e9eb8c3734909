#pragma once

#include "sealpk/types.hpp"
#include "sealpk/pkr.hpp"
#include "sealpk/mmu.hpp"
#include "sealpk/seal_unit.hpp"
#include "sealpk/kernel.hpp"
#include "sealpk/cost_model.hpp"
#include "sealpk/trace.hpp"
#include "sealpk/event_log.hpp"
#include "sealpk/machine.hpp"
#include "sealpk/scenario_io.hpp"
#include "sealpk/report.hpp"
#include "sealpk/expectations.hpp"
#include "sealpk/shadow_stack.hpp"
#include "sealpk/builtin.hpp"
