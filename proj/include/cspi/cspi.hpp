#pragma once

#include "cspi/amplitude.hpp"
#include "cspi/bogoliubov.hpp"
#include "cspi/cli.hpp"
#include "cspi/common.hpp"
#include "cspi/core.hpp"
#include "cspi/diagnostics.hpp"
#include "cspi/errors.hpp"
#include "cspi/green.hpp"
#include "cspi/oracles.hpp"
#include "cspi/propagator.hpp"
#include "cspi/report.hpp"
#include "cspi/scenario.hpp"
