#pragma once

#include "signal.hpp"
#include "filters.hpp"
#include "regressor.hpp"
#include "drem.hpp"
#include "estimator.hpp"
#include "runner.hpp"
