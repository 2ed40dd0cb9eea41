#pragma once

#include "cointss/error.hpp"
#include "cointss/matops.hpp"
#include "cointss/model.hpp"
#include "cointss/realization.hpp"
#include "cointss/cointegration.hpp"
#include "cointss/moments.hpp"
#include "cointss/simulate.hpp"
#include "cointss/kalman.hpp"
#include "cointss/ecf.hpp"
