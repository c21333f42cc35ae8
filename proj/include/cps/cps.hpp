#pragma once

// Everything except the JSON report helpers, which need nlohmann/json.

#include "cps/bench.hpp"
#include "cps/errors.hpp"
#include "cps/image.hpp"
#include "cps/io.hpp"
#include "cps/metrics.hpp"
#include "cps/operators.hpp"
#include "cps/penalty.hpp"
#include "cps/problems.hpp"
#include "cps/radon.hpp"
#include "cps/simulate.hpp"
#include "cps/solver.hpp"
#include "cps/wavelet.hpp"
