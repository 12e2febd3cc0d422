// SPDX-License-Identifier: MIT
//
// Umbrella header.
#pragma once

#include "oplab/core.hpp"
#include "oplab/estimator.hpp"
#include "oplab/lowerbound.hpp"
#include "oplab/measure.hpp"
#include "oplab/noise.hpp"
#include "oplab/operators.hpp"
#include "oplab/partition.hpp"
#include "oplab/rates.hpp"
#include "oplab/risk.hpp"
#include "oplab/spectrum.hpp"
