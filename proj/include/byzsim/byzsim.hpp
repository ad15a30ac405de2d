#pragma once

#include "byzsim/aggregators.hpp"
#include "byzsim/attacks.hpp"
#include "byzsim/config.hpp"
#include "byzsim/metrics.hpp"
#include "byzsim/noise.hpp"
#include "byzsim/optimizer.hpp"
#include "byzsim/presets.hpp"
#include "byzsim/problems.hpp"
#include "byzsim/rng.hpp"
#include "byzsim/runner.hpp"
#include "byzsim/stats.hpp"
#include "byzsim/vector_ops.hpp"
#include "byzsim/version.hpp"
