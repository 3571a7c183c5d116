#pragma once

// Umbrella header for the short-term load forecasting toolkit.

#include "stlf/ar.hpp"
#include "stlf/checkpoint.hpp"
#include "stlf/core.hpp"
#include "stlf/dataset.hpp"
#include "stlf/forecast.hpp"
#include "stlf/lstm.hpp"
#include "stlf/metrics.hpp"
#include "stlf/network.hpp"
#include "stlf/optimizer.hpp"
#include "stlf/pipeline.hpp"
#include "stlf/pooling.hpp"
#include "stlf/svr.hpp"
#include "stlf/training.hpp"
