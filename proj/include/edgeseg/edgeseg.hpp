#pragma once

// Convenience include for the whole library.

#include "edgeseg/config_io.hpp"
#include "edgeseg/csv.hpp"
#include "edgeseg/engine.hpp"
#include "edgeseg/errors.hpp"
#include "edgeseg/geometry.hpp"
#include "edgeseg/latency.hpp"
#include "edgeseg/localization.hpp"
#include "edgeseg/metrics.hpp"
#include "edgeseg/mobility.hpp"
#include "edgeseg/model.hpp"
#include "edgeseg/orchestration.hpp"
#include "edgeseg/rng.hpp"
#include "edgeseg/segmentation.hpp"
#include "edgeseg/sweep.hpp"
