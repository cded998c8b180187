#pragma once

// Umbrella header. external.hpp (subprocess/HTTP transports) is not included
// here because it pulls in cpp-httplib; include it explicitly when needed.

#include "nice/benchmark.hpp"
#include "nice/classifier.hpp"
#include "nice/distance.hpp"
#include "nice/error.hpp"
#include "nice/eval.hpp"
#include "nice/explainers.hpp"
#include "nice/json_io.hpp"
#include "nice/model.hpp"
#include "nice/plausibility.hpp"
#include "nice/rng.hpp"
#include "nice/tabular.hpp"
