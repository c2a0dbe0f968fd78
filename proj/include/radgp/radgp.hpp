#pragma once

#include "radgp/dag.hpp"
#include "radgp/draws.hpp"
#include "radgp/error.hpp"
#include "radgp/geometry.hpp"
#include "radgp/inference.hpp"
#include "radgp/io.hpp"
#include "radgp/kernels.hpp"
#include "radgp/metrics.hpp"
#include "radgp/partition.hpp"
#include "radgp/precision.hpp"
#include "radgp/predict.hpp"
#include "radgp/rng.hpp"
#include "radgp/simulate.hpp"
