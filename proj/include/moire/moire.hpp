#pragma once
// Umbrella header for the moire library.

#include "moire/classifier.hpp"
#include "moire/config.hpp"
#include "moire/error.hpp"
#include "moire/geometry.hpp"
#include "moire/io.hpp"
#include "moire/parallel.hpp"
#include "moire/potential.hpp"
#include "moire/report.hpp"
#include "moire/sweep.hpp"
#include "moire/tracer.hpp"
#include "moire/version.hpp"
