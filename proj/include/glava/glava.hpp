#ifndef GLAVA_GLAVA_HPP
#define GLAVA_GLAVA_HPP

// Umbrella header.

#include "glava/benchmark.hpp"
#include "glava/cross_validation.hpp"
#include "glava/csv.hpp"
#include "glava/dataset.hpp"
#include "glava/errors.hpp"
#include "glava/gcm.hpp"
#include "glava/link.hpp"
#include "glava/normal.hpp"
#include "glava/parallel.hpp"
#include "glava/penalty.hpp"
#include "glava/rng.hpp"
#include "glava/simulate.hpp"
#include "glava/solver.hpp"

#endif  // GLAVA_GLAVA_HPP
