#pragma once

// Convenience header pulling in the whole library.

#include "adinv/core.hpp"
#include "adinv/linalg.hpp"
#include "adinv/rng.hpp"
#include "adinv/spectral.hpp"
#include "adinv/sampling.hpp"
#include "adinv/aliasing.hpp"
#include "adinv/solver.hpp"
#include "adinv/identifiability.hpp"
#include "adinv/oracle.hpp"
#include "adinv/detection.hpp"
#include "adinv/io.hpp"
#include "adinv/experiment.hpp"
