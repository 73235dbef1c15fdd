#pragma once

#include "nvolve/dataset.hpp"
#include "nvolve/embedding.hpp"
#include "nvolve/encoder.hpp"
#include "nvolve/error.hpp"
#include "nvolve/evalsuite.hpp"
#include "nvolve/keyvalue.hpp"
#include "nvolve/matrix.hpp"
#include "nvolve/objective.hpp"
#include "nvolve/optimizer.hpp"
#include "nvolve/persistence.hpp"
#include "nvolve/rng.hpp"
#include "nvolve/synthetic.hpp"
#include "nvolve/training.hpp"

namespace nvolve {
inline constexpr const char* kVersion = "0.1.0";
}
