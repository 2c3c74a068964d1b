#pragma once

// Umbrella header for the event-dynamics encoding and alignment kernel.
#include "forge/stam/alignment.hpp"
#include "forge/stam/encoder.hpp"
#include "forge/stam/grid.hpp"
#include "forge/stam/lattice.hpp"
#include "forge/stam/temporal.hpp"

namespace forge {

/// Scalar type of the kernel in the CLI; tests instantiate the templates with double.
#ifdef FORGE_REAL_F64
using Real = double;
#else
using Real = float;
#endif

}  // namespace forge
