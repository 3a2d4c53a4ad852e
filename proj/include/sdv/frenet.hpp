#pragma once

#include "sdv/reference_path.hpp"
#include "sdv/types.hpp"

namespace sdv {

// Decomposes a world-frame state along the path's tangent/normal frame,
// including the curvature coupling terms in velocity and acceleration.
// Throws TransformError when the projection is ambiguous.
FrenetState to_frenet(const CartesianState& state, const ReferencePath& path);

// Inverse of to_frenet. Heading is the path heading plus the angle of the
// (longitudinal, lateral) velocity pair; below 1 mm/s the path heading is
// held so a standstill keeps a stable orientation.
// Throws TransformError when s is outside [0, path.length()] or the state
// leaves the valid tube (curvature * d >= 1).
CartesianState to_cartesian(const FrenetState& state, const ReferencePath& path);

}  // namespace sdv
