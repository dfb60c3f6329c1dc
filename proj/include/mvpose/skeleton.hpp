#pragma once

#include "mvpose/types.hpp"

namespace mvpose {

/// Builds the default 15-joint skeleton (pelvis root, neck, head, two
/// arms, two legs; 14 limbs, total height about 1.7 m). World frame is
/// z-up; the rest pose faces +x with arms hanging.
SkeletonTopology default_topology();

/// Derives per-limb rest lengths from rest offsets. Call after editing
/// offsets or building a topology by hand.
void recompute_limb_lengths(SkeletonTopology& topology);

}  // namespace mvpose
