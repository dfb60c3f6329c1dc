#include "mvpose/skeleton.hpp"

namespace mvpose {

void recompute_limb_lengths(SkeletonTopology& topology) {
    const auto pos = topology.rest_positions();
    topology.limb_rest_length.resize(topology.limbs.size());
    for (size_t l = 0; l < topology.limbs.size(); ++l) {
        const auto [a, b] = topology.limbs[l];
        topology.limb_rest_length[l] = (pos[static_cast<size_t>(a)] - pos[static_cast<size_t>(b)]).norm();
    }
}

SkeletonTopology default_topology() {
    SkeletonTopology t;
    t.joint_count = 15;
    t.hip_index = 0;
    t.joint_names = {
        "pelvis",      "neck",       "head",
        "l_shoulder",  "l_elbow",    "l_wrist",
        "r_shoulder",  "r_elbow",    "r_wrist",
        "l_hip",       "l_knee",     "l_ankle",
        "r_hip",       "r_knee",     "r_ankle",
    };
    t.parent = {-1, 0, 1, 1, 3, 4, 1, 6, 7, 0, 9, 10, 0, 12, 13};
    // z-up, person faces +x, left is +y; pelvis ~1.0 m above ground
    t.rest_offset = {
        {0.00, 0.00, 0.00},    // pelvis (root)
        {0.00, 0.00, 0.55},    // neck
        {0.00, 0.00, 0.15},    // head
        {0.00, 0.18, -0.02},   // l_shoulder
        {0.00, 0.02, -0.28},   // l_elbow
        {0.00, 0.01, -0.25},   // l_wrist
        {0.00, -0.18, -0.02},  // r_shoulder
        {0.00, -0.02, -0.28},  // r_elbow
        {0.00, -0.01, -0.25},  // r_wrist
        {0.00, 0.09, -0.04},   // l_hip
        {0.00, 0.01, -0.43},   // l_knee
        {0.00, -0.01, -0.45},  // l_ankle
        {0.00, -0.09, -0.04},  // r_hip
        {0.00, -0.01, -0.43},  // r_knee
        {0.00, 0.01, -0.45},   // r_ankle
    };
    t.limbs = {
        {0, 1}, {1, 2},                    // torso, head
        {1, 3}, {3, 4}, {4, 5},            // left arm
        {1, 6}, {6, 7}, {7, 8},            // right arm
        {0, 9}, {9, 10}, {10, 11},         // left leg
        {0, 12}, {12, 13}, {13, 14},       // right leg
    };
    recompute_limb_lengths(t);
    t.validate();
    return t;
}

}  // namespace mvpose
