#include "mvpose/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace mvpose {

int SkeletonTopology::root() const {
    for (int j = 0; j < joint_count; ++j)
        if (parent[static_cast<size_t>(j)] < 0) return j;
    throw ValidationError("topology has no root joint");
}

int SkeletonTopology::bone_index(int joint) const {
    const int r = root();
    if (joint == r) throw ValidationError("root joint has no bone");
    return joint < r ? joint : joint - 1;
}

std::vector<Eigen::Vector3d> SkeletonTopology::rest_positions() const {
    std::vector<Eigen::Vector3d> pos(static_cast<size_t>(joint_count), Eigen::Vector3d::Zero());
    // parents precede children after validation, but walk defensively by depth
    std::vector<bool> done(static_cast<size_t>(joint_count), false);
    for (int remaining = joint_count; remaining > 0;) {
        int progressed = 0;
        for (int j = 0; j < joint_count; ++j) {
            if (done[static_cast<size_t>(j)]) continue;
            const int p = parent[static_cast<size_t>(j)];
            if (p < 0) {
                pos[static_cast<size_t>(j)].setZero();
            } else if (done[static_cast<size_t>(p)]) {
                pos[static_cast<size_t>(j)] = pos[static_cast<size_t>(p)] + rest_offset[static_cast<size_t>(j)];
            } else {
                continue;
            }
            done[static_cast<size_t>(j)] = true;
            ++progressed;
            --remaining;
        }
        if (progressed == 0) throw ValidationError("topology parent array contains a cycle");
    }
    return pos;
}

void SkeletonTopology::validate() const {
    if (joint_count <= 0) throw ValidationError("joint_count must be positive");
    const auto n = static_cast<size_t>(joint_count);
    if (parent.size() != n || rest_offset.size() != n)
        throw ValidationError("parent/rest_offset size must equal joint_count");
    int roots = 0;
    for (int j = 0; j < joint_count; ++j) {
        const int p = parent[static_cast<size_t>(j)];
        if (p < 0) {
            ++roots;
        } else if (p >= joint_count || p == j) {
            throw ValidationError("parent index out of range");
        }
    }
    if (roots != 1) throw ValidationError("topology must have exactly one root");
    // cycle check via topological walk
    (void)rest_positions();
    if (hip_index < 0 || hip_index >= joint_count) throw ValidationError("hip_index out of range");
    if (hip_index != root()) throw ValidationError("hip_index must be the tree root");
    if (limb_rest_length.size() != limbs.size())
        throw ValidationError("limb_rest_length size must equal limbs size");
    for (size_t l = 0; l < limbs.size(); ++l) {
        const auto [a, b] = limbs[l];
        if (a < 0 || a >= joint_count || b < 0 || b >= joint_count || a == b)
            throw ValidationError("limb joint index out of range");
        if (!(limb_rest_length[l] > 0.0))
            throw ValidationError("limb rest length must be strictly positive");
    }
    for (const auto& o : rest_offset)
        if (!o.allFinite()) throw ValidationError("rest offsets must be finite");
}

void CameraView::validate() const {
    if (!projection.allFinite()) throw ValidationError("projection must be finite");
    if (!(width > 0.0 && height > 0.0)) throw ValidationError("image bounds must be positive");
    Eigen::Matrix3d m = projection.leftCols<3>();
    Eigen::FullPivLU<Eigen::Matrix3d> lu(m);
    if (lu.rank() != 3) throw ValidationError("projection left 3x3 block must have rank 3");
}

PoseEstimate PoseEstimate::empty(int joint_count, int instance_id) {
    PoseEstimate p;
    p.joints.assign(static_cast<size_t>(joint_count), Eigen::Vector3d::Zero());
    p.joint_confidence.assign(static_cast<size_t>(joint_count), 0.0);
    p.instance_id = instance_id;
    return p;
}

int PoseEstimate::present_count() const {
    return static_cast<int>(std::count_if(joint_confidence.begin(), joint_confidence.end(),
                                          [](double c) { return c > 0.0; }));
}

void PoseEstimate::validate() const {
    if (joints.size() != joint_confidence.size())
        throw ValidationError("joints/joint_confidence size mismatch");
    for (size_t i = 0; i < joints.size(); ++i) {
        const double c = joint_confidence[i];
        if (!(c >= 0.0 && c <= 1.0)) throw ValidationError("joint confidence outside [0,1]");
        if (c > 0.0 && !joints[i].allFinite())
            throw ValidationError("present joint has non-finite coordinates");
    }
}

BodyParams BodyParams::zero(const SkeletonTopology& topology) {
    BodyParams p;
    p.joint_rotation.assign(static_cast<size_t>(topology.joint_count), Eigen::Vector3d::Zero());
    p.bone_log_scale.assign(static_cast<size_t>(topology.joint_count - 1), 0.0);
    return p;
}

int BodyParams::dof() const {
    return 3 + 3 * static_cast<int>(joint_rotation.size()) + static_cast<int>(bone_log_scale.size());
}

Eigen::VectorXd BodyParams::flatten() const {
    Eigen::VectorXd v(dof());
    v.head<3>() = root_translation;
    for (size_t j = 0; j < joint_rotation.size(); ++j)
        v.segment<3>(3 + 3 * static_cast<Eigen::Index>(j)) = joint_rotation[j];
    const Eigen::Index off = 3 + 3 * static_cast<Eigen::Index>(joint_rotation.size());
    for (size_t b = 0; b < bone_log_scale.size(); ++b)
        v(off + static_cast<Eigen::Index>(b)) = bone_log_scale[b];
    return v;
}

BodyParams BodyParams::unflatten(const SkeletonTopology& topology, const Eigen::VectorXd& v) {
    BodyParams p = BodyParams::zero(topology);
    if (v.size() != p.dof()) throw ValidationError("flattened body params have wrong size");
    p.root_translation = v.head<3>();
    for (int j = 0; j < topology.joint_count; ++j)
        p.joint_rotation[static_cast<size_t>(j)] = v.segment<3>(3 + 3 * j);
    const Eigen::Index off = 3 + 3 * topology.joint_count;
    for (int b = 0; b + 1 < topology.joint_count; ++b)
        p.bone_log_scale[static_cast<size_t>(b)] = v(off + b);
    return p;
}

void BodyParams::clamp() {
    for (auto& r : joint_rotation)
        r = r.cwiseMax(-kMaxRotationComponent).cwiseMin(kMaxRotationComponent);
    for (auto& s : bone_log_scale)
        s = std::clamp(s, -kMaxBoneLogScale, kMaxBoneLogScale);
}

}  // namespace mvpose
