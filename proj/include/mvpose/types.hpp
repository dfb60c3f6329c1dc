#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mvpose {

using Mat34 = Eigen::Matrix<double, 3, 4>;

/// Thrown when a value object fails its invariants.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Kinematic tree shared by the whole pipeline. Joint 0..N-1, one root,
/// rest offsets are child-relative in meters.
struct SkeletonTopology {
    int joint_count = 0;
    std::vector<int> parent;                    // -1 marks the root
    std::vector<Eigen::Vector3d> rest_offset;   // offset from parent, root entry ignored
    std::vector<std::pair<int, int>> limbs;     // (parent_joint, child_joint)
    int hip_index = 0;
    std::vector<double> limb_rest_length;       // meters, one per limb
    std::vector<std::string> joint_names;       // optional, may be empty

    int root() const;
    int bone_index(int joint) const;            // dense index over non-root joints

    /// Joint positions of the rest pose (root at the origin).
    std::vector<Eigen::Vector3d> rest_positions() const;

    /// Throws ValidationError unless the tree is well formed.
    void validate() const;
};

/// One calibrated view: a 3x4 projection from homogeneous world meters to
/// homogeneous pixels, plus image bounds.
struct CameraView {
    Mat34 projection = Mat34::Zero();
    double width = 0.0;
    double height = 0.0;
    int view_id = 0;

    void validate() const;
};

/// A single 2D joint observation in one view.
struct Detection2D {
    int part = 0;
    Eigen::Vector2d uv = Eigen::Vector2d::Zero();
    double confidence = 0.0;
    int view_id = 0;
};

/// Scalar limb-connectivity score between two detections of one view.
/// Stands in for image-space limb features; score 1 means "same person".
struct LimbAffinity {
    int view_id = 0;
    int limb = 0;
    int parent_detection = 0;
    int child_detection = 0;
    double score = 0.0;
};

/// Per-instance array of optional 3D joints. A joint is present iff its
/// confidence is positive; positions of missing joints are meaningless.
struct PoseEstimate {
    std::vector<Eigen::Vector3d> joints;
    std::vector<double> joint_confidence;
    int instance_id = 0;

    static PoseEstimate empty(int joint_count, int instance_id = 0);

    bool has_joint(int i) const { return joint_confidence[static_cast<size_t>(i)] > 0.0; }
    int present_count() const;

    void validate() const;
};

/// Triangulated 3D joint hypothesis. sources holds the two (view_id,
/// detection index) observations it came from; views are distinct.
struct Candidate3D {
    int part = 0;
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    double confidence = 0.0;
    std::array<std::pair<int, int>, 2> sources{};
};

/// Kinematic-model parameters: root transform, per-joint axis-angle
/// rotations (root entry is the global rotation) and per-bone log scales.
struct BodyParams {
    Eigen::Vector3d root_translation = Eigen::Vector3d::Zero();
    std::vector<Eigen::Vector3d> joint_rotation;  // N entries
    std::vector<double> bone_log_scale;           // N-1 entries

    static BodyParams zero(const SkeletonTopology& topology);

    int dof() const;
    Eigen::VectorXd flatten() const;
    static BodyParams unflatten(const SkeletonTopology& topology, const Eigen::VectorXd& v);

    /// Component clamp: |log scale| <= ln 2, |rotation component| <= pi.
    void clamp();
};

inline constexpr double kMaxBoneLogScale = 0.6931471805599453;  // ln 2
inline constexpr double kMaxRotationComponent = 3.141592653589793;

}  // namespace mvpose
