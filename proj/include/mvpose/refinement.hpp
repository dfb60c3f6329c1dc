#pragma once

#include "mvpose/body_model.hpp"
#include "mvpose/camera.hpp"
#include "mvpose/types.hpp"

#include <optional>

namespace mvpose {

struct RefineConfig {
    double rho_2d = 25.0;    // px inlier radius on the reprojection residual
    double rho_3d = 0.25;    // confidence gate for the body prior
    double w_2d = 1.0;
    double w_shape = 1.0;
    int outer_iters = 10;
    int inner_iters = 30;
    double step = 0.1;       // initial gradient step for the pose update
    double shrink = 0.5;     // line-search backtracking factor
    int max_backtracks = 20;
    double gn_damping = 1e-3;

    void validate() const;
};

/// Per-instance (joint, view) grid of matched 2D observations; at most
/// one per cell.
class MatchedObservations {
public:
    MatchedObservations() = default;
    MatchedObservations(int joint_count, int view_count);

    std::optional<Detection2D>& at(int joint, int view);
    const std::optional<Detection2D>& at(int joint, int view) const;
    int joint_count() const { return joints_; }
    int view_count() const { return views_; }

private:
    int joints_ = 0;
    int views_ = 0;
    std::vector<std::optional<Detection2D>> cells_;
};

struct ReprojectionEnergy {
    double value = 0.0;
    std::vector<Eigen::Vector3d> grad_x;
    std::vector<uint8_t> inlier;  // joint-major (joint * views + view)
    int inlier_count = 0;
};

/// Confidence-weighted squared reprojection error over inlier matches.
/// A (joint, view) term counts only while the current projection stays
/// within rho_2d pixels of its matched detection.
ReprojectionEnergy reprojection_energy(const PoseEstimate& pose,
                                       const MatchedObservations& matches,
                                       const std::vector<CameraView>& cameras, double rho_2d);

/// Greedy nearest-residual assignment of detections to instance joints,
/// per part and view; a detection serves at most one instance.
std::vector<MatchedObservations> match_detections(
    const std::vector<PoseEstimate>& instances,
    const std::vector<std::vector<Detection2D>>& detections_per_view,
    const std::vector<CameraView>& cameras, double rho_2d);

struct TraceRecord {
    int iteration = 0;
    double e_2d = 0.0;
    double e_shape = 0.0;
    double total = 0.0;
    int inliers = 0;
};

struct RefineResult {
    PoseEstimate pose;
    BodyParams params;
    std::vector<uint8_t> infilled;       // per joint
    bool insufficient_targets = false;
    std::vector<TraceRecord> trace;
    // L after each iteration's pose step, at that iteration's body params
    // and inlier mask; pairs with trace[n].total for the descent check
    std::vector<double> post_step_totals;
    std::vector<PoseEstimate> iterates;  // filled when record_iterates is set
};

/// Nominal confidence carried by joints the refiner instantiated from the
/// body model (present joints must have positive confidence).
inline constexpr double kInfillConfidence = 1e-3;

/// Alternating refinement: fit the body to the current pose, then take a
/// line-searched gradient step on the combined reprojection + prior
/// energy. Joints missing from x0 are instantiated from the fitted model
/// and stay gated to it. Returns x0 untouched (flagged) when the body fit
/// has too few targets.
RefineResult refine_instance(const PoseEstimate& x0, const MatchedObservations& matches,
                             const std::vector<CameraView>& cameras,
                             const SkeletonTopology& topology, const RefineConfig& cfg,
                             UpdateRule& rule, bool record_iterates = false);

}  // namespace mvpose
