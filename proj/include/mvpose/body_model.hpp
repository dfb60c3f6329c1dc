#pragma once

#include "mvpose/types.hpp"

#include <memory>

namespace mvpose {

/// Joint world positions from root transform, per-joint rotations and
/// per-bone log scales. A joint's rotation moves its descendants, not the
/// joint itself; the root rotation is global.
std::vector<Eigen::Vector3d> forward_kinematics(const BodyParams& params,
                                                const SkeletonTopology& topology);

/// Stacked Jacobian d(joints)/d(flattened params), 3N x dof, in the
/// flatten() order [translation, rotations, log scales]. Optionally
/// returns the joint positions of the same evaluation.
Eigen::MatrixXd forward_kinematics_jacobian(const BodyParams& params,
                                            const SkeletonTopology& topology,
                                            std::vector<Eigen::Vector3d>* joints_out = nullptr);

enum class ShapeMode {
    Gated,               // indicator on low-confidence joints
    ConfidenceWeighted,  // weight each present joint by its confidence
};

struct ShapeEnergy {
    double value = 0.0;
    std::vector<Eigen::Vector3d> grad_x;  // per joint, zero when missing or ungated
    Eigen::VectorXd grad_params;          // d value / d flattened params
};

/// Squared-distance body prior between a pose and the model's joints.
/// Gated mode counts joints whose confidence is below rho_3d (missing
/// joints are gated but only contribute once they carry a position);
/// confidence-weighted mode weighs every present joint by its confidence.
ShapeEnergy shape_energy(const PoseEstimate& pose, const BodyParams& params,
                         const SkeletonTopology& topology, double rho_3d, ShapeMode mode);

/// Raised when a fit target has too few usable joints.
struct InsufficientTargets : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Pluggable parameter-update rule: maps (shape-energy gradient, current
/// params, target pose) to a parameter increment. Implementations hold no
/// shared state; use one instance per concurrent fit.
class UpdateRule {
public:
    virtual ~UpdateRule() = default;
    virtual Eigen::VectorXd propose(const Eigen::VectorXd& gradient, const BodyParams& params,
                                    const PoseEstimate& target) = 0;
    virtual void on_accept() {}
    virtual void on_reject() {}
};

/// Default rule: Gauss-Newton step on the confidence-weighted shape
/// energy with Levenberg damping, adapted on accept/reject.
class DampedGaussNewtonRule : public UpdateRule {
public:
    explicit DampedGaussNewtonRule(const SkeletonTopology& topology, double damping = 1e-3);

    Eigen::VectorXd propose(const Eigen::VectorXd& gradient, const BodyParams& params,
                            const PoseEstimate& target) override;
    void on_accept() override;
    void on_reject() override;

    double damping() const { return damping_; }

private:
    const SkeletonTopology* topology_;
    double damping_;
};

/// Runs `iterations` update steps against the target, accepting a step
/// only when the confidence-weighted shape energy does not increase;
/// parameters stay clamped throughout. Throws InsufficientTargets when
/// the target has fewer than four present joints or its hip is missing.
BodyParams fit_body(const PoseEstimate& target, const BodyParams& init, UpdateRule& rule,
                    int iterations, const SkeletonTopology& topology);

}  // namespace mvpose
