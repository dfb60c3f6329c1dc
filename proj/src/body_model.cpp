#include "mvpose/body_model.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>

namespace mvpose {

namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
    Eigen::Matrix3d m;
    m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return m;
}

Eigen::Matrix3d rotation_from_axis_angle(const Eigen::Vector3d& aa) {
    const double angle = aa.norm();
    if (angle < 1e-12) return Eigen::Matrix3d::Identity() + skew(aa);
    return Eigen::AngleAxisd(angle, aa / angle).toRotationMatrix();
}

// dR/d(aa_k) for R = exp([aa]x); exact for nonzero angles, first-order
// generator at the origin (Gallego & Yezzi form)
Eigen::Matrix3d rotation_derivative(const Eigen::Vector3d& aa, const Eigen::Matrix3d& rot, int k) {
    const double a2 = aa.squaredNorm();
    Eigen::Vector3d e = Eigen::Vector3d::Zero();
    e(k) = 1.0;
    if (a2 < 1e-14) return skew(e);
    const Eigen::Vector3d v = aa.cross((Eigen::Matrix3d::Identity() - rot) * e);
    return (aa(k) * skew(aa) + skew(v)) * rot / a2;
}

struct FkCache {
    std::vector<Eigen::Vector3d> joints;
    std::vector<Eigen::Matrix3d> local;       // per joint
    std::vector<Eigen::Matrix3d> accumulated; // root..joint product
    std::vector<int> order;                   // parents before children
};

FkCache fk_evaluate(const BodyParams& params, const SkeletonTopology& topology) {
    const int n = topology.joint_count;
    FkCache cache;
    cache.joints.resize(static_cast<size_t>(n));
    cache.local.resize(static_cast<size_t>(n));
    cache.accumulated.resize(static_cast<size_t>(n));
    cache.order.reserve(static_cast<size_t>(n));

    std::vector<bool> done(static_cast<size_t>(n), false);
    for (int remaining = n; remaining > 0;) {
        const int before = remaining;
        for (int j = 0; j < n; ++j) {
            if (done[static_cast<size_t>(j)]) continue;
            const int p = topology.parent[static_cast<size_t>(j)];
            if (p >= 0 && !done[static_cast<size_t>(p)]) continue;

            cache.local[static_cast<size_t>(j)] =
                rotation_from_axis_angle(params.joint_rotation[static_cast<size_t>(j)]);
            if (p < 0) {
                cache.joints[static_cast<size_t>(j)] = params.root_translation;
                cache.accumulated[static_cast<size_t>(j)] = cache.local[static_cast<size_t>(j)];
            } else {
                const double scale = std::exp(params.bone_log_scale[static_cast<size_t>(topology.bone_index(j))]);
                cache.joints[static_cast<size_t>(j)] =
                    cache.joints[static_cast<size_t>(p)] +
                    cache.accumulated[static_cast<size_t>(p)] * (scale * topology.rest_offset[static_cast<size_t>(j)]);
                cache.accumulated[static_cast<size_t>(j)] =
                    cache.accumulated[static_cast<size_t>(p)] * cache.local[static_cast<size_t>(j)];
            }
            cache.order.push_back(j);
            done[static_cast<size_t>(j)] = true;
            --remaining;
        }
        if (remaining == before) throw ValidationError("topology parent array contains a cycle");
    }
    return cache;
}

}  // namespace

std::vector<Eigen::Vector3d> forward_kinematics(const BodyParams& params,
                                                const SkeletonTopology& topology) {
    return fk_evaluate(params, topology).joints;
}

Eigen::MatrixXd forward_kinematics_jacobian(const BodyParams& params,
                                            const SkeletonTopology& topology,
                                            std::vector<Eigen::Vector3d>* joints_out) {
    const int n = topology.joint_count;
    const int root = topology.root();
    const FkCache cache = fk_evaluate(params, topology);
    if (joints_out) *joints_out = cache.joints;

    const int dof = 3 + 3 * n + (n - 1);
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(3 * n, dof);

    for (int j = 0; j < n; ++j) {
        jac.block<3, 3>(3 * j, 0).setIdentity();  // root translation

        // walk up the ancestor chain; each ancestor's rotation and each
        // chain edge's scale contribute
        int child = j;
        int anc = topology.parent[static_cast<size_t>(j)];
        while (child != root) {
            // edge (anc -> child): log-scale column
            const double scale = std::exp(params.bone_log_scale[static_cast<size_t>(topology.bone_index(child))]);
            const Eigen::Vector3d d_scale =
                cache.accumulated[static_cast<size_t>(anc)] *
                (scale * topology.rest_offset[static_cast<size_t>(child)]);
            jac.block<3, 1>(3 * j, 3 + 3 * n + topology.bone_index(child)) = d_scale;
            child = anc;
            anc = topology.parent[static_cast<size_t>(child)];
        }

        // rotation columns for every ancestor a (including the root and
        // excluding j itself): X_j = X_a + R_pre(a) R_a u, u fixed
        for (int a = j;;) {
            a = topology.parent[static_cast<size_t>(a)];
            if (a < 0) break;
            const Eigen::Vector3d u =
                cache.accumulated[static_cast<size_t>(a)].transpose() *
                (cache.joints[static_cast<size_t>(j)] - cache.joints[static_cast<size_t>(a)]);
            Eigen::Matrix3d pre = Eigen::Matrix3d::Identity();
            const int ap = topology.parent[static_cast<size_t>(a)];
            if (ap >= 0) pre = cache.accumulated[static_cast<size_t>(ap)];
            for (int k = 0; k < 3; ++k) {
                const Eigen::Matrix3d dr =
                    rotation_derivative(params.joint_rotation[static_cast<size_t>(a)],
                                        cache.local[static_cast<size_t>(a)], k);
                jac.block<3, 1>(3 * j, 3 + 3 * a + k) = pre * dr * u;
            }
        }
    }
    return jac;
}

ShapeEnergy shape_energy(const PoseEstimate& pose, const BodyParams& params,
                         const SkeletonTopology& topology, double rho_3d, ShapeMode mode) {
    const int n = topology.joint_count;
    std::vector<Eigen::Vector3d> model;
    const Eigen::MatrixXd jac = forward_kinematics_jacobian(params, topology, &model);

    ShapeEnergy e;
    e.grad_x.assign(static_cast<size_t>(n), Eigen::Vector3d::Zero());
    e.grad_params = Eigen::VectorXd::Zero(jac.cols());

    for (int i = 0; i < n; ++i) {
        const double w = pose.joint_confidence[static_cast<size_t>(i)];
        double weight = 0.0;
        if (mode == ShapeMode::Gated) {
            weight = w < rho_3d ? 1.0 : 0.0;
        } else {
            weight = w;
        }
        if (weight == 0.0 || !pose.has_joint(i)) continue;  // no position, nothing to pull

        const Eigen::Vector3d r = pose.joints[static_cast<size_t>(i)] - model[static_cast<size_t>(i)];
        e.value += weight * r.squaredNorm();
        e.grad_x[static_cast<size_t>(i)] = 2.0 * weight * r;
        e.grad_params.noalias() -= 2.0 * weight * (jac.middleRows<3>(3 * i).transpose() * r);
    }
    return e;
}

DampedGaussNewtonRule::DampedGaussNewtonRule(const SkeletonTopology& topology, double damping)
    : topology_(&topology), damping_(damping) {}

Eigen::VectorXd DampedGaussNewtonRule::propose(const Eigen::VectorXd& /*gradient*/,
                                               const BodyParams& params,
                                               const PoseEstimate& target) {
    std::vector<Eigen::Vector3d> model;
    const Eigen::MatrixXd jac = forward_kinematics_jacobian(params, *topology_, &model);
    const int n = topology_->joint_count;
    const int dof = static_cast<int>(jac.cols());

    // weighted normal equations over present joints
    Eigen::MatrixXd jtj = Eigen::MatrixXd::Zero(dof, dof);
    Eigen::VectorXd jtr = Eigen::VectorXd::Zero(dof);
    for (int i = 0; i < n; ++i) {
        const double w = target.joint_confidence[static_cast<size_t>(i)];
        if (w <= 0.0) continue;
        const Eigen::Vector3d r = model[static_cast<size_t>(i)] - target.joints[static_cast<size_t>(i)];
        const auto ji = jac.middleRows<3>(3 * i);
        jtj.noalias() += w * (ji.transpose() * ji);
        jtr.noalias() += w * (ji.transpose() * r);
    }
    jtj.diagonal().array() += damping_;

    Eigen::VectorXd step = jtj.ldlt().solve(-jtr);

    // return an increment whose application stays inside the clamps
    BodyParams candidate = BodyParams::unflatten(*topology_, params.flatten() + step);
    candidate.clamp();
    return candidate.flatten() - params.flatten();
}

void DampedGaussNewtonRule::on_accept() { damping_ = std::max(damping_ / 3.0, 1e-9); }

void DampedGaussNewtonRule::on_reject() { damping_ = std::min(damping_ * 10.0, 1e9); }

namespace {

double weighted_shape_value(const PoseEstimate& target, const BodyParams& params,
                            const SkeletonTopology& topology) {
    const auto model = forward_kinematics(params, topology);
    double value = 0.0;
    for (int i = 0; i < topology.joint_count; ++i) {
        const double w = target.joint_confidence[static_cast<size_t>(i)];
        if (w <= 0.0) continue;
        value += w * (model[static_cast<size_t>(i)] - target.joints[static_cast<size_t>(i)]).squaredNorm();
    }
    return value;
}

}  // namespace

BodyParams fit_body(const PoseEstimate& target, const BodyParams& init, UpdateRule& rule,
                    int iterations, const SkeletonTopology& topology) {
    if (iterations < 1) throw ValidationError("fit_body needs at least one iteration");
    if (target.present_count() < 4 || !target.has_joint(topology.hip_index))
        throw InsufficientTargets("fit target needs >= 4 present joints including the hip");

    BodyParams params = init;
    params.clamp();
    double energy = weighted_shape_value(target, params, topology);

    for (int m = 0; m < iterations; ++m) {
        const ShapeEnergy se = shape_energy(target, params, topology, 0.0, ShapeMode::ConfidenceWeighted);
        const Eigen::VectorXd delta = rule.propose(se.grad_params, params, target);
        if (!delta.allFinite()) {
            rule.on_reject();
            continue;
        }
        BodyParams candidate = BodyParams::unflatten(topology, params.flatten() + delta);
        candidate.clamp();
        const double cand_energy = weighted_shape_value(target, candidate, topology);
        if (cand_energy <= energy) {
            params = std::move(candidate);
            energy = cand_energy;
            rule.on_accept();
        } else {
            rule.on_reject();
        }
    }
    return params;
}

}  // namespace mvpose
