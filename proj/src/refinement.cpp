#include "mvpose/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvpose {

void RefineConfig::validate() const {
    if (!(rho_2d >= 0.0 && rho_3d >= 0.0)) throw ValidationError("thresholds must be nonnegative");
    if (!(w_2d >= 0.0 && w_shape >= 0.0)) throw ValidationError("energy weights must be nonnegative");
    if (outer_iters < 1 || inner_iters < 1) throw ValidationError("iteration counts must be >= 1");
    if (!(step > 0.0) || !(shrink > 0.0 && shrink < 1.0) || max_backtracks < 0)
        throw ValidationError("invalid line-search parameters");
    if (!(gn_damping > 0.0)) throw ValidationError("gn_damping must be positive");
}

MatchedObservations::MatchedObservations(int joint_count, int view_count)
    : joints_(joint_count), views_(view_count),
      cells_(static_cast<size_t>(joint_count) * static_cast<size_t>(view_count)) {}

std::optional<Detection2D>& MatchedObservations::at(int joint, int view) {
    return cells_[static_cast<size_t>(joint) * static_cast<size_t>(views_) + static_cast<size_t>(view)];
}

const std::optional<Detection2D>& MatchedObservations::at(int joint, int view) const {
    return cells_[static_cast<size_t>(joint) * static_cast<size_t>(views_) + static_cast<size_t>(view)];
}

namespace {

std::vector<uint8_t> compute_inlier_mask(const PoseEstimate& pose, const MatchedObservations& matches,
                                         const std::vector<CameraView>& cameras, double rho_2d) {
    const int n = matches.joint_count();
    const int k = matches.view_count();
    std::vector<uint8_t> mask(static_cast<size_t>(n) * static_cast<size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
        if (!pose.has_joint(i)) continue;
        for (int j = 0; j < k; ++j) {
            const auto& det = matches.at(i, j);
            if (!det) continue;
            const auto uv = try_project(cameras[static_cast<size_t>(j)], pose.joints[static_cast<size_t>(i)]);
            if (!uv) continue;
            if ((*uv - det->uv).norm() < rho_2d)
                mask[static_cast<size_t>(i) * static_cast<size_t>(k) + static_cast<size_t>(j)] = 1;
        }
    }
    return mask;
}

struct MaskedEnergy {
    double value = 0.0;
    std::vector<Eigen::Vector3d> grad_x;
    int inlier_count = 0;
};

// gated prior at fixed body params: only the model joints matter
double gated_shape_value(const PoseEstimate& pose, const std::vector<Eigen::Vector3d>& model,
                         double rho_3d) {
    double value = 0.0;
    for (size_t i = 0; i < pose.joints.size(); ++i) {
        if (!(pose.joint_confidence[i] < rho_3d) || !(pose.joint_confidence[i] > 0.0)) continue;
        value += (pose.joints[i] - model[i]).squaredNorm();
    }
    return value;
}

// joint i's share of the combined energy at a candidate position
double joint_share(const Eigen::Vector3d& position, int i, double confidence,
                   const MatchedObservations& matches, const std::vector<CameraView>& cameras,
                   const std::vector<uint8_t>& mask, const std::vector<Eigen::Vector3d>& model,
                   const RefineConfig& cfg) {
    const int k = matches.view_count();
    double value = 0.0;
    for (int j = 0; j < k; ++j) {
        if (!mask[static_cast<size_t>(i) * static_cast<size_t>(k) + static_cast<size_t>(j)]) continue;
        const auto& det = matches.at(i, j);
        const auto uv = try_project(cameras[static_cast<size_t>(j)], position);
        if (!uv) continue;
        value += cfg.w_2d * det->confidence * (*uv - det->uv).squaredNorm();
    }
    if (confidence < cfg.rho_3d)
        value += cfg.w_shape * (position - model[static_cast<size_t>(i)]).squaredNorm();
    return value;
}

MaskedEnergy masked_reprojection(const PoseEstimate& pose, const MatchedObservations& matches,
                                 const std::vector<CameraView>& cameras,
                                 const std::vector<uint8_t>& mask, bool with_grad) {
    const int n = matches.joint_count();
    const int k = matches.view_count();
    MaskedEnergy e;
    if (with_grad) e.grad_x.assign(static_cast<size_t>(n), Eigen::Vector3d::Zero());
    for (int i = 0; i < n; ++i) {
        if (!pose.has_joint(i)) continue;
        for (int j = 0; j < k; ++j) {
            if (!mask[static_cast<size_t>(i) * static_cast<size_t>(k) + static_cast<size_t>(j)]) continue;
            const auto& det = matches.at(i, j);
            Eigen::Vector2d uv;
            Eigen::Matrix<double, 2, 3> jac;
            if (!project_with_jacobian(cameras[static_cast<size_t>(j)],
                                       pose.joints[static_cast<size_t>(i)], uv, jac))
                continue;
            const Eigen::Vector2d r = uv - det->uv;
            e.value += det->confidence * r.squaredNorm();
            ++e.inlier_count;
            if (with_grad)
                e.grad_x[static_cast<size_t>(i)].noalias() +=
                    2.0 * det->confidence * (jac.transpose() * r);
        }
    }
    return e;
}

}  // namespace

ReprojectionEnergy reprojection_energy(const PoseEstimate& pose, const MatchedObservations& matches,
                                       const std::vector<CameraView>& cameras, double rho_2d) {
    ReprojectionEnergy out;
    out.inlier = compute_inlier_mask(pose, matches, cameras, rho_2d);
    MaskedEnergy e = masked_reprojection(pose, matches, cameras, out.inlier, true);
    out.value = e.value;
    out.grad_x = std::move(e.grad_x);
    out.inlier_count = e.inlier_count;
    return out;
}

std::vector<MatchedObservations> match_detections(
    const std::vector<PoseEstimate>& instances,
    const std::vector<std::vector<Detection2D>>& detections_per_view,
    const std::vector<CameraView>& cameras, double rho_2d) {
    const int k = static_cast<int>(detections_per_view.size());
    const int n = instances.empty() ? 0 : static_cast<int>(instances.front().joints.size());

    std::vector<MatchedObservations> out(instances.size(), MatchedObservations(n, k));

    struct Entry {
        double residual;
        size_t instance;
        size_t detection;
    };
    for (int j = 0; j < k; ++j) {
        const auto& dets = detections_per_view[static_cast<size_t>(j)];
        // greedy by residual per part: nearest instance wins, losers take
        // the next free detection
        for (int part = 0; part < n; ++part) {
            std::vector<Entry> entries;
            for (size_t pi = 0; pi < instances.size(); ++pi) {
                if (!instances[pi].has_joint(part)) continue;
                const auto uv = try_project(cameras[static_cast<size_t>(j)],
                                            instances[pi].joints[static_cast<size_t>(part)]);
                if (!uv) continue;
                for (size_t di = 0; di < dets.size(); ++di) {
                    if (dets[di].part != part) continue;
                    const double r = (*uv - dets[di].uv).norm();
                    if (r <= rho_2d) entries.push_back({r, pi, di});
                }
            }
            std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
                if (a.residual != b.residual) return a.residual < b.residual;
                if (a.instance != b.instance) return a.instance < b.instance;
                return a.detection < b.detection;
            });
            std::vector<bool> det_used(dets.size(), false);
            std::vector<bool> inst_done(instances.size(), false);
            for (const Entry& e : entries) {
                if (det_used[e.detection] || inst_done[e.instance]) continue;
                out[e.instance].at(part, j) = dets[e.detection];
                det_used[e.detection] = true;
                inst_done[e.instance] = true;
            }
        }
    }
    return out;
}

namespace {

// Orientation-probing initialisation: the alternating scheme starts the
// body at the hip anchor, but a person facing away from the rest pose
// leaves plain descent on the wrong side of the rotation saddle. Probe a
// few yaws with a short fit and keep the best.
BodyParams initial_body_params(const PoseEstimate& x0, const SkeletonTopology& topology,
                               const RefineConfig& cfg) {
    BodyParams best = BodyParams::zero(topology);
    best.root_translation = x0.joints[static_cast<size_t>(topology.hip_index)];
    double best_energy = std::numeric_limits<double>::infinity();

    for (int q = 0; q < 4; ++q) {
        BodyParams probe = BodyParams::zero(topology);
        probe.root_translation = x0.joints[static_cast<size_t>(topology.hip_index)];
        const double yaw = q * 1.5707963267948966;
        probe.joint_rotation[static_cast<size_t>(topology.root())] = Eigen::Vector3d(0, 0, yaw);
        DampedGaussNewtonRule probe_rule(topology, cfg.gn_damping);
        BodyParams fitted = fit_body(x0, probe, probe_rule, 5, topology);
        const ShapeEnergy se =
            shape_energy(x0, fitted, topology, 0.0, ShapeMode::ConfidenceWeighted);
        if (se.value < best_energy) {
            best_energy = se.value;
            best = fitted;
        }
    }
    return best;
}

}  // namespace

RefineResult refine_instance(const PoseEstimate& x0, const MatchedObservations& matches,
                             const std::vector<CameraView>& cameras,
                             const SkeletonTopology& topology, const RefineConfig& cfg,
                             UpdateRule& rule, bool record_iterates) {
    cfg.validate();
    const int n = topology.joint_count;

    RefineResult result;
    result.pose = x0;
    result.params = BodyParams::zero(topology);
    result.infilled.assign(static_cast<size_t>(n), 0);
    if (record_iterates) result.iterates.push_back(x0);

    if (x0.present_count() < 4 || !x0.has_joint(topology.hip_index)) {
        result.insufficient_targets = true;
        return result;
    }

    PoseEstimate pose = x0;
    BodyParams params = initial_body_params(x0, topology, cfg);

    for (int outer = 0; outer < cfg.outer_iters; ++outer) {
        params = fit_body(pose, params, rule, cfg.inner_iters, topology);

        if (outer == 0) {
            // instantiate missing joints on the fitted model; they keep a
            // nominal confidence so the prior gate stays open for them
            const auto model = forward_kinematics(params, topology);
            for (int i = 0; i < n; ++i) {
                if (pose.has_joint(i)) continue;
                pose.joints[static_cast<size_t>(i)] = model[static_cast<size_t>(i)];
                pose.joint_confidence[static_cast<size_t>(i)] = kInfillConfidence;
                result.infilled[static_cast<size_t>(i)] = 1;
            }
        }

        const std::vector<Eigen::Vector3d> model = forward_kinematics(params, topology);

        // inliers are re-selected once per outer iteration and stay fixed
        // through the line search
        const std::vector<uint8_t> mask = compute_inlier_mask(pose, matches, cameras, cfg.rho_2d);

        const MaskedEnergy e2d = masked_reprojection(pose, matches, cameras, mask, true);
        const double eshape = gated_shape_value(pose, model, cfg.rho_3d);
        const double total = cfg.w_2d * e2d.value + cfg.w_shape * eshape;

        result.trace.push_back({outer, e2d.value, eshape, total, e2d.inlier_count});

        std::vector<Eigen::Vector3d> grad(static_cast<size_t>(n), Eigen::Vector3d::Zero());
        double grad_norm2 = 0.0;
        for (int i = 0; i < n; ++i) {
            Eigen::Vector3d g = cfg.w_2d * e2d.grad_x[static_cast<size_t>(i)];
            const double w = pose.joint_confidence[static_cast<size_t>(i)];
            if (pose.has_joint(i) && w < cfg.rho_3d)
                g += cfg.w_shape * 2.0 * (pose.joints[static_cast<size_t>(i)] - model[static_cast<size_t>(i)]);
            grad[static_cast<size_t>(i)] = g;
            grad_norm2 += g.squaredNorm();
        }

        // the energy is separable across joints, so each joint backtracks
        // its own step scale: pixel-stiff joints shrink far below the
        // meter-scale prior pulls without stalling them
        double accepted_total = total;
        if (grad_norm2 > 0.0) {
            PoseEstimate stepped = pose;
            for (int i = 0; i < n; ++i) {
                if (!pose.has_joint(i)) continue;
                const Eigen::Vector3d& gi = grad[static_cast<size_t>(i)];
                if (gi.squaredNorm() == 0.0) continue;
                const double conf = pose.joint_confidence[static_cast<size_t>(i)];
                const double before = joint_share(pose.joints[static_cast<size_t>(i)], i, conf,
                                                  matches, cameras, mask, model, cfg);
                double t = cfg.step;
                for (int back = 0; back <= cfg.max_backtracks; ++back, t *= cfg.shrink) {
                    const Eigen::Vector3d candidate = pose.joints[static_cast<size_t>(i)] - t * gi;
                    if (joint_share(candidate, i, conf, matches, cameras, mask, model, cfg) <= before) {
                        stepped.joints[static_cast<size_t>(i)] = candidate;
                        break;
                    }
                }
            }
            pose = std::move(stepped);
            const MaskedEnergy ae2d = masked_reprojection(pose, matches, cameras, mask, false);
            accepted_total =
                cfg.w_2d * ae2d.value + cfg.w_shape * gated_shape_value(pose, model, cfg.rho_3d);
        }
        result.post_step_totals.push_back(accepted_total);

        if (record_iterates) result.iterates.push_back(pose);
    }

    {
        const std::vector<Eigen::Vector3d> model = forward_kinematics(params, topology);
        const std::vector<uint8_t> mask = compute_inlier_mask(pose, matches, cameras, cfg.rho_2d);
        const MaskedEnergy e2d = masked_reprojection(pose, matches, cameras, mask, false);
        const double eshape = gated_shape_value(pose, model, cfg.rho_3d);
        result.trace.push_back({cfg.outer_iters, e2d.value, eshape,
                                cfg.w_2d * e2d.value + cfg.w_shape * eshape, e2d.inlier_count});
    }

    result.pose = std::move(pose);
    result.params = std::move(params);
    return result;
}

}  // namespace mvpose
