#include "mvpose/synth.hpp"

#include "mvpose/body_model.hpp"

#include <algorithm>
#include <cmath>

namespace mvpose {

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal(double mean, double stddev) {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return mean + stddev * r * std::cos(2.0 * 3.141592653589793 * u2);
}

int Rng::uniform_int(int lo, int hi) {
    return lo + static_cast<int>(uniform() * (hi - lo + 1));
}

void NoiseConfig::validate() const {
    if (!(pixel_sigma >= 0.0)) throw ConfigError("pixel_sigma must be nonnegative");
    if (!(p_miss >= 0.0 && p_miss <= 1.0)) throw ConfigError("p_miss outside [0,1]");
    if (!(p_fp >= 0.0 && p_fp <= 1.0)) throw ConfigError("p_fp outside [0,1]");
}

void SceneConfig::validate() const {
    if (person_count < 1) throw ConfigError("person_count must be >= 1");
    if (frame_count < 1) throw ConfigError("frame_count must be >= 1");
    if (camera_count < 2) throw ConfigError("camera_count must be >= 2");
    if (!(camera_radius > 0.0 && focal_px > 0.0)) throw ConfigError("camera geometry must be positive");
    if (!(image_width > 0.0 && image_height > 0.0)) throw ConfigError("image bounds must be positive");
    if (!(scene_radius >= 0.0 && min_separation >= 0.0)) throw ConfigError("placement values must be nonnegative");
    if (!(pose_amplitude >= 0.0)) throw ConfigError("pose_amplitude must be nonnegative");
    if (!(log_scale_range >= 0.0 && log_scale_range <= kMaxBoneLogScale))
        throw ConfigError("log_scale_range outside [0, ln 2]");
    if (placement_retries < 1) throw ConfigError("placement_retries must be >= 1");
    noise.validate();
}

namespace {

// per-joint rotation half-ranges (radians) for the default skeleton
// roles: generous at ball joints, tighter along the spine, none at leaves
double rotation_range(const SkeletonTopology& topology, int joint) {
    const int root = topology.root();
    if (joint == root) return 0.0;  // handled separately (yaw + lean)
    bool is_leaf = true;
    for (int c = 0; c < topology.joint_count; ++c)
        if (topology.parent[static_cast<size_t>(c)] == joint) is_leaf = false;
    if (is_leaf) return 0.0;

    // joints whose parent is the root or the torso joint act like hips /
    // shoulders; single-child chain joints act like elbows / knees
    int children = 0;
    for (int c = 0; c < topology.joint_count; ++c)
        if (topology.parent[static_cast<size_t>(c)] == joint) ++children;
    if (children > 1) return 0.2;   // torso / neck style joint
    const int parent = topology.parent[static_cast<size_t>(joint)];
    if (parent == root) return 0.35;  // hip-like
    int parent_children = 0;
    for (int c = 0; c < topology.joint_count; ++c)
        if (topology.parent[static_cast<size_t>(c)] == parent) ++parent_children;
    if (parent_children > 1) return 0.45;  // shoulder-like (hangs off torso)
    return 0.4;  // elbow / knee style hinge
}

BodyParams sample_body(Rng& rng, const SkeletonTopology& topology, const SceneConfig& cfg,
                       const Eigen::Vector3d& root) {
    BodyParams params = BodyParams::zero(topology);
    params.root_translation = root;
    const int root_j = topology.root();
    const double yaw = rng.uniform(-3.141592653589793, 3.141592653589793);
    const double lean_x = rng.uniform(-0.12, 0.12) * cfg.pose_amplitude;
    const double lean_y = rng.uniform(-0.12, 0.12) * cfg.pose_amplitude;
    params.joint_rotation[static_cast<size_t>(root_j)] = Eigen::Vector3d(lean_x, lean_y, yaw);

    for (int j = 0; j < topology.joint_count; ++j) {
        if (j == root_j) continue;
        const double range = rotation_range(topology, j) * cfg.pose_amplitude;
        for (int k = 0; k < 3; ++k)
            params.joint_rotation[static_cast<size_t>(j)](k) = rng.uniform(-range, range);
    }
    for (auto& s : params.bone_log_scale) s = rng.uniform(-cfg.log_scale_range, cfg.log_scale_range);
    params.clamp();
    return params;
}

}  // namespace

Scene generate_scene(const SceneConfig& cfg, uint64_t seed, const SkeletonTopology& topology) {
    cfg.validate();
    topology.validate();
    Rng rng(seed);

    Scene scene;
    scene.has_truth = true;

    const Eigen::Vector3d center(0.0, 0.0, 1.0);
    for (int v = 0; v < cfg.camera_count; ++v) {
        const double angle = 2.0 * 3.141592653589793 * v / cfg.camera_count;
        const Eigen::Vector3d pos(cfg.camera_radius * std::cos(angle),
                                  cfg.camera_radius * std::sin(angle), cfg.camera_height);
        scene.cameras.push_back(make_lookat_camera(pos, center, cfg.focal_px, cfg.image_width,
                                                   cfg.image_height, v));
    }

    const int n = topology.joint_count;
    for (int f = 0; f < cfg.frame_count; ++f) {
        FrameTruth truth;
        FrameDetections frame;
        frame.per_view.resize(static_cast<size_t>(cfg.camera_count));

        // place roots with pairwise separation
        std::vector<Eigen::Vector3d> roots;
        for (int p = 0; p < cfg.person_count; ++p) {
            bool placed = false;
            for (int attempt = 0; attempt < cfg.placement_retries && !placed; ++attempt) {
                const double ang = rng.uniform(0.0, 2.0 * 3.141592653589793);
                const double rad = cfg.scene_radius * std::sqrt(rng.uniform());
                Eigen::Vector3d candidate(rad * std::cos(ang), rad * std::sin(ang),
                                          rng.normal(1.0, 0.03));
                placed = true;
                for (const auto& other : roots)
                    if ((candidate.head<2>() - other.head<2>()).norm() < cfg.min_separation)
                        placed = false;
                if (placed) roots.push_back(candidate);
            }
            if (!placed) throw ConfigError("could not place people with the requested separation");
        }

        // sample bodies, project, corrupt
        // detection provenance for this frame: (person, joint) per detection, (-1,-1) for FPs
        std::vector<std::vector<std::pair<int, int>>> provenance(static_cast<size_t>(cfg.camera_count));
        for (int p = 0; p < cfg.person_count; ++p) {
            const BodyParams params = sample_body(rng, topology, cfg, roots[static_cast<size_t>(p)]);
            const auto joints = forward_kinematics(params, topology);

            PoseEstimate pose = PoseEstimate::empty(n, p);
            for (int i = 0; i < n; ++i) {
                pose.joints[static_cast<size_t>(i)] = joints[static_cast<size_t>(i)];
                pose.joint_confidence[static_cast<size_t>(i)] = 1.0;
            }
            truth.poses.push_back(pose);
            truth.params.push_back(params);

            for (int v = 0; v < cfg.camera_count; ++v) {
                for (int i = 0; i < n; ++i) {
                    if (rng.uniform() < cfg.noise.p_miss) continue;
                    const auto uv = try_project(scene.cameras[static_cast<size_t>(v)],
                                                joints[static_cast<size_t>(i)]);
                    if (!uv) continue;
                    Eigen::Vector2d px = *uv;
                    if (cfg.noise.pixel_sigma > 0.0) {
                        px.x() += rng.normal(0.0, cfg.noise.pixel_sigma);
                        px.y() += rng.normal(0.0, cfg.noise.pixel_sigma);
                    }
                    if (px.x() < 0.0 || px.x() >= cfg.image_width || px.y() < 0.0 ||
                        px.y() >= cfg.image_height)
                        continue;
                    Detection2D det;
                    det.part = i;
                    det.uv = px;
                    det.confidence = std::clamp(rng.normal(0.9, 0.05), 0.0, 1.0);
                    det.view_id = v;
                    frame.per_view[static_cast<size_t>(v)].push_back(det);
                    provenance[static_cast<size_t>(v)].emplace_back(p, i);
                }
            }
        }

        // false positives, uniform over the image
        for (int v = 0; v < cfg.camera_count; ++v) {
            for (int i = 0; i < n; ++i) {
                for (int p = 0; p < cfg.person_count; ++p) {
                    if (rng.uniform() >= cfg.noise.p_fp) continue;
                    Detection2D det;
                    det.part = i;
                    det.uv = Eigen::Vector2d(rng.uniform(0.0, cfg.image_width),
                                             rng.uniform(0.0, cfg.image_height));
                    det.confidence = rng.uniform(0.1, 0.5);
                    det.view_id = v;
                    frame.per_view[static_cast<size_t>(v)].push_back(det);
                    provenance[static_cast<size_t>(v)].emplace_back(-1, -1);
                }
            }
        }

        // affinities: 1 for true same-person limb pairs, 0 otherwise
        for (int v = 0; v < cfg.camera_count; ++v) {
            const auto& dets = frame.per_view[static_cast<size_t>(v)];
            const auto& prov = provenance[static_cast<size_t>(v)];
            for (size_t li = 0; li < topology.limbs.size(); ++li) {
                const auto [pp, cp] = topology.limbs[li];
                for (size_t a = 0; a < dets.size(); ++a) {
                    if (dets[a].part != pp) continue;
                    for (size_t b = 0; b < dets.size(); ++b) {
                        if (dets[b].part != cp) continue;
                        LimbAffinity aff;
                        aff.view_id = v;
                        aff.limb = static_cast<int>(li);
                        aff.parent_detection = static_cast<int>(a);
                        aff.child_detection = static_cast<int>(b);
                        const bool same_person = prov[a].first >= 0 && prov[a].first == prov[b].first;
                        aff.score = same_person ? 1.0 : 0.0;
                        frame.affinities.push_back(aff);
                    }
                }
            }
        }

        scene.truth.frames.push_back(std::move(truth));
        scene.frames.push_back(std::move(frame));
    }
    return scene;
}

}  // namespace mvpose
