#pragma once

#include "mvpose/camera.hpp"
#include "mvpose/types.hpp"

#include <cstdint>
#include <random>

namespace mvpose {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Deterministic scalar draws on top of the standard engine; the mapping
/// to doubles is spelled out here so output never depends on the
/// standard library's distribution internals.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    double uniform();                          // [0, 1)
    double uniform(double lo, double hi);
    double normal(double mean, double stddev); // Box-Muller
    int uniform_int(int lo, int hi);           // inclusive bounds
    uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

struct NoiseConfig {
    double pixel_sigma = 0.0;
    double p_miss = 0.0;
    double p_fp = 0.0;

    void validate() const;
};

struct SceneConfig {
    int person_count = 3;
    int frame_count = 1;
    int camera_count = 5;
    double camera_radius = 4.5;
    double camera_height = 1.8;
    double focal_px = 1100.0;
    double image_width = 1920.0;
    double image_height = 1080.0;
    double scene_radius = 1.5;       // root placement disc
    double min_separation = 1.2;     // pairwise root distance, down to ~0.4 for close interaction
    double pose_amplitude = 1.0;     // scales the per-joint rotation ranges
    double log_scale_range = 0.15;
    int placement_retries = 200;
    NoiseConfig noise;

    void validate() const;
};

struct FrameTruth {
    std::vector<PoseEstimate> poses;   // all joints present, confidence 1
    std::vector<BodyParams> params;
};

struct SceneTruth {
    std::vector<FrameTruth> frames;
};

struct FrameDetections {
    std::vector<std::vector<Detection2D>> per_view;
    std::vector<LimbAffinity> affinities;
};

/// A full generated or loaded scene: calibrated cameras, per-frame
/// detections (+ affinities), and optional ground truth.
struct Scene {
    std::vector<CameraView> cameras;
    std::vector<FrameDetections> frames;
    SceneTruth truth;
    bool has_truth = false;
};

/// Seeded multi-person multi-camera scene: bodies sampled within
/// anatomical rotation ranges, cameras on a ring, detections with
/// dropout, pixel noise and uniform false positives. Same (config, seed)
/// gives bit-identical output. Throws ConfigError when people cannot be
/// placed within the retry budget.
Scene generate_scene(const SceneConfig& cfg, uint64_t seed, const SkeletonTopology& topology);

}  // namespace mvpose
