#pragma once

#include "mvpose/camera.hpp"
#include "mvpose/types.hpp"

#include <optional>

namespace mvpose {

enum class PairRejection {
    None,
    DegenerateRays,        // near-parallel rays, homogeneous solution ill-conditioned
    CheiralityViolation,   // point behind (or on) one of the cameras
};

struct PairResult {
    std::optional<Candidate3D> candidate;
    PairRejection rejection = PairRejection::None;

    explicit operator bool() const { return candidate.has_value(); }
};

/// Linear two-view triangulation of two same-part detections. Builds the
/// 4x4 homogeneous system from both projection rows and returns the
/// dehomogenized minimal right singular vector. Rejections mean "discard
/// the pair", never "abort". Throws ValidationError when the detections
/// share a view or carry different part labels.
PairResult triangulate_pair(const Detection2D& a, const Detection2D& b,
                            const CameraView& cam_a, const CameraView& cam_b);

struct TriangulationDiagnostics {
    long accepted = 0;
    long rejected_degenerate = 0;
    long rejected_cheirality = 0;
};

/// Per-part candidate sets from every cross-view pair of same-part
/// detections. detections_per_view[v] lists view v's detections; candidate
/// sources index into those lists.
std::vector<std::vector<Candidate3D>> generate_candidates(
    const std::vector<std::vector<Detection2D>>& detections_per_view,
    const std::vector<CameraView>& cameras, int joint_count,
    TriangulationDiagnostics* diagnostics = nullptr);

}  // namespace mvpose
