#include "mvpose/triangulation.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace mvpose {

namespace {
constexpr double kDegenerateGapRel = 1e-9;
}

PairResult triangulate_pair(const Detection2D& a, const Detection2D& b,
                            const CameraView& cam_a, const CameraView& cam_b) {
    if (a.part != b.part) throw ValidationError("triangulate_pair: part labels differ");
    if (a.view_id == b.view_id) throw ValidationError("triangulate_pair: detections share a view");

    Eigen::Matrix4d sys;
    sys.row(0) = a.uv.x() * cam_a.projection.row(2) - cam_a.projection.row(0);
    sys.row(1) = a.uv.y() * cam_a.projection.row(2) - cam_a.projection.row(1);
    sys.row(2) = b.uv.x() * cam_b.projection.row(2) - cam_b.projection.row(0);
    sys.row(3) = b.uv.y() * cam_b.projection.row(2) - cam_b.projection.row(1);

    Eigen::JacobiSVD<Eigen::Matrix4d> svd(sys, Eigen::ComputeFullV);
    const Eigen::Vector4d& sv = svd.singularValues();

    PairResult result;
    // near-equal two smallest singular values: the nullspace direction is
    // not unique, rays are close to parallel
    const double gap_ref = std::max(sv(2), 1e-300);
    if ((sv(2) - sv(3)) < kDegenerateGapRel * gap_ref) {
        result.rejection = PairRejection::DegenerateRays;
        return result;
    }

    Eigen::Vector4d y = svd.matrixV().col(3);
    if (std::abs(y(3)) < 1e-12 * y.norm()) {
        // point at infinity behaves like parallel rays
        result.rejection = PairRejection::DegenerateRays;
        return result;
    }
    const Eigen::Vector3d point = y.head<3>() / y(3);
    if (!point.allFinite()) {
        result.rejection = PairRejection::DegenerateRays;
        return result;
    }

    if (point_depth(cam_a, point) <= 0.0 || point_depth(cam_b, point) <= 0.0) {
        result.rejection = PairRejection::CheiralityViolation;
        return result;
    }

    Candidate3D cand;
    cand.part = a.part;
    cand.position = point;
    cand.confidence = 0.5 * (a.confidence + b.confidence);
    cand.sources = {std::make_pair(a.view_id, 0), std::make_pair(b.view_id, 0)};
    result.candidate = cand;
    return result;
}

std::vector<std::vector<Candidate3D>> generate_candidates(
    const std::vector<std::vector<Detection2D>>& detections_per_view,
    const std::vector<CameraView>& cameras, int joint_count,
    TriangulationDiagnostics* diagnostics) {
    std::vector<std::vector<Candidate3D>> sets(static_cast<size_t>(joint_count));
    TriangulationDiagnostics local;

    const size_t num_views = detections_per_view.size();
    for (size_t va = 0; va < num_views; ++va) {
        for (size_t vb = va + 1; vb < num_views; ++vb) {
            const auto& list_a = detections_per_view[va];
            const auto& list_b = detections_per_view[vb];
            for (size_t ia = 0; ia < list_a.size(); ++ia) {
                for (size_t ib = 0; ib < list_b.size(); ++ib) {
                    const Detection2D& da = list_a[ia];
                    const Detection2D& db = list_b[ib];
                    if (da.part != db.part) continue;
                    if (da.part < 0 || da.part >= joint_count)
                        throw ValidationError("detection part out of range");
                    PairResult r = triangulate_pair(da, db, cameras[va], cameras[vb]);
                    if (r) {
                        r.candidate->sources = {
                            std::make_pair(static_cast<int>(va), static_cast<int>(ia)),
                            std::make_pair(static_cast<int>(vb), static_cast<int>(ib))};
                        sets[static_cast<size_t>(da.part)].push_back(*r.candidate);
                        ++local.accepted;
                    } else if (r.rejection == PairRejection::DegenerateRays) {
                        ++local.rejected_degenerate;
                    } else {
                        ++local.rejected_cheirality;
                    }
                }
            }
        }
    }

    if (diagnostics) *diagnostics = local;
    return sets;
}

}  // namespace mvpose
