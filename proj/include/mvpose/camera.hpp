#pragma once

#include "mvpose/types.hpp"

#include <optional>

namespace mvpose {

/// Signals a projection whose homogeneous scale is (numerically) zero:
/// the point lies on the camera's principal plane.
struct ZeroDepth : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double kZeroDepthEps = 1e-12;

/// Dehomogenized pixel coordinates, or nullopt when |scale| < kZeroDepthEps.
std::optional<Eigen::Vector2d> try_project(const CameraView& camera, const Eigen::Vector3d& point);

/// Same as try_project but throws ZeroDepth instead of returning nullopt.
Eigen::Vector2d project(const CameraView& camera, const Eigen::Vector3d& point);

/// Pixel coordinates plus the 2x3 Jacobian of the projection w.r.t. the
/// point. Returns false (outputs untouched) on zero depth.
bool project_with_jacobian(const CameraView& camera, const Eigen::Vector3d& point,
                           Eigen::Vector2d& uv, Eigen::Matrix<double, 2, 3>& jac);

/// Signed depth of the point in front of the camera, invariant to the
/// overall scale (including sign) of the projection matrix.
double point_depth(const CameraView& camera, const Eigen::Vector3d& point);

/// Camera on a ring looking at a target: vision convention (x right,
/// y down, z forward), square pixels, principal point at the image center.
CameraView make_lookat_camera(const Eigen::Vector3d& position, const Eigen::Vector3d& target,
                              double focal_px, double width, double height, int view_id);

}  // namespace mvpose
