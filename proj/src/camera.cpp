#include "mvpose/camera.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace mvpose {

std::optional<Eigen::Vector2d> try_project(const CameraView& camera, const Eigen::Vector3d& point) {
    const Eigen::Vector3d h = camera.projection.leftCols<3>() * point + camera.projection.col(3);
    // scale threshold is relative to the matrix so that rescaling the
    // projection leaves the outcome unchanged
    const double scale_ref = camera.projection.norm();
    if (std::abs(h.z()) < kZeroDepthEps * std::max(scale_ref, 1.0)) return std::nullopt;
    return Eigen::Vector2d(h.x() / h.z(), h.y() / h.z());
}

Eigen::Vector2d project(const CameraView& camera, const Eigen::Vector3d& point) {
    auto uv = try_project(camera, point);
    if (!uv) throw ZeroDepth("point lies on the camera's principal plane");
    return *uv;
}

bool project_with_jacobian(const CameraView& camera, const Eigen::Vector3d& point,
                           Eigen::Vector2d& uv, Eigen::Matrix<double, 2, 3>& jac) {
    const Eigen::Vector3d h = camera.projection.leftCols<3>() * point + camera.projection.col(3);
    const double scale_ref = camera.projection.norm();
    if (std::abs(h.z()) < kZeroDepthEps * std::max(scale_ref, 1.0)) return false;
    const double inv_z = 1.0 / h.z();
    uv = Eigen::Vector2d(h.x() * inv_z, h.y() * inv_z);
    // d(hx/hz)/dX = (P0 - u P2) / hz, same for v
    jac.row(0) = inv_z * (camera.projection.row(0).head<3>() - uv.x() * camera.projection.row(2).head<3>());
    jac.row(1) = inv_z * (camera.projection.row(1).head<3>() - uv.y() * camera.projection.row(2).head<3>());
    return true;
}

double point_depth(const CameraView& camera, const Eigen::Vector3d& point) {
    const double w = camera.projection.row(2).head<3>().dot(point) + camera.projection(2, 3);
    const double det = camera.projection.leftCols<3>().determinant();
    return det >= 0.0 ? w : -w;
}

CameraView make_lookat_camera(const Eigen::Vector3d& position, const Eigen::Vector3d& target,
                              double focal_px, double width, double height, int view_id) {
    Eigen::Vector3d forward = (target - position).normalized();
    Eigen::Vector3d world_up(0.0, 0.0, 1.0);
    if (std::abs(forward.dot(world_up)) > 0.999) world_up = Eigen::Vector3d(0.0, 1.0, 0.0);
    const Eigen::Vector3d right = forward.cross(world_up).normalized();
    const Eigen::Vector3d down = forward.cross(right).normalized();

    Eigen::Matrix3d rot;  // world -> camera
    rot.row(0) = right;
    rot.row(1) = down;
    rot.row(2) = forward;

    Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
    k(0, 0) = focal_px;
    k(1, 1) = focal_px;
    k(0, 2) = width / 2.0;
    k(1, 2) = height / 2.0;

    CameraView cam;
    cam.projection.leftCols<3>() = k * rot;
    cam.projection.col(3) = k * (-rot * position);
    cam.width = width;
    cam.height = height;
    cam.view_id = view_id;
    cam.validate();
    return cam;
}

}  // namespace mvpose
