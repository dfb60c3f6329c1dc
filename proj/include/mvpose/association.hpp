#pragma once

#include "mvpose/types.hpp"

#include <optional>

namespace mvpose {

/// Dense group of same-part candidates around a high-confidence seed.
struct JointCluster {
    int part = 0;
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    std::vector<Candidate3D> members;
    double confidence = 0.0;  // mean member confidence

    int size() const { return static_cast<int>(members.size()); }
};

struct ProposalConfig {
    double cluster_radius = 0.15;       // meters around the seed
    double box_x = 2.0;                 // full footprint extents, meters
    double box_y = 2.0;
    double box_below = 1.2;             // vertical reach below the anchor
    double box_above = 1.0;             // vertical reach above the anchor
    double min_coverage = 0.9;          // strict lower bound on part coverage
    double min_mean_confidence = 0.3;
    double affinity_min = 0.5;          // limb support below this evicts the child
    double limb_length_min = 0.5;       // geometric fallback bounds, x rest length
    double limb_length_max = 1.8;

    void validate() const;
};

/// Greedy confidence-ordered clustering: repeatedly seed at the highest
/// confidence remaining candidate, absorb everything within rho of the
/// seed, then drop clusters with fewer than three members. Ties on seed
/// confidence break on the lowest (view, detection) source tuple, so the
/// result does not depend on input order.
std::vector<JointCluster> cluster_part(std::vector<Candidate3D> candidates, double rho);

/// Hip-anchored instance hypothesis. member_clusters[part] is the in-box
/// cluster of that part nearest to the anchor, when any.
struct InstanceProposal {
    Eigen::Vector3d anchor = Eigen::Vector3d::Zero();
    Eigen::Vector3d box_min = Eigen::Vector3d::Zero();
    Eigen::Vector3d box_max = Eigen::Vector3d::Zero();
    std::vector<std::optional<JointCluster>> member_clusters;
    double coverage = 0.0;
    double mean_confidence = 0.0;
};

/// One proposal per hip cluster whose fixed-size box covers enough parts
/// at high enough confidence. Clusters claimed by several surviving
/// proposals go to the nearest anchor.
std::vector<InstanceProposal> generate_proposals(
    const std::vector<std::vector<JointCluster>>& clusters_per_part,
    const SkeletonTopology& topology, const ProposalConfig& cfg);

/// Drops member joints that belong to other instances, scored either by
/// limb affinities over the clusters' source detections or, where no
/// affinity links them, by a rest-length bound on the 3D limb. Returns
/// the initial pose: kept joints at cluster centers.
PoseEstimate filter_cross_instance(const InstanceProposal& proposal,
                                   const std::vector<LimbAffinity>& affinities,
                                   const std::vector<CameraView>& cameras,
                                   const std::vector<std::vector<Detection2D>>& detections_per_view,
                                   const SkeletonTopology& topology, const ProposalConfig& cfg,
                                   int instance_id = 0);

}  // namespace mvpose
