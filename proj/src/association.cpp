#include "mvpose/association.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

namespace mvpose {

namespace {

constexpr int kMinClusterSize = 3;

std::tuple<int, int, int, int> source_key(const Candidate3D& c) {
    return {c.sources[0].first, c.sources[0].second, c.sources[1].first, c.sources[1].second};
}

bool seed_before(const Candidate3D& a, const Candidate3D& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return source_key(a) < source_key(b);
}

}  // namespace

void ProposalConfig::validate() const {
    if (!(cluster_radius > 0.0)) throw ValidationError("cluster_radius must be positive");
    if (!(box_x > 0.0 && box_y > 0.0 && box_below > 0.0 && box_above > 0.0))
        throw ValidationError("proposal box dimensions must be positive");
    if (!(min_coverage >= 0.0 && min_coverage <= 1.0))
        throw ValidationError("min_coverage outside [0,1]");
    if (!(min_mean_confidence >= 0.0 && min_mean_confidence <= 1.0))
        throw ValidationError("min_mean_confidence outside [0,1]");
    if (!(affinity_min >= 0.0 && affinity_min <= 1.0))
        throw ValidationError("affinity_min outside [0,1]");
    if (!(limb_length_min > 0.0 && limb_length_max > limb_length_min))
        throw ValidationError("limb length bounds must satisfy 0 < min < max");
}

std::vector<JointCluster> cluster_part(std::vector<Candidate3D> candidates, double rho) {
    if (!(rho > 0.0)) throw ValidationError("cluster radius must be positive");
    std::vector<JointCluster> clusters;
    std::vector<bool> taken(candidates.size(), false);
    size_t remaining = candidates.size();

    while (remaining > 0) {
        size_t seed = candidates.size();
        for (size_t i = 0; i < candidates.size(); ++i) {
            if (taken[i]) continue;
            if (seed == candidates.size() || seed_before(candidates[i], candidates[seed])) seed = i;
        }
        const Eigen::Vector3d seed_pos = candidates[seed].position;

        JointCluster cluster;
        cluster.part = candidates[seed].part;
        for (size_t i = 0; i < candidates.size(); ++i) {
            if (taken[i]) continue;
            if ((candidates[i].position - seed_pos).norm() <= rho) {
                cluster.members.push_back(candidates[i]);
                taken[i] = true;
                --remaining;
            }
        }
        if (cluster.size() >= kMinClusterSize) {
            Eigen::Vector3d sum = Eigen::Vector3d::Zero();
            double conf = 0.0;
            for (const auto& m : cluster.members) {
                sum += m.position;
                conf += m.confidence;
            }
            cluster.center = sum / cluster.size();
            cluster.confidence = conf / cluster.size();
            clusters.push_back(std::move(cluster));
        }
    }
    return clusters;
}

std::vector<InstanceProposal> generate_proposals(
    const std::vector<std::vector<JointCluster>>& clusters_per_part,
    const SkeletonTopology& topology, const ProposalConfig& cfg) {
    cfg.validate();
    const int n = topology.joint_count;
    if (static_cast<int>(clusters_per_part.size()) != n)
        throw ValidationError("clusters_per_part size must equal joint_count");

    // tentative proposal per hip cluster
    std::vector<InstanceProposal> proposals;
    std::vector<int> anchor_support;  // hip cluster size per proposal
    for (const JointCluster& hip : clusters_per_part[static_cast<size_t>(topology.hip_index)]) {
        InstanceProposal p;
        p.anchor = hip.center;
        p.box_min = p.anchor - Eigen::Vector3d(cfg.box_x / 2.0, cfg.box_y / 2.0, cfg.box_below);
        p.box_max = p.anchor + Eigen::Vector3d(cfg.box_x / 2.0, cfg.box_y / 2.0, cfg.box_above);
        p.member_clusters.assign(static_cast<size_t>(n), std::nullopt);
        proposals.push_back(std::move(p));
        anchor_support.push_back(hip.size());
    }

    // every cluster goes to the nearest anchor whose box contains it; each
    // proposal then keeps, per part, the best cluster it owns (pairwise
    // triangulation sprays small ghost clusters along the viewing rays, so
    // size outranks anchor distance)
    const auto assign_members = [&](std::vector<InstanceProposal>& props) {
        for (auto& p : props)
            p.member_clusters.assign(static_cast<size_t>(n), std::nullopt);
        for (int part = 0; part < n; ++part) {
            for (const JointCluster& c : clusters_per_part[static_cast<size_t>(part)]) {
                size_t owner = props.size();
                double owner_dist = std::numeric_limits<double>::infinity();
                for (size_t pi = 0; pi < props.size(); ++pi) {
                    const auto& p = props[pi];
                    const bool inside = (c.center.array() >= p.box_min.array()).all() &&
                                        (c.center.array() <= p.box_max.array()).all();
                    if (!inside) continue;
                    const double d = (c.center - p.anchor).norm();
                    if (d < owner_dist) {
                        owner_dist = d;
                        owner = pi;
                    }
                }
                if (owner == props.size()) continue;
                auto& slot = props[owner].member_clusters[static_cast<size_t>(part)];
                if (!slot || c.size() > slot->size() ||
                    (c.size() == slot->size() && owner_dist < (slot->center - props[owner].anchor).norm()))
                    slot = c;
            }
        }
    };
    const auto refresh_stats = [&](InstanceProposal& p) {
        int contained = 0;
        double conf_sum = 0.0;
        for (const auto& mc : p.member_clusters) {
            if (!mc) continue;
            ++contained;
            conf_sum += mc->confidence;
        }
        p.coverage = static_cast<double>(contained) / n;
        p.mean_confidence = contained > 0 ? conf_sum / contained : 0.0;
    };

    // coverage counts only the clusters a proposal owns, so an anchor
    // living off its neighbours' parts cannot pass; eliminating the
    // weakest anchor first hands its clusters back before the survivors
    // are judged
    while (!proposals.empty()) {
        assign_members(proposals);
        for (auto& p : proposals) refresh_stats(p);

        // among failing anchors, drop the one with the least hip evidence
        // first: thinly supported anchors are the ray-crossing artefacts
        size_t weakest = proposals.size();
        for (size_t pi = 0; pi < proposals.size(); ++pi) {
            const auto& p = proposals[pi];
            if (p.coverage > cfg.min_coverage && p.mean_confidence >= cfg.min_mean_confidence)
                continue;
            if (weakest == proposals.size()) {
                weakest = pi;
                continue;
            }
            const auto& w = proposals[weakest];
            const auto key = std::make_tuple(anchor_support[pi], p.coverage, p.mean_confidence);
            const auto wkey = std::make_tuple(anchor_support[weakest], w.coverage, w.mean_confidence);
            if (key < wkey) weakest = pi;
        }
        if (weakest == proposals.size()) break;  // everyone passes
        proposals.erase(proposals.begin() + static_cast<std::ptrdiff_t>(weakest));
        anchor_support.erase(anchor_support.begin() + static_cast<std::ptrdiff_t>(weakest));
    }
    return proposals;
}

PoseEstimate filter_cross_instance(const InstanceProposal& proposal,
                                   const std::vector<LimbAffinity>& affinities,
                                   const std::vector<CameraView>& /*cameras*/,
                                   const std::vector<std::vector<Detection2D>>& /*detections_per_view*/,
                                   const SkeletonTopology& topology, const ProposalConfig& cfg,
                                   int instance_id) {
    const int n = topology.joint_count;

    // (view, limb, parent det, child det) -> score
    std::map<std::tuple<int, int, int, int>, double> affinity_lut;
    for (const auto& a : affinities)
        affinity_lut[{a.view_id, a.limb, a.parent_detection, a.child_detection}] = a.score;

    std::vector<bool> evicted(static_cast<size_t>(n), false);
    for (size_t li = 0; li < topology.limbs.size(); ++li) {
        const auto [parent_part, child_part] = topology.limbs[li];
        const auto& pc = proposal.member_clusters[static_cast<size_t>(parent_part)];
        const auto& cc = proposal.member_clusters[static_cast<size_t>(child_part)];
        if (!pc || !cc) continue;

        double score_sum = 0.0;
        int score_count = 0;
        for (const auto& pm : pc->members) {
            for (const auto& ps : pm.sources) {
                for (const auto& cm : cc->members) {
                    for (const auto& cs : cm.sources) {
                        if (ps.first != cs.first) continue;
                        auto it = affinity_lut.find({ps.first, static_cast<int>(li), ps.second, cs.second});
                        if (it != affinity_lut.end()) {
                            score_sum += it->second;
                            ++score_count;
                        }
                    }
                }
            }
        }

        double support;
        if (score_count > 0) {
            support = score_sum / score_count;
        } else {
            const double len = (pc->center - cc->center).norm();
            const double rest = topology.limb_rest_length[li];
            support = (len >= cfg.limb_length_min * rest && len <= cfg.limb_length_max * rest) ? 1.0 : 0.0;
        }
        if (support < cfg.affinity_min) evicted[static_cast<size_t>(child_part)] = true;
    }

    PoseEstimate pose = PoseEstimate::empty(n, instance_id);
    for (int part = 0; part < n; ++part) {
        const auto& mc = proposal.member_clusters[static_cast<size_t>(part)];
        if (!mc || evicted[static_cast<size_t>(part)]) continue;
        pose.joints[static_cast<size_t>(part)] = mc->center;
        pose.joint_confidence[static_cast<size_t>(part)] = mc->confidence;
    }
    return pose;
}

}  // namespace mvpose
