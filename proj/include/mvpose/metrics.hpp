#pragma once

#include "mvpose/synth.hpp"
#include "mvpose/types.hpp"

#include <optional>

namespace mvpose {

enum class PcpVariant {
    Strict,           // both endpoints within half the true limb length
    AverageEndpoint,  // mean endpoint error within half the true limb length
};

struct PerJointStats {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    double error_sum = 0.0;  // over matched present joints
    long matched = 0;

    double mpjpe() const { return matched > 0 ? error_sum / matched : 0.0; }
};

struct MetricsReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double pcp_05 = 0.0;
    double mpjpe = 0.0;
    double proposal_precision = 0.0;
    double proposal_recall = 0.0;
    std::vector<PerJointStats> per_joint;
    long tp = 0, fp = 0, fn = 0;
    long proposal_tp = 0, proposal_total = 0, proposal_truth = 0;
    long limb_correct = 0, limb_total = 0;
    long matched_joints = 0;
    double error_sum = 0.0;
};

/// Optimal one-to-one instance assignment by minimal mean joint distance
/// (squared-free, over joints present on both sides). Returns, per
/// prediction, the matched truth index or -1.
std::vector<int> match_instances(const std::vector<PoseEstimate>& predictions,
                                 const std::vector<PoseEstimate>& truth);

/// Accumulates joint/limb/proposal counts frame by frame; proposals may
/// come from a different stage than the scored predictions.
class MetricsAccumulator {
public:
    MetricsAccumulator(const SkeletonTopology& topology, double dist_threshold = 0.2,
                       PcpVariant pcp = PcpVariant::Strict);

    void add_frame(const std::vector<PoseEstimate>& predictions,
                   const std::vector<PoseEstimate>& truth);
    void add_proposal_frame(const std::vector<PoseEstimate>& proposals,
                            const std::vector<PoseEstimate>& truth);

    MetricsReport report() const;

private:
    const SkeletonTopology* topology_;
    double threshold_;
    PcpVariant pcp_;
    MetricsReport acc_;
};

/// One-shot scoring of a prediction batch against the scene truth; the
/// same poses also feed the hip-based proposal metrics.
MetricsReport evaluate(const std::vector<std::vector<PoseEstimate>>& predictions_per_frame,
                       const SceneTruth& truth, const SkeletonTopology& topology,
                       double dist_threshold = 0.2, PcpVariant pcp = PcpVariant::Strict);

}  // namespace mvpose
