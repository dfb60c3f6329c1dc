#include "mvpose/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvpose {

namespace {

constexpr double kInfeasible = 1e6;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Kuhn-Munkres with potentials on a square cost matrix (1-based inside).
// Returns, per row, the assigned column.
std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    if (n == 0) return {};
    std::vector<double> u(static_cast<size_t>(n) + 1, 0.0), v(static_cast<size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<size_t>(n) + 1, 0), way(static_cast<size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<size_t>(n) + 1, kInf);
        std::vector<bool> used(static_cast<size_t>(n) + 1, false);
        do {
            used[static_cast<size_t>(j0)] = true;
            const int i0 = p[static_cast<size_t>(j0)];
            int j1 = -1;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) continue;
                const double cur = cost[static_cast<size_t>(i0 - 1)][static_cast<size_t>(j - 1)] -
                                   u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
                if (cur < minv[static_cast<size_t>(j)]) {
                    minv[static_cast<size_t>(j)] = cur;
                    way[static_cast<size_t>(j)] = j0;
                }
                if (minv[static_cast<size_t>(j)] < delta) {
                    delta = minv[static_cast<size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) {
                    u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
                    v[static_cast<size_t>(j)] -= delta;
                } else {
                    minv[static_cast<size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<size_t>(j0)];
            p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(static_cast<size_t>(n), -1);
    for (int j = 1; j <= n; ++j)
        if (p[static_cast<size_t>(j)] >= 1) row_to_col[static_cast<size_t>(p[static_cast<size_t>(j)] - 1)] = j - 1;
    return row_to_col;
}

double mean_joint_distance(const PoseEstimate& a, const PoseEstimate& b) {
    double sum = 0.0;
    int count = 0;
    const size_t n = std::min(a.joints.size(), b.joints.size());
    for (size_t i = 0; i < n; ++i) {
        if (!(a.joint_confidence[i] > 0.0) || !(b.joint_confidence[i] > 0.0)) continue;
        sum += (a.joints[i] - b.joints[i]).norm();
        ++count;
    }
    return count > 0 ? sum / count : kInfeasible;
}

}  // namespace

std::vector<int> match_instances(const std::vector<PoseEstimate>& predictions,
                                 const std::vector<PoseEstimate>& truth) {
    const size_t np = predictions.size();
    const size_t nt = truth.size();
    const size_t s = std::max(np, nt);
    if (s == 0) return {};
    std::vector<std::vector<double>> cost(s, std::vector<double>(s, kInfeasible));
    for (size_t i = 0; i < np; ++i)
        for (size_t j = 0; j < nt; ++j) cost[i][j] = mean_joint_distance(predictions[i], truth[j]);

    const std::vector<int> row_to_col = hungarian(cost);
    std::vector<int> out(np, -1);
    for (size_t i = 0; i < np; ++i) {
        const int j = row_to_col[i];
        if (j >= 0 && j < static_cast<int>(nt) && cost[i][static_cast<size_t>(j)] < kInfeasible)
            out[i] = j;
    }
    return out;
}

MetricsAccumulator::MetricsAccumulator(const SkeletonTopology& topology, double dist_threshold,
                                       PcpVariant pcp)
    : topology_(&topology), threshold_(dist_threshold), pcp_(pcp) {
    acc_.per_joint.assign(static_cast<size_t>(topology.joint_count), PerJointStats{});
}

void MetricsAccumulator::add_frame(const std::vector<PoseEstimate>& predictions,
                                   const std::vector<PoseEstimate>& truth) {
    const int n = topology_->joint_count;
    const std::vector<int> assignment = match_instances(predictions, truth);

    std::vector<int> truth_to_pred(truth.size(), -1);
    for (size_t pi = 0; pi < predictions.size(); ++pi)
        if (assignment[pi] >= 0) truth_to_pred[static_cast<size_t>(assignment[pi])] = static_cast<int>(pi);

    for (size_t pi = 0; pi < predictions.size(); ++pi) {
        const PoseEstimate& pred = predictions[pi];
        const int ti = assignment[pi];
        for (int i = 0; i < n; ++i) {
            if (!pred.has_joint(i)) continue;
            auto& pj = acc_.per_joint[static_cast<size_t>(i)];
            bool correct = false;
            if (ti >= 0 && truth[static_cast<size_t>(ti)].has_joint(i)) {
                const double d = (pred.joints[static_cast<size_t>(i)] -
                                  truth[static_cast<size_t>(ti)].joints[static_cast<size_t>(i)])
                                     .norm();
                acc_.error_sum += d;
                ++acc_.matched_joints;
                pj.error_sum += d;
                ++pj.matched;
                correct = d < threshold_;
            }
            if (correct) {
                ++acc_.tp;
                ++pj.tp;
            } else {
                ++acc_.fp;
                ++pj.fp;
            }
        }
    }

    for (size_t ti = 0; ti < truth.size(); ++ti) {
        const PoseEstimate& gt = truth[ti];
        const int pi = truth_to_pred[ti];
        for (int i = 0; i < n; ++i) {
            if (!gt.has_joint(i)) continue;
            bool covered = false;
            if (pi >= 0 && predictions[static_cast<size_t>(pi)].has_joint(i)) {
                const double d = (predictions[static_cast<size_t>(pi)].joints[static_cast<size_t>(i)] -
                                  gt.joints[static_cast<size_t>(i)])
                                     .norm();
                covered = d < threshold_;
            }
            if (!covered) {
                ++acc_.fn;
                ++acc_.per_joint[static_cast<size_t>(i)].fn;
            }
        }

        // PCP over true limbs
        for (size_t li = 0; li < topology_->limbs.size(); ++li) {
            const auto [a, b] = topology_->limbs[li];
            if (!gt.has_joint(a) || !gt.has_joint(b)) continue;
            ++acc_.limb_total;
            if (pi < 0) continue;
            const PoseEstimate& pred = predictions[static_cast<size_t>(pi)];
            if (!pred.has_joint(a) || !pred.has_joint(b)) continue;
            const double limb_len =
                (gt.joints[static_cast<size_t>(a)] - gt.joints[static_cast<size_t>(b)]).norm();
            const double ea =
                (pred.joints[static_cast<size_t>(a)] - gt.joints[static_cast<size_t>(a)]).norm();
            const double eb =
                (pred.joints[static_cast<size_t>(b)] - gt.joints[static_cast<size_t>(b)]).norm();
            const bool ok = pcp_ == PcpVariant::Strict
                                ? (ea <= 0.5 * limb_len && eb <= 0.5 * limb_len)
                                : (0.5 * (ea + eb) <= 0.5 * limb_len);
            if (ok) ++acc_.limb_correct;
        }
    }
}

void MetricsAccumulator::add_proposal_frame(const std::vector<PoseEstimate>& proposals,
                                            const std::vector<PoseEstimate>& truth) {
    const int hip = topology_->hip_index;
    const size_t np = proposals.size();
    const size_t nt = truth.size();
    acc_.proposal_total += static_cast<long>(np);
    acc_.proposal_truth += static_cast<long>(nt);
    const size_t s = std::max(np, nt);
    if (s == 0) return;

    std::vector<std::vector<double>> cost(s, std::vector<double>(s, kInfeasible));
    for (size_t i = 0; i < np; ++i) {
        if (!proposals[i].has_joint(hip)) continue;
        for (size_t j = 0; j < nt; ++j) {
            if (!truth[j].has_joint(hip)) continue;
            const double d = (proposals[i].joints[static_cast<size_t>(hip)] -
                              truth[j].joints[static_cast<size_t>(hip)])
                                 .norm();
            if (d < threshold_) cost[i][j] = d;
        }
    }
    const std::vector<int> row_to_col = hungarian(cost);
    for (size_t i = 0; i < np; ++i) {
        const int j = row_to_col[i];
        if (j >= 0 && j < static_cast<int>(nt) && cost[i][static_cast<size_t>(j)] < kInfeasible)
            ++acc_.proposal_tp;
    }
}

MetricsReport MetricsAccumulator::report() const {
    MetricsReport r = acc_;
    const auto rate = [](long num, long den) { return den > 0 ? static_cast<double>(num) / den : 0.0; };
    r.precision = rate(r.tp, r.tp + r.fp);
    r.recall = rate(r.tp, r.tp + r.fn);
    r.f1 = (r.precision + r.recall) > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    r.pcp_05 = rate(r.limb_correct, r.limb_total);
    r.mpjpe = r.matched_joints > 0 ? r.error_sum / r.matched_joints : 0.0;
    r.proposal_precision = rate(r.proposal_tp, r.proposal_total);
    r.proposal_recall = rate(r.proposal_tp, r.proposal_truth);
    return r;
}

MetricsReport evaluate(const std::vector<std::vector<PoseEstimate>>& predictions_per_frame,
                       const SceneTruth& truth, const SkeletonTopology& topology,
                       double dist_threshold, PcpVariant pcp) {
    if (predictions_per_frame.size() != truth.frames.size())
        throw ValidationError("evaluate: prediction/truth frame counts differ");
    MetricsAccumulator acc(topology, dist_threshold, pcp);
    for (size_t f = 0; f < predictions_per_frame.size(); ++f) {
        acc.add_frame(predictions_per_frame[f], truth.frames[f].poses);
        acc.add_proposal_frame(predictions_per_frame[f], truth.frames[f].poses);
    }
    return acc.report();
}

}  // namespace mvpose
