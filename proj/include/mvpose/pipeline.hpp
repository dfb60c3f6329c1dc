#pragma once

#include "mvpose/io.hpp"

#include <optional>

namespace mvpose {

struct FrameOutput {
    int frame = 0;
    bool failed = false;
    std::string error;
    std::vector<PoseEstimate> proposals;   // initial poses after filtering
    std::vector<RefineResult> instances;
};

struct PipelineOutput {
    std::vector<FrameOutput> frames;
    std::optional<MetricsReport> metrics;          // final estimates
    std::optional<MetricsReport> initial_metrics;  // proposals, same scoring
};

/// Runs candidates -> clustering -> proposals -> filtering -> matching ->
/// refinement for every selected frame. Frame failures are recorded and
/// skipped. Deterministic for fixed (scene, config); thread count only
/// changes the schedule, never the numbers.
PipelineOutput run_pipeline(const Scene& scene, const SkeletonTopology& topology,
                            const PipelineConfig& cfg);

/// File-level driver used by the CLI: reads the scene named in the
/// config, writes results/metrics/trace into out_dir. Returns the paths
/// written.
struct PipelineFiles {
    std::string results_path;
    std::string metrics_path;  // empty when the scene has no truth
    std::string trace_path;    // empty when trace writing is disabled
};

PipelineFiles run_pipeline_files(const PipelineConfig& cfg);

}  // namespace mvpose
