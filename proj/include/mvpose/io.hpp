#pragma once

#include "mvpose/association.hpp"
#include "mvpose/metrics.hpp"
#include "mvpose/refinement.hpp"
#include "mvpose/synth.hpp"
#include "mvpose/types.hpp"

#include <optional>
#include <string>

namespace mvpose {

/// Structured parse failure carrying the offending field path or line.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Everything the CLI needs for one run; parsed strictly (unknown keys
/// rejected, numeric ranges enforced).
struct PipelineConfig {
    std::string scene_path;
    std::string results_path;
    std::string out_dir = ".";
    std::string topology_path;  // empty selects the built-in skeleton
    ProposalConfig proposal;
    RefineConfig refine;
    SceneConfig scene;
    uint64_t seed = 0;
    int threads = 1;
    int frame_begin = -1;  // inclusive; -1 keeps all frames
    int frame_end = -1;    // inclusive
    bool write_trace = true;

    void validate() const;
};

// ---- scene files -----------------------------------------------------

Scene parse_scene(const std::string& text);
Scene load_scene(const std::string& path);
std::string write_scene(const Scene& scene);
void save_scene(const Scene& scene, const std::string& path);

// ---- topology files --------------------------------------------------

SkeletonTopology parse_topology(const std::string& text);
SkeletonTopology load_topology(const std::string& path);
std::string write_topology(const SkeletonTopology& topology);

// ---- results files ---------------------------------------------------

struct InstanceRecord {
    PoseEstimate pose;
    BodyParams body;
    std::vector<uint8_t> infilled;
    bool insufficient_targets = false;
};

struct FrameRecord {
    int frame = 0;
    bool failed = false;
    std::string error;
    std::vector<InstanceRecord> instances;
};

std::string write_results(const std::vector<FrameRecord>& frames);
std::vector<FrameRecord> parse_results(const std::string& text);

// ---- metrics / trace -------------------------------------------------

std::string write_metrics(const MetricsReport& metrics, const MetricsReport* initial = nullptr);

struct TraceRow {
    int frame = 0;
    int instance = 0;
    TraceRecord record;
};

std::string write_trace_csv(const std::vector<TraceRow>& rows);

// ---- config ----------------------------------------------------------

PipelineConfig parse_pipeline_config(const std::string& text);
PipelineConfig load_pipeline_config(const std::string& path);

// ---- helpers ---------------------------------------------------------

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace mvpose
