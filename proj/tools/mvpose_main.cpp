#include "mvpose/io.hpp"
#include "mvpose/pipeline.hpp"
#include "mvpose/skeleton.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;

struct ConfigStageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InputStageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::string frames;
    long seed = -1;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "pipeline config file (JSON)")->required();
    cmd->add_option("--seed", args.seed, "override the config seed");
    cmd->add_option("--out-dir", args.out_dir, "override the output directory");
    cmd->add_option("--frames", args.frames, "frame subrange a..b (inclusive)");
    cmd->add_option("--threads", args.threads, "worker threads for frame processing");
}

mvpose::PipelineConfig load_config(const CommonArgs& args) {
    try {
        mvpose::PipelineConfig cfg = mvpose::load_pipeline_config(args.config_path);
        if (args.seed >= 0) cfg.seed = static_cast<uint64_t>(args.seed);
        if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
        if (args.threads > 0) cfg.threads = args.threads;
        if (!args.frames.empty()) {
            const auto sep = args.frames.find("..");
            if (sep == std::string::npos) throw ConfigStageError("--frames expects the form a..b");
            try {
                cfg.frame_begin = std::stoi(args.frames.substr(0, sep));
                cfg.frame_end = std::stoi(args.frames.substr(sep + 2));
            } catch (const std::exception&) {
                throw ConfigStageError("--frames expects integers a..b");
            }
            if (cfg.frame_begin < 0 || cfg.frame_end < cfg.frame_begin)
                throw ConfigStageError("--frames range must satisfy 0 <= a <= b");
        }
        return cfg;
    } catch (const ConfigStageError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigStageError(e.what());
    }
}

mvpose::Scene load_scene_checked(const std::string& path) {
    try {
        return mvpose::load_scene(path);
    } catch (const std::exception& e) {
        throw InputStageError(e.what());
    }
}

mvpose::SkeletonTopology topology_for(const mvpose::PipelineConfig& cfg) {
    if (cfg.topology_path.empty()) return mvpose::default_topology();
    try {
        return mvpose::load_topology(cfg.topology_path);
    } catch (const std::exception& e) {
        throw InputStageError(e.what());
    }
}

int run_command(const CommonArgs& args, bool trace_only) {
    mvpose::PipelineConfig cfg = load_config(args);
    if (cfg.scene_path.empty()) throw ConfigStageError("config.paths.scene: missing scene path");
    const mvpose::Scene scene = load_scene_checked(cfg.scene_path);
    const mvpose::SkeletonTopology topology = topology_for(cfg);
    if (trace_only) cfg.write_trace = true;

    const mvpose::PipelineOutput output = mvpose::run_pipeline(scene, topology, cfg);
    for (const auto& frame : output.frames)
        if (frame.failed)
            std::cerr << "frame " << frame.frame << " failed: " << frame.error << "\n";

    std::filesystem::create_directories(cfg.out_dir);
    std::vector<mvpose::FrameRecord> records;
    std::vector<mvpose::TraceRow> trace_rows;
    for (const auto& frame : output.frames) {
        mvpose::FrameRecord rec;
        rec.frame = frame.frame;
        rec.failed = frame.failed;
        rec.error = frame.error;
        for (const auto& inst : frame.instances) {
            mvpose::InstanceRecord ir;
            ir.pose = inst.pose;
            ir.body = inst.params;
            ir.infilled = inst.infilled;
            ir.insufficient_targets = inst.insufficient_targets;
            rec.instances.push_back(std::move(ir));
            for (const auto& t : inst.trace)
                trace_rows.push_back({frame.frame, inst.pose.instance_id, t});
        }
        records.push_back(std::move(rec));
    }

    const auto out_path = [&](const char* name) {
        return (std::filesystem::path(cfg.out_dir) / name).string();
    };
    if (trace_only) {
        const std::string trace_path = out_path("trace.csv");
        mvpose::write_file(trace_path, mvpose::write_trace_csv(trace_rows));
        std::cout << trace_path << "\n";
        return kExitOk;
    }

    const std::string results_path = out_path("results.json");
    mvpose::write_file(results_path, mvpose::write_results(records));
    std::cout << "results: " << results_path << "\n";
    if (output.metrics) {
        const std::string metrics_path = out_path("metrics.json");
        mvpose::write_file(metrics_path,
                           mvpose::write_metrics(*output.metrics,
                                                 output.initial_metrics ? &*output.initial_metrics
                                                                        : nullptr));
        std::cout << "metrics: " << metrics_path << "\n";
    }
    if (cfg.write_trace) {
        const std::string trace_path = out_path("trace.csv");
        mvpose::write_file(trace_path, mvpose::write_trace_csv(trace_rows));
        std::cout << "trace: " << trace_path << "\n";
    }
    return kExitOk;
}

int synth_command(const CommonArgs& args) {
    const mvpose::PipelineConfig cfg = load_config(args);
    const mvpose::SkeletonTopology topology = topology_for(cfg);
    const mvpose::Scene scene = mvpose::generate_scene(cfg.scene, cfg.seed, topology);
    std::filesystem::create_directories(cfg.out_dir);
    const std::string path = (std::filesystem::path(cfg.out_dir) / "scene.json").string();
    mvpose::save_scene(scene, path);
    std::cout << path << "\n";
    return kExitOk;
}

int eval_command(const CommonArgs& args) {
    const mvpose::PipelineConfig cfg = load_config(args);
    if (cfg.results_path.empty()) throw ConfigStageError("config.paths.results: missing");
    if (cfg.scene_path.empty()) throw ConfigStageError("config.paths.scene: missing");
    const mvpose::Scene scene = load_scene_checked(cfg.scene_path);
    if (!scene.has_truth) throw InputStageError("scene has no truth block to evaluate against");
    std::vector<mvpose::FrameRecord> records;
    try {
        records = mvpose::parse_results(mvpose::read_file(cfg.results_path));
    } catch (const std::exception& e) {
        throw InputStageError(e.what());
    }
    const mvpose::SkeletonTopology topology = topology_for(cfg);

    std::vector<std::vector<mvpose::PoseEstimate>> predictions(scene.truth.frames.size());
    for (const auto& rec : records) {
        if (rec.frame < 0 || rec.frame >= static_cast<int>(predictions.size()))
            throw InputStageError("results reference a frame outside the scene");
        for (const auto& inst : rec.instances)
            predictions[static_cast<size_t>(rec.frame)].push_back(inst.pose);
    }
    const mvpose::MetricsReport report = mvpose::evaluate(predictions, scene.truth, topology);
    std::filesystem::create_directories(cfg.out_dir);
    const std::string path = (std::filesystem::path(cfg.out_dir) / "metrics.json").string();
    mvpose::write_file(path, mvpose::write_metrics(report));
    std::cout << path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-view multi-person 3D pose reconstruction"};
    app.require_subcommand(1);

    CommonArgs run_args, synth_args, eval_args, trace_args;
    CLI::App* run = app.add_subcommand("run", "run the full pipeline on a scene file");
    add_common(run, run_args);
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic scene file");
    add_common(synth, synth_args);
    CLI::App* eval = app.add_subcommand("eval", "score a results file against scene truth");
    add_common(eval, eval_args);
    CLI::App* trace = app.add_subcommand("trace-plot", "run and emit the per-iteration energy CSV");
    add_common(trace, trace_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run->parsed()) return run_command(run_args, false);
        if (synth->parsed()) return synth_command(synth_args);
        if (eval->parsed()) return eval_command(eval_args);
        if (trace->parsed()) return run_command(trace_args, true);
    } catch (const ConfigStageError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const mvpose::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InputStageError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}
