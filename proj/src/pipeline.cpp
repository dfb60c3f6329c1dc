#include "mvpose/pipeline.hpp"

#include "mvpose/skeleton.hpp"
#include "mvpose/triangulation.hpp"

#include <atomic>
#include <filesystem>
#include <thread>

namespace mvpose {

namespace {

FrameOutput process_frame(int frame_index, const Scene& scene, const SkeletonTopology& topology,
                          const PipelineConfig& cfg) {
    FrameOutput out;
    out.frame = frame_index;
    const FrameDetections& frame = scene.frames[static_cast<size_t>(frame_index)];

    for (const auto& view : frame.per_view)
        for (const auto& det : view)
            if (det.part >= topology.joint_count)
                throw ValidationError("detection part exceeds topology joint count");

    const auto candidates =
        generate_candidates(frame.per_view, scene.cameras, topology.joint_count);

    std::vector<std::vector<JointCluster>> clusters(candidates.size());
    for (size_t part = 0; part < candidates.size(); ++part)
        clusters[part] = cluster_part(candidates[part], cfg.proposal.cluster_radius);

    const auto proposals = generate_proposals(clusters, topology, cfg.proposal);

    std::vector<PoseEstimate> initial;
    for (size_t pi = 0; pi < proposals.size(); ++pi)
        initial.push_back(filter_cross_instance(proposals[pi], frame.affinities, scene.cameras,
                                                frame.per_view, topology, cfg.proposal,
                                                static_cast<int>(pi)));
    out.proposals = initial;

    const auto matches =
        match_detections(initial, frame.per_view, scene.cameras, cfg.refine.rho_2d);

    for (size_t pi = 0; pi < initial.size(); ++pi) {
        DampedGaussNewtonRule rule(topology, cfg.refine.gn_damping);
        out.instances.push_back(refine_instance(initial[pi], matches[pi], scene.cameras, topology,
                                                cfg.refine, rule));
    }
    return out;
}

}  // namespace

PipelineOutput run_pipeline(const Scene& scene, const SkeletonTopology& topology,
                            const PipelineConfig& cfg) {
    cfg.validate();
    topology.validate();

    const int total = static_cast<int>(scene.frames.size());
    int begin = cfg.frame_begin >= 0 ? cfg.frame_begin : 0;
    int end = cfg.frame_end >= 0 ? std::min(cfg.frame_end, total - 1) : total - 1;
    begin = std::min(begin, total);

    std::vector<int> selection;
    for (int f = begin; f <= end; ++f) selection.push_back(f);

    PipelineOutput out;
    out.frames.resize(selection.size());

    const int workers = std::max(1, std::min<int>(cfg.threads, static_cast<int>(selection.size())));
    std::atomic<size_t> next{0};
    auto work = [&]() {
        for (;;) {
            const size_t idx = next.fetch_add(1);
            if (idx >= selection.size()) return;
            const int f = selection[idx];
            try {
                out.frames[idx] = process_frame(f, scene, topology, cfg);
            } catch (const std::exception& e) {
                out.frames[idx] = FrameOutput{};
                out.frames[idx].frame = f;
                out.frames[idx].failed = true;
                out.frames[idx].error = e.what();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    if (scene.has_truth) {
        MetricsAccumulator final_acc(topology);
        MetricsAccumulator init_acc(topology);
        for (size_t idx = 0; idx < selection.size(); ++idx) {
            const auto& fr = out.frames[idx];
            const auto& truth = scene.truth.frames[static_cast<size_t>(fr.frame)].poses;
            std::vector<PoseEstimate> final_poses;
            for (const auto& inst : fr.instances) final_poses.push_back(inst.pose);
            final_acc.add_frame(final_poses, truth);
            final_acc.add_proposal_frame(fr.proposals, truth);
            init_acc.add_frame(fr.proposals, truth);
            init_acc.add_proposal_frame(fr.proposals, truth);
        }
        out.metrics = final_acc.report();
        out.initial_metrics = init_acc.report();
    }
    return out;
}

PipelineFiles run_pipeline_files(const PipelineConfig& cfg) {
    if (cfg.scene_path.empty()) throw ParseError("config.paths.scene: missing scene path");
    const Scene scene = load_scene(cfg.scene_path);
    const SkeletonTopology topology =
        cfg.topology_path.empty() ? default_topology() : load_topology(cfg.topology_path);

    const PipelineOutput output = run_pipeline(scene, topology, cfg);

    std::filesystem::create_directories(cfg.out_dir);
    PipelineFiles files;

    std::vector<FrameRecord> records;
    std::vector<TraceRow> trace_rows;
    for (const auto& frame : output.frames) {
        FrameRecord rec;
        rec.frame = frame.frame;
        rec.failed = frame.failed;
        rec.error = frame.error;
        for (const auto& inst : frame.instances) {
            InstanceRecord ir;
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

    files.results_path = (std::filesystem::path(cfg.out_dir) / "results.json").string();
    write_file(files.results_path, write_results(records));

    if (output.metrics) {
        files.metrics_path = (std::filesystem::path(cfg.out_dir) / "metrics.json").string();
        write_file(files.metrics_path,
                   write_metrics(*output.metrics,
                                 output.initial_metrics ? &*output.initial_metrics : nullptr));
    }
    if (cfg.write_trace) {
        files.trace_path = (std::filesystem::path(cfg.out_dir) / "trace.csv").string();
        write_file(files.trace_path, write_trace_csv(trace_rows));
    }
    return files;
}

}  // namespace mvpose
