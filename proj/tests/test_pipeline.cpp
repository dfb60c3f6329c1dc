#include "mvpose/pipeline.hpp"

#include "mvpose/skeleton.hpp"

#include <doctest.h>

using namespace mvpose;

namespace {

PipelineConfig quick_config() {
    PipelineConfig cfg;
    cfg.refine.outer_iters = 5;
    cfg.refine.inner_iters = 15;
    return cfg;
}

std::string results_text(const PipelineOutput& out) {
    std::vector<FrameRecord> records;
    for (const auto& frame : out.frames) {
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
        }
        records.push_back(std::move(rec));
    }
    return write_results(records);
}

}  // namespace

TEST_CASE("pipeline: clean scene reconstructs everyone") {
    const SkeletonTopology topo = default_topology();
    PipelineConfig cfg = quick_config();
    cfg.scene.person_count = 3;
    cfg.scene.camera_count = 5;
    cfg.scene.frame_count = 2;
    const Scene scene = generate_scene(cfg.scene, 11, topo);

    const PipelineOutput out = run_pipeline(scene, topo, cfg);
    REQUIRE(out.metrics.has_value());
    CHECK(out.metrics->precision == doctest::Approx(1.0));
    CHECK(out.metrics->recall == doctest::Approx(1.0));
    CHECK(out.metrics->mpjpe < 1e-6);
    REQUIRE(out.initial_metrics.has_value());
    CHECK(out.initial_metrics->recall == doctest::Approx(1.0));
    for (const auto& frame : out.frames) {
        CHECK(!frame.failed);
        CHECK(frame.instances.size() == 3);
        for (const auto& inst : frame.instances) CHECK(!inst.insufficient_targets);
    }
}

TEST_CASE("pipeline: numbers do not depend on the thread count") {
    const SkeletonTopology topo = default_topology();
    PipelineConfig cfg = quick_config();
    cfg.scene.person_count = 2;
    cfg.scene.camera_count = 5;
    cfg.scene.frame_count = 4;
    cfg.scene.noise.pixel_sigma = 2.0;
    cfg.scene.noise.p_miss = 0.15;
    const Scene scene = generate_scene(cfg.scene, 31, topo);

    cfg.threads = 1;
    const std::string serial = results_text(run_pipeline(scene, topo, cfg));
    cfg.threads = 3;
    const std::string parallel = results_text(run_pipeline(scene, topo, cfg));
    CHECK(serial == parallel);
}

TEST_CASE("pipeline: zero detections yield empty results and zero metrics") {
    const SkeletonTopology topo = default_topology();
    PipelineConfig cfg = quick_config();
    cfg.scene.person_count = 1;
    cfg.scene.camera_count = 3;
    Scene scene = generate_scene(cfg.scene, 2, topo);
    for (auto& frame : scene.frames) {
        for (auto& view : frame.per_view) view.clear();
        frame.affinities.clear();
    }

    const PipelineOutput out = run_pipeline(scene, topo, cfg);
    for (const auto& frame : out.frames) {
        CHECK(!frame.failed);
        CHECK(frame.instances.empty());
    }
    REQUIRE(out.metrics.has_value());
    CHECK(out.metrics->precision == doctest::Approx(0.0));
    CHECK(out.metrics->recall == doctest::Approx(0.0));
}

TEST_CASE("pipeline: a poisoned frame fails alone") {
    const SkeletonTopology topo = default_topology();
    PipelineConfig cfg = quick_config();
    cfg.scene.person_count = 2;
    cfg.scene.camera_count = 4;
    cfg.scene.frame_count = 3;
    Scene scene = generate_scene(cfg.scene, 7, topo);
    scene.frames[1].per_view[0][0].part = 99;  // out of range for the topology

    const PipelineOutput out = run_pipeline(scene, topo, cfg);
    CHECK(!out.frames[0].failed);
    CHECK(out.frames[1].failed);
    CHECK(!out.frames[2].failed);
    CHECK(!out.frames[1].error.empty());
    CHECK(out.frames[0].instances.size() == 2);
}

TEST_CASE("pipeline: frame subrange selection") {
    const SkeletonTopology topo = default_topology();
    PipelineConfig cfg = quick_config();
    cfg.scene.person_count = 1;
    cfg.scene.camera_count = 4;
    cfg.scene.frame_count = 5;
    const Scene scene = generate_scene(cfg.scene, 3, topo);

    cfg.frame_begin = 1;
    cfg.frame_end = 3;
    const PipelineOutput out = run_pipeline(scene, topo, cfg);
    REQUIRE(out.frames.size() == 3);
    CHECK(out.frames.front().frame == 1);
    CHECK(out.frames.back().frame == 3);
}
