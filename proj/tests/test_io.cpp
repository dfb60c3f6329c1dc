#include "mvpose/io.hpp"

#include "mvpose/skeleton.hpp"

#include <doctest.h>

#include <string>

using namespace mvpose;

namespace {

Scene sample_scene(uint64_t seed = 3) {
    SceneConfig cfg;
    cfg.person_count = 2;
    cfg.camera_count = 3;
    cfg.frame_count = 2;
    cfg.noise.pixel_sigma = 1.0;
    cfg.noise.p_miss = 0.1;
    cfg.noise.p_fp = 0.05;
    return generate_scene(cfg, seed, default_topology());
}

}  // namespace

TEST_CASE("scene files: canonical round trip") {
    const Scene scene = sample_scene();
    const std::string text = write_scene(scene);
    const Scene reparsed = parse_scene(text);
    CHECK(write_scene(reparsed) == text);
    CHECK(reparsed.cameras.size() == scene.cameras.size());
    CHECK(reparsed.has_truth);
    CHECK(reparsed.truth.frames.size() == scene.truth.frames.size());
}

TEST_CASE("scene files: out-of-range confidence is rejected with its field path") {
    const Scene scene = sample_scene();
    std::string text = write_scene(scene);
    // raise one detection confidence beyond 1
    Scene bad = scene;
    bad.frames[0].per_view[0][0].confidence = 1.5;
    bool threw = false;
    try {
        parse_scene(write_scene(bad));
    } catch (const ParseError& e) {
        threw = true;
        const std::string what = e.what();
        CHECK(what.find("detections[0][0][3]") != std::string::npos);
        CHECK(what.find("outside") != std::string::npos);
    }
    CHECK(threw);
}

TEST_CASE("scene files: rejects unknown keys, NaN, and bad view ids") {
    CHECK_THROWS_AS(parse_scene("{\"cameras\":[],\"frames\":[],\"bogus\":1}"), ParseError);
    CHECK_THROWS_AS(parse_scene("not json at all"), ParseError);
    // bare NaN is invalid JSON and must come back as a parse error
    CHECK_THROWS_AS(parse_scene("{\"cameras\":[{\"view_id\":0,\"projection\":[NaN,0,0,0,0,1,0,0,0,0,1,0],\"width\":10,\"height\":10}],\"frames\":[]}"),
                    ParseError);

    const Scene scene = sample_scene();
    std::string text = write_scene(scene);
    const auto pos = text.find("\"view_id\": 1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 13, "\"view_id\": 5");
    CHECK_THROWS_AS(parse_scene(text), ParseError);
}

TEST_CASE("scene files: truncation fuzzing errors cleanly") {
    const std::string text = write_scene(sample_scene(5));
    Rng rng(101);
    for (int trial = 0; trial < 200; ++trial) {
        const size_t cut = static_cast<size_t>(rng.uniform() * static_cast<double>(text.size()));
        try {
            parse_scene(text.substr(0, cut));
        } catch (const ParseError&) {
            continue;  // expected
        }
        // a prefix that still parses is fine as long as it parses cleanly
    }
    // byte corruption fuzzing
    for (int trial = 0; trial < 200; ++trial) {
        std::string mutated = text;
        const size_t at = static_cast<size_t>(rng.uniform() * static_cast<double>(text.size()));
        mutated[at] = static_cast<char>(rng.uniform_int(32, 126));
        try {
            parse_scene(mutated);
        } catch (const ParseError&) {
        }
    }
    CHECK(true);  // reaching here means no crash/UB
}

TEST_CASE("topology files: round trip and validation") {
    const SkeletonTopology topo = default_topology();
    const std::string text = write_topology(topo);
    const SkeletonTopology reparsed = parse_topology(text);
    CHECK(write_topology(reparsed) == text);
    CHECK(reparsed.joint_count == topo.joint_count);
    CHECK(reparsed.limbs == topo.limbs);
    CHECK(reparsed.hip_index == topo.hip_index);
    for (size_t l = 0; l < topo.limbs.size(); ++l)
        CHECK(reparsed.limb_rest_length[l] == doctest::Approx(topo.limb_rest_length[l]));

    // hip not at the root fails validation through the parser too
    std::string bad = text;
    const auto pos = bad.find("\"hip_index\": 0");
    REQUIRE(pos != std::string::npos);
    bad.replace(pos, 14, "\"hip_index\": 2");
    CHECK_THROWS_AS(parse_topology(bad), ParseError);
}

TEST_CASE("results files: round trip with missing joints and body params") {
    const SkeletonTopology topo = default_topology();
    std::vector<FrameRecord> frames(2);
    frames[0].frame = 0;
    InstanceRecord inst;
    inst.pose = PoseEstimate::empty(topo.joint_count, 3);
    inst.pose.joints[0] = {0.5, -0.25, 1.0};
    inst.pose.joint_confidence[0] = 0.75;
    inst.pose.joints[5] = {0.1, 0.2, 1.4};
    inst.pose.joint_confidence[5] = 0.001;
    inst.infilled.assign(static_cast<size_t>(topo.joint_count), 0);
    inst.infilled[5] = 1;
    inst.body = BodyParams::zero(topo);
    inst.body.root_translation = {0.5, -0.25, 1.0};
    frames[0].instances.push_back(inst);
    frames[1].frame = 1;
    frames[1].failed = true;
    frames[1].error = "synthetic failure";

    const std::string text = write_results(frames);
    const auto reparsed = parse_results(text);
    CHECK(write_results(reparsed) == text);
    REQUIRE(reparsed.size() == 2);
    CHECK(reparsed[0].instances[0].pose.has_joint(0));
    CHECK(!reparsed[0].instances[0].pose.has_joint(1));
    CHECK(reparsed[0].instances[0].infilled[5] == 1);
    CHECK(reparsed[1].failed);
}

TEST_CASE("config: defaults, overrides, and strictness") {
    const PipelineConfig defaults = parse_pipeline_config("{}");
    CHECK(defaults.proposal.cluster_radius == doctest::Approx(0.15));
    CHECK(defaults.refine.rho_2d == doctest::Approx(25.0));
    CHECK(defaults.refine.outer_iters == 10);
    CHECK(defaults.threads == 1);

    const PipelineConfig cfg = parse_pipeline_config(R"({
        "paths": {"scene": "s.json", "out_dir": "out"},
        "association": {"cluster_radius": 0.2},
        "refine": {"outer_iters": 4, "rho_2d": 30.0},
        "scene": {"person_count": 2, "noise": {"pixel_sigma": 2.0}},
        "seed": 9,
        "threads": 2
    })");
    CHECK(cfg.scene_path == "s.json");
    CHECK(cfg.proposal.cluster_radius == doctest::Approx(0.2));
    CHECK(cfg.refine.outer_iters == 4);
    CHECK(cfg.scene.noise.pixel_sigma == doctest::Approx(2.0));
    CHECK(cfg.seed == 9);

    CHECK_THROWS_AS(parse_pipeline_config("{\"refinement\": {}}"), ParseError);  // unknown section
    CHECK_THROWS_AS(parse_pipeline_config("{\"refine\": {\"rho2d\": 1}}"), ParseError);
    CHECK_THROWS_AS(parse_pipeline_config("{\"refine\": {\"rho_3d\": 2.0}}"), ParseError);
    CHECK_THROWS_AS(parse_pipeline_config("{\"threads\": 0}"), ParseError);
    CHECK_THROWS_AS(parse_pipeline_config("{\"seed\": -3}"), ParseError);

    // the reported path names the offending field
    try {
        parse_pipeline_config("{\"scene\": {\"noise\": {\"p_miss\": 1.5}}}");
        CHECK(false);
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("config.scene.noise.p_miss") != std::string::npos);
    }
}

TEST_CASE("metrics and trace writers produce the documented shapes") {
    MetricsReport r;
    r.precision = 0.5;
    r.recall = 0.25;
    r.f1 = 1.0 / 3.0;
    const std::string text = write_metrics(r, &r);
    CHECK(text.find("\"precision\"") != std::string::npos);
    CHECK(text.find("\"initial\"") != std::string::npos);
    CHECK(text.find("\"proposal_recall\"") != std::string::npos);

    std::vector<TraceRow> rows(2);
    rows[0] = {0, 1, {0, 10.0, 0.5, 10.5, 40}};
    rows[1] = {0, 1, {1, 5.0, 0.25, 5.25, 41}};
    const std::string csv = write_trace_csv(rows);
    CHECK(csv.rfind("frame,instance,n,E2D,Eshape,L,inliers\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
