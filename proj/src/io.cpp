#include "mvpose/io.hpp"

#include "mvpose/skeleton.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mvpose {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ParseError(path + ": " + what);
}

const json& member(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.is_object()) fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(path + "." + key, "missing required field");
    return *it;
}

void reject_unknown(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    if (!obj.is_object()) fail(path, "expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) fail(path + "." + it.key(), "unknown field");
}

double as_finite(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(path, "number must be finite");
    return v;
}

double as_range(const json& j, const std::string& path, double lo, double hi) {
    const double v = as_finite(j, path);
    if (v < lo || v > hi) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "value %g outside [%g, %g]", v, lo, hi);
        fail(path, buf);
    }
    return v;
}

long as_integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<long>();
}

Eigen::Vector3d as_vec3(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) fail(path, "expected an array of 3 numbers");
    return {as_finite(j[0], path + "[0]"), as_finite(j[1], path + "[1]"),
            as_finite(j[2], path + "[2]")};
}

json vec3_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json parse_root(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
}

}  // namespace

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
    if (!out) throw std::runtime_error("short write: " + path);
}

// ---- scene -----------------------------------------------------------

Scene parse_scene(const std::string& text) {
    const json root = parse_root(text);
    reject_unknown(root, "scene", {"cameras", "frames", "truth"});

    Scene scene;
    const json& cams = member(root, "scene", "cameras");
    if (!cams.is_array() || cams.empty()) fail("scene.cameras", "expected a non-empty array");
    for (size_t v = 0; v < cams.size(); ++v) {
        const std::string base = "scene.cameras[" + std::to_string(v) + "]";
        const json& jc = cams[v];
        reject_unknown(jc, base, {"view_id", "projection", "width", "height"});
        CameraView cam;
        cam.view_id = static_cast<int>(as_integer(member(jc, base, "view_id"), base + ".view_id"));
        if (cam.view_id != static_cast<int>(v))
            fail(base + ".view_id", "view ids must equal the camera's array position");
        const json& pj = member(jc, base, "projection");
        if (!pj.is_array() || pj.size() != 12) fail(base + ".projection", "expected 12 numbers (row-major 3x4)");
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 4; ++c)
                cam.projection(r, c) = as_finite(pj[static_cast<size_t>(4 * r + c)],
                                                 base + ".projection[" + std::to_string(4 * r + c) + "]");
        cam.width = as_range(member(jc, base, "width"), base + ".width", 1e-9, 1e9);
        cam.height = as_range(member(jc, base, "height"), base + ".height", 1e-9, 1e9);
        try {
            cam.validate();
        } catch (const ValidationError& e) {
            fail(base, e.what());
        }
        scene.cameras.push_back(cam);
    }

    const json& frames = member(root, "scene", "frames");
    if (!frames.is_array()) fail("scene.frames", "expected an array");
    for (size_t f = 0; f < frames.size(); ++f) {
        const std::string base = "scene.frames[" + std::to_string(f) + "]";
        const json& jf = frames[f];
        reject_unknown(jf, base, {"detections", "affinities"});
        FrameDetections frame;
        const json& dets = member(jf, base, "detections");
        if (!dets.is_array() || dets.size() != scene.cameras.size())
            fail(base + ".detections", "expected one detection list per camera");
        frame.per_view.resize(scene.cameras.size());
        for (size_t v = 0; v < dets.size(); ++v) {
            const json& jv = dets[v];
            const std::string vbase = base + ".detections[" + std::to_string(v) + "]";
            if (!jv.is_array()) fail(vbase, "expected an array");
            for (size_t d = 0; d < jv.size(); ++d) {
                const std::string dbase = vbase + "[" + std::to_string(d) + "]";
                const json& jd = jv[d];
                if (!jd.is_array() || jd.size() != 4)
                    fail(dbase, "expected [part, u, v, confidence]");
                Detection2D det;
                det.part = static_cast<int>(as_integer(jd[0], dbase + "[0]"));
                if (det.part < 0) fail(dbase + "[0]", "part must be nonnegative");
                det.uv.x() = as_finite(jd[1], dbase + "[1]");
                det.uv.y() = as_finite(jd[2], dbase + "[2]");
                det.confidence = as_range(jd[3], dbase + "[3]", 0.0, 1.0);
                det.view_id = static_cast<int>(v);
                frame.per_view[v].push_back(det);
            }
        }
        if (jf.contains("affinities")) {
            const json& affs = jf["affinities"];
            const std::string abase = base + ".affinities";
            if (!affs.is_array()) fail(abase, "expected an array");
            for (size_t a = 0; a < affs.size(); ++a) {
                const std::string ab = abase + "[" + std::to_string(a) + "]";
                const json& ja = affs[a];
                if (!ja.is_array() || ja.size() != 5)
                    fail(ab, "expected [view, limb, parent_detection, child_detection, score]");
                LimbAffinity aff;
                aff.view_id = static_cast<int>(as_integer(ja[0], ab + "[0]"));
                aff.limb = static_cast<int>(as_integer(ja[1], ab + "[1]"));
                aff.parent_detection = static_cast<int>(as_integer(ja[2], ab + "[2]"));
                aff.child_detection = static_cast<int>(as_integer(ja[3], ab + "[3]"));
                aff.score = as_range(ja[4], ab + "[4]", 0.0, 1.0);
                if (aff.view_id < 0 || aff.view_id >= static_cast<int>(scene.cameras.size()))
                    fail(ab + "[0]", "view index out of range");
                frame.affinities.push_back(aff);
            }
        }
        scene.frames.push_back(std::move(frame));
    }

    if (root.contains("truth")) {
        const json& jt = root["truth"];
        reject_unknown(jt, "scene.truth", {"frames"});
        const json& tframes = member(jt, "scene.truth", "frames");
        if (!tframes.is_array() || tframes.size() != scene.frames.size())
            fail("scene.truth.frames", "truth frame count must match detections");
        for (size_t f = 0; f < tframes.size(); ++f) {
            const std::string base = "scene.truth.frames[" + std::to_string(f) + "]";
            const json& jf = tframes[f];
            reject_unknown(jf, base, {"poses", "params"});
            FrameTruth truth;
            const json& poses = member(jf, base, "poses");
            if (!poses.is_array()) fail(base + ".poses", "expected an array");
            for (size_t p = 0; p < poses.size(); ++p) {
                const std::string pbase = base + ".poses[" + std::to_string(p) + "]";
                const json& jp = poses[p];
                reject_unknown(jp, pbase, {"joints", "confidence"});
                const json& joints = member(jp, pbase, "joints");
                const json& conf = member(jp, pbase, "confidence");
                if (!joints.is_array() || !conf.is_array() || joints.size() != conf.size())
                    fail(pbase, "joints/confidence must be arrays of equal length");
                PoseEstimate pose = PoseEstimate::empty(static_cast<int>(joints.size()),
                                                        static_cast<int>(p));
                for (size_t i = 0; i < joints.size(); ++i) {
                    const double c = as_range(conf[i], pbase + ".confidence[" + std::to_string(i) + "]",
                                              0.0, 1.0);
                    pose.joint_confidence[i] = c;
                    if (joints[i].is_null()) {
                        if (c > 0.0) fail(pbase + ".joints[" + std::to_string(i) + "]",
                                          "missing joint must have zero confidence");
                        continue;
                    }
                    pose.joints[i] = as_vec3(joints[i], pbase + ".joints[" + std::to_string(i) + "]");
                    if (!(c > 0.0)) fail(pbase + ".confidence[" + std::to_string(i) + "]",
                                         "present joint must have positive confidence");
                }
                truth.poses.push_back(std::move(pose));
            }
            if (jf.contains("params")) {
                const json& params = jf["params"];
                if (!params.is_array()) fail(base + ".params", "expected an array");
                for (size_t p = 0; p < params.size(); ++p) {
                    const std::string pb = base + ".params[" + std::to_string(p) + "]";
                    const json& jp = params[p];
                    reject_unknown(jp, pb, {"root_translation", "joint_rotation", "bone_log_scale"});
                    BodyParams bp;
                    bp.root_translation = as_vec3(member(jp, pb, "root_translation"),
                                                  pb + ".root_translation");
                    const json& rots = member(jp, pb, "joint_rotation");
                    if (!rots.is_array()) fail(pb + ".joint_rotation", "expected an array");
                    for (size_t r = 0; r < rots.size(); ++r)
                        bp.joint_rotation.push_back(
                            as_vec3(rots[r], pb + ".joint_rotation[" + std::to_string(r) + "]"));
                    const json& scales = member(jp, pb, "bone_log_scale");
                    if (!scales.is_array()) fail(pb + ".bone_log_scale", "expected an array");
                    for (size_t s = 0; s < scales.size(); ++s)
                        bp.bone_log_scale.push_back(as_range(
                            scales[s], pb + ".bone_log_scale[" + std::to_string(s) + "]",
                            -kMaxBoneLogScale, kMaxBoneLogScale));
                    truth.params.push_back(std::move(bp));
                }
            }
            scene.truth.frames.push_back(std::move(truth));
        }
        scene.has_truth = true;
    }
    return scene;
}

Scene load_scene(const std::string& path) { return parse_scene(read_file(path)); }

std::string write_scene(const Scene& scene) {
    json root;
    json cams = json::array();
    for (const auto& cam : scene.cameras) {
        json jc;
        jc["view_id"] = cam.view_id;
        json proj = json::array();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 4; ++c) proj.push_back(cam.projection(r, c));
        jc["projection"] = proj;
        jc["width"] = cam.width;
        jc["height"] = cam.height;
        cams.push_back(jc);
    }
    root["cameras"] = cams;

    json frames = json::array();
    for (const auto& frame : scene.frames) {
        json jf;
        json dets = json::array();
        for (const auto& view : frame.per_view) {
            json jv = json::array();
            for (const auto& d : view)
                jv.push_back(json::array({d.part, d.uv.x(), d.uv.y(), d.confidence}));
            dets.push_back(jv);
        }
        jf["detections"] = dets;
        if (!frame.affinities.empty()) {
            json affs = json::array();
            for (const auto& a : frame.affinities)
                affs.push_back(json::array(
                    {a.view_id, a.limb, a.parent_detection, a.child_detection, a.score}));
            jf["affinities"] = affs;
        }
        frames.push_back(jf);
    }
    root["frames"] = frames;

    if (scene.has_truth) {
        json tframes = json::array();
        for (const auto& truth : scene.truth.frames) {
            json jf;
            json poses = json::array();
            for (const auto& pose : truth.poses) {
                json jp;
                json joints = json::array();
                json conf = json::array();
                for (size_t i = 0; i < pose.joints.size(); ++i) {
                    conf.push_back(pose.joint_confidence[i]);
                    if (pose.joint_confidence[i] > 0.0)
                        joints.push_back(vec3_json(pose.joints[i]));
                    else
                        joints.push_back(nullptr);
                }
                jp["joints"] = joints;
                jp["confidence"] = conf;
                poses.push_back(jp);
            }
            jf["poses"] = poses;
            if (!truth.params.empty()) {
                json params = json::array();
                for (const auto& bp : truth.params) {
                    json jp;
                    jp["root_translation"] = vec3_json(bp.root_translation);
                    json rots = json::array();
                    for (const auto& r : bp.joint_rotation) rots.push_back(vec3_json(r));
                    jp["joint_rotation"] = rots;
                    jp["bone_log_scale"] = bp.bone_log_scale;
                    params.push_back(jp);
                }
                jf["params"] = params;
            }
            tframes.push_back(jf);
        }
        root["truth"] = {{"frames", tframes}};
    }
    return root.dump(1) + "\n";
}

void save_scene(const Scene& scene, const std::string& path) { write_file(path, write_scene(scene)); }

// ---- topology --------------------------------------------------------

SkeletonTopology parse_topology(const std::string& text) {
    const json root = parse_root(text);
    reject_unknown(root, "topology", {"joint_count", "names", "parent", "rest_offset", "limbs", "hip_index"});
    SkeletonTopology t;
    t.joint_count = static_cast<int>(as_integer(member(root, "topology", "joint_count"),
                                                "topology.joint_count"));
    const json& parent = member(root, "topology", "parent");
    const json& offsets = member(root, "topology", "rest_offset");
    if (!parent.is_array() || static_cast<int>(parent.size()) != t.joint_count)
        fail("topology.parent", "expected joint_count entries");
    if (!offsets.is_array() || static_cast<int>(offsets.size()) != t.joint_count)
        fail("topology.rest_offset", "expected joint_count entries");
    for (size_t j = 0; j < parent.size(); ++j) {
        t.parent.push_back(static_cast<int>(as_integer(parent[j],
                                                       "topology.parent[" + std::to_string(j) + "]")));
        t.rest_offset.push_back(as_vec3(offsets[j], "topology.rest_offset[" + std::to_string(j) + "]"));
    }
    const json& limbs = member(root, "topology", "limbs");
    if (!limbs.is_array()) fail("topology.limbs", "expected an array");
    for (size_t l = 0; l < limbs.size(); ++l) {
        const json& jl = limbs[l];
        const std::string lb = "topology.limbs[" + std::to_string(l) + "]";
        if (!jl.is_array() || jl.size() != 2) fail(lb, "expected [parent_joint, child_joint]");
        t.limbs.emplace_back(static_cast<int>(as_integer(jl[0], lb + "[0]")),
                             static_cast<int>(as_integer(jl[1], lb + "[1]")));
    }
    t.hip_index = static_cast<int>(as_integer(member(root, "topology", "hip_index"),
                                              "topology.hip_index"));
    if (root.contains("names")) {
        const json& names = root["names"];
        if (!names.is_array() || static_cast<int>(names.size()) != t.joint_count)
            fail("topology.names", "expected joint_count entries");
        for (const auto& n : names) {
            if (!n.is_string()) fail("topology.names", "expected strings");
            t.joint_names.push_back(n.get<std::string>());
        }
    }
    recompute_limb_lengths(t);
    try {
        t.validate();
    } catch (const ValidationError& e) {
        fail("topology", e.what());
    }
    return t;
}

SkeletonTopology load_topology(const std::string& path) { return parse_topology(read_file(path)); }

std::string write_topology(const SkeletonTopology& t) {
    json root;
    root["joint_count"] = t.joint_count;
    if (!t.joint_names.empty()) root["names"] = t.joint_names;
    root["parent"] = t.parent;
    json offsets = json::array();
    for (const auto& o : t.rest_offset) offsets.push_back(vec3_json(o));
    root["rest_offset"] = offsets;
    json limbs = json::array();
    for (const auto& [a, b] : t.limbs) limbs.push_back(json::array({a, b}));
    root["limbs"] = limbs;
    root["hip_index"] = t.hip_index;
    return root.dump(1) + "\n";
}

// ---- results ---------------------------------------------------------

std::string write_results(const std::vector<FrameRecord>& frames) {
    json root;
    json jframes = json::array();
    for (const auto& frame : frames) {
        json jf;
        jf["frame"] = frame.frame;
        if (frame.failed) {
            jf["failed"] = true;
            jf["error"] = frame.error;
        }
        json insts = json::array();
        for (const auto& inst : frame.instances) {
            json ji;
            ji["instance_id"] = inst.pose.instance_id;
            json joints = json::array();
            json conf = json::array();
            for (size_t i = 0; i < inst.pose.joints.size(); ++i) {
                conf.push_back(inst.pose.joint_confidence[i]);
                if (inst.pose.joint_confidence[i] > 0.0) {
                    if (!inst.pose.joints[i].allFinite())
                        throw std::runtime_error("refusing to write non-finite joint");
                    joints.push_back(vec3_json(inst.pose.joints[i]));
                } else {
                    joints.push_back(nullptr);
                }
            }
            ji["joints"] = joints;
            ji["confidences"] = conf;
            json infill = json::array();
            for (const auto b : inst.infilled) infill.push_back(static_cast<bool>(b));
            ji["infilled"] = infill;
            if (inst.insufficient_targets) ji["insufficient_targets"] = true;
            json body;
            body["root_translation"] = vec3_json(inst.body.root_translation);
            json rots = json::array();
            for (const auto& r : inst.body.joint_rotation) rots.push_back(vec3_json(r));
            body["joint_rotation"] = rots;
            body["bone_log_scale"] = inst.body.bone_log_scale;
            ji["body"] = body;
            insts.push_back(ji);
        }
        jf["instances"] = insts;
        jframes.push_back(jf);
    }
    root["frames"] = jframes;
    return root.dump(1) + "\n";
}

std::vector<FrameRecord> parse_results(const std::string& text) {
    const json root = parse_root(text);
    reject_unknown(root, "results", {"frames"});
    const json& jframes = member(root, "results", "frames");
    if (!jframes.is_array()) fail("results.frames", "expected an array");
    std::vector<FrameRecord> out;
    for (size_t f = 0; f < jframes.size(); ++f) {
        const std::string base = "results.frames[" + std::to_string(f) + "]";
        const json& jf = jframes[f];
        reject_unknown(jf, base, {"frame", "failed", "error", "instances"});
        FrameRecord frame;
        frame.frame = static_cast<int>(as_integer(member(jf, base, "frame"), base + ".frame"));
        if (jf.contains("failed")) frame.failed = jf["failed"].get<bool>();
        if (jf.contains("error")) frame.error = jf["error"].get<std::string>();
        const json& insts = member(jf, base, "instances");
        if (!insts.is_array()) fail(base + ".instances", "expected an array");
        for (size_t q = 0; q < insts.size(); ++q) {
            const std::string ib = base + ".instances[" + std::to_string(q) + "]";
            const json& ji = insts[q];
            reject_unknown(ji, ib,
                           {"instance_id", "joints", "confidences", "infilled",
                            "insufficient_targets", "body"});
            InstanceRecord inst;
            const json& joints = member(ji, ib, "joints");
            const json& conf = member(ji, ib, "confidences");
            if (!joints.is_array() || !conf.is_array() || joints.size() != conf.size())
                fail(ib, "joints/confidences must be arrays of equal length");
            inst.pose = PoseEstimate::empty(static_cast<int>(joints.size()),
                                            static_cast<int>(as_integer(member(ji, ib, "instance_id"),
                                                                        ib + ".instance_id")));
            for (size_t i = 0; i < joints.size(); ++i) {
                const double c =
                    as_range(conf[i], ib + ".confidences[" + std::to_string(i) + "]", 0.0, 1.0);
                inst.pose.joint_confidence[i] = c;
                if (joints[i].is_null()) {
                    if (c > 0.0)
                        fail(ib + ".joints[" + std::to_string(i) + "]",
                             "missing joint must have zero confidence");
                    continue;
                }
                inst.pose.joints[i] = as_vec3(joints[i], ib + ".joints[" + std::to_string(i) + "]");
            }
            if (ji.contains("infilled")) {
                const json& infill = ji["infilled"];
                if (!infill.is_array() || infill.size() != joints.size())
                    fail(ib + ".infilled", "expected one flag per joint");
                for (const auto& b : infill) inst.infilled.push_back(b.get<bool>() ? 1 : 0);
            }
            if (ji.contains("insufficient_targets"))
                inst.insufficient_targets = ji["insufficient_targets"].get<bool>();
            if (ji.contains("body")) {
                const json& body = ji["body"];
                const std::string bb = ib + ".body";
                reject_unknown(body, bb, {"root_translation", "joint_rotation", "bone_log_scale"});
                inst.body.root_translation =
                    as_vec3(member(body, bb, "root_translation"), bb + ".root_translation");
                for (const auto& r : member(body, bb, "joint_rotation"))
                    inst.body.joint_rotation.push_back(as_vec3(r, bb + ".joint_rotation[]"));
                for (const auto& s : member(body, bb, "bone_log_scale"))
                    inst.body.bone_log_scale.push_back(as_finite(s, bb + ".bone_log_scale[]"));
            }
            frame.instances.push_back(std::move(inst));
        }
        out.push_back(std::move(frame));
    }
    return out;
}

// ---- metrics / trace -------------------------------------------------

std::string write_metrics(const MetricsReport& metrics, const MetricsReport* initial) {
    json root;
    root["precision"] = metrics.precision;
    root["recall"] = metrics.recall;
    root["f1"] = metrics.f1;
    root["pcp_05"] = metrics.pcp_05;
    root["mpjpe"] = metrics.mpjpe;
    root["proposal_precision"] = metrics.proposal_precision;
    root["proposal_recall"] = metrics.proposal_recall;
    root["counts"] = {{"tp", metrics.tp},
                      {"fp", metrics.fp},
                      {"fn", metrics.fn},
                      {"proposal_tp", metrics.proposal_tp},
                      {"proposal_total", metrics.proposal_total},
                      {"proposal_truth", metrics.proposal_truth},
                      {"limb_correct", metrics.limb_correct},
                      {"limb_total", metrics.limb_total}};
    json per_joint = json::array();
    for (const auto& pj : metrics.per_joint)
        per_joint.push_back({{"tp", pj.tp}, {"fp", pj.fp}, {"fn", pj.fn}, {"mpjpe", pj.mpjpe()}});
    root["per_joint"] = per_joint;
    if (initial) {
        root["initial"] = {{"precision", initial->precision},
                           {"recall", initial->recall},
                           {"f1", initial->f1},
                           {"proposal_precision", initial->proposal_precision},
                           {"proposal_recall", initial->proposal_recall}};
    }
    return root.dump(1) + "\n";
}

std::string write_trace_csv(const std::vector<TraceRow>& rows) {
    std::ostringstream out;
    out << "frame,instance,n,E2D,Eshape,L,inliers\n";
    char buf[128];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.17g,%.17g,%.17g,%d\n", row.frame, row.instance,
                      row.record.iteration, row.record.e_2d, row.record.e_shape, row.record.total,
                      row.record.inliers);
        out << buf;
    }
    return out.str();
}

// ---- config ----------------------------------------------------------

void PipelineConfig::validate() const {
    proposal.validate();
    refine.validate();
    scene.validate();
    if (threads < 1) throw ValidationError("threads must be >= 1");
    if (frame_begin >= 0 && frame_end >= 0 && frame_end < frame_begin)
        throw ValidationError("frame range end before begin");
}

PipelineConfig parse_pipeline_config(const std::string& text) {
    const json root = parse_root(text);
    reject_unknown(root, "config",
                   {"paths", "topology", "association", "refine", "scene", "seed", "threads",
                    "write_trace"});
    PipelineConfig cfg;

    if (root.contains("paths")) {
        const json& p = root["paths"];
        reject_unknown(p, "config.paths", {"scene", "results", "out_dir"});
        if (p.contains("scene")) cfg.scene_path = p["scene"].get<std::string>();
        if (p.contains("results")) cfg.results_path = p["results"].get<std::string>();
        if (p.contains("out_dir")) cfg.out_dir = p["out_dir"].get<std::string>();
    }
    if (root.contains("topology")) {
        const std::string t = root["topology"].get<std::string>();
        cfg.topology_path = t == "default" ? std::string() : t;
    }
    if (root.contains("association")) {
        const json& a = root["association"];
        reject_unknown(a, "config.association",
                       {"cluster_radius", "box_x", "box_y", "box_below", "box_above",
                        "min_coverage", "min_mean_confidence", "affinity_min", "limb_length_min",
                        "limb_length_max"});
        auto& pc = cfg.proposal;
        if (a.contains("cluster_radius"))
            pc.cluster_radius = as_range(a["cluster_radius"], "config.association.cluster_radius", 1e-9, 100.0);
        if (a.contains("box_x")) pc.box_x = as_range(a["box_x"], "config.association.box_x", 1e-9, 100.0);
        if (a.contains("box_y")) pc.box_y = as_range(a["box_y"], "config.association.box_y", 1e-9, 100.0);
        if (a.contains("box_below"))
            pc.box_below = as_range(a["box_below"], "config.association.box_below", 1e-9, 100.0);
        if (a.contains("box_above"))
            pc.box_above = as_range(a["box_above"], "config.association.box_above", 1e-9, 100.0);
        if (a.contains("min_coverage"))
            pc.min_coverage = as_range(a["min_coverage"], "config.association.min_coverage", 0.0, 1.0);
        if (a.contains("min_mean_confidence"))
            pc.min_mean_confidence =
                as_range(a["min_mean_confidence"], "config.association.min_mean_confidence", 0.0, 1.0);
        if (a.contains("affinity_min"))
            pc.affinity_min = as_range(a["affinity_min"], "config.association.affinity_min", 0.0, 1.0);
        if (a.contains("limb_length_min"))
            pc.limb_length_min =
                as_range(a["limb_length_min"], "config.association.limb_length_min", 1e-9, 10.0);
        if (a.contains("limb_length_max"))
            pc.limb_length_max =
                as_range(a["limb_length_max"], "config.association.limb_length_max", 1e-9, 10.0);
    }
    if (root.contains("refine")) {
        const json& r = root["refine"];
        reject_unknown(r, "config.refine",
                       {"rho_2d", "rho_3d", "w_2d", "w_shape", "outer_iters", "inner_iters", "step",
                        "shrink", "max_backtracks", "gn_damping"});
        auto& rc = cfg.refine;
        if (r.contains("rho_2d")) rc.rho_2d = as_range(r["rho_2d"], "config.refine.rho_2d", 0.0, 1e6);
        if (r.contains("rho_3d")) rc.rho_3d = as_range(r["rho_3d"], "config.refine.rho_3d", 0.0, 1.0);
        if (r.contains("w_2d")) rc.w_2d = as_range(r["w_2d"], "config.refine.w_2d", 0.0, 1e9);
        if (r.contains("w_shape")) rc.w_shape = as_range(r["w_shape"], "config.refine.w_shape", 0.0, 1e9);
        if (r.contains("outer_iters"))
            rc.outer_iters = static_cast<int>(as_range(r["outer_iters"], "config.refine.outer_iters", 1, 100000));
        if (r.contains("inner_iters"))
            rc.inner_iters = static_cast<int>(as_range(r["inner_iters"], "config.refine.inner_iters", 1, 100000));
        if (r.contains("step")) rc.step = as_range(r["step"], "config.refine.step", 1e-12, 1e6);
        if (r.contains("shrink")) rc.shrink = as_range(r["shrink"], "config.refine.shrink", 1e-6, 0.999999);
        if (r.contains("max_backtracks"))
            rc.max_backtracks = static_cast<int>(as_range(r["max_backtracks"], "config.refine.max_backtracks", 0, 1000));
        if (r.contains("gn_damping"))
            rc.gn_damping = as_range(r["gn_damping"], "config.refine.gn_damping", 1e-12, 1e6);
    }
    if (root.contains("scene")) {
        const json& s = root["scene"];
        reject_unknown(s, "config.scene",
                       {"person_count", "frame_count", "camera_count", "camera_radius",
                        "camera_height", "focal_px", "image_width", "image_height", "scene_radius",
                        "min_separation", "pose_amplitude", "log_scale_range", "placement_retries",
                        "noise"});
        auto& sc = cfg.scene;
        if (s.contains("person_count"))
            sc.person_count = static_cast<int>(as_range(s["person_count"], "config.scene.person_count", 1, 1000));
        if (s.contains("frame_count"))
            sc.frame_count = static_cast<int>(as_range(s["frame_count"], "config.scene.frame_count", 1, 1000000));
        if (s.contains("camera_count"))
            sc.camera_count = static_cast<int>(as_range(s["camera_count"], "config.scene.camera_count", 2, 1000));
        if (s.contains("camera_radius"))
            sc.camera_radius = as_range(s["camera_radius"], "config.scene.camera_radius", 1e-9, 1e6);
        if (s.contains("camera_height"))
            sc.camera_height = as_range(s["camera_height"], "config.scene.camera_height", -1e6, 1e6);
        if (s.contains("focal_px")) sc.focal_px = as_range(s["focal_px"], "config.scene.focal_px", 1e-9, 1e9);
        if (s.contains("image_width"))
            sc.image_width = as_range(s["image_width"], "config.scene.image_width", 1.0, 1e6);
        if (s.contains("image_height"))
            sc.image_height = as_range(s["image_height"], "config.scene.image_height", 1.0, 1e6);
        if (s.contains("scene_radius"))
            sc.scene_radius = as_range(s["scene_radius"], "config.scene.scene_radius", 0.0, 1e6);
        if (s.contains("min_separation"))
            sc.min_separation = as_range(s["min_separation"], "config.scene.min_separation", 0.0, 1e6);
        if (s.contains("pose_amplitude"))
            sc.pose_amplitude = as_range(s["pose_amplitude"], "config.scene.pose_amplitude", 0.0, 10.0);
        if (s.contains("log_scale_range"))
            sc.log_scale_range =
                as_range(s["log_scale_range"], "config.scene.log_scale_range", 0.0, kMaxBoneLogScale);
        if (s.contains("placement_retries"))
            sc.placement_retries =
                static_cast<int>(as_range(s["placement_retries"], "config.scene.placement_retries", 1, 1000000));
        if (s.contains("noise")) {
            const json& nj = s["noise"];
            reject_unknown(nj, "config.scene.noise", {"pixel_sigma", "p_miss", "p_fp"});
            if (nj.contains("pixel_sigma"))
                sc.noise.pixel_sigma = as_range(nj["pixel_sigma"], "config.scene.noise.pixel_sigma", 0.0, 1e6);
            if (nj.contains("p_miss"))
                sc.noise.p_miss = as_range(nj["p_miss"], "config.scene.noise.p_miss", 0.0, 1.0);
            if (nj.contains("p_fp"))
                sc.noise.p_fp = as_range(nj["p_fp"], "config.scene.noise.p_fp", 0.0, 1.0);
        }
    }
    if (root.contains("seed")) {
        const long s = as_integer(root["seed"], "config.seed");
        if (s < 0) fail("config.seed", "seed must be nonnegative");
        cfg.seed = static_cast<uint64_t>(s);
    }
    if (root.contains("threads"))
        cfg.threads = static_cast<int>(as_range(root["threads"], "config.threads", 1, 4096));
    if (root.contains("write_trace")) {
        if (!root["write_trace"].is_boolean()) fail("config.write_trace", "expected a boolean");
        cfg.write_trace = root["write_trace"].get<bool>();
    }

    try {
        cfg.validate();
    } catch (const ValidationError& e) {
        throw ParseError(std::string("config: ") + e.what());
    } catch (const ConfigError& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    return cfg;
}

PipelineConfig load_pipeline_config(const std::string& path) {
    return parse_pipeline_config(read_file(path));
}

}  // namespace mvpose
