#include "spev/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "spev/contrast.hpp"
#include "spev/csv.hpp"
#include "spev/error.hpp"
#include "spev/fog.hpp"
#include "spev/frame.hpp"
#include "spev/manifest.hpp"

namespace spev {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kChunkPerWorker = 16;

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::UnreadableFile, fmt::format("cannot open '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::UnreadableFile, fmt::format("cannot write '{}'", path.string()));
    out << text;
}

// Rounds to six significant digits so JSON artifacts match the CSV output.
double round6(double v) {
    if (!std::isfinite(v) || v == 0.0) return v;
    return std::stod(fmt::format("{:.6g}", v));
}

fs::path resolve(const fs::path& base, const fs::path& p) {
    if (p.empty() || p.is_absolute()) return p;
    return base / p;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    return j.at(key).get<T>();
}

std::vector<FitInterval> parse_intervals(const json& fit) {
    std::vector<FitInterval> out;
    if (fit.contains("intervals")) {
        for (const auto& iv : fit.at("intervals")) {
            FitInterval f;
            f.lo = iv.at("lo").get<double>();
            f.hi = iv.at("hi").get<double>();
            if (iv.contains("powers")) f.powers = iv.at("powers").get<std::set<int>>();
            out.push_back(std::move(f));
        }
        return out;
    }
    if (fit.contains("edges")) {
        const auto edges = fit.at("edges").get<std::vector<double>>();
        const auto powers = get_or(fit, "powers", std::set<int>{1, 2, 3});
        for (std::size_t i = 0; i + 1 < edges.size(); ++i) out.push_back({edges[i], edges[i + 1], powers});
        return out;
    }
    out = default_fit_intervals();
    if (fit.contains("powers")) {
        const auto powers = fit.at("powers").get<std::set<int>>();
        for (auto& f : out) f.powers = powers;
    }
    return out;
}

void check_config(const PipelineConfig& c) {
    auto bad = [](const std::string& what) { fail(Errc::MalformedConfig, what); };
    if (!(c.smoothing.sigma > 0.0) || c.smoothing.radius < 1) bad("smoothing needs sigma > 0 and radius >= 1");
    if (!(c.rejection_k > 0.0)) bad("baseline.rejection_k must be positive");
    if (!(c.contrast_threshold > 0.0 && c.contrast_threshold < 1.0)) bad("contrast.threshold must lie in (0, 1)");
    if (!(c.roi.canny_lo > 0.0 && c.roi.canny_lo < c.roi.canny_hi)) bad("roi needs 0 < canny_lo < canny_hi");
    if (c.roi.hough_threshold < 1) bad("roi.hough_threshold must be >= 1");
    if (c.roi.h_margin < 0.0) bad("roi.h_margin must be >= 0");
    if (c.flip.enabled && !(c.flip.lo < c.flip.hi)) bad("flip needs lo < hi");
    for (const auto& iv : c.intervals) {
        if (!(iv.lo < iv.hi)) bad(fmt::format("fit interval [{}, {}) is empty", iv.lo, iv.hi));
        if (iv.powers.empty()) bad("fit interval without powers");
        for (int p : iv.powers)
            if (p < 1 || p > 3) bad(fmt::format("fit power {} outside 1..3", p));
    }
    std::set<std::string> ids;
    for (const auto& cam : c.cameras) {
        if (cam.camera_id.empty()) bad("camera without camera_id");
        if (!ids.insert(cam.camera_id).second) bad(fmt::format("duplicate camera '{}'", cam.camera_id));
    }
}

json geometry_json(const CameraGeometry& g) {
    return {{"v_h", g.v_h}, {"lambda", g.lambda}, {"v_far", g.v_far}, {"v_near", g.v_near}, {"d_gap", g.d_gap}};
}

CameraGeometry geometry_from_json(const json& j) {
    CameraGeometry g{j.at("v_h").get<double>(), j.at("lambda").get<double>(), j.at("v_far").get<double>(),
                     j.at("v_near").get<double>(), j.at("d_gap").get<double>()};
    g.validate();
    return g;
}

json line_json(const HoughLine& l) { return {{"rho", round6(l.rho)}, {"theta", round6(l.theta)}, {"votes", l.votes}}; }

std::string hash_comment(const PipelineConfig& config) { return fmt::format("config_hash: {}", config.hash); }

// Runs `work(i)` for i in [begin, end) across the available cores.
template <typename F>
void parallel_for(std::size_t begin, std::size_t end, F&& work) {
    const std::size_t n = end - begin;
    const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (std::size_t i = begin; i < end; ++i) work(i);
        return;
    }
    std::atomic<std::size_t> next{begin};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < end; i = next++) work(i);
        });
    }
    for (auto& t : pool) t.join();
}

struct FrameOutcome {
    std::optional<std::string> error;
    double h = 0.0;
    double h_r = 0.0;
    double contrast_vis = 0.0;
};

FrameOutcome process_frame(const ManifestEntry& entry, const Calibration& calib, const ClearBaseline* baseline,
                           const PipelineConfig& config, bool contrast) {
    FrameOutcome out;
    try {
        auto frame = load_frame(entry.path);
        if (config.denoise) frame = median_denoise(frame);
        const auto h = gaussian_entropy(frame, calib.roi, config.smoothing.sigma, config.smoothing.radius);
        out.h = h.value;
        if (baseline) out.h_r = relative_ratio(h, *baseline);
        if (contrast) out.contrast_vis = contrast_visibility(frame, calib.roi, calib.geom15, config.contrast_threshold);
    } catch (const Error& e) {
        out.error = e.what();
    }
    return out;
}

// Parallel per-frame stage feeding an in-order sequential consumer, one
// bounded chunk at a time.
template <typename Consumer>
void stream_manifest(const FrameManifest& manifest, const Calibration& calib, const ClearBaseline* baseline,
                     const PipelineConfig& config, bool contrast, Consumer&& consume) {
    const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t chunk = workers * kChunkPerWorker;
    std::vector<FrameOutcome> results;
    for (std::size_t start = 0; start < manifest.entries.size(); start += chunk) {
        const std::size_t stop = std::min(manifest.entries.size(), start + chunk);
        results.assign(stop - start, {});
        parallel_for(start, stop, [&](std::size_t i) {
            results[i - start] = process_frame(manifest.entries[i], calib, baseline, config, contrast);
        });
        for (std::size_t i = start; i < stop; ++i) consume(manifest.entries[i], results[i - start]);
    }
}

std::string relative_to(const fs::path& p, const fs::path& base) {
    const auto rel = p.lexically_relative(base);
    return (rel.empty() ? p : rel).generic_string();
}

fs::path cache_path(const PipelineConfig& config, const std::string& camera_id) {
    return config.camera_dir(camera_id) / "entropy_series.jsonl";
}

std::optional<EntropySeries> read_cache(const PipelineConfig& config, const std::string& camera_id,
                                        const std::string& manifest_key) {
    const auto path = cache_path(config, camera_id);
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::string line;
    if (!std::getline(in, line)) return std::nullopt;
    try {
        const auto head = json::parse(line);
        if (head.value("config_hash", "") != config.hash || head.value("manifest", "") != manifest_key) {
            return std::nullopt;
        }
        EntropySeries series;
        series.camera_id = camera_id;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto j = json::parse(line);
            if (j.contains("error")) continue;
            series.points.push_back({j.at("frame_index").get<std::int64_t>(), j.at("timestamp").get<double>(),
                                     j.at("h").get<double>(), j.at("h_r").get<double>()});
        }
        return series;
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

std::string cache_line(const ManifestEntry& e, const FrameOutcome& r) {
    json j = {{"frame_index", e.frame_index}, {"timestamp", e.timestamp}};
    if (r.error) {
        j["error"] = *r.error;
    } else {
        j["h"] = r.h;
        j["h_r"] = r.h_r;
    }
    return j.dump() + "\n";
}

std::string cache_header(const PipelineConfig& config, const std::string& camera_id, const std::string& manifest_key) {
    return json{{"camera_id", camera_id}, {"config_hash", config.hash}, {"manifest", manifest_key}}.dump() + "\n";
}

std::map<std::int64_t, double> read_labels(const fs::path& path) {
    const auto table = read_csv(path);
    const auto idx = table.column("frame_index");
    std::optional<std::size_t> vis;
    for (const char* name : {"vis_mean", "vis_label_m", "vis_true_m"}) {
        if ((vis = table.column(name))) break;
    }
    if (!idx || !vis) {
        fail(Errc::MalformedConfig,
             fmt::format("'{}' needs frame_index and one of vis_mean, vis_label_m, vis_true_m", path.string()));
    }
    std::map<std::int64_t, double> out;
    for (const auto& row : table.rows) {
        try {
            out[std::stoll(row[*idx])] = std::stod(row[*vis]);
        } catch (const std::exception&) {
            fail(Errc::MalformedConfig, fmt::format("'{}': unparsable label row", path.string()));
        }
    }
    return out;
}

PiecewiseModel load_estimate_model(const PipelineConfig& config) {
    return config.model_path.empty() ? bundled_model() : load_model_file(config.model_path);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t camera, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(camera * 0x100000001b3ULL + stream));
}

}  // namespace

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 digest failed");
    }
    std::string hex;
    hex.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

const CameraConfig& PipelineConfig::camera(const std::string& id) const {
    for (const auto& c : cameras)
        if (c.camera_id == id) return c;
    fail(Errc::UnknownCamera, fmt::format("camera '{}' is not in the config", id));
}

fs::path PipelineConfig::camera_dir(const std::string& id) const { return output_dir / id; }

PipelineConfig parse_config(const std::string& text, const fs::path& base_dir) {
    PipelineConfig c;
    c.base_dir = base_dir;
    json doc;
    try {
        doc = json::parse(text);
        if (!doc.is_object()) fail(Errc::MalformedConfig, "config must be a JSON object");

        c.output_dir = resolve(base_dir, get_or<std::string>(doc, "output_dir", "out"));
        if (doc.contains("smoothing")) {
            const auto& s = doc.at("smoothing");
            c.smoothing.sigma = get_or(s, "sigma", c.smoothing.sigma);
            c.smoothing.radius = get_or(s, "radius", c.smoothing.radius);
        }
        c.denoise = get_or(doc, "denoise", false);
        if (doc.contains("baseline")) c.rejection_k = get_or(doc.at("baseline"), "rejection_k", c.rejection_k);
        if (doc.contains("flip")) {
            const auto& f = doc.at("flip");
            c.flip.enabled = get_or(f, "enabled", false);
            c.flip.lo = get_or(f, "lo", c.flip.lo);
            c.flip.hi = get_or(f, "hi", c.flip.hi);
        }
        c.model_path = resolve(base_dir, get_or<std::string>(doc, "model_path", ""));
        if (doc.contains("fit")) c.intervals = parse_intervals(doc.at("fit"));
        if (doc.contains("eval")) {
            const auto d = get_or<std::string>(doc.at("eval"), "denominator", "estimate");
            if (d == "estimate") {
                c.denominator = ApeDenominator::Estimate;
            } else if (d == "reference") {
                c.denominator = ApeDenominator::Reference;
            } else {
                fail(Errc::MalformedConfig, fmt::format("eval.denominator '{}' is not estimate|reference", d));
            }
        }
        if (doc.contains("contrast")) {
            c.contrast_threshold = get_or(doc.at("contrast"), "threshold", c.contrast_threshold);
        }
        const auto est = get_or<std::string>(doc, "estimator", "spev");
        if (est == "spev") {
            c.estimator = Estimator::Spev;
        } else if (est == "contrast") {
            c.estimator = Estimator::Contrast;
        } else if (est == "both") {
            c.estimator = Estimator::Both;
        } else {
            fail(Errc::MalformedConfig, fmt::format("estimator '{}' is not spev|contrast|both", est));
        }
        if (doc.contains("roi")) {
            const auto& r = doc.at("roi");
            c.roi.edge_sigma = get_or(r, "edge_sigma", c.roi.edge_sigma);
            c.roi.canny_lo = get_or(r, "canny_lo", c.roi.canny_lo);
            c.roi.canny_hi = get_or(r, "canny_hi", c.roi.canny_hi);
            c.roi.hough_threshold = get_or(r, "hough_threshold", c.roi.hough_threshold);
            c.roi.h_margin = get_or(r, "h_margin", c.roi.h_margin);
        }
        if (doc.contains("cameras")) {
            for (const auto& j : doc.at("cameras")) {
                CameraConfig cam;
                cam.camera_id = j.at("camera_id").get<std::string>();
                if (j.contains("v_h") && !j.at("v_h").is_null()) cam.v_h = j.at("v_h").get<double>();
                cam.far_row_15 = j.at("far_row_15").get<double>();
                cam.far_row_9 = j.at("far_row_9").get<double>();
                cam.near_row = j.at("near_row").get<double>();
                cam.d15 = get_or(j, "d15", cam.d15);
                cam.d9 = get_or(j, "d9", cam.d9);
                if (j.contains("roi_polygon") && !j.at("roi_polygon").is_null()) {
                    std::vector<Point2> poly;
                    for (const auto& p : j.at("roi_polygon")) poly.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
                    cam.roi_polygon = std::move(poly);
                }
                cam.clear_frame = resolve(base_dir, get_or<std::string>(j, "clear_frame", ""));
                cam.clear_manifest = resolve(base_dir, get_or<std::string>(j, "clear_manifest", ""));
                cam.manifest = resolve(base_dir, get_or<std::string>(j, "manifest", ""));
                cam.labels = resolve(base_dir, get_or<std::string>(j, "labels", ""));
                cam.test = get_or(j, "test", false);
                c.cameras.push_back(std::move(cam));
            }
        }
        if (doc.contains("synth")) {
            const auto& j = doc.at("synth");
            SynthConfig s;
            s.cameras = get_or(j, "cameras", s.cameras);
            s.test_cameras = get_or(j, "test_cameras", s.test_cameras);
            s.width = get_or(j, "width", s.width);
            s.height = get_or(j, "height", s.height);
            s.v_h = get_or(j, "v_h", s.v_h);
            s.near_distance = get_or(j, "near_distance", s.near_distance);
            s.anchor_near = get_or(j, "anchor_near", s.anchor_near);
            s.frames = get_or(j, "frames", s.frames);
            s.clear_frames = get_or(j, "clear_frames", s.clear_frames);
            s.vis_from = get_or(j, "vis_from", s.vis_from);
            s.vis_to = get_or(j, "vis_to", s.vis_to);
            s.sensor_noise = get_or(j, "sensor_noise", s.sensor_noise);
            s.label_noise = get_or(j, "label_noise", s.label_noise);
            s.sky = get_or(j, "sky", s.sky);
            s.gain_min = get_or(j, "gain_min", s.gain_min);
            s.gain_max = get_or(j, "gain_max", s.gain_max);
            s.seed = get_or(j, "seed", s.seed);
            s.image_format = get_or(j, "image_format", s.image_format);
            s.pavement_texture = get_or(j, "pavement_texture", s.pavement_texture);
            s.edge_lines = get_or(j, "edge_lines", s.edge_lines);
            s.dashed_markings = get_or(j, "dashed_markings", s.dashed_markings);
            if (s.image_format != "pgm" && s.image_format != "png") {
                fail(Errc::MalformedConfig, fmt::format("synth.image_format '{}' is not pgm|png", s.image_format));
            }
            if (s.cameras < 1 || s.frames < 0 || s.clear_frames < 1 || !(s.gain_min > 0.0 && s.gain_min <= s.gain_max)) {
                fail(Errc::MalformedConfig, "synth block has out-of-range values");
            }
            c.synth = s;
        }
    } catch (const json::exception& e) {
        fail(Errc::MalformedConfig, e.what());
    }
    check_config(c);
    doc.erase("output_dir");
    c.canonical = doc.dump();
    c.hash = sha256_hex(c.canonical);
    return c;
}

PipelineConfig load_config(const fs::path& path) {
    const auto text = read_text(path);
    auto base = path.parent_path();
    if (base.empty()) base = ".";
    return parse_config(text, base);
}

PipelineConfig merge_config(const PipelineConfig& config, const std::string& merge_patch) {
    json doc = json::parse(config.canonical);
    try {
        doc.merge_patch(json::parse(merge_patch));
    } catch (const json::exception& e) {
        fail(Errc::MalformedConfig, e.what());
    }
    auto merged = parse_config(doc.dump(), config.base_dir);
    merged.output_dir = config.output_dir;
    return merged;
}

Calibration run_calibrate(const PipelineConfig& config, const std::string& camera_id) {
    const auto& cam = config.camera(camera_id);
    Calibration calib;
    calib.camera_id = camera_id;
    calib.horizon_detected = std::numeric_limits<double>::quiet_NaN();

    GrayFrame clear;
    try {
        clear = load_frame(cam.clear_frame);
    } catch (const Error& e) {
        fail(e.code(), fmt::format("camera '{}': {}", camera_id, e.what()));
    }

    json roi_doc = {{"camera_id", camera_id}, {"width", clear.width()}, {"height", clear.height()}};
    std::optional<RoiResult> detected;
    if (!cam.roi_polygon || !cam.v_h) {
        const auto smoothed = gaussian_smooth(clear, config.roi.edge_sigma, std::max(1, static_cast<int>(std::ceil(3 * config.roi.edge_sigma))));
        const auto lines = detect_lane_lines(smoothed, config.roi.canny_lo, config.roi.canny_hi, config.roi.hough_threshold);
        detected = build_roi(lines, clear.width(), clear.height(), config.roi.h_margin);
        calib.horizon_detected = detected->horizon_row;
        roi_doc["horizon_detected"] = round6(detected->horizon_row);
        roi_doc["left"] = line_json(detected->left);
        roi_doc["right"] = line_json(detected->right);
    }
    if (cam.roi_polygon) {
        calib.roi = RoiMask::from_polygon(clear.width(), clear.height(), *cam.roi_polygon);
        roi_doc["source"] = "config";
    } else {
        calib.roi = detected->roi;
        roi_doc["source"] = "detected";
    }
    if (calib.roi.count() < 2) fail(Errc::EmptyRoi, fmt::format("camera '{}': ROI is empty", camera_id));

    const double v_h = cam.v_h ? *cam.v_h : detected->horizon_row;
    try {
        calib.geom15 = make_geometry(cam.far_row_15, cam.near_row, v_h, cam.d15);
        calib.geom9 = make_geometry(cam.far_row_9, cam.near_row, v_h, cam.d9);
    } catch (const Error& e) {
        fail(e.code(), fmt::format("camera '{}': {}", camera_id, e.what()));
    }

    json poly = json::array();
    for (const auto& p : calib.roi.polygon()) poly.push_back({round6(p.x), round6(p.y)});
    roi_doc["polygon"] = poly;
    roi_doc["pixel_count"] = calib.roi.count();
    roi_doc["config_hash"] = config.hash;

    json geo = {{"camera_id", camera_id},
                {"v_h", v_h},
                {"v_h_source", cam.v_h ? "config" : "detected"},
                {"geometry_15", geometry_json(calib.geom15)},
                {"geometry_9", geometry_json(calib.geom9)},
                {"lambda_15", round6(calib.geom15.lambda)},
                {"lambda_9", round6(calib.geom9.lambda)},
                {"config_hash", config.hash}};

    const auto dir = config.camera_dir(camera_id);
    fs::create_directories(dir);
    write_text(dir / "geometry.json", geo.dump(2) + "\n");
    write_text(dir / "roi.json", roi_doc.dump(2) + "\n");
    calib.roi.save_pgm(dir / "roi.pgm", hash_comment(config));
    return calib;
}

Calibration load_calibration(const PipelineConfig& config, const std::string& camera_id) {
    const auto dir = config.camera_dir(camera_id);
    Calibration calib;
    calib.camera_id = camera_id;
    try {
        const auto geo = json::parse(read_text(dir / "geometry.json"));
        const auto roi = json::parse(read_text(dir / "roi.json"));
        calib.geom15 = geometry_from_json(geo.at("geometry_15"));
        calib.geom9 = geometry_from_json(geo.at("geometry_9"));
        calib.horizon_detected = get_or(roi, "horizon_detected", std::numeric_limits<double>::quiet_NaN());
        std::vector<Point2> poly;
        for (const auto& p : roi.at("polygon")) poly.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        calib.roi = RoiMask::from_polygon(roi.at("width").get<int>(), roi.at("height").get<int>(), std::move(poly));
    } catch (const json::exception& e) {
        fail(Errc::MalformedConfig, fmt::format("camera '{}' calibration: {}", camera_id, e.what()));
    } catch (const Error& e) {
        fail(e.code(), fmt::format("camera '{}' (run calibrate first): {}", camera_id, e.what()));
    }
    return calib;
}

ClearBaseline run_baseline(const PipelineConfig& config, const std::string& camera_id) {
    const auto& cam = config.camera(camera_id);
    const auto calib = load_calibration(config, camera_id);
    const auto manifest = load_manifest(cam.clear_manifest);
    if (manifest.entries.empty()) fail(Errc::EmptySeries, fmt::format("camera '{}': clear manifest is empty", camera_id));

    std::vector<EntropyValue> values;
    stream_manifest(manifest, calib, nullptr, config, false, [&](const ManifestEntry& e, const FrameOutcome& r) {
        if (r.error) fail(Errc::UnreadableFile, fmt::format("camera '{}' clear frame {}: {}", camera_id, e.frame_index, *r.error));
        values.push_back({r.h, calib.roi.count()});
    });
    auto baseline = clear_baseline(values, config.rejection_k);
    baseline.camera_id = camera_id;

    json j = {{"camera_id", camera_id},
              {"H_clear", baseline.h_clear},
              {"n_used", baseline.n_used},
              {"n_rejected", baseline.n_rejected},
              {"rejection_k", baseline.rejection_k},
              {"config_hash", config.hash}};
    write_text(config.camera_dir(camera_id) / "baseline.json", j.dump(2) + "\n");
    return baseline;
}

ClearBaseline load_baseline(const PipelineConfig& config, const std::string& camera_id) {
    ClearBaseline b;
    try {
        const auto j = json::parse(read_text(config.camera_dir(camera_id) / "baseline.json"));
        b.camera_id = j.at("camera_id").get<std::string>();
        b.h_clear = j.at("H_clear").get<double>();
        b.n_used = j.at("n_used").get<std::size_t>();
        b.n_rejected = j.at("n_rejected").get<std::size_t>();
        b.rejection_k = j.at("rejection_k").get<double>();
    } catch (const json::exception& e) {
        fail(Errc::MalformedConfig, fmt::format("camera '{}' baseline: {}", camera_id, e.what()));
    } catch (const Error& e) {
        fail(e.code(), fmt::format("camera '{}' (run baseline first): {}", camera_id, e.what()));
    }
    if (!(b.h_clear > 0.0)) fail(Errc::ZeroBaseline, fmt::format("camera '{}' has a zero baseline", camera_id));
    return b;
}

EstimateStats run_estimate(const PipelineConfig& config, const std::string& camera_id,
                           const std::optional<fs::path>& manifest_override) {
    const auto& cam = config.camera(camera_id);
    const auto calib = load_calibration(config, camera_id);
    const auto baseline = load_baseline(config, camera_id);
    const bool spev = config.estimator != Estimator::Contrast;
    const bool contrast = config.estimator != Estimator::Spev;
    std::optional<PiecewiseModel> model;
    if (spev) model = load_estimate_model(config);

    const fs::path manifest_path = manifest_override ? *manifest_override : cam.manifest;
    const auto manifest = load_manifest(manifest_path);
    const auto manifest_key = relative_to(manifest_path, config.base_dir);

    const auto dir = config.camera_dir(camera_id);
    fs::create_directories(dir);
    EstimateStats stats;
    stats.csv = dir / "estimates.csv";
    std::ofstream est_out(stats.csv, std::ios::trunc);
    std::ofstream ent_out(dir / "entropy.csv", std::ios::trunc);
    std::ofstream cache_out(cache_path(config, camera_id), std::ios::trunc);
    if (!est_out || !ent_out || !cache_out) fail(Errc::UnreadableFile, fmt::format("cannot write into '{}'", dir.string()));

    CsvWriter est(est_out);
    CsvWriter ent(ent_out);
    est.comment(hash_comment(config));
    ent.comment(hash_comment(config));
    est.row({"frame_index", "timestamp", "camera_id", "estimator", "H_bits", "H_r", "vis_m", "piece_index", "status",
             "message"});
    ent.row({"frame_index", "timestamp", "camera_id", "H_bits", "H_r"});
    cache_out << cache_header(config, camera_id, manifest_key);

    std::optional<double> prev;
    stream_manifest(manifest, calib, &baseline, config, contrast, [&](const ManifestEntry& e, const FrameOutcome& r) {
        ++stats.frames;
        const auto idx = std::to_string(e.frame_index);
        const auto ts = format_number(e.timestamp);
        cache_out << cache_line(e, r);
        if (r.error) {
            ++stats.errors;
            for (const char* name : {"spev", "contrast"}) {
                if ((name[0] == 's' && !spev) || (name[0] == 'c' && !contrast)) continue;
                est.row({idx, ts, camera_id, name, "", "", "", "", "error", *r.error});
            }
            ent.row({idx, ts, camera_id, "", ""});
            return;
        }
        const auto h = format_number(r.h);
        const auto hr = format_number(r.h_r);
        ent.row({idx, ts, camera_id, h, hr});
        if (spev) {
            const auto p = predict(*model, mirror_flip(r.h_r, model->flip), prev);
            prev = p.vis;
            est.row({idx, ts, camera_id, "spev", h, hr, format_number(p.vis), std::to_string(p.piece_index + 1), "ok",
                     p.self_consistent ? "" : "no self-consistent piece; clamped"});
        }
        if (contrast) {
            est.row({idx, ts, camera_id, "contrast", h, hr, format_number(r.contrast_vis), "", "ok", ""});
        }
    });
    return stats;
}

EntropySeries entropy_series(const PipelineConfig& config, const std::string& camera_id) {
    const auto& cam = config.camera(camera_id);
    const auto manifest_key = relative_to(cam.manifest, config.base_dir);
    if (auto cached = read_cache(config, camera_id, manifest_key)) return *cached;

    const auto calib = load_calibration(config, camera_id);
    const auto baseline = load_baseline(config, camera_id);
    const auto manifest = load_manifest(cam.manifest);
    fs::create_directories(config.camera_dir(camera_id));
    std::ofstream cache_out(cache_path(config, camera_id), std::ios::trunc);
    cache_out << cache_header(config, camera_id, manifest_key);
    EntropySeries series;
    series.camera_id = camera_id;
    stream_manifest(manifest, calib, &baseline, config, false, [&](const ManifestEntry& e, const FrameOutcome& r) {
        cache_out << cache_line(e, r);
        if (!r.error) series.points.push_back({e.frame_index, e.timestamp, r.h, r.h_r});
    });
    return series;
}

CameraDataset camera_dataset(const PipelineConfig& config, const CameraConfig& camera) {
    if (camera.labels.empty()) fail(Errc::MalformedConfig, fmt::format("camera '{}' has no labels file", camera.camera_id));
    const auto labels = read_labels(camera.labels);
    const auto series = entropy_series(config, camera.camera_id);
    CameraDataset data;
    data.test = camera.test;
    for (const auto& p : series.points) {
        const auto it = labels.find(p.frame_index);
        if (it == labels.end() || !p.h_r) continue;
        data.samples.push_back({p.frame_index, *p.h_r, it->second});
    }
    return data;
}

PiecewiseModel run_fit(const PipelineConfig& config) {
    if (config.cameras.empty()) fail(Errc::InsufficientData, "config lists no cameras");
    const bool all_test = std::all_of(config.cameras.begin(), config.cameras.end(), [](const auto& c) { return c.test; });
    std::vector<FitSample> samples;
    for (const auto& cam : config.cameras) {
        if (cam.test && !all_test) continue;
        for (const auto& s : camera_dataset(config, cam).samples) samples.push_back({mirror_flip(s.h_r, config.flip), s.vis});
    }
    auto model = fit(samples, config.intervals, config.flip);
    model.version = "spev-1";
    auto doc = json::parse(save_model(model));
    doc["config_hash"] = config.hash;
    write_text(config.output_dir / "model.json", doc.dump(2) + "\n");
    return model;
}

std::map<std::string, EvalReport> run_eval(const PipelineConfig& config) {
    std::map<std::string, CameraDataset> datasets;
    for (const auto& cam : config.cameras) datasets.emplace(cam.camera_id, camera_dataset(config, cam));
    FitConfig fit_config{config.intervals, config.flip, config.denominator};
    auto reports = leave_one_out(datasets, fit_config);

    const auto dir = config.output_dir / "eval";
    fs::create_directories(dir);
    json folds = json::object();
    for (const auto& [id, report] : reports) {
        std::ostringstream rep;
        std::ostringstream plot;
        CsvWriter rw(rep);
        CsvWriter pw(plot);
        rw.comment(hash_comment(config));
        pw.comment(hash_comment(config));
        rw.row({"frame_index", "camera_id", "estimator", "vis_est", "vis_ref", "ape_percent"});
        pw.row({"frame_index", "H_r", "vis_est", "vis_ref"});
        std::vector<double> est;
        std::vector<double> ref;
        for (const auto& r : report.rows) {
            const auto idx = std::to_string(r.frame_index);
            rw.row({idx, id, r.estimator, format_number(r.vis_est), format_number(r.vis_ref), format_number(r.ape_percent)});
            pw.row({idx, format_number(r.h_r), format_number(r.vis_est), format_number(r.vis_ref)});
            est.push_back(r.vis_est);
            ref.push_back(r.vis_ref);
        }
        write_text(dir / fmt::format("report_{}.csv", id), rep.str());
        write_text(dir / fmt::format("plotdata_{}.csv", id), plot.str());
        const auto& s = report.summary;
        folds[id] = {{"n", s.n},
                     {"frac_under_10pct", round6(s.frac_under_10pct)},
                     {"frac_under_20pct", round6(s.frac_under_20pct)},
                     {"min_ape", round6(s.min_ape)},
                     {"max_ape", round6(s.max_ape)},
                     {"mean_abs_ape", round6(s.mean_abs_ape)},
                     {"spearman", est.size() >= 2 ? round6(spearman(est, ref)) : 0.0}};
    }
    json summary = {{"config_hash", config.hash},
                    {"denominator", config.denominator == ApeDenominator::Estimate ? "estimate" : "reference"},
                    {"folds", folds}};
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    return reports;
}

SynthStats run_synth(const PipelineConfig& config, const fs::path& out_dir, std::optional<std::uint64_t> seed) {
    if (!config.synth) fail(Errc::MalformedConfig, "config has no synth block");
    const auto& s = *config.synth;
    const std::uint64_t base_seed = seed ? *seed : s.seed;

    SceneSpec spec;
    spec.width = s.width;
    spec.height = s.height;
    spec.v_h = s.v_h;
    spec.lambda = s.near_distance * (s.height - 1 - s.v_h);
    spec.road_left_bottom = s.width * (80.0 / 960.0);
    spec.road_right_bottom = s.width * (880.0 / 960.0);
    spec.sky = s.sky;
    spec.pavement_texture = s.pavement_texture;
    spec.edge_lines = s.edge_lines;
    spec.dashed_markings = s.dashed_markings;
    const auto geom = scene_geometry(spec, s.anchor_near + 15.0, s.anchor_near);
    const auto depth = depth_from_geometry(geom, s.width, s.height);
    const auto schedule = geometric_schedule(s.vis_from, s.vis_to, static_cast<std::size_t>(s.frames));
    const double far_row_9 = s.v_h + spec.lambda / (s.anchor_near + 9.0);

    json doc = json::parse(config.canonical);
    doc.erase("synth");
    doc["output_dir"] = "run";
    doc["cameras"] = json::array();

    SynthStats stats;
    fs::create_directories(out_dir);
    for (int i = 0; i < s.cameras; ++i) {
        const std::string id = fmt::format("cam{}", i);
        const auto ci = static_cast<std::uint64_t>(i);
        const auto cam_dir = out_dir / id;
        fs::create_directories(cam_dir / "clear");
        fs::create_directories(cam_dir / "fog");

        const auto scene = make_clear_scene(spec, derive_seed(base_seed, ci, 0));
        std::mt19937_64 rng(derive_seed(base_seed, ci, 1));
        const double gain = std::uniform_real_distribution<double>(s.gain_min, s.gain_max)(rng);
        std::normal_distribution<double> label_noise(0.0, s.label_noise);

        auto finish = [&](GrayFrame frame, std::uint64_t stream, const fs::path& path) {
            apply_gain(frame, gain);
            add_sensor_noise(frame, s.sensor_noise, derive_seed(base_seed, ci, stream));
            save_frame(frame, path);
            ++stats.frames;
        };

        FrameManifest clear_manifest;
        for (int j = 0; j < s.clear_frames; ++j) {
            const auto rel = fmt::format("clear/{:04d}.{}", j, s.image_format);
            finish(scene, 1000 + static_cast<std::uint64_t>(j), cam_dir / rel);
            clear_manifest.entries.push_back({j, j * 60.0, id, rel});
        }
        save_manifest(clear_manifest, cam_dir / "clear.jsonl");

        FrameManifest fog_manifest;
        std::ostringstream truth;
        std::ostringstream labels;
        CsvWriter tw(truth);
        CsvWriter lw(labels);
        tw.comment(hash_comment(config));
        lw.comment(hash_comment(config));
        tw.row({"frame_index", "vis_true_m", "k"});
        lw.row({"frame_index", "vis_label_m"});
        for (std::size_t j = 0; j < schedule.size(); ++j) {
            const auto fog = FogParams::from_visibility(schedule[j], s.sky);
            const auto rel = fmt::format("fog/{:04d}.{}", j, s.image_format);
            finish(apply_fog(scene, depth, fog), 100000 + j, cam_dir / rel);
            const auto idx = static_cast<std::int64_t>(j);
            fog_manifest.entries.push_back({idx, static_cast<double>(j) * 60.0, id, rel});
            tw.row({std::to_string(j), format_number(schedule[j]), format_number(fog.k)});
            lw.row({std::to_string(j), format_number(std::max(1.0, schedule[j] + label_noise(rng)))});
        }
        save_manifest(fog_manifest, cam_dir / "fog.jsonl");
        write_text(cam_dir / "ground_truth.csv", truth.str());
        write_text(cam_dir / "labels.csv", labels.str());

        const bool test = std::find(s.test_cameras.begin(), s.test_cameras.end(), id) != s.test_cameras.end();
        doc["cameras"].push_back({{"camera_id", id},
                                  {"far_row_15", geom.v_far},
                                  {"far_row_9", far_row_9},
                                  {"near_row", geom.v_near},
                                  {"d15", 15.0},
                                  {"d9", 9.0},
                                  {"clear_frame", fmt::format("{}/clear/0000.{}", id, s.image_format)},
                                  {"clear_manifest", id + "/clear.jsonl"},
                                  {"manifest", id + "/fog.jsonl"},
                                  {"labels", id + "/labels.csv"},
                                  {"test", test}});
    }
    stats.config_path = out_dir / "config.json";
    write_text(stats.config_path, doc.dump(2) + "\n");
    return stats;
}

}  // namespace spev
