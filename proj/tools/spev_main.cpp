// spev: calibrate, baseline, estimate, fit, eval, synth, serve.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "spev/annot/http.hpp"
#include "spev/annot/service.hpp"
#include "spev/error.hpp"
#include "spev/pipeline.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

spev::annot::HttpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

struct Options {
    std::string config;
    std::string camera;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string flip;
    std::string denoise;
    std::string estimator;
    std::string manifest;
};

spev::PipelineConfig load(const Options& o) {
    auto config = spev::load_config(o.config);
    std::string patch = "{";
    auto add = [&](const std::string& kv) { patch += (patch.size() > 1 ? "," : "") + kv; };
    if (!o.flip.empty()) add(fmt::format(R"("flip":{{"enabled":{}}})", o.flip == "on"));
    if (!o.denoise.empty()) add(fmt::format(R"("denoise":{})", o.denoise == "on"));
    if (!o.estimator.empty()) add(fmt::format(R"("estimator":"{}")", o.estimator));
    patch += "}";
    if (patch != "{}") config = spev::merge_config(config, patch);
    if (!o.out.empty()) config.output_dir = o.out;
    return config;
}

std::vector<std::string> selected_cameras(const spev::PipelineConfig& config, const Options& o) {
    if (!o.camera.empty()) {
        config.camera(o.camera);
        return {o.camera};
    }
    std::vector<std::string> ids;
    for (const auto& c : config.cameras) ids.push_back(c.camera_id);
    return ids;
}

int run(const std::string& command, const Options& o) {
    if (command == "synth") {
        const auto config = spev::load_config(o.config);
        const auto out = o.out.empty() ? config.output_dir : std::filesystem::path(o.out);
        const auto stats = spev::run_synth(config, out, o.seed);
        fmt::print("wrote {} frames; config {}\n", stats.frames, stats.config_path.string());
        return 0;
    }
    const auto config = load(o);
    if (command == "calibrate") {
        for (const auto& id : selected_cameras(config, o)) {
            const auto c = spev::run_calibrate(config, id);
            fmt::print("{}: v_h={:.6g} lambda15={:.6g} lambda9={:.6g} roi_pixels={}\n", id, c.geom15.v_h,
                       c.geom15.lambda, c.geom9.lambda, c.roi.count());
        }
    } else if (command == "baseline") {
        for (const auto& id : selected_cameras(config, o)) {
            const auto b = spev::run_baseline(config, id);
            fmt::print("{}: H_clear={:.6g} used={} rejected={}\n", id, b.h_clear, b.n_used, b.n_rejected);
        }
    } else if (command == "estimate") {
        std::optional<std::filesystem::path> manifest;
        if (!o.manifest.empty()) manifest = o.manifest;
        for (const auto& id : selected_cameras(config, o)) {
            const auto s = spev::run_estimate(config, id, manifest);
            fmt::print("{}: {} frames, {} errors -> {}\n", id, s.frames, s.errors, s.csv.string());
        }
    } else if (command == "fit") {
        const auto model = spev::run_fit(config);
        fmt::print("fitted {} pieces -> {}\n", model.pieces.size(), (config.output_dir / "model.json").string());
    } else if (command == "eval") {
        for (const auto& [id, report] : spev::run_eval(config)) {
            fmt::print("{}: n={} |APE|<10%: {:.4g} |APE|<20%: {:.4g} mean|APE|={:.4g}%\n", id, report.summary.n,
                       report.summary.frac_under_10pct, report.summary.frac_under_20pct, report.summary.mean_abs_ape);
        }
    } else if (command == "serve") {
        const char* data_dir = std::getenv("ANNOT_DATA_DIR");
        const char* port_env = std::getenv("ANNOT_PORT");
        const std::filesystem::path dir = data_dir ? data_dir : "annot-data";
        const int port = port_env ? std::stoi(port_env) : 8080;
        auto store = std::make_shared<spev::annot::AnnotationStore>(dir / "annotations.jsonl");
        spev::annot::AnnotationService service(spev::annot::cameras_from_config(config), store);
        spev::annot::HttpServer server(service);
        const int bound = server.bind("0.0.0.0", port);
        if (bound < 0) {
            std::cerr << fmt::format("cannot bind port {}\n", port);
            return kExitInternal;
        }
        g_server = &server;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        fmt::print("serving annotations on port {} (data in {})\n", bound, dir.string());
        std::fflush(stdout);
        server.serve();
        g_server = nullptr;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Expressway visibility estimation from image entropy"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub, bool camera) {
        sub->add_option("--config", o.config, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "Output directory (overrides output_dir)");
        sub->add_option("--flip", o.flip, "Mirror flip of the entropy ratio")->check(CLI::IsMember({"on", "off"}));
        sub->add_option("--denoise", o.denoise, "3x3 median pre-filter")->check(CLI::IsMember({"on", "off"}));
        if (camera) sub->add_option("--camera", o.camera, "Restrict to one camera");
    };
    auto* calibrate = app.add_subcommand("calibrate", "Detect the ROI and calibrate geometry per camera");
    add_common(calibrate, true);
    auto* baseline = app.add_subcommand("baseline", "Clear-day entropy baseline per camera");
    add_common(baseline, true);
    auto* estimate = app.add_subcommand("estimate", "Estimate visibility over a camera's frames");
    add_common(estimate, true);
    estimate->add_option("--estimator", o.estimator, "Estimator")->check(CLI::IsMember({"spev", "contrast", "both"}));
    estimate->add_option("--manifest", o.manifest, "Frame manifest overriding the config")->check(CLI::ExistingFile);
    auto* fit = app.add_subcommand("fit", "Fit the piecewise model on the training cameras");
    add_common(fit, false);
    auto* eval = app.add_subcommand("eval", "Leave-one-camera-out evaluation");
    add_common(eval, false);
    auto* synth = app.add_subcommand("synth", "Generate a synthetic foggy corpus");
    synth->add_option("--config", o.config, "Config with a synth block")->required()->check(CLI::ExistingFile);
    synth->add_option("--out", o.out, "Corpus directory");
    synth->add_option("--seed", o.seed, "Random seed");
    auto* serve = app.add_subcommand("serve", "Annotation HTTP service (ANNOT_PORT, ANNOT_DATA_DIR)");
    add_common(serve, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    const auto* sub = app.get_subcommands().front();
    try {
        return run(sub->get_name(), o);
    } catch (const spev::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}
