#include "spev/annot/service.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iterator>
#include <random>
#include <set>
#include <sstream>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "spev/csv.hpp"
#include "spev/error.hpp"
#include "spev/manifest.hpp"
#include "spev/pipeline.hpp"

namespace spev::annot {

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    return fmt::format("{:%Y-%m-%dT%H:%M:%S}.{:03d}Z", fmt::gmtime(std::chrono::system_clock::to_time_t(now)), ms);
}

std::string random_id() {
    thread_local std::mt19937_64 rng{std::random_device{}()};
    return fmt::format("{:016x}{:016x}", rng(), rng());
}

AnnotationService::AnnotationService(std::vector<AnnotCamera> cameras, std::shared_ptr<AnnotationStore> store,
                                     Clock clock, IdSource ids)
    : store_(std::move(store)), clock_(clock ? std::move(clock) : Clock(utc_now)),
      ids_(ids ? std::move(ids) : IdSource(random_id)) {
    for (auto& c : cameras) {
        c.geom15.validate();
        c.geom9.validate();
        auto id = c.camera_id;
        cameras_.emplace(std::move(id), std::move(c));
    }
}

const AnnotCamera& AnnotationService::camera(const std::string& camera_id) const {
    const auto it = cameras_.find(camera_id);
    if (it == cameras_.end()) fail(Errc::UnknownCamera, fmt::format("unknown camera '{}'", camera_id));
    return it->second;
}

Session AnnotationService::create_session(const std::string& camera_id, const std::vector<std::int64_t>& frames,
                                          const std::string& subject_id) {
    const auto& cam = camera(camera_id);
    if (frames.empty()) fail(Errc::EmptyFrameSelection, "a session needs at least one frame");
    require(!subject_id.empty(), Errc::InvalidArgument, "subject_id must not be empty");
    std::set<std::int64_t> seen;
    for (auto f : frames) {
        if (!cam.frames.count(f)) fail(Errc::UnknownFrame, fmt::format("camera '{}' has no frame {}", camera_id, f));
        if (!seen.insert(f).second) fail(Errc::InvalidArgument, fmt::format("frame {} listed twice", f));
    }
    Session s{ids_(), camera_id, subject_id, frames, kRequiredRepetitions, clock_()};
    store_->create_session(s);
    return s;
}

std::shared_ptr<const SessionState> AnnotationService::session(const std::string& session_id) const {
    const auto snap = store_->snapshot();
    const auto it = snap->find(session_id);
    if (it == snap->end()) fail(Errc::UnknownSession, fmt::format("no session '{}'", session_id));
    return it->second;
}

SubmitResult AnnotationService::submit(const std::string& session_id, std::int64_t frame_index, int repetition,
                                       double v_v) {
    const auto state = session(session_id);
    const auto& cam = camera(state->session.camera_id);
    if (repetition < 1 || repetition > state->session.required_repetitions) {
        fail(Errc::InvalidRepetition,
             fmt::format("repetition {} outside 1..{}", repetition, state->session.required_repetitions));
    }
    const double v_h = std::max(cam.geom15.v_h, cam.geom9.v_h);
    if (!(v_v > v_h)) fail(Errc::BelowHorizon, fmt::format("row {} is not below the horizon {}", v_v, v_h));

    SubmitResult out;
    out.record = store_->append({session_id, frame_index, state->session.subject_id, repetition, v_v, clock_()});

    // Stats from the snapshot that contains our record.
    const auto latest = session(session_id);
    const auto records = latest->frame_records(frame_index);
    out.n_repetitions = records.size();
    out.median_v_v = median_vv(records);
    out.visibility = subjective_visibility(out.median_v_v, cam.geom15, cam.geom9);
    out.visibility.frame_index = frame_index;
    out.visibility.n_annotations = records.size();
    out.status = latest->status();
    return out;
}

std::pair<std::vector<std::uint8_t>, std::string> AnnotationService::frame_image(const std::string& camera_id,
                                                                                 std::int64_t frame_index) const {
    const auto& cam = camera(camera_id);
    const auto it = cam.frames.find(frame_index);
    if (it == cam.frames.end()) fail(Errc::UnknownFrame, fmt::format("camera '{}' has no frame {}", camera_id, frame_index));
    std::ifstream in(it->second, std::ios::binary);
    if (!in) fail(Errc::UnreadableFile, fmt::format("cannot open '{}'", it->second.string()));
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto ext = it->second.extension().string();
    const std::string mime = (ext == ".pgm" || ext == ".PGM") ? "image/x-portable-graymap" : "image/png";
    return {std::move(bytes), mime};
}

std::string AnnotationService::export_ground_truth(const std::string& camera_id) const {
    const auto& cam = camera(camera_id);
    const auto snap = store_->snapshot();

    // frame -> subject -> rows over that subject's complete sessions
    std::map<std::int64_t, std::map<std::string, std::vector<double>>> marks;
    bool any = false;
    for (const auto& [id, state] : *snap) {
        if (state->session.camera_id != camera_id || state->status() != SessionStatus::Complete) continue;
        any = true;
        for (const auto& r : state->records) marks[r.frame_index][r.subject_id].push_back(r.v_v);
    }
    if (!any) fail(Errc::NoCompleteSessions, fmt::format("camera '{}' has no complete session", camera_id));

    std::ostringstream out;
    CsvWriter w(out);
    w.row({"frame_index", "camera_id", "v_v_agg", "vis_15", "vis_9", "vis_mean", "n_subjects"});
    for (const auto& [frame, subjects] : marks) {
        std::vector<double> medians;
        for (const auto& [subject, rows] : subjects) medians.push_back(median_vv(std::span<const double>(rows)));
        const auto vis = aggregate_subjects(medians, cam.geom15, cam.geom9);
        w.row({std::to_string(frame), camera_id, format_number(vis.v_v), format_number(vis.vis_15),
               format_number(vis.vis_9), format_number(vis.vis_mean), std::to_string(vis.n_annotations)});
    }
    return out.str();
}

std::vector<AnnotCamera> cameras_from_config(const PipelineConfig& config) {
    std::vector<AnnotCamera> out;
    for (const auto& cc : config.cameras) {
        AnnotCamera cam;
        cam.camera_id = cc.camera_id;
        if (std::filesystem::exists(config.camera_dir(cc.camera_id) / "geometry.json")) {
            const auto calib = load_calibration(config, cc.camera_id);
            cam.geom15 = calib.geom15;
            cam.geom9 = calib.geom9;
        } else if (cc.v_h) {
            cam.geom15 = make_geometry(cc.far_row_15, cc.near_row, *cc.v_h, cc.d15);
            cam.geom9 = make_geometry(cc.far_row_9, cc.near_row, *cc.v_h, cc.d9);
        } else {
            continue;
        }
        if (!cc.manifest.empty()) {
            for (const auto& e : load_manifest(cc.manifest).entries) cam.frames[e.frame_index] = e.path;
        }
        out.push_back(std::move(cam));
    }
    return out;
}

}  // namespace spev::annot
