#include "spev/annot/store.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <json.hpp>

#include "spev/error.hpp"

namespace spev::annot {

using nlohmann::json;

namespace {

json session_json(const Session& s) {
    return {{"type", "session"},          {"session_id", s.session_id}, {"camera_id", s.camera_id},
            {"subject_id", s.subject_id}, {"frames", s.frames},         {"required_repetitions", s.required_repetitions},
            {"created_at", s.created_at}};
}

json record_json(const AnnotationRecord& r) {
    return {{"type", "annotation"},       {"session_id", r.session_id}, {"frame_index", r.frame_index},
            {"subject_id", r.subject_id}, {"repetition", r.repetition}, {"v_v", r.v_v},
            {"created_at", r.created_at}};
}

}  // namespace

std::size_t SessionState::repetitions(std::int64_t frame_index) const {
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(),
                                                  [&](const auto& r) { return r.frame_index == frame_index; }));
}

SessionStatus SessionState::status() const {
    for (auto f : session.frames) {
        if (repetitions(f) < static_cast<std::size_t>(session.required_repetitions)) return SessionStatus::Open;
    }
    return SessionStatus::Complete;
}

std::vector<AnnotationRecord> SessionState::frame_records(std::int64_t frame_index) const {
    std::vector<AnnotationRecord> out;
    for (const auto& r : records)
        if (r.frame_index == frame_index) out.push_back(r);
    return out;
}

AnnotationStore::AnnotationStore(const std::filesystem::path& log_path) : log_path_(log_path) {
    if (log_path.has_parent_path()) std::filesystem::create_directories(log_path.parent_path());
    if (std::ifstream in{log_path}) {
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            try {
                const auto j = json::parse(line);
                const auto type = j.at("type").get<std::string>();
                if (type == "session") {
                    publish(with_session({j.at("session_id").get<std::string>(), j.at("camera_id").get<std::string>(),
                                   j.at("subject_id").get<std::string>(), j.at("frames").get<std::vector<std::int64_t>>(),
                                   j.at("required_repetitions").get<int>(), j.at("created_at").get<std::string>()}));
                } else if (type == "annotation") {
                    publish(with_record({j.at("session_id").get<std::string>(), j.at("frame_index").get<std::int64_t>(),
                                  j.at("subject_id").get<std::string>(), j.at("repetition").get<int>(),
                                  j.at("v_v").get<double>(), j.at("created_at").get<std::string>()}));
                } else {
                    fail(Errc::MalformedConfig, fmt::format("unknown event type '{}'", type));
                }
            } catch (const json::exception& e) {
                fail(Errc::MalformedConfig, fmt::format("{}:{}: {}", log_path.string(), line_no, e.what()));
            } catch (const Error& e) {
                fail(Errc::MalformedConfig, fmt::format("{}:{}: {}", log_path.string(), line_no, e.what()));
            }
        }
    }
    log_.open(log_path, std::ios::app);
    if (!log_) fail(Errc::UnreadableFile, fmt::format("cannot append to '{}'", log_path.string()));
}

std::shared_ptr<const SessionMap> AnnotationStore::snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return state_;
}

std::shared_ptr<const SessionMap> AnnotationStore::with_session(const Session& session) const {
    const auto current = snapshot();
    if (current->count(session.session_id)) {
        fail(Errc::InvalidArgument, fmt::format("session '{}' already exists", session.session_id));
    }
    auto next = std::make_shared<SessionMap>(*current);
    (*next)[session.session_id] = std::make_shared<const SessionState>(SessionState{session, {}});
    return next;
}

std::shared_ptr<const SessionMap> AnnotationStore::with_record(const AnnotationRecord& record) const {
    const auto current = snapshot();
    const auto it = current->find(record.session_id);
    if (it == current->end()) fail(Errc::UnknownSession, fmt::format("no session '{}'", record.session_id));
    const auto& state = *it->second;
    if (state.status() == SessionStatus::Complete) {
        fail(Errc::SessionClosed, fmt::format("session '{}' is complete", record.session_id));
    }
    const auto& frames = state.session.frames;
    if (std::find(frames.begin(), frames.end(), record.frame_index) == frames.end()) {
        fail(Errc::UnknownFrame,
             fmt::format("frame {} is not part of session '{}'", record.frame_index, record.session_id));
    }
    if (record.repetition < 1 || record.repetition > state.session.required_repetitions) {
        fail(Errc::InvalidRepetition, fmt::format("repetition {} outside 1..{}", record.repetition,
                                                  state.session.required_repetitions));
    }
    for (const auto& r : state.records) {
        if (r.frame_index == record.frame_index && r.repetition == record.repetition) {
            fail(Errc::DuplicateRepetition, fmt::format("frame {} repetition {} already recorded in session '{}'",
                                                        record.frame_index, record.repetition, record.session_id));
        }
    }
    auto updated = std::make_shared<SessionState>(state);
    updated->records.push_back(record);
    auto next = std::make_shared<SessionMap>(*current);
    (*next)[record.session_id] = std::move(updated);
    return next;
}

void AnnotationStore::publish(std::shared_ptr<const SessionMap> next) {
    std::lock_guard lock(snapshot_mutex_);
    state_ = std::move(next);
}

void AnnotationStore::persist(const std::string& line) {
    if (!log_path_) return;
    log_ << line << '\n';
    log_.flush();
    if (!log_) fail(Errc::UnreadableFile, fmt::format("write to '{}' failed", log_path_->string()));
}

void AnnotationStore::create_session(const Session& session) {
    std::lock_guard lock(write_mutex_);
    auto next = with_session(session);
    persist(session_json(session).dump());
    publish(std::move(next));
}

AnnotationRecord AnnotationStore::append(const AnnotationRecord& record) {
    std::lock_guard lock(write_mutex_);
    auto next = with_record(record);
    persist(record_json(record).dump());
    publish(std::move(next));
    return record;
}

}  // namespace spev::annot
