#pragma once

// Append-only annotation log. Writes are serialized and mirrored to a
// JSON-lines file; readers take an immutable snapshot and never block on
// other readers. Replaying the file reproduces the in-memory state.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "spev/subjective.hpp"

namespace spev::annot {

enum class SessionStatus { Open, Complete };

struct Session {
    std::string session_id;
    std::string camera_id;
    std::string subject_id;
    std::vector<std::int64_t> frames;
    int required_repetitions = kRequiredRepetitions;
    std::string created_at;

    bool operator==(const Session&) const = default;
};

struct SessionState {
    Session session;
    std::vector<AnnotationRecord> records;  ///< append order

    std::size_t repetitions(std::int64_t frame_index) const;
    SessionStatus status() const;
    std::vector<AnnotationRecord> frame_records(std::int64_t frame_index) const;

    bool operator==(const SessionState&) const = default;
};

using SessionMap = std::map<std::string, std::shared_ptr<const SessionState>>;

class AnnotationStore {
public:
    /// In-memory store without persistence.
    AnnotationStore() = default;

    /// Opens (and replays) `log_path`, creating it when missing. Throws
    /// MalformedConfig on a corrupt log, UnreadableFile when it cannot be
    /// opened for append.
    explicit AnnotationStore(const std::filesystem::path& log_path);

    AnnotationStore(const AnnotationStore&) = delete;
    AnnotationStore& operator=(const AnnotationStore&) = delete;

    /// Current state; safe to keep and read while writers continue.
    std::shared_ptr<const SessionMap> snapshot() const;

    /// Throws InvalidArgument when the id already exists.
    void create_session(const Session& session);

    /// Appends after checking, under the writer lock: session exists
    /// (UnknownSession), is open (SessionClosed), lists the frame
    /// (UnknownFrame), repetition in range (InvalidRepetition) and unused
    /// (DuplicateRepetition).
    AnnotationRecord append(const AnnotationRecord& record);

    const std::optional<std::filesystem::path>& log_path() const noexcept { return log_path_; }

private:
    // Validated successor states; published only after the log write.
    std::shared_ptr<const SessionMap> with_session(const Session& session) const;
    std::shared_ptr<const SessionMap> with_record(const AnnotationRecord& record) const;
    void publish(std::shared_ptr<const SessionMap> next);
    void persist(const std::string& line);

    std::optional<std::filesystem::path> log_path_;
    std::ofstream log_;
    std::mutex write_mutex_;
    mutable std::mutex snapshot_mutex_;
    std::shared_ptr<const SessionMap> state_ = std::make_shared<const SessionMap>();
};

}  // namespace spev::annot
