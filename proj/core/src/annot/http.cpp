#include "spev/annot/http.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "spev/error.hpp"

namespace spev::annot {

using nlohmann::json;

int http_status(Errc code) {
    switch (code) {
        case Errc::UnknownCamera:
        case Errc::UnknownSession:
        case Errc::UnknownFrame:
            return 404;
        case Errc::DuplicateRepetition:
        case Errc::SessionClosed:
        case Errc::NoCompleteSessions:
            return 409;
        case Errc::UnreadableFile:
            return 500;
        default:
            return 400;
    }
}

namespace {

const char* status_name(SessionStatus s) { return s == SessionStatus::Complete ? "complete" : "open"; }

json session_json(const SessionState& st) {
    json progress = json::object();
    for (auto f : st.session.frames) progress[std::to_string(f)] = st.repetitions(f);
    json records = json::array();
    for (const auto& r : st.records) {
        records.push_back({{"frame_index", r.frame_index},
                           {"repetition", r.repetition},
                           {"v_v", r.v_v},
                           {"created_at", r.created_at}});
    }
    return {{"session_id", st.session.session_id},
            {"camera_id", st.session.camera_id},
            {"subject_id", st.session.subject_id},
            {"frames", st.session.frames},
            {"required_repetitions", st.session.required_repetitions},
            {"status", status_name(st.status())},
            {"created_at", st.session.created_at},
            {"progress", progress},
            {"annotations", records}};
}

json submit_json(const SubmitResult& r) {
    return {{"session_id", r.record.session_id},
            {"frame_index", r.record.frame_index},
            {"subject_id", r.record.subject_id},
            {"repetition", r.record.repetition},
            {"v_v", r.record.v_v},
            {"created_at", r.record.created_at},
            {"n_repetitions", r.n_repetitions},
            {"median_v_v", r.median_v_v},
            {"vis_15", r.visibility.vis_15},
            {"vis_9", r.visibility.vis_9},
            {"vis_mean", r.visibility.vis_mean},
            {"session_status", status_name(r.status)}};
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    send_json(res, status, {{"error", code}, {"message", message}});
}

template <typename Handler>
auto guarded(Handler handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
        try {
            handler(req, res);
        } catch (const Error& e) {
            send_error(res, http_status(e.code()), std::string(to_string(e.code())), e.what());
        } catch (const json::exception& e) {
            send_error(res, 400, "MalformedRequest", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "Internal", e.what());
        }
    };
}

std::int64_t parse_index(const std::string& s) {
    try {
        std::size_t used = 0;
        const auto v = std::stoll(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    fail(Errc::UnknownFrame, fmt::format("'{}' is not a frame index", s));
}

}  // namespace

struct HttpServer::Impl {
    AnnotationService& service;
    httplib::Server server;

    explicit Impl(AnnotationService& s) : service(s) {
        server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = json::parse(req.body);
            const auto frames = body.value("frames", std::vector<std::int64_t>{});
            const auto session = service.create_session(body.at("camera_id").get<std::string>(), frames,
                                                        body.at("subject_id").get<std::string>());
            send_json(res, 201, session_json(*service.session(session.session_id)));
        }));
        server.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, session_json(*service.session(req.matches[1])));
        }));
        server.Post(R"(/sessions/([^/]+)/annotations)",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto body = json::parse(req.body);
                        const auto result =
                            service.submit(req.matches[1], body.at("frame_index").get<std::int64_t>(),
                                           body.at("repetition").get<int>(), body.at("v_v").get<double>());
                        send_json(res, 201, submit_json(result));
                    }));
        server.Get(R"(/frames/([^/]+)/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto [bytes, mime] = service.frame_image(req.matches[1], parse_index(req.matches[2]));
            res.status = 200;
            res.set_content(std::string(bytes.begin(), bytes.end()), mime);
        }));
        server.Get(R"(/export/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            res.status = 200;
            res.set_content(service.export_ground_truth(req.matches[1]), "text/csv");
        }));
    }
};

HttpServer::HttpServer(AnnotationService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::serve() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace spev::annot
