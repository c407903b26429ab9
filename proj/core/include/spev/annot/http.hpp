#pragma once

// JSON-over-HTTP binding of AnnotationService.
//
//   POST /sessions                      {camera_id, subject_id, frames}
//   GET  /sessions/{id}
//   GET  /frames/{camera}/{index}       image bytes
//   POST /sessions/{id}/annotations     {frame_index, repetition, v_v}
//   GET  /export/{camera}               text/csv
//
// Errors are {"error": <code>, "message": <text>} with 400, 404 or 409.

#include <memory>
#include <string>

#include "spev/annot/service.hpp"
#include "spev/error.hpp"

namespace spev::annot {

/// HTTP status for a service error code.
int http_status(Errc code);

class HttpServer {
public:
    explicit HttpServer(AnnotationService& service);
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds to `port` (0 picks a free one) and returns the bound port, or
    /// -1 on failure.
    int bind(const std::string& host, int port);

    /// Serves until stop(); call after bind().
    bool serve();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace spev::annot
