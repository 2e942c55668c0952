#ifndef ATTRSCOPE_HTTP_SERVICE_HPP
#define ATTRSCOPE_HTTP_SERVICE_HPP

#include <memory>
#include <string>

#include "attrscope/error.hpp"
#include "attrscope/explorer.hpp"

namespace attrscope {

/// HTTP status for an error kind: client errors 400, NotFound 404, Conflict 409.
int http_status_for(ErrorKind kind);

/**
 * JSON-over-HTTP front end for an Explorer.
 *
 * Routes (all bodies JSON; errors are {"error": kind, "detail": message}):
 *   GET    /health, /stats
 *   GET    /datasets                         POST /datasets
 *   GET    /datasets/{id}                    GET  /datasets/{id}/metrics
 *   POST   /datasets/{id}/embeddings         GET  /datasets/{id}/embeddings[/{job}]
 *   GET    /datasets/{id}/records/{rid}      GET  /datasets/{id}/glyphs
 *   GET    /datasets/{id}/images/{path}
 *   POST   /sessions                         GET|PATCH /sessions/{sid}
 *   POST   /sessions/{sid}/selections        GET  /sessions/{sid}/selections
 *   GET|DELETE /sessions/{sid}/selections/{sel}
 *   GET    /sessions/{sid}/selections/{sel}/metrics
 */
class HttpService {
public:
    explicit HttpService(ExplorerOptions options = {});
    ~HttpService();
    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    Explorer& explorer() noexcept;

    /// Binds to a free port on host and returns it. Throws IoError on failure.
    int bind_to_any_port(const std::string& host = "127.0.0.1");
    /// Throws IoError when the port cannot be bound.
    void bind(const std::string& host, int port);
    /// Serves on the calling thread until stop().
    void listen();
    /// Serves on a background thread; returns once accepting.
    void start();
    void stop();
    int port() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace attrscope

#endif
