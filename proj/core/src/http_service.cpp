#include "attrscope/http_service.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "attrscope/error.hpp"

namespace attrscope {

namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view kind, std::string_view detail) {
    send_json(res, status, json{{"error", kind}, {"detail", detail}});
}

template <class F>
httplib::Server::Handler guarded(F f) {
    return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const Error& e) {
            send_error(res, http_status_for(e.kind()), to_string(e.kind()), e.what());
        } catch (const json::exception& e) {
            send_error(res, 400, to_string(ErrorKind::Parse), e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "Internal", e.what());
        }
    };
}

json body_json(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("request body is not valid JSON: ") + e.what());
    }
}

std::optional<std::string> query(const httplib::Request& req, const char* key) {
    if (!req.has_param(key)) return std::nullopt;
    return req.get_param_value(key);
}

double parse_threshold(const std::optional<std::string>& text, double fallback) {
    if (!text) return fallback;
    std::size_t used = 0;
    double t = 0.0;
    try {
        t = std::stod(*text, &used);
    } catch (const std::exception&) {
        throw ArgumentError("threshold must be a number");
    }
    if (used != text->size() || !(t >= 0.0 && t <= 1.0)) throw ArgumentError("threshold must lie in [0, 1]");
    return t;
}

std::vector<std::size_t> parse_filter(const Dataset& ds, const std::optional<std::string>& text) {
    if (!text) return all_attributes(ds);
    return parse_attribute_list(ds.schema(), *text);
}

std::vector<Point2> parse_points(const json& j, std::string_view what) {
    if (!j.is_array()) throw ArgumentError(std::string(what) + " must be a list of [x, y] pairs");
    std::vector<Point2> pts;
    for (const auto& p : j) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
            throw ArgumentError(std::string(what) + " must be a list of [x, y] pairs");
        }
        pts.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return pts;
}

SelectionRequest selection_request(const json& body) {
    if (!body.is_object()) throw ArgumentError("selection request must be a JSON object");
    SelectionRequest r;
    const bool has_ids = body.contains("record_ids");
    const bool has_poly = body.contains("polygon");
    const bool has_rect = body.contains("rectangle");
    if (int(has_ids) + int(has_poly) + int(has_rect) != 1) {
        throw ArgumentError("give exactly one of record_ids, polygon, rectangle");
    }
    if (body.contains("space")) r.space = parse_space(body["space"].get<std::string>());
    if (has_ids) {
        if (!body["record_ids"].is_array()) throw ArgumentError("record_ids must be a list of strings");
        r.source = SelectionSource::Ids;
        for (const auto& id : body["record_ids"]) {
            if (!id.is_string()) throw ArgumentError("record_ids must be a list of strings");
            r.record_ids.push_back(id.get<std::string>());
        }
    } else if (has_poly) {
        r.source = SelectionSource::Lasso;
        r.polygon = parse_points(body["polygon"], "polygon");
    } else {
        r.source = SelectionSource::Rectangle;
        r.polygon = parse_points(body["rectangle"], "rectangle");
    }
    if (r.source != SelectionSource::Ids && !r.space) throw ArgumentError("polygon selections need a space");
    return r;
}

std::string content_type_for(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".png") return "image/png";
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".gif") return "image/gif";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".tif" || ext == ".tiff") return "image/tiff";
    return "application/octet-stream";
}

json dataset_summary(const std::string& id, const Dataset& ds) {
    return {
        {"id", id},
        {"record_count", ds.size()},
        {"fea_dim", ds.fea_dim()},
        {"attributes", ds.schema().names},
        {"colors", ds.schema().colors},
        {"content_hash", ds.content_hash()},
    };
}

} // namespace

int http_status_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Parse:
    case ErrorKind::Schema:
    case ErrorKind::Io:
    case ErrorKind::Argument:
    case ErrorKind::DegenerateInput: return 400;
    case ErrorKind::NotFound: return 404;
    case ErrorKind::Conflict: return 409;
    case ErrorKind::Cancelled: return 503;
    }
    return 500;
}

struct HttpService::Impl {
    explicit Impl(ExplorerOptions options) : explorer(std::move(options)) { routes(); }

    Explorer explorer;
    httplib::Server server;
    std::thread thread;
    int port = -1;

    void routes();
};

void HttpService::Impl::routes() {
    auto& ex = explorer;
    auto& svr = server;

    svr.Get("/health", guarded([](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"status", "ok"}});
    }));

    svr.Get("/stats", guarded([&ex](const httplib::Request&, httplib::Response& res) {
        const auto s = ex.stats();
        send_json(res, 200, {{"embedding_runs", s.runs}, {"cache_hits", s.cache_hits}});
    }));

    // Datasets

    svr.Get("/datasets", guarded([&ex](const httplib::Request&, httplib::Response& res) {
        auto list = json::array();
        for (const auto& id : ex.dataset_ids()) list.push_back(dataset_summary(id, *ex.dataset(id)));
        send_json(res, 200, list);
    }));

    svr.Post("/datasets", guarded([&ex](const httplib::Request& req, httplib::Response& res) {
        const auto added = ex.add_dataset_from_json(body_json(req));
        auto body = dataset_summary(added.id, *ex.dataset(added.id));
        body["created"] = added.created;
        send_json(res, added.created ? 201 : 200, body);
    }));

    svr.Get(R"(/datasets/([^/]+))", guarded([&ex](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        send_json(res, 200, dataset_summary(id, *ex.dataset(id)));
    }));

    svr.Get(R"(/datasets/([^/]+)/metrics)", guarded([&ex](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const auto ds = ex.dataset(id);
        send_json(res, 200,
                  ex.dataset_metrics(id, parse_filter(*ds, query(req, "attributes")),
                                     parse_threshold(query(req, "threshold"), kDefaultThreshold)));
    }));

    // Embeddings

    svr.Post(R"(/datasets/([^/]+)/embeddings)", guarded([&ex](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const auto body = body_json(req);
        if (!body.is_object() || !body.contains("space") || !body["space"].is_string()) {
            throw ArgumentError("request needs a \"space\" of ACT, PRD or FEA");
        }
        const auto space = parse_space(body["space"].get<std::string>());
        const auto ds = ex.dataset(id);
        auto config = default_config(*ds, space);
        if (auto it = body.find("config"); it != body.end() && !it->is_null()) {
            config = tsne_config_from_json(*it, config);
        }
        const auto view = ex.submit_embedding(id, space, config);
        const bool done = view.status == JobStatus::Done;
        send_json(res, done ? 200 : 202, to_json(view, done));
    }));

    svr.Get(R"(/datasets/([^/]+)/embeddings)", guarded([&ex](const httplib::Request& req, httplib::Response& res) {
        auto list = json::array();
        for (const auto& v : ex.jobs(req.matches[1])) list.push_back(to_json(v, false));
        send_json(res, 200, list);
    }));

    svr.Get(R"(/datasets/([^/]+)/embeddings/([^/]+))",
            guarded([&ex](const httplib::Request& req, httplib::Response& res) {
                const auto view = ex.job(req.matches[1], req.matches[2]);
                send_json(res, 200, to_json(view, true));
            }));

    // Records, glyphs, images

    svr.Get(R"(/datasets/([^/]+)/records/([^/]+))",
            guarded([&ex](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 200,
                          ex.record_detail(req.matches[1], req.matches[2],
                                           parse_threshold(query(req, "threshold"), kDefaultThreshold)));
            }));

    svr.Get(R"(/datasets/([^/]+)/glyphs)", guarded([&ex](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const auto ds = ex.dataset(id);
        const auto space_text = query(req, "space");
        if (!space_text) throw ArgumentError("query parameter \"space\" is required");

        FlowerOptions opts;
        if (auto m = query(req, "mode")) opts.mode = parse_flower_mode(*m);
        if (auto d = query(req, "distance")) opts.distance = parse_distance_kind(*d);
        opts.threshold = parse_threshold(query(req, "threshold"), kDefaultThreshold);
        if (auto r = query(req, "radius")) {
            try {
                opts.radius = std::stod(*r);
            } catch (const std::exception&) {
                throw ArgumentError("radius must be a number");
            }
            if (!(opts.radius > 0.0)) throw ArgumentError("radius must be positive");
        }
        const auto glyphs =
            ex.glyphs(id, parse_space(*space_text), parse_filter(*ds, query(req, "attributes")), opts, query(req, "job"));
        send_json(res, 200, glyphs);
    }));

    svr.Get(R"(/datasets/([^/]+)/images/(.+))", guarded([&ex](const httplib::Request& req, httplib::Response& res) {
        const auto rel = httplib::detail::decode_url(req.matches[2], false);
        const auto path = ex.image_file(req.matches[1], rel);
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot read image " + rel);
        std::ostringstream buf;
        buf << in.rdbuf();
        res.status = 200;
        res.set_content(buf.str(), content_type_for(path));
    }));

    // Sessions

    svr.Post("/sessions", guarded([&ex](const httplib::Request& req, httplib::Response& res) {
        const auto body = body_json(req);
        if (!body.is_object() || !body.contains("dataset") || !body["dataset"].is_string()) {
            throw ArgumentError("request needs a \"dataset\" id");
        }
        auto session = ex.create_session(body["dataset"].get<std::string>());
        if (auto it = body.find("settings"); it != body.end()) session = ex.update_session(session.id, *it);
        send_json(res, 201, session);
    }));

    svr.Get(R"(/sessions/([^/]+))", guarded([&ex](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, ex.session(req.matches[1]));
    }));

    svr.Patch(R"(/sessions/([^/]+))", guarded([&ex](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, ex.update_session(req.matches[1], body_json(req)));
    }));

    svr.Post(R"(/sessions/([^/]+)/selections)", guarded([&ex](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 201, ex.create_selection(req.matches[1], selection_request(body_json(req))));
    }));

    svr.Get(R"(/sessions/([^/]+)/selections)", guarded([&ex](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, ex.selections(req.matches[1]));
    }));

    svr.Get(R"(/sessions/([^/]+)/selections/([^/]+))",
            guarded([&ex](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 200, ex.selection(req.matches[1], req.matches[2]));
            }));

    svr.Delete(R"(/sessions/([^/]+)/selections/([^/]+))",
               guarded([&ex](const httplib::Request& req, httplib::Response& res) {
                   ex.delete_selection(req.matches[1], req.matches[2]);
                   res.status = 204;
               }));

    svr.Get(R"(/sessions/([^/]+)/selections/([^/]+)/metrics)",
            guarded([&ex](const httplib::Request& req, httplib::Response& res) {
                const std::string sid = req.matches[1];
                const auto s = ex.session(sid);
                const auto ds = ex.dataset(s.dataset_id);
                std::optional<std::vector<std::size_t>> filter;
                if (auto a = query(req, "attributes")) filter = parse_attribute_list(ds->schema(), *a);
                std::optional<double> threshold;
                if (auto t = query(req, "threshold")) threshold = parse_threshold(t, kDefaultThreshold);
                send_json(res, 200, ex.selection_metrics(sid, req.matches[2], filter, threshold));
            }));

    svr.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.status == 404 && res.body.empty()) send_error(res, 404, to_string(ErrorKind::NotFound), "no such route");
    });
}

HttpService::HttpService(ExplorerOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

HttpService::~HttpService() { stop(); }

Explorer& HttpService::explorer() noexcept { return impl_->explorer; }

int HttpService::bind_to_any_port(const std::string& host) {
    const int port = impl_->server.bind_to_any_port(host);
    if (port < 0) throw IoError("cannot bind an HTTP port on " + host);
    impl_->port = port;
    return port;
}

void HttpService::bind(const std::string& host, int port) {
    if (!impl_->server.bind_to_port(host, port)) {
        throw IoError("cannot bind " + host + ":" + std::to_string(port));
    }
    impl_->port = port;
}

void HttpService::listen() {
    if (impl_->port < 0) throw ArgumentError("bind before listening");
    impl_->server.listen_after_bind();
}

void HttpService::start() {
    if (impl_->port < 0) throw ArgumentError("bind before starting");
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void HttpService::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

int HttpService::port() const noexcept { return impl_->port; }

} // namespace attrscope
