#include <doctest.h>

#include <future>
#include <httplib.h>

#include "attrscope/error.hpp"
#include "attrscope/http_service.hpp"
#include "helpers.hpp"

using namespace attrscope;
using nlohmann::json;

namespace {

Dataset small_synthetic(std::size_t n = 30) {
    SyntheticParams p;
    p.n = n;
    p.d = 6;
    p.seed = 4;
    return generate_synthetic(p);
}

const json kFastConfig = {{"perplexity", 5.0}, {"n_iter", 250}};

struct Server {
    explicit Server(ExplorerOptions o = {}) : service(std::move(o)) {
        port = service.bind_to_any_port();
        service.start();
    }
    ~Server() { service.stop(); }

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(120, 0);
        return c;
    }

    HttpService service;
    int port = 0;
};

json body(const httplib::Result& r) {
    REQUIRE(r);
    return r->body.empty() ? json() : json::parse(r->body);
}

std::string upload(httplib::Client& c, const Dataset& ds) {
    const auto r = c.Post("/datasets", manifest_json(ds, std::nullopt).dump(), "application/json");
    REQUIRE(r);
    REQUIRE((r->status == 201 || r->status == 200));
    return body(r)["id"];
}

std::string embed(httplib::Client& c, const std::string& id, const std::string& space) {
    const auto r = c.Post("/datasets/" + id + "/embeddings", json{{"space", space}, {"config", kFastConfig}}.dump(),
                          "application/json");
    REQUIRE(r);
    REQUIRE((r->status == 200 || r->status == 202));
    const std::string job = body(r)["job"];
    for (int i = 0; i < 600; ++i) {
        const auto j = body(c.Get("/datasets/" + id + "/embeddings/" + job));
        if (j["status"] != "running") {
            REQUIRE(j["status"] == "done");
            return job;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    FAIL("embedding did not finish");
    return {};
}

} // namespace

TEST_SUITE("http") {
    TEST_CASE("status mapping") {
        CHECK(http_status_for(ErrorKind::Parse) == 400);
        CHECK(http_status_for(ErrorKind::Schema) == 400);
        CHECK(http_status_for(ErrorKind::Argument) == 400);
        CHECK(http_status_for(ErrorKind::NotFound) == 404);
        CHECK(http_status_for(ErrorKind::Conflict) == 409);
    }

    TEST_CASE("health, upload and dataset listing") {
        Server s;
        auto c = s.client();
        CHECK(body(c.Get("/health"))["status"] == "ok");
        const auto ds = small_synthetic();
        const auto first = c.Post("/datasets", manifest_json(ds, std::nullopt).dump(), "application/json");
        REQUIRE(first);
        CHECK(first->status == 201);
        const auto summary = body(first);
        CHECK(summary["record_count"] == 30);
        CHECK(summary["fea_dim"] == 6);
        CHECK(summary["attributes"].size() == 17);
        CHECK(summary["content_hash"] == ds.content_hash());
        const auto again = c.Post("/datasets", manifest_json(ds, std::nullopt).dump(), "application/json");
        CHECK(again->status == 200);
        CHECK(body(again)["id"] == summary["id"]);

        const auto list = body(c.Get("/datasets"));
        REQUIRE(list.size() == 1);
        CHECK(list[0]["id"] == summary["id"]);
        CHECK(body(c.Get("/datasets/" + summary["id"].get<std::string>()))["record_count"] == 30);
    }

    TEST_CASE("error bodies") {
        Server s;
        auto c = s.client();
        auto r = c.Post("/datasets", "{broken", "application/json");
        CHECK(r->status == 400);
        CHECK(body(r)["error"] == "ParseError");
        r = c.Post("/datasets", json{{"schema_version", 1}}.dump(), "application/json");
        CHECK(r->status == 400);
        r = c.Get("/datasets/unknown");
        CHECK(r->status == 404);
        CHECK(body(r)["error"] == "NotFound");
        r = c.Get("/no/such/route");
        CHECK(r->status == 404);
        CHECK(body(r).contains("error"));
        r = c.Get("/sessions/s42");
        CHECK(r->status == 404);

        const auto id = upload(c, small_synthetic());
        r = c.Get("/datasets/" + id + "/glyphs");
        CHECK(r->status == 400);
        r = c.Get("/datasets/" + id + "/glyphs?space=ACT");
        CHECK(r->status == 404);
        r = c.Get("/datasets/" + id + "/metrics?threshold=2");
        CHECK(r->status == 400);
        r = c.Get("/datasets/" + id + "/metrics?attributes=nope");
        CHECK(r->status == 400);
        r = c.Post("/datasets/" + id + "/embeddings", json{{"space", "XYZ"}}.dump(), "application/json");
        CHECK(r->status == 400);
        r = c.Post("/datasets/" + id + "/embeddings", json{{"space", "ACT"}, {"config", {{"perplexity", 500}}}}.dump(),
                   "application/json");
        CHECK(r->status == 400);
        r = c.Get("/datasets/" + id + "/records/none");
        CHECK(r->status == 404);
    }

    TEST_CASE("running job, conflict and cache hit") {
        std::promise<void> release;
        auto gate = release.get_future().share();
        std::promise<void> started;
        ExplorerOptions o;
        o.before_compute = [&, gate](const std::string&) {
            started.set_value();
            gate.wait();
        };
        Server s(o);
        auto c = s.client();
        const auto id = upload(c, small_synthetic());
        const auto req = json{{"space", "PRD"}, {"config", kFastConfig}}.dump();
        const auto first = c.Post("/datasets/" + id + "/embeddings", req, "application/json");
        REQUIRE(first);
        CHECK(first->status == 202);
        const std::string job = body(first)["job"];
        started.get_future().wait();
        CHECK(body(c.Get("/datasets/" + id + "/embeddings/" + job))["status"] == "running");
        CHECK(c.Post("/datasets/" + id + "/embeddings", req, "application/json")->status == 409);
        release.set_value();
        s.service.explorer().wait_for_job(id, job);

        const auto done = body(c.Get("/datasets/" + id + "/embeddings/" + job));
        CHECK(done["status"] == "done");
        CHECK(done["result"]["coords"].size() == 30);
        CHECK(done["config"]["perplexity"] == 5.0);
        const auto hit = c.Post("/datasets/" + id + "/embeddings", req, "application/json");
        CHECK(hit->status == 200);
        CHECK(body(hit)["job"] == job);
        const auto stats = body(c.Get("/stats"));
        CHECK(stats["embedding_runs"] == 1);
        CHECK(stats["cache_hits"] == 1);
        CHECK(body(c.Get("/datasets/" + id + "/embeddings")).size() == 1);
    }

    TEST_CASE("glyphs, records and metrics agree") {
        Server s;
        auto c = s.client();
        const auto ds = small_synthetic();
        const auto id = upload(c, ds);
        const auto job = embed(c, id, "FEA");
        const auto glyphs = body(c.Get("/datasets/" + id + "/glyphs?space=FEA&attributes=0,2,5&threshold=0.4"));
        REQUIRE(glyphs.size() == 30);
        const auto coords = body(c.Get("/datasets/" + id + "/embeddings/" + job))["result"]["coords"];
        for (std::size_t i = 0; i < 30; ++i) {
            const auto g = glyph_from_json(glyphs[i]);
            CHECK(g.record_id == ds.record(i).id);
            CHECK(g.center.x == coords[i][0].get<double>());
            REQUIRE(g.petals.size() == 3);
            const auto detail = body(c.Get("/datasets/" + id + "/records/" + g.record_id + "?threshold=0.4"));
            for (const auto& p : g.petals)
                CHECK(detail["attributes"][p.attribute_index]["outcome"] == std::string(to_string(*p.outcome)));
        }
        const auto prd_only = body(c.Get("/datasets/" + id + "/glyphs?space=FEA&mode=prd&radius=5"));
        CHECK(prd_only[0]["dot"].is_null());
        CHECK(prd_only[0]["radius"] == 5.0);

        const auto m = body(c.Get("/datasets/" + id + "/metrics?attributes=1,3&threshold=0.6"));
        CHECK(confusion_from_json(m["confusion"]) == confusion(ds.records(), std::vector<std::size_t>{1, 3}, 0.6));
        CHECK(m["map"].get<double>() == doctest::Approx(*mean_average_precision(ds)));
    }

    TEST_CASE("sessions and selections") {
        testing::TempDir snap;
        ExplorerOptions o;
        o.snapshot_dir = snap.path();
        Server s(o);
        auto c = s.client();
        const auto ds = small_synthetic();
        const auto id = upload(c, ds);
        embed(c, id, "ACT");

        CHECK(c.Post("/sessions", json{{"dataset", "missing"}}.dump(), "application/json")->status == 404);
        const auto created = c.Post("/sessions", json{{"dataset", id}, {"settings", {{"threshold", 0.3}}}}.dump(),
                                    "application/json");
        REQUIRE(created->status == 201);
        const std::string sid = body(created)["id"];
        CHECK(body(created)["threshold"] == 0.3);

        auto r = c.Patch("/sessions/" + sid, json{{"attribute_filter", {0, 1, 2}}}.dump(), "application/json");
        CHECK(r->status == 200);
        CHECK(body(r)["attribute_filter"] == json{0, 1, 2});
        CHECK(c.Patch("/sessions/" + sid, json{{"threshold", -1}}.dump(), "application/json")->status == 400);

        r = c.Post("/sessions/" + sid + "/selections",
                   json{{"record_ids", {ds.record(0).id}}, {"polygon", json::array()}}.dump(), "application/json");
        CHECK(r->status == 400);
        r = c.Post("/sessions/" + sid + "/selections", json{{"polygon", {{0, 0}, {1, 0}, {0, 1}}}}.dump(),
                   "application/json");
        CHECK(r->status == 400);

        r = c.Post("/sessions/" + sid + "/selections",
                   json{{"space", "ACT"}, {"polygon", {{-1e6, -1e6}, {1e6, -1e6}, {1e6, 1e6}, {-1e6, 1e6}}}}.dump(),
                   "application/json");
        REQUIRE(r->status == 201);
        const auto sel = body(r);
        CHECK(sel["size"] == 30);
        CHECK(sel["created_from"] == "lasso");

        const auto m = body(c.Get("/sessions/" + sid + "/selections/" + sel["id"].get<std::string>() + "/metrics"));
        CHECK(confusion_from_json(m["confusion"]) ==
              confusion(ds.records(), std::vector<std::size_t>{0, 1, 2}, 0.3));
        const auto m2 = body(c.Get("/sessions/" + sid + "/selections/" + sel["id"].get<std::string>() +
                                   "/metrics?attributes=4&threshold=0.9"));
        CHECK(m2["attributes"] == json{4});
        CHECK(confusion_from_json(m2["confusion"]) == confusion(ds.records(), std::vector<std::size_t>{4}, 0.9));

        r = c.Post("/sessions/" + sid + "/selections", json{{"rectangle", {{-1e6, -1e6}, {1e6, 1e6}}}, {"space", "ACT"}}.dump(),
                   "application/json");
        CHECK(r->status == 201);
        CHECK(body(r)["created_from"] == "rectangle");
        CHECK(body(c.Get("/sessions/" + sid + "/selections")).size() == 2);
        CHECK(c.Delete("/sessions/" + sid + "/selections/sel-1")->status == 204);
        CHECK(c.Get("/sessions/" + sid + "/selections/sel-1")->status == 404);
        CHECK(body(c.Get("/sessions/" + sid))["selections"].size() == 1);
        CHECK(std::filesystem::exists(snap / (sid + ".json")));
    }

    TEST_CASE("images") {
        testing::TempDir dir;
        const auto base = small_synthetic(5);
        std::vector<ImageRecord> recs(base.records().begin(), base.records().end());
        recs[0].image_path = "thumbs/one.png";
        recs[1].image_path = "thumbs/two words.jpg";
        std::filesystem::create_directories(dir / "thumbs");
        testing::write_text(dir / "thumbs/one.png", std::string("\x89PNG\r\n", 6));
        testing::write_text(dir / "thumbs/two words.jpg", "JPEG");
        ExplorerOptions o;
        o.data_dir = dir.path();
        Server s(o);
        auto c = s.client();
        const auto id = upload(c, Dataset(base.schema(), recs, base.fea_dim()));

        for (std::size_t i = 0; i < 2; ++i) {
            const auto detail = body(c.Get("/datasets/" + id + "/records/" + recs[i].id));
            const std::string url = detail["thumbnail_url"];
            const auto img = c.Get(url);
            REQUIRE(img);
            CHECK(img->status == 200);
            CHECK(img->body == testing::slurp(dir / *recs[i].image_path));
        }
        CHECK(c.Get("/datasets/" + id + "/images/thumbs/one.png")->get_header_value("Content-Type") == "image/png");
        CHECK(c.Get("/datasets/" + id + "/images/thumbs/other.png")->status == 404);
        CHECK(c.Get("/datasets/" + id + "/images/..%2Fsecret")->status == 404);
        CHECK(body(c.Get("/datasets/" + id + "/records/" + recs[2].id))["thumbnail_url"].is_null());
    }
}
