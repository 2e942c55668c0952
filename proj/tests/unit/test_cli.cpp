#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "attrscope/dataset.hpp"
#include "attrscope/embedding.hpp"
#include "attrscope/metrics.hpp"
#include "helpers.hpp"

using nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

// Runs the CLI with stdout and stderr captured in `dir`.
Run cli(const testing::TempDir& dir, const std::string& args) {
    const auto out = dir / "stdout.txt";
    const auto err = dir / "stderr.txt";
    const std::string cmd = std::string("\"") + ATTRSCOPE_CLI_PATH + "\" " + args + " > \"" + out.string() +
                            "\" 2> \"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = testing::slurp(out);
    r.err = testing::slurp(err);
    return r;
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

} // namespace

TEST_SUITE("cli") {
    TEST_CASE("usage errors exit with 2") {
        testing::TempDir dir;
        CHECK(cli(dir, "").code == 2);
        CHECK(cli(dir, "frobnicate").code == 2);
        CHECK(cli(dir, "gen-synthetic").code == 2);
        CHECK(cli(dir, "gen-synthetic --out " + q(dir / "m.json") + " --n abc").code == 2);
        CHECK(cli(dir, "gen-synthetic --out " + q(dir / "m.json") + " --clusters 0").code == 2);
        CHECK(cli(dir, "--version").code == 0);
    }

    TEST_CASE("gen-synthetic and validate") {
        testing::TempDir dir;
        const auto m = dir / "m.json";
        auto r = cli(dir, "gen-synthetic --n 25 --d 5 --seed 3 --out " + q(m));
        REQUIRE(r.code == 0);
        const auto summary = json::parse(r.out);
        CHECK(summary["record_count"] == 25);
        const auto ds = attrscope::load_manifest(m);
        CHECK(ds.size() == 25);
        CHECK(ds.fea_dim() == 5);
        attrscope::SyntheticParams p;
        p.n = 25;
        p.d = 5;
        p.seed = 3;
        CHECK(ds == attrscope::generate_synthetic(p));

        r = cli(dir, "validate " + q(m));
        CHECK(r.code == 0);
        CHECK(json::parse(r.out)["record_count"] == 25);
        CHECK(cli(dir, "validate --manifest " + q(m)).code == 0);

        testing::write_text(dir / "bad.json", "{\"schema_version\": 1, \"attributes\": []");
        r = cli(dir, "validate " + q(dir / "bad.json"));
        CHECK(r.code == 1);
        CHECK_FALSE(r.err.empty());
        CHECK(cli(dir, "validate " + q(dir / "absent.json")).code == 1);
    }

    TEST_CASE("n = 0 yields an empty but valid manifest") {
        testing::TempDir dir;
        const auto m = dir / "empty.json";
        REQUIRE(cli(dir, "gen-synthetic --n 0 --out " + q(m)).code == 0);
        CHECK(attrscope::load_manifest(m).empty());
        CHECK(cli(dir, "validate " + q(m)).code == 0);
        CHECK(cli(dir, "embed --manifest " + q(m) + " --space act").code == 2);
        const auto r = cli(dir, "export-svg --manifest " + q(m));
        REQUIRE(r.code == 0);
        CHECK(r.out.find("<svg") != std::string::npos);
        CHECK(r.out.find("<g ") == std::string::npos);
        CHECK(cli(dir, "metrics --manifest " + q(m)).code == 0);
    }

    TEST_CASE("embed is deterministic and honours options") {
        testing::TempDir dir;
        const auto m = dir / "m.json";
        REQUIRE(cli(dir, "gen-synthetic --n 40 --d 12 --seed 5 --out " + q(m)).code == 0);
        const std::string base = "embed --manifest " + q(m) + " --perplexity 8 --n-iter 300 --seed 11 ";
        REQUIRE(cli(dir, base + "--space fea --out " + q(dir / "a.json")).code == 0);
        REQUIRE(cli(dir, base + "--space fea --out " + q(dir / "b.json")).code == 0);
        const auto a = testing::slurp(dir / "a.json");
        CHECK(a == testing::slurp(dir / "b.json"));
        const auto emb = attrscope::embedding_from_json(json::parse(a));
        CHECK(emb.coords.rows() == 40);
        CHECK(emb.config.perplexity == 8.0);
        CHECK(emb.config.n_iter == 300);
        CHECK(emb.config.seed == 11);

        REQUIRE(cli(dir, base + "--space fea --no-pca --out " + q(dir / "c.json")).code == 0);
        CHECK_FALSE(attrscope::embedding_from_json(json::parse(testing::slurp(dir / "c.json"))).config.pca_predim);
        CHECK(cli(dir, base + "--space fea --no-pca --pca-predim 3").code == 2);
        CHECK(cli(dir, base + "--space colour").code == 2);
        CHECK(cli(dir, "embed --manifest " + q(m) + " --space act --perplexity 100").code == 2);
        const auto stdout_run = cli(dir, base + "--space act");
        CHECK(stdout_run.code == 0);
        CHECK(json::parse(stdout_run.out)["space"] == "ACT");
    }

    TEST_CASE("metrics output matches the library") {
        testing::TempDir dir;
        const auto m = dir / "m.json";
        REQUIRE(cli(dir, "gen-synthetic --n 200 --seed 7 --d 2 --out " + q(m)).code == 0);
        const auto r = cli(dir, "metrics --manifest " + q(m) + " --threshold 0.5");
        REQUIRE(r.code == 0);
        const auto j = json::parse(r.out);
        const auto ds = attrscope::load_manifest(m);
        const auto all = attrscope::all_attributes(ds);
        const auto c = attrscope::confusion(ds.records(), all, 0.5);
        CHECK(attrscope::confusion_from_json(j["confusion"]) == c);
        CHECK(c.tp == 1168);
        CHECK(c.tn == 2034);
        CHECK(c.fp == 116);
        CHECK(c.fn == 82);
        CHECK(j["map"].get<double>() == doctest::Approx(0.9883988959724043).epsilon(1e-12));
        CHECK(j["threshold"] == 0.5);

        const auto sub = json::parse(cli(dir, "metrics --manifest " + q(m) + " --attributes 2,0").out);
        CHECK(sub["attributes"] == json{0, 2});
        CHECK(cli(dir, "metrics --manifest " + q(m) + " --threshold 1.5").code == 2);
        CHECK(cli(dir, "metrics --manifest " + q(m) + " --attributes 40").code == 2);
    }

    TEST_CASE("export-svg is deterministic") {
        testing::TempDir dir;
        const auto m = dir / "m.json";
        REQUIRE(cli(dir, "gen-synthetic --n 30 --d 4 --out " + q(m)).code == 0);
        REQUIRE(cli(dir, "embed --manifest " + q(m) + " --space prd --perplexity 5 --n-iter 250 --out " +
                             q(dir / "e.json"))
                    .code == 0);
        const std::string args = "export-svg --manifest " + q(m) + " --embedding " + q(dir / "e.json");
        REQUIRE(cli(dir, args + " --out " + q(dir / "a.svg")).code == 0);
        REQUIRE(cli(dir, args + " --out " + q(dir / "b.svg")).code == 0);
        const auto svg = testing::slurp(dir / "a.svg");
        CHECK(svg == testing::slurp(dir / "b.svg"));
        std::size_t groups = 0;
        for (std::size_t at = 0; (at = svg.find("<g id=\"glyph-", at)) != std::string::npos; ++at) ++groups;
        CHECK(groups == 30);

        CHECK(cli(dir, args + " --mode act --attributes 0,1 --distance cosine").code == 0);
        CHECK(cli(dir, args + " --mode flower").code == 2);
        CHECK(cli(dir, args + " --width 0").code == 2);
        CHECK(cli(dir, "export-svg --manifest " + q(m)).code == 2);
        CHECK(cli(dir, "export-svg --manifest " + q(m) + " --embedding " + q(dir / "none.json")).code == 1);
    }

    TEST_CASE("embedding of another dataset is rejected") {
        testing::TempDir dir;
        REQUIRE(cli(dir, "gen-synthetic --n 10 --out " + q(dir / "a.json")).code == 0);
        REQUIRE(cli(dir, "gen-synthetic --n 12 --out " + q(dir / "b.json")).code == 0);
        REQUIRE(cli(dir, "embed --manifest " + q(dir / "a.json") + " --space act --perplexity 3 --n-iter 250 --out " +
                             q(dir / "e.json"))
                    .code == 0);
        CHECK(cli(dir, "export-svg --manifest " + q(dir / "b.json") + " --embedding " + q(dir / "e.json")).code == 2);
    }
}
