// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "attrscope/affinity.hpp"
#include "attrscope/dataset.hpp"
#include "attrscope/embedding.hpp"
#include "attrscope/glyph.hpp"
#include "attrscope/metrics.hpp"
#include "attrscope/polygon.hpp"
#include "attrscope/tsne.hpp"
#include "helpers.hpp"

using namespace attrscope;
using nlohmann::json;

namespace {

// Collects failed sub-checks of one criterion.
class Checks {
public:
    void expect(bool ok, const std::string& what) {
        ++total_;
        if (!ok && failures_.size() < 5) failures_.push_back(what);
        if (!ok) ++failed_;
    }
    bool ok() const { return failed_ == 0; }
    std::string summary() const {
        std::ostringstream s;
        s << (total_ - failed_) << "/" << total_ << " checks";
        for (const auto& f : failures_) s << "; " << f;
        return s.str();
    }
    void note(const std::string& text) { notes_ += (notes_.empty() ? "" : ", ") + text; }
    const std::string& notes() const { return notes_; }

private:
    std::size_t total_ = 0;
    std::size_t failed_ = 0;
    std::vector<std::string> failures_;
    std::string notes_;
};

std::string fmt(double v, int precision = 6) {
    std::ostringstream s;
    s << std::setprecision(precision) << v;
    return s.str();
}

bool close(const std::optional<double>& a, const std::optional<double>& b, double tol) {
    if (a.has_value() != b.has_value()) return false;
    return !a || std::abs(*a - *b) <= tol;
}

int g_failures = 0;

void criterion(const std::string& name, double limit_seconds, const std::function<void(Checks&)>& body) {
    Checks c;
    const auto start = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (limit_seconds > 0) c.expect(secs < limit_seconds, "runtime " + fmt(secs, 3) + " s over " + fmt(limit_seconds) + " s");
    const bool ok = c.ok();
    if (!ok) ++g_failures;
    std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "  (" << std::fixed << std::setprecision(2) << secs
              << " s)  " << std::defaultfloat << c.summary();
    if (!c.notes().empty()) std::cout << "  [" << c.notes() << "]";
    std::cout << std::endl;
}

Matrix random_matrix(std::mt19937& gen, std::size_t n, std::size_t m, double scale = 1.0) {
    std::normal_distribution<double> d(0.0, scale);
    Matrix x(n, m);
    for (auto& v : x.data()) v = d(gen);
    return x;
}

double rel_l2(const Matrix& approx, const Matrix& ref) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ref.data().size(); ++i) {
        num += std::pow(approx.data()[i] - ref.data()[i], 2);
        den += std::pow(ref.data()[i], 2);
    }
    return std::sqrt(num / den);
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

int run_cli(const std::string& args, const std::filesystem::path& log) {
    const std::string cmd = std::string("\"") + ATTRSCOPE_CLI_PATH + "\" " + args + " 2> " + q(log);
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// --- criteria ----------------------------------------------------------------

void metrics_oracle(Checks& c) {
    std::mt19937 gen(20240601);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = gen() % 51;
        const std::size_t k = 1 + gen() % 5;
        const auto ds = testing::random_dataset(gen, n, k);
        const double t = (gen() % 21) / 20.0;
        std::vector<std::size_t> attrs;
        for (std::size_t a = 0; a < k; ++a)
            if (gen() % 3 != 0) attrs.push_back(a);
        if (attrs.empty()) attrs.push_back(gen() % k);

        const auto got = confusion(ds.records(), attrs, t);
        const auto want = oracle::confusion(testing::act_rows(ds), testing::prd_rows(ds), attrs, t);
        const std::string tag = "dataset " + std::to_string(trial);
        c.expect(got.tp == want.tp && got.tn == want.tn && got.fp == want.fp && got.fn == want.fn, tag + " counts");
        const auto r = report(got);
        const auto o = oracle::report(want);
        c.expect(close(r.accuracy, o.accuracy, 1e-12) && close(r.precision, o.precision, 1e-12) &&
                     close(r.recall, o.recall, 1e-12) && close(r.f1, o.f1, 1e-12),
                 tag + " metrics");
        const auto aps = per_attribute_ap(ds);
        for (std::size_t a = 0; a < k; ++a) {
            std::vector<double> s;
            std::vector<int> l;
            for (const auto& rec : ds.records()) {
                s.push_back(rec.prd[a]);
                l.push_back(rec.act[a]);
            }
            c.expect(close(aps[a], oracle::average_precision(s, l), 1e-12), tag + " AP attr " + std::to_string(a));
        }
    }
}

void formula_spot_checks(Checks& c) {
    ConfusionSummary s;
    s.tp = 3;
    s.tn = 5;
    s.fp = 1;
    s.fn = 1;
    const auto r = report(s);
    c.note("report(3,5,1,1) = (" + fmt(r.accuracy.value_or(NAN)) + ", " + fmt(r.precision.value_or(NAN)) + ", " +
           fmt(r.recall.value_or(NAN)) + ", " + fmt(r.f1.value_or(NAN)) + ")");
    c.expect(close(r.accuracy, 0.9, 1e-12), "accuracy expected 0.9, got " + fmt(r.accuracy.value_or(NAN)));
    c.expect(close(r.precision, 0.75, 1e-12), "precision expected 0.75");
    c.expect(close(r.recall, 0.75, 1e-12), "recall expected 0.75");
    c.expect(close(r.f1, 0.75, 1e-12), "f1 expected 0.75");

    ConfusionSummary h;
    h.tp = 1;
    h.fp = 1;
    const auto half = report(h);
    c.expect(close(half.precision, 0.5, 0.0) && close(half.recall, 1.0, 0.0), "precision 0.5 / recall 1.0 setup");
    c.expect(close(half.f1, 2.0 / 3.0, 1e-12), "F1(0.5, 1.0) expected 2/3");
}

void gradient_fd(Checks& c) {
    std::mt19937 gen(101);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 3 + gen() % 18;
        const auto x = random_matrix(gen, n, 5);
        const auto p = pairwise_affinities(x, std::max(1.0, (double(n) - 1) / 3.0));
        const auto y = random_matrix(gen, n, 2, 2.0);
        const auto fd = testing::to_matrix(oracle::kl_gradient_fd(testing::to_rows(p), testing::to_rows(y), 1e-5));
        const double err = rel_l2(tsne_gradient(p, y), fd);
        worst = std::max(worst, err);
        c.expect(err <= 1e-4, "instance " + std::to_string(trial) + " rel error " + fmt(err));
    }
    c.note("worst rel L2 " + fmt(worst, 3));
}

void tsne_structure(Checks& c) {
    const auto blobs = oracle::gaussian_blobs(30, 10, 5);
    TsneConfig cfg;
    cfg.perplexity = 10;
    cfg.seed = 42;
    const auto x = testing::to_matrix(blobs.x);
    const auto a = tsne_embed(x, cfg);
    const auto b = tsne_embed(x, cfg);
    const auto y = testing::to_rows(a.coords);
    const double tw = oracle::trustworthiness(blobs.x, y, 10);
    const double sil = oracle::silhouette(y, blobs.labels);
    c.note("trustworthiness " + fmt(tw, 4) + ", silhouette " + fmt(sil, 4));
    c.expect(tw >= 0.95, "trustworthiness " + fmt(tw));
    c.expect(sil >= 0.5, "silhouette " + fmt(sil));
    c.expect(a.coords == b.coords, "same seed gives different coordinates");
}

void barnes_hut(Checks& c) {
    std::mt19937 gen(202);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 200;
        const auto x = random_matrix(gen, n, 8);
        const auto p = pairwise_affinities(x, 30.0);
        const auto y = random_matrix(gen, n, 2, 0.5 + 4.0 * trial);
        const double err = rel_l2(bh_gradient(SparseMatrix::from_dense(p), y, 0.2), tsne_gradient(p, y));
        worst = std::max(worst, err);
        c.expect(err <= 0.05, "configuration " + std::to_string(trial) + " rel error " + fmt(err));
    }
    c.note("worst rel L2 " + fmt(worst, 3));
}

void zero_noise(Checks& c) {
    SyntheticParams params;
    params.n = 200;
    params.noise = 0.0;
    params.seed = 9;
    const auto ds = generate_synthetic(params);
    const auto all = all_attributes(ds);
    const auto conf = confusion(ds.records(), all, kDefaultThreshold);
    c.expect(conf.fp == 0 && conf.fn == 0, "fp/fn nonzero");
    const auto r = report(conf);
    c.expect(r.precision == 1.0 && r.recall == 1.0 && r.f1 == 1.0, "precision/recall/f1 not 1");
    c.expect(mean_average_precision(ds) == 1.0, "mAP not 1");

    const auto emb = embed_space(ds, Space::Prd, default_config(ds, Space::Prd));
    for (auto kind : {DistanceKind::Euclidean, DistanceKind::Cosine}) {
        FlowerOptions o;
        o.distance = kind;
        for (const auto& g : layout_flowers(ds, emb.coords, all, o)) {
            for (const auto& p : g.petals)
                c.expect(p.outcome == Outcome::TP || p.outcome == Outcome::TN, g.record_id + " petal not TP/TN");
            c.expect(g.center_dot && g.center_dot->value == 0.0, g.record_id + " center dot nonzero");
        }
    }
}

void glyph_table(Checks& c) {
    const auto schema = AttributeSchema::with_defaults(1);
    const std::vector<std::size_t> filter{0};
    std::map<Outcome, std::tuple<bool, bool, bool>> states;
    for (std::uint8_t act : {0, 1}) {
        for (double prd : {0.0, 0.49, 0.5, 1.0}) {
            const ImageRecord rec{"r", std::nullopt, {act}, {prd}, {}};
            const auto petal = layout_flower(rec, schema, filter, {}, 0.0).petals.at(0);
            const auto expected = classify_outcome(act, prd, kDefaultThreshold);
            const std::string tag = "act " + std::to_string(act) + " prd " + fmt(prd);
            c.expect(petal.outcome == expected, tag + " outcome");
            const bool fill = petal.fill == schema.colors[0];
            const bool black = petal.has_black_border();
            const bool faint = petal.border && *petal.border == kPlaceholderColor &&
                               petal.border_opacity == kPlaceholderOpacity && !petal.has_fill();
            switch (expected) {
            case Outcome::TP: c.expect(fill && black, tag + " TP style"); break;
            case Outcome::FN: c.expect(fill && !petal.border, tag + " FN style"); break;
            case Outcome::FP: c.expect(!petal.has_fill() && black, tag + " FP style"); break;
            case Outcome::TN: c.expect(faint && !black, tag + " TN style"); break;
            }
            const auto state = std::make_tuple(fill, black, faint);
            if (auto it = states.find(expected); it != states.end())
                c.expect(it->second == state, tag + " inconsistent style within outcome");
            states[expected] = state;
        }
    }
    c.expect(states.size() == 4, "not all four outcomes covered");
    std::set<std::tuple<bool, bool, bool>> distinct;
    for (const auto& [o, s] : states) distinct.insert(s);
    c.expect(distinct.size() == 4, "visual states are not distinct");
}

// Server process started through the CLI; stopped on destruction.
class ServeProcess {
public:
    ServeProcess(const std::filesystem::path& work, const std::string& args) {
        log_ = work / "serve.log";
        const auto pidfile = work / "serve.pid";
        const std::string cmd = std::string("\"") + ATTRSCOPE_CLI_PATH + "\" serve --port 0 " + args + " > " + q(log_) +
                                " 2>&1 & echo $! > " + q(pidfile);
        if (std::system(cmd.c_str()) != 0) throw std::runtime_error("could not launch serve");
        for (int i = 0; i < 500 && port_ == 0; ++i) {
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
            const auto text = testing::slurp(log_);
            const auto at = text.find("listening on http://");
            if (at == std::string::npos) continue;
            const auto colon = text.find(':', at + 20);
            const auto end = text.find('\n', colon);
            if (colon == std::string::npos || end == std::string::npos) continue;
            port_ = std::stoi(text.substr(colon + 1, end - colon - 1));
        }
        pid_ = std::stoi(testing::slurp(pidfile));
        if (port_ == 0) throw std::runtime_error("serve did not report a port: " + testing::slurp(log_));
    }
    ~ServeProcess() {
        if (pid_ > 0) ::kill(pid_, SIGTERM);
    }
    int port() const { return port_; }

private:
    std::filesystem::path log_;
    int pid_ = 0;
    int port_ = 0;
};

json get_json(httplib::Client& cli, const std::string& path, int expect = 200) {
    const auto r = cli.Get(path);
    if (!r) throw std::runtime_error("GET " + path + " failed");
    if (r->status != expect) throw std::runtime_error("GET " + path + " -> " + std::to_string(r->status) + " " + r->body);
    return json::parse(r->body);
}

json send_json(httplib::Client& cli, const std::string& method, const std::string& path, const json& body,
               std::initializer_list<int> expect) {
    const auto r = method == "POST" ? cli.Post(path, body.dump(), "application/json")
                                    : cli.Patch(path, body.dump(), "application/json");
    if (!r) throw std::runtime_error(method + " " + path + " failed");
    if (std::find(expect.begin(), expect.end(), r->status) == expect.end())
        throw std::runtime_error(method + " " + path + " -> " + std::to_string(r->status) + " " + r->body);
    return json::parse(r->body);
}

void service_contract(Checks& c) {
    testing::TempDir work;
    const auto data = work / "data";
    std::filesystem::create_directories(data / "thumbs");
    const auto manifest = data / "synth.json";
    if (run_cli("gen-synthetic --n 150 --d 32 --seed 21 --out " + q(manifest) + " > /dev/null", work / "gen.log") != 0)
        throw std::runtime_error("gen-synthetic failed: " + testing::slurp(work / "gen.log"));

    // Attach a thumbnail file to every third record.
    auto doc = json::parse(testing::slurp(manifest));
    std::map<std::string, std::string> thumbs;
    for (std::size_t i = 0; i < doc["images"].size(); i += 3) {
        auto& img = doc["images"][i];
        const std::string rel = "thumbs/" + img["id"].get<std::string>() + ".png";
        const std::string bytes = std::string("\x89PNG\r\n\x1a\n", 8) + img["id"].get<std::string>();
        testing::write_text(data / rel, bytes);
        img["path"] = rel;
        thumbs[img["id"]] = bytes;
    }
    testing::write_text(manifest, doc.dump(1));
    const auto ds = load_manifest(manifest);

    ServeProcess server(work.path(), "--data-dir " + q(data) + " --cache-dir " + q(work / "cache"));
    httplib::Client cli("127.0.0.1", server.port());
    cli.set_read_timeout(120, 0);
    c.expect(get_json(cli, "/health")["status"] == "ok", "health");

    const auto summary = send_json(cli, "POST", "/datasets", {{"path", "synth.json"}}, {201});
    const std::string id = summary["id"];
    c.expect(summary["record_count"] == ds.size(), "record count");
    c.expect(summary["content_hash"] == ds.content_hash(), "content hash");

    std::map<std::string, json> coords;
    for (const std::string space : {"ACT", "PRD", "FEA"}) {
        const auto job = send_json(cli, "POST", "/datasets/" + id + "/embeddings", {{"space", space}}, {200, 202});
        json view;
        for (int i = 0; i < 3000; ++i) {
            view = get_json(cli, "/datasets/" + id + "/embeddings/" + job["job"].get<std::string>());
            if (view["status"] != "running") break;
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
        c.expect(view["status"] == "done", space + " embedding not done");
        coords[space] = view["result"]["coords"];
        c.expect(coords[space].size() == ds.size(), space + " coordinate count");
    }

    const auto session = send_json(cli, "POST", "/sessions", {{"dataset", id}}, {201});
    const std::string sid = session["id"];
    send_json(cli, "PATCH", "/sessions/" + sid, {{"attribute_filter", "0,3,5,8,13"}, {"threshold", 0.45}}, {200});

    // Lasso: a pentagon over the lower-left part of the PRD view.
    Matrix prd(ds.size(), 2);
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        prd(i, 0) = coords["PRD"][i][0];
        prd(i, 1) = coords["PRD"][i][1];
        x0 = std::min(x0, prd(i, 0));
        x1 = std::max(x1, prd(i, 0));
        y0 = std::min(y0, prd(i, 1));
        y1 = std::max(y1, prd(i, 1));
    }
    const double w = x1 - x0, h = y1 - y0;
    const std::vector<Point2> lasso{{x0 - 0.1 * w, y0 - 0.1 * h},
                                    {x0 + 0.7 * w, y0 - 0.1 * h},
                                    {x0 + 0.6 * w, y0 + 0.5 * h},
                                    {x0 + 0.3 * w, y0 + 0.7 * h},
                                    {x0 - 0.1 * w, y0 + 0.6 * h}};
    json poly = json::array();
    std::vector<std::array<double, 2>> opoly;
    for (const auto& p : lasso) {
        poly.push_back({p.x, p.y});
        opoly.push_back({p.x, p.y});
    }
    const auto sel = send_json(cli, "POST", "/sessions/" + sid + "/selections", {{"space", "PRD"}, {"polygon", poly}},
                               {201});
    std::vector<std::size_t> rows;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (oracle::inside_simple_polygon({prd(i, 0), prd(i, 1)}, opoly)) {
            rows.push_back(i);
            ids.push_back(ds.record(i).id);
        }
    }
    c.expect(sel["record_ids"].get<std::vector<std::string>>() == ids, "lasso membership differs from the oracle");
    c.expect(!rows.empty() && rows.size() < ds.size(), "lasso should select a proper subset");
    c.note(std::to_string(rows.size()) + " of " + std::to_string(ds.size()) + " records lassoed");

    const std::string sel_path = "/sessions/" + sid + "/selections/" + sel["id"].get<std::string>() + "/metrics";
    const std::vector<std::size_t> filter{0, 3, 5, 8, 13};
    for (const auto& [query, attrs, t] :
         {std::tuple<std::string, std::vector<std::size_t>, double>{"", filter, 0.45},
          {"?attributes=1,2,16&threshold=0.7", {1, 2, 16}, 0.7}}) {
        const auto m = get_json(cli, sel_path + query);
        const auto want = confusion(ds, rows, attrs, t);
        c.expect(confusion_from_json(m["confusion"]) == want, "selection confusion" + query);
        const auto got_r = report_from_json(m["report"]);
        const auto want_r = report(want);
        c.expect(close(got_r.accuracy, want_r.accuracy, 1e-12) && close(got_r.precision, want_r.precision, 1e-12) &&
                     close(got_r.recall, want_r.recall, 1e-12) && close(got_r.f1, want_r.f1, 1e-12),
                 "selection report" + query);
        c.expect(m["record_count"] == rows.size(), "selection size");
    }

    // Detail, glyph and thumbnail consistency for every record.
    const auto glyphs = get_json(cli, "/datasets/" + id + "/glyphs?space=FEA&threshold=0.45");
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& rec = ds.record(i);
        const auto detail = get_json(cli, "/datasets/" + id + "/records/" + rec.id + "?threshold=0.45");
        const auto g = glyph_from_json(glyphs[i]);
        c.expect(g.record_id == rec.id, rec.id + " glyph order");
        for (std::size_t a = 0; a < ds.attribute_count(); ++a) {
            const auto expected = std::string(to_string(classify_outcome(rec.act[a], rec.prd[a], 0.45)));
            c.expect(detail["attributes"][a]["outcome"] == expected, rec.id + " detail outcome");
            c.expect(std::string(to_string(*g.petals.at(a).outcome)) == expected, rec.id + " glyph outcome");
        }
        c.expect(std::abs(g.center.x - coords["FEA"][i][0].get<double>()) == 0.0, rec.id + " glyph position");
        if (auto it = thumbs.find(rec.id); it != thumbs.end()) {
            const auto img = cli.Get(detail["thumbnail_url"].get<std::string>());
            c.expect(img && img->status == 200 && img->body == it->second, rec.id + " thumbnail bytes");
        } else {
            c.expect(detail["thumbnail_url"].is_null(), rec.id + " unexpected thumbnail");
        }
    }
    const auto stats = get_json(cli, "/stats");
    c.expect(stats["embedding_runs"] == 3, "embedding runs");
}

void determinism(Checks& c) {
    testing::TempDir work;
    const auto m = work / "m.json";
    if (run_cli("gen-synthetic --n 120 --d 64 --seed 3 --out " + q(m) + " > /dev/null", work / "log") != 0)
        throw std::runtime_error("gen-synthetic failed");
    for (const std::string extra : {"--space fea", "--space prd --theta 0.5"}) {
        for (const char* name : {"a.json", "b.json"})
            c.expect(run_cli("embed --manifest " + q(m) + " " + extra + " --seed 17 --out " + q(work / name),
                             work / "log") == 0,
                     "embed " + extra);
        const auto a = testing::slurp(work / "a.json");
        c.expect(!a.empty() && a == testing::slurp(work / "b.json"), "embed " + extra + " not byte-identical");
    }
    for (const char* name : {"a.svg", "b.svg"})
        c.expect(run_cli("export-svg --manifest " + q(m) + " --embedding " + q(work / "a.json") + " --out " +
                             q(work / name),
                         work / "log") == 0,
                 "export-svg");
    const auto svg = testing::slurp(work / "a.svg");
    c.expect(!svg.empty() && svg == testing::slurp(work / "b.svg"), "export-svg not byte-identical");
}

} // namespace

int main() {
    std::cout << "attrscope acceptance suite" << std::endl;
    criterion("metrics oracle equivalence", 10, metrics_oracle);
    criterion("formula spot checks", 0, formula_spot_checks);
    criterion("t-SNE gradient vs finite differences", 30, gradient_fd);
    criterion("t-SNE recovers cluster structure", 60, tsne_structure);
    criterion("Barnes-Hut gradient fidelity", 0, barnes_hut);
    criterion("zero-noise synthetic dataset", 0, zero_noise);
    criterion("glyph encoding table", 0, glyph_table);
    criterion("service contract end to end", 120, service_contract);
    criterion("CLI determinism", 0, determinism);
    std::cout << (g_failures == 0 ? "all criteria passed" : std::to_string(g_failures) + " criteria failed")
              << std::endl;
    return g_failures == 0 ? 0 : 1;
}
