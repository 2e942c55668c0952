// attrscope: command-line front end for the dataset, embedding, metrics,
// glyph and service libraries. stdout carries data only; diagnostics go to
// stderr. Exit codes: 0 success, 1 runtime error, 2 usage error.

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "attrscope/dataset.hpp"
#include "attrscope/embedding.hpp"
#include "attrscope/error.hpp"
#include "attrscope/glyph.hpp"
#include "attrscope/http_service.hpp"
#include "attrscope/metrics.hpp"

namespace {

using namespace attrscope;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

void write_output(const std::optional<std::string>& out, const std::string& text) {
    if (!out || *out == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream f(*out, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + *out);
    f << text;
    if (!f) throw IoError("failed writing " + *out);
}

EmbeddingResult read_embedding(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    return embedding_from_json(j);
}

struct GenArgs {
    SyntheticParams params;
    std::string out;
    bool inline_fea = false;
};

struct EmbedArgs {
    std::string manifest;
    std::string space;
    std::optional<double> perplexity;
    std::optional<int> n_iter;
    std::optional<double> learning_rate;
    std::optional<double> theta;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> pca_predim;
    bool no_pca = false;
    std::optional<std::string> out;
};

struct MetricsArgs {
    std::string manifest;
    double threshold = kDefaultThreshold;
    std::optional<std::string> attributes;
    std::optional<std::string> out;
};

struct SvgArgs {
    std::string manifest;
    std::optional<std::string> embedding;
    std::string mode = "joint";
    std::optional<std::string> attributes;
    std::string distance = "euclidean";
    double threshold = kDefaultThreshold;
    double width = 800;
    double height = 800;
    double radius = kDefaultGlyphRadius;
    std::optional<std::string> out;
};

struct ServeArgs {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<std::string> data_dir;
    std::optional<std::string> cache_dir;
    std::optional<std::string> snapshot_dir;
    std::vector<std::string> preload;
};

int run_gen(const GenArgs& a) {
    const auto ds = generate_synthetic(a.params);
    save_manifest(ds, a.out, a.inline_fea ? FeaStorage::Inline : FeaStorage::Sidecar);
    const nlohmann::json summary{
        {"manifest", a.out},
        {"record_count", ds.size()},
        {"attributes", ds.attribute_count()},
        {"fea_dim", ds.fea_dim()},
        {"content_hash", ds.content_hash()},
    };
    std::cout << summary.dump() << '\n';
    return 0;
}

int run_validate(const std::string& manifest) {
    const auto ds = load_manifest(manifest);
    const nlohmann::json summary{
        {"valid", true},
        {"record_count", ds.size()},
        {"attributes", ds.schema().names},
        {"fea_dim", ds.fea_dim()},
        {"content_hash", ds.content_hash()},
    };
    std::cout << summary.dump() << '\n';
    return 0;
}

int run_embed(const EmbedArgs& a) {
    const auto ds = load_manifest(a.manifest);
    if (ds.empty()) throw ArgumentError("manifest has no records to embed");
    const auto space = parse_space(a.space);
    auto cfg = default_config(ds, space);
    if (a.perplexity) cfg.perplexity = *a.perplexity;
    if (a.n_iter) cfg.n_iter = *a.n_iter;
    if (a.learning_rate) cfg.learning_rate = *a.learning_rate;
    if (a.theta) cfg.theta = *a.theta;
    if (a.seed) cfg.seed = *a.seed;
    if (a.pca_predim) cfg.pca_predim = *a.pca_predim;
    if (a.no_pca) cfg.pca_predim.reset();
    cfg.validate();
    const auto result = embed_space(ds, space, cfg);
    write_output(a.out, nlohmann::json(result).dump() + "\n");
    return 0;
}

int run_metrics(const MetricsArgs& a) {
    const auto ds = load_manifest(a.manifest);
    if (!(a.threshold >= 0.0 && a.threshold <= 1.0)) throw ArgumentError("--threshold must lie in [0, 1]");
    const auto filter = a.attributes ? parse_attribute_list(ds.schema(), *a.attributes) : all_attributes(ds);
    auto j = metrics_summary(ds, filter, a.threshold);
    j["threshold"] = a.threshold;
    write_output(a.out, j.dump(1) + "\n");
    return 0;
}

int run_export_svg(const SvgArgs& a) {
    const auto ds = load_manifest(a.manifest);
    FlowerOptions opts;
    opts.mode = parse_flower_mode(a.mode);
    opts.distance = parse_distance_kind(a.distance);
    opts.threshold = a.threshold;
    opts.radius = a.radius;
    const Canvas canvas{a.width, a.height};

    Matrix coords(0, 2);
    if (a.embedding) {
        coords = read_embedding(*a.embedding).coords;
    } else if (!ds.empty()) {
        throw ArgumentError("--embedding is required for a non-empty dataset");
    }
    if (coords.rows() != ds.size()) {
        throw ArgumentError("embedding has " + std::to_string(coords.rows()) + " rows but the dataset has " +
                            std::to_string(ds.size()) + " records");
    }
    std::vector<FlowerGlyphSpec> glyphs;
    if (!ds.empty()) {
        const auto filter = a.attributes ? parse_attribute_list(ds.schema(), *a.attributes) : all_attributes(ds);
        glyphs = layout_flowers(ds, coords, filter, opts);
    } else if (a.attributes) {
        parse_attribute_list(ds.schema(), *a.attributes);
    }
    write_output(a.out, render_svg(glyphs, canvas, Viewport::fit(coords)));
    return 0;
}

HttpService* g_service = nullptr;

extern "C" void on_signal(int) {
    if (g_service != nullptr) g_service->stop();
}

int run_serve(const ServeArgs& a) {
    ExplorerOptions opts;
    if (a.data_dir) opts.data_dir = *a.data_dir;
    if (a.cache_dir) opts.cache_dir = *a.cache_dir;
    if (a.snapshot_dir) opts.snapshot_dir = *a.snapshot_dir;
    HttpService service(opts);
    for (const auto& m : a.preload) {
        const auto added = service.explorer().add_dataset_from_path(m);
        std::cerr << "loaded " << m << " as " << added.id << '\n';
    }
    if (a.port == 0) {
        service.bind_to_any_port(a.host);
    } else {
        service.bind(a.host, a.port);
    }
    std::cerr << "listening on http://" << a.host << ':' << service.port() << '\n';
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    service.listen();
    g_service = nullptr;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Inspect multi-attribute image classifiers: synthetic data, t-SNE views, metrics, flower glyphs"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", "0.3.0");

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-synthetic", "Write a synthetic dataset manifest (and feature sidecar)");
    gen_cmd->add_option("--n", gen.params.n, "Number of records")->capture_default_str();
    gen_cmd->add_option("--k", gen.params.k, "Number of attributes")->capture_default_str();
    gen_cmd->add_option("--d", gen.params.d, "Feature dimension")->capture_default_str();
    gen_cmd->add_option("--clusters", gen.params.n_clusters, "Number of clusters")->capture_default_str();
    gen_cmd->add_option("--noise", gen.params.noise, "Per-entry PRD corruption probability")->capture_default_str();
    gen_cmd->add_option("--seed", gen.params.seed, "Random seed")->capture_default_str();
    gen_cmd->add_option("--out", gen.out, "Manifest path")->required();
    gen_cmd->add_flag("--inline-fea", gen.inline_fea, "Store features inside the manifest");

    std::string validate_manifest;
    auto* validate_cmd = app.add_subcommand("validate", "Load and validate a manifest");
    validate_cmd->add_option("--manifest,manifest", validate_manifest, "Manifest path")->required();

    EmbedArgs emb;
    auto* embed_cmd = app.add_subcommand("embed", "Compute a 2-D t-SNE embedding of one vector space");
    embed_cmd->add_option("--manifest", emb.manifest, "Manifest path")->required();
    embed_cmd->add_option("--space", emb.space, "act, prd or fea")->required();
    embed_cmd->add_option("--perplexity", emb.perplexity, "Target perplexity");
    embed_cmd->add_option("--n-iter", emb.n_iter, "Gradient descent iterations");
    embed_cmd->add_option("--learning-rate", emb.learning_rate, "Learning rate");
    embed_cmd->add_option("--theta", emb.theta, "Barnes-Hut accuracy (0 = exact)");
    embed_cmd->add_option("--seed", emb.seed, "Initialization seed");
    auto* pca_opt = embed_cmd->add_option("--pca-predim", emb.pca_predim, "PCA dimensions before t-SNE");
    embed_cmd->add_flag("--no-pca", emb.no_pca, "Disable PCA pre-reduction")->excludes(pca_opt);
    embed_cmd->add_option("--out", emb.out, "Output file (stdout when absent)");

    MetricsArgs met;
    auto* metrics_cmd = app.add_subcommand("metrics", "Confusion counts, accuracy/precision/recall/F1 and mAP");
    metrics_cmd->add_option("--manifest", met.manifest, "Manifest path")->required();
    metrics_cmd->add_option("--threshold", met.threshold, "Decision threshold (inclusive)")->capture_default_str();
    metrics_cmd->add_option("--attributes", met.attributes, "Comma-separated attribute indices or names");
    metrics_cmd->add_option("--out", met.out, "Output file (stdout when absent)");

    SvgArgs svg;
    auto* svg_cmd = app.add_subcommand("export-svg", "Render attribute flowers at embedding coordinates as SVG");
    svg_cmd->add_option("--manifest", svg.manifest, "Manifest path")->required();
    svg_cmd->add_option("--embedding", svg.embedding, "Embedding JSON written by 'embed'");
    svg_cmd->add_option("--mode", svg.mode, "joint, act or prd")->capture_default_str();
    svg_cmd->add_option("--attributes", svg.attributes, "Comma-separated attribute indices or names");
    svg_cmd->add_option("--distance", svg.distance, "Center dot distance: euclidean or cosine")->capture_default_str();
    svg_cmd->add_option("--threshold", svg.threshold, "Decision threshold")->capture_default_str();
    svg_cmd->add_option("--width", svg.width, "Canvas width in px")->capture_default_str();
    svg_cmd->add_option("--height", svg.height, "Canvas height in px")->capture_default_str();
    svg_cmd->add_option("--radius", svg.radius, "Glyph radius in px")->capture_default_str();
    svg_cmd->add_option("--out", svg.out, "Output file (stdout when absent)");

    ServeArgs srv;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
    serve_cmd->add_option("--host", srv.host, "Bind address")->capture_default_str();
    serve_cmd->add_option("--port", srv.port, "Port (0 picks a free one)")->envname("ATTRSCOPE_PORT")->capture_default_str();
    serve_cmd->add_option("--data-dir", srv.data_dir, "Directory for relative manifest paths")->envname("ATTRSCOPE_DATA_DIR");
    serve_cmd->add_option("--cache-dir", srv.cache_dir, "Embedding cache directory")->envname("ATTRSCOPE_CACHE_DIR");
    serve_cmd->add_option("--snapshot-dir", srv.snapshot_dir, "Session snapshot directory")
        ->envname("ATTRSCOPE_SNAPSHOT_DIR");
    serve_cmd->add_option("--load", srv.preload, "Manifest(s) to load at startup");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*gen_cmd) return run_gen(gen);
        if (*validate_cmd) return run_validate(validate_manifest);
        if (*embed_cmd) return run_embed(emb);
        if (*metrics_cmd) return run_metrics(met);
        if (*svg_cmd) return run_export_svg(svg);
        if (*serve_cmd) return run_serve(srv);
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
