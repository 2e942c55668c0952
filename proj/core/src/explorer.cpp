#include "attrscope/explorer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <set>

#include "attrscope/error.hpp"
#include "attrscope/polygon.hpp"

namespace attrscope {

namespace {

constexpr std::array<std::string_view, 8> kSelectionPalette = {
    "#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00", "#a65628", "#f781bf", "#999999",
};

constexpr std::size_t kIdLength = 16;

bool is_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::string percent_encode_path(std::string_view path) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : path) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~' || c == '/') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0x0f]);
        }
    }
    return out;
}

} // namespace

std::string_view to_string(JobStatus status) {
    switch (status) {
    case JobStatus::Running: return "running";
    case JobStatus::Done: return "done";
    case JobStatus::Failed: return "failed";
    }
    return "?";
}

std::string_view to_string(SelectionSource source) {
    switch (source) {
    case SelectionSource::Lasso: return "lasso";
    case SelectionSource::Rectangle: return "rectangle";
    case SelectionSource::Ids: return "ids";
    }
    return "?";
}

struct Explorer::Job {
    std::string id;
    std::string key;
    std::string dataset_id;
    Space space = Space::Act;
    TsneConfig config;
    JobStatus status = JobStatus::Running;
    std::string error;
    bool from_cache = false;
    std::shared_ptr<const EmbeddingResult> result;
};

Explorer::Explorer(ExplorerOptions options) : options_(std::move(options)) {
    if (options_.cache_dir) cache_.emplace(*options_.cache_dir);
    if (options_.snapshot_dir) load_snapshots();
}

Explorer::~Explorer() {
    // jthread destructors request stop and join; running t-SNE loops observe
    // the stop token and unwind with Cancelled.
    for (auto& w : workers_) w.thread.request_stop();
}

// Datasets --------------------------------------------------------------------

std::string Explorer::dataset_id_for(const Dataset& dataset) { return dataset.content_hash().substr(0, kIdLength); }

Explorer::AddResult Explorer::add_dataset(Dataset dataset) {
    auto id = dataset_id_for(dataset);
    std::lock_guard lock(mutex_);
    if (datasets_.contains(id)) return {id, false};
    datasets_.emplace(id, std::make_shared<const Dataset>(std::move(dataset)));
    return {id, true};
}

Explorer::AddResult Explorer::add_dataset_from_path(const std::filesystem::path& manifest) {
    const auto path = manifest.is_absolute() ? manifest : options_.data_dir / manifest;
    return add_dataset(load_manifest(path));
}

Explorer::AddResult Explorer::add_dataset_from_json(const nlohmann::json& body) {
    if (body.is_object() && body.contains("path") && !body.contains("images")) {
        if (!body["path"].is_string()) throw SchemaError("\"path\" must be a string");
        return add_dataset_from_path(body["path"].get<std::string>());
    }
    return add_dataset(dataset_from_json(body, options_.data_dir));
}

std::shared_ptr<const Dataset> Explorer::dataset_locked(const std::string& id) const {
    auto it = datasets_.find(id);
    if (it == datasets_.end()) throw NotFound("unknown dataset '" + id + "'");
    return it->second;
}

std::shared_ptr<const Dataset> Explorer::dataset(const std::string& id) const {
    std::lock_guard lock(mutex_);
    return dataset_locked(id);
}

std::vector<std::string> Explorer::dataset_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : datasets_) ids.push_back(id);
    return ids;
}

// Embeddings ------------------------------------------------------------------

JobView Explorer::view_locked(const Job& job) const {
    JobView v;
    v.id = job.id;
    v.dataset_id = job.dataset_id;
    v.space = job.space;
    v.config = job.config;
    v.status = job.status;
    if (job.status == JobStatus::Failed) v.error = job.error;
    v.from_cache = job.from_cache;
    v.result = job.result;
    return v;
}

JobView Explorer::submit_embedding(const std::string& dataset_id, Space space, const TsneConfig& config) {
    std::lock_guard lock(mutex_);
    auto ds = dataset_locked(dataset_id);
    if (ds->empty()) throw ArgumentError("dataset '" + dataset_id + "' has no records to embed");
    config.validate();
    if (ds->size() >= 2 && config.perplexity >= static_cast<double>(ds->size())) {
        throw ArgumentError("perplexity " + std::to_string(config.perplexity) +
                            " must be smaller than the number of records (" + std::to_string(ds->size()) + ")");
    }

    // Reap workers whose jobs are over.
    std::erase_if(workers_, [](const Worker& w) { return w.finished->load(); });

    const auto key = embedding_cache_key(*ds, space, config);
    const auto id = key.substr(0, kIdLength);
    if (auto it = jobs_.find(id); it != jobs_.end()) {
        const auto& existing = *it->second;
        if (existing.status == JobStatus::Running) {
            throw Conflict("an identical embedding job (" + id + ") is already running");
        }
        if (existing.status == JobStatus::Done) {
            ++stats_.cache_hits;
            return view_locked(existing);
        }
        // A failed job is retried below.
    }

    auto job = std::make_shared<Job>();
    job->id = id;
    job->key = key;
    job->dataset_id = dataset_id;
    job->space = space;
    job->config = config;

    if (cache_) {
        if (auto cached = cache_->load(key); cached && cached->coords.rows() == ds->size()) {
            job->status = JobStatus::Done;
            job->from_cache = true;
            job->result = std::make_shared<const EmbeddingResult>(std::move(*cached));
            jobs_[id] = job;
            latest_job_[{dataset_id, space}] = id;
            ++stats_.cache_hits;
            return view_locked(*job);
        }
    }

    jobs_[id] = job;
    auto finished = std::make_shared<std::atomic<bool>>(false);
    workers_.push_back(Worker{finished, std::jthread([this, job, ds, finished](std::stop_token stop) {
                                  run_job(stop, job, ds);
                                  finished->store(true);
                              })});
    return view_locked(*job);
}

void Explorer::run_job(std::stop_token stop, std::shared_ptr<Job> job, std::shared_ptr<const Dataset> dataset) {
    try {
        if (options_.before_compute) options_.before_compute(job->id);
        {
            std::lock_guard lock(mutex_);
            ++stats_.runs;
        }
        auto result = std::make_shared<const EmbeddingResult>(embed_space(*dataset, job->space, job->config, stop));
        if (cache_) {
            try {
                cache_->store(job->key, *result);
            } catch (const Error&) {
                // The in-memory result is still served; only persistence failed.
            }
        }
        std::lock_guard lock(mutex_);
        job->result = std::move(result);
        job->status = JobStatus::Done;
        latest_job_[{job->dataset_id, job->space}] = job->id;
    } catch (const std::exception& e) {
        std::lock_guard lock(mutex_);
        job->status = JobStatus::Failed;
        job->error = e.what();
    }
    job_changed_.notify_all();
}

JobView Explorer::job(const std::string& dataset_id, const std::string& job_id) const {
    std::lock_guard lock(mutex_);
    dataset_locked(dataset_id);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end() || it->second->dataset_id != dataset_id) throw NotFound("unknown job '" + job_id + "'");
    return view_locked(*it->second);
}

std::vector<JobView> Explorer::jobs(const std::string& dataset_id) const {
    std::lock_guard lock(mutex_);
    dataset_locked(dataset_id);
    std::vector<JobView> out;
    for (const auto& [id, job] : jobs_) {
        if (job->dataset_id == dataset_id) out.push_back(view_locked(*job));
    }
    return out;
}

JobView Explorer::wait_for_job(const std::string& dataset_id, const std::string& job_id,
                               std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    dataset_locked(dataset_id);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end() || it->second->dataset_id != dataset_id) throw NotFound("unknown job '" + job_id + "'");
    const auto job = it->second;
    job_changed_.wait_for(lock, timeout, [&] { return job->status != JobStatus::Running; });
    return view_locked(*job);
}

std::shared_ptr<const EmbeddingResult> Explorer::embedding_locked(const std::string& dataset_id, Space space,
                                                                  const std::optional<std::string>& job_id) const {
    std::string id;
    if (job_id) {
        id = *job_id;
    } else {
        auto it = latest_job_.find({dataset_id, space});
        if (it == latest_job_.end()) {
            throw NotFound("no finished " + std::string(to_string(space)) + " embedding for dataset '" + dataset_id + "'");
        }
        id = it->second;
    }
    auto it = jobs_.find(id);
    if (it == jobs_.end() || it->second->dataset_id != dataset_id || it->second->space != space) {
        throw NotFound("unknown " + std::string(to_string(space)) + " embedding job '" + id + "'");
    }
    if (it->second->status != JobStatus::Done) throw NotFound("embedding job '" + id + "' has not finished");
    return it->second->result;
}

std::shared_ptr<const EmbeddingResult> Explorer::latest_embedding(const std::string& dataset_id, Space space) const {
    std::lock_guard lock(mutex_);
    dataset_locked(dataset_id);
    return embedding_locked(dataset_id, space, std::nullopt);
}

EmbeddingStats Explorer::stats() const {
    std::lock_guard lock(mutex_);
    return stats_;
}

// Records, glyphs, metrics ----------------------------------------------------

nlohmann::json Explorer::record_detail(const std::string& dataset_id, const std::string& record_id,
                                       double threshold) const {
    const auto ds = dataset(dataset_id);
    const auto* r = ds->find(record_id);
    if (r == nullptr) throw NotFound("unknown record '" + record_id + "'");

    auto attrs = nlohmann::json::array();
    for (std::size_t a = 0; a < ds->attribute_count(); ++a) {
        attrs.push_back({
            {"index", a},
            {"name", ds->schema().names[a]},
            {"color", ds->schema().colors[a]},
            {"act", static_cast<int>(r->act[a])},
            {"prd", r->prd[a]},
            {"outcome", to_string(classify_outcome(r->act[a], r->prd[a], threshold))},
        });
    }
    nlohmann::json j;
    j["id"] = r->id;
    j["dataset"] = dataset_id;
    j["path"] = r->image_path ? nlohmann::json(*r->image_path) : nlohmann::json(nullptr);
    j["thumbnail_url"] = r->image_path ? nlohmann::json("/datasets/" + dataset_id + "/images/" +
                                                        percent_encode_path(*r->image_path))
                                       : nlohmann::json(nullptr);
    j["threshold"] = threshold;
    j["attributes"] = std::move(attrs);
    j["distances"] = {
        {"euclidean", error_distance(r->act, r->prd, DistanceKind::Euclidean)},
        {"cosine", error_distance(r->act, r->prd, DistanceKind::Cosine)},
    };
    j["fea_dim"] = ds->fea_dim();
    return j;
}

std::vector<FlowerGlyphSpec> Explorer::glyphs(const std::string& dataset_id, Space space,
                                              const std::vector<std::size_t>& attributes, const FlowerOptions& options,
                                              const std::optional<std::string>& job_id) const {
    std::shared_ptr<const Dataset> ds;
    std::shared_ptr<const EmbeddingResult> emb;
    {
        std::lock_guard lock(mutex_);
        ds = dataset_locked(dataset_id);
        emb = embedding_locked(dataset_id, space, job_id);
    }
    const auto filter = attributes.empty() ? all_attributes(*ds) : attributes;
    return layout_flowers(*ds, emb->coords, filter, options);
}

nlohmann::json Explorer::dataset_metrics(const std::string& dataset_id, const std::vector<std::size_t>& attributes,
                                         double threshold) const {
    const auto ds = dataset(dataset_id);
    auto j = metrics_summary(*ds, attributes.empty() ? all_attributes(*ds) : attributes, threshold);
    j["dataset"] = dataset_id;
    return j;
}

std::filesystem::path Explorer::image_file(const std::string& dataset_id, const std::string& relative_path) const {
    const auto ds = dataset(dataset_id);
    // Only paths declared by a record are served.
    const bool declared = std::any_of(ds->records().begin(), ds->records().end(),
                                      [&](const ImageRecord& r) { return r.image_path == relative_path; });
    if (!declared) throw NotFound("no record of dataset '" + dataset_id + "' has image '" + relative_path + "'");
    const auto base = ds->base_dir().empty() ? options_.data_dir : ds->base_dir();
    auto path = base / relative_path;
    if (!std::filesystem::is_regular_file(path)) throw NotFound("image file missing: " + relative_path);
    return path;
}

// Sessions --------------------------------------------------------------------

SessionState& Explorer::session_locked(const std::string& id) {
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFound("unknown session '" + id + "'");
    return it->second;
}

const SessionState& Explorer::session_locked(const std::string& id) const {
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFound("unknown session '" + id + "'");
    return it->second;
}

SessionState Explorer::create_session(const std::string& dataset_id) {
    std::lock_guard lock(mutex_);
    const auto ds = dataset_locked(dataset_id);
    SessionState s;
    s.id = "s" + std::to_string(next_session_++);
    s.dataset_id = dataset_id;
    s.attribute_filter = all_attributes(*ds);
    auto& stored = sessions_[s.id] = std::move(s);
    persist_locked(stored);
    return stored;
}

SessionState Explorer::session(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    return session_locked(session_id);
}

SessionState Explorer::update_session(const std::string& session_id, const nlohmann::json& patch) {
    if (!patch.is_object()) throw ArgumentError("session update must be a JSON object");
    std::lock_guard lock(mutex_);
    SessionState updated = session_locked(session_id);
    const auto ds = dataset_locked(updated.dataset_id);

    if (auto it = patch.find("attribute_filter"); it != patch.end()) {
        updated.attribute_filter = it->is_string() ? parse_attribute_list(ds->schema(), it->get<std::string>())
                                                   : attribute_list_from_json(ds->schema(), *it);
    }
    if (auto it = patch.find("flower"); it != patch.end()) {
        if (!it->is_object()) throw ArgumentError("\"flower\" must be an object");
        if (auto m = it->find("mode"); m != it->end()) updated.flower_mode = parse_flower_mode(m->get<std::string>());
        if (auto d = it->find("distance"); d != it->end()) updated.distance = parse_distance_kind(d->get<std::string>());
    }
    if (auto it = patch.find("threshold"); it != patch.end()) {
        if (!it->is_number()) throw ArgumentError("threshold must be a number");
        const double t = it->get<double>();
        if (!(t >= 0.0 && t <= 1.0)) throw ArgumentError("threshold must lie in [0, 1]");
        updated.threshold = t;
    }
    if (auto it = patch.find("embeddings"); it != patch.end()) {
        if (!it->is_object()) throw ArgumentError("\"embeddings\" must map spaces to job ids");
        for (const auto& [name, job] : it->items()) {
            const auto space = parse_space(name);
            if (job.is_null()) {
                updated.embedding_jobs.erase(space);
                continue;
            }
            if (!job.is_string()) throw ArgumentError("embedding job ids must be strings");
            embedding_locked(updated.dataset_id, space, job.get<std::string>());
            updated.embedding_jobs[space] = job.get<std::string>();
        }
    }

    auto& stored = session_locked(session_id);
    stored = std::move(updated);
    persist_locked(stored);
    return stored;
}

Selection Explorer::create_selection(const std::string& session_id, const SelectionRequest& request) {
    std::lock_guard lock(mutex_);
    auto& s = session_locked(session_id);
    const auto ds = dataset_locked(s.dataset_id);

    Selection sel;
    sel.created_from = request.source;
    sel.source_space = request.space;

    if (request.source == SelectionSource::Ids) {
        std::set<std::string> seen;
        for (const auto& id : request.record_ids) {
            if (!ds->index_of(id)) throw ArgumentError("unknown record '" + id + "'");
            if (seen.insert(id).second) sel.record_ids.push_back(id);
        }
    } else {
        if (!request.space) throw ArgumentError("geometric selections need a space");
        std::optional<std::string> pinned;
        if (auto it = s.embedding_jobs.find(*request.space); it != s.embedding_jobs.end()) pinned = it->second;
        const auto emb = embedding_locked(s.dataset_id, *request.space, pinned);

        std::vector<Point2> polygon = request.polygon;
        if (request.source == SelectionSource::Rectangle) {
            if (polygon.size() != 2) throw ArgumentError("a rectangle is given by two opposite corners");
            const auto [a, b] = std::pair{polygon[0], polygon[1]};
            polygon = {{a.x, a.y}, {b.x, a.y}, {b.x, b.y}, {a.x, b.y}};
        }
        for (auto i : points_in_polygon(emb->coords, polygon)) sel.record_ids.push_back(ds->record(i).id);
    }

    const auto n = s.next_selection++;
    sel.id = "sel-" + std::to_string(n);
    sel.color = std::string(kSelectionPalette[(n - 1) % kSelectionPalette.size()]);
    s.selections.push_back(sel);
    persist_locked(s);
    return sel;
}

Selection Explorer::selection(const std::string& session_id, const std::string& selection_id) const {
    std::lock_guard lock(mutex_);
    const auto& s = session_locked(session_id);
    for (const auto& sel : s.selections) {
        if (sel.id == selection_id) return sel;
    }
    throw NotFound("unknown selection '" + selection_id + "'");
}

std::vector<Selection> Explorer::selections(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    return session_locked(session_id).selections;
}

void Explorer::delete_selection(const std::string& session_id, const std::string& selection_id) {
    std::lock_guard lock(mutex_);
    auto& s = session_locked(session_id);
    const auto removed = std::erase_if(s.selections, [&](const Selection& sel) { return sel.id == selection_id; });
    if (removed == 0) throw NotFound("unknown selection '" + selection_id + "'");
    persist_locked(s);
}

SelectionMetrics Explorer::selection_metrics(const std::string& session_id, const std::string& selection_id,
                                             const std::optional<std::vector<std::size_t>>& attributes,
                                             std::optional<double> threshold) const {
    const auto sel = selection(session_id, selection_id);
    const auto s = session(session_id);
    const auto ds = dataset(s.dataset_id);

    SelectionMetrics m;
    m.selection_id = sel.id;
    m.record_count = sel.record_ids.size();
    m.attributes = attributes ? *attributes : s.attribute_filter;
    if (m.attributes.empty()) throw ArgumentError("attribute filter must not be empty");

    std::vector<std::size_t> rows;
    rows.reserve(sel.record_ids.size());
    for (const auto& id : sel.record_ids) rows.push_back(*ds->index_of(id));
    m.confusion = confusion(*ds, rows, m.attributes, threshold.value_or(s.threshold));
    m.report = report(m.confusion);
    return m;
}

// Snapshots -------------------------------------------------------------------

void Explorer::persist_locked(const SessionState& s) const {
    if (!options_.snapshot_dir) return;
    std::error_code ec;
    std::filesystem::create_directories(*options_.snapshot_dir, ec);
    const auto path = *options_.snapshot_dir / (s.id + ".json");
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw IoError("cannot write session snapshot " + tmp.string());
        out << nlohmann::json(s).dump(1) << '\n';
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot write session snapshot: " + ec.message());
}

void Explorer::load_snapshots() {
    const auto& dir = *options_.snapshot_dir;
    if (!std::filesystem::is_directory(dir)) return;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::ifstream in(f);
        SessionState s;
        try {
            s = session_from_json(nlohmann::json::parse(in));
        } catch (const std::exception&) {
            continue; // unreadable snapshots are skipped
        }
        if (s.id.size() > 1 && s.id[0] == 's' && is_digits(std::string_view(s.id).substr(1))) {
            next_session_ = std::max<std::uint64_t>(next_session_, std::stoull(s.id.substr(1)) + 1);
        }
        sessions_[s.id] = std::move(s);
    }
}

// JSON ------------------------------------------------------------------------

nlohmann::json to_json(const JobView& job, bool include_result) {
    nlohmann::json j{
        {"job", job.id},
        {"dataset", job.dataset_id},
        {"space", to_string(job.space)},
        {"status", to_string(job.status)},
        {"config", job.config},
        {"from_cache", job.from_cache},
    };
    if (job.error) j["error"] = *job.error;
    if (include_result && job.result) j["result"] = *job.result;
    return j;
}

void to_json(nlohmann::json& j, const Selection& s) {
    j = nlohmann::json{
        {"id", s.id},
        {"record_ids", s.record_ids},
        {"size", s.record_ids.size()},
        {"color", s.color},
        {"created_from", to_string(s.created_from)},
        {"source_space", s.source_space ? nlohmann::json(to_string(*s.source_space)) : nlohmann::json(nullptr)},
    };
}

void to_json(nlohmann::json& j, const SessionState& s) {
    nlohmann::json embeddings = nlohmann::json::object();
    for (const auto& [space, job] : s.embedding_jobs) embeddings[std::string(to_string(space))] = job;
    j = nlohmann::json{
        {"id", s.id},
        {"dataset", s.dataset_id},
        {"attribute_filter", s.attribute_filter},
        {"flower", {{"mode", to_string(s.flower_mode)}, {"distance", to_string(s.distance)}}},
        {"threshold", s.threshold},
        {"embeddings", std::move(embeddings)},
        {"selections", s.selections},
        {"next_selection", s.next_selection},
    };
}

void to_json(nlohmann::json& j, const SelectionMetrics& m) {
    j = nlohmann::json{
        {"selection", m.selection_id},
        {"record_count", m.record_count},
        {"attributes", m.attributes},
        {"confusion", m.confusion},
        {"report", m.report},
    };
}

Selection selection_from_json(const nlohmann::json& j) {
    try {
        Selection s;
        s.id = j.at("id").get<std::string>();
        s.record_ids = j.at("record_ids").get<std::vector<std::string>>();
        s.color = j.at("color").get<std::string>();
        const auto src = j.at("created_from").get<std::string>();
        if (src == "lasso") {
            s.created_from = SelectionSource::Lasso;
        } else if (src == "rectangle") {
            s.created_from = SelectionSource::Rectangle;
        } else if (src == "ids") {
            s.created_from = SelectionSource::Ids;
        } else {
            throw ParseError("unknown selection source '" + src + "'");
        }
        if (!j.at("source_space").is_null()) s.source_space = parse_space(j.at("source_space").get<std::string>());
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed selection: ") + e.what());
    }
}

SessionState session_from_json(const nlohmann::json& j) {
    try {
        SessionState s;
        s.id = j.at("id").get<std::string>();
        s.dataset_id = j.at("dataset").get<std::string>();
        s.attribute_filter = j.at("attribute_filter").get<std::vector<std::size_t>>();
        s.flower_mode = parse_flower_mode(j.at("flower").at("mode").get<std::string>());
        s.distance = parse_distance_kind(j.at("flower").at("distance").get<std::string>());
        s.threshold = j.at("threshold").get<double>();
        for (const auto& [name, job] : j.at("embeddings").items()) s.embedding_jobs[parse_space(name)] = job.get<std::string>();
        for (const auto& sel : j.at("selections")) s.selections.push_back(selection_from_json(sel));
        s.next_selection = j.at("next_selection").get<std::uint64_t>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed session: ") + e.what());
    }
}

} // namespace attrscope
