#ifndef ATTRSCOPE_EXPLORER_HPP
#define ATTRSCOPE_EXPLORER_HPP

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "attrscope/dataset.hpp"
#include "attrscope/embedding.hpp"
#include "attrscope/glyph.hpp"
#include "attrscope/metrics.hpp"

namespace attrscope {

struct ExplorerOptions {
    /// Relative manifest paths and fea_file references in uploads resolve here.
    std::filesystem::path data_dir = ".";
    /// Content-hash keyed embedding cache; memory only when unset.
    std::optional<std::filesystem::path> cache_dir;
    /// Sessions are written here as "<id>.json" after each change and reloaded on start.
    std::optional<std::filesystem::path> snapshot_dir;
    /// Called on the worker thread right before an embedding is computed.
    std::function<void(const std::string& job_id)> before_compute;
};

enum class JobStatus { Running, Done, Failed };
std::string_view to_string(JobStatus status);

struct JobView {
    std::string id;
    std::string dataset_id;
    Space space = Space::Act;
    TsneConfig config;
    JobStatus status = JobStatus::Running;
    std::optional<std::string> error;
    bool from_cache = false;
    std::shared_ptr<const EmbeddingResult> result;
};

struct EmbeddingStats {
    std::uint64_t runs = 0;
    std::uint64_t cache_hits = 0;
};

enum class SelectionSource { Lasso, Rectangle, Ids };
std::string_view to_string(SelectionSource source);

struct Selection {
    std::string id;
    /// Dataset record ids, no duplicates; dataset order for geometric selections.
    std::vector<std::string> record_ids;
    std::string color;
    SelectionSource created_from = SelectionSource::Ids;
    std::optional<Space> source_space;
};

struct SelectionRequest {
    SelectionSource source = SelectionSource::Ids;
    std::vector<std::string> record_ids;
    /// Lasso vertices, or the two opposite corners of a rectangle.
    std::vector<Point2> polygon;
    std::optional<Space> space;
};

struct SessionState {
    std::string id;
    std::string dataset_id;
    std::vector<std::size_t> attribute_filter;
    FlowerMode flower_mode = FlowerMode::Joint;
    DistanceKind distance = DistanceKind::Euclidean;
    double threshold = kDefaultThreshold;
    /// Pinned embedding job per space; unpinned spaces use the latest finished job.
    std::map<Space, std::string> embedding_jobs;
    std::vector<Selection> selections;
    std::uint64_t next_selection = 1;
};

struct SelectionMetrics {
    std::string selection_id;
    std::size_t record_count = 0;
    std::vector<std::size_t> attributes;
    ConfusionSummary confusion;
    MetricsReport report;
};

/**
 * Coordination state behind the explorer: loaded datasets, asynchronous
 * embedding jobs, analyst sessions with their selections and filters.
 *
 * Datasets and finished embeddings are immutable and shared. Every
 * mutation happens under one lock; embeddings are computed outside it on
 * worker threads. At most one job per (dataset, space, config) runs at a
 * time. Thread-safe.
 */
class Explorer {
public:
    explicit Explorer(ExplorerOptions options = {});
    ~Explorer();
    Explorer(const Explorer&) = delete;
    Explorer& operator=(const Explorer&) = delete;

    const ExplorerOptions& options() const noexcept { return options_; }

    // Datasets ----------------------------------------------------------------

    struct AddResult {
        std::string id;
        bool created = false;
    };
    /// Registers a dataset under its content id; identical content yields the same id.
    AddResult add_dataset(Dataset dataset);
    /// Loads a manifest from disk (relative paths resolve against data_dir).
    AddResult add_dataset_from_path(const std::filesystem::path& manifest);
    /// Parses an uploaded manifest document, or {"path": ...} naming one on disk.
    AddResult add_dataset_from_json(const nlohmann::json& body);

    std::shared_ptr<const Dataset> dataset(const std::string& id) const;
    std::vector<std::string> dataset_ids() const;
    static std::string dataset_id_for(const Dataset& dataset);

    // Embeddings ----------------------------------------------------------------

    /**
     * Starts (or reuses) the embedding of one space. A finished identical job
     * or a disk-cache entry is returned as Done without recomputing. Throws
     * NotFound for an unknown dataset, Conflict when an identical job is still
     * running, ArgumentError for an invalid config.
     */
    JobView submit_embedding(const std::string& dataset_id, Space space, const TsneConfig& config);
    JobView job(const std::string& dataset_id, const std::string& job_id) const;
    std::vector<JobView> jobs(const std::string& dataset_id) const;
    /// Blocks until the job leaves Running or the timeout passes; returns its view.
    JobView wait_for_job(const std::string& dataset_id, const std::string& job_id,
                         std::chrono::milliseconds timeout = std::chrono::minutes(10)) const;
    /// Most recently finished embedding of the space (NotFound if none).
    std::shared_ptr<const EmbeddingResult> latest_embedding(const std::string& dataset_id, Space space) const;
    EmbeddingStats stats() const;

    // Records, glyphs, metrics ----------------------------------------------------

    nlohmann::json record_detail(const std::string& dataset_id, const std::string& record_id,
                                 double threshold = kDefaultThreshold) const;

    /// One glyph per record at its coordinates in the given (or latest) embedding.
    std::vector<FlowerGlyphSpec> glyphs(const std::string& dataset_id, Space space,
                                        const std::vector<std::size_t>& attributes, const FlowerOptions& options,
                                        const std::optional<std::string>& job_id = std::nullopt) const;

    /// Dataset-wide confusion over the given attributes plus mAP.
    nlohmann::json dataset_metrics(const std::string& dataset_id, const std::vector<std::size_t>& attributes,
                                   double threshold) const;

    /// Resolves an image path of the dataset to a file; NotFound when absent.
    std::filesystem::path image_file(const std::string& dataset_id, const std::string& relative_path) const;

    // Sessions ------------------------------------------------------------------

    SessionState create_session(const std::string& dataset_id);
    SessionState session(const std::string& session_id) const;
    /// Applies a partial update: attribute_filter, flower {mode, distance}, threshold, embeddings {SPACE: job}.
    SessionState update_session(const std::string& session_id, const nlohmann::json& patch);

    Selection create_selection(const std::string& session_id, const SelectionRequest& request);
    Selection selection(const std::string& session_id, const std::string& selection_id) const;
    std::vector<Selection> selections(const std::string& session_id) const;
    void delete_selection(const std::string& session_id, const std::string& selection_id);

    /// Micro-aggregated confusion over selection x attributes (session filter when unset).
    SelectionMetrics selection_metrics(const std::string& session_id, const std::string& selection_id,
                                       const std::optional<std::vector<std::size_t>>& attributes,
                                       std::optional<double> threshold) const;

private:
    struct Job;

    std::shared_ptr<const Dataset> dataset_locked(const std::string& id) const;
    SessionState& session_locked(const std::string& id);
    const SessionState& session_locked(const std::string& id) const;
    std::shared_ptr<const EmbeddingResult> embedding_locked(const std::string& dataset_id, Space space,
                                                            const std::optional<std::string>& job_id) const;
    JobView view_locked(const Job& job) const;
    void run_job(std::stop_token stop, std::shared_ptr<Job> job, std::shared_ptr<const Dataset> dataset);
    void persist_locked(const SessionState& s) const;
    void load_snapshots();

    ExplorerOptions options_;
    std::optional<EmbeddingCache> cache_;

    mutable std::mutex mutex_;
    mutable std::condition_variable job_changed_;
    std::map<std::string, std::shared_ptr<const Dataset>> datasets_;
    std::map<std::string, std::shared_ptr<Job>> jobs_;
    std::map<std::pair<std::string, Space>, std::string> latest_job_;
    std::map<std::string, SessionState> sessions_;
    std::uint64_t next_session_ = 1;
    EmbeddingStats stats_;

    struct Worker {
        std::shared_ptr<std::atomic<bool>> finished;
        std::jthread thread;
    };
    // Declared last: destroyed (stopped and joined) before the state above.
    std::vector<Worker> workers_;
};

// JSON views used by the HTTP layer and by scripted clients.
nlohmann::json to_json(const JobView& job, bool include_result);
void to_json(nlohmann::json& j, const Selection& selection);
void to_json(nlohmann::json& j, const SessionState& session);
void to_json(nlohmann::json& j, const SelectionMetrics& metrics);
Selection selection_from_json(const nlohmann::json& j);
SessionState session_from_json(const nlohmann::json& j);

} // namespace attrscope

#endif
