#pragma once

// Operational shell: append-only event log with snapshots and replay, the
// engine that serializes writes over one experiment, external annotation
// import, and the HTTP/JSON route table.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "gap/allocation.hpp"
#include "gap/analysis.hpp"
#include "gap/screening.hpp"
#include "gap/simagents.hpp"

namespace gap::service {

// ---- events ----

struct Event {
    std::uint64_t seq = 0;
    std::string kind;
    Json payload;
    Timestamp at = 0;
    friend bool operator==(const Event&, const Event&) = default;
};

Json to_json(const Event& e);
Event event_from_json(const Json& j);

const std::vector<std::string>& event_kinds();
/// Throws InvalidEvent when the kind is unknown or the payload misses a field.
void validate_event(std::string_view kind, const Json& payload);
/// Throws CorruptLog unless seqs run first, first+1, ... without gaps.
void check_sequence(const std::vector<Event>& events, std::uint64_t first = 1);

std::vector<Event> parse_event_log(std::istream& in);
std::vector<Event> read_event_log(const std::filesystem::path& file);

/// Append-only JSON-lines log. A default-constructed log is memory only.
class EventLog {
public:
    EventLog() = default;
    /// Loads existing lines (CorruptLog on a gap) and appends after them.
    explicit EventLog(std::filesystem::path file);

    std::uint64_t append(std::string_view kind, Json payload, Timestamp at);
    std::uint64_t last_seq() const;
    std::vector<Event> events() const;
    std::vector<Event> since(std::uint64_t seq) const;

private:
    mutable std::mutex mutex_;
    std::optional<std::filesystem::path> file_;
    std::ofstream out_;
    std::vector<Event> events_;
};

/// Validates the payload, assigns the next seq and appends.
std::uint64_t append_event(EventLog& log, const Event& event);

// ---- snapshots and replay ----

struct Snapshot {
    std::uint64_t seq = 0;  // last event folded into `state`
    Json state;
};
Json to_json(const Snapshot& s);
Snapshot snapshot_from_json(const Json& j);

struct ExperimentSetup {
    ExperimentConfig config;
    AllocationOptions allocation;
};
Json to_json(const ExperimentSetup& s);
ExperimentSetup experiment_setup_from_json(const Json& j);

/// Re-executes one logged command. Derived events are checked against the
/// state they describe; any disagreement throws CorruptLog.
void apply_event(Experiment& exp, const Event& event);

/// Rebuilds state from the log, or from `snapshot` plus the events after it.
Experiment replay(const ExperimentSetup& setup, const std::vector<Event>& events, std::shared_ptr<BlobStore> blobs,
                  const Snapshot* snapshot = nullptr);

// ---- import / export ----

/// Registers the rows' stimuli (when new) and their annotations. When `set` is
/// given every row must belong to it. All-or-nothing: rows are checked first.
std::size_t import_external_annotations(Experiment& exp, std::istream& csv, const std::optional<std::string>& set,
                                        Timestamp now);
std::size_t import_external_annotations(Experiment& exp, const std::filesystem::path& csv,
                                        const std::optional<std::string>& set, Timestamp now);

Json export_corpus(const Experiment& exp);
/// set,lemma,count over all stored annotations.
std::string export_wordcounts(const Experiment& exp);
std::string export_events(const std::vector<Event>& events);

// ---- configuration ----

struct SeedSpec {
    ChainId chain_id;
    std::string sentence_id;
    std::filesystem::path audio;
};

struct ExternalSet {
    std::string set;
    std::filesystem::path annotations;  // annotation CSV
};

struct ServiceConfig {
    ExperimentConfig experiment;
    sim::AgentParams agent;
    std::uint64_t seed = 1;
    Timestamp trial_deadline_ms = 10 * 60 * 1000;
    std::uint64_t snapshot_every = 1000;
    screening::ScreeningFixtures fixtures;
    std::vector<SeedSpec> seeds;
    std::vector<ExternalSet> external;
};

/// Top level mirrors ExperimentConfig; "agent_params", "seed",
/// "trial_deadline_ms", "snapshot_every", "screening", "seeds" and "external"
/// are optional. Relative paths resolve against `base_dir`.
ServiceConfig service_config_from_json(const Json& j, const std::filesystem::path& base_dir = {});
ServiceConfig load_service_config(const std::filesystem::path& file);

// ---- batch runs ----

/// Simulated run written as simrun.json, annotations.csv, events.jsonl,
/// state.json, corpus.json, final_stimuli.txt and trend.csv. Returns a summary.
Json simulate_to_dir(const ServiceConfig& config, std::uint64_t seed, const std::filesystem::path& out_dir);
/// Analysis of an annotation CSV written with analysis::write_report. Returns the summary.
Json analyze_to_dir(const std::filesystem::path& csv, const std::filesystem::path& out_dir,
                    const analysis::AnalysisOptions& options);

// ---- engine ----

using Clock = std::function<Timestamp()>;
Timestamp system_clock_ms();

/// One experiment behind a single writer. Every write appends its events to
/// the log before the lock is released; reads share the lock.
class Engine {
public:
    /// With an empty `data_dir` everything stays in memory. An existing data
    /// directory is recovered from its latest snapshot plus the log tail; its
    /// stored setup must match the config.
    Engine(ServiceConfig config, std::filesystem::path data_dir, Clock clock = system_clock_ms);
    /// Opens an existing data directory with the setup stored in it.
    static std::unique_ptr<Engine> open_existing(const std::filesystem::path& data_dir, Clock clock = system_clock_ms);
    ~Engine();

    template <typename F>
    decltype(auto) write(F&& f) {
        std::unique_lock lock(mutex_);
        struct After {
            Engine* e;
            ~After() { e->after_write(); }
        } after{this};
        return f(*exp_);
    }

    template <typename F>
    decltype(auto) read(F&& f) const {
        std::shared_lock lock(mutex_);
        return f(static_cast<const Experiment&>(*exp_));
    }

    Timestamp now() const { return clock_(); }
    const ServiceConfig& config() const noexcept { return config_; }
    const ExperimentSetup& setup() const noexcept { return setup_; }
    const std::filesystem::path& data_dir() const noexcept { return data_dir_; }
    std::shared_ptr<BlobStore> blobs() const { return blobs_; }
    screening::Transcriber& transcriber() { return *transcriber_; }
    void set_transcriber(std::unique_ptr<screening::Transcriber> t) { transcriber_ = std::move(t); }

    std::vector<Event> events() const { return log_->events(); }
    std::uint64_t last_seq() const { return log_->last_seq(); }
    Json state_json() const;
    /// Writes a snapshot of the current state (to disk when persistent).
    Snapshot snapshot();

private:
    void after_write();
    void persist(const Snapshot& s);
    void bootstrap();

    ServiceConfig config_;
    ExperimentSetup setup_;
    std::filesystem::path data_dir_;
    Clock clock_;
    std::shared_ptr<BlobStore> blobs_;
    std::unique_ptr<EventLog> log_;
    std::unique_ptr<Experiment> exp_;
    std::unique_ptr<screening::Transcriber> transcriber_;
    std::uint64_t last_snapshot_seq_ = 0;
    mutable std::shared_mutex mutex_;
};

// ---- HTTP/JSON routes ----

struct UploadedFile {
    std::string content;
    std::string content_type;
};

struct Request {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;  // JSON for the JSON routes
    std::map<std::string, std::string> form;
    std::map<std::string, UploadedFile> files;
};

struct Response {
    int status = 200;
    Json body;
};

int http_status(Errc code) noexcept;

/// Dispatches one request against the engine. Errors come back as
/// {"error": <code name>, "message": ..., "subject"?: ...} with a 4xx/5xx status.
Response handle(Engine& engine, const Request& request);

std::string base64_encode(std::string_view bytes);

}  // namespace gap::service
