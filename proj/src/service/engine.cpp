#include <chrono>
#include <cstdio>
#include <sstream>

#include "gap/analysis.hpp"
#include "gap/service.hpp"

namespace gap::service {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(Errc::StorageError, "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const fs::path& p, const std::string& content) {
    auto tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        if (!out.flush()) fail(Errc::StorageError, "cannot write " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, p, ec);
    if (ec) fail(Errc::StorageError, "cannot move " + tmp.string() + " into place: " + ec.message());
}

}  // namespace

// ---- configuration ----

ServiceConfig service_config_from_json(const Json& j, const fs::path& base_dir) {
    if (!j.is_object()) fail(Errc::InvalidConfig, "config must be a JSON object");
    ServiceConfig c;
    try {
        c.experiment = config_from_json(j);
        if (j.contains("agent_params")) c.agent = sim::agent_params_from_json(j.at("agent_params"));
        if (j.contains("seed")) {
            const auto& s = j.at("seed");
            c.seed = s.is_string() ? std::stoull(s.get<std::string>()) : s.get<std::uint64_t>();
        }
        c.trial_deadline_ms = j.value("trial_deadline_ms", c.trial_deadline_ms);
        c.snapshot_every = j.value("snapshot_every", c.snapshot_every);
        if (j.contains("screening")) c.fixtures = screening::screening_fixtures_from_json(j.at("screening"));
        for (const auto& s : j.value("seeds", Json::array()))
            c.seeds.push_back({s.at("chain_id").get<std::string>(), s.at("sentence_id").get<std::string>(),
                               resolve(base_dir, s.at("audio").get<std::string>())});
        for (const auto& x : j.value("external", Json::array()))
            c.external.push_back({x.at("set").get<std::string>(), resolve(base_dir, x.at("annotations").get<std::string>())});
    } catch (const Json::exception& ex) {
        fail(Errc::InvalidConfig, ex.what());
    } catch (const std::logic_error& ex) {
        fail(Errc::InvalidConfig, std::string("bad seed: ") + ex.what());
    }
    if (c.trial_deadline_ms <= 0) fail(Errc::InvalidConfig, "trial_deadline_ms must be positive");
    return c;
}

ServiceConfig load_service_config(const fs::path& file) {
    Json j;
    try {
        j = Json::parse(read_file(file));
    } catch (const Json::exception& ex) {
        fail(Errc::InvalidConfig, file.string() + ": " + ex.what());
    }
    return service_config_from_json(j, file.parent_path());
}

Timestamp system_clock_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

// ---- import / export ----

std::size_t import_external_annotations(Experiment& exp, std::istream& csv, const std::optional<std::string>& set,
                                        Timestamp now) {
    const auto rows = analysis::read_annotation_csv(csv, exp.config());
    std::vector<Stimulus> fresh;
    std::map<std::string, std::string> seen;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const auto row = std::to_string(i + 1);
        if (set && r.set != *set)
            fail(Errc::ImportError, "row " + row + ": set '" + r.set + "' differs from the import set '" + *set + "'", row);
        if (auto it = exp.stimuli().find(r.stimulus_id); it != exp.stimuli().end()) {
            if (it->second.set != r.set)
                fail(Errc::ImportError, "row " + row + ": stimulus " + r.stimulus_id + " is registered under set " + it->second.set,
                     row);
            continue;
        }
        auto [it, inserted] = seen.emplace(r.stimulus_id, r.set);
        if (!inserted) {
            if (it->second != r.set)
                fail(Errc::ImportError, "row " + row + ": stimulus " + r.stimulus_id + " appears under two sets", row);
            continue;
        }
        fresh.push_back(Stimulus{r.stimulus_id, r.set, r.generation, std::nullopt});
    }
    if (!fresh.empty()) exp.register_stimuli(fresh, now);
    for (const auto& r : rows) exp.add_external_annotation(r.record, now);
    return rows.size();
}

std::size_t import_external_annotations(Experiment& exp, const fs::path& csv, const std::optional<std::string>& set,
                                        Timestamp now) {
    std::ifstream in(csv);
    if (!in) fail(Errc::ImportError, "cannot open " + csv.string(), "0");
    return import_external_annotations(exp, in, set, now);
}

Json export_corpus(const Experiment& exp) {
    auto corpus = exp.corpus();
    Json recs = Json::object();
    for (const auto& e : corpus.entries) {
        const auto& r = exp.recording(e.recording_id);
        recs[r.id] = {{"blob_digest", r.blob_digest},
                      {"chain_id", r.chain_id},
                      {"generation_index", r.generation_index},
                      {"sentence_id", r.sentence_id}};
    }
    auto j = gap::to_json(corpus);
    j["recordings"] = recs;
    j["n_entries"] = corpus.entries.size();
    j["n_unique"] = corpus.unique_recordings.size();
    return j;
}

std::string export_wordcounts(const Experiment& exp) {
    std::map<std::string, std::map<std::string, int>> counts;
    for (const auto& a : exp.annotations()) {
        auto it = exp.stimuli().find(a.stimulus_id);
        const std::string set = it == exp.stimuli().end() ? "unknown" : it->second.set;
        ++counts[set][analysis::lemmatize(a.mood_word)];
    }
    std::ostringstream out;
    out << "set,lemma,count\n";
    for (const auto& [set, words] : counts)
        for (const auto& [lemma, n] : words) out << set << ',' << lemma << ',' << n << '\n';
    return out.str();
}

std::string export_events(const std::vector<Event>& events) {
    std::string out;
    for (const auto& e : events) out += to_json(e).dump() + "\n";
    return out;
}

// ---- engine ----

Engine::Engine(ServiceConfig config, fs::path data_dir, Clock clock)
    : config_(std::move(config)), data_dir_(std::move(data_dir)), clock_(std::move(clock)) {
    setup_.config = config_.experiment;
    setup_.allocation.seed = config_.seed;
    setup_.allocation.trial_deadline_ms = config_.trial_deadline_ms;
    transcriber_ = std::make_unique<screening::MockTranscriber>();

    if (data_dir_.empty()) {
        blobs_ = std::make_shared<MemoryBlobStore>();
        log_ = std::make_unique<EventLog>();
        exp_ = std::make_unique<Experiment>(setup_.config, setup_.allocation, blobs_);
    } else {
        std::error_code ec;
        fs::create_directories(data_dir_ / "snapshots", ec);
        if (ec) fail(Errc::StorageError, "cannot create " + data_dir_.string() + ": " + ec.message());
        blobs_ = std::make_shared<DirectoryBlobStore>(data_dir_ / "blobs");

        const auto meta = data_dir_ / "experiment.json";
        if (fs::exists(meta)) {
            const auto stored = experiment_setup_from_json(Json::parse(read_file(meta)));
            if (to_json(stored) != to_json(setup_))
                fail(Errc::InvalidConfig, "data directory " + data_dir_.string() + " holds a different experiment setup");
        } else {
            write_file_atomic(meta, to_json(setup_).dump(2) + "\n");
        }

        log_ = std::make_unique<EventLog>(data_dir_ / "events.jsonl");
        const auto events = log_->events();

        std::optional<Snapshot> snap;
        for (const auto& entry : fs::directory_iterator(data_dir_ / "snapshots")) {
            if (entry.path().extension() != ".json") continue;
            auto s = snapshot_from_json(Json::parse(read_file(entry.path())));
            if (s.seq <= log_->last_seq() && (!snap || s.seq > snap->seq)) snap = std::move(s);
        }
        exp_ = std::make_unique<Experiment>(replay(setup_, events, blobs_, snap ? &*snap : nullptr));
        if (snap) last_snapshot_seq_ = snap->seq;
    }
    exp_->set_event_sink(
        [this](std::string_view kind, const Json& payload, Timestamp at) { log_->append(kind, payload, at); });
    if (log_->last_seq() == 0) bootstrap();
}

std::unique_ptr<Engine> Engine::open_existing(const fs::path& data_dir, Clock clock) {
    const auto meta = data_dir / "experiment.json";
    if (!fs::exists(meta)) fail(Errc::StorageError, "no experiment in " + data_dir.string());
    const auto setup = experiment_setup_from_json(Json::parse(read_file(meta)));
    ServiceConfig cfg;
    cfg.experiment = setup.config;
    cfg.seed = setup.allocation.seed;
    cfg.trial_deadline_ms = setup.allocation.trial_deadline_ms;
    return std::make_unique<Engine>(cfg, data_dir, std::move(clock));
}

Engine::~Engine() = default;

void Engine::bootstrap() {
    write([&](Experiment& exp) {
        const auto now = clock_();
        for (const auto& s : config_.seeds) {
            const auto ref = blobs_->put(read_file(s.audio), "audio/wav");
            exp.create_chain(s.chain_id, s.sentence_id, ref.digest, now);
        }
        for (const auto& x : config_.external) import_external_annotations(exp, x.annotations, x.set, now);
        return 0;
    });
}

void Engine::after_write() {
    if (config_.snapshot_every == 0 || data_dir_.empty()) return;
    if (log_->last_seq() - last_snapshot_seq_ < config_.snapshot_every) return;
    try {
        persist(Snapshot{log_->last_seq(), exp_->to_json()});
    } catch (const Error&) {
        // A missed snapshot only lengthens the next recovery; the log stays authoritative.
    }
}

Json Engine::state_json() const {
    return read([](const Experiment& e) { return e.to_json(); });
}

Snapshot Engine::snapshot() {
    std::unique_lock lock(mutex_);
    Snapshot s{log_->last_seq(), exp_->to_json()};
    if (!data_dir_.empty()) persist(s);
    return s;
}

void Engine::persist(const Snapshot& s) {
    char name[48];
    std::snprintf(name, sizeof name, "snapshot-%012llu.json", static_cast<unsigned long long>(s.seq));
    write_file_atomic(data_dir_ / "snapshots" / name, to_json(s).dump() + "\n");
    last_snapshot_seq_ = s.seq;
}

}  // namespace gap::service
