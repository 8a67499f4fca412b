#include <sstream>

#include "gap/service.hpp"

namespace gap::service {

namespace {

enum class Field { string, boolean, integer, object, array };

struct Schema {
    std::string kind;
    std::vector<std::pair<const char*, Field>> fields;
};

const std::vector<Schema>& schemas() {
    using F = Field;
    static const std::vector<Schema> s{
        {"participant-registered", {{"participant_id", F::string}, {"role", F::string}}},
        {"participant-screened", {{"participant_id", F::string}, {"passed", F::boolean}, {"reasons", F::array}}},
        {"chain-created", {{"chain_id", F::string}, {"sentence_id", F::string}, {"seed_digest", F::string}}},
        {"stimuli-registered", {{"stimuli", F::array}}},
        {"trial-issued", {{"trial_kind", F::string}, {"participant_id", F::string}}},
        {"creation-submitted",
         {{"trial_id", F::string},
          {"recording_id", F::string},
          {"blob_digest", F::string},
          {"byte_length", F::integer},
          {"media_type", F::string},
          {"confirmed", F::boolean}}},
        {"vote-submitted", {{"trial_id", F::string}, {"choice", F::string}}},
        {"generation-tallied",
         {{"chain_id", F::string},
          {"generation_index", F::integer},
          {"selected_id", F::string},
          {"tie_broken", F::boolean},
          {"counts", F::object}}},
        {"annotation-submitted", {{"source", F::string}, {"record", F::object}}},
        {"trial-expired", {{"trial_id", F::string}, {"trial_kind", F::string}}},
    };
    return s;
}

bool has_type(const Json& v, Field f) {
    switch (f) {
        case Field::string: return v.is_string();
        case Field::boolean: return v.is_boolean();
        case Field::integer: return v.is_number_integer();
        case Field::object: return v.is_object();
        case Field::array: return v.is_array();
    }
    return false;
}

[[noreturn]] void invalid(std::string_view kind, const std::string& what) {
    fail(Errc::InvalidEvent, std::string(kind) + ": " + what, std::string(kind));
}

}  // namespace

const std::vector<std::string>& event_kinds() {
    static const std::vector<std::string> kinds = [] {
        std::vector<std::string> k;
        for (const auto& s : schemas()) k.push_back(s.kind);
        return k;
    }();
    return kinds;
}

void validate_event(std::string_view kind, const Json& payload) {
    const Schema* schema = nullptr;
    for (const auto& s : schemas())
        if (s.kind == kind) schema = &s;
    if (!schema) fail(Errc::InvalidEvent, "unknown event kind '" + std::string(kind) + "'", std::string(kind));
    if (!payload.is_object()) invalid(kind, "payload must be an object");
    for (const auto& [name, type] : schema->fields) {
        if (!payload.contains(name)) invalid(kind, std::string("missing field '") + name + "'");
        if (!has_type(payload.at(name), type)) invalid(kind, std::string("field '") + name + "' has the wrong type");
    }
    if (kind == "trial-issued") {
        const auto tk = payload.at("trial_kind").get<std::string>();
        const char* body = tk == "annotation" ? "batch" : "trial";
        if (tk != "creator" && tk != "rater" && tk != "annotation") invalid(kind, "unknown trial_kind '" + tk + "'");
        if (!payload.contains(body) || !payload.at(body).is_object()) invalid(kind, std::string("missing object '") + body + "'");
    }
    if (kind == "annotation-submitted") {
        const auto src = payload.at("source").get<std::string>();
        if (src != "participant" && src != "external") invalid(kind, "unknown source '" + src + "'");
    }
}

Json to_json(const Event& e) {
    return {{"seq", e.seq}, {"kind", e.kind}, {"payload", e.payload}, {"at", e.at}};
}

Event event_from_json(const Json& j) {
    try {
        Event e;
        e.seq = j.at("seq").get<std::uint64_t>();
        e.kind = j.at("kind").get<std::string>();
        e.payload = j.at("payload");
        e.at = j.at("at").get<Timestamp>();
        return e;
    } catch (const Json::exception& ex) {
        fail(Errc::CorruptLog, std::string("malformed event: ") + ex.what());
    }
}

void check_sequence(const std::vector<Event>& events, std::uint64_t first) {
    std::uint64_t expected = first;
    for (const auto& e : events) {
        if (e.seq != expected)
            fail(Errc::CorruptLog, "expected seq " + std::to_string(expected) + ", found " + std::to_string(e.seq),
                 std::to_string(expected));
        ++expected;
    }
}

std::vector<Event> parse_event_log(std::istream& in) {
    std::vector<Event> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::exception& ex) {
            fail(Errc::CorruptLog, "line " + std::to_string(lineno) + ": " + ex.what(), std::to_string(lineno));
        }
        out.push_back(event_from_json(j));
    }
    check_sequence(out);
    return out;
}

std::vector<Event> read_event_log(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) fail(Errc::StorageError, "cannot open event log " + file.string());
    return parse_event_log(in);
}

EventLog::EventLog(std::filesystem::path file) : file_(std::move(file)) {
    if (std::filesystem::exists(*file_)) events_ = read_event_log(*file_);
    out_.open(*file_, std::ios::app);
    if (!out_) fail(Errc::StorageError, "cannot open event log " + file_->string() + " for append");
}

std::uint64_t EventLog::append(std::string_view kind, Json payload, Timestamp at) {
    validate_event(kind, payload);
    std::lock_guard lock(mutex_);
    Event e{events_.empty() ? 1 : events_.back().seq + 1, std::string(kind), std::move(payload), at};
    if (file_) {
        out_ << to_json(e).dump() << '\n';
        out_.flush();
        if (!out_) fail(Errc::StorageError, "append to " + file_->string() + " failed");
    }
    events_.push_back(std::move(e));
    return events_.back().seq;
}

std::uint64_t EventLog::last_seq() const {
    std::lock_guard lock(mutex_);
    return events_.empty() ? 0 : events_.back().seq;
}

std::vector<Event> EventLog::events() const {
    std::lock_guard lock(mutex_);
    return events_;
}

std::vector<Event> EventLog::since(std::uint64_t seq) const {
    std::lock_guard lock(mutex_);
    std::vector<Event> out;
    for (const auto& e : events_)
        if (e.seq > seq) out.push_back(e);
    return out;
}

std::uint64_t append_event(EventLog& log, const Event& event) { return log.append(event.kind, event.payload, event.at); }

// ---- snapshots ----

Json to_json(const Snapshot& s) { return {{"seq", s.seq}, {"state", s.state}}; }

Snapshot snapshot_from_json(const Json& j) {
    try {
        return Snapshot{j.at("seq").get<std::uint64_t>(), j.at("state")};
    } catch (const Json::exception& ex) {
        fail(Errc::CorruptLog, std::string("malformed snapshot: ") + ex.what());
    }
}

Json to_json(const ExperimentSetup& s) {
    return {{"config", gap::to_json(s.config)},
            {"seed", std::to_string(s.allocation.seed)},
            {"trial_deadline_ms", s.allocation.trial_deadline_ms}};
}

ExperimentSetup experiment_setup_from_json(const Json& j) {
    try {
        ExperimentSetup s;
        s.config = config_from_json(j.at("config"));
        s.allocation.seed = std::stoull(j.at("seed").get<std::string>());
        s.allocation.trial_deadline_ms = j.at("trial_deadline_ms").get<Timestamp>();
        return s;
    } catch (const Json::exception& ex) {
        fail(Errc::InvalidConfig, std::string("malformed experiment setup: ") + ex.what());
    }
}

// ---- replay ----

namespace {

[[noreturn]] void diverged(const Event& e, const std::string& what) {
    fail(Errc::CorruptLog, "event " + std::to_string(e.seq) + " (" + e.kind + "): " + what, std::to_string(e.seq));
}

void apply(Experiment& exp, const Event& e) {
    const auto& p = e.payload;
    const auto str = [&](const char* k) { return p.at(k).get<std::string>(); };

    if (e.kind == "participant-registered") {
        exp.register_participant(role_from_string(str("role")), e.at, str("participant_id"));
    } else if (e.kind == "participant-screened") {
        exp.record_screening(str("participant_id"), p.at("passed").get<bool>(),
                             p.at("reasons").get<std::vector<std::string>>(), e.at);
    } else if (e.kind == "chain-created") {
        exp.create_chain(str("chain_id"), str("sentence_id"), str("seed_digest"), e.at);
    } else if (e.kind == "stimuli-registered") {
        std::vector<Stimulus> list;
        for (const auto& s : p.at("stimuli")) list.push_back(stimulus_from_json(s));
        exp.register_stimuli(list, e.at);
    } else if (e.kind == "trial-issued") {
        const auto kind = str("trial_kind");
        Json got;
        if (kind == "creator") got = gap::to_json(exp.assign_creator_trial(str("participant_id"), e.at));
        else if (kind == "rater") got = gap::to_json(exp.assign_rater_trial(str("participant_id"), e.at));
        else got = gap::to_json(exp.assign_annotation_batch(str("participant_id"), e.at));
        const auto& want = p.at(kind == "annotation" ? "batch" : "trial");
        if (got != want) diverged(e, "re-issued trial differs from the logged one");
    } else if (e.kind == "creation-submitted") {
        AudioBlobRef ref{str("blob_digest"), p.at("byte_length").get<std::size_t>(), str("media_type")};
        const auto rec = exp.submit_creation_blob(str("trial_id"), ref, p.at("confirmed").get<bool>(), e.at);
        if (rec.id != str("recording_id")) diverged(e, "recording id " + rec.id + " differs from the log");
    } else if (e.kind == "vote-submitted") {
        exp.submit_vote(str("trial_id"), str("choice"), e.at);
    } else if (e.kind == "generation-tallied") {
        const auto& chain = exp.chain(str("chain_id"));
        const auto gi = p.at("generation_index").get<int>();
        if (gi < 0 || gi >= static_cast<int>(chain.generations.size())) diverged(e, "generation not present");
        const auto& g = chain.generations[static_cast<std::size_t>(gi)];
        if (!g.selected_id || *g.selected_id != str("selected_id") || g.tie_broken != p.at("tie_broken").get<bool>())
            diverged(e, "tally differs from the log");
    } else if (e.kind == "annotation-submitted") {
        const auto rec = annotation_from_json(p.at("record"));
        if (str("source") == "external") exp.add_external_annotation(rec, e.at);
        else exp.submit_annotation(rec, e.at);
    } else if (e.kind == "trial-expired") {
        exp.expire_trial(str("trial_id"), e.at);
    }
}

}  // namespace

void apply_event(Experiment& exp, const Event& event) {
    validate_event(event.kind, event.payload);
    try {
        apply(exp, event);
    } catch (const Error& err) {
        if (err.code() == Errc::CorruptLog) throw;
        diverged(event, std::string(errc_name(err.code())) + ": " + err.what());
    }
}

Experiment replay(const ExperimentSetup& setup, const std::vector<Event>& events, std::shared_ptr<BlobStore> blobs,
                  const Snapshot* snapshot) {
    std::uint64_t after = 0;
    auto exp = snapshot ? Experiment::from_json(snapshot->state, blobs) : Experiment(setup.config, setup.allocation, blobs);
    if (snapshot) after = snapshot->seq;
    std::vector<Event> tail;
    for (const auto& e : events)
        if (e.seq > after) tail.push_back(e);
    check_sequence(tail, after + 1);
    for (const auto& e : tail) apply_event(exp, e);
    return exp;
}

}  // namespace gap::service
