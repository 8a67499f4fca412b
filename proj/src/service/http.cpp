#include <openssl/evp.h>

#include "gap/service.hpp"

namespace gap::service {

std::string base64_encode(std::string_view bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

int http_status(Errc code) noexcept {
    switch (code) {
        case Errc::UnknownEntity: return 404;
        case Errc::RoleMismatch:
        case Errc::NotEligible: return 403;
        case Errc::TrialExpired: return 410;
        case Errc::NoWorkAvailable:
        case Errc::QuorumClosed:
        case Errc::GenerationFull:
        case Errc::DuplicateVote:
        case Errc::InvalidState:
        case Errc::ChainIncomplete:
        case Errc::IndexMismatch:
        case Errc::AlreadySubmitted:
        case Errc::InsufficientStimuli: return 409;
        case Errc::StorageError:
        case Errc::CorruptLog: return 500;
        default: return 422;
    }
}

namespace {

Response error_response(const Error& e) {
    Json body{{"error", errc_name(e.code())}, {"message", e.what()}};
    if (!e.subject().empty()) body["subject"] = e.subject();
    return {http_status(e.code()), body};
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : path) {
        if (c == '/') {
            if (!cur.empty()) parts.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) parts.push_back(std::move(cur));
    return parts;
}

Json parse_body(const Request& r) {
    if (r.body.empty()) return Json::object();
    try {
        auto j = Json::parse(r.body);
        if (!j.is_object()) fail(Errc::InvalidArgument, "request body must be a JSON object");
        return j;
    } catch (const Json::exception& ex) {
        fail(Errc::InvalidArgument, std::string("request body is not valid JSON: ") + ex.what());
    }
}

const std::string& query_param(const Request& r, const char* name) {
    auto it = r.query.find(name);
    if (it == r.query.end() || it->second.empty())
        fail(Errc::InvalidArgument, std::string("missing query parameter '") + name + "'");
    return it->second;
}

template <typename T>
T field(const Json& j, const char* name) {
    if (!j.contains(name)) fail(Errc::InvalidArgument, std::string("missing field '") + name + "'");
    try {
        return j.at(name).get<T>();
    } catch (const Json::exception&) {
        fail(Errc::InvalidArgument, std::string("field '") + name + "' has the wrong type");
    }
}

Json audio_of(const Experiment& exp, const RecordingId& id) {
    const auto& rec = exp.recording(id);
    auto bytes = exp.blobs().get(rec.blob_digest);
    if (!bytes) fail(Errc::StorageError, "blob " + rec.blob_digest + " is missing", rec.blob_digest);
    return {{"recording_id", id}, {"blob_digest", rec.blob_digest}, {"audio_base64", base64_encode(*bytes)}};
}

// POST /participants
Response register_participant(Engine& engine, const Request& req) {
    const auto body = parse_body(req);
    const auto role = role_from_string(field<std::string>(body, "role"));
    return engine.write([&](Experiment& exp) {
        const auto pid = exp.register_participant(role, engine.now());
        return Response{201, {{"participant", to_json(exp.participant(pid))}}};
    });
}

screening::Verdict verdict_of(Engine& engine, const std::string& name, const Json& v) {
    using screening::Verdict;
    if (v.is_boolean()) return v.get<bool>() ? Verdict::pass : Verdict::fail;
    if (!v.is_object()) fail(Errc::InvalidArgument, "check '" + name + "' must be a boolean or an object");
    const auto& fixtures = engine.config().fixtures;
    if (name == screening::kQualityDiscrimination) {
        std::map<std::string, screening::QualityAnswer> answers;
        const auto given = field<Json>(v, "answers");
        if (!given.is_object()) fail(Errc::InvalidArgument, "'answers' must be an object");
        for (const auto& [item, a] : given.items())
            answers[item] = screening::quality_answer_from_string(a.get<std::string>());
        return screening::grade_quality_discrimination(answers, fixtures.quality_key);
    }
    if (name == screening::kTranscriptMatch) {
        const auto sid = field<std::string>(v, "sentence_id");
        auto it = fixtures.sentences.find(sid);
        if (it == fixtures.sentences.end()) fail(Errc::UnknownEntity, "unknown screening sentence " + sid, sid);
        std::string transcript;
        if (v.contains("transcript")) {
            transcript = field<std::string>(v, "transcript");
        } else {
            const auto digest = field<std::string>(v, "audio_digest");
            auto bytes = engine.blobs()->get(digest);
            if (!bytes) fail(Errc::UnknownEntity, "unknown audio blob " + digest, digest);
            transcript = engine.transcriber().transcribe(*bytes);
        }
        return screening::grade_transcript_match(it->second, transcript);
    }
    fail(Errc::InvalidArgument, "check '" + name + "' needs a boolean result");
}

// POST /participants/{id}/screening
Response record_screening(Engine& engine, const Request& req, const std::string& pid) {
    const auto body = parse_body(req);
    const auto checks = field<Json>(body, "checks");
    if (!checks.is_object()) fail(Errc::InvalidArgument, "'checks' must be an object");
    const auto role = engine.read([&](const Experiment& exp) { return exp.participant(pid).role; });
    std::map<std::string, screening::Verdict> results;
    for (const auto& [name, v] : checks.items()) results[name] = verdict_of(engine, name, v);
    const auto outcome = screening::screening_gate(pid, role, results);
    return engine.write([&](Experiment& exp) {
        exp.record_screening(pid, outcome.passed, outcome.reasons, engine.now());
        return Response{200, {{"outcome", screening::to_json(outcome)}, {"participant", to_json(exp.participant(pid))}}};
    });
}

// GET /trials/next?participant=
Response next_trial(Engine& engine, const Request& req) {
    const auto pid = query_param(req, "participant");
    return engine.write([&](Experiment& exp) {
        const auto now = engine.now();
        exp.reclaim_stale_trials(now);
        const auto role = exp.participant(pid).role;
        if (role == Role::creator) {
            const auto t = exp.assign_creator_trial(pid, now);
            return Response{201, {{"kind", "creator"}, {"trial", to_json(t)}, {"stimulus", audio_of(exp, t.stimulus_recording_id)}}};
        }
        if (role == Role::rater) {
            const auto t = exp.assign_rater_trial(pid, now);
            Json candidates = Json::array();
            for (const auto& id : t.presentation_order) candidates.push_back(audio_of(exp, id));
            return Response{201, {{"kind", "rater"}, {"trial", to_json(t)}, {"candidates", candidates}}};
        }
        fail(Errc::RoleMismatch, "annotators receive work from /annotations/next", pid);
    });
}

// POST /trials/{id}/creation
Response submit_creation(Engine& engine, const Request& req, const std::string& trial_id) {
    auto audio = req.files.find("audio");
    auto confirmed_field = req.form.find("confirmed");
    const bool confirmed = confirmed_field != req.form.end() &&
                           (confirmed_field->second == "true" || confirmed_field->second == "1");
    return engine.write([&](Experiment& exp) {
        try {
            if (audio == req.files.end()) {
                // A retry of a finished trial needs no audio; anything else does.
                const auto& t = exp.creator_trial(trial_id);
                if (t.state != TrialState::submitted) fail(Errc::InvalidArgument, "multipart field 'audio' is required");
                fail(Errc::AlreadySubmitted, "already submitted", *t.recording_id);
            }
            const auto rec = exp.submit_creation(trial_id, audio->second.content, confirmed, engine.now());
            return Response{201, {{"recording", to_json(rec)}, {"duplicate", false}}};
        } catch (const Error& e) {
            if (e.code() != Errc::AlreadySubmitted) throw;
            return Response{200, {{"recording", to_json(exp.recording(e.subject()))}, {"duplicate", true}}};
        }
    });
}

// POST /trials/{id}/vote
Response submit_vote(Engine& engine, const Request& req, const std::string& trial_id) {
    const auto body = parse_body(req);
    const auto choice = field<std::string>(body, "choice");
    return engine.write([&](Experiment& exp) {
        try {
            const auto v = exp.submit_vote(trial_id, choice, engine.now());
            const auto& chain = exp.chain(v.chain_id);
            const bool closed = chain.generations[static_cast<std::size_t>(v.generation_index)].selected_id.has_value();
            return Response{201, {{"vote", to_json(v)}, {"generation_closed", closed}, {"duplicate", false}}};
        } catch (const Error& e) {
            if (e.code() != Errc::AlreadySubmitted) throw;
            const auto& t = exp.rater_trial(trial_id);
            return Response{200, {{"trial", to_json(t)}, {"duplicate", true}}};
        }
    });
}

// GET /annotations/next?participant=
Response next_annotations(Engine& engine, const Request& req) {
    const auto pid = query_param(req, "participant");
    return engine.write([&](Experiment& exp) {
        auto batch = exp.annotation_batch(pid);
        const bool fresh = !batch;
        if (fresh) batch = exp.assign_annotation_batch(pid, engine.now());
        std::set<std::pair<std::string, bool>> done;
        for (const auto& a : exp.annotations())
            if (a.participant_id == pid) done.insert({a.stimulus_id, a.is_repeat});
        Json pending = Json::array();
        auto add = [&](const std::string& id, bool repeat) {
            if (done.count({id, repeat})) return;
            Json item{{"stimulus_id", id}, {"is_repeat", repeat}};
            const auto& s = exp.stimuli().at(id);
            if (s.recording_id) item["audio"] = audio_of(exp, *s.recording_id);
            pending.push_back(item);
        };
        for (const auto& id : batch->stimulus_ids) add(id, false);
        for (const auto& id : batch->repeat_ids) add(id, true);
        return Response{fresh ? 201 : 200, {{"batch", to_json(*batch)}, {"pending", pending}}};
    });
}

// POST /annotations
Response submit_annotation(Engine& engine, const Request& req) {
    const auto body = parse_body(req);
    AnnotationRecord rec;
    rec.participant_id = field<std::string>(body, "participant_id");
    rec.stimulus_id = field<std::string>(body, "stimulus_id");
    rec.emotionality = field<int>(body, "emotionality");
    rec.valence = field<int>(body, "valence");
    rec.arousal = field<int>(body, "arousal");
    rec.authenticity = field<int>(body, "authenticity");
    rec.mood_word = field<std::string>(body, "mood_word");
    rec.is_repeat = body.value("is_repeat", false);
    return engine.write([&](Experiment& exp) {
        try {
            exp.submit_annotation(rec, engine.now());
            return Response{201, {{"annotation", to_json(rec)}, {"duplicate", false}}};
        } catch (const Error& e) {
            if (e.code() != Errc::AlreadySubmitted) throw;
            return Response{200, {{"annotation", to_json(rec)}, {"duplicate", true}}};
        }
    });
}

// GET /chains/{id}
Response get_chain(Engine& engine, const std::string& chain_id) {
    return engine.read([&](const Experiment& exp) {
        const auto& c = exp.chain(chain_id);
        Json recs = Json::object();
        for (const auto& g : c.generations) {
            for (const auto& id : g.candidates()) recs[id] = to_json(exp.recording(id));
        }
        return Response{200, {{"chain", to_json(c)}, {"recordings", recs}}};
    });
}

}  // namespace

Response handle(Engine& engine, const Request& req) {
    try {
        const auto parts = split_path(req.path);
        const auto& m = req.method;
        const auto n = parts.size();
        if (m == "POST" && n == 1 && parts[0] == "participants") return register_participant(engine, req);
        if (m == "POST" && n == 3 && parts[0] == "participants" && parts[2] == "screening")
            return record_screening(engine, req, parts[1]);
        if (m == "GET" && n == 2 && parts[0] == "trials" && parts[1] == "next") return next_trial(engine, req);
        if (m == "POST" && n == 3 && parts[0] == "trials" && parts[2] == "creation")
            return submit_creation(engine, req, parts[1]);
        if (m == "POST" && n == 3 && parts[0] == "trials" && parts[2] == "vote") return submit_vote(engine, req, parts[1]);
        if (m == "GET" && n == 2 && parts[0] == "annotations" && parts[1] == "next") return next_annotations(engine, req);
        if (m == "POST" && n == 1 && parts[0] == "annotations") return submit_annotation(engine, req);
        if (m == "GET" && n == 2 && parts[0] == "chains") return get_chain(engine, parts[1]);
        if (m == "GET" && n == 2 && parts[0] == "corpus" && parts[1] == "export")
            return {200, engine.read([](const Experiment& exp) { return export_corpus(exp); })};
        return {404, {{"error", "NotFound"}, {"message", "no route for " + m + " " + req.path}}};
    } catch (const Error& e) {
        return error_response(e);
    } catch (const std::exception& e) {
        return {500, {{"error", "Internal"}, {"message", e.what()}}};
    }
}

}  // namespace gap::service
