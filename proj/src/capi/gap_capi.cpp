#include <cstring>
#include <memory>
#include <string>

#include "gap/gap.h"
#include "gap/service.hpp"

using namespace gap;

struct gap_engine {
    std::unique_ptr<service::Engine> engine;
};

static_assert(static_cast<int>(Errc::InvalidArgument) + 1 == GAP_E_INVALID_ARGUMENT,
              "gap_status must mirror gap::Errc");

namespace {

thread_local std::string last_error;

gap_status status_of(Errc code) { return static_cast<gap_status>(static_cast<int>(code) + 1); }

template <typename F>
gap_status guarded(F&& f) {
    try {
        f();
        last_error.clear();
        return GAP_OK;
    } catch (const Error& e) {
        last_error = e.what();
        return status_of(e.code());
    } catch (const std::exception& e) {
        last_error = e.what();
        return GAP_E_INTERNAL;
    } catch (...) {
        last_error = "unknown failure";
        return GAP_E_INTERNAL;
    }
}

char* dup(const std::string& s) {
    auto* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.data(), s.size());
    p[s.size()] = '\0';
    return p;
}

void require(bool ok, const char* what) {
    if (!ok) fail(Errc::InvalidArgument, what);
}

Json parse_json(const char* text, const char* what) {
    try {
        return Json::parse(text);
    } catch (const Json::exception& e) {
        fail(Errc::InvalidArgument, std::string(what) + " is not valid JSON: " + e.what());
    }
}

void put_response(const service::Response& r, int* http_status, char** response_json) {
    *http_status = r.status;
    *response_json = dup(r.body.dump());
}

}  // namespace

extern "C" {

const char* gap_version(void) { return "1.0.0"; }

const char* gap_status_name(gap_status status) {
    if (status == GAP_OK) return "OK";
    if (status == GAP_E_INTERNAL) return "Internal";
    if (status < GAP_OK || status > GAP_E_INTERNAL) return "Unknown";
    return errc_name(static_cast<Errc>(static_cast<int>(status) - 1)).data();
}

const char* gap_last_error(void) { return last_error.c_str(); }

void gap_string_free(char* s) { std::free(s); }

gap_status gap_content_digest(const uint8_t* data, size_t len, char out[65]) {
    return guarded([&] {
        require(out && (data || len == 0), "data and out are required");
        const auto d = content_digest(std::string_view(reinterpret_cast<const char*>(data), len));
        std::memcpy(out, d.c_str(), 65);
    });
}

gap_status gap_engine_open(const char* config_json, const char* config_dir, const char* data_dir, gap_engine** out) {
    return guarded([&] {
        require(out != nullptr, "out is required");
        *out = nullptr;
        const Json j = config_json ? parse_json(config_json, "config") : Json::object();
        auto cfg = service::service_config_from_json(j, config_dir ? config_dir : "");
        auto engine = std::make_unique<service::Engine>(std::move(cfg), data_dir ? data_dir : "");
        *out = new gap_engine{std::move(engine)};
    });
}

gap_status gap_engine_open_existing(const char* data_dir, gap_engine** out) {
    return guarded([&] {
        require(out && data_dir && *data_dir, "data_dir and out are required");
        *out = nullptr;
        *out = new gap_engine{service::Engine::open_existing(data_dir)};
    });
}

void gap_engine_close(gap_engine* engine) { delete engine; }

gap_status gap_engine_request(gap_engine* engine, const char* method, const char* path, const char* query_json,
                              const char* body, int* http_status, char** response_json) {
    return guarded([&] {
        require(engine && method && path && http_status && response_json, "engine, method, path and outputs are required");
        service::Request req;
        req.method = method;
        req.path = path;
        if (query_json) {
            const auto q = parse_json(query_json, "query");
            require(q.is_object(), "query must be a JSON object");
            for (const auto& [k, v] : q.items()) req.query[k] = v.is_string() ? v.get<std::string>() : v.dump();
        }
        if (body) req.body = body;
        put_response(service::handle(*engine->engine, req), http_status, response_json);
    });
}

gap_status gap_engine_submit_creation(gap_engine* engine, const char* trial_id, const uint8_t* audio, size_t audio_len,
                                      int confirmed, int* http_status, char** response_json) {
    return guarded([&] {
        require(engine && trial_id && http_status && response_json, "engine, trial_id and outputs are required");
        service::Request req;
        req.method = "POST";
        req.path = std::string("/trials/") + trial_id + "/creation";
        req.form["confirmed"] = confirmed ? "true" : "false";
        if (audio) req.files["audio"] = {std::string(reinterpret_cast<const char*>(audio), audio_len), "audio/wav"};
        put_response(service::handle(*engine->engine, req), http_status, response_json);
    });
}

gap_status gap_engine_state(gap_engine* engine, char** state_json) {
    return guarded([&] {
        require(engine && state_json, "engine and output are required");
        *state_json = dup(engine->engine->state_json().dump());
    });
}

gap_status gap_engine_export(gap_engine* engine, const char* what, char** out) {
    return guarded([&] {
        require(engine && what && out, "engine, what and output are required");
        const std::string w = what;
        auto& e = *engine->engine;
        if (w == "corpus") *out = dup(e.read([](const Experiment& x) { return service::export_corpus(x); }).dump(2) + "\n");
        else if (w == "events") *out = dup(service::export_events(e.events()));
        else if (w == "wordcounts") *out = dup(e.read([](const Experiment& x) { return service::export_wordcounts(x); }));
        else fail(Errc::InvalidArgument, "unknown export '" + w + "' (corpus, events, wordcounts)");
    });
}

gap_status gap_engine_snapshot(gap_engine* engine, uint64_t* seq) {
    return guarded([&] {
        require(engine != nullptr, "engine is required");
        const auto s = engine->engine->snapshot();
        if (seq) *seq = s.seq;
    });
}

gap_status gap_engine_reclaim(gap_engine* engine, size_t* expired) {
    return guarded([&] {
        require(engine != nullptr, "engine is required");
        auto& e = *engine->engine;
        const auto n = e.write([&](Experiment& x) { return x.reclaim_stale_trials(e.now()); });
        if (expired) *expired = n;
    });
}

gap_status gap_simulate(const char* config_json, uint64_t seed, const char* out_dir, char** summary_json) {
    return guarded([&] {
        require(out_dir && *out_dir, "out_dir is required");
        const Json j = config_json ? parse_json(config_json, "config") : Json::object();
        const auto summary = service::simulate_to_dir(service::service_config_from_json(j), seed, out_dir);
        if (summary_json) *summary_json = dup(summary.dump());
    });
}

gap_status gap_analyze(const char* annotations_csv, const char* out_dir, const char* options_json, char** summary_json) {
    return guarded([&] {
        require(annotations_csv && out_dir, "annotations_csv and out_dir are required");
        analysis::AnalysisOptions opts;
        if (options_json) {
            const auto j = parse_json(options_json, "options");
            require(j.is_object(), "options must be a JSON object");
            try {
                opts.seed = j.value("seed", opts.seed);
                opts.n_boot = j.value("n_boot", opts.n_boot);
                opts.draw = j.value("draw", opts.draw);
                opts.balance_target = j.value("balance_target", opts.balance_target);
                opts.exclude_flagged_annotators = j.value("exclude_flagged_annotators", opts.exclude_flagged_annotators);
                for (const auto& id : j.value("final_stimuli", Json::array())) opts.final_prosody_stimuli.insert(id.get<std::string>());
                if (j.contains("config")) opts.config = config_from_json(j.at("config"));
            } catch (const Json::exception& e) {
                fail(Errc::InvalidArgument, std::string("bad analysis options: ") + e.what());
            }
        }
        const auto summary = service::analyze_to_dir(annotations_csv, out_dir, opts);
        if (summary_json) *summary_json = dup(summary.dump());
    });
}

}  // extern "C"
