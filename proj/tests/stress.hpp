#pragma once

// Many concurrent simulated participants driving one engine through its routes.

#include <atomic>
#include <chrono>
#include <fstream>
#include <set>
#include <thread>

#include "gap/service.hpp"
#include "support.hpp"

namespace stress {

using namespace gap;
using namespace gap::service;

inline Response call(Engine& e, const std::string& method, const std::string& path, const Json& body = Json::object(),
                     std::map<std::string, std::string> query = {}) {
    Request req;
    req.method = method;
    req.path = path;
    req.query = std::move(query);
    if (!body.empty()) req.body = body.dump();
    return handle(e, req);
}

inline ServiceConfig contended_config(const std::filesystem::path& dir) {
    std::ofstream(dir / "a.wav", std::ios::binary) << "RIFF-a";
    std::ofstream(dir / "b.wav", std::ios::binary) << "RIFF-b";
    const auto j = Json::parse(R"({
        "n_sentences": 1, "speakers_per_sentence": 2, "n_generations": 4, "seed": 5,
        "trial_deadline_ms": 20000, "snapshot_every": 50,
        "screening": {"quality_key": [{"item_id": "q1", "answer": "good"}], "sentences": {"s01": "Hello there."}},
        "seeds": [{"chain_id": "c1", "sentence_id": "s01", "audio": "a.wav"},
                  {"chain_id": "c2", "sentence_id": "s01", "audio": "b.wav"}]
    })");
    return service_config_from_json(j, dir);
}

/// Structural invariants that must hold in every reachable state.
inline bool invariants_hold(const Experiment& exp) {
    const auto& cfg = exp.config();
    for (const auto& [id, chain] : exp.chains()) {
        for (const auto& g : chain.generations) {
            if (g.index == 0) continue;
            if (static_cast<int>(g.mutant_ids.size()) > cfg.m_creators) return false;
            if (static_cast<int>(g.votes.size()) > cfg.votes_per_generation) return false;
            std::set<std::string> raters, creators;
            for (const auto& v : g.votes)
                if (!raters.insert(v.rater_id).second) return false;
            for (const auto& m : g.mutant_ids)
                if (!creators.insert(*exp.recording(m).creator_id).second) return false;
        }
        if (chain.status == ChainStatus::complete) continue;
        const auto& g = chain.current();
        if (static_cast<int>(g.mutant_ids.size()) + exp.reserved_creator_slots(id) > cfg.m_creators) return false;
        if (static_cast<int>(g.votes.size()) + exp.reserved_rater_slots(id) > cfg.votes_per_generation) return false;
    }
    return true;
}

struct Outcome {
    int violations = 0;        // invariant breaches seen by the monitor or at the end
    int errors = 0;            // unexpected route statuses
    bool complete = false;     // every chain reached its last generation
    bool quotas_filled = false;  // every generation has exactly m mutants and the full quorum
    bool replay_matches = false;
    double seconds = 0;

    bool ok() const { return violations == 0 && errors == 0 && complete && quotas_filled && replay_matches; }
};

inline Outcome run_schedule(std::uint64_t schedule_seed, int n_threads = 200, int n_creators = 60) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto dir = testsupport::temp_dir("stress-" + std::to_string(schedule_seed));
    std::atomic<Timestamp> clock{1};
    Outcome out;
    {
        Engine engine(contended_config(dir), dir / "data", [&] { return clock.load(); });
        std::atomic<bool> stop{false};
        std::atomic<int> violations{0}, errors{0};

        std::thread monitor([&] {
            while (!stop) {
                if (!engine.read([](const Experiment& exp) { return invariants_hold(exp); })) ++violations;
                std::this_thread::yield();
            }
        });

        std::vector<std::thread> workers;
        for (int t = 0; t < n_threads; ++t) {
            workers.emplace_back([&, t] {
                auto rng = make_rng(schedule_seed, {static_cast<std::uint64_t>(t)});
                std::uniform_int_distribution<int> pause(0, 200), pct(0, 99);
                const bool creator = t < n_creators;
                const auto reg = call(engine, "POST", "/participants", {{"role", creator ? "creator" : "rater"}});
                if (reg.status != 201) {
                    ++errors;
                    return;
                }
                const std::string pid = reg.body.at("participant").at("id");
                Json checks{{"lextale", true}, {"headphone", true}};
                if (creator) {
                    checks["quality_discrimination"] = {{"answers", {{"q1", "good"}}}};
                    checks["transcript_match"] = {{"sentence_id", "s01"}, {"transcript", "hello there"}};
                }
                if (call(engine, "POST", "/participants/" + pid + "/screening", {{"checks", checks}}).status != 200) {
                    ++errors;
                    return;
                }
                const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);
                while (!stop && std::chrono::steady_clock::now() < deadline) {
                    clock += 10;
                    std::this_thread::sleep_for(std::chrono::microseconds(pause(rng)));
                    const auto next = call(engine, "GET", "/trials/next", {}, {{"participant", pid}});
                    if (next.status != 201) {
                        if (next.status != 409) ++errors;
                        continue;
                    }
                    const std::string tid = next.body.at("trial").at("trial_id");
                    // Some participants walk away and leave their trial to expire.
                    if (pct(rng) < 5) continue;
                    std::this_thread::sleep_for(std::chrono::microseconds(pause(rng)));
                    Response r;
                    if (creator) {
                        Request req;
                        req.method = "POST";
                        req.path = "/trials/" + tid + "/creation";
                        req.form["confirmed"] = "true";
                        req.files["audio"] = {"RIFF-" + pid + "-" + tid, "audio/wav"};
                        r = handle(engine, req);
                    } else {
                        const auto& order = next.body.at("trial").at("presentation_order");
                        const std::string choice = order.at(static_cast<std::size_t>(pct(rng)) % order.size());
                        r = call(engine, "POST", "/trials/" + tid + "/vote", {{"choice", choice}});
                    }
                    // Expired and already-closed trials are legitimate outcomes under contention.
                    if (r.status != 201 && r.status != 200 && r.status != 410 && r.status != 409) ++errors;
                }
            });
        }
        const auto cap = std::chrono::steady_clock::now() + std::chrono::seconds(90);
        while (std::chrono::steady_clock::now() < cap) {
            if (engine.read([](const Experiment& exp) { return exp.all_chains_complete(); })) break;
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        stop = true;
        for (auto& w : workers) w.join();
        monitor.join();

        out.violations = violations;
        out.errors = errors;
        engine.read([&](const Experiment& exp) {
            if (!invariants_hold(exp)) ++out.violations;
            out.complete = exp.all_chains_complete();
            out.quotas_filled = true;
            for (const auto& [id, chain] : exp.chains())
                for (const auto& g : chain.generations)
                    if (g.index > 0 && (static_cast<int>(g.mutant_ids.size()) != exp.config().m_creators ||
                                        static_cast<int>(g.votes.size()) != exp.config().votes_per_generation))
                        out.quotas_filled = false;
            return 0;
        });
        // The log written under contention replays to the live state.
        out.replay_matches = replay(engine.setup(), engine.events(), engine.blobs()).to_json() == engine.state_json();
    }
    std::filesystem::remove_all(dir);
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace stress
