#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gap/simagents.hpp"

namespace gap::sim {

namespace {

struct Category {
    const char* name;
    double v, a;
};

// Acted-corpus stand-ins: emotion categories with valence-arousal prototypes.
const std::vector<Category> kCremaCategories{
    {"anger", -35, 80}, {"disgust", -30, 45}, {"fear", -25, 70}, {"happy", 35, 65}, {"sad", -30, 20}};
const std::vector<Category> kVenecCategories{
    {"anger", -35, 80},  {"contempt", -20, 40}, {"fear", -25, 70},    {"happiness", 35, 65}, {"sadness", -30, 20},
    {"amusement", 30, 75}, {"pride", 25, 55},   {"relief", 20, 25},   {"serenity", 25, 15},  {"shame", -20, 30}};

std::string numbered(const char* prefix, int n, int width = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, n);
    return buf;
}

double normal(double mean, double sd, Rng& rng) {
    return sd == 0 ? mean : std::normal_distribution<double>(mean, sd)(rng);
}

class Driver {
public:
    Driver(const ExperimentConfig& config, const AgentParams& params, std::uint64_t seed, const SimOptions& options)
        : params_(params),
          seed_(seed),
          options_(options),
          exp_(config, AllocationOptions{seed, kSimTrialDeadlineMs},
               options.blobs ? options.blobs : std::make_shared<MemoryBlobStore>()),
          now_(options.start) {
        if (options_.sink) exp_.set_event_sink(options_.sink);
    }

    SimRun run() {
        create_chains();
        evolve();
        if (options_.annotate) annotate();

        SimRun out;
        out.config = exp_.config();
        out.params = params_;
        out.master_seed = seed_;
        for (const auto& [_, c] : exp_.chains()) out.chains.push_back(c);
        out.latents = std::move(latents_);
        out.stimuli = exp_.stimuli();
        out.annotations = exp_.annotations();
        out.state = exp_.to_json();
        return out;
    }

private:
    Timestamp tick() { return now_ += 1000; }

    ParticipantId enrol(Role role) {
        auto pid = exp_.register_participant(role, tick());
        exp_.record_screening(pid, true, {}, tick());
        return pid;
    }

    void create_chains() {
        const auto& cfg = exp_.config();
        for (int s = 1; s <= cfg.n_sentences; ++s) {
            for (int k = 1; k <= cfg.speakers_per_sentence; ++k) {
                const auto chain_id = numbered("c", (s - 1) * cfg.speakers_per_sentence + k);
                const auto sentence_id = numbered("s", s, 2);
                auto rng = make_rng(seed_, {hash_label("seed-latent"), hash_label(chain_id)});
                LatentExpression x;
                x.e = normal(params_.seed_e_mean, params_.seed_e_sd, rng);
                x.v = normal(0.0, params_.sigma_va, rng);
                x.a = normal(40.0, params_.sigma_va, rng);
                x = clip(x, params_);
                const auto blob = "seed|" + std::to_string(seed_) + "|" + chain_id + "|" + sentence_id + "|spk" +
                                  std::to_string(k);
                const auto ref = exp_.blobs().put(blob);
                const auto& chain = exp_.create_chain(chain_id, sentence_id, ref.digest, tick());
                latents_[chain.seed_recording_id] = x;
            }
        }
    }

    void evolve() {
        const auto& cfg = exp_.config();
        std::vector<ParticipantId> creators, raters;
        for (int i = 0; i < cfg.m_creators; ++i) creators.push_back(enrol(Role::creator));
        for (int i = 0; i < cfg.votes_per_generation; ++i) raters.push_back(enrol(Role::rater));

        while (!exp_.all_chains_complete()) {
            bool progressed = false;
            for (const auto& pid : creators) {
                while (auto t = try_assign([&] { return exp_.assign_creator_trial(pid, tick()); })) {
                    create(*t);
                    progressed = true;
                }
            }
            for (const auto& pid : raters) {
                while (auto t = try_assign([&] { return exp_.assign_rater_trial(pid, tick()); })) {
                    vote(*t);
                    progressed = true;
                }
            }
            if (!progressed) fail(Errc::InvalidState, "simulation stalled before all chains completed");
        }
    }

    template <typename F>
    auto try_assign(F&& assign) -> std::optional<decltype(assign())> {
        try {
            return assign();
        } catch (const Error& e) {
            if (e.code() == Errc::NoWorkAvailable) return std::nullopt;
            throw;
        }
    }

    void create(const CreatorTrial& t) {
        const auto& gen = exp_.chain(t.chain_id).current();
        const auto slot = static_cast<std::uint64_t>(gen.mutant_ids.size());
        // Keyed by (chain, generation, slot) so the mutant does not depend on which creator fills the slot.
        auto rng = make_rng(seed_, {hash_label("mutation"), hash_label(t.chain_id),
                                    static_cast<std::uint64_t>(t.generation_index), slot});
        const auto child = mutate_expression(latents_.at(t.stimulus_recording_id), params_, rng);
        const auto blob = "take|" + std::to_string(seed_) + "|" + t.chain_id + "|" + std::to_string(t.generation_index) +
                          "|" + std::to_string(slot);
        const auto rec = exp_.submit_creation(t.trial_id, blob, true, tick());
        latents_[rec.id] = child;
    }

    void vote(const RaterTrial& t) {
        std::vector<LatentExpression> heard;
        for (const auto& id : t.presentation_order) heard.push_back(latents_.at(id));
        auto rng = make_rng(seed_, {hash_label("perception"), hash_label(t.chain_id),
                                    static_cast<std::uint64_t>(t.generation_index), hash_label(t.participant_id)});
        const auto pick = rater_choice(heard, params_, rng);
        exp_.submit_vote(t.trial_id, t.presentation_order[pick], tick());
    }

    void add_external(std::vector<Stimulus>& out, const char* set, const std::vector<Category>& cats, int per_category,
                      double e_mean) {
        for (const auto& cat : cats) {
            for (int i = 1; i <= per_category; ++i) {
                const auto id = std::string(set) + "-" + cat.name + "-" + numbered("", i, 2);
                auto rng = make_rng(seed_, {hash_label("external-latent"), hash_label(id)});
                LatentExpression x;
                x.e = normal(e_mean, 0.4, rng);
                x.v = normal(cat.v, params_.sigma_va, rng);
                x.a = normal(cat.a, params_.sigma_va, rng);
                latents_[id] = clip(x, params_);
                out.push_back(Stimulus{id, set, std::nullopt, std::nullopt});
            }
        }
    }

    void annotate() {
        exp_.register_corpus_stimuli(tick());
        if (options_.external_sets) {
            std::vector<Stimulus> ext;
            add_external(ext, analysis::kCremaD, kCremaCategories, 20, 2.7);
            add_external(ext, analysis::kVenec, kVenecCategories, 10, 3.1);
            add_external(ext, analysis::kNeutralBaseline, {{"neutral", 0, 40}}, 30, 1.9);
            exp_.register_stimuli(ext, tick());
        }
        const auto& cfg = exp_.config();
        const auto n_stimuli = static_cast<int>(exp_.stimuli().size());
        if (n_stimuli < cfg.annotation_batch_size) return;
        const int n_annotators =
            (n_stimuli * options_.annotations_per_stimulus + cfg.annotation_batch_size - 1) / cfg.annotation_batch_size;
        for (int i = 0; i < n_annotators; ++i) {
            const auto pid = enrol(Role::annotator);
            const auto batch = exp_.assign_annotation_batch(pid, tick());
            auto rng = make_rng(seed_, {hash_label("annotator"), hash_label(pid)});
            auto rate = [&](const std::string& stimulus_id, bool repeat) {
                auto rec = simulate_annotation(latents_.at(stimulus_id), params_, rng);
                rec.participant_id = pid;
                rec.stimulus_id = stimulus_id;
                rec.is_repeat = repeat;
                exp_.submit_annotation(rec, tick());
            };
            for (const auto& id : batch.stimulus_ids) rate(id, false);
            for (const auto& id : batch.repeat_ids) rate(id, true);
        }
    }

    AgentParams params_;
    std::uint64_t seed_;
    SimOptions options_;
    Experiment exp_;
    Timestamp now_;
    std::map<std::string, LatentExpression> latents_;
};

}  // namespace

SimRun run_experiment(const ExperimentConfig& config, const AgentParams& params, std::uint64_t master_seed,
                      const SimOptions& options) {
    params.validate();
    return Driver(config, params, master_seed, options).run();
}

std::set<std::string> SimRun::final_selected() const {
    std::set<std::string> out;
    for (const auto& c : chains)
        if (!c.generations.empty() && c.generations.back().selected_id) out.insert(*c.generations.back().selected_id);
    return out;
}

std::vector<analysis::AnnotationRow> SimRun::annotation_rows() const {
    std::vector<analysis::AnnotationRow> rows;
    rows.reserve(annotations.size());
    for (const auto& a : annotations) {
        const auto& s = stimuli.at(a.stimulus_id);
        rows.push_back({a.stimulus_id, s.set, s.generation, a});
    }
    return rows;
}

Json to_json(const SimRun& run) {
    Json chains = Json::array(), latents = Json::object(), stimuli = Json::object(), anns = Json::array();
    for (const auto& c : run.chains) chains.push_back(gap::to_json(c));
    for (const auto& [id, x] : run.latents) latents[id] = to_json(x);
    for (const auto& [id, s] : run.stimuli) stimuli[id] = gap::to_json(s);
    for (const auto& a : run.annotations) anns.push_back(gap::to_json(a));
    return {{"config", gap::to_json(run.config)},
            {"params", to_json(run.params)},
            {"master_seed", std::to_string(run.master_seed)},
            {"chains", chains},
            {"latents", latents},
            {"stimuli", stimuli},
            {"annotations", anns}};
}

GenerationTrend generation_trend(const SimRun& run) {
    const auto n = static_cast<std::size_t>(run.config.n_generations);
    std::vector<double> e_sum(n, 0.0), inc_sum(n, 0.0);
    std::vector<int> e_n(n, 0), inc_n(n, 0);
    for (const auto& c : run.chains) {
        for (const auto& g : c.generations) {
            const auto i = static_cast<std::size_t>(g.index);
            if (i >= n || !g.selected_id) continue;
            e_sum[i] += run.latents.at(*g.selected_id).e;
            ++e_n[i];
            if (g.index > 0) {
                inc_sum[i] += g.votes_for(g.incumbent_id);
                ++inc_n[i];
            }
        }
    }
    GenerationTrend t;
    for (std::size_t i = 0; i < n; ++i) {
        t.selected_e.push_back(e_n[i] ? e_sum[i] / e_n[i] : std::nan(""));
        t.incumbent_votes.push_back(inc_n[i] ? inc_sum[i] / inc_n[i] : std::nan(""));
    }
    return t;
}

}  // namespace gap::sim
