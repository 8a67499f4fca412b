#include "gap/core.hpp"

#include <algorithm>
#include <map>
#include <unordered_set>

namespace gap {

void ExperimentConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) fail(Errc::InvalidConfig, what);
    };
    require(n_sentences >= 1, "n_sentences must be >= 1");
    require(speakers_per_sentence >= 1, "speakers_per_sentence must be >= 1");
    require(m_creators >= 1, "m_creators must be >= 1");
    require(votes_per_generation >= 1, "votes_per_generation must be >= 1");
    require(n_generations >= 2, "n_generations must be >= 2");
    require(annotation_batch_size >= 1, "annotation_batch_size must be >= 1");
    require(annotation_repeats >= 0, "annotation_repeats must be >= 0");
    require(annotation_repeats <= annotation_batch_size, "annotation_repeats must not exceed annotation_batch_size");
    require(consistency_threshold >= -1.0 && consistency_threshold <= 1.0, "consistency_threshold must be a correlation");
    for (const auto* r : {&emotionality_scale, &valence_range, &arousal_range, &authenticity_scale})
        require(r->lo <= r->hi, "rating range must satisfy lo <= hi");
}

std::vector<RecordingId> Generation::candidates() const {
    std::vector<RecordingId> out;
    out.reserve(mutant_ids.size() + 1);
    out.push_back(incumbent_id);
    out.insert(out.end(), mutant_ids.begin(), mutant_ids.end());
    return out;
}

bool Generation::is_candidate(const RecordingId& id) const {
    return id == incumbent_id || std::find(mutant_ids.begin(), mutant_ids.end(), id) != mutant_ids.end();
}

bool Generation::has_voted(const ParticipantId& rater) const {
    return std::any_of(votes.begin(), votes.end(), [&](const Vote& v) { return v.rater_id == rater; });
}

int Generation::votes_for(const RecordingId& id) const {
    return static_cast<int>(std::count_if(votes.begin(), votes.end(), [&](const Vote& v) { return v.choice == id; }));
}

std::string_view to_string(ChainStatus s) noexcept {
    switch (s) {
        case ChainStatus::open: return "open";
        case ChainStatus::awaiting_mutants: return "awaiting_mutants";
        case ChainStatus::awaiting_votes: return "awaiting_votes";
        case ChainStatus::complete: return "complete";
    }
    return "open";
}

ChainStatus chain_status_from_string(std::string_view s) {
    if (s == "open") return ChainStatus::open;
    if (s == "awaiting_mutants") return ChainStatus::awaiting_mutants;
    if (s == "awaiting_votes") return ChainStatus::awaiting_votes;
    if (s == "complete") return ChainStatus::complete;
    fail(Errc::InvalidArgument, "unknown chain status '" + std::string(s) + "'");
}

Rng tie_break_rng(std::uint64_t tie_seed, int generation) {
    return make_rng(tie_seed, {hash_label("tie-break"), static_cast<std::uint64_t>(generation)});
}

bool incumbent_reselected(const Generation& g) {
    return g.index > 0 && g.selected_id && *g.selected_id == g.incumbent_id;
}

Chain init_chain(const Recording& seed, const ExperimentConfig& config, const BlobResolver& has_blob,
                 std::uint64_t tie_seed) {
    config.validate();
    if (seed.generation_index != 0)
        fail(Errc::InvalidSeed, "seed must have generation_index 0, got " + std::to_string(seed.generation_index), seed.id);
    if (!has_blob || !has_blob(seed.blob_digest))
        fail(Errc::SeedBlobMissing, "no blob stored for digest " + seed.blob_digest, seed.id);

    Chain chain;
    chain.id = seed.chain_id;
    chain.sentence_id = seed.sentence_id;
    chain.seed_recording_id = seed.id;
    chain.m_creators = config.m_creators;
    chain.votes_per_generation = config.votes_per_generation;
    chain.n_generations = config.n_generations;
    chain.tie_seed = tie_seed;

    Generation g0;
    g0.index = 0;
    g0.incumbent_id = seed.id;
    g0.selected_id = seed.id;
    chain.generations.push_back(std::move(g0));
    chain.status = ChainStatus::open;
    advance(chain);
    return chain;
}

void add_mutant(Chain& chain, const Recording& rec) {
    if (!rec.confirmed) fail(Errc::UnconfirmedRecording, "recording " + rec.id + " was not confirmed by its creator", rec.id);
    if (chain.status == ChainStatus::complete) fail(Errc::InvalidState, "chain " + chain.id + " is complete");
    auto& g = chain.current();
    if (rec.chain_id != chain.id)
        fail(Errc::IndexMismatch, "recording belongs to chain " + rec.chain_id + ", not " + chain.id, rec.id);
    if (rec.generation_index != g.index)
        fail(Errc::IndexMismatch,
             "recording targets generation " + std::to_string(rec.generation_index) + " but generation " +
                 std::to_string(g.index) + " is open",
             rec.id);
    if (static_cast<int>(g.mutant_ids.size()) >= chain.m_creators)
        fail(Errc::GenerationFull, "generation " + std::to_string(g.index) + " of chain " + chain.id + " is full");
    if (chain.status != ChainStatus::awaiting_mutants)
        fail(Errc::InvalidState, "chain " + chain.id + " is not accepting mutants");
    if (g.is_candidate(rec.id)) fail(Errc::InvalidArgument, "recording " + rec.id + " is already a candidate", rec.id);

    g.mutant_ids.push_back(rec.id);
    if (static_cast<int>(g.mutant_ids.size()) == chain.m_creators) chain.status = ChainStatus::awaiting_votes;
}

void record_vote(Chain& chain, const Vote& vote) {
    auto& g = chain.current();
    if (vote.chain_id != chain.id) fail(Errc::IndexMismatch, "vote addressed to chain " + vote.chain_id);
    if (vote.generation_index != g.index || chain.status == ChainStatus::complete)
        fail(Errc::IndexMismatch, "vote for generation " + std::to_string(vote.generation_index) +
                                      " but generation " + std::to_string(g.index) + " is current");
    if (g.selected_id || static_cast<int>(g.votes.size()) >= chain.votes_per_generation)
        fail(Errc::QuorumClosed, "generation " + std::to_string(g.index) + " of chain " + chain.id + " already has its quorum");
    if (chain.status != ChainStatus::awaiting_votes)
        fail(Errc::InvalidState, "chain " + chain.id + " is not accepting votes");
    if (g.has_voted(vote.rater_id))
        fail(Errc::DuplicateVote, "rater " + vote.rater_id + " already voted in this generation", vote.rater_id);
    if (!g.is_candidate(vote.choice)) fail(Errc::InvalidChoice, "choice " + vote.choice + " is not a candidate");

    auto expected = g.candidates();
    auto shown = vote.presentation_order;
    std::sort(expected.begin(), expected.end());
    std::sort(shown.begin(), shown.end());
    if (shown != expected) fail(Errc::InvalidArgument, "presentation order is not a permutation of the candidates");

    g.votes.push_back(vote);
    if (static_cast<int>(g.votes.size()) == chain.votes_per_generation) {
        auto rng = tie_break_rng(chain.tie_seed, g.index);
        tally(g, chain.votes_per_generation, rng);
        chain.status = ChainStatus::open;
    }
}

RecordingId tally(Generation& generation, int votes_per_generation, Rng& rng) {
    if (static_cast<int>(generation.votes.size()) != votes_per_generation)
        fail(Errc::QuorumIncomplete, std::to_string(generation.votes.size()) + " of " +
                                         std::to_string(votes_per_generation) + " votes recorded");

    const auto cands = generation.candidates();
    std::vector<int> counts(cands.size(), 0);
    for (const auto& v : generation.votes) {
        auto it = std::find(cands.begin(), cands.end(), v.choice);
        if (it == cands.end()) fail(Errc::InvalidChoice, "vote for non-candidate " + v.choice);
        ++counts[static_cast<std::size_t>(it - cands.begin())];
    }
    const int top = *std::max_element(counts.begin(), counts.end());
    std::vector<std::size_t> tied;
    for (std::size_t i = 0; i < counts.size(); ++i)
        if (counts[i] == top) tied.push_back(i);

    std::size_t pick = tied.front();
    if (tied.size() > 1) {
        std::uniform_int_distribution<std::size_t> dist(0, tied.size() - 1);
        pick = tied[dist(rng)];
    }
    generation.tie_broken = tied.size() > 1;
    generation.selected_id = cands[pick];
    return cands[pick];
}

void advance(Chain& chain) {
    if (chain.status == ChainStatus::complete) fail(Errc::InvalidState, "chain " + chain.id + " is already complete");
    const auto& g = chain.current();
    if (!g.selected_id) fail(Errc::NotTallied, "generation " + std::to_string(g.index) + " has no winner yet");

    const int next = g.index + 1;
    if (next >= chain.n_generations) {
        chain.status = ChainStatus::complete;
        return;
    }
    Generation ng;
    ng.index = next;
    ng.incumbent_id = *g.selected_id;
    chain.generations.push_back(std::move(ng));
    chain.status = ChainStatus::awaiting_mutants;
}

Corpus extract_corpus(std::span<const Chain> chains, const RecordingLookup& lookup) {
    Corpus corpus;
    std::unordered_set<Digest> seen;
    for (const auto& c : chains) {
        if (c.status != ChainStatus::complete) fail(Errc::ChainIncomplete, "chain " + c.id + " is not complete", c.id);
        for (const auto& g : c.generations) {
            corpus.entries.push_back({c.id, g.index, *g.selected_id});
            const auto& rec = lookup(*g.selected_id);
            if (seen.insert(rec.blob_digest).second) corpus.unique_recordings.push_back(rec.id);
        }
    }
    return corpus;
}

// ---- JSON ----

namespace {

Json to_json(const IntRange& r) { return Json::array({r.lo, r.hi}); }
IntRange range_from_json(const Json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

}  // namespace

Json to_json(const ExperimentConfig& c) {
    return {
        {"n_sentences", c.n_sentences},
        {"speakers_per_sentence", c.speakers_per_sentence},
        {"n_generations", c.n_generations},
        {"m_creators", c.m_creators},
        {"votes_per_generation", c.votes_per_generation},
        {"annotation_batch_size", c.annotation_batch_size},
        {"annotation_repeats", c.annotation_repeats},
        {"consistency_threshold", c.consistency_threshold},
        {"emotionality_scale", to_json(c.emotionality_scale)},
        {"valence_range", to_json(c.valence_range)},
        {"arousal_range", to_json(c.arousal_range)},
        {"authenticity_scale", to_json(c.authenticity_scale)},
    };
}

ExperimentConfig config_from_json(const Json& j) {
    ExperimentConfig c;
    auto opt_int = [&](const char* key, int& dst) {
        if (j.contains(key)) dst = j.at(key).get<int>();
    };
    auto opt_range = [&](const char* key, IntRange& dst) {
        if (j.contains(key)) dst = range_from_json(j.at(key));
    };
    try {
        opt_int("n_sentences", c.n_sentences);
        opt_int("speakers_per_sentence", c.speakers_per_sentence);
        opt_int("n_generations", c.n_generations);
        opt_int("m_creators", c.m_creators);
        opt_int("votes_per_generation", c.votes_per_generation);
        opt_int("annotation_batch_size", c.annotation_batch_size);
        opt_int("annotation_repeats", c.annotation_repeats);
        if (j.contains("consistency_threshold")) c.consistency_threshold = j.at("consistency_threshold").get<double>();
        opt_range("emotionality_scale", c.emotionality_scale);
        opt_range("valence_range", c.valence_range);
        opt_range("arousal_range", c.arousal_range);
        opt_range("authenticity_scale", c.authenticity_scale);
    } catch (const Json::exception& e) {
        fail(Errc::InvalidConfig, e.what());
    }
    c.validate();
    return c;
}

Json to_json(const Recording& r) {
    return {
        {"id", r.id},
        {"chain_id", r.chain_id},
        {"generation_index", r.generation_index},
        {"creator_id", r.creator_id ? Json(*r.creator_id) : Json(nullptr)},
        {"blob_digest", r.blob_digest},
        {"sentence_id", r.sentence_id},
        {"confirmed", r.confirmed},
        {"created_at", r.created_at},
    };
}

Recording recording_from_json(const Json& j) {
    Recording r;
    r.id = j.at("id").get<std::string>();
    r.chain_id = j.at("chain_id").get<std::string>();
    r.generation_index = j.at("generation_index").get<int>();
    if (j.contains("creator_id") && !j.at("creator_id").is_null()) r.creator_id = j.at("creator_id").get<std::string>();
    r.blob_digest = j.at("blob_digest").get<std::string>();
    r.sentence_id = j.at("sentence_id").get<std::string>();
    r.confirmed = j.at("confirmed").get<bool>();
    r.created_at = j.at("created_at").get<Timestamp>();
    return r;
}

Json to_json(const Vote& v) {
    return {
        {"rater_id", v.rater_id},
        {"chain_id", v.chain_id},
        {"generation_index", v.generation_index},
        {"choice", v.choice},
        {"presentation_order", v.presentation_order},
        {"submitted_at", v.submitted_at},
    };
}

Vote vote_from_json(const Json& j) {
    Vote v;
    v.rater_id = j.at("rater_id").get<std::string>();
    v.chain_id = j.at("chain_id").get<std::string>();
    v.generation_index = j.at("generation_index").get<int>();
    v.choice = j.at("choice").get<std::string>();
    v.presentation_order = j.at("presentation_order").get<std::vector<std::string>>();
    v.submitted_at = j.at("submitted_at").get<Timestamp>();
    return v;
}

Json to_json(const Generation& g) {
    Json votes = Json::array();
    for (const auto& v : g.votes) votes.push_back(to_json(v));
    return {
        {"index", g.index},
        {"incumbent_id", g.incumbent_id},
        {"mutant_ids", g.mutant_ids},
        {"votes", std::move(votes)},
        {"selected_id", g.selected_id ? Json(*g.selected_id) : Json(nullptr)},
        {"tie_broken", g.tie_broken},
    };
}

Generation generation_from_json(const Json& j) {
    Generation g;
    g.index = j.at("index").get<int>();
    g.incumbent_id = j.at("incumbent_id").get<std::string>();
    g.mutant_ids = j.at("mutant_ids").get<std::vector<std::string>>();
    for (const auto& v : j.at("votes")) g.votes.push_back(vote_from_json(v));
    if (!j.at("selected_id").is_null()) g.selected_id = j.at("selected_id").get<std::string>();
    g.tie_broken = j.at("tie_broken").get<bool>();
    return g;
}

Json to_json(const Chain& c) {
    Json gens = Json::array();
    for (const auto& g : c.generations) gens.push_back(to_json(g));
    return {
        {"id", c.id},
        {"sentence_id", c.sentence_id},
        {"seed_recording_id", c.seed_recording_id},
        {"generations", std::move(gens)},
        {"status", std::string(to_string(c.status))},
        {"m_creators", c.m_creators},
        {"votes_per_generation", c.votes_per_generation},
        {"n_generations", c.n_generations},
        // String form keeps all 64 bits for consumers that parse numbers as doubles.
        {"tie_seed", std::to_string(c.tie_seed)},
    };
}

Chain chain_from_json(const Json& j) {
    Chain c;
    c.id = j.at("id").get<std::string>();
    c.sentence_id = j.at("sentence_id").get<std::string>();
    c.seed_recording_id = j.at("seed_recording_id").get<std::string>();
    for (const auto& g : j.at("generations")) c.generations.push_back(generation_from_json(g));
    c.status = chain_status_from_string(j.at("status").get<std::string>());
    c.m_creators = j.at("m_creators").get<int>();
    c.votes_per_generation = j.at("votes_per_generation").get<int>();
    c.n_generations = j.at("n_generations").get<int>();
    c.tie_seed = std::stoull(j.at("tie_seed").get<std::string>());
    return c;
}

Json to_json(const Corpus& c) {
    Json entries = Json::array();
    for (const auto& e : c.entries)
        entries.push_back({{"chain_id", e.chain_id}, {"generation_index", e.generation_index}, {"recording_id", e.recording_id}});
    return {{"entries", std::move(entries)}, {"unique_recordings", c.unique_recordings}};
}

}  // namespace gap
