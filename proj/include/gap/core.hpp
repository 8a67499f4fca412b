#pragma once

// Chain state machine for the genetic-algorithm-with-people protocol:
// creators add mutants of the incumbent, raters vote, the plurality winner
// becomes the next generation's incumbent.

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gap/error.hpp"
#include "gap/rng.hpp"

namespace gap {

using Json = nlohmann::json;

using RecordingId = std::string;
using ChainId = std::string;
using ParticipantId = std::string;
using Digest = std::string;
/// Milliseconds since the Unix epoch.
using Timestamp = std::int64_t;

struct IntRange {
    int lo = 0;
    int hi = 0;
    bool contains(long long v) const noexcept { return v >= lo && v <= hi; }
    friend bool operator==(const IntRange&, const IntRange&) = default;
};

struct ExperimentConfig {
    int n_sentences = 10;
    int speakers_per_sentence = 5;
    int n_generations = 10;  // includes the seed generation
    int m_creators = 2;
    int votes_per_generation = 7;
    int annotation_batch_size = 20;
    int annotation_repeats = 2;
    double consistency_threshold = 0.40;
    IntRange emotionality_scale{1, 4};
    IntRange valence_range{-50, 50};
    IntRange arousal_range{0, 100};
    IntRange authenticity_scale{1, 4};

    int n_chains() const noexcept { return n_sentences * speakers_per_sentence; }
    /// Throws InvalidConfig when an invariant is broken.
    void validate() const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct Recording {
    RecordingId id;
    ChainId chain_id;
    int generation_index = 0;
    std::optional<ParticipantId> creator_id;  // empty for seeds
    Digest blob_digest;
    std::string sentence_id;
    bool confirmed = false;
    Timestamp created_at = 0;

    friend bool operator==(const Recording&, const Recording&) = default;
};

struct Vote {
    ParticipantId rater_id;
    ChainId chain_id;
    int generation_index = 0;
    RecordingId choice;
    std::vector<RecordingId> presentation_order;
    Timestamp submitted_at = 0;

    friend bool operator==(const Vote&, const Vote&) = default;
};

struct Generation {
    int index = 0;
    RecordingId incumbent_id;
    std::vector<RecordingId> mutant_ids;
    std::vector<Vote> votes;
    std::optional<RecordingId> selected_id;
    bool tie_broken = false;

    /// Incumbent first, then mutants in arrival order.
    std::vector<RecordingId> candidates() const;
    bool is_candidate(const RecordingId& id) const;
    bool has_voted(const ParticipantId& rater) const;
    /// Number of votes cast for `id`.
    int votes_for(const RecordingId& id) const;

    friend bool operator==(const Generation&, const Generation&) = default;
};

// `open` marks a generation that is tallied but not yet advanced past.
enum class ChainStatus { open, awaiting_mutants, awaiting_votes, complete };

std::string_view to_string(ChainStatus s) noexcept;
ChainStatus chain_status_from_string(std::string_view s);

struct Chain {
    ChainId id;
    std::string sentence_id;
    RecordingId seed_recording_id;
    std::vector<Generation> generations;
    ChainStatus status = ChainStatus::awaiting_mutants;
    int m_creators = 2;
    int votes_per_generation = 7;
    int n_generations = 10;
    /// Seeds the tie-break stream; each generation draws from its own derived source.
    std::uint64_t tie_seed = 0;

    Generation& current() { return generations.back(); }
    const Generation& current() const { return generations.back(); }

    friend bool operator==(const Chain&, const Chain&) = default;
};

struct CorpusEntry {
    ChainId chain_id;
    int generation_index = 0;
    RecordingId recording_id;
    friend bool operator==(const CorpusEntry&, const CorpusEntry&) = default;
};

struct Corpus {
    std::vector<CorpusEntry> entries;
    /// One representative recording id per distinct blob digest, in first-seen order.
    std::vector<RecordingId> unique_recordings;
};

/// Lowercase hex SHA-256.
Digest content_digest(std::span<const std::uint8_t> blob);
Digest content_digest(std::string_view blob);

using BlobResolver = std::function<bool(const Digest&)>;
using RecordingLookup = std::function<const Recording&(const RecordingId&)>;

Chain init_chain(const Recording& seed, const ExperimentConfig& config, const BlobResolver& has_blob,
                 std::uint64_t tie_seed = 0);
void add_mutant(Chain& chain, const Recording& rec);
/// Appends the vote; the quorum-completing vote triggers the tally.
void record_vote(Chain& chain, const Vote& vote);
/// Plurality winner with uniform random tie-breaking. Sets tie_broken.
RecordingId tally(Generation& generation, int votes_per_generation, Rng& rng);
void advance(Chain& chain);
Corpus extract_corpus(std::span<const Chain> chains, const RecordingLookup& lookup);

/// Random source used to break ties in `generation` of a chain.
Rng tie_break_rng(std::uint64_t tie_seed, int generation);

/// True when the winner of generation i was its incumbent (descriptive convergence).
bool incumbent_reselected(const Generation& g);

// Canonical JSON (object keys are sorted by the json library's default map).
Json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const Json& j);
Json to_json(const Recording& r);
Recording recording_from_json(const Json& j);
Json to_json(const Vote& v);
Vote vote_from_json(const Json& j);
Json to_json(const Generation& g);
Generation generation_from_json(const Json& j);
Json to_json(const Chain& c);
Chain chain_from_json(const Json& j);
Json to_json(const Corpus& c);

}  // namespace gap
