#pragma once

// Trial scheduling over one experiment: creator/rater/annotator trials,
// fixed roles, slot reservation and stale-trial reclamation.
//
// Every successful state change is reported through an EventSink with the
// inputs needed to re-execute it, so the full state can be rebuilt by replay.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "gap/blob_store.hpp"
#include "gap/core.hpp"

namespace gap {

enum class Role { creator, rater, annotator };
enum class ScreeningStatus { pending, passed, excluded };
enum class TrialState { issued, submitted, expired };

std::string_view to_string(Role r) noexcept;
Role role_from_string(std::string_view s);
std::string_view to_string(ScreeningStatus s) noexcept;
ScreeningStatus screening_status_from_string(std::string_view s);
std::string_view to_string(TrialState s) noexcept;
TrialState trial_state_from_string(std::string_view s);

struct Participant {
    ParticipantId id;
    Role role = Role::rater;
    ScreeningStatus screening_status = ScreeningStatus::pending;
    int completed_trials = 0;
    std::vector<std::string> screening_reasons;
    friend bool operator==(const Participant&, const Participant&) = default;
};

struct CreatorTrial {
    std::string trial_id;
    ParticipantId participant_id;
    ChainId chain_id;
    int generation_index = 0;
    RecordingId stimulus_recording_id;
    Timestamp issued_at = 0;
    Timestamp deadline = 0;
    TrialState state = TrialState::issued;
    std::optional<RecordingId> recording_id;  // set once submitted
    friend bool operator==(const CreatorTrial&, const CreatorTrial&) = default;
};

struct RaterTrial {
    std::string trial_id;
    ParticipantId participant_id;
    ChainId chain_id;
    int generation_index = 0;
    std::vector<RecordingId> presentation_order;
    Timestamp issued_at = 0;
    Timestamp deadline = 0;
    TrialState state = TrialState::issued;
    std::optional<RecordingId> choice;  // set once submitted
    friend bool operator==(const RaterTrial&, const RaterTrial&) = default;
};

/// Stimulus-set membership used by the validation (annotation) phase.
struct Stimulus {
    std::string id;
    std::string set;                      // prosody-gap | crema-d | venec | neutral-baseline
    std::optional<int> generation;        // prosody-gap only
    std::optional<RecordingId> recording_id;
    friend bool operator==(const Stimulus&, const Stimulus&) = default;
};

struct AnnotationBatch {
    ParticipantId participant_id;
    std::vector<std::string> stimulus_ids;
    std::vector<std::string> repeat_ids;  // presented after all main trials
    Timestamp issued_at = 0;

    /// Main trials followed by repeats.
    std::vector<std::string> presentation() const;
    friend bool operator==(const AnnotationBatch&, const AnnotationBatch&) = default;
};

struct AnnotationRecord {
    ParticipantId participant_id;
    std::string stimulus_id;
    int emotionality = 1;
    int valence = 0;
    int arousal = 0;
    int authenticity = 1;
    std::string mood_word;
    bool is_repeat = false;
    friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

/// Throws InvalidAnnotation when a value is outside the configured scales or the
/// mood word is not a single non-empty token.
void validate_annotation(const AnnotationRecord& rec, const ExperimentConfig& config);

using EventSink = std::function<void(std::string_view kind, const Json& payload, Timestamp at)>;

struct AllocationOptions {
    std::uint64_t seed = 0;
    Timestamp trial_deadline_ms = 10 * 60 * 1000;
};

class Experiment {
public:
    Experiment(ExperimentConfig config, AllocationOptions options, std::shared_ptr<BlobStore> blobs);

    const ExperimentConfig& config() const noexcept { return config_; }
    const AllocationOptions& options() const noexcept { return options_; }
    BlobStore& blobs() const noexcept { return *blobs_; }
    void set_event_sink(EventSink sink) { sink_ = std::move(sink); }

    // participants
    ParticipantId register_participant(Role role, Timestamp now, std::optional<ParticipantId> id = std::nullopt);
    void record_screening(const ParticipantId& id, bool passed, std::vector<std::string> reasons, Timestamp now);
    const Participant& participant(const ParticipantId& id) const;

    // chains
    const Chain& create_chain(const ChainId& chain_id, const std::string& sentence_id, const Digest& seed_digest,
                              Timestamp now);
    const Chain& chain(const ChainId& id) const;
    const std::map<ChainId, Chain>& chains() const noexcept { return chains_; }
    const Recording& recording(const RecordingId& id) const;
    const std::map<RecordingId, Recording>& recordings() const noexcept { return recordings_; }
    bool all_chains_complete() const;
    Corpus corpus() const;

    // creators
    CreatorTrial assign_creator_trial(const ParticipantId& pid, Timestamp now);
    Recording submit_creation(const std::string& trial_id, std::string_view blob, bool confirmed, Timestamp now);
    /// Same as submit_creation for a blob that is already in the store.
    Recording submit_creation_blob(const std::string& trial_id, const AudioBlobRef& blob, bool confirmed, Timestamp now);
    const CreatorTrial& creator_trial(const std::string& trial_id) const;

    // raters
    RaterTrial assign_rater_trial(const ParticipantId& pid, Timestamp now);
    Vote submit_vote(const std::string& trial_id, const RecordingId& choice, Timestamp now);
    const RaterTrial& rater_trial(const std::string& trial_id) const;

    // annotators
    void register_stimuli(const std::vector<Stimulus>& stimuli, Timestamp now);
    /// Registers every distinct prosody-gap recording of the (complete) corpus as a stimulus.
    std::vector<Stimulus> register_corpus_stimuli(Timestamp now);
    const std::map<std::string, Stimulus>& stimuli() const noexcept { return stimuli_; }
    AnnotationBatch assign_annotation_batch(const ParticipantId& pid, Timestamp now);
    void submit_annotation(const AnnotationRecord& rec, Timestamp now);
    /// Annotations from outside the live experiment (external corpora).
    void add_external_annotation(const AnnotationRecord& rec, Timestamp now);
    const std::vector<AnnotationRecord>& annotations() const noexcept { return annotations_; }
    const std::optional<AnnotationBatch> annotation_batch(const ParticipantId& pid) const;

    std::size_t reclaim_stale_trials(Timestamp now);
    void expire_trial(const std::string& trial_id, Timestamp now);

    /// Live (issued, not yet submitted or expired) trials on the chain's open generation.
    int reserved_creator_slots(const ChainId& chain_id) const;
    int reserved_rater_slots(const ChainId& chain_id) const;

    /// Full canonical state.
    Json to_json() const;
    static Experiment from_json(const Json& j, std::shared_ptr<BlobStore> blobs);

private:
    void emit(std::string_view kind, const Json& payload, Timestamp at) const;
    Participant& eligible(const ParticipantId& pid, Role role);
    Chain& chain_mut(const ChainId& id);
    std::string next_trial_id();
    const std::vector<std::string>& trials_in(const ChainId& chain_id, int generation) const;
    bool creator_busy_in(const ParticipantId& pid, const Chain& chain) const;
    bool rater_busy_in(const ParticipantId& pid, const Chain& chain) const;

    ExperimentConfig config_;
    AllocationOptions options_;
    std::shared_ptr<BlobStore> blobs_;
    EventSink sink_;

    std::map<ParticipantId, Participant> participants_;
    std::map<ChainId, Chain> chains_;
    std::map<RecordingId, Recording> recordings_;
    std::map<std::string, CreatorTrial> creator_trials_;
    std::map<std::string, RaterTrial> rater_trials_;
    std::map<std::string, Stimulus> stimuli_;
    std::map<ParticipantId, AnnotationBatch> batches_;
    std::vector<AnnotationRecord> annotations_;
    // Derived indexes, rebuilt on load.
    std::map<std::pair<ChainId, int>, std::vector<std::string>> gen_trials_;
    std::set<std::tuple<ParticipantId, std::string, bool>> annotated_;
    std::uint64_t participant_seq_ = 0;
    std::uint64_t trial_seq_ = 0;
    std::uint64_t recording_seq_ = 0;
};

Json to_json(const Participant& p);
Participant participant_from_json(const Json& j);
Json to_json(const CreatorTrial& t);
CreatorTrial creator_trial_from_json(const Json& j);
Json to_json(const RaterTrial& t);
RaterTrial rater_trial_from_json(const Json& j);
Json to_json(const Stimulus& s);
Stimulus stimulus_from_json(const Json& j);
Json to_json(const AnnotationBatch& b);
AnnotationBatch annotation_batch_from_json(const Json& j);
Json to_json(const AnnotationRecord& r);
AnnotationRecord annotation_from_json(const Json& j);

}  // namespace gap
