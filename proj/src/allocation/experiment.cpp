#include "gap/allocation.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_set>

namespace gap {

namespace {

std::string seq_id(char prefix, std::uint64_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%06llu", prefix, static_cast<unsigned long long>(n));
    return buf;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string_view to_string(Role r) noexcept {
    switch (r) {
        case Role::creator: return "creator";
        case Role::rater: return "rater";
        case Role::annotator: return "annotator";
    }
    return "rater";
}

Role role_from_string(std::string_view s) {
    if (s == "creator") return Role::creator;
    if (s == "rater") return Role::rater;
    if (s == "annotator") return Role::annotator;
    fail(Errc::InvalidArgument, "unknown role '" + std::string(s) + "'");
}

std::string_view to_string(ScreeningStatus s) noexcept {
    switch (s) {
        case ScreeningStatus::pending: return "pending";
        case ScreeningStatus::passed: return "passed";
        case ScreeningStatus::excluded: return "excluded";
    }
    return "pending";
}

ScreeningStatus screening_status_from_string(std::string_view s) {
    if (s == "pending") return ScreeningStatus::pending;
    if (s == "passed") return ScreeningStatus::passed;
    if (s == "excluded") return ScreeningStatus::excluded;
    fail(Errc::InvalidArgument, "unknown screening status '" + std::string(s) + "'");
}

std::string_view to_string(TrialState s) noexcept {
    switch (s) {
        case TrialState::issued: return "issued";
        case TrialState::submitted: return "submitted";
        case TrialState::expired: return "expired";
    }
    return "issued";
}

TrialState trial_state_from_string(std::string_view s) {
    if (s == "issued") return TrialState::issued;
    if (s == "submitted") return TrialState::submitted;
    if (s == "expired") return TrialState::expired;
    fail(Errc::InvalidArgument, "unknown trial state '" + std::string(s) + "'");
}

std::vector<std::string> AnnotationBatch::presentation() const {
    auto out = stimulus_ids;
    out.insert(out.end(), repeat_ids.begin(), repeat_ids.end());
    return out;
}

void validate_annotation(const AnnotationRecord& rec, const ExperimentConfig& config) {
    auto check = [&](const IntRange& r, int v, const char* what) {
        if (!r.contains(v))
            fail(Errc::InvalidAnnotation, std::string(what) + " " + std::to_string(v) + " outside [" + std::to_string(r.lo) +
                                              ", " + std::to_string(r.hi) + "]");
    };
    check(config.emotionality_scale, rec.emotionality, "emotionality");
    check(config.valence_range, rec.valence, "valence");
    check(config.arousal_range, rec.arousal, "arousal");
    check(config.authenticity_scale, rec.authenticity, "authenticity");
    auto word = trim(rec.mood_word);
    if (word.empty()) fail(Errc::InvalidAnnotation, "mood word is empty");
    if (word.find_first_of(" \t\r\n") != std::string::npos)
        fail(Errc::InvalidAnnotation, "mood word must be a single token, got '" + word + "'");
    if (rec.stimulus_id.empty()) fail(Errc::InvalidAnnotation, "missing stimulus id");
}

Experiment::Experiment(ExperimentConfig config, AllocationOptions options, std::shared_ptr<BlobStore> blobs)
    : config_(config), options_(options), blobs_(std::move(blobs)) {
    config_.validate();
    if (!blobs_) blobs_ = std::make_shared<MemoryBlobStore>();
    if (options_.trial_deadline_ms <= 0) fail(Errc::InvalidConfig, "trial deadline must be positive");
}

void Experiment::emit(std::string_view kind, const Json& payload, Timestamp at) const {
    if (sink_) sink_(kind, payload, at);
}

std::string Experiment::next_trial_id() { return seq_id('t', ++trial_seq_); }

const std::vector<std::string>& Experiment::trials_in(const ChainId& chain_id, int generation) const {
    static const std::vector<std::string> none;
    auto it = gen_trials_.find({chain_id, generation});
    return it == gen_trials_.end() ? none : it->second;
}

// ---- participants ----

ParticipantId Experiment::register_participant(Role role, Timestamp now, std::optional<ParticipantId> id) {
    ParticipantId pid = id ? *id : seq_id('p', participant_seq_ + 1);
    if (pid.empty()) fail(Errc::InvalidArgument, "participant id must not be empty");
    if (participants_.count(pid)) fail(Errc::InvalidArgument, "participant " + pid + " already registered", pid);
    ++participant_seq_;
    participants_.emplace(pid, Participant{pid, role, ScreeningStatus::pending, 0, {}});
    emit("participant-registered", {{"participant_id", pid}, {"role", std::string(to_string(role))}}, now);
    return pid;
}

void Experiment::record_screening(const ParticipantId& id, bool passed, std::vector<std::string> reasons, Timestamp now) {
    auto it = participants_.find(id);
    if (it == participants_.end()) fail(Errc::UnknownEntity, "unknown participant " + id, id);
    it->second.screening_status = passed ? ScreeningStatus::passed : ScreeningStatus::excluded;
    it->second.screening_reasons = std::move(reasons);
    emit("participant-screened",
         {{"participant_id", id}, {"passed", passed}, {"reasons", it->second.screening_reasons}}, now);
}

const Participant& Experiment::participant(const ParticipantId& id) const {
    auto it = participants_.find(id);
    if (it == participants_.end()) fail(Errc::UnknownEntity, "unknown participant " + id, id);
    return it->second;
}

Participant& Experiment::eligible(const ParticipantId& pid, Role role) {
    auto it = participants_.find(pid);
    if (it == participants_.end()) fail(Errc::UnknownEntity, "unknown participant " + pid, pid);
    auto& p = it->second;
    if (p.role != role)
        fail(Errc::RoleMismatch,
             "participant " + pid + " has fixed role " + std::string(to_string(p.role)) + ", not " +
                 std::string(to_string(role)),
             pid);
    if (p.screening_status != ScreeningStatus::passed)
        fail(Errc::NotEligible, "participant " + pid + " has screening status " + std::string(to_string(p.screening_status)), pid);
    return p;
}

// ---- chains ----

const Chain& Experiment::create_chain(const ChainId& chain_id, const std::string& sentence_id, const Digest& seed_digest,
                                      Timestamp now) {
    if (chains_.count(chain_id)) fail(Errc::InvalidArgument, "chain " + chain_id + " already exists", chain_id);
    Recording seed;
    seed.id = "seed-" + chain_id;
    seed.chain_id = chain_id;
    seed.generation_index = 0;
    seed.blob_digest = seed_digest;
    seed.sentence_id = sentence_id;
    seed.confirmed = true;
    seed.created_at = now;
    if (recordings_.count(seed.id)) fail(Errc::InvalidArgument, "recording " + seed.id + " already exists", seed.id);

    auto tie_seed = derive_seed(options_.seed, {hash_label("chain"), hash_label(chain_id)});
    auto chain = init_chain(seed, config_, [this](const Digest& d) { return blobs_->contains(d); }, tie_seed);
    recordings_.emplace(seed.id, seed);
    auto& stored = chains_.emplace(chain_id, std::move(chain)).first->second;
    emit("chain-created", {{"chain_id", chain_id}, {"sentence_id", sentence_id}, {"seed_digest", seed_digest}}, now);
    return stored;
}

const Chain& Experiment::chain(const ChainId& id) const {
    auto it = chains_.find(id);
    if (it == chains_.end()) fail(Errc::UnknownEntity, "unknown chain " + id, id);
    return it->second;
}

Chain& Experiment::chain_mut(const ChainId& id) {
    auto it = chains_.find(id);
    if (it == chains_.end()) fail(Errc::UnknownEntity, "unknown chain " + id, id);
    return it->second;
}

const Recording& Experiment::recording(const RecordingId& id) const {
    auto it = recordings_.find(id);
    if (it == recordings_.end()) fail(Errc::UnknownEntity, "unknown recording " + id, id);
    return it->second;
}

bool Experiment::all_chains_complete() const {
    return !chains_.empty() &&
           std::all_of(chains_.begin(), chains_.end(), [](const auto& kv) { return kv.second.status == ChainStatus::complete; });
}

Corpus Experiment::corpus() const {
    std::vector<Chain> list;
    list.reserve(chains_.size());
    for (const auto& [_, c] : chains_) list.push_back(c);
    return extract_corpus(list, [this](const RecordingId& id) -> const Recording& { return recording(id); });
}

int Experiment::reserved_creator_slots(const ChainId& chain_id) const {
    const auto& c = chain(chain_id);
    int n = 0;
    for (const auto& id : trials_in(chain_id, c.current().index))
        if (auto it = creator_trials_.find(id); it != creator_trials_.end() && it->second.state == TrialState::issued) ++n;
    return n;
}

int Experiment::reserved_rater_slots(const ChainId& chain_id) const {
    const auto& c = chain(chain_id);
    int n = 0;
    for (const auto& id : trials_in(chain_id, c.current().index))
        if (auto it = rater_trials_.find(id); it != rater_trials_.end() && it->second.state == TrialState::issued) ++n;
    return n;
}

bool Experiment::creator_busy_in(const ParticipantId& pid, const Chain& chain) const {
    for (const auto& id : trials_in(chain.id, chain.current().index))
        if (auto it = creator_trials_.find(id);
            it != creator_trials_.end() && it->second.participant_id == pid && it->second.state != TrialState::expired)
            return true;
    return false;
}

bool Experiment::rater_busy_in(const ParticipantId& pid, const Chain& chain) const {
    if (chain.current().has_voted(pid)) return true;
    for (const auto& id : trials_in(chain.id, chain.current().index))
        if (auto it = rater_trials_.find(id);
            it != rater_trials_.end() && it->second.participant_id == pid && it->second.state == TrialState::issued)
            return true;
    return false;
}

// ---- creators ----

CreatorTrial Experiment::assign_creator_trial(const ParticipantId& pid, Timestamp now) {
    eligible(pid, Role::creator);

    // Least-advanced chain first keeps chains moving at a similar pace.
    const Chain* best = nullptr;
    for (const auto& [id, c] : chains_) {
        if (c.status != ChainStatus::awaiting_mutants) continue;
        const int free = c.m_creators - static_cast<int>(c.current().mutant_ids.size()) - reserved_creator_slots(id);
        if (free <= 0 || creator_busy_in(pid, c)) continue;
        if (!best || c.current().index < best->current().index) best = &c;
    }
    if (!best) fail(Errc::NoWorkAvailable, "no chain has a free creator slot for " + pid, pid);

    CreatorTrial t;
    t.trial_id = next_trial_id();
    t.participant_id = pid;
    t.chain_id = best->id;
    t.generation_index = best->current().index;
    t.stimulus_recording_id = best->current().incumbent_id;
    t.issued_at = now;
    t.deadline = now + options_.trial_deadline_ms;
    creator_trials_.emplace(t.trial_id, t);
    gen_trials_[{t.chain_id, t.generation_index}].push_back(t.trial_id);
    emit("trial-issued", {{"trial_kind", "creator"}, {"participant_id", pid}, {"trial", gap::to_json(t)}}, now);
    return t;
}

Recording Experiment::submit_creation(const std::string& trial_id, std::string_view blob, bool confirmed, Timestamp now) {
    // Reject before touching the store so unconfirmed takes leave no blob behind.
    const auto& t = creator_trial(trial_id);
    if (t.state == TrialState::issued && confirmed && now <= t.deadline) {
        auto ref = blobs_->put(blob);
        return submit_creation_blob(trial_id, ref, confirmed, now);
    }
    return submit_creation_blob(trial_id, AudioBlobRef{content_digest(blob), blob.size(), "application/octet-stream"},
                                confirmed, now);
}

Recording Experiment::submit_creation_blob(const std::string& trial_id, const AudioBlobRef& blob, bool confirmed,
                                           Timestamp now) {
    auto it = creator_trials_.find(trial_id);
    if (it == creator_trials_.end()) fail(Errc::UnknownEntity, "unknown creator trial " + trial_id, trial_id);
    auto& t = it->second;
    if (t.state == TrialState::submitted)
        fail(Errc::AlreadySubmitted, "trial " + trial_id + " already produced recording " + *t.recording_id, *t.recording_id);
    if (t.state == TrialState::expired) fail(Errc::TrialExpired, "trial " + trial_id + " has expired", trial_id);
    if (now > t.deadline) {
        expire_trial(trial_id, now);
        fail(Errc::TrialExpired, "trial " + trial_id + " passed its deadline", trial_id);
    }
    if (!confirmed)
        fail(Errc::ConfirmationRequired, "creator must play back and confirm the recording before submitting", trial_id);
    if (!blobs_->contains(blob.digest)) fail(Errc::StorageError, "blob " + blob.digest + " is not stored", blob.digest);

    auto& c = chain_mut(t.chain_id);
    Recording rec;
    rec.id = seq_id('r', recording_seq_ + 1);
    rec.chain_id = t.chain_id;
    rec.generation_index = t.generation_index;
    rec.creator_id = t.participant_id;
    rec.blob_digest = blob.digest;
    rec.sentence_id = c.sentence_id;
    rec.confirmed = true;
    rec.created_at = now;
    add_mutant(c, rec);
    ++recording_seq_;
    recordings_.emplace(rec.id, rec);
    t.state = TrialState::submitted;
    t.recording_id = rec.id;
    ++participants_.at(t.participant_id).completed_trials;
    emit("creation-submitted",
         {{"trial_id", trial_id},
          {"recording_id", rec.id},
          {"blob_digest", blob.digest},
          {"byte_length", blob.byte_length},
          {"media_type", blob.media_type},
          {"confirmed", confirmed}},
         now);
    return rec;
}

const CreatorTrial& Experiment::creator_trial(const std::string& trial_id) const {
    auto it = creator_trials_.find(trial_id);
    if (it == creator_trials_.end()) fail(Errc::UnknownEntity, "unknown creator trial " + trial_id, trial_id);
    return it->second;
}

// ---- raters ----

RaterTrial Experiment::assign_rater_trial(const ParticipantId& pid, Timestamp now) {
    eligible(pid, Role::rater);

    const Chain* best = nullptr;
    for (const auto& [id, c] : chains_) {
        if (c.status != ChainStatus::awaiting_votes) continue;
        const int open = c.votes_per_generation - static_cast<int>(c.current().votes.size()) - reserved_rater_slots(id);
        if (open <= 0 || rater_busy_in(pid, c)) continue;
        if (!best || c.current().index < best->current().index) best = &c;
    }
    if (!best) fail(Errc::NoWorkAvailable, "no generation is awaiting a vote from " + pid, pid);

    RaterTrial t;
    t.trial_id = next_trial_id();
    t.participant_id = pid;
    t.chain_id = best->id;
    t.generation_index = best->current().index;
    t.presentation_order = best->current().candidates();
    // Keyed by (chain, generation, rater) so orders do not depend on cross-chain interleaving.
    auto rng = make_rng(options_.seed, {hash_label("presentation"), hash_label(t.chain_id),
                                        static_cast<std::uint64_t>(t.generation_index), hash_label(pid)});
    std::shuffle(t.presentation_order.begin(), t.presentation_order.end(), rng);
    t.issued_at = now;
    t.deadline = now + options_.trial_deadline_ms;
    rater_trials_.emplace(t.trial_id, t);
    gen_trials_[{t.chain_id, t.generation_index}].push_back(t.trial_id);
    emit("trial-issued", {{"trial_kind", "rater"}, {"participant_id", pid}, {"trial", gap::to_json(t)}}, now);
    return t;
}

Vote Experiment::submit_vote(const std::string& trial_id, const RecordingId& choice, Timestamp now) {
    auto it = rater_trials_.find(trial_id);
    if (it == rater_trials_.end()) fail(Errc::UnknownEntity, "unknown rater trial " + trial_id, trial_id);
    auto& t = it->second;
    if (t.state == TrialState::submitted)
        fail(Errc::AlreadySubmitted, "trial " + trial_id + " already voted for " + *t.choice, *t.choice);
    if (t.state == TrialState::expired) fail(Errc::TrialExpired, "trial " + trial_id + " has expired", trial_id);
    if (now > t.deadline) {
        expire_trial(trial_id, now);
        fail(Errc::TrialExpired, "trial " + trial_id + " passed its deadline", trial_id);
    }
    if (std::find(t.presentation_order.begin(), t.presentation_order.end(), choice) == t.presentation_order.end())
        fail(Errc::InvalidChoice, "choice " + choice + " was not presented in trial " + trial_id, choice);

    auto& c = chain_mut(t.chain_id);
    if (c.status == ChainStatus::complete || c.current().index != t.generation_index || c.current().selected_id)
        fail(Errc::QuorumClosed, "generation " + std::to_string(t.generation_index) + " of " + c.id + " is closed", trial_id);

    Vote v;
    v.rater_id = t.participant_id;
    v.chain_id = t.chain_id;
    v.generation_index = t.generation_index;
    v.choice = choice;
    v.presentation_order = t.presentation_order;
    v.submitted_at = now;
    record_vote(c, v);
    t.state = TrialState::submitted;
    t.choice = choice;
    ++participants_.at(t.participant_id).completed_trials;
    emit("vote-submitted", {{"trial_id", trial_id}, {"choice", choice}}, now);

    const auto& g = c.current();
    if (g.selected_id) {
        Json counts = Json::object();
        for (const auto& cand : g.candidates()) counts[cand] = g.votes_for(cand);
        emit("generation-tallied",
             {{"chain_id", c.id},
              {"generation_index", g.index},
              {"selected_id", *g.selected_id},
              {"tie_broken", g.tie_broken},
              {"counts", counts}},
             now);
        advance(c);
    }
    return v;
}

const RaterTrial& Experiment::rater_trial(const std::string& trial_id) const {
    auto it = rater_trials_.find(trial_id);
    if (it == rater_trials_.end()) fail(Errc::UnknownEntity, "unknown rater trial " + trial_id, trial_id);
    return it->second;
}

// ---- annotators ----

void Experiment::register_stimuli(const std::vector<Stimulus>& stimuli, Timestamp now) {
    std::unordered_set<std::string> fresh;
    for (const auto& s : stimuli) {
        if (s.id.empty()) fail(Errc::InvalidArgument, "stimulus id must not be empty");
        if (stimuli_.count(s.id) || !fresh.insert(s.id).second)
            fail(Errc::InvalidArgument, "stimulus " + s.id + " already registered", s.id);
        if (s.generation && s.set != "prosody-gap")
            fail(Errc::InvalidArgument, "only prosody-gap stimuli carry a generation", s.id);
    }
    Json list = Json::array();
    for (const auto& s : stimuli) {
        stimuli_.emplace(s.id, s);
        list.push_back(gap::to_json(s));
    }
    emit("stimuli-registered", {{"stimuli", list}}, now);
}

std::vector<Stimulus> Experiment::register_corpus_stimuli(Timestamp now) {
    auto corpus = this->corpus();
    std::vector<Stimulus> out;
    for (const auto& id : corpus.unique_recordings) {
        const auto& r = recording(id);
        // A recording selected in several generations is labelled by its own creation generation.
        out.push_back(Stimulus{id, "prosody-gap", r.generation_index, id});
    }
    register_stimuli(out, now);
    return out;
}

AnnotationBatch Experiment::assign_annotation_batch(const ParticipantId& pid, Timestamp now) {
    eligible(pid, Role::annotator);
    if (batches_.count(pid)) fail(Errc::AlreadySubmitted, "participant " + pid + " already has a batch", pid);
    const auto n = static_cast<std::size_t>(config_.annotation_batch_size);
    if (stimuli_.size() < n)
        fail(Errc::InsufficientStimuli,
             std::to_string(stimuli_.size()) + " stimuli available, batch needs " + std::to_string(n));

    std::vector<std::string> pool;
    pool.reserve(stimuli_.size());
    for (const auto& [id, _] : stimuli_) pool.push_back(id);
    auto rng = make_rng(options_.seed, {hash_label("annotation-batch"), hash_label(pid)});
    // Partial Fisher-Yates: first n entries become a uniform random ordered sample.
    for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    AnnotationBatch b;
    b.participant_id = pid;
    b.stimulus_ids.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
    std::vector<std::string> main = b.stimulus_ids;
    for (std::size_t i = 0; i < static_cast<std::size_t>(config_.annotation_repeats); ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, main.size() - 1);
        std::swap(main[i], main[pick(rng)]);
        b.repeat_ids.push_back(main[i]);
    }
    b.issued_at = now;
    batches_.emplace(pid, b);
    emit("trial-issued", {{"trial_kind", "annotation"}, {"participant_id", pid}, {"batch", gap::to_json(b)}}, now);
    return b;
}

const std::optional<AnnotationBatch> Experiment::annotation_batch(const ParticipantId& pid) const {
    auto it = batches_.find(pid);
    if (it == batches_.end()) return std::nullopt;
    return it->second;
}

void Experiment::submit_annotation(const AnnotationRecord& rec, Timestamp now) {
    auto& p = eligible(rec.participant_id, Role::annotator);
    validate_annotation(rec, config_);
    auto bit = batches_.find(rec.participant_id);
    if (bit == batches_.end()) fail(Errc::InvalidAnnotation, "participant " + rec.participant_id + " has no batch");
    const auto& list = rec.is_repeat ? bit->second.repeat_ids : bit->second.stimulus_ids;
    if (std::find(list.begin(), list.end(), rec.stimulus_id) == list.end())
        fail(Errc::InvalidAnnotation, "stimulus " + rec.stimulus_id + " is not in the participant's " +
                                          (rec.is_repeat ? "repeat" : "main") + " trials");
    if (annotated_.count({rec.participant_id, rec.stimulus_id, rec.is_repeat}))
        fail(Errc::AlreadySubmitted, "annotation already recorded", rec.stimulus_id);

    auto stored = rec;
    stored.mood_word = trim(rec.mood_word);
    annotations_.push_back(stored);
    annotated_.insert({rec.participant_id, rec.stimulus_id, rec.is_repeat});
    ++p.completed_trials;
    emit("annotation-submitted", {{"source", "participant"}, {"record", gap::to_json(stored)}}, now);
}

void Experiment::add_external_annotation(const AnnotationRecord& rec, Timestamp now) {
    validate_annotation(rec, config_);
    if (!stimuli_.count(rec.stimulus_id))
        fail(Errc::InvalidAnnotation, "stimulus " + rec.stimulus_id + " is not registered", rec.stimulus_id);
    auto stored = rec;
    stored.mood_word = trim(rec.mood_word);
    annotations_.push_back(stored);
    emit("annotation-submitted", {{"source", "external"}, {"record", gap::to_json(stored)}}, now);
}

// ---- reclamation ----

void Experiment::expire_trial(const std::string& trial_id, Timestamp now) {
    if (auto it = creator_trials_.find(trial_id); it != creator_trials_.end()) {
        if (it->second.state != TrialState::issued) fail(Errc::InvalidState, "trial " + trial_id + " is not live", trial_id);
        it->second.state = TrialState::expired;
        emit("trial-expired", {{"trial_id", trial_id}, {"trial_kind", "creator"}}, now);
        return;
    }
    if (auto it = rater_trials_.find(trial_id); it != rater_trials_.end()) {
        if (it->second.state != TrialState::issued) fail(Errc::InvalidState, "trial " + trial_id + " is not live", trial_id);
        it->second.state = TrialState::expired;
        emit("trial-expired", {{"trial_id", trial_id}, {"trial_kind", "rater"}}, now);
        return;
    }
    fail(Errc::UnknownEntity, "unknown trial " + trial_id, trial_id);
}

std::size_t Experiment::reclaim_stale_trials(Timestamp now) {
    std::vector<std::string> stale;
    for (const auto& [id, t] : creator_trials_)
        if (t.state == TrialState::issued && now > t.deadline) stale.push_back(id);
    for (const auto& [id, t] : rater_trials_)
        if (t.state == TrialState::issued && now > t.deadline) stale.push_back(id);
    std::sort(stale.begin(), stale.end());
    for (const auto& id : stale) expire_trial(id, now);
    return stale.size();
}

// ---- JSON ----

Json to_json(const Participant& p) {
    return {{"id", p.id},
            {"role", std::string(to_string(p.role))},
            {"screening_status", std::string(to_string(p.screening_status))},
            {"completed_trials", p.completed_trials},
            {"screening_reasons", p.screening_reasons}};
}

Participant participant_from_json(const Json& j) {
    Participant p;
    p.id = j.at("id").get<std::string>();
    p.role = role_from_string(j.at("role").get<std::string>());
    p.screening_status = screening_status_from_string(j.at("screening_status").get<std::string>());
    p.completed_trials = j.at("completed_trials").get<int>();
    p.screening_reasons = j.at("screening_reasons").get<std::vector<std::string>>();
    return p;
}

namespace {
Json opt(const std::optional<std::string>& v) { return v ? Json(*v) : Json(nullptr); }
std::optional<std::string> opt_str(const Json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::string>();
}
}  // namespace

Json to_json(const CreatorTrial& t) {
    return {{"trial_id", t.trial_id},
            {"kind", "creator"},
            {"participant_id", t.participant_id},
            {"chain_id", t.chain_id},
            {"generation_index", t.generation_index},
            {"stimulus_recording_id", t.stimulus_recording_id},
            {"issued_at", t.issued_at},
            {"deadline", t.deadline},
            {"state", std::string(to_string(t.state))},
            {"recording_id", opt(t.recording_id)}};
}

CreatorTrial creator_trial_from_json(const Json& j) {
    CreatorTrial t;
    t.trial_id = j.at("trial_id").get<std::string>();
    t.participant_id = j.at("participant_id").get<std::string>();
    t.chain_id = j.at("chain_id").get<std::string>();
    t.generation_index = j.at("generation_index").get<int>();
    t.stimulus_recording_id = j.at("stimulus_recording_id").get<std::string>();
    t.issued_at = j.at("issued_at").get<Timestamp>();
    t.deadline = j.at("deadline").get<Timestamp>();
    t.state = trial_state_from_string(j.at("state").get<std::string>());
    t.recording_id = opt_str(j, "recording_id");
    return t;
}

Json to_json(const RaterTrial& t) {
    return {{"trial_id", t.trial_id},
            {"kind", "rater"},
            {"participant_id", t.participant_id},
            {"chain_id", t.chain_id},
            {"generation_index", t.generation_index},
            {"presentation_order", t.presentation_order},
            {"issued_at", t.issued_at},
            {"deadline", t.deadline},
            {"state", std::string(to_string(t.state))},
            {"choice", opt(t.choice)}};
}

RaterTrial rater_trial_from_json(const Json& j) {
    RaterTrial t;
    t.trial_id = j.at("trial_id").get<std::string>();
    t.participant_id = j.at("participant_id").get<std::string>();
    t.chain_id = j.at("chain_id").get<std::string>();
    t.generation_index = j.at("generation_index").get<int>();
    t.presentation_order = j.at("presentation_order").get<std::vector<std::string>>();
    t.issued_at = j.at("issued_at").get<Timestamp>();
    t.deadline = j.at("deadline").get<Timestamp>();
    t.state = trial_state_from_string(j.at("state").get<std::string>());
    t.choice = opt_str(j, "choice");
    return t;
}

Json to_json(const Stimulus& s) {
    return {{"id", s.id},
            {"set", s.set},
            {"generation", s.generation ? Json(*s.generation) : Json(nullptr)},
            {"recording_id", opt(s.recording_id)}};
}

Stimulus stimulus_from_json(const Json& j) {
    Stimulus s;
    s.id = j.at("id").get<std::string>();
    s.set = j.at("set").get<std::string>();
    if (j.contains("generation") && !j.at("generation").is_null()) s.generation = j.at("generation").get<int>();
    s.recording_id = opt_str(j, "recording_id");
    return s;
}

Json to_json(const AnnotationBatch& b) {
    return {{"participant_id", b.participant_id},
            {"stimulus_ids", b.stimulus_ids},
            {"repeat_ids", b.repeat_ids},
            {"issued_at", b.issued_at}};
}

AnnotationBatch annotation_batch_from_json(const Json& j) {
    AnnotationBatch b;
    b.participant_id = j.at("participant_id").get<std::string>();
    b.stimulus_ids = j.at("stimulus_ids").get<std::vector<std::string>>();
    b.repeat_ids = j.at("repeat_ids").get<std::vector<std::string>>();
    b.issued_at = j.at("issued_at").get<Timestamp>();
    return b;
}

Json to_json(const AnnotationRecord& r) {
    return {{"participant_id", r.participant_id},
            {"stimulus_id", r.stimulus_id},
            {"emotionality", r.emotionality},
            {"valence", r.valence},
            {"arousal", r.arousal},
            {"authenticity", r.authenticity},
            {"mood_word", r.mood_word},
            {"is_repeat", r.is_repeat}};
}

AnnotationRecord annotation_from_json(const Json& j) {
    AnnotationRecord r;
    r.participant_id = j.at("participant_id").get<std::string>();
    r.stimulus_id = j.at("stimulus_id").get<std::string>();
    r.emotionality = j.at("emotionality").get<int>();
    r.valence = j.at("valence").get<int>();
    r.arousal = j.at("arousal").get<int>();
    r.authenticity = j.at("authenticity").get<int>();
    r.mood_word = j.at("mood_word").get<std::string>();
    r.is_repeat = j.value("is_repeat", false);
    return r;
}

Json Experiment::to_json() const {
    Json parts = Json::object(), chains = Json::object(), recs = Json::object(), ctr = Json::object(),
         rtr = Json::object(), stim = Json::object(), batches = Json::object(), anns = Json::array();
    for (const auto& [k, v] : participants_) parts[k] = gap::to_json(v);
    for (const auto& [k, v] : chains_) chains[k] = gap::to_json(v);
    for (const auto& [k, v] : recordings_) recs[k] = gap::to_json(v);
    for (const auto& [k, v] : creator_trials_) ctr[k] = gap::to_json(v);
    for (const auto& [k, v] : rater_trials_) rtr[k] = gap::to_json(v);
    for (const auto& [k, v] : stimuli_) stim[k] = gap::to_json(v);
    for (const auto& [k, v] : batches_) batches[k] = gap::to_json(v);
    for (const auto& a : annotations_) anns.push_back(gap::to_json(a));
    return {{"config", gap::to_json(config_)},
            {"seed", std::to_string(options_.seed)},
            {"trial_deadline_ms", options_.trial_deadline_ms},
            {"participants", parts},
            {"chains", chains},
            {"recordings", recs},
            {"creator_trials", ctr},
            {"rater_trials", rtr},
            {"stimuli", stim},
            {"annotation_batches", batches},
            {"annotations", anns},
            {"counters", {{"participant", participant_seq_}, {"trial", trial_seq_}, {"recording", recording_seq_}}}};
}

Experiment Experiment::from_json(const Json& j, std::shared_ptr<BlobStore> blobs) {
    AllocationOptions opts;
    opts.seed = std::stoull(j.at("seed").get<std::string>());
    opts.trial_deadline_ms = j.at("trial_deadline_ms").get<Timestamp>();
    Experiment e(config_from_json(j.at("config")), opts, std::move(blobs));
    for (const auto& [k, v] : j.at("participants").items()) e.participants_.emplace(k, participant_from_json(v));
    for (const auto& [k, v] : j.at("chains").items()) e.chains_.emplace(k, chain_from_json(v));
    for (const auto& [k, v] : j.at("recordings").items()) e.recordings_.emplace(k, recording_from_json(v));
    for (const auto& [k, v] : j.at("creator_trials").items()) e.creator_trials_.emplace(k, creator_trial_from_json(v));
    for (const auto& [k, v] : j.at("rater_trials").items()) e.rater_trials_.emplace(k, rater_trial_from_json(v));
    // Trial ids sort in issue order, so per-generation lists come back in the original order.
    std::map<std::string, std::pair<ChainId, int>> order;
    for (const auto& [k, t] : e.creator_trials_) order.emplace(k, std::make_pair(t.chain_id, t.generation_index));
    for (const auto& [k, t] : e.rater_trials_) order.emplace(k, std::make_pair(t.chain_id, t.generation_index));
    for (const auto& [k, key] : order) e.gen_trials_[key].push_back(k);
    for (const auto& [k, v] : j.at("stimuli").items()) e.stimuli_.emplace(k, stimulus_from_json(v));
    for (const auto& [k, v] : j.at("annotation_batches").items()) e.batches_.emplace(k, annotation_batch_from_json(v));
    for (const auto& a : j.at("annotations")) e.annotations_.push_back(annotation_from_json(a));
    for (const auto& a : e.annotations_) e.annotated_.insert({a.participant_id, a.stimulus_id, a.is_repeat});
    const auto& c = j.at("counters");
    e.participant_seq_ = c.at("participant").get<std::uint64_t>();
    e.trial_seq_ = c.at("trial").get<std::uint64_t>();
    e.recording_seq_ = c.at("recording").get<std::uint64_t>();
    return e;
}

}  // namespace gap
