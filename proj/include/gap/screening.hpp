#pragma once

// Pre-experiment gates and post-hoc exclusion rules.

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gap/allocation.hpp"

namespace gap::screening {

enum class Verdict { pass, fail };
enum class QualityAnswer { good, bad };

std::string_view to_string(Verdict v) noexcept;
QualityAnswer quality_answer_from_string(std::string_view s);

struct QualityDiscriminationKey {
    std::vector<std::pair<std::string, QualityAnswer>> items;
};

/// Fails when more than one item is answered incorrectly.
Verdict grade_quality_discrimination(const std::map<std::string, QualityAnswer>& answers,
                                     const QualityDiscriminationKey& key);
int count_mistakes(const std::map<std::string, QualityAnswer>& answers, const QualityDiscriminationKey& key);

/// Casefold, drop punctuation, collapse runs of whitespace, trim.
std::string normalize_transcript(std::string_view text);
Verdict grade_transcript_match(std::string_view expected, std::string_view transcribed);

/// Speech-to-text behind a narrow interface so a hosted API can be swapped in.
class Transcriber {
public:
    virtual ~Transcriber() = default;
    virtual std::string transcribe(std::string_view audio) = 0;
};

/// Deterministic stand-in: returns a scripted transcript for known audio
/// digests and otherwise treats the audio bytes as UTF-8 text.
class MockTranscriber final : public Transcriber {
public:
    void script(const Digest& audio_digest, std::string transcript);
    std::string transcribe(std::string_view audio) override;

private:
    std::map<Digest, std::string> scripted_;
};

struct RatingVector {
    double emotionality = 0;
    double valence = 0;
    double arousal = 0;
    double authenticity = 0;
};

/// Pearson r between main and repeated ratings, each dimension rescaled to
/// [0, 1] by its configured range and pooled across the repeated stimuli.
double consistency_r(const std::vector<RatingVector>& main, const std::vector<RatingVector>& repeats,
                     const ExperimentConfig& config);
bool below_consistency_threshold(double r, const ExperimentConfig& config);

/// Flags a participant whose normalized labels are > 80% one word.
bool detect_constant_labels(const std::vector<std::string>& labels);
inline constexpr double kConstantLabelShare = 0.80;

inline constexpr const char* kLexTale = "lextale";
inline constexpr const char* kHeadphone = "headphone";
inline constexpr const char* kQualityDiscrimination = "quality_discrimination";
inline constexpr const char* kTranscriptMatch = "transcript_match";

std::vector<std::string> required_checks(Role role);

struct ScreeningOutcome {
    ParticipantId participant_id;
    std::map<std::string, Verdict> checks;
    bool passed = false;
    std::vector<std::string> reasons;
};

/// Combines check results. Throws IncompleteScreening when a check required
/// for the role is absent. Extra checks are recorded and also count.
ScreeningOutcome screening_gate(const ParticipantId& pid, Role role, const std::map<std::string, Verdict>& results);

/// Pluggable boolean gate (language proficiency, headphone check).
using BooleanGate = std::function<bool(const ParticipantId&)>;
inline BooleanGate mock_gate(bool result) {
    return [result](const ParticipantId&) { return result; };
}

/// Post-hoc annotator exclusion from their submitted annotations.
struct AnnotatorReview {
    ParticipantId participant_id;
    std::optional<double> consistency;  // empty when undefined
    bool low_consistency = false;
    bool constant_labels = false;
    bool excluded() const noexcept { return low_consistency || constant_labels; }
    std::vector<std::string> reasons;
};

AnnotatorReview review_annotator(const ParticipantId& pid, const std::vector<AnnotationRecord>& records,
                                 const ExperimentConfig& config);

struct ScreeningFixtures {
    QualityDiscriminationKey quality_key;
    std::map<std::string, std::string> sentences;  // sentence id -> text
};

ScreeningFixtures load_screening_fixtures(const std::filesystem::path& path);
ScreeningFixtures screening_fixtures_from_json(const Json& j);
Json to_json(const ScreeningOutcome& o);

}  // namespace gap::screening
