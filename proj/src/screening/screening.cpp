#include "gap/screening.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_map>

#include "gap/stats.hpp"

namespace gap::screening {

std::string_view to_string(Verdict v) noexcept { return v == Verdict::pass ? "pass" : "fail"; }

QualityAnswer quality_answer_from_string(std::string_view s) {
    if (s == "good") return QualityAnswer::good;
    if (s == "bad") return QualityAnswer::bad;
    fail(Errc::InvalidArgument, "quality answer must be good or bad, got '" + std::string(s) + "'");
}

int count_mistakes(const std::map<std::string, QualityAnswer>& answers, const QualityDiscriminationKey& key) {
    if (key.items.empty()) fail(Errc::InvalidArgument, "quality discrimination key is empty");
    int mistakes = 0;
    for (const auto& [item, correct] : key.items) {
        auto it = answers.find(item);
        if (it == answers.end()) fail(Errc::IncompleteAnswers, "no answer for item " + item, item);
        if (it->second != correct) ++mistakes;
    }
    return mistakes;
}

Verdict grade_quality_discrimination(const std::map<std::string, QualityAnswer>& answers,
                                     const QualityDiscriminationKey& key) {
    return count_mistakes(answers, key) > 1 ? Verdict::fail : Verdict::pass;
}

std::string normalize_transcript(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (std::ispunct(c)) continue;
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

Verdict grade_transcript_match(std::string_view expected, std::string_view transcribed) {
    return normalize_transcript(expected) == normalize_transcript(transcribed) ? Verdict::pass : Verdict::fail;
}

void MockTranscriber::script(const Digest& audio_digest, std::string transcript) {
    scripted_[audio_digest] = std::move(transcript);
}

std::string MockTranscriber::transcribe(std::string_view audio) {
    if (auto it = scripted_.find(content_digest(audio)); it != scripted_.end()) return it->second;
    return std::string(audio);
}

namespace {

double unit(double v, const IntRange& r) {
    if (r.hi == r.lo) return 0.0;
    return (v - r.lo) / static_cast<double>(r.hi - r.lo);
}

void pool(const RatingVector& v, const ExperimentConfig& c, std::vector<double>& out) {
    out.push_back(unit(v.emotionality, c.emotionality_scale));
    out.push_back(unit(v.valence, c.valence_range));
    out.push_back(unit(v.arousal, c.arousal_range));
    out.push_back(unit(v.authenticity, c.authenticity_scale));
}

}  // namespace

double consistency_r(const std::vector<RatingVector>& main, const std::vector<RatingVector>& repeats,
                     const ExperimentConfig& config) {
    if (main.size() != repeats.size())
        fail(Errc::InvalidArgument, "main and repeat ratings must be aligned by stimulus");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < main.size(); ++i) {
        pool(main[i], config, x);
        pool(repeats[i], config, y);
    }
    return stats::pearson_r(x, y);
}

bool below_consistency_threshold(double r, const ExperimentConfig& config) { return r < config.consistency_threshold; }

bool detect_constant_labels(const std::vector<std::string>& labels) {
    if (labels.size() < 5) fail(Errc::InsufficientData, "constant-label detection needs at least 5 labels");
    std::unordered_map<std::string, std::size_t> counts;
    std::size_t top = 0;
    for (const auto& l : labels) top = std::max(top, ++counts[normalize_transcript(l)]);
    return static_cast<double>(top) > kConstantLabelShare * static_cast<double>(labels.size());
}

std::vector<std::string> required_checks(Role role) {
    std::vector<std::string> req{kLexTale, kHeadphone};
    if (role == Role::creator) {
        req.emplace_back(kQualityDiscrimination);
        req.emplace_back(kTranscriptMatch);
    }
    return req;
}

ScreeningOutcome screening_gate(const ParticipantId& pid, Role role, const std::map<std::string, Verdict>& results) {
    ScreeningOutcome out;
    out.participant_id = pid;
    for (const auto& name : required_checks(role))
        if (!results.count(name)) fail(Errc::IncompleteScreening, "missing required check '" + name + "'", name);
    out.checks = results;
    for (const auto& [name, verdict] : results)
        if (verdict == Verdict::fail) out.reasons.push_back("failed " + name);
    out.passed = out.reasons.empty();
    return out;
}

AnnotatorReview review_annotator(const ParticipantId& pid, const std::vector<AnnotationRecord>& records,
                                 const ExperimentConfig& config) {
    AnnotatorReview review;
    review.participant_id = pid;

    std::map<std::string, const AnnotationRecord*> main;
    std::vector<std::string> labels;
    for (const auto& r : records) {
        if (r.participant_id != pid) continue;
        labels.push_back(r.mood_word);
        if (!r.is_repeat) main[r.stimulus_id] = &r;
    }
    std::vector<RatingVector> a, b;
    for (const auto& r : records) {
        if (r.participant_id != pid || !r.is_repeat) continue;
        auto it = main.find(r.stimulus_id);
        if (it == main.end()) continue;
        const auto& m = *it->second;
        a.push_back({double(m.emotionality), double(m.valence), double(m.arousal), double(m.authenticity)});
        b.push_back({double(r.emotionality), double(r.valence), double(r.arousal), double(r.authenticity)});
    }

    if (!a.empty()) {
        try {
            review.consistency = consistency_r(a, b, config);
            review.low_consistency = below_consistency_threshold(*review.consistency, config);
            if (review.low_consistency) review.reasons.push_back("low response consistency");
        } catch (const Error& e) {
            if (e.code() != Errc::UndefinedCorrelation && e.code() != Errc::InsufficientData) throw;
            review.low_consistency = true;
            review.reasons.push_back("undefined response consistency");
        }
    }
    if (labels.size() >= 5 && detect_constant_labels(labels)) {
        review.constant_labels = true;
        review.reasons.push_back("repeated identical mood labels");
    }
    return review;
}

ScreeningFixtures screening_fixtures_from_json(const Json& j) {
    ScreeningFixtures f;
    try {
        for (const auto& item : j.at("quality_key"))
            f.quality_key.items.emplace_back(item.at("item_id").get<std::string>(),
                                             quality_answer_from_string(item.at("answer").get<std::string>()));
        if (j.contains("sentences"))
            for (const auto& [id, text] : j.at("sentences").items()) f.sentences[id] = text.get<std::string>();
    } catch (const Json::exception& e) {
        fail(Errc::InvalidArgument, std::string("malformed screening fixture: ") + e.what());
    }
    if (f.quality_key.items.empty()) fail(Errc::InvalidArgument, "screening fixture has an empty quality key");
    return f;
}

ScreeningFixtures load_screening_fixtures(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::StorageError, "cannot open " + path.string());
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::exception& e) {
        fail(Errc::InvalidArgument, std::string("screening fixture is not JSON: ") + e.what());
    }
    return screening_fixtures_from_json(j);
}

Json to_json(const ScreeningOutcome& o) {
    Json checks = Json::object();
    for (const auto& [k, v] : o.checks) checks[k] = std::string(to_string(v));
    return {{"participant_id", o.participant_id},
            {"checks", checks},
            {"overall", o.passed ? "passed" : "excluded"},
            {"reasons", o.reasons}};
}

}  // namespace gap::screening
