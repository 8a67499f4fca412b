#include <algorithm>
#include <cmath>

#include "gap/simagents.hpp"

namespace gap::sim {

void AgentParams::validate() const {
    for (double s : {sigma_mutation, sigma_perception, sigma_va, seed_e_sd, annotator_noise})
        if (!(s >= 0) || !std::isfinite(s)) fail(Errc::InvalidConfig, "agent noise parameters must be finite and >= 0");
    if (!(e_ceiling >= 1.0 && e_ceiling <= 4.0)) fail(Errc::InvalidConfig, "e_ceiling must lie in [1, 4]");
}

LatentExpression clip(LatentExpression x, const AgentParams& params) {
    x.e = std::clamp(x.e, 1.0, params.e_ceiling);
    x.v = std::clamp(x.v, -50.0, 50.0);
    x.a = std::clamp(x.a, 0.0, 100.0);
    return x;
}

namespace {
// N(0, sd) that consumes no randomness when sd is zero, so zero-noise runs stay exact.
double noise(double sd, Rng& rng) {
    if (sd == 0) return 0;
    return std::normal_distribution<double>(0.0, sd)(rng);
}
}  // namespace

LatentExpression mutate_expression(const LatentExpression& parent, const AgentParams& params, Rng& rng) {
    LatentExpression child = parent;
    child.e += noise(params.sigma_mutation, rng);
    child.v += noise(params.sigma_va, rng);
    child.a += noise(params.sigma_va, rng);
    return clip(child, params);
}

double perceive_emotionality(const LatentExpression& latent, const AgentParams& params, Rng& rng) {
    return latent.e + noise(params.sigma_perception, rng);
}

std::size_t rater_choice(const std::vector<LatentExpression>& candidates, const AgentParams& params, Rng& rng) {
    if (candidates.size() < 2) fail(Errc::TooFewCandidates, "a choice needs at least 2 candidates");
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> tied;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double p = perceive_emotionality(candidates[i], params, rng);
        if (p > best_value) {
            best_value = p;
            best = i;
            tied.assign(1, i);
        } else if (p == best_value) {
            tied.push_back(i);
        }
    }
    // Exact ties only happen without perception noise; pick uniformly.
    if (tied.size() > 1) best = tied[std::uniform_int_distribution<std::size_t>(0, tied.size() - 1)(rng)];
    return best;
}

const std::vector<MoodWord>& mood_grid() {
    static const std::vector<MoodWord> grid{
        {"angry", -35, 85},  {"afraid", -25, 70}, {"anxious", -12, 60},  // negative, high arousal
        {"excited", 30, 85}, {"happy", 40, 65},   {"amused", 18, 60},    // positive, high arousal
        {"sad", -35, 20},    {"bored", -15, 15},  {"tired", -8, 5},      // negative, low arousal
        {"relaxed", 35, 25}, {"calm", 20, 15},    {"content", 12, 35},   // positive, low arousal
    };
    return grid;
}

std::string nearest_mood_word(double v, double a) {
    const MoodWord* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& w : mood_grid()) {
        const double d = (w.v - v) * (w.v - v) + (w.a - a) * (w.a - a);
        if (d < best_d) {
            best_d = d;
            best = &w;
        }
    }
    return best->word;
}

AnnotationRecord simulate_annotation(const LatentExpression& latent, const AgentParams& params, Rng& rng) {
    // Valence and arousal noise scaled from the 3-point emotionality span to the 100-point scales.
    const double va_noise = params.annotator_noise * 100.0 / 3.0;
    AnnotationRecord r;
    r.emotionality = static_cast<int>(std::clamp(std::lround(latent.e + noise(params.annotator_noise, rng)), 1L, 4L));
    const double v = std::clamp(latent.v + noise(va_noise, rng), -50.0, 50.0);
    const double a = std::clamp(latent.a + noise(va_noise, rng), 0.0, 100.0);
    r.valence = static_cast<int>(std::lround(v));
    r.arousal = static_cast<int>(std::lround(a));
    static const std::discrete_distribution<int>::param_type authenticity{0.15, 0.35, 0.35, 0.15};
    r.authenticity = 1 + std::discrete_distribution<int>(authenticity)(rng);
    r.mood_word = nearest_mood_word(v, a);
    return r;
}

Json to_json(const LatentExpression& x) { return {{"e", x.e}, {"v", x.v}, {"a", x.a}}; }

Json to_json(const AgentParams& p) {
    return {{"sigma_mutation", p.sigma_mutation}, {"sigma_perception", p.sigma_perception},
            {"sigma_va", p.sigma_va},             {"e_ceiling", p.e_ceiling},
            {"seed_e_mean", p.seed_e_mean},       {"seed_e_sd", p.seed_e_sd},
            {"annotator_noise", p.annotator_noise}};
}

AgentParams agent_params_from_json(const Json& j) {
    AgentParams p;
    p.sigma_mutation = j.value("sigma_mutation", p.sigma_mutation);
    p.sigma_perception = j.value("sigma_perception", p.sigma_perception);
    p.sigma_va = j.value("sigma_va", p.sigma_va);
    p.e_ceiling = j.value("e_ceiling", p.e_ceiling);
    p.seed_e_mean = j.value("seed_e_mean", p.seed_e_mean);
    p.seed_e_sd = j.value("seed_e_sd", p.seed_e_sd);
    p.annotator_noise = j.value("annotator_noise", p.annotator_noise);
    p.validate();
    return p;
}

}  // namespace gap::sim
