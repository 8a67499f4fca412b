#pragma once

// Simulated creators, raters and annotators over a latent emotion space.
// Drives the full protocol through Experiment so runs exercise the same code
// paths as live sessions.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gap/allocation.hpp"
#include "gap/analysis.hpp"

namespace gap::sim {

struct LatentExpression {
    double e = 1.0;  // emotionality, [1, e_ceiling]
    double v = 0.0;  // valence, [-50, 50]
    double a = 0.0;  // arousal, [0, 100]
    friend bool operator==(const LatentExpression&, const LatentExpression&) = default;
};

struct AgentParams {
    double sigma_mutation = 0.35;
    double sigma_perception = 0.25;
    double sigma_va = 8.0;
    double e_ceiling = 4.0;
    double seed_e_mean = 1.8;
    double seed_e_sd = 0.3;
    double annotator_noise = 0.3;

    /// Throws InvalidConfig on a negative spread or a ceiling outside [1, 4].
    void validate() const;
    friend bool operator==(const AgentParams&, const AgentParams&) = default;
};

LatentExpression clip(LatentExpression x, const AgentParams& params);

LatentExpression mutate_expression(const LatentExpression& parent, const AgentParams& params, Rng& rng);
double perceive_emotionality(const LatentExpression& latent, const AgentParams& params, Rng& rng);
/// Index of the candidate with the highest perceived emotionality.
std::size_t rater_choice(const std::vector<LatentExpression>& candidates, const AgentParams& params, Rng& rng);

/// The 12 mood words and their valence-arousal prototypes.
struct MoodWord {
    const char* word;
    double v;
    double a;
};
const std::vector<MoodWord>& mood_grid();
std::string nearest_mood_word(double v, double a);

/// Emotionality, valence and arousal are noisy, rounded and clipped latents;
/// authenticity comes from a fixed distribution. Participant and stimulus ids
/// are left for the caller.
AnnotationRecord simulate_annotation(const LatentExpression& latent, const AgentParams& params, Rng& rng);

struct SimOptions {
    /// Receives every event of the run, in order.
    EventSink sink;
    std::shared_ptr<BlobStore> blobs;
    Timestamp start = 0;
    /// Runs the annotation phase after all chains complete.
    bool annotate = true;
    /// Adds simulated crema-d (5 x 20), venec (10 x 10) and neutral-baseline (30) stimuli.
    bool external_sets = true;
    /// Target mean number of main-trial annotations per stimulus.
    int annotations_per_stimulus = 5;
};

/// Trial deadline of the simulated experiment's allocation options.
inline constexpr Timestamp kSimTrialDeadlineMs = 10 * 60 * 1000;

struct SimRun {
    ExperimentConfig config;
    AgentParams params;
    std::uint64_t master_seed = 0;
    std::vector<Chain> chains;
    std::map<std::string, LatentExpression> latents;  // recording or stimulus id
    std::map<std::string, Stimulus> stimuli;
    std::vector<AnnotationRecord> annotations;
    /// Canonical experiment state at the end of the run.
    Json state;

    /// Final-generation selection of every chain.
    std::set<std::string> final_selected() const;
    /// Annotations joined with their stimulus set and generation.
    std::vector<analysis::AnnotationRow> annotation_rows() const;
};

SimRun run_experiment(const ExperimentConfig& config, const AgentParams& params, std::uint64_t master_seed,
                      const SimOptions& options = {});

Json to_json(const LatentExpression& x);
Json to_json(const AgentParams& p);
AgentParams agent_params_from_json(const Json& j);
Json to_json(const SimRun& run);

/// Per-generation means across chains.
struct GenerationTrend {
    std::vector<double> selected_e;        // latent e of the selected recording
    std::vector<double> incumbent_votes;   // votes cast for the incumbent, generations >= 1
};
GenerationTrend generation_trend(const SimRun& run);

}  // namespace gap::sim
