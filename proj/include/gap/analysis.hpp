#pragma once

// Validation analytics: generation trajectories with CIs, valence-arousal
// KDE, bootstrap label variability, frequency profiles, authenticity ANOVA.

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gap/allocation.hpp"
#include "gap/stats.hpp"

namespace gap::analysis {

using stats::AnovaResult;
using stats::MeanCI;

inline constexpr const char* kProsodyGap = "prosody-gap";
inline constexpr const char* kCremaD = "crema-d";
inline constexpr const char* kVenec = "venec";
inline constexpr const char* kNeutralBaseline = "neutral-baseline";

bool is_known_set(std::string_view name) noexcept;

inline constexpr std::array<const char*, 4> kBins{"0", "1-3", "4-6", "7-9"};

/// 0 -> "0", 1..3 -> "1-3", 4..6 -> "4-6", 7..9 -> "7-9".
std::string bin_generation(int generation);

/// One row of the annotation CSV.
struct AnnotationRow {
    std::string stimulus_id;
    std::string set;
    std::optional<int> generation;
    AnnotationRecord record;
};

inline constexpr std::array<const char*, 10> kCsvColumns{"stimulus_id", "set",          "generation", "emotionality",
                                                         "valence",     "arousal",      "authenticity", "mood_word",
                                                         "participant_id", "is_repeat"};

/// Parses and range-checks an annotation CSV. Throws ImportError naming the
/// 1-based data row on any schema or range violation.
std::vector<AnnotationRow> read_annotation_csv(std::istream& in, const ExperimentConfig& config = {});
std::vector<AnnotationRow> read_annotation_csv(const std::filesystem::path& path, const ExperimentConfig& config = {});
void write_annotation_csv(std::ostream& out, const std::vector<AnnotationRow>& rows);

using stats::mean_ci95;

enum class Measure { emotionality, arousal, abs_valence, valence, authenticity };
std::string_view to_string(Measure m) noexcept;
Measure measure_from_string(std::string_view s);

struct TrajectoryPoint {
    std::string group;  // generation bin for prosody-gap, set name otherwise
    std::size_t n_stimuli = 0;
    std::optional<double> mean;  // absent when the group has no stimuli
    std::optional<double> lower;
    std::optional<double> upper;
};

struct TrajectoryOptions {
    /// Apply |.| to each rating before stimulus averaging instead of to the stimulus mean.
    bool abs_per_rating = false;
    bool include_repeats = false;
};

/// Stimulus means first, then per-group mean and 95% CI over those means.
/// Always reports the four prosody-gap bins, then any other sets present.
std::vector<TrajectoryPoint> trajectory(const std::vector<AnnotationRow>& rows, Measure measure,
                                        const TrajectoryOptions& options = {});

struct Bandwidth {
    double valence = 0;
    double arousal = 0;
};

struct GridSpec {
    double v_min = -50, v_max = 50;
    double a_min = 0, a_max = 100;
    int nv = 101, na = 101;
};

struct DensityGrid {
    GridSpec spec;
    Bandwidth bandwidth;
    std::vector<double> density;  // row-major, density[j * nv + i] at (v_i, a_j)

    double cell_v(int i) const;
    double cell_a(int j) const;
    double at(int i, int j) const { return density[static_cast<std::size_t>(j) * spec.nv + i]; }
    double cell_area() const;
    double mass() const;
};

Bandwidth scott_bandwidth(const std::vector<std::array<double, 2>>& points);
/// Gaussian product kernel evaluated at cell centres. Throws DegenerateBandwidth
/// when Scott's rule yields a zero bandwidth and none is given.
DensityGrid kde2d(const std::vector<std::array<double, 2>>& points, std::optional<Bandwidth> bandwidth = std::nullopt,
                  const GridSpec& grid = {});

/// Casefold plus a small suffix rule set (-s/-es, -ies/-ied, -ing, -ed with
/// undoubling and final-e restoration) and an exception table.
std::string lemmatize(std::string_view word);

struct BootstrapSample {
    std::vector<int> sorted_frequencies;  // descending counts of each distinct lemma
    std::size_t unique() const noexcept { return sorted_frequencies.size(); }
};

/// n_boot draws of `draw` labels without replacement; replicate i uses a
/// stream derived from (seed, i) so results do not depend on evaluation order.
std::vector<BootstrapSample> bootstrap_labels(const std::vector<std::string>& lemmas, int n_boot, int draw,
                                              std::uint64_t seed);
std::vector<int> bootstrap_unique_counts(const std::vector<std::string>& lemmas, int n_boot, int draw,
                                         std::uint64_t seed);

using stats::skewness;

struct FrequencyProfiles {
    std::size_t threshold = 0;
    std::map<std::string, std::vector<double>> profiles;
};

/// threshold = global minimum unique count; per set, the element-wise mean of
/// the descending frequency vectors truncated to the threshold.
FrequencyProfiles truncated_frequency_profile(const std::map<std::string, std::vector<BootstrapSample>>& bootstraps);

struct BootstrapResult {
    std::vector<int> unique_counts;
    std::vector<double> truncated_profile;
    double skewness = 0;     // mean over bootstraps
    double skewness_sd = 0;  // sd over bootstraps
    std::size_t threshold = 0;
};

/// Uniform sample without replacement down to `target` per set.
std::map<std::string, std::vector<std::string>> balanced_subsample(
    const std::map<std::string, std::vector<std::string>>& sets, std::size_t target, std::uint64_t seed);

using stats::anova_oneway;
using stats::pearson_r;

struct AnalysisOptions {
    std::uint64_t seed = 1;
    int n_boot = 1000;
    int draw = 100;
    std::size_t balance_target = 50;
    bool exclude_flagged_annotators = true;
    /// Final-generation prosody-gap stimuli (one per chain). When empty, the
    /// prosody-gap stimuli of bin 7-9 stand in.
    std::set<std::string> final_prosody_stimuli;
    GridSpec grid{};
    ExperimentConfig config{};
};

struct AnalysisReport {
    std::vector<std::string> excluded_participants;
    std::map<std::string, std::vector<TrajectoryPoint>> trajectories;  // by measure name
    std::map<std::string, DensityGrid> kde;                            // by bin/set
    std::map<std::string, BootstrapResult> variability;                // by set
    std::map<std::string, std::map<std::string, int>> word_counts;     // set -> lemma -> count
    std::optional<AnovaResult> authenticity_anova;
    std::map<std::string, std::size_t> anova_group_sizes;
};

/// Runs the whole validation analysis over annotation rows.
AnalysisReport analyze(const std::vector<AnnotationRow>& rows, const AnalysisOptions& options = {});
/// Writes trajectories.csv, kde_<group>.csv, variability.json, wordcounts.csv,
/// authenticity_anova.json and summary.json.
void write_report(const AnalysisReport& report, const std::filesystem::path& out_dir);

Json to_json(const TrajectoryPoint& p);
Json to_json(const AnovaResult& r);
Json to_json(const BootstrapResult& r);
Json summary_json(const AnalysisReport& report);

}  // namespace gap::analysis
