#include <algorithm>
#include <cmath>
#include <fstream>

#include "gap/analysis.hpp"
#include "gap/screening.hpp"

namespace gap::analysis {

namespace {

struct StimulusMeans {
    std::string set;
    std::optional<int> generation;
    double valence = 0, arousal = 0, authenticity = 0;
    std::size_t n = 0;
};

std::map<std::pair<std::string, std::string>, StimulusMeans> stimulus_means(const std::vector<AnnotationRow>& rows) {
    std::map<std::pair<std::string, std::string>, StimulusMeans> out;
    for (const auto& r : rows) {
        auto& s = out[{r.set, r.stimulus_id}];
        s.set = r.set;
        s.generation = r.generation;
        s.valence += r.record.valence;
        s.arousal += r.record.arousal;
        s.authenticity += r.record.authenticity;
        ++s.n;
    }
    for (auto& [_, s] : out) {
        const double n = static_cast<double>(s.n);
        s.valence /= n;
        s.arousal /= n;
        s.authenticity /= n;
    }
    return out;
}

bool is_final_prosody(const AnnotationRow& r, const AnalysisOptions& o) {
    if (r.set != kProsodyGap) return false;
    if (!o.final_prosody_stimuli.empty()) return o.final_prosody_stimuli.count(r.stimulus_id) != 0;
    return r.generation && *r.generation >= 7;
}

}  // namespace

AnalysisReport analyze(const std::vector<AnnotationRow>& input, const AnalysisOptions& options) {
    AnalysisReport report;

    // Post-hoc exclusion, then drop the repeat trials.
    std::set<std::string> excluded;
    if (options.exclude_flagged_annotators) {
        std::map<std::string, std::vector<AnnotationRecord>> by_participant;
        for (const auto& r : input) by_participant[r.record.participant_id].push_back(r.record);
        for (const auto& [pid, recs] : by_participant) {
            const bool has_repeats = std::any_of(recs.begin(), recs.end(), [](const auto& a) { return a.is_repeat; });
            if (!has_repeats && recs.size() < 5) continue;
            if (screening::review_annotator(pid, recs, options.config).excluded()) excluded.insert(pid);
        }
    }
    report.excluded_participants.assign(excluded.begin(), excluded.end());
    std::vector<AnnotationRow> rows;
    for (const auto& r : input)
        if (!r.record.is_repeat && !excluded.count(r.record.participant_id)) rows.push_back(r);

    for (auto m : {Measure::emotionality, Measure::arousal, Measure::abs_valence, Measure::valence, Measure::authenticity})
        report.trajectories[std::string(to_string(m))] = trajectory(rows, m);

    // Valence-arousal density per generation bin and per external set, over stimulus means.
    std::map<std::string, std::vector<std::array<double, 2>>> points;
    for (const auto& [key, s] : stimulus_means(rows)) {
        const auto group = s.set == kProsodyGap ? std::string(kProsodyGap) + ":" + bin_generation(s.generation.value_or(0))
                                                : s.set;
        points[group].push_back({s.valence, s.arousal});
    }
    for (const auto& [group, pts] : points) {
        try {
            report.kde.emplace(group, kde2d(pts, std::nullopt, options.grid));
        } catch (const Error& e) {
            if (e.code() != Errc::DegenerateBandwidth && e.code() != Errc::InsufficientData) throw;
        }
    }

    // Label variability on emotional stimuli, balanced in stimulus count.
    std::map<std::string, std::vector<std::string>> stimuli_by_set;
    std::map<std::pair<std::string, std::string>, std::vector<std::string>> labels_by_stimulus;
    for (const auto& r : rows) {
        if (r.set == kNeutralBaseline) continue;
        if (r.set == kProsodyGap && !is_final_prosody(r, options)) continue;
        auto& labels = labels_by_stimulus[{r.set, r.stimulus_id}];
        if (labels.empty()) stimuli_by_set[r.set].push_back(r.stimulus_id);
        labels.push_back(lemmatize(r.record.mood_word));
    }
    for (const auto& r : rows) report.word_counts[r.set][lemmatize(r.record.mood_word)]++;

    if (!stimuli_by_set.empty()) {
        std::size_t target = options.balance_target;
        for (const auto& [_, ids] : stimuli_by_set) target = std::min(target, ids.size());
        const auto balanced = balanced_subsample(stimuli_by_set, target, options.seed);

        std::map<std::string, std::vector<BootstrapSample>> boots;
        for (const auto& [set, ids] : balanced) {
            std::vector<std::string> lemmas;
            for (const auto& id : ids) {
                const auto& l = labels_by_stimulus.at({set, id});
                lemmas.insert(lemmas.end(), l.begin(), l.end());
            }
            if (lemmas.size() < static_cast<std::size_t>(options.draw)) continue;
            boots[set] = bootstrap_labels(lemmas, options.n_boot, options.draw,
                                          derive_seed(options.seed, {hash_label("variability"), hash_label(set)}));
        }
        if (!boots.empty()) {
            const auto profiles = truncated_frequency_profile(boots);
            for (const auto& [set, samples] : boots) {
                BootstrapResult res;
                res.threshold = profiles.threshold;
                res.truncated_profile = profiles.profiles.at(set);
                std::vector<double> skews;
                for (const auto& s : samples) {
                    res.unique_counts.push_back(static_cast<int>(s.unique()));
                    if (s.unique() < 3) continue;
                    std::vector<double> f(s.sorted_frequencies.begin(), s.sorted_frequencies.end());
                    try {
                        skews.push_back(stats::skewness(f));
                    } catch (const Error& e) {
                        if (e.code() != Errc::UndefinedSkewness) throw;
                    }
                }
                if (!skews.empty()) res.skewness = stats::mean(skews);
                if (skews.size() >= 2) res.skewness_sd = stats::sample_sd(skews);
                report.variability.emplace(set, std::move(res));
            }
        }
    }

    // Authenticity: one-way ANOVA over per-stimulus means of the emotional sets.
    std::map<std::string, std::vector<double>> groups;
    std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>> auth;
    for (const auto& r : rows) {
        if (r.set == kNeutralBaseline) continue;
        if (r.set == kProsodyGap && !is_final_prosody(r, options)) continue;
        auto& a = auth[{r.set, r.stimulus_id}];
        a.first += r.record.authenticity;
        ++a.second;
    }
    for (const auto& [key, a] : auth) groups[key.first].push_back(a.first / static_cast<double>(a.second));
    for (const auto& [set, xs] : groups) report.anova_group_sizes[set] = xs.size();
    try {
        report.authenticity_anova = anova_oneway(groups);
    } catch (const Error& e) {
        if (e.code() != Errc::InsufficientData) throw;
    }
    return report;
}

Json to_json(const TrajectoryPoint& p) {
    auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
    return {{"group", p.group}, {"n_stimuli", p.n_stimuli}, {"mean", opt(p.mean)}, {"lower", opt(p.lower)}, {"upper", opt(p.upper)}};
}

Json to_json(const AnovaResult& r) {
    return {{"f_value", std::isfinite(r.f_value) ? Json(r.f_value) : Json("inf")},
            {"df_between", r.df_between},
            {"df_within", r.df_within},
            {"p_value", r.p_value},
            {"ges", r.ges},
            {"ss_between", r.ss_between},
            {"ss_within", r.ss_within}};
}

Json to_json(const BootstrapResult& r) {
    Json j{{"threshold", r.threshold},
           {"skewness", r.skewness},
           {"skewness_sd", r.skewness_sd},
           {"truncated_profile", r.truncated_profile},
           {"unique_counts", r.unique_counts}};
    if (r.unique_counts.size() >= 2) {
        std::vector<double> u(r.unique_counts.begin(), r.unique_counts.end());
        j["unique_mean"] = stats::mean(u);
        j["unique_sd"] = stats::sample_sd(u);
    }
    return j;
}

Json summary_json(const AnalysisReport& report) {
    Json traj = Json::object();
    for (const auto& [m, pts] : report.trajectories) {
        Json arr = Json::array();
        for (const auto& p : pts) arr.push_back(to_json(p));
        traj[m] = arr;
    }
    Json var = Json::object();
    for (const auto& [set, r] : report.variability) {
        auto j = to_json(r);
        j.erase("unique_counts");
        j.erase("truncated_profile");
        var[set] = j;
    }
    Json kde = Json::object();
    for (const auto& [g, grid] : report.kde)
        kde[g] = {{"bandwidth", {grid.bandwidth.valence, grid.bandwidth.arousal}}, {"mass", grid.mass()}};
    return {{"excluded_participants", report.excluded_participants},
            {"trajectories", traj},
            {"variability", var},
            {"kde", kde},
            {"authenticity_anova", report.authenticity_anova ? to_json(*report.authenticity_anova) : Json(nullptr)},
            {"anova_group_sizes", report.anova_group_sizes}};
}

void write_report(const AnalysisReport& report, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    auto open = [&](const std::string& name) {
        std::ofstream f(out_dir / name);
        if (!f) fail(Errc::StorageError, "cannot write " + (out_dir / name).string());
        return f;
    };
    {
        auto f = open("trajectories.csv");
        f << "measure,group,n_stimuli,mean,lower,upper\n";
        auto cell = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string(); };
        for (const auto& [m, pts] : report.trajectories)
            for (const auto& p : pts)
                f << m << ',' << p.group << ',' << p.n_stimuli << ',' << cell(p.mean) << ',' << cell(p.lower) << ','
                  << cell(p.upper) << '\n';
    }
    for (const auto& [group, grid] : report.kde) {
        std::string name = group;
        std::replace(name.begin(), name.end(), ':', '_');
        auto f = open("kde_" + name + ".csv");
        f << "valence,arousal,density\n";
        for (int j = 0; j < grid.spec.na; ++j)
            for (int i = 0; i < grid.spec.nv; ++i) f << grid.cell_v(i) << ',' << grid.cell_a(j) << ',' << grid.at(i, j) << '\n';
    }
    {
        Json var = Json::object();
        for (const auto& [set, r] : report.variability) var[set] = to_json(r);
        open("variability.json") << var.dump(2) << '\n';
    }
    {
        auto f = open("wordcounts.csv");
        f << "set,lemma,count\n";
        for (const auto& [set, counts] : report.word_counts)
            for (const auto& [lemma, n] : counts) f << set << ',' << lemma << ',' << n << '\n';
    }
    open("authenticity_anova.json") << (report.authenticity_anova ? to_json(*report.authenticity_anova) : Json(nullptr)).dump(2)
                                    << '\n';
    open("summary.json") << summary_json(report).dump(2) << '\n';
}

}  // namespace gap::analysis
