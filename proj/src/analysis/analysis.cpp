#include "gap/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

namespace gap::analysis {

std::string bin_generation(int generation) {
    if (generation < 0 || generation > 9)
        fail(Errc::InvalidGeneration, "generation " + std::to_string(generation) + " is outside 0..9");
    if (generation == 0) return "0";
    if (generation <= 3) return "1-3";
    if (generation <= 6) return "4-6";
    return "7-9";
}

std::string_view to_string(Measure m) noexcept {
    switch (m) {
        case Measure::emotionality: return "emotionality";
        case Measure::arousal: return "arousal";
        case Measure::abs_valence: return "abs-valence";
        case Measure::valence: return "valence";
        case Measure::authenticity: return "authenticity";
    }
    return "emotionality";
}

Measure measure_from_string(std::string_view s) {
    for (auto m : {Measure::emotionality, Measure::arousal, Measure::abs_valence, Measure::valence, Measure::authenticity})
        if (to_string(m) == s) return m;
    fail(Errc::InvalidArgument, "unknown measure '" + std::string(s) + "'");
}

namespace {

double raw_value(const AnnotationRecord& r, Measure m) {
    switch (m) {
        case Measure::emotionality: return r.emotionality;
        case Measure::arousal: return r.arousal;
        case Measure::abs_valence:
        case Measure::valence: return r.valence;
        case Measure::authenticity: return r.authenticity;
    }
    return 0;
}

std::string group_of(const AnnotationRow& r) {
    if (r.set == kProsodyGap) return bin_generation(r.generation.value_or(0));
    return r.set;
}

}  // namespace

std::vector<TrajectoryPoint> trajectory(const std::vector<AnnotationRow>& rows, Measure measure,
                                        const TrajectoryOptions& options) {
    struct Acc {
        std::string group;
        double sum = 0;
        std::size_t n = 0;
    };
    // (set, stimulus) -> accumulated ratings
    std::map<std::pair<std::string, std::string>, Acc> per_stimulus;
    for (const auto& r : rows) {
        if (r.record.is_repeat && !options.include_repeats) continue;
        double v = raw_value(r.record, measure);
        if (measure == Measure::abs_valence && options.abs_per_rating) v = std::fabs(v);
        auto& acc = per_stimulus[{r.set, r.stimulus_id}];
        acc.group = group_of(r);
        acc.sum += v;
        ++acc.n;
    }

    std::map<std::string, std::vector<double>> groups;
    for (const auto& [_, acc] : per_stimulus) {
        double m = acc.sum / static_cast<double>(acc.n);
        if (measure == Measure::abs_valence && !options.abs_per_rating) m = std::fabs(m);
        groups[acc.group].push_back(m);
    }

    std::vector<std::string> order(kBins.begin(), kBins.end());
    for (const auto& [g, _] : groups)
        if (std::find(order.begin(), order.end(), g) == order.end()) order.push_back(g);

    std::vector<TrajectoryPoint> out;
    for (const auto& g : order) {
        TrajectoryPoint p;
        p.group = g;
        auto it = groups.find(g);
        if (it != groups.end() && !it->second.empty()) {
            const auto& xs = it->second;
            p.n_stimuli = xs.size();
            p.mean = stats::mean(xs);
            if (xs.size() >= 2) {
                auto ci = stats::mean_ci95(xs);
                p.lower = ci.lower;
                p.upper = ci.upper;
            }
        }
        out.push_back(std::move(p));
    }
    return out;
}

// ---- KDE ----

double DensityGrid::cell_v(int i) const { return spec.v_min + (i + 0.5) * (spec.v_max - spec.v_min) / spec.nv; }
double DensityGrid::cell_a(int j) const { return spec.a_min + (j + 0.5) * (spec.a_max - spec.a_min) / spec.na; }
double DensityGrid::cell_area() const {
    return (spec.v_max - spec.v_min) / spec.nv * (spec.a_max - spec.a_min) / spec.na;
}
double DensityGrid::mass() const {
    double s = 0;
    for (double d : density) s += d;
    return s * cell_area();
}

Bandwidth scott_bandwidth(const std::vector<std::array<double, 2>>& points) {
    if (points.size() < 2) fail(Errc::InsufficientData, "bandwidth needs at least 2 points");
    std::vector<double> v, a;
    for (const auto& p : points) {
        v.push_back(p[0]);
        a.push_back(p[1]);
    }
    const double factor = std::pow(static_cast<double>(points.size()), -1.0 / 6.0);
    return {stats::sample_sd(v) * factor, stats::sample_sd(a) * factor};
}

DensityGrid kde2d(const std::vector<std::array<double, 2>>& points, std::optional<Bandwidth> bandwidth,
                  const GridSpec& grid) {
    if (points.size() < 2) fail(Errc::InsufficientData, "KDE needs at least 2 points");
    if (grid.nv < 1 || grid.na < 1 || !(grid.v_max > grid.v_min) || !(grid.a_max > grid.a_min))
        fail(Errc::InvalidArgument, "invalid KDE grid");
    Bandwidth bw;
    if (bandwidth) {
        bw = *bandwidth;
        if (!(bw.valence > 0) || !(bw.arousal > 0)) fail(Errc::InvalidArgument, "bandwidths must be positive");
    } else {
        bw = scott_bandwidth(points);
        if (!(bw.valence > 0) || !(bw.arousal > 0))
            fail(Errc::DegenerateBandwidth, "points are degenerate in at least one dimension; give an explicit bandwidth");
    }

    DensityGrid out;
    out.spec = grid;
    out.bandwidth = bw;
    out.density.assign(static_cast<std::size_t>(grid.nv) * grid.na, 0.0);

    const double norm = 1.0 / (2.0 * std::numbers::pi * bw.valence * bw.arousal * static_cast<double>(points.size()));
    std::vector<double> kv(grid.nv), ka(grid.na);
    for (const auto& p : points) {
        for (int i = 0; i < grid.nv; ++i) {
            const double z = (out.cell_v(i) - p[0]) / bw.valence;
            kv[i] = std::exp(-0.5 * z * z);
        }
        for (int j = 0; j < grid.na; ++j) {
            const double z = (out.cell_a(j) - p[1]) / bw.arousal;
            ka[j] = std::exp(-0.5 * z * z);
        }
        for (int j = 0; j < grid.na; ++j)
            for (int i = 0; i < grid.nv; ++i) out.density[static_cast<std::size_t>(j) * grid.nv + i] += kv[i] * ka[j];
    }
    for (auto& d : out.density) d *= norm;
    return out;
}

// ---- bootstrap ----

std::vector<BootstrapSample> bootstrap_labels(const std::vector<std::string>& lemmas, int n_boot, int draw,
                                              std::uint64_t seed) {
    if (n_boot < 1 || draw < 1) fail(Errc::InvalidArgument, "n_boot and draw must be positive");
    if (lemmas.size() < static_cast<std::size_t>(draw))
        fail(Errc::InsufficientLabels,
             std::to_string(lemmas.size()) + " labels available, each bootstrap draws " + std::to_string(draw));

    // Intern labels so draws shuffle integers.
    std::unordered_map<std::string, int> ids;
    std::vector<int> pool;
    pool.reserve(lemmas.size());
    for (const auto& l : lemmas) pool.push_back(ids.try_emplace(l, static_cast<int>(ids.size())).first->second);

    std::vector<BootstrapSample> out(static_cast<std::size_t>(n_boot));
    std::vector<int> work;
    std::vector<int> counts(ids.size());
    for (int b = 0; b < n_boot; ++b) {
        auto rng = make_rng(seed, {hash_label("bootstrap"), static_cast<std::uint64_t>(b)});
        work = pool;
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < draw; ++i) {
            std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), work.size() - 1);
            std::swap(work[static_cast<std::size_t>(i)], work[pick(rng)]);
            ++counts[static_cast<std::size_t>(work[static_cast<std::size_t>(i)])];
        }
        auto& freq = out[static_cast<std::size_t>(b)].sorted_frequencies;
        for (int c : counts)
            if (c > 0) freq.push_back(c);
        std::sort(freq.begin(), freq.end(), std::greater<>());
    }
    return out;
}

std::vector<int> bootstrap_unique_counts(const std::vector<std::string>& lemmas, int n_boot, int draw,
                                         std::uint64_t seed) {
    std::vector<int> out;
    for (const auto& s : bootstrap_labels(lemmas, n_boot, draw, seed)) out.push_back(static_cast<int>(s.unique()));
    return out;
}

FrequencyProfiles truncated_frequency_profile(const std::map<std::string, std::vector<BootstrapSample>>& bootstraps) {
    if (bootstraps.empty()) fail(Errc::EmptyInput, "no bootstrap tables");
    FrequencyProfiles out;
    std::size_t threshold = std::numeric_limits<std::size_t>::max();
    for (const auto& [name, samples] : bootstraps) {
        if (samples.empty()) fail(Errc::EmptyInput, "set '" + name + "' has no bootstrap tables", name);
        for (const auto& s : samples) threshold = std::min(threshold, s.unique());
    }
    out.threshold = threshold;
    for (const auto& [name, samples] : bootstraps) {
        std::vector<double> profile(threshold, 0.0);
        for (const auto& s : samples)
            for (std::size_t k = 0; k < threshold; ++k) profile[k] += s.sorted_frequencies[k];
        for (auto& v : profile) v /= static_cast<double>(samples.size());
        out.profiles.emplace(name, std::move(profile));
    }
    return out;
}

std::map<std::string, std::vector<std::string>> balanced_subsample(
    const std::map<std::string, std::vector<std::string>>& sets, std::size_t target, std::uint64_t seed) {
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& [name, items] : sets)
        if (items.size() < target)
            fail(Errc::InsufficientStimuli,
                 "set '" + name + "' has " + std::to_string(items.size()) + " stimuli, need " + std::to_string(target),
                 name);
    for (const auto& [name, items] : sets) {
        if (items.size() == target) {
            out.emplace(name, items);
            continue;
        }
        std::vector<std::size_t> idx(items.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        auto rng = make_rng(seed, {hash_label("balanced-subsample"), hash_label(name)});
        for (std::size_t i = 0; i < target; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
            std::swap(idx[i], idx[pick(rng)]);
        }
        idx.resize(target);
        std::sort(idx.begin(), idx.end());
        std::vector<std::string> chosen;
        chosen.reserve(target);
        for (auto i : idx) chosen.push_back(items[i]);
        out.emplace(name, std::move(chosen));
    }
    return out;
}

}  // namespace gap::analysis
