// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>

#include "gap/analysis.hpp"
#include "gap/screening.hpp"
#include "gap/service.hpp"
#include "gap/simagents.hpp"
#include "gap/stats.hpp"
#include "stress.hpp"

using namespace gap;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

// ---- tally ----

Verdict tally_oracle() {
    const auto t0 = Clock::now();
    int mismatches = 0, tied = 0, replay_mismatches = 0;
    const char* names[] = {"A", "B", "C"};
    auto generation_with = [&](const std::array<int, 7>& choices) {
        Generation g;
        g.index = 1;
        g.incumbent_id = "A";
        g.mutant_ids = {"B", "C"};
        for (int i = 0; i < 7; ++i) {
            Vote v;
            v.rater_id = "r" + std::to_string(i);
            v.choice = names[choices[static_cast<std::size_t>(i)]];
            g.votes.push_back(v);
        }
        return g;
    };
    for (int code = 0; code < 2187; ++code) {
        std::array<int, 7> choices{};
        std::array<int, 3> counts{};
        int x = code;
        for (auto& c : choices) {
            c = x % 3;
            x /= 3;
            ++counts[static_cast<std::size_t>(c)];
        }
        const int top = *std::max_element(counts.begin(), counts.end());
        std::set<std::string> argmax;
        for (int k = 0; k < 3; ++k)
            if (counts[static_cast<std::size_t>(k)] == top) argmax.insert(names[k]);
        auto g = generation_with(choices);
        auto rng = tie_break_rng(1234, code);
        const auto winner = tally(g, 7, rng);
        if (!argmax.count(winner) || g.tie_broken != (argmax.size() > 1)) ++mismatches;
        if (argmax.size() > 1) {
            ++tied;
            auto again = generation_with(choices);
            auto rng2 = tie_break_rng(1234, code);
            if (tally(again, 7, rng2) != winner) ++replay_mismatches;
        }
    }
    const double s = seconds_since(t0);
    return {mismatches == 0 && replay_mismatches == 0 && s < 1.0,
            fmt("2187 vectors, %d mismatches, %d tied with %d replay mismatches, %.3f s", mismatches, tied,
                replay_mismatches, s)};
}

// ---- protocol scale ----

Verdict protocol_scale() {
    const auto t0 = Clock::now();
    const ExperimentConfig cfg;  // 10 sentences x 5 speakers, 10 generations, m = 2, quorum 7
    sim::SimOptions opts;
    auto blobs = std::make_shared<MemoryBlobStore>();
    opts.blobs = blobs;
    const auto run = sim::run_experiment(cfg, sim::AgentParams{}, 2024, opts);
    const auto corpus = Experiment::from_json(run.state, blobs).corpus();
    int reselected = 0;
    for (const auto& c : run.chains)
        for (const auto& g : c.generations)
            if (g.index > 0 && incumbent_reselected(g)) ++reselected;
    const auto entries = corpus.entries.size();
    const auto unique = corpus.unique_recordings.size();
    const double s = seconds_since(t0);
    const bool pass = cfg.n_chains() == 50 && entries == 500 && (reselected == 0 ? unique == 500 : unique < 500) &&
                      unique == 500 - static_cast<std::size_t>(reselected) && s < 10.0;
    return {pass, fmt("%zu chains, %zu entries, %zu unique, %d incumbent re-selections, %.2f s", run.chains.size(),
                      entries, unique, reselected, s)};
}

// ---- figure 2 trends ----

struct TrendRuns {
    // Per seed: mean selected e and mean incumbent votes per bin, plus the plateau estimate.
    std::vector<std::array<double, 4>> e_bins;
    std::vector<std::array<double, 4>> votes_bins;
    std::vector<double> plateau;
    double seconds = 0;
};

// Bins 0, 1-3, 4-6, 7-9 over the first ten generations; the plateau is the
// mean over generations 20-29 of the same chains run on past the protocol.
TrendRuns trend_runs(const sim::AgentParams& params, int n_seeds) {
    const auto t0 = Clock::now();
    TrendRuns out;
    ExperimentConfig cfg;
    cfg.n_generations = 30;
    sim::SimOptions opts;
    opts.annotate = false;
    opts.external_sets = false;
    for (int seed = 1; seed <= n_seeds; ++seed) {
        const auto trend = sim::generation_trend(sim::run_experiment(cfg, params, static_cast<std::uint64_t>(seed), opts));
        std::array<double, 4> e{}, v{};
        e[0] = trend.selected_e[0];
        v[0] = NAN;
        for (int b = 1; b <= 3; ++b) {
            double se = 0, sv = 0;
            for (int g = 3 * b - 2; g <= 3 * b; ++g) {
                se += trend.selected_e[static_cast<std::size_t>(g)];
                sv += trend.incumbent_votes[static_cast<std::size_t>(g)];
            }
            e[static_cast<std::size_t>(b)] = se / 3;
            v[static_cast<std::size_t>(b)] = sv / 3;
        }
        double p = 0;
        for (int g = 20; g < 30; ++g) p += trend.selected_e[static_cast<std::size_t>(g)];
        out.e_bins.push_back(e);
        out.votes_bins.push_back(v);
        out.plateau.push_back(p / 10);
    }
    out.seconds = seconds_since(t0);
    return out;
}

double column_mean(const std::vector<std::array<double, 4>>& rows, std::size_t col) {
    double s = 0;
    for (const auto& r : rows) s += r[col];
    return s / static_cast<double>(rows.size());
}

Verdict fig2b(const TrendRuns& r) {
    const double b0 = column_mean(r.e_bins, 0), b1 = column_mean(r.e_bins, 1), b2 = column_mean(r.e_bins, 2),
                 b3 = column_mean(r.e_bins, 3);
    const double plateau = stats::mean(r.plateau);
    const double gap = std::abs(b3 - plateau) / plateau;
    const bool pass = b0 < b1 && b1 < b2 && gap <= 0.05 && r.e_bins.size() >= 20 && r.seconds < 60.0;
    return {pass, fmt("%zu seeds, bins %.3f < %.3f < %.3f, bin 7-9 %.3f vs plateau %.3f (%.1f%% off, limit 5%%), %.1f s",
                      r.e_bins.size(), b0, b1, b2, b3, plateau, 100 * gap, r.seconds)};
}

Verdict fig2a(const TrendRuns& r) {
    std::vector<double> early, late, diff;
    for (const auto& v : r.votes_bins) {
        early.push_back(v[1]);
        late.push_back(v[3]);
        diff.push_back(v[3] - v[1]);
    }
    const double chance = 7.0 / 3.0;
    const auto e = stats::mean_ci95(early);
    const auto l = stats::mean_ci95(late);
    const auto d = stats::mean_ci95(diff);
    const bool below = e.upper < chance;
    const bool converging = std::abs(l.mean - chance) < std::abs(e.mean - chance);
    const bool rising = d.lower > 0;
    return {below && converging && rising,
            fmt("incumbent votes bin 1-3 %.3f [%.3f, %.3f] vs 7/3, bin 7-9 %.3f [%.3f, %.3f], "
                "difference %.3f [%.3f, %.3f]",
                e.mean, e.lower, e.upper, l.mean, l.lower, l.upper, d.mean, d.lower, d.upper)};
}

// ---- analysis oracles ----

Verdict bootstrap_oracle() {
    std::vector<std::string> labels;
    for (int t = 0; t < 50; ++t)
        for (int c = 0; c < 4; ++c) labels.push_back("w" + std::to_string(t));
    const int draw = 100;
    // E[unique] = types * (1 - P(no copy of a type drawn)), hypergeometric.
    const double p_missing = std::exp(std::lgamma(196 + 1.0) - std::lgamma(196 - draw + 1.0) - std::lgamma(200 + 1.0) +
                                      std::lgamma(200 - draw + 1.0));
    const double expected = 50 * (1 - p_missing);
    const auto counts = analysis::bootstrap_unique_counts(labels, 1000, draw, 7);
    const double mean = std::accumulate(counts.begin(), counts.end(), 0.0) / static_cast<double>(counts.size());
    return {std::abs(mean - expected) <= 0.5 && counts.size() == 1000,
            fmt("mean unique %.3f vs hypergeometric %.3f over %zu bootstraps", mean, expected, counts.size())};
}

Verdict statistics_oracles() {
    std::vector<std::string> notes;
    bool ok = true;
    auto note = [&](bool cond, const std::string& s) {
        ok = ok && cond;
        notes.push_back(s);
    };
    // Groups with means 2, 3, 4 and unit within-group variance: SSB = 6 on 2 df, SSW = 6 on 6 df.
    const auto hand = stats::anova_oneway({{"a", {1, 2, 3}}, {"b", {2, 3, 4}}, {"c", {3, 4, 5}}});
    note(std::abs(hand.f_value - 3.0) < 1e-9 && hand.df_between == 2 && hand.df_within == 6,
         fmt("F=%.9f df=(%d,%d)", hand.f_value, hand.df_between, hand.df_within));

    std::map<std::string, std::vector<double>> layout;
    const char* sets[] = {"prosody-gap", "crema-d", "venec"};
    for (int i = 0; i < 393; ++i) layout[sets[i % 3]].push_back(1 + (i * 7 % 11) / 3.0 + (i % 3));
    const auto big = stats::anova_oneway(layout);
    note(big.df_between == 2 && big.df_within == 390, fmt("N=393 df=(%d,%d)", big.df_between, big.df_within));

    // Two groups: F equals the square of the pooled-variance t statistic.
    const std::vector<double> g1{2.1, 3.4, 1.9, 4.2, 3.3}, g2{4.0, 5.1, 3.9, 4.8, 5.5, 4.1};
    const auto two = stats::anova_oneway({{"x", g1}, {"y", g2}});
    const double m1 = stats::mean(g1), m2 = stats::mean(g2), s1 = stats::sample_sd(g1), s2 = stats::sample_sd(g2);
    const double n1 = 5, n2 = 6;
    const double sp2 = ((n1 - 1) * s1 * s1 + (n2 - 1) * s2 * s2) / (n1 + n2 - 2);
    const double t = (m1 - m2) / std::sqrt(sp2 * (1 / n1 + 1 / n2));
    note(std::abs(two.f_value - t * t) < 1e-9 * t * t, fmt("F=%.6f t^2=%.6f", two.f_value, t * t));

    // {0,0,0,1}: m2 = 3/16, m3 = 3/32, g1 = 2/sqrt(3).
    const double g = stats::skewness(std::vector<double>{0, 0, 0, 1});
    note(std::abs(g - 1.1547) < 1e-4, fmt("g1=%.5f", g));

    // Deviations (-2,-1,0,1,2) and (-1,-2,2,0,1): sxy = 6, sxx = syy = 10.
    const double r = stats::pearson_r(std::vector<double>{1, 2, 3, 4, 5}, std::vector<double>{2, 1, 5, 3, 4});
    note(std::abs(r - 0.6) < 1e-9, fmt("r=%.10f", r));

    std::vector<std::array<double, 2>> pts;
    Rng rng(5);
    std::normal_distribution<double> nv(0, 8), na(50, 8);
    for (int i = 0; i < 300; ++i) pts.push_back({nv(rng), na(rng)});
    const double mass = analysis::kde2d(pts).mass();
    note(mass >= 0.99 && mass <= 1.01, fmt("kde mass=%.4f", mass));

    std::string detail;
    for (const auto& n : notes) detail += (detail.empty() ? "" : ", ") + n;
    return {ok, detail};
}

// ---- screening ----

double pooled_r(const std::vector<screening::RatingVector>& m, const std::vector<screening::RatingVector>& r) {
    std::vector<double> x, y;
    auto push = [](std::vector<double>& out, const screening::RatingVector& v) {
        out.push_back((v.emotionality - 1) / 3.0);
        out.push_back((v.valence + 50) / 100.0);
        out.push_back(v.arousal / 100.0);
        out.push_back((v.authenticity - 1) / 3.0);
    };
    for (const auto& v : m) push(x, v);
    for (const auto& v : r) push(y, v);
    return stats::pearson_r(x, y);
}

// Repeats that blend the main ratings with an unrelated pair, bisected to a target r.
std::vector<screening::RatingVector> repeats_with_r(const std::vector<screening::RatingVector>& main, double target) {
    const std::vector<screening::RatingVector> other{{2, 10, 50, 4}, {3, -10, 40, 1}};
    auto blend = [&](double t) {
        std::vector<screening::RatingVector> out;
        for (std::size_t i = 0; i < main.size(); ++i)
            out.push_back({(1 - t) * main[i].emotionality + t * other[i].emotionality,
                           (1 - t) * main[i].valence + t * other[i].valence,
                           (1 - t) * main[i].arousal + t * other[i].arousal,
                           (1 - t) * main[i].authenticity + t * other[i].authenticity});
        return out;
    };
    double lo = 0, hi = 1;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (pooled_r(main, blend(mid)) > target ? lo : hi) = mid;
    }
    return blend(0.5 * (lo + hi));
}

Verdict screening_rules() {
    screening::QualityDiscriminationKey key;
    for (int i = 0; i < 6; ++i)
        key.items.emplace_back("q" + std::to_string(i), i % 2 ? screening::QualityAnswer::bad : screening::QualityAnswer::good);
    auto answers = [&](int mistakes) {
        std::map<std::string, screening::QualityAnswer> a;
        int k = 0;
        for (const auto& [id, ans] : key.items)
            a[id] = k++ < mistakes ? (ans == screening::QualityAnswer::good ? screening::QualityAnswer::bad
                                                                            : screening::QualityAnswer::good)
                                   : ans;
        return a;
    };
    const auto v1 = screening::grade_quality_discrimination(answers(1), key);
    const auto v2 = screening::grade_quality_discrimination(answers(2), key);

    const ExperimentConfig cfg;
    const std::vector<screening::RatingVector> main{{3, 20, 70, 2}, {2, -30, 30, 3}};
    const double r39 = screening::consistency_r(main, repeats_with_r(main, 0.39), cfg);
    const double r41 = screening::consistency_r(main, repeats_with_r(main, 0.41), cfg);
    const bool ex39 = screening::below_consistency_threshold(r39, cfg);
    const bool ex41 = screening::below_consistency_threshold(r41, cfg);
    const bool pass = v1 == screening::Verdict::pass && v2 == screening::Verdict::fail && ex39 && !ex41 &&
                      std::abs(r39 - 0.39) < 1e-9 && std::abs(r41 - 0.41) < 1e-9;
    return {pass, fmt("1 mistake %s, 2 mistakes %s, r=%.4f %s, r=%.4f %s", std::string(to_string(v1)).c_str(),
                      std::string(to_string(v2)).c_str(), r39, ex39 ? "excluded" : "kept", r41,
                      ex41 ? "excluded" : "kept")};
}

// ---- event sourcing ----

Verdict event_sourcing() {
    int runs = 0, mismatches = 0;
    std::size_t events_total = 0;
    for (std::uint64_t seed : {3, 77, 901}) {
        auto blobs = std::make_shared<MemoryBlobStore>();
        service::EventLog log;
        sim::SimOptions opts;
        opts.blobs = blobs;
        opts.sink = [&log](std::string_view kind, const Json& payload, Timestamp at) { log.append(kind, payload, at); };
        ExperimentConfig cfg;
        if (seed != 3) {
            cfg.n_sentences = 3;
            cfg.speakers_per_sentence = 2;
        }
        const auto run = sim::run_experiment(cfg, sim::AgentParams{}, seed, opts);
        const service::ExperimentSetup setup{cfg, AllocationOptions{seed, sim::kSimTrialDeadlineMs}};
        const auto events = log.events();
        events_total += events.size();
        const auto live = run.state.dump();
        ++runs;
        if (service::replay(setup, events, blobs).to_json().dump() != live) ++mismatches;
        // Mid-run snapshot, serialized and restored, then the tail.
        const auto cut = events.size() / 2;
        const std::vector<service::Event> head(events.begin(), events.begin() + static_cast<std::ptrdiff_t>(cut));
        const service::Snapshot snap{cut, service::replay(setup, head, blobs).to_json()};
        const auto restored = service::snapshot_from_json(Json::parse(service::to_json(snap).dump()));
        if (service::replay(setup, events, blobs, &restored).to_json().dump() != live) ++mismatches;
    }
    return {mismatches == 0, fmt("%d runs, %zu events, %d mismatches across full and snapshot+tail replays", runs,
                                 events_total, mismatches)};
}

// ---- concurrency ----

Verdict concurrency() {
    std::string detail;
    bool ok = true;
    for (std::uint64_t seed : {11, 12, 13}) {
        const auto out = stress::run_schedule(seed);
        ok = ok && out.ok();
        detail += fmt("%sschedule %llu: %d violations, %d errors, %s, %.2f s", detail.empty() ? "" : "; ",
                      static_cast<unsigned long long>(seed), out.violations, out.errors,
                      out.complete && out.quotas_filled && out.replay_matches ? "complete" : "incomplete", out.seconds);
    }
    return {ok, "200 threads; " + detail};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](const char* name, const std::function<Verdict()>& check) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
        std::fflush(stdout);
        failures += !v.pass;
    };

    report("tally-oracle", tally_oracle);
    report("protocol-scale", protocol_scale);
    const auto trends = trend_runs(sim::AgentParams{}, 20);
    report("fig2b-trend", [&] { return fig2b(trends); });
    report("fig2a-trend", [&] { return fig2a(trends); });
    report("bootstrap-oracle", bootstrap_oracle);
    report("statistics-oracles", statistics_oracles);
    report("screening-rules", screening_rules);
    report("event-sourcing-determinism", event_sourcing);
    report("concurrency-safety", concurrency);

    // Sensitivity of the plateau criterion to the mutation spread.
    sim::AgentParams wide;
    wide.sigma_mutation = 0.6;
    const auto wide_runs = trend_runs(wide, 20);
    std::printf("INFO fig2b-trend with sigma_mutation=0.6: %s\n", fig2b(wide_runs).detail.c_str());
    std::printf("INFO fig2a-trend with sigma_mutation=0.6: %s\n", fig2a(wide_runs).detail.c_str());
    std::printf("%d criteria failed\n", failures);
    return failures ? 1 : 0;
}
