#include <doctest.h>

#include <cmath>
#include <numeric>

#include "gap/screening.hpp"

using namespace gap;
using namespace gap::screening;

namespace {

Errc code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected a gap::Error");
    return Errc::InvalidArgument;
}

QualityDiscriminationKey six_item_key() {
    QualityDiscriminationKey k;
    for (int i = 0; i < 6; ++i) k.items.emplace_back("q" + std::to_string(i), i % 2 ? QualityAnswer::bad : QualityAnswer::good);
    return k;
}

std::map<std::string, QualityAnswer> answers_with_mistakes(const QualityDiscriminationKey& key, int mistakes) {
    std::map<std::string, QualityAnswer> a;
    int flipped = 0;
    for (const auto& [id, ans] : key.items) {
        const bool flip = flipped++ < mistakes;
        a[id] = flip ? (ans == QualityAnswer::good ? QualityAnswer::bad : QualityAnswer::good) : ans;
    }
    return a;
}

// Independent Pearson: two-pass textbook formula over the pooled, rescaled values.
double oracle_r(const std::vector<RatingVector>& m, const std::vector<RatingVector>& r) {
    std::vector<double> x, y;
    auto push = [](std::vector<double>& out, const RatingVector& v) {
        out.push_back((v.emotionality - 1) / 3.0);
        out.push_back((v.valence + 50) / 100.0);
        out.push_back(v.arousal / 100.0);
        out.push_back((v.authenticity - 1) / 3.0);
    };
    for (const auto& v : m) push(x, v);
    for (const auto& v : r) push(y, v);
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

// Two repeated stimuli (8 pooled points). The repeats blend the main ratings
// with an unrelated pair; the blend weight is bisected until the oracle
// correlation equals `target`.
std::pair<std::vector<RatingVector>, std::vector<RatingVector>> fixture_with_r(double target) {
    const std::vector<RatingVector> main{{3, 20, 70, 2}, {2, -30, 30, 3}};
    const std::vector<RatingVector> other{{2, 10, 50, 4}, {3, -10, 40, 1}};
    auto blend = [&](double t) {
        std::vector<RatingVector> out;
        for (std::size_t i = 0; i < main.size(); ++i) {
            const auto& a = main[i];
            const auto& b = other[i];
            out.push_back({(1 - t) * a.emotionality + t * b.emotionality, (1 - t) * a.valence + t * b.valence,
                           (1 - t) * a.arousal + t * b.arousal, (1 - t) * a.authenticity + t * b.authenticity});
        }
        return out;
    };
    double lo = 0, hi = 1;  // r falls from 1 as t grows
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (oracle_r(main, blend(mid)) > target ? lo : hi) = mid;
    }
    return {main, blend(0.5 * (lo + hi))};
}

}  // namespace

TEST_CASE("quality discrimination boundaries") {
    const auto key = six_item_key();
    CHECK(grade_quality_discrimination(answers_with_mistakes(key, 0), key) == Verdict::pass);
    CHECK(grade_quality_discrimination(answers_with_mistakes(key, 1), key) == Verdict::pass);
    CHECK(grade_quality_discrimination(answers_with_mistakes(key, 2), key) == Verdict::fail);
    CHECK(count_mistakes(answers_with_mistakes(key, 4), key) == 4);

    auto partial = answers_with_mistakes(key, 0);
    partial.erase("q3");
    CHECK(code_of([&] { grade_quality_discrimination(partial, key); }) == Errc::IncompleteAnswers);
}

TEST_CASE("property: adding a mistake never turns fail into pass") {
    const auto key = six_item_key();
    Verdict prev = Verdict::pass;
    for (int k = 0; k <= 6; ++k) {
        const auto v = grade_quality_discrimination(answers_with_mistakes(key, k), key);
        if (prev == Verdict::fail) CHECK(v == Verdict::fail);
        prev = v;
    }
}

TEST_CASE("transcript match") {
    CHECK(grade_transcript_match("The boat sailed.", "the boat sailed") == Verdict::pass);
    CHECK(grade_transcript_match("The boat sailed", "The boat sank") == Verdict::fail);
    CHECK(grade_transcript_match("  THE   BOAT  SAILED. ", "the boat sailed") == Verdict::pass);
    CHECK(normalize_transcript("  THE   BOAT  SAILED. ") == "the boat sailed");
    for (const char* s : {"Hello,  World!", "  a\tb\nc ", "It's -- fine...", ""}) {
        const auto once = normalize_transcript(s);
        CHECK(normalize_transcript(once) == once);
    }
}

TEST_CASE("mock transcriber") {
    MockTranscriber t;
    CHECK(t.transcribe("the boat sailed") == "the boat sailed");
    t.script(content_digest("RIFF....audio"), "The boat sailed.");
    CHECK(t.transcribe("RIFF....audio") == "The boat sailed.");
}

TEST_CASE("consistency_r") {
    ExperimentConfig cfg;
    std::vector<RatingVector> main{{3, 20, 70, 2}, {1, -40, 10, 4}};
    CHECK(consistency_r(main, main, cfg) == doctest::Approx(1.0).epsilon(1e-12));

    // Range-reversed: each value mapped to lo + hi - value.
    std::vector<RatingVector> reversed;
    for (const auto& v : main) reversed.push_back({5 - v.emotionality, -v.valence, 100 - v.arousal, 5 - v.authenticity});
    const double r = consistency_r(main, reversed, cfg);
    CHECK(r == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(below_consistency_threshold(r, cfg));

    std::vector<RatingVector> flat{{1, -50, 0, 1}, {1, -50, 0, 1}};
    CHECK(code_of([&] { consistency_r(flat, main, cfg); }) == Errc::UndefinedCorrelation);
}

TEST_CASE("consistency threshold boundary") {
    ExperimentConfig cfg;
    CHECK(below_consistency_threshold(0.39, cfg));
    CHECK_FALSE(below_consistency_threshold(0.40, cfg));
    CHECK_FALSE(below_consistency_threshold(0.41, cfg));

    for (double target : {0.39, 0.41}) {
        const auto [m, rep] = fixture_with_r(target);
        const double r = consistency_r(m, rep, cfg);
        CHECK(r == doctest::Approx(oracle_r(m, rep)).epsilon(1e-12));
        CHECK(r == doctest::Approx(target).epsilon(1e-9));
        CHECK(below_consistency_threshold(r, cfg) == (target < 0.40));
    }
}

TEST_CASE("property: consistency_r is symmetric and affine invariant") {
    ExperimentConfig cfg;
    Rng rng(11);
    std::uniform_int_distribution<int> e(1, 4), v(-50, 50), a(0, 100);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<RatingVector> m, r;
        for (int k = 0; k < 2; ++k) {
            m.push_back({double(e(rng)), double(v(rng)), double(a(rng)), double(e(rng))});
            r.push_back({double(e(rng)), double(v(rng)), double(a(rng)), double(e(rng))});
        }
        double r1 = 0;
        try {
            r1 = consistency_r(m, r, cfg);
        } catch (const Error&) {
            continue;
        }
        CHECK(consistency_r(r, m, cfg) == doctest::Approx(r1).epsilon(1e-12));
        CHECK(r1 == doctest::Approx(oracle_r(m, r)).epsilon(1e-12));
        // Rescaling every range and every rating by the same positive affine map leaves r unchanged.
        ExperimentConfig wide = cfg;
        wide.emotionality_scale = {3, 9};
        wide.valence_range = {-95, 105};
        wide.arousal_range = {5, 205};
        wide.authenticity_scale = {3, 9};
        auto lift = [](std::vector<RatingVector> vs) {
            for (auto& x : vs) x = {2 * x.emotionality + 1, 2 * x.valence + 5, 2 * x.arousal + 5, 2 * x.authenticity + 1};
            return vs;
        };
        CHECK(consistency_r(lift(m), lift(r), wide) == doctest::Approx(r1).epsilon(1e-9));
    }
}

TEST_CASE("constant labels") {
    CHECK(detect_constant_labels(std::vector<std::string>(20, "sad")));
    std::vector<std::string> distinct;
    for (int i = 0; i < 20; ++i) distinct.push_back("w" + std::to_string(i));
    CHECK_FALSE(detect_constant_labels(distinct));
    std::vector<std::string> mostly(17, "happy");
    mostly.insert(mostly.end(), {"sad", "calm", "angry"});
    CHECK(detect_constant_labels(mostly));  // 85%
    std::vector<std::string> exactly(16, "Happy");
    exactly.insert(exactly.end(), {"sad", "calm", "angry", "bored"});
    CHECK_FALSE(detect_constant_labels(exactly));  // 80% is not above 80%
    CHECK(code_of([&] { detect_constant_labels({"a", "b"}); }) == Errc::InsufficientData);
}

TEST_CASE("screening gate") {
    const std::map<std::string, Verdict> generic{{kLexTale, Verdict::pass}, {kHeadphone, Verdict::pass}};
    auto creator = generic;
    creator[kQualityDiscrimination] = Verdict::pass;
    creator[kTranscriptMatch] = Verdict::pass;
    CHECK(screening_gate("p1", Role::creator, creator).passed);

    auto mismatch = creator;
    mismatch[kTranscriptMatch] = Verdict::fail;
    const auto out = screening_gate("p1", Role::creator, mismatch);
    CHECK_FALSE(out.passed);
    REQUIRE(out.reasons.size() == 1);
    CHECK(out.reasons[0].find(kTranscriptMatch) != std::string::npos);
    CHECK(to_json(out).at("overall") == "excluded");

    CHECK(screening_gate("p2", Role::rater, generic).passed);
    CHECK(code_of([&] { screening_gate("p3", Role::creator, generic); }) == Errc::IncompleteScreening);
    CHECK(mock_gate(true)("p1"));
    CHECK_FALSE(mock_gate(false)("p1"));
}

TEST_CASE("annotator review") {
    ExperimentConfig cfg;
    std::vector<AnnotationRecord> recs;
    const char* words[] = {"sad", "calm", "angry", "happy", "bored"};
    for (int i = 0; i < 5; ++i)
        recs.push_back({"a1", "s" + std::to_string(i), 1 + i % 4, -40 + 20 * i, 10 + 20 * i, 1 + (i + 1) % 4, words[i], false});
    auto consistent = recs;
    for (int i : {1, 3}) {
        auto rep = recs[static_cast<std::size_t>(i)];
        rep.is_repeat = true;
        consistent.push_back(rep);
    }
    auto ok = review_annotator("a1", consistent, cfg);
    CHECK_FALSE(ok.excluded());
    REQUIRE(ok.consistency);
    CHECK(*ok.consistency == doctest::Approx(1.0));

    auto noisy = recs;
    for (int i : {1, 3}) {
        auto rep = recs[static_cast<std::size_t>(i)];
        rep.is_repeat = true;
        rep.valence = -rep.valence;
        rep.arousal = 100 - rep.arousal;
        rep.emotionality = 5 - rep.emotionality;
        rep.authenticity = 5 - rep.authenticity;
        noisy.push_back(rep);
    }
    auto bad = review_annotator("a1", noisy, cfg);
    CHECK(bad.low_consistency);
    CHECK(bad.excluded());

    auto spam = recs;
    for (auto& r : spam) r.mood_word = "fine";
    CHECK(review_annotator("a1", spam, cfg).constant_labels);
}

TEST_CASE("fixtures from JSON") {
    const auto f = screening_fixtures_from_json(Json::parse(R"({
        "quality_key": [{"item_id": "q1", "answer": "good"}, {"item_id": "q2", "answer": "bad"}],
        "sentences": {"s01": "The boat sailed."}})"));
    CHECK(f.quality_key.items.size() == 2);
    CHECK(f.quality_key.items[1].second == QualityAnswer::bad);
    CHECK(f.sentences.at("s01") == "The boat sailed.");
    CHECK(code_of([] { screening_fixtures_from_json(Json::parse(R"({"quality_key": []})")); }) == Errc::InvalidArgument);
}
