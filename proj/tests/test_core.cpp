#include <doctest.h>

#include <array>
#include <map>
#include <set>

#include "gap/core.hpp"
#include "support.hpp"

using namespace gap;
using testsupport::make_recording;
using testsupport::make_vote;
using testsupport::seeded_chain;

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

// Chain at generation 1 with both mutants in, awaiting votes.
Chain voting_chain(const ExperimentConfig& cfg) {
    auto c = seeded_chain(cfg);
    add_mutant(c, make_recording("m1", "c1", 1));
    add_mutant(c, make_recording("m2", "c1", 1));
    return c;
}

Generation generation_with(const std::array<int, 7>& choices) {
    Generation g;
    g.index = 1;
    g.incumbent_id = "A";
    g.mutant_ids = {"B", "C"};
    const char* names[] = {"A", "B", "C"};
    for (int i = 0; i < 7; ++i) {
        Vote v;
        v.rater_id = "r" + std::to_string(i);
        v.choice = names[choices[static_cast<std::size_t>(i)]];
        g.votes.push_back(v);
    }
    return g;
}

}  // namespace

TEST_CASE("content digest") {
    CHECK(content_digest(std::string_view{}) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(content_digest("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(content_digest("some audio") == content_digest("some audio"));
    std::string bytes = "some audio";
    const auto before = content_digest(bytes);
    bytes[3] ^= 0x01;
    CHECK(content_digest(bytes) != before);
}

TEST_CASE("config validation") {
    ExperimentConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.n_chains() == 50);
    auto bad = cfg;
    bad.m_creators = 0;
    CHECK(code_of([&] { bad.validate(); }) == Errc::InvalidConfig);
    bad = cfg;
    bad.n_generations = 1;
    CHECK(code_of([&] { bad.validate(); }) == Errc::InvalidConfig);
    bad = cfg;
    bad.annotation_repeats = 21;
    CHECK(code_of([&] { bad.validate(); }) == Errc::InvalidConfig);
    CHECK(config_from_json(to_json(cfg)) == cfg);
}

TEST_CASE("init_chain") {
    ExperimentConfig cfg;
    auto c = seeded_chain(cfg);
    CHECK(c.generations[0].selected_id == c.seed_recording_id);
    CHECK(c.generations[0].incumbent_id == c.seed_recording_id);
    CHECK(c.status == ChainStatus::awaiting_mutants);
    CHECK(c.current().index == 1);
    CHECK(c.current().incumbent_id == c.seed_recording_id);

    const auto seed = make_recording("x", "c2", 0);
    CHECK(code_of([&] { init_chain(seed, cfg, [](const Digest&) { return false; }); }) == Errc::SeedBlobMissing);
    CHECK(code_of([&] { init_chain(make_recording("y", "c2", 3), cfg, [](const Digest&) { return true; }); }) ==
          Errc::InvalidSeed);
}

TEST_CASE("add_mutant fills the generation") {
    ExperimentConfig cfg;
    auto c = seeded_chain(cfg);
    add_mutant(c, make_recording("m1", "c1", 1));
    CHECK(c.status == ChainStatus::awaiting_mutants);
    add_mutant(c, make_recording("m2", "c1", 1));
    CHECK(c.status == ChainStatus::awaiting_votes);
    CHECK(code_of([&] { add_mutant(c, make_recording("m3", "c1", 1)); }) == Errc::GenerationFull);

    auto d = seeded_chain(cfg);
    CHECK(code_of([&] { add_mutant(d, make_recording("u", "c1", 1, false)); }) == Errc::UnconfirmedRecording);
    CHECK(code_of([&] { add_mutant(d, make_recording("w", "c1", 2)); }) == Errc::IndexMismatch);
}

TEST_CASE("record_vote and quorum") {
    ExperimentConfig cfg;
    auto c = voting_chain(cfg);
    for (int i = 0; i < 6; ++i) record_vote(c, make_vote(c, "r" + std::to_string(i), "m1"));
    CHECK_FALSE(c.current().selected_id);
    CHECK(code_of([&] { record_vote(c, make_vote(c, "r0", "m2")); }) == Errc::DuplicateVote);
    CHECK(code_of([&] { record_vote(c, make_vote(c, "r9", "nope")); }) == Errc::InvalidChoice);
    record_vote(c, make_vote(c, "r6", "m2"));
    REQUIRE(c.current().selected_id);
    CHECK(*c.current().selected_id == "m1");
    CHECK_FALSE(c.current().tie_broken);
    CHECK(code_of([&] { record_vote(c, make_vote(c, "r7", "m1")); }) == Errc::QuorumClosed);
}

TEST_CASE("tally on a unique plurality") {
    // {A:3, B:2, C:2}
    auto g = generation_with({0, 0, 0, 1, 1, 2, 2});
    Rng rng(1);
    CHECK(tally(g, 7, rng) == "A");
    CHECK_FALSE(g.tie_broken);

    Generation short_g = g;
    short_g.votes.pop_back();
    CHECK(code_of([&] { tally(short_g, 7, rng); }) == Errc::QuorumIncomplete);
}

TEST_CASE("tally matches the count-argmax oracle over all 3^7 vote vectors") {
    int non_tied = 0, tied = 0;
    for (int code = 0; code < 2187; ++code) {
        std::array<int, 7> choices{};
        int x = code;
        std::array<int, 3> counts{};
        for (auto& ch : choices) {
            ch = x % 3;
            x /= 3;
            ++counts[static_cast<std::size_t>(ch)];
        }
        const int top = std::max({counts[0], counts[1], counts[2]});
        std::set<std::string> top_set;
        const char* names[] = {"A", "B", "C"};
        for (int k = 0; k < 3; ++k)
            if (counts[static_cast<std::size_t>(k)] == top) top_set.insert(names[k]);

        auto g = generation_with(choices);
        Rng rng(static_cast<std::uint64_t>(code));
        const auto winner = tally(g, 7, rng);
        if (top_set.size() == 1) {
            ++non_tied;
            CHECK(winner == *top_set.begin());
            CHECK_FALSE(g.tie_broken);
        } else {
            ++tied;
            CHECK(top_set.count(winner) == 1);
            CHECK(g.tie_broken);
            auto g2 = generation_with(choices);
            Rng again(static_cast<std::uint64_t>(code));
            CHECK(tally(g2, 7, again) == winner);
        }
    }
    CHECK(non_tied + tied == 2187);
    CHECK(tied > 0);
}

TEST_CASE("tie-break is replayable and roughly uniform") {
    // {A:3, B:3, C:1}
    std::map<std::string, int> wins;
    for (std::uint64_t seed = 0; seed < 2000; ++seed) {
        auto g = generation_with({0, 0, 0, 1, 1, 1, 2});
        auto rng = tie_break_rng(seed, 1);
        const auto w = tally(g, 7, rng);
        auto g2 = generation_with({0, 0, 0, 1, 1, 1, 2});
        auto rng2 = tie_break_rng(seed, 1);
        CHECK(tally(g2, 7, rng2) == w);
        ++wins[w];
    }
    CHECK(wins.count("C") == 0);
    CHECK(wins["A"] > 850);
    CHECK(wins["B"] > 850);
}

TEST_CASE("advance") {
    ExperimentConfig cfg;
    auto c = voting_chain(cfg);
    CHECK(code_of([&] { advance(c); }) == Errc::NotTallied);
    // Run to generation 3, check propagation into 4.
    for (int gen = 1; gen <= 3; ++gen) {
        if (gen > 1) {
            add_mutant(c, make_recording("g" + std::to_string(gen) + "a", "c1", gen));
            add_mutant(c, make_recording("g" + std::to_string(gen) + "b", "c1", gen));
        }
        const auto pick = c.current().mutant_ids[0];
        for (int i = 0; i < 7; ++i) record_vote(c, make_vote(c, "r" + std::to_string(i), pick));
        CHECK(c.status == ChainStatus::open);
        advance(c);
    }
    CHECK(c.current().index == 4);
    CHECK(c.current().incumbent_id == *c.generations[3].selected_id);
    CHECK(c.status == ChainStatus::awaiting_mutants);

    for (int gen = 4; gen <= 9; ++gen) {
        add_mutant(c, make_recording("h" + std::to_string(gen) + "a", "c1", gen));
        add_mutant(c, make_recording("h" + std::to_string(gen) + "b", "c1", gen));
        for (int i = 0; i < 7; ++i) record_vote(c, make_vote(c, "r" + std::to_string(i), c.current().incumbent_id));
        advance(c);
    }
    CHECK(c.status == ChainStatus::complete);
    CHECK(c.generations.size() == 10);
    CHECK(code_of([&] { advance(c); }) == Errc::InvalidState);
}

namespace {

struct Built {
    std::vector<Chain> chains;
    std::map<RecordingId, Recording> recs;
};

// winners(gen) returns "inc", "m1" or "m2" for each generation >= 1.
Built build_chains(int n, auto winners) {
    ExperimentConfig cfg;
    Built b;
    for (int k = 0; k < n; ++k) {
        const auto id = "c" + std::to_string(k);
        const auto seed = make_recording(id + "-seed", id, 0);
        b.recs[seed.id] = seed;
        auto c = init_chain(seed, cfg, [](const Digest&) { return true; });
        for (int gen = 1; gen < cfg.n_generations; ++gen) {
            for (int j = 1; j <= 2; ++j) {
                auto r = make_recording(id + "-" + std::to_string(gen) + "-" + std::to_string(j), id, gen);
                b.recs[r.id] = r;
                add_mutant(c, r);
            }
            const std::string w = winners(gen);
            const auto choice = w == "inc" ? c.current().incumbent_id : c.current().mutant_ids[w == "m1" ? 0 : 1];
            for (int i = 0; i < 7; ++i) record_vote(c, make_vote(c, "r" + std::to_string(i), choice));
            advance(c);
        }
        b.chains.push_back(std::move(c));
    }
    return b;
}

}  // namespace

TEST_CASE("extract_corpus") {
    SUBCASE("50 chains x 10 generations") {
        auto b = build_chains(50, [](int) { return "m1"; });
        auto corpus = extract_corpus(b.chains, [&](const RecordingId& id) -> const Recording& { return b.recs.at(id); });
        CHECK(corpus.entries.size() == 500);
        CHECK(corpus.unique_recordings.size() == 500);
    }
    SUBCASE("mutant wins generation 1 then the incumbent holds") {
        auto b = build_chains(1, [](int gen) { return gen == 1 ? "m2" : "inc"; });
        auto corpus = extract_corpus(b.chains, [&](const RecordingId& id) -> const Recording& { return b.recs.at(id); });
        CHECK(corpus.entries.size() == 10);
        CHECK(corpus.unique_recordings.size() == 2);
    }
    SUBCASE("incumbent always wins") {
        auto b = build_chains(4, [](int) { return "inc"; });
        auto corpus = extract_corpus(b.chains, [&](const RecordingId& id) -> const Recording& { return b.recs.at(id); });
        CHECK(corpus.unique_recordings.size() == 4);
    }
    SUBCASE("incomplete chain") {
        ExperimentConfig cfg;
        std::vector<Chain> chains{seeded_chain(cfg)};
        CHECK(code_of([&] {
                  extract_corpus(chains, [](const RecordingId&) -> const Recording& { throw std::logic_error("unused"); });
              }) == Errc::ChainIncomplete);
    }
}

TEST_CASE("property: random operation sequences keep the chain consistent") {
    ExperimentConfig cfg;
    cfg.n_generations = 5;
    const std::set<std::pair<ChainStatus, ChainStatus>> allowed{
        {ChainStatus::awaiting_mutants, ChainStatus::awaiting_mutants},
        {ChainStatus::awaiting_mutants, ChainStatus::awaiting_votes},
        {ChainStatus::awaiting_votes, ChainStatus::awaiting_votes},
        {ChainStatus::awaiting_votes, ChainStatus::open},
        {ChainStatus::open, ChainStatus::open},
        {ChainStatus::open, ChainStatus::awaiting_mutants},
        {ChainStatus::open, ChainStatus::complete},
        {ChainStatus::complete, ChainStatus::complete},
    };
    for (std::uint64_t trial = 0; trial < 200; ++trial) {
        Rng rng(trial);
        auto c = seeded_chain(cfg, "c1", trial);
        int made = 0;
        for (int step = 0; step < 400; ++step) {
            const auto before = c.status;
            const int op = std::uniform_int_distribution<int>(0, 3)(rng);
            try {
                if (op == 0) {
                    const int gen = c.current().index + std::uniform_int_distribution<int>(-1, 1)(rng);
                    add_mutant(c, make_recording("r" + std::to_string(++made), "c1", gen,
                                                 std::bernoulli_distribution(0.9)(rng)));
                } else if (op == 1) {
                    const auto cands = c.current().candidates();
                    const auto rater = "p" + std::to_string(std::uniform_int_distribution<int>(0, 9)(rng));
                    const auto choice = cands[std::uniform_int_distribution<std::size_t>(0, cands.size() - 1)(rng)];
                    record_vote(c, make_vote(c, rater, choice));
                } else if (op == 2) {
                    advance(c);
                } else {
                    Vote v = make_vote(c, "p0", "bogus");
                    record_vote(c, v);
                }
            } catch (const Error&) {
                CHECK(c.status == before);
            }
            CHECK(allowed.count({before, c.status}) == 1);
            // Invariants on every generation.
            for (std::size_t i = 0; i < c.generations.size(); ++i) {
                const auto& g = c.generations[i];
                CHECK(g.index == static_cast<int>(i));
                CHECK(static_cast<int>(g.mutant_ids.size()) <= cfg.m_creators);
                CHECK(static_cast<int>(g.votes.size()) <= cfg.votes_per_generation);
                std::set<std::string> raters;
                for (const auto& v : g.votes) {
                    CHECK(raters.insert(v.rater_id).second);
                    CHECK(g.is_candidate(v.choice));
                }
                if (i > 0) {
                    CHECK(g.incumbent_id == *c.generations[i - 1].selected_id);
                    CHECK(g.selected_id.has_value() == (static_cast<int>(g.votes.size()) == cfg.votes_per_generation));
                }
                if (g.selected_id) CHECK(g.is_candidate(*g.selected_id));
            }
            CHECK(c.generations[0].selected_id == c.seed_recording_id);
            CHECK((c.status == ChainStatus::complete) ==
                  (static_cast<int>(c.generations.size()) == cfg.n_generations && c.current().selected_id &&
                   c.status != ChainStatus::open));
        }
    }
}

TEST_CASE("canonical JSON round-trip") {
    ExperimentConfig cfg;
    auto c = voting_chain(cfg);
    record_vote(c, make_vote(c, "r1", "m1"));
    const auto j = to_json(c);
    CHECK(to_json(chain_from_json(j)) == j);
    CHECK(chain_from_json(j) == c);
    CHECK(to_string(ChainStatus::awaiting_votes) == "awaiting_votes");
    CHECK(chain_status_from_string("complete") == ChainStatus::complete);
}
