#pragma once

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "gap/core.hpp"

namespace testsupport {

inline gap::Recording make_recording(const std::string& id, const std::string& chain, int gen, bool confirmed = true,
                                     const std::string& digest = "") {
    gap::Recording r;
    r.id = id;
    r.chain_id = chain;
    r.generation_index = gen;
    r.blob_digest = digest.empty() ? gap::content_digest(id) : digest;
    r.sentence_id = "s01";
    r.confirmed = confirmed;
    if (gen > 0) r.creator_id = "creator";
    return r;
}

inline gap::Vote make_vote(const gap::Chain& c, const std::string& rater, const std::string& choice) {
    gap::Vote v;
    v.rater_id = rater;
    v.chain_id = c.id;
    v.generation_index = c.current().index;
    v.choice = choice;
    v.presentation_order = c.current().candidates();
    return v;
}

inline gap::Chain seeded_chain(const gap::ExperimentConfig& cfg, const std::string& id = "c1", std::uint64_t tie_seed = 7) {
    return gap::init_chain(make_recording(id + "-seed", id, 0), cfg, [](const gap::Digest&) { return true; }, tie_seed);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("gap-test-" + name + "-" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace testsupport
