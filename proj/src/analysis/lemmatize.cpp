#include <algorithm>
#include <cctype>
#include <string_view>
#include <unordered_map>

#include "gap/analysis.hpp"

namespace gap::analysis {

namespace {

const std::unordered_map<std::string_view, std::string_view>& exceptions() {
    static const std::unordered_map<std::string_view, std::string_view> table{
        {"anger", "anger"},     {"nothing", "nothing"},   {"something", "something"},
        {"anything", "anything"}, {"everything", "everything"}, {"morning", "morning"},
        {"evening", "evening"}, {"pleased", "please"},    {"pleasing", "please"},
        {"was", "be"},          {"were", "be"},           {"is", "be"},
        {"are", "be"},          {"been", "be"},           {"felt", "feel"},
        {"better", "good"},     {"best", "good"},         {"worse", "bad"},
        {"worst", "bad"},       {"children", "child"},    {"men", "man"},
        {"women", "woman"},     {"lied", "lie"},          {"lies", "lie"},
        {"dying", "die"},       {"news", "news"},         {"always", "always"},
    };
    return table;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool has_vowel(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](char c) { return is_vowel(c) || c == 'y'; });
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

// Stem left after removing -ed / -ing: undo consonant doubling, or restore a
// silent e after a single-vowel consonant ending (scar -> scare, excit -> excite).
std::string repair_stem(std::string stem) {
    const auto n = stem.size();
    if (n >= 2 && stem[n - 1] == stem[n - 2] && !is_vowel(stem[n - 1])) {
        const char c = stem[n - 1];
        if (c != 'l' && c != 's' && c != 'z' && c != 'f') stem.pop_back();
        return stem;
    }
    if (n >= 3) {
        const char last = stem[n - 1], mid = stem[n - 2], first = stem[n - 3];
        const bool cvc = !is_vowel(last) && is_vowel(mid) && !is_vowel(first) && first != 'y';
        const bool soft_ending = std::string_view("wxyhnl").find(last) == std::string_view::npos;
        // -en/-er style endings are unstressed (open, bother) and take no e.
        const bool unstressed = mid == 'e' && (last == 'n' || last == 'r');
        if (cvc && soft_ending && !unstressed) stem.push_back('e');
    }
    return stem;
}

}  // namespace

std::string lemmatize(std::string_view word) {
    std::string w;
    for (unsigned char c : word)
        if (!std::isspace(c)) w.push_back(static_cast<char>(std::tolower(c)));
    if (w.empty()) fail(Errc::EmptyToken, "cannot lemmatize an empty token");

    if (auto it = exceptions().find(w); it != exceptions().end()) return std::string(it->second);

    if (w.size() > 4 && (ends_with(w, "ies") || ends_with(w, "ied"))) return w.substr(0, w.size() - 3) + "y";

    if (ends_with(w, "ing") && w.size() > 5) {
        auto stem = w.substr(0, w.size() - 3);
        if (has_vowel(stem)) return repair_stem(stem);
        return w;
    }
    if (ends_with(w, "ed") && w.size() > 4 && !ends_with(w, "eed")) {
        auto stem = w.substr(0, w.size() - 2);
        if (has_vowel(stem)) return repair_stem(stem);
        return w;
    }
    for (std::string_view suf : {"sses", "shes", "ches", "xes", "zes"})
        if (ends_with(w, suf)) return w.substr(0, w.size() - 2);
    if (ends_with(w, "s") && w.size() > 3 && !ends_with(w, "ss") && !ends_with(w, "us") && !ends_with(w, "is"))
        return w.substr(0, w.size() - 1);
    return w;
}

}  // namespace gap::analysis
