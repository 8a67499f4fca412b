#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "gap/analysis.hpp"

namespace gap::analysis {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

[[noreturn]] void row_error(std::size_t row, const std::string& what) {
    fail(Errc::ImportError, "row " + std::to_string(row) + ": " + what, std::to_string(row));
}

int parse_int(const std::string& s, std::size_t row, const char* column) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        row_error(row, std::string(column) + " is not an integer: '" + s + "'");
    }
}

bool parse_bool(const std::string& s, std::size_t row) {
    if (s == "1" || s == "true" || s == "TRUE" || s == "True") return true;
    if (s == "0" || s == "false" || s == "FALSE" || s == "False" || s.empty()) return false;
    row_error(row, "is_repeat is not a boolean: '" + s + "'");
}

}  // namespace

bool is_known_set(std::string_view name) noexcept {
    return name == kProsodyGap || name == kCremaD || name == kVenec || name == kNeutralBaseline;
}

std::vector<AnnotationRow> read_annotation_csv(std::istream& in, const ExperimentConfig& config) {
    std::string line;
    if (!std::getline(in, line)) fail(Errc::ImportError, "missing header row", "0");
    const auto header = split_csv_line(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* name : kCsvColumns)
        if (!col.count(name)) fail(Errc::ImportError, std::string("header lacks column '") + name + "'", "0");

    std::vector<AnnotationRow> rows;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++row;
        const auto f = split_csv_line(line);
        if (f.size() != header.size())
            row_error(row, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
        auto get = [&](const char* name) -> const std::string& { return f[col.at(name)]; };

        AnnotationRow r;
        r.stimulus_id = get("stimulus_id");
        r.set = get("set");
        if (!is_known_set(r.set)) row_error(row, "unknown stimulus set '" + r.set + "'");
        if (!get("generation").empty()) {
            if (r.set != kProsodyGap) row_error(row, "generation given for non prosody-gap stimulus");
            r.generation = parse_int(get("generation"), row, "generation");
            if (*r.generation < 0 || *r.generation >= config.n_generations)
                row_error(row, "generation " + get("generation") + " out of range");
        } else if (r.set == kProsodyGap) {
            row_error(row, "prosody-gap stimulus without generation");
        }
        auto& rec = r.record;
        rec.stimulus_id = r.stimulus_id;
        rec.participant_id = get("participant_id");
        rec.emotionality = parse_int(get("emotionality"), row, "emotionality");
        rec.valence = parse_int(get("valence"), row, "valence");
        rec.arousal = parse_int(get("arousal"), row, "arousal");
        rec.authenticity = parse_int(get("authenticity"), row, "authenticity");
        rec.mood_word = get("mood_word");
        rec.is_repeat = parse_bool(get("is_repeat"), row);
        try {
            validate_annotation(rec, config);
        } catch (const Error& e) {
            row_error(row, e.what());
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<AnnotationRow> read_annotation_csv(const std::filesystem::path& path, const ExperimentConfig& config) {
    std::ifstream in(path);
    if (!in) fail(Errc::ImportError, "cannot open " + path.string(), "0");
    return read_annotation_csv(in, config);
}

void write_annotation_csv(std::ostream& out, const std::vector<AnnotationRow>& rows) {
    for (std::size_t i = 0; i < kCsvColumns.size(); ++i) out << (i ? "," : "") << kCsvColumns[i];
    out << '\n';
    for (const auto& r : rows) {
        const auto& a = r.record;
        out << csv_escape(r.stimulus_id) << ',' << csv_escape(r.set) << ','
            << (r.generation ? std::to_string(*r.generation) : std::string()) << ',' << a.emotionality << ','
            << a.valence << ',' << a.arousal << ',' << a.authenticity << ',' << csv_escape(a.mood_word) << ','
            << csv_escape(a.participant_id) << ',' << (a.is_repeat ? "true" : "false") << '\n';
    }
}

}  // namespace gap::analysis
