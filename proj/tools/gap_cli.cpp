// Command-line front end over the C interface: serve, simulate, analyze, export.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "gap/gap.h"

namespace {

using Json = nlohmann::json;

struct Owned {
    char* p = nullptr;
    ~Owned() { gap_string_free(p); }
    std::string str() const { return p ? p : ""; }
};

int report(gap_status s) {
    if (s == GAP_OK) return 0;
    std::cerr << "error: " << gap_status_name(s) << ": " << gap_last_error() << '\n';
    return 1;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string parent_dir(const std::string& path) {
    auto pos = path.find_last_of('/');
    return pos == std::string::npos ? "." : path.substr(0, pos);
}

// GAP_DATA_DIR wins over --data-dir.
std::string data_dir_from(const std::string& flag) {
    if (const char* env = std::getenv("GAP_DATA_DIR"); env && *env) return env;
    return flag;
}

int serve(const std::string& config_path, const std::string& data_dir_flag, const std::string& host, int port) {
    const auto data_dir = data_dir_from(data_dir_flag);
    if (data_dir.empty()) {
        std::cerr << "error: a data directory is required (--data-dir or GAP_DATA_DIR)\n";
        return 2;
    }
    const auto config = read_file(config_path);
    gap_engine* engine = nullptr;
    if (int rc = report(gap_engine_open(config.c_str(), parent_dir(config_path).c_str(), data_dir.c_str(), &engine)))
        return rc;

    httplib::Server server;
    auto send = [](httplib::Response& res, int status, const Owned& body) {
        res.status = status;
        res.set_content(body.str(), "application/json");
    };
    auto fail_internal = [](httplib::Response& res) {
        res.status = 500;
        res.set_content(Json{{"error", "Internal"}, {"message", gap_last_error()}}.dump(), "application/json");
    };
    auto dispatch = [&](const httplib::Request& req, httplib::Response& res) {
        Json query = Json::object();
        for (const auto& [k, v] : req.params) query[k] = v;
        const auto q = query.dump();
        int status = 0;
        Owned body;
        if (gap_engine_request(engine, req.method.c_str(), req.path.c_str(), q.c_str(), req.body.c_str(), &status, &body.p) != GAP_OK)
            return fail_internal(res);
        send(res, status, body);
    };

    server.Post(R"(/trials/([^/]+)/creation)", [&](const httplib::Request& req, httplib::Response& res) {
        const auto trial_id = req.matches[1].str();
        const bool has_audio = req.has_file("audio");
        const auto audio = has_audio ? req.get_file_value("audio").content : std::string();
        const auto confirmed = req.has_file("confirmed") ? req.get_file_value("confirmed").content : std::string();
        int status = 0;
        Owned body;
        if (gap_engine_submit_creation(engine, trial_id.c_str(), has_audio ? reinterpret_cast<const uint8_t*>(audio.data()) : nullptr,
                                       audio.size(), confirmed == "true" || confirmed == "1", &status, &body.p) != GAP_OK)
            return fail_internal(res);
        send(res, status, body);
    });
    server.Get(".*", dispatch);
    server.Post(".*", dispatch);

    std::cerr << "serving on http://" << host << ':' << port << " (data: " << data_dir << ")\n";
    const bool ok = server.listen(host, port);
    gap_engine_close(engine);
    if (!ok) {
        std::cerr << "error: cannot listen on " << host << ':' << port << '\n';
        return 1;
    }
    return 0;
}

int simulate(std::uint64_t seed, const std::string& config_path, const std::string& out_dir) {
    const auto config = config_path.empty() ? std::string("{}") : read_file(config_path);
    Owned summary;
    if (int rc = report(gap_simulate(config.c_str(), seed, out_dir.c_str(), &summary.p))) return rc;
    std::cout << Json::parse(summary.str()).dump(2) << '\n';
    return 0;
}

int analyze(const std::string& csv, const std::string& out_dir, const std::string& final_stimuli, std::uint64_t seed,
            const std::string& config_path) {
    Json options{{"seed", seed}};
    if (!final_stimuli.empty()) {
        std::istringstream in(read_file(final_stimuli));
        Json ids = Json::array();
        for (std::string line; std::getline(in, line);)
            if (!line.empty()) ids.push_back(line);
        options["final_stimuli"] = ids;
    }
    if (!config_path.empty()) options["config"] = Json::parse(read_file(config_path));
    Owned summary;
    if (int rc = report(gap_analyze(csv.c_str(), out_dir.c_str(), options.dump().c_str(), &summary.p))) return rc;
    std::cout << Json::parse(summary.str()).dump(2) << '\n';
    return 0;
}

int export_data(const std::string& what, const std::string& data_dir_flag, const std::string& out_path) {
    const auto data_dir = data_dir_from(data_dir_flag);
    if (data_dir.empty()) {
        std::cerr << "error: a data directory is required (--data-dir or GAP_DATA_DIR)\n";
        return 2;
    }
    gap_engine* engine = nullptr;
    if (int rc = report(gap_engine_open_existing(data_dir.c_str(), &engine))) return rc;
    Owned text;
    const auto s = gap_engine_export(engine, what.c_str(), &text.p);
    gap_engine_close(engine);
    if (int rc = report(s)) return rc;
    if (out_path.empty() || out_path == "-") {
        std::cout << text.str();
    } else {
        std::ofstream out(out_path, std::ios::binary);
        out << text.str();
        if (!out) {
            std::cerr << "error: cannot write " << out_path << '\n';
            return 1;
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GAP orchestration engine"};
    app.require_subcommand(1);
    app.set_version_flag("--version", gap_version());

    std::string config, data_dir, out, host = "127.0.0.1", csv, final_stimuli, what;
    int port = 8080;
    std::uint64_t seed = 1;

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP/JSON API");
    serve_cmd->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    serve_cmd->add_option("--data-dir", data_dir, "Event log, snapshots and audio blobs (GAP_DATA_DIR overrides)");
    serve_cmd->add_option("--host", host, "Listen address");
    serve_cmd->add_option("--port", port, "Listen port");

    auto* sim_cmd = app.add_subcommand("simulate", "Run the protocol with simulated participants");
    sim_cmd->add_option("--seed", seed, "Master seed")->required();
    sim_cmd->add_option("--config", config, "Experiment config (JSON)")->check(CLI::ExistingFile);
    sim_cmd->add_option("--out", out, "Output directory")->required();

    auto* an_cmd = app.add_subcommand("analyze", "Validation analysis of an annotation CSV");
    an_cmd->add_option("--annotations", csv, "Annotation CSV")->required()->check(CLI::ExistingFile);
    an_cmd->add_option("--out", out, "Output directory")->required();
    an_cmd->add_option("--final-stimuli", final_stimuli, "File listing final-generation stimulus ids, one per line")
        ->check(CLI::ExistingFile);
    an_cmd->add_option("--seed", seed, "Seed for subsampling and bootstraps");
    an_cmd->add_option("--config", config, "Experiment config (JSON) for rating scales")->check(CLI::ExistingFile);

    auto* ex_cmd = app.add_subcommand("export", "Export from a data directory");
    ex_cmd->add_option("--what", what, "corpus | events | wordcounts")
        ->required()
        ->check(CLI::IsMember({"corpus", "events", "wordcounts"}));
    ex_cmd->add_option("--data-dir", data_dir, "Data directory (GAP_DATA_DIR overrides)");
    ex_cmd->add_option("--out", out, "Output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve_cmd) return serve(config, data_dir, host, port);
        if (*sim_cmd) return simulate(seed, config, out);
        if (*an_cmd) return analyze(csv, out, final_stimuli, seed, config);
        if (*ex_cmd) return export_data(what, data_dir, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
