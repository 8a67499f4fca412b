#include <fstream>

#include "gap/service.hpp"

namespace gap::service {

namespace fs = std::filesystem;

namespace {
std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::StorageError, "cannot write " + p.string());
    return out;
}
}  // namespace

Json simulate_to_dir(const ServiceConfig& config, std::uint64_t seed, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) fail(Errc::StorageError, "cannot create " + out_dir.string() + ": " + ec.message());

    // The output doubles as a data directory that export and serve can open.
    auto blobs = std::make_shared<DirectoryBlobStore>(out_dir / "blobs");
    EventLog log;
    sim::SimOptions opts;
    opts.blobs = blobs;
    opts.sink = [&](std::string_view kind, const Json& payload, Timestamp at) { log.append(kind, payload, at); };
    const auto run = sim::run_experiment(config.experiment, config.agent, seed, opts);
    const ExperimentSetup setup{config.experiment, AllocationOptions{seed, sim::kSimTrialDeadlineMs}};
    open_out(out_dir / "experiment.json") << to_json(setup).dump(2) << '\n';

    open_out(out_dir / "simrun.json") << sim::to_json(run).dump(1) << '\n';
    {
        auto out = open_out(out_dir / "annotations.csv");
        analysis::write_annotation_csv(out, run.annotation_rows());
    }
    open_out(out_dir / "events.jsonl") << export_events(log.events());
    open_out(out_dir / "state.json") << run.state.dump(1) << '\n';

    const auto corpus = gap::to_json(Experiment::from_json(run.state, blobs).corpus());
    open_out(out_dir / "corpus.json") << corpus.dump(1) << '\n';
    {
        auto out = open_out(out_dir / "final_stimuli.txt");
        for (const auto& id : run.final_selected()) out << id << '\n';
    }
    const auto trend = sim::generation_trend(run);
    {
        auto out = open_out(out_dir / "trend.csv");
        out << "generation,selected_e,incumbent_votes\n";
        for (std::size_t g = 0; g < trend.selected_e.size(); ++g) {
            out << g << ',' << trend.selected_e[g] << ',';
            if (g > 0) out << trend.incumbent_votes[g];
            out << '\n';
        }
    }
    Json incumbent = Json::array();
    for (std::size_t g = 1; g < trend.incumbent_votes.size(); ++g) incumbent.push_back(trend.incumbent_votes[g]);
    return {{"master_seed", std::to_string(seed)},
            {"chains", run.chains.size()},
            {"corpus_entries", corpus.at("entries").size()},
            {"unique_recordings", corpus.at("unique_recordings").size()},
            {"annotations", run.annotations.size()},
            {"events", log.last_seq()},
            {"selected_e", trend.selected_e},
            {"incumbent_votes", incumbent}};
}

Json analyze_to_dir(const fs::path& csv, const fs::path& out_dir, const analysis::AnalysisOptions& options) {
    const auto rows = analysis::read_annotation_csv(csv, options.config);
    const auto report = analysis::analyze(rows, options);
    analysis::write_report(report, out_dir);
    return analysis::summary_json(report);
}

}  // namespace gap::service
