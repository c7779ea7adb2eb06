#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "beliefroute/beliefs.hpp"
#include "beliefroute/config.hpp"
#include "beliefroute/event_log.hpp"
#include "beliefroute/runner.hpp"

namespace {

int cmd_run(const std::string& config_path, int seeds_override, int offset_override,
            const std::string& dir_override) {
    beliefroute::ExperimentConfig cfg = beliefroute::load_config(config_path);
    if (seeds_override >= 0) {
        if (seeds_override < 1) throw beliefroute::ConfigError("--seeds must be >= 1");
        cfg.seeds = seeds_override;
    }
    if (offset_override >= 0) cfg.seed_offset = offset_override;
    if (!dir_override.empty()) cfg.output_dir = dir_override;

    const beliefroute::RunArtifacts art = beliefroute::run_experiment(cfg);

    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    for (const auto& [name, body] : art.files) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot write " + (dir / name).string());
        }
        out << body;
    }

    std::cout << art.report;
    for (const auto& [name, body] : art.files) {
        std::cout << "  wrote " << (dir / name).string() << " (" << body.size() << " bytes)\n";
    }
    return 0;
}

int cmd_replay(const std::string& log_path) {
    std::ifstream in(log_path, std::ios::binary);
    if (!in) throw beliefroute::ConfigError("cannot open log file '" + log_path + "'");
    const beliefroute::ReplayReport report = beliefroute::replay_log(in);

    std::cout << "  episodes " << report.episodes << ", rounds " << report.rounds << ", mismatches "
              << report.mismatches.size() << "\n";
    if (report.episodes > 0) {
        std::cout << "  last episode: " << report.last_status << ", rounds " << report.last_rounds
                  << ", cost " << beliefroute::format_sig6(report.last_cost) << "\n";
    }
    if (report.ok()) return 0;

    std::size_t shown = 0;
    for (const beliefroute::ReplayMismatch& m : report.mismatches) {
        std::cout << "  mismatch at line " << m.line << " (episode " << m.episode << ", round "
                  << m.round << "): " << m.field << " expected " << m.expected << ", logged "
                  << m.actual << "\n";
        if (++shown == 20 && report.mismatches.size() > 20) {
            std::cout << "  ... " << (report.mismatches.size() - 20) << " more\n";
            break;
        }
    }
    return 3;
}

int cmd_beliefs_show(const std::string& json_path) {
    std::ifstream in(json_path, std::ios::binary);
    if (!in) throw beliefroute::ConfigError("cannot open belief file '" + json_path + "'");
    const beliefroute::BeliefTable table = beliefroute::load_beliefs(in);

    std::printf("  %-20s %12s %12s %10s %12s\n", "agent", "alpha", "beta", "mean", "updated_at");
    for (const auto& [id, b] : table) {
        std::printf("  %-20s %12s %12s %10s %12lld\n", id.c_str(),
                    beliefroute::format_sig6(b.alpha).c_str(),
                    beliefroute::format_sig6(b.beta).c_str(),
                    beliefroute::format_sig6(beliefroute::posterior_mean(b)).c_str(),
                    static_cast<long long>(b.updated_at));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"beliefroute: belief-guided routing of tasks across agents"};
    app.require_subcommand(1);

    std::string config_path, log_path, beliefs_path, dir_override;
    int seeds_override = -1;
    int offset_override = -1;

    CLI::App* run = app.add_subcommand("run", "Execute the experiment described by a config file");
    run->add_option("config", config_path, "JSON experiment config")->required();
    run->add_option("--seeds", seeds_override, "Override the number of seeded replications");
    run->add_option("--seed-offset", offset_override, "Override the first seed index");
    run->add_option("--output-dir", dir_override, "Override the output directory");

    CLI::App* replay = app.add_subcommand("replay", "Re-derive an event log and verify it");
    replay->add_option("log", log_path, "Event JSONL produced by run")->required();

    CLI::App* beliefs = app.add_subcommand("beliefs", "Belief persistence utilities");
    beliefs->require_subcommand(1);
    CLI::App* show = beliefs->add_subcommand("show", "Print a persisted belief table");
    show->add_option("json", beliefs_path, "Belief JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // bad arguments are validation errors
    }

    try {
        if (run->parsed()) {
            return cmd_run(config_path, seeds_override, offset_override, dir_override);
        }
        if (replay->parsed()) return cmd_replay(log_path);
        if (beliefs->parsed() && show->parsed()) return cmd_beliefs_show(beliefs_path);
    } catch (const beliefroute::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "fault: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
