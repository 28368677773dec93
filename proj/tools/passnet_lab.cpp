#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "passnet/error.hpp"
#include "passnet/ingest.hpp"
#include "passnet/io_util.hpp"
#include "passnet/pipeline.hpp"
#include "passnet/synthetic.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;
    std::optional<std::string> granularity;
    bool with_draws = false;
};

passnet::PipelineConfig resolve(const Overrides& o) {
    passnet::PipelineConfig config = passnet::load_config(o.config);
    if (o.seed) config.seed = *o.seed;
    if (o.mode) passnet::apply_setting(config, "mode", *o.mode);
    if (o.granularity) passnet::apply_setting(config, "granularity", *o.granularity);
    if (o.with_draws) config.target = passnet::TargetKind::Ternary;
    return config;
}

void report(passnet::Stage stage, const passnet::StageOutcome& outcome) {
    if (outcome.up_to_date) {
        fmt::print("{}: up to date\n", passnet::to_string(stage));
    } else {
        fmt::print("{}: wrote {} files\n", passnet::to_string(stage), outcome.artifacts.size());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Passing-network match analytics pipeline"};
    app.require_subcommand(1);

    Overrides overrides;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", overrides.config, "key = value configuration file")->required();
        sub->add_option("--seed", overrides.seed, "override the configured seed");
        sub->add_option("--mode", overrides.mode, "nets, stats or mixed");
        sub->add_option("--granularity", overrides.granularity, "full or halves");
        sub->add_flag("--with-draws", overrides.with_draws, "three-class target with draws kept");
    };

    std::vector<std::pair<passnet::Stage, CLI::App*>> stage_commands;
    for (const passnet::Stage stage : passnet::all_stages()) {
        auto* sub = app.add_subcommand(std::string(passnet::to_string(stage)));
        add_common(sub);
        stage_commands.emplace_back(stage, sub);
    }
    auto* all = app.add_subcommand("all", "run every stage for all three feature modes");
    add_common(all);

    passnet::SyntheticOptions synth;
    std::string synth_out;
    std::vector<std::string> synth_leagues;
    auto* synth_cmd = app.add_subcommand("synth", "write a synthetic events/matches corpus");
    synth_cmd->add_option("--out", synth_out, "output directory")->required();
    synth_cmd->add_option("--seed", synth.seed, "generator seed");
    synth_cmd->add_option("--teams", synth.teams_per_league, "teams per league");
    synth_cmd->add_option("--cycles", synth.cycles, "double round robins per league");
    synth_cmd->add_option("--leagues", synth_leagues, "competition names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error: ConfigError: " << e.what() << "\n";
        return 2;
    }

    try {
        if (synth_cmd->parsed()) {
            if (!synth_leagues.empty()) {
                synth.leagues.clear();
                for (const auto& name : synth_leagues) synth.leagues.push_back(passnet::parse_competition(name));
            }
            const auto corpus = passnet::generate_corpus(synth);
            const std::filesystem::path dir = synth_out;
            passnet::io::write_file(dir / "events.csv", passnet::write_canonical_events(corpus.events));
            passnet::io::write_file(dir / "matches.csv", passnet::write_matches(corpus.matches));
            fmt::print("synth: {} matches, {} events\n", corpus.matches.size(), corpus.events.size());
            return 0;
        }
        const passnet::PipelineConfig config = resolve(overrides);
        const passnet::PipelineLock lock(config.output);
        if (all->parsed()) {
            passnet::run_all(config, report);
            return 0;
        }
        for (const auto& [stage, sub] : stage_commands) {
            if (sub->parsed()) report(stage, passnet::run_stage(stage, config));
        }
        return 0;
    } catch (const passnet::Error& e) {
        std::cerr << "error: " << passnet::to_string(e.kind()) << ": " << e.what() << "\n";
        return passnet::exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: NumericFailure: " << e.what() << "\n";
        return 4;
    }
}
