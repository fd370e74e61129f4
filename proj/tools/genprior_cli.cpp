#include "genprior/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

namespace gh = genprior::harness;

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string out;
    std::string format = "csv";
    std::string trace;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--seed", flags.seed, "Master seed, overrides the config");
    cmd->add_option("--out", flags.out, "Report path (stdout when omitted)");
    cmd->add_option("--format", flags.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--threads", flags.threads, "Worker threads (0 = all cores)");
}

int run(gh::ExperimentKind kind, const CommonFlags& flags) {
    gh::ExperimentConfig config;
    try {
        config = flags.config_path.empty() ? gh::default_config(kind) : gh::load_config(flags.config_path);
        if (config.kind != kind) {
            throw gh::ConfigError("config kind '" + std::string(gh::kind_name(config.kind)) +
                                  "' does not match subcommand kind '" + std::string(gh::kind_name(kind)) + "'");
        }
        if (flags.seed) config.master_seed = *flags.seed;
        if (flags.threads) config.threads = *flags.threads;
        gh::validate(config);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    }

    const auto rows = gh::run_experiment(config);
    const gh::ReportFormat format = *gh::parse_format(flags.format);
    try {
        if (flags.out.empty()) {
            std::cout << gh::format_report(rows, format);
        } else {
            gh::emit_report(rows, format, flags.out);
        }
        if (!flags.trace.empty()) {
            std::ofstream trace(flags.trace);
            if (!trace) throw std::runtime_error("cannot open " + flags.trace + " for writing");
            genprior::write_loss_trace_csv(trace, gh::recovery_trial(config, 0, 0));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }

    std::size_t failures = 0;
    for (const auto& row : rows) {
        if (row.failed()) {
            ++failures;
            std::cerr << "trial " << row.trial << " (grid " << row.grid_index << "): " << row.status << '\n';
        }
    }
    return failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Experiments for compressed sensing with generative ReLU priors"};
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, gh::ExperimentKind>> commands{
        {"wdc-sweep", gh::ExperimentKind::wdc_sweep},
        {"recover", gh::ExperimentKind::recovery_sweep},
        {"expansion-phase", gh::ExperimentKind::expansion_phase},
        {"collision", gh::ExperimentKind::collision_demo},
        {"net-demo", gh::ExperimentKind::net_demo},
        {"rric", gh::ExperimentKind::rric_sweep},
        {"landscape", gh::ExperimentKind::landscape},
    };
    std::map<std::string, CommonFlags> flags;
    for (const auto& [name, kind] : commands) {
        CLI::App* cmd = app.add_subcommand(name, std::string("Run a ") + std::string(gh::kind_name(kind)) + " experiment");
        add_common(cmd, flags[name]);
        if (kind == gh::ExperimentKind::recovery_sweep) {
            cmd->add_option("--trace", flags[name].trace, "Also write the loss trace of the first cell and trial as CSV");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    for (const auto& [name, kind] : commands) {
        if (app.got_subcommand(name)) return run(kind, flags[name]);
    }
    return 1;
}
