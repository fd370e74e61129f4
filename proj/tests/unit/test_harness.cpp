#include "genprior/harness.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace genprior;
using namespace genprior::harness;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "genprior-tests";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

const FieldValue& field(const ReportRow& row, const std::string& name) {
    for (const auto& f : row.parameters) {
        if (f.name == name) return f.value;
    }
    for (const auto& f : row.outputs) {
        if (f.name == name) return f.value;
    }
    throw std::out_of_range("no field " + name);
}

ExperimentConfig small_config(ExperimentKind kind) {
    ExperimentConfig c = default_config(kind);
    c.trial_count = 2;
    c.threads = 1;
    switch (kind) {
        case ExperimentKind::wdc_sweep:
            c.k = 3;
            c.n_grid = {6, 30};
            c.pairs = 20;
            break;
        case ExperimentKind::expansion_phase:
            c.k_grid = {2};
            c.n_grid = {4, 40};
            c.pair_trials = 5;
            break;
        case ExperimentKind::collision_demo:
            c.k_grid = {1, 3};
            break;
        case ExperimentKind::net_demo:
            c.k_grid = {1, 2};
            c.delta_grid = {0.5};
            c.random_test_points = 500;
            c.sphere_test_points = 2000;
            break;
        case ExperimentKind::recovery_sweep:
            c.layer_dims = {3, 15, 40};
            c.m_grid = {20, 30};
            c.noise_grid = {0.0, 0.05};
            c.restarts = 2;
            c.max_iterations = 500;
            break;
        case ExperimentKind::rric_sweep:
            c.layer_dims = {3, 15, 40};
            c.m_grid = {6, 60};
            c.quadruples = 30;
            break;
        case ExperimentKind::landscape:
            c.layer_dims = {2, 10, 20};
            c.m_grid = {15};
            c.restarts = 10;
            c.max_iterations = 300;
            break;
    }
    return c;
}

const std::vector<ExperimentKind> kAllKinds{
    ExperimentKind::wdc_sweep, ExperimentKind::recovery_sweep, ExperimentKind::expansion_phase,
    ExperimentKind::collision_demo, ExperimentKind::net_demo, ExperimentKind::rric_sweep, ExperimentKind::landscape};

}  // namespace

TEST(Config, ParsesKindAndOverrides) {
    const ExperimentConfig c = parse_config(R"({"kind": "wdc_sweep", "master_seed": 7, "trial_count": 3,
                                                "k": 4, "n_grid": [8, 16], "pairs": 10, "normalized": false})");
    EXPECT_EQ(c.kind, ExperimentKind::wdc_sweep);
    EXPECT_EQ(c.master_seed, 7u);
    EXPECT_EQ(c.trial_count, 3u);
    EXPECT_EQ(c.k, 4);
    EXPECT_EQ(c.n_grid, (std::vector<Eigen::Index>{8, 16}));
    EXPECT_FALSE(c.normalized);
}

TEST(Config, KindSpecificDefaults) {
    const ExperimentConfig c = parse_config(R"({"kind": "landscape"})");
    EXPECT_EQ(c.restarts, 200u);
    EXPECT_FALSE(c.negation_check);
    EXPECT_EQ(c.layer_dims.front(), 2);
}

TEST(Config, RejectsInvalidInput) {
    EXPECT_THROW(parse_config("not json"), ConfigError);
    EXPECT_THROW(parse_config("[]"), ConfigError);
    EXPECT_THROW(parse_config(R"({"master_seed": 1})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"kind": "bogus"})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"kind": "wdc_sweep", "colour": 1})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"kind": "wdc_sweep", "quadruples": 1})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"kind": "wdc_sweep", "trial_count": 0})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"kind": "wdc_sweep", "n_grid": []})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"kind": "wdc_sweep", "pairs": -3})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"kind": "wdc_sweep", "pairs": 1.5})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"kind": "net_demo", "k_grid": [7]})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"kind": "net_demo", "delta_grid": [1.0]})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"kind": "recovery_sweep", "layer_dims": [5]})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"kind": "recovery_sweep", "noise_kind": "pink"})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"kind": "landscape", "mode": "grid", "layer_dims": [4, 10]})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"kind": "expansion_phase", "k_grid": [10], "n_grid": [5]})"), ConfigError);
}

TEST(Config, ErrorNamesTheKey) {
    try {
        parse_config(R"({"kind": "rric_sweep", "quadruples": 0})");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("quadruples"), std::string::npos);
    }
}

TEST(Config, LoadFromFile) {
    const fs::path p = temp_path("config.json");
    std::ofstream(p) << R"({"kind": "collision_demo", "k_grid": [1], "trial_count": 1})";
    EXPECT_EQ(load_config(p).k_grid, (std::vector<Eigen::Index>{1}));
    EXPECT_THROW(load_config(temp_path("missing.json")), ConfigError);
}

TEST(Config, ShippedExamplesParse) {
    const fs::path dir = fs::path(GENPRIOR_SOURCE_DIR) / "docs" / "configs";
    int count = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        EXPECT_NO_THROW(load_config(entry.path())) << entry.path();
        ++count;
    }
    EXPECT_GE(count, 7);
}

TEST(Seeds, StableAndUnique) {
    const ExperimentConfig c = small_config(ExperimentKind::recovery_sweep);
    EXPECT_EQ(instance_seed(c, 3), instance_seed(c, 3));
    EXPECT_NE(instance_seed(c, 3), instance_seed(c, 4));
    ExperimentConfig other = c;
    other.kind = ExperimentKind::rric_sweep;
    EXPECT_NE(instance_seed(c, 0), instance_seed(other, 0));
}

TEST(RunExperiment, CollisionDemoOneTrial) {
    ExperimentConfig c = default_config(ExperimentKind::collision_demo);
    c.k_grid = {1};
    c.master_seed = 5;
    const auto rows = run_experiment(c);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(std::get<bool>(field(rows[0], "collision_verified")), true);
    EXPECT_FALSE(rows[0].failed());
}

TEST(RunExperiment, EveryKindRowsAndSeeds) {
    for (const ExperimentKind kind : kAllKinds) {
        const ExperimentConfig c = small_config(kind);
        const auto rows = run_experiment(c);
        std::size_t grid = 1;
        switch (kind) {
            case ExperimentKind::wdc_sweep: grid = c.n_grid.size(); break;
            case ExperimentKind::expansion_phase: grid = c.k_grid.size() * c.n_grid.size() * c.epsilon_grid.size(); break;
            case ExperimentKind::collision_demo: grid = c.k_grid.size(); break;
            case ExperimentKind::net_demo: grid = c.k_grid.size() * c.delta_grid.size(); break;
            case ExperimentKind::recovery_sweep: grid = c.m_grid.size() * c.noise_grid.size(); break;
            case ExperimentKind::rric_sweep:
            case ExperimentKind::landscape: grid = c.m_grid.size(); break;
        }
        ASSERT_EQ(rows.size(), grid * c.trial_count) << kind_name(kind);
        std::set<std::uint64_t> seeds;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            EXPECT_FALSE(rows[i].failed()) << kind_name(kind) << ": " << rows[i].status;
            EXPECT_EQ(rows[i].grid_index, i / c.trial_count);
            EXPECT_EQ(rows[i].trial, i % c.trial_count);
            seeds.insert(rows[i].seed);
        }
        EXPECT_EQ(seeds.size(), rows.size()) << kind_name(kind);
    }
}

TEST(RunExperiment, ThreadCountDoesNotChangeReports) {
    for (const ExperimentKind kind : kAllKinds) {
        ExperimentConfig c = small_config(kind);
        c.threads = 1;
        const std::string one = format_report(run_experiment(c), ReportFormat::csv);
        c.threads = 4;
        EXPECT_EQ(format_report(run_experiment(c), ReportFormat::csv), one) << kind_name(kind);
    }
}

TEST(RunExperiment, PerTrialFailuresAreRecorded) {
    // A slab this thin leaves the perturbation sampler almost no acceptance volume.
    ExperimentConfig c = default_config(ExperimentKind::net_demo);
    c.k_grid = {3};
    c.delta_grid = {0.5};
    c.slab_epsilon = 1e-12;
    c.sphere_test_points = 10;
    c.random_test_points = 10;
    c.trial_count = 2;
    const auto rows = run_experiment(c);
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& row : rows) {
        EXPECT_TRUE(row.failed());
        EXPECT_NE(row.status.find("error:"), std::string::npos);
        EXPECT_TRUE(std::holds_alternative<std::monostate>(field(row, "centers")));
    }
    const std::string csv = format_report(rows, ReportFormat::csv);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(RunExperiment, RecoveryTrialMatchesRow) {
    const ExperimentConfig c = small_config(ExperimentKind::recovery_sweep);
    const auto rows = run_experiment(c);
    const RecoveryResult r = recovery_trial(c, 1, 1);
    const ReportRow& row = rows[1 * c.trial_count + 1];
    EXPECT_EQ(std::get<double>(field(row, "final_loss")), r.final_loss);
}

TEST(Report, OneRowCsvHasTwoLines) {
    ExperimentConfig c = small_config(ExperimentKind::collision_demo);
    c.k_grid = {2};
    c.trial_count = 1;
    const auto rows = run_experiment(c);
    const fs::path p = temp_path("one.csv");
    emit_report(rows, ReportFormat::csv, p);
    const std::string text = slurp(p);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
    EXPECT_EQ(text.substr(0, 36), "experiment,trial,seed,instance_seed,");
}

TEST(Report, EmptyRowsCreateNoFile) {
    const fs::path p = temp_path("empty.csv");
    fs::remove(p);
    EXPECT_THROW(emit_report({}, ReportFormat::csv, p), std::invalid_argument);
    EXPECT_FALSE(fs::exists(p));
}

TEST(Report, UnwritablePath) {
    ExperimentConfig c = small_config(ExperimentKind::collision_demo);
    const auto rows = run_experiment(c);
    EXPECT_THROW(emit_report(rows, ReportFormat::csv, "/nonexistent-dir/x/report.csv"), std::runtime_error);
}

TEST(Report, JsonRoundTripIsByteIdentical) {
    for (const ExperimentKind kind : kAllKinds) {
        const auto rows = run_experiment(small_config(kind));
        const std::string text = format_report(rows, ReportFormat::json);
        const auto parsed = nlohmann::ordered_json::parse(text);
        ASSERT_TRUE(parsed.is_array());
        EXPECT_EQ(parsed.size(), rows.size());
        for (const auto& record : parsed) {
            for (const auto& [key, value] : record.items()) {
                EXPECT_FALSE(value.is_object() || value.is_array()) << key;
            }
        }
        EXPECT_EQ(parsed.dump(2) + "\n", text) << kind_name(kind);
    }
}

TEST(Report, CsvFloatsRoundTrip) {
    const auto rows = run_experiment(small_config(ExperimentKind::wdc_sweep));
    const std::string csv = format_report(rows, ReportFormat::csv);
    std::istringstream in(csv);
    std::string header, line;
    std::getline(in, header);
    std::vector<std::string> names;
    {
        std::istringstream h(header);
        std::string cell;
        while (std::getline(h, cell, ',')) names.push_back(cell);
    }
    const auto col = std::find(names.begin(), names.end(), "max_deviation") - names.begin();
    for (const auto& row : rows) {
        std::getline(in, line);
        std::istringstream l(line);
        std::string cell;
        for (long i = 0; i <= col; ++i) std::getline(l, cell, ',');
        EXPECT_EQ(std::stod(cell), std::get<double>(field(row, "max_deviation")));
    }
}

TEST(Cli, ExitCodesAndDeterminism) {
    const std::string cli = GENPRIOR_CLI_PATH;
    const fs::path cfg = temp_path("cli.json");
    std::ofstream(cfg) << R"({"kind": "collision_demo", "k_grid": [1, 2], "trial_count": 2})";
    const fs::path a = temp_path("cli-a.csv"), b = temp_path("cli-b.csv");
    auto run = [&](const std::string& args) { return std::system((cli + " " + args + " > /dev/null 2>&1").c_str()); };
    auto exit_code = [](int status) { return WIFEXITED(status) ? WEXITSTATUS(status) : -1; };

    EXPECT_EQ(exit_code(run("collision --config " + cfg.string() + " --out " + a.string() + " --threads 1")), 0);
    EXPECT_EQ(exit_code(run("collision --config " + cfg.string() + " --out " + b.string() + " --threads 4")), 0);
    EXPECT_EQ(slurp(a), slurp(b));
    EXPECT_EQ(exit_code(run("collision --config " + cfg.string() + " --seed 9 --format json --out " + b.string())), 0);
    EXPECT_NO_THROW(nlohmann::json::parse(slurp(b)));

    const fs::path bad = temp_path("cli-bad.json");
    std::ofstream(bad) << R"({"kind": "collision_demo", "k_grid": []})";
    EXPECT_EQ(exit_code(run("collision --config " + bad.string())), 1);
    EXPECT_EQ(exit_code(run("rric --config " + cfg.string())), 1);  // kind mismatch

    const fs::path failing = temp_path("cli-fail.json");
    std::ofstream(failing) << R"({"kind": "net_demo", "k_grid": [3], "delta_grid": [0.5], "slab_epsilon": 1e-12,
                                  "sphere_test_points": 10, "random_test_points": 10})";
    EXPECT_EQ(exit_code(run("net-demo --config " + failing.string() + " --out " + a.string())), 2);
}
