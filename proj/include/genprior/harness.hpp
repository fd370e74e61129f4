#pragma once

#include "genprior/recover.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace genprior::harness {

enum class ExperimentKind { wdc_sweep, recovery_sweep, expansion_phase, collision_demo, net_demo, rric_sweep, landscape };

std::string_view kind_name(ExperimentKind kind);
std::optional<ExperimentKind> parse_kind(std::string_view name);

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class NoiseKind { fixed, gaussian };
enum class LandscapeModel { linear, phaseless, one_bit };

/// Declarative sweep description. Only the keys relevant to `kind` may appear in a config file;
/// see docs/config.md for the grammar and per-kind defaults.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::wdc_sweep;
    std::uint64_t master_seed = 0;
    std::size_t trial_count = 1;
    unsigned threads = 0;  ///< 0 = hardware concurrency

    // wdc_sweep / expansion_phase / collision_demo / net_demo
    Eigen::Index k = 10;
    std::vector<Eigen::Index> k_grid{8};
    std::vector<Eigen::Index> n_grid{20, 100, 1000};
    std::size_t pairs = 500;
    bool normalized = true;
    std::vector<double> epsilon_grid{0.1};
    std::size_t pair_trials = 50;
    double threshold = 0.0;

    // net_demo
    std::vector<double> delta_grid{0.3, 0.5};
    double slab_epsilon = 0.25;
    std::size_t sphere_test_points = 0;  ///< 0 selects 10^4 k
    std::size_t random_test_points = 10000;

    // recovery_sweep / rric_sweep / landscape
    std::vector<Eigen::Index> layer_dims{5, 50, 250};
    std::vector<Eigen::Index> m_grid{100};
    std::vector<double> noise_grid{0.0};
    NoiseKind noise_kind = NoiseKind::fixed;
    std::size_t noise_draws = 1;  ///< gaussian noise only: independent draws averaged into mean_squared_error
    std::size_t restarts = 10;
    double step_size = 0.0;
    double step_scale = 1.0;
    std::size_t max_iterations = 20000;
    double gradient_tolerance = 1e-9;
    bool negation_check = true;
    std::size_t quadruples = 200;
    LandscapeModel model = LandscapeModel::linear;
    LandscapeMode mode = LandscapeMode::multistart;
    std::size_t grid_points = 20;
    double grid_extent = 3.0;
};

/// Parses and validates JSON text. Throws ConfigError naming the offending key.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Defaults for a kind, as used when no config file is given.
ExperimentConfig default_config(ExperimentKind kind);
void validate(const ExperimentConfig& config);

using FieldValue = std::variant<std::monostate, bool, std::int64_t, std::uint64_t, double, std::string>;

struct Field {
    std::string name;
    FieldValue value;
};

/// One flat record per (grid point, trial).
struct ReportRow {
    std::string experiment;
    std::size_t grid_index = 0;
    std::size_t trial = 0;
    std::uint64_t seed = 0;           ///< unique per row
    std::uint64_t instance_seed = 0;  ///< shared by all grid points of one trial
    std::vector<Field> parameters;
    std::vector<Field> outputs;
    std::string status = "ok";  ///< "ok" or "error: <message>"

    bool failed() const { return status != "ok"; }
};

/// Seed of the problem instance behind trial `trial`; grid points of the same trial reuse it.
std::uint64_t instance_seed(const ExperimentConfig& config, std::size_t trial);
std::uint64_t row_seed(std::uint64_t instance, std::size_t grid_index);

/// Runs every (grid point, trial) pair. Per-trial exceptions become error rows.
/// Output is sorted by (grid index, trial) and independent of `config.threads`.
std::vector<ReportRow> run_experiment(const ExperimentConfig& config);

/// Re-runs one recovery_sweep cell and returns its full result (for loss-trace dumps).
RecoveryResult recovery_trial(const ExperimentConfig& config, std::size_t grid_index, std::size_t trial);

enum class ReportFormat { csv, json };

std::optional<ReportFormat> parse_format(std::string_view name);
std::string format_report(const std::vector<ReportRow>& rows, ReportFormat format);
/// Writes the report; throws std::invalid_argument on empty rows (no file is created) and
/// std::runtime_error when the path cannot be written.
void emit_report(const std::vector<ReportRow>& rows, ReportFormat format, const std::filesystem::path& path);

}  // namespace genprior::harness
