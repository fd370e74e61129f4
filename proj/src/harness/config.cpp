#include "genprior/harness.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace genprior::harness {
namespace {

using nlohmann::json;

constexpr std::array<std::pair<ExperimentKind, std::string_view>, 7> kKindNames{{
    {ExperimentKind::wdc_sweep, "wdc_sweep"},
    {ExperimentKind::recovery_sweep, "recovery_sweep"},
    {ExperimentKind::expansion_phase, "expansion_phase"},
    {ExperimentKind::collision_demo, "collision_demo"},
    {ExperimentKind::net_demo, "net_demo"},
    {ExperimentKind::rric_sweep, "rric_sweep"},
    {ExperimentKind::landscape, "landscape"},
}};

const std::set<std::string>& allowed_keys(ExperimentKind kind) {
    static const std::set<std::string> wdc{"k", "n_grid", "pairs", "normalized"};
    static const std::set<std::string> recovery{"layer_dims", "m_grid",         "noise_grid",         "noise_kind",
                                                "noise_draws", "restarts",   "step_size",      "step_scale",         "max_iterations",
                                                "gradient_tolerance", "negation_check"};
    static const std::set<std::string> expansion{"k_grid", "n_grid", "epsilon_grid", "pair_trials", "threshold"};
    static const std::set<std::string> collision{"k_grid"};
    static const std::set<std::string> net{"k_grid", "delta_grid", "slab_epsilon", "sphere_test_points",
                                           "random_test_points"};
    static const std::set<std::string> rric{"layer_dims", "m_grid", "quadruples"};
    static const std::set<std::string> landscape{"layer_dims", "m_grid",         "model",
                                                 "mode",       "restarts",       "grid_points",
                                                 "grid_extent", "step_size",     "max_iterations",
                                                 "gradient_tolerance", "negation_check"};
    switch (kind) {
        case ExperimentKind::wdc_sweep:
            return wdc;
        case ExperimentKind::recovery_sweep:
            return recovery;
        case ExperimentKind::expansion_phase:
            return expansion;
        case ExperimentKind::collision_demo:
            return collision;
        case ExperimentKind::net_demo:
            return net;
        case ExperimentKind::rric_sweep:
            return rric;
        case ExperimentKind::landscape:
            return landscape;
    }
    return wdc;
}

[[noreturn]] void fail(const std::string& key, const std::string& what) {
    throw ConfigError("config key '" + key + "': " + what);
}

std::uint64_t get_unsigned(const json& j, const std::string& key) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
        fail(key, "expected a non-negative integer");
    }
    return j.get<std::uint64_t>();
}

double get_double(const json& j, const std::string& key) {
    if (!j.is_number()) fail(key, "expected a number");
    return j.get<double>();
}

bool get_bool(const json& j, const std::string& key) {
    if (!j.is_boolean()) fail(key, "expected true or false");
    return j.get<bool>();
}

std::string get_string(const json& j, const std::string& key) {
    if (!j.is_string()) fail(key, "expected a string");
    return j.get<std::string>();
}

std::vector<Eigen::Index> get_index_list(const json& j, const std::string& key) {
    if (!j.is_array()) fail(key, "expected an array of integers");
    std::vector<Eigen::Index> out;
    for (const json& e : j) out.push_back(static_cast<Eigen::Index>(get_unsigned(e, key)));
    return out;
}

std::vector<double> get_double_list(const json& j, const std::string& key) {
    if (!j.is_array()) fail(key, "expected an array of numbers");
    std::vector<double> out;
    for (const json& e : j) out.push_back(get_double(e, key));
    return out;
}

void apply_key(ExperimentConfig& c, const std::string& key, const json& v) {
    if (key == "master_seed") c.master_seed = get_unsigned(v, key);
    else if (key == "trial_count") c.trial_count = get_unsigned(v, key);
    else if (key == "threads") c.threads = static_cast<unsigned>(get_unsigned(v, key));
    else if (key == "k") c.k = static_cast<Eigen::Index>(get_unsigned(v, key));
    else if (key == "k_grid") c.k_grid = get_index_list(v, key);
    else if (key == "n_grid") c.n_grid = get_index_list(v, key);
    else if (key == "pairs") c.pairs = get_unsigned(v, key);
    else if (key == "normalized") c.normalized = get_bool(v, key);
    else if (key == "epsilon_grid") c.epsilon_grid = get_double_list(v, key);
    else if (key == "pair_trials") c.pair_trials = get_unsigned(v, key);
    else if (key == "threshold") c.threshold = get_double(v, key);
    else if (key == "delta_grid") c.delta_grid = get_double_list(v, key);
    else if (key == "slab_epsilon") c.slab_epsilon = get_double(v, key);
    else if (key == "sphere_test_points") c.sphere_test_points = get_unsigned(v, key);
    else if (key == "random_test_points") c.random_test_points = get_unsigned(v, key);
    else if (key == "layer_dims") c.layer_dims = get_index_list(v, key);
    else if (key == "m_grid") c.m_grid = get_index_list(v, key);
    else if (key == "noise_grid") c.noise_grid = get_double_list(v, key);
    else if (key == "noise_kind") {
        const std::string s = get_string(v, key);
        if (s == "fixed") c.noise_kind = NoiseKind::fixed;
        else if (s == "gaussian") c.noise_kind = NoiseKind::gaussian;
        else fail(key, "expected \"fixed\" or \"gaussian\"");
    } else if (key == "noise_draws") c.noise_draws = get_unsigned(v, key);
    else if (key == "restarts") c.restarts = get_unsigned(v, key);
    else if (key == "step_size") c.step_size = get_double(v, key);
    else if (key == "step_scale") c.step_scale = get_double(v, key);
    else if (key == "max_iterations") c.max_iterations = get_unsigned(v, key);
    else if (key == "gradient_tolerance") c.gradient_tolerance = get_double(v, key);
    else if (key == "negation_check") c.negation_check = get_bool(v, key);
    else if (key == "quadruples") c.quadruples = get_unsigned(v, key);
    else if (key == "model") {
        const std::string s = get_string(v, key);
        if (s == "linear") c.model = LandscapeModel::linear;
        else if (s == "phaseless") c.model = LandscapeModel::phaseless;
        else if (s == "one_bit") c.model = LandscapeModel::one_bit;
        else fail(key, "expected \"linear\", \"phaseless\" or \"one_bit\"");
    } else if (key == "mode") {
        const std::string s = get_string(v, key);
        if (s == "multistart") c.mode = LandscapeMode::multistart;
        else if (s == "grid") c.mode = LandscapeMode::grid;
        else fail(key, "expected \"multistart\" or \"grid\"");
    } else if (key == "grid_points") c.grid_points = get_unsigned(v, key);
    else if (key == "grid_extent") c.grid_extent = get_double(v, key);
    else fail(key, "unknown key");
}

template <typename T>
void require_nonempty_positive(const std::vector<T>& grid, const std::string& key) {
    if (grid.empty()) fail(key, "grid must be nonempty");
    for (const T& v : grid) {
        if (!(v > T{0})) fail(key, "entries must be positive");
    }
}

void require_positive(double v, const std::string& key) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(key, "must be positive and finite");
}

void require_count(std::size_t v, const std::string& key) {
    if (v < 1) fail(key, "must be at least 1");
}

void validate_network_dims(const ExperimentConfig& c) {
    require_nonempty_positive(c.layer_dims, "layer_dims");
    if (c.layer_dims.size() < 2) fail("layer_dims", "needs at least an input and an output width");
}

}  // namespace

std::string_view kind_name(ExperimentKind kind) {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "unknown";
}

std::optional<ExperimentKind> parse_kind(std::string_view name) {
    for (const auto& [k, n] : kKindNames) {
        if (n == name) return k;
    }
    return std::nullopt;
}

ExperimentConfig default_config(ExperimentKind kind) {
    ExperimentConfig c;
    c.kind = kind;
    switch (kind) {
        case ExperimentKind::wdc_sweep:
            break;
        case ExperimentKind::expansion_phase:
            c.k_grid = {8};
            c.n_grid = {80, 1600};
            break;
        case ExperimentKind::collision_demo:
            c.k_grid = {2, 3, 4, 5, 6, 7, 8};
            break;
        case ExperimentKind::net_demo:
            c.k_grid = {1, 2, 3};
            break;
        case ExperimentKind::recovery_sweep:
            break;
        case ExperimentKind::rric_sweep:
            c.m_grid = {10, 200};
            break;
        case ExperimentKind::landscape:
            c.layer_dims = {2, 20, 50};
            c.m_grid = {50};
            c.restarts = 200;
            c.max_iterations = 5000;
            c.negation_check = false;
            break;
    }
    return c;
}

void validate(const ExperimentConfig& c) {
    require_count(c.trial_count, "trial_count");
    switch (c.kind) {
        case ExperimentKind::wdc_sweep:
            if (c.k < 1) fail("k", "must be at least 1");
            require_nonempty_positive(c.n_grid, "n_grid");
            require_count(c.pairs, "pairs");
            break;
        case ExperimentKind::expansion_phase:
            require_nonempty_positive(c.k_grid, "k_grid");
            require_nonempty_positive(c.n_grid, "n_grid");
            require_nonempty_positive(c.epsilon_grid, "epsilon_grid");
            require_count(c.pair_trials, "pair_trials");
            for (const auto k : c.k_grid) {
                for (const auto n : c.n_grid) {
                    if (n < k) fail("n_grid", "every n must be at least every k");
                }
            }
            if (!std::isfinite(c.threshold)) fail("threshold", "must be finite");
            break;
        case ExperimentKind::collision_demo:
            require_nonempty_positive(c.k_grid, "k_grid");
            break;
        case ExperimentKind::net_demo:
            require_nonempty_positive(c.k_grid, "k_grid");
            for (const auto k : c.k_grid) {
                if (k > 6) fail("k_grid", "net construction supports k <= 6");
            }
            require_nonempty_positive(c.delta_grid, "delta_grid");
            for (const double d : c.delta_grid) {
                if (d >= 1.0) fail("delta_grid", "entries must lie in (0, 1)");
            }
            require_positive(c.slab_epsilon, "slab_epsilon");
            require_count(c.random_test_points, "random_test_points");
            break;
        case ExperimentKind::recovery_sweep:
            validate_network_dims(c);
            require_nonempty_positive(c.m_grid, "m_grid");
            if (c.noise_grid.empty()) fail("noise_grid", "grid must be nonempty");
            for (const double v : c.noise_grid) {
                if (!(v >= 0.0) || !std::isfinite(v)) fail("noise_grid", "entries must be non-negative");
            }
            require_count(c.noise_draws, "noise_draws");
            if (c.noise_draws > 1 && c.noise_kind == NoiseKind::fixed) {
                fail("noise_draws", "fixed noise is deterministic; use noise_kind \"gaussian\"");
            }
            require_count(c.restarts, "restarts");
            if (!(c.step_size >= 0.0)) fail("step_size", "must be non-negative (0 selects the default)");
            require_positive(c.step_scale, "step_scale");
            require_count(c.max_iterations, "max_iterations");
            require_positive(c.gradient_tolerance, "gradient_tolerance");
            break;
        case ExperimentKind::rric_sweep:
            validate_network_dims(c);
            require_nonempty_positive(c.m_grid, "m_grid");
            require_count(c.quadruples, "quadruples");
            break;
        case ExperimentKind::landscape:
            validate_network_dims(c);
            require_nonempty_positive(c.m_grid, "m_grid");
            if (c.mode == LandscapeMode::grid) {
                if (c.layer_dims.front() > 3) fail("mode", "grid mode needs a latent dimension of at most 3");
                require_count(c.grid_points, "grid_points");
                require_positive(c.grid_extent, "grid_extent");
            } else {
                require_count(c.restarts, "restarts");
            }
            if (!(c.step_size >= 0.0)) fail("step_size", "must be non-negative (0 selects the default)");
            require_count(c.max_iterations, "max_iterations");
            require_positive(c.gradient_tolerance, "gradient_tolerance");
            break;
    }
}

ExperimentConfig parse_config(std::string_view text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config must be a JSON object");
    if (!root.contains("kind")) throw ConfigError("config key 'kind' is required");
    const auto kind = parse_kind(get_string(root["kind"], "kind"));
    if (!kind) fail("kind", "unknown experiment kind");

    ExperimentConfig c = default_config(*kind);
    const std::set<std::string>& specific = allowed_keys(*kind);
    for (const auto& [key, value] : root.items()) {
        if (key == "kind") continue;
        const bool common = key == "master_seed" || key == "trial_count" || key == "threads";
        if (!common && !specific.contains(key)) {
            fail(key, "not valid for kind " + std::string(kind_name(*kind)));
        }
        apply_key(c, key, value);
    }
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

}  // namespace genprior::harness
