#include "genprior/harness.hpp"

#include "genprior/linalg.hpp"
#include "genprior/network.hpp"
#include "genprior/parallel.hpp"
#include "genprior/pseudolip.hpp"
#include "genprior/rng.hpp"
#include "genprior/wdc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace genprior::harness {
namespace {

using Fields = std::vector<Field>;

std::int64_t as_int(Eigen::Index v) { return static_cast<std::int64_t>(v); }
std::uint64_t as_count(std::size_t v) { return static_cast<std::uint64_t>(v); }

std::uint64_t stream(std::uint64_t parent, std::string_view label, std::uint64_t index = 0) {
    return derive_seed(parent, tag_of(label), index);
}

std::string_view model_name(LandscapeModel m) {
    switch (m) {
        case LandscapeModel::linear:
            return "linear";
        case LandscapeModel::phaseless:
            return "phaseless";
        case LandscapeModel::one_bit:
            return "one_bit";
    }
    return "linear";
}

// Grid cells are enumerated with the last listed axis varying fastest.
struct Axes {
    std::vector<std::size_t> sizes;

    std::size_t total() const {
        std::size_t t = 1;
        for (const std::size_t s : sizes) t *= s;
        return t;
    }
    std::vector<std::size_t> split(std::size_t g) const {
        std::vector<std::size_t> idx(sizes.size());
        for (std::size_t a = sizes.size(); a-- > 0;) {
            idx[a] = g % sizes[a];
            g /= sizes[a];
        }
        return idx;
    }
};

Axes axes_of(const ExperimentConfig& c) {
    switch (c.kind) {
        case ExperimentKind::wdc_sweep:
            return {{c.n_grid.size()}};
        case ExperimentKind::expansion_phase:
            return {{c.k_grid.size(), c.n_grid.size(), c.epsilon_grid.size()}};
        case ExperimentKind::collision_demo:
            return {{c.k_grid.size()}};
        case ExperimentKind::net_demo:
            return {{c.k_grid.size(), c.delta_grid.size()}};
        case ExperimentKind::recovery_sweep:
            return {{c.m_grid.size(), c.noise_grid.size()}};
        case ExperimentKind::rric_sweep:
        case ExperimentKind::landscape:
            return {{c.m_grid.size()}};
    }
    return {};
}

Fields parameters(const ExperimentConfig& c, std::size_t g) {
    const std::vector<std::size_t> i = axes_of(c).split(g);
    switch (c.kind) {
        case ExperimentKind::wdc_sweep:
            return {{"k", as_int(c.k)}, {"n", as_int(c.n_grid[i[0]])}, {"normalized", c.normalized}};
        case ExperimentKind::expansion_phase:
            return {{"k", as_int(c.k_grid[i[0]])}, {"n", as_int(c.n_grid[i[1]])}, {"epsilon", c.epsilon_grid[i[2]]}};
        case ExperimentKind::collision_demo:
            return {{"k", as_int(c.k_grid[i[0]])}, {"m", as_int(2 * c.k_grid[i[0]] - 1)}};
        case ExperimentKind::net_demo:
            return {{"k", as_int(c.k_grid[i[0]])}, {"delta", c.delta_grid[i[1]]}, {"slab_epsilon", c.slab_epsilon}};
        case ExperimentKind::recovery_sweep:
            return {{"m", as_int(c.m_grid[i[0]])},
                    {"noise_level", c.noise_grid[i[1]]},
                    {"noise_kind", std::string(c.noise_kind == NoiseKind::fixed ? "fixed" : "gaussian")}};
        case ExperimentKind::rric_sweep:
            return {{"m", as_int(c.m_grid[i[0]])}};
        case ExperimentKind::landscape:
            return {{"m", as_int(c.m_grid[i[0]])}, {"model", std::string(model_name(c.model))}};
    }
    return {};
}

std::vector<std::string> output_names(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::wdc_sweep:
            return {"max_deviation", "pairs_tested", "in_theta"};
        case ExperimentKind::expansion_phase:
            return {"max_deviation", "rejections", "exceeds_threshold"};
        case ExperimentKind::collision_demo:
            return {"rank_deficient", "max_forward_gap", "distance", "inverse_row_bound", "collision_verified"};
        case ExperimentKind::net_demo:
            return {"centers",        "gamma",         "gamma_standard_error", "size_bound",
                    "within_bound",   "test_points",   "test_points_covered",  "random_points",
                    "random_covered", "quarter_disjoint"};
        case ExperimentKind::recovery_sweep:
            return {"relative_error", "absolute_error", "final_loss", "iterations", "converged", "diverged",
                    "noise_norm", "signal_norm", "step_size", "mean_squared_error"};
        case ExperimentKind::rric_sweep:
            return {"max_ratio_deviation", "quadruples_tested", "quadruples_skipped"};
        case ExperimentKind::landscape:
            return {"starts", "clusters", "fraction_truth", "fraction_truth_or_negative", "negative_scale",
                    "largest_cluster_kind"};
    }
    return {};
}

// ---------------------------------------------------------------------------

Fields run_wdc(const ExperimentConfig& c, Eigen::Index n, std::uint64_t instance, std::uint64_t row) {
    Rng rng(stream(row, "matrix"));
    const Matrix w = gaussian_matrix(rng, n, c.k);
    const auto pairs = sample_direction_pairs(c.k, c.pairs, stream(instance, "pairs"));
    const WdcReport report = wdc_deviation(w, pairs, c.normalized);
    return {{"max_deviation", report.max_deviation}, {"pairs_tested", as_count(report.pairs_tested)},
            {"in_theta", in_theta(w)}};
}

Fields run_expansion(const ExperimentConfig& c, Eigen::Index k, Eigen::Index n, double epsilon,
                     std::uint64_t instance) {
    const ConcentrationResult r =
        uniform_concentration_experiment(k, n, epsilon, 1, c.pair_trials, stream(instance, "concentration"), c.threshold);
    const ConcentrationTrial& t = r.trials.front();
    return {{"max_deviation", t.max_deviation}, {"rejections", as_count(t.rejections)},
            {"exceeds_threshold", t.max_deviation > c.threshold}};
}

Fields run_collision(Eigen::Index k, std::uint64_t row) {
    Rng rng(stream(row, "matrix"));
    const Matrix w = gaussian_matrix(rng, 2 * k - 1, k);
    const Collision col = construct_collision(w);
    const GenerativeNetwork g({w});
    const Vector gx = forward(g, col.x);
    const Vector gy = forward(g, col.y);
    const double gap = (gx - gy).cwiseAbs().maxCoeff();
    const double distance = (col.x - col.y).norm();
    const double inv_b = 1.0 / col.row_norm_bound;
    const bool verified = gap <= 1e-9 && (col.rank_deficient ? distance > 0.0 : distance >= inv_b - 1e-9);
    return {{"rank_deficient", col.rank_deficient}, {"max_forward_gap", gap}, {"distance", distance},
            {"inverse_row_bound", inv_b}, {"collision_verified", verified}};
}

Fields run_net(const ExperimentConfig& c, Eigen::Index k, double delta, std::uint64_t row) {
    Rng rng(stream(row, "slab"));
    const PseudoBallSpec spec(Slab{uniform_sphere(rng, k), c.slab_epsilon});
    const AsphericalNet net = build_aspherical_net(spec, delta, c.sphere_test_points, stream(row, "net"));

    const double gamma_low = net.gamma - 3.0 * net.gamma_standard_error;
    const double bound = gamma_low > 0.0 ? net_size_bound(gamma_low, delta, k) : std::numeric_limits<double>::infinity();

    Rng test_rng(stream(row, "test-points"));
    std::size_t covered = 0;
    for (std::size_t i = 0; i < c.random_test_points; ++i) {
        if (net_covers(net, spec, uniform_sphere(test_rng, k))) ++covered;
    }
    return {{"centers", as_count(net.centers.size())},
            {"gamma", net.gamma},
            {"gamma_standard_error", net.gamma_standard_error},
            {"size_bound", bound},
            {"within_bound", static_cast<double>(net.centers.size()) <= bound},
            {"test_points", as_count(net.sphere_test_points)},
            {"test_points_covered", as_count(net.covered_test_points)},
            {"random_points", as_count(c.random_test_points)},
            {"random_covered", as_count(covered)},
            {"quarter_disjoint", net_quarter_sets_disjoint(net, spec)}};
}

struct RecoveryInstance {
    GenerativeNetwork net;
    Vector x_star;
    Matrix a;
    Vector noise;
};

// The instance of a trial is shared across the m and noise grids: A for a smaller m is the
// leading block of the largest A (rescaled), and noise vectors are nested the same way.
RecoveryInstance recovery_instance(const ExperimentConfig& c, Eigen::Index m, double level, std::uint64_t instance,
                                   std::uint64_t draw = 0) {
    const Eigen::Index m_max = *std::max_element(c.m_grid.begin(), c.m_grid.end());
    RecoveryInstance inst{sample_gaussian_network(c.layer_dims, VarianceRule::one_over_rows, stream(instance, "net")),
                          Vector(), Matrix(), Vector()};
    Rng truth_rng(stream(instance, "truth"));
    inst.x_star = gaussian_vector(truth_rng, inst.net.input_dim());

    Rng a_rng(stream(instance, "measurements"));
    const Matrix a_full = gaussian_matrix(a_rng, m_max, inst.net.output_dim());
    inst.a = a_full.topRows(m) / std::sqrt(static_cast<double>(m));

    if (c.noise_kind == NoiseKind::fixed) {
        // Same unit direction for every level of a given m.
        Rng e_rng(stream(instance, "noise-direction", static_cast<std::uint64_t>(m)));
        const Vector direction = uniform_sphere(e_rng, m);
        const double signal = matvec(inst.a, forward(inst.net, inst.x_star)).norm();
        inst.noise = level * signal * direction;
    } else {
        // e ~ N(0, level^2 / m) per entry, i.e. N(0, level^2) noise for the unnormalized A.
        Rng e_rng(stream(instance, "noise", draw));
        const Vector full = gaussian_vector(e_rng, m_max);
        inst.noise = full.head(m) * (level / std::sqrt(static_cast<double>(m)));
    }
    return inst;
}

RecoveryResult run_recovery_instance(const ExperimentConfig& c, const RecoveryInstance& inst, std::uint64_t instance) {
    const NoisyLinearMeasurement model{inst.a, inst.noise};
    const Vector y = measure(model, inst.net, inst.x_star);
    RecoveryConfig rc;
    rc.step_size = c.step_size > 0.0 ? c.step_size : c.step_scale * default_step_size(inst.net, inst.a);
    rc.max_iterations = c.max_iterations;
    rc.gradient_tolerance = c.gradient_tolerance;
    rc.negation_check = c.negation_check;
    rc.restarts = c.restarts;
    rc.init_seed = stream(instance, "init");
    return recover(inst.net, model, y, rc, inst.x_star);
}

Fields run_recovery(const ExperimentConfig& c, Eigen::Index m, double level, std::uint64_t instance) {
    const RecoveryInstance inst = recovery_instance(c, m, level, instance);
    const RecoveryResult r = run_recovery_instance(c, inst, instance);
    // Draw 0 is the reported run; further draws only feed the squared-error average.
    double squared_error = std::pow(r.absolute_error.value_or(0.0), 2);
    for (std::size_t draw = 1; draw < c.noise_draws; ++draw) {
        const RecoveryResult extra = run_recovery_instance(c, recovery_instance(c, m, level, instance, draw), instance);
        squared_error += std::pow(extra.absolute_error.value_or(0.0), 2);
    }
    const FieldValue relative = r.relative_error ? FieldValue(*r.relative_error) : FieldValue(std::monostate{});
    return {{"relative_error", relative},
            {"absolute_error", r.absolute_error.value_or(0.0)},
            {"final_loss", r.final_loss},
            {"iterations", as_count(r.iterations)},
            {"converged", r.converged},
            {"diverged", r.diverged},
            {"noise_norm", inst.noise.norm()},
            {"signal_norm", matvec(inst.a, forward(inst.net, inst.x_star)).norm()},
            {"step_size", r.step_size},
            {"mean_squared_error", squared_error / static_cast<double>(c.noise_draws)}};
}

Fields run_rric(const ExperimentConfig& c, Eigen::Index m, std::uint64_t instance) {
    const GenerativeNetwork net =
        sample_gaussian_network(c.layer_dims, VarianceRule::one_over_rows, stream(instance, "net"));
    Rng a_rng(stream(instance, "measurements", static_cast<std::uint64_t>(m)));
    const Matrix a = gaussian_matrix(a_rng, m, net.output_dim(), 1.0 / std::sqrt(static_cast<double>(m)));
    const RricReport r = rric_deviation(a, net, c.quadruples, stream(instance, "quadruples"));
    return {{"max_ratio_deviation", r.max_ratio_deviation}, {"quadruples_tested", as_count(r.quadruples_tested)},
            {"quadruples_skipped", as_count(r.quadruples_skipped)}};
}

Fields run_landscape(const ExperimentConfig& c, Eigen::Index m, std::uint64_t instance) {
    const GenerativeNetwork net =
        sample_gaussian_network(c.layer_dims, VarianceRule::one_over_rows, stream(instance, "net"));
    Rng truth_rng(stream(instance, "truth"));
    const Vector x_star = gaussian_vector(truth_rng, net.input_dim());
    Rng a_rng(stream(instance, "measurements", static_cast<std::uint64_t>(m)));
    const Matrix a = gaussian_matrix(a_rng, m, net.output_dim(), 1.0 / std::sqrt(static_cast<double>(m)));

    MeasurementModel model = LinearMeasurement{a};
    if (c.model == LandscapeModel::phaseless) model = PhaselessMeasurement{a};
    if (c.model == LandscapeModel::one_bit) model = OneBitMeasurement{a, Vector::Zero(m), Vector::Zero(m)};
    const Vector y = measure(model, net, x_star);

    LandscapeOptions options;
    options.mode = c.mode;
    options.restarts = c.restarts;
    options.grid_points_per_axis = c.grid_points;
    options.grid_extent = c.grid_extent;
    options.descent.step_size = c.step_size;
    options.descent.max_iterations = c.max_iterations;
    options.descent.gradient_tolerance = c.gradient_tolerance;
    options.descent.negation_check = c.negation_check;
    const LandscapeSummary s = landscape_scan(net, model, y, options, stream(instance, "starts"), x_star);

    const Cluster* largest = nullptr;
    for (const Cluster& cl : s.clusters) {
        if (!largest || cl.size > largest->size) largest = &cl;
    }
    return {{"starts", as_count(s.starts)},
            {"clusters", as_count(s.clusters.size())},
            {"fraction_truth", s.fraction_truth},
            {"fraction_truth_or_negative", s.fraction_truth_or_negative},
            {"negative_scale", s.negative_scale ? FieldValue(*s.negative_scale) : FieldValue(std::monostate{})},
            {"largest_cluster_kind", std::string(largest ? cluster_kind_name(largest->kind) : "none")}};
}

Fields run_cell(const ExperimentConfig& c, std::size_t g, std::uint64_t instance, std::uint64_t row) {
    const std::vector<std::size_t> i = axes_of(c).split(g);
    switch (c.kind) {
        case ExperimentKind::wdc_sweep:
            return run_wdc(c, c.n_grid[i[0]], instance, row);
        case ExperimentKind::expansion_phase:
            return run_expansion(c, c.k_grid[i[0]], c.n_grid[i[1]], c.epsilon_grid[i[2]], instance);
        case ExperimentKind::collision_demo:
            return run_collision(c.k_grid[i[0]], row);
        case ExperimentKind::net_demo:
            return run_net(c, c.k_grid[i[0]], c.delta_grid[i[1]], row);
        case ExperimentKind::recovery_sweep:
            return run_recovery(c, c.m_grid[i[0]], c.noise_grid[i[1]], instance);
        case ExperimentKind::rric_sweep:
            return run_rric(c, c.m_grid[i[0]], instance);
        case ExperimentKind::landscape:
            return run_landscape(c, c.m_grid[i[0]], instance);
    }
    return {};
}

}  // namespace

std::uint64_t instance_seed(const ExperimentConfig& config, std::size_t trial) {
    return derive_seed(config.master_seed, tag_of(kind_name(config.kind)), trial);
}

std::uint64_t row_seed(std::uint64_t instance, std::size_t grid_index) {
    return derive_seed(instance, tag_of("grid"), grid_index);
}

std::vector<ReportRow> run_experiment(const ExperimentConfig& config) {
    validate(config);
    const std::size_t cells = axes_of(config).total();
    const std::size_t trials = config.trial_count;
    const std::vector<std::string> names = output_names(config.kind);

    std::vector<ReportRow> rows(cells * trials);
    parallel_for(rows.size(), config.threads, [&](std::size_t j) {
        ReportRow& row = rows[j];
        row.experiment = std::string(kind_name(config.kind));
        row.grid_index = j / trials;
        row.trial = j % trials;
        row.instance_seed = instance_seed(config, row.trial);
        row.seed = row_seed(row.instance_seed, row.grid_index);
        row.parameters = parameters(config, row.grid_index);
        try {
            row.outputs = run_cell(config, row.grid_index, row.instance_seed, row.seed);
        } catch (const std::exception& e) {
            row.status = std::string("error: ") + e.what();
            row.outputs.clear();
            for (const std::string& name : names) row.outputs.push_back({name, std::monostate{}});
        }
    });
    return rows;
}

RecoveryResult recovery_trial(const ExperimentConfig& config, std::size_t grid_index, std::size_t trial) {
    require(config.kind == ExperimentKind::recovery_sweep, "recovery_trial needs a recovery_sweep config");
    validate(config);
    require(grid_index < axes_of(config).total() && trial < config.trial_count, "recovery_trial: cell out of range");
    const std::vector<std::size_t> i = axes_of(config).split(grid_index);
    const std::uint64_t instance = instance_seed(config, trial);
    const RecoveryInstance inst = recovery_instance(config, config.m_grid[i[0]], config.noise_grid[i[1]], instance);
    return run_recovery_instance(config, inst, instance);
}

}  // namespace genprior::harness
