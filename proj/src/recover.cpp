#include "genprior/recover.hpp"

#include "genprior/linalg.hpp"
#include "genprior/rng.hpp"
#include "genprior/wdc.hpp"

#include <json.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace genprior {

const Matrix& measurement_matrix(const MeasurementModel& model) {
    return std::visit([](const auto& m) -> const Matrix& { return m.a; }, model);
}

Vector noise_vector(const MeasurementModel& model) {
    const Eigen::Index m = measurement_matrix(model).rows();
    if (const auto* noisy = std::get_if<NoisyLinearMeasurement>(&model)) return noisy->e;
    if (const auto* gauss = std::get_if<GaussianNoiseMeasurement>(&model)) {
        require(gauss->sigma >= 0.0, "gaussian noise: sigma must be non-negative");
        Rng rng(gauss->seed);
        return gaussian_vector(rng, m, gauss->sigma);
    }
    return Vector::Zero(m);
}

Vector measure(const MeasurementModel& model, const GenerativeNetwork& net, const Vector& x_star) {
    const Matrix& a = measurement_matrix(model);
    require_dims(a.cols() == net.output_dim(), "measure: A has " + std::to_string(a.cols()) +
                                                   " columns, network output has " +
                                                   std::to_string(net.output_dim()));
    const Vector signal = matvec(a, forward(net, x_star));

    if (std::holds_alternative<PhaselessMeasurement>(model)) return signal.cwiseAbs();
    if (const auto* one_bit = std::get_if<OneBitMeasurement>(&model)) {
        require_dims(one_bit->tau.size() == a.rows() && one_bit->xi.size() == a.rows(),
                     "one-bit: tau and xi must have m entries");
        Vector y(a.rows());
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            y[i] = signal[i] + one_bit->xi[i] + one_bit->tau[i] >= 0.0 ? 1.0 : -1.0;
        }
        return y;
    }
    const Vector e = noise_vector(model);
    require_dims(e.size() == a.rows(), "measure: noise vector must have m entries");
    return signal + e;
}

namespace {

struct ForwardPass {
    std::vector<std::vector<double>> masks;
    Vector output;
};

ForwardPass forward_pass(const GenerativeNetwork& net, const Vector& x) {
    require_dims(x.size() == net.input_dim(), "latent vector has the wrong length");
    ForwardPass pass;
    Vector h = x;
    for (const Matrix& w : net.layers()) {
        h = matvec(w, h);
        std::vector<double> mask(static_cast<std::size_t>(h.size()));
        for (Eigen::Index i = 0; i < h.size(); ++i) {
            const bool active = h[i] > 0.0;
            mask[static_cast<std::size_t>(i)] = active ? 1.0 : 0.0;
            if (!active) h[i] = 0.0;
        }
        pass.masks.push_back(std::move(mask));
    }
    pass.output = std::move(h);
    return pass;
}

// J^T g for J = prod_i W_{+,x^{(i)}}, the local linear map of G at x.
Vector backpropagate(const GenerativeNetwork& net, const ForwardPass& pass, Vector g) {
    for (std::size_t layer = net.depth(); layer-- > 0;) {
        const auto& mask = pass.masks[layer];
        for (Eigen::Index i = 0; i < g.size(); ++i) g[i] *= mask[static_cast<std::size_t>(i)];
        g = matvec_t(net.layer(layer), g);
    }
    return g;
}

void check_measurement_shapes(const GenerativeNetwork& net, const Matrix& a, const Vector& y) {
    require_dims(a.cols() == net.output_dim(), "A has the wrong number of columns for this network");
    require_dims(a.rows() == y.size(), "y must have one entry per row of A");
}

struct Objective {
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> gradient;
};

struct DescentRun {
    Vector x;
    std::vector<double> losses;
    std::vector<double> gradient_norms;
    std::vector<double> iterate_norms;
    bool converged = false;
    bool diverged = false;
    std::size_t iterations = 0;
    std::size_t negation_jumps = 0;
    double final_loss = 0.0;
};

DescentRun descend(const Objective& objective, Vector x, double step, const RecoveryConfig& config,
                   bool record_trace) {
    DescentRun run;
    double f = objective.value(x);
    if (!std::isfinite(f)) {
        run.diverged = true;
        run.x = std::move(x);
        run.final_loss = f;
        return run;
    }
    for (std::size_t it = 0; it < config.max_iterations; ++it) {
        if (config.negation_check) {
            const double f_neg = objective.value(-x);
            if (f_neg < f) {
                x = -x;
                f = f_neg;
                ++run.negation_jumps;
            }
        }
        const Vector g = objective.gradient(x);
        const double g_norm = g.norm();
        if (record_trace) {
            run.losses.push_back(f);
            run.gradient_norms.push_back(g_norm);
            run.iterate_norms.push_back(x.norm());
        }
        run.iterations = it;
        if (g_norm < config.gradient_tolerance) {
            run.converged = true;
            break;
        }
        Vector candidate = x - step * g;
        if (candidate == x) break;  // the step no longer moves x; every later iteration is identical
        const double f_candidate = objective.value(candidate);
        if (!std::isfinite(f_candidate)) {
            run.diverged = true;
            break;
        }
        if (f_candidate > f) {
            step *= 0.5;
            if (step < 1e-300) break;
            continue;
        }
        x = std::move(candidate);
        f = f_candidate;
        run.iterations = it + 1;
    }
    run.x = std::move(x);
    run.final_loss = f;
    return run;
}

Vector start_point(const RecoveryConfig& config, std::size_t restart, Eigen::Index k) {
    if (restart == 0 && config.initial_point) {
        require_dims(config.initial_point->size() == k, "initial point has the wrong length");
        return *config.initial_point;
    }
    Rng rng(derive_seed(config.init_seed, tag_of("restart"), restart));
    return gaussian_vector(rng, k, config.init_scale);
}

}  // namespace

double empirical_risk(const GenerativeNetwork& net, const Matrix& a, const Vector& y, const Vector& x) {
    check_measurement_shapes(net, a, y);
    const Vector residual = matvec(a, forward(net, x)) - y;
    return 0.5 * residual.squaredNorm();
}

Vector risk_subgradient(const GenerativeNetwork& net, const Matrix& a, const Vector& y, const Vector& x) {
    check_measurement_shapes(net, a, y);
    const ForwardPass pass = forward_pass(net, x);
    const Vector residual = matvec(a, pass.output) - y;
    return backpropagate(net, pass, matvec_t(a, residual));
}

double min_abs_preactivation(const GenerativeNetwork& net, const Vector& x) {
    double smallest = std::numeric_limits<double>::infinity();
    Vector h = x;
    for (const Matrix& w : net.layers()) {
        h = matvec(w, h);
        smallest = std::min(smallest, h.cwiseAbs().minCoeff());
        kernels::relu(as_span(h));
    }
    return smallest;
}

double default_step_size(const GenerativeNetwork& net, const Matrix& a) {
    double lipschitz = std::pow(operator_norm(a), 2);
    for (const Matrix& w : net.layers()) lipschitz *= std::pow(operator_norm(w), 2);
    if (lipschitz <= 0.0) return 1.0;
    return 0.25 / (static_cast<double>(net.depth()) * lipschitz);
}

RecoveryResult recover(const GenerativeNetwork& net, const MeasurementModel& model, const Vector& y,
                       const RecoveryConfig& config, const std::optional<Vector>& ground_truth) {
    if (std::holds_alternative<PhaselessMeasurement>(model) || std::holds_alternative<OneBitMeasurement>(model)) {
        throw std::invalid_argument("recover: descent targets the squared loss; phaseless and one-bit models "
                                    "are supported by measure and landscape_scan only");
    }
    require(config.restarts >= 1, "recover: needs at least one restart");
    require(config.max_iterations >= 1, "recover: max_iterations must be positive");
    require(config.gradient_tolerance > 0.0, "recover: gradient_tolerance must be positive");
    require(config.step_size >= 0.0, "recover: step_size must be non-negative");
    const Matrix& a = measurement_matrix(model);
    check_measurement_shapes(net, a, y);
    if (ground_truth) require_dims(ground_truth->size() == net.input_dim(), "ground truth has the wrong length");

    const double step = config.step_size > 0.0 ? config.step_size : default_step_size(net, a);
    const Objective objective{[&](const Vector& x) { return empirical_risk(net, a, y, x); },
                              [&](const Vector& x) { return risk_subgradient(net, a, y, x); }};

    std::optional<DescentRun> best;
    std::size_t best_index = 0;
    for (std::size_t r = 0; r < config.restarts; ++r) {
        DescentRun run = descend(objective, start_point(config, r, net.input_dim()), step, config, true);
        const bool better = !best || (best->diverged && !run.diverged) ||
                            (!run.diverged && run.final_loss < best->final_loss);
        if (better) {
            best = std::move(run);
            best_index = r;
        }
    }

    RecoveryResult result;
    result.estimate = best->x;
    result.loss_trace = std::move(best->losses);
    result.gradient_norms = std::move(best->gradient_norms);
    result.iterate_norms = std::move(best->iterate_norms);
    result.converged = best->converged;
    result.diverged = best->diverged;
    result.iterations = best->iterations;
    result.restart_index = best_index;
    result.restarts_run = config.restarts;
    result.negation_jumps = best->negation_jumps;
    result.step_size = step;
    result.final_loss = best->final_loss;
    if (ground_truth) {
        result.absolute_error = (result.estimate - *ground_truth).norm();
        const double scale = ground_truth->norm();
        if (scale > 0.0) result.relative_error = *result.absolute_error / scale;
    }
    return result;
}

std::string to_json(const RecoveryResult& result) {
    nlohmann::ordered_json j;
    j["estimate"] = std::vector<double>(result.estimate.data(), result.estimate.data() + result.estimate.size());
    j["final_loss"] = result.final_loss;
    j["iterations"] = result.iterations;
    j["converged"] = result.converged;
    j["diverged"] = result.diverged;
    j["restart_index"] = result.restart_index;
    j["negation_jumps"] = result.negation_jumps;
    j["step_size"] = result.step_size;
    j["relative_error"] = result.relative_error ? nlohmann::ordered_json(*result.relative_error) : nullptr;
    j["absolute_error"] = result.absolute_error ? nlohmann::ordered_json(*result.absolute_error) : nullptr;
    j["loss_trace"] = result.loss_trace;
    j["iterate_norms"] = result.iterate_norms;
    return j.dump();
}

void write_loss_trace_csv(std::ostream& out, const RecoveryResult& result) {
    out << "iteration,loss,gradient_norm\n";
    for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
        out << i << ',' << format_double(result.loss_trace[i]) << ',' << format_double(result.gradient_norms[i])
            << '\n';
    }
}

RricReport rric_deviation(const Matrix& a, const GenerativeNetwork& net, std::size_t quadruples,
                          std::uint64_t seed) {
    require(quadruples >= 1, "rric_deviation: needs at least one quadruple");
    require_dims(a.cols() == net.output_dim(), "rric_deviation: A has the wrong number of columns");
    const Eigen::Index k = net.input_dim();
    Rng rng(seed);
    RricReport report;
    for (std::size_t q = 0; q < quadruples; ++q) {
        const Vector x = gaussian_vector(rng, k);
        const Vector y = gaussian_vector(rng, k);
        const Vector u = forward(net, x) - forward(net, y);
        Vector v;
        if (q % 2 == 1) {
            v = u;
        } else {
            const Vector z = gaussian_vector(rng, k);
            const Vector w = gaussian_vector(rng, k);
            v = forward(net, z) - forward(net, w);
        }
        const double nu = u.norm();
        const double nv = v.norm();
        if (nu < 1e-10 || nv < 1e-10) {
            ++report.quadruples_skipped;
            continue;
        }
        const double measured = matvec(a, u).dot(matvec(a, v));
        const double ratio = std::abs(measured - u.dot(v)) / (nu * nv);
        report.max_ratio_deviation = std::max(report.max_ratio_deviation, ratio);
        ++report.quadruples_tested;
    }
    if (report.quadruples_tested == 0) {
        throw std::runtime_error("rric_deviation: every sampled quadruple was degenerate");
    }
    return report;
}

std::string to_json(const RricReport& report) {
    nlohmann::ordered_json j;
    j["max_ratio_deviation"] = report.max_ratio_deviation;
    j["quadruples_tested"] = report.quadruples_tested;
    j["quadruples_skipped"] = report.quadruples_skipped;
    return j.dump();
}

// ---------------------------------------------------------------------------
// Landscape scans

std::string_view cluster_kind_name(ClusterKind kind) {
    switch (kind) {
        case ClusterKind::truth:
            return "truth";
        case ClusterKind::negative_multiple:
            return "negative_multiple";
        case ClusterKind::zero:
            return "zero";
        case ClusterKind::other:
            return "other";
    }
    return "other";
}

double landscape_loss(const GenerativeNetwork& net, const MeasurementModel& model, const Vector& y,
                      const Vector& x, double one_bit_gain) {
    const Matrix& a = measurement_matrix(model);
    check_measurement_shapes(net, a, y);
    const Vector g = forward(net, x);
    if (std::holds_alternative<PhaselessMeasurement>(model)) {
        return 0.5 * (matvec(a, g).cwiseAbs() - y).squaredNorm();
    }
    if (std::holds_alternative<OneBitMeasurement>(model)) {
        return 0.5 * g.squaredNorm() - one_bit_gain / static_cast<double>(a.rows()) * y.dot(matvec(a, g));
    }
    return 0.5 * (matvec(a, g) - y).squaredNorm();
}

Vector landscape_gradient(const GenerativeNetwork& net, const MeasurementModel& model, const Vector& y,
                          const Vector& x, double one_bit_gain) {
    const Matrix& a = measurement_matrix(model);
    check_measurement_shapes(net, a, y);
    const ForwardPass pass = forward_pass(net, x);
    if (std::holds_alternative<PhaselessMeasurement>(model)) {
        const Vector ag = matvec(a, pass.output);
        Vector r(ag.size());
        for (Eigen::Index i = 0; i < ag.size(); ++i) {
            const double sign = ag[i] > 0.0 ? 1.0 : (ag[i] < 0.0 ? -1.0 : 0.0);
            r[i] = sign * (std::abs(ag[i]) - y[i]);
        }
        return backpropagate(net, pass, matvec_t(a, r));
    }
    if (std::holds_alternative<OneBitMeasurement>(model)) {
        const Vector g = pass.output - one_bit_gain / static_cast<double>(a.rows()) * matvec_t(a, y);
        return backpropagate(net, pass, g);
    }
    return backpropagate(net, pass, matvec_t(a, matvec(a, pass.output) - y));
}

namespace {

std::vector<Vector> landscape_starts(const LandscapeOptions& options, Eigen::Index k, std::uint64_t seed) {
    std::vector<Vector> starts;
    if (options.mode == LandscapeMode::grid) {
        require(k <= 3, "landscape_scan: grid mode supports k <= 3");
        require(options.grid_points_per_axis >= 1, "landscape_scan: grid needs at least one point per axis");
        const std::size_t g = options.grid_points_per_axis;
        std::size_t total = 1;
        for (Eigen::Index d = 0; d < k; ++d) total *= g;
        for (std::size_t idx = 0; idx < total; ++idx) {
            Vector p(k);
            std::size_t rem = idx;
            for (Eigen::Index d = 0; d < k; ++d) {
                const double cell = (static_cast<double>(rem % g) + 0.5) / static_cast<double>(g);
                p[d] = -options.grid_extent + 2.0 * options.grid_extent * cell;
                rem /= g;
            }
            starts.push_back(std::move(p));
        }
        return starts;
    }
    require(options.restarts >= 1, "landscape_scan: needs at least one start");
    for (std::size_t r = 0; r < options.restarts; ++r) {
        Rng rng(derive_seed(seed, tag_of("landscape-start"), r));
        starts.push_back(gaussian_vector(rng, k, options.init_scale));
    }
    return starts;
}

double landscape_step(const GenerativeNetwork& net, const MeasurementModel& model) {
    if (std::holds_alternative<OneBitMeasurement>(model)) {
        double lipschitz = 1.0;
        for (const Matrix& w : net.layers()) lipschitz *= std::pow(operator_norm(w), 2);
        return 0.25 / (static_cast<double>(net.depth()) * lipschitz);
    }
    return default_step_size(net, measurement_matrix(model));
}

}  // namespace

LandscapeSummary landscape_scan(const GenerativeNetwork& net, const MeasurementModel& model, const Vector& y,
                                const LandscapeOptions& options, std::uint64_t seed,
                                const std::optional<Vector>& x_star) {
    const Eigen::Index k = net.input_dim();
    check_measurement_shapes(net, measurement_matrix(model), y);
    if (x_star) require_dims(x_star->size() == k, "landscape_scan: x* has the wrong length");

    RecoveryConfig descent = options.descent;
    const double step = descent.step_size > 0.0 ? descent.step_size : landscape_step(net, model);
    const Objective objective{
        [&](const Vector& x) { return landscape_loss(net, model, y, x, options.one_bit_gain); },
        [&](const Vector& x) { return landscape_gradient(net, model, y, x, options.one_bit_gain); }};

    LandscapeSummary summary;
    const std::vector<Vector> starts = landscape_starts(options, k, seed);
    summary.starts = starts.size();
    for (const Vector& s : starts) summary.final_iterates.push_back(descend(objective, s, step, descent, false).x);

    const double truth_norm = x_star ? x_star->norm() : 0.0;
    const double radius = truth_norm > 0.0 ? options.cluster_radius * truth_norm : options.cluster_radius;

    auto classify = [&](const Vector& c, double& scale) {
        scale = 0.0;
        if (truth_norm > 0.0) {
            scale = c.dot(*x_star) / (truth_norm * truth_norm);
            if ((c - *x_star).norm() <= radius) return ClusterKind::truth;
        }
        if (c.norm() <= radius) return ClusterKind::zero;
        if (truth_norm > 0.0 && scale < 0.0 && (c - scale * *x_star).norm() <= radius * std::max(1.0, -scale)) {
            return ClusterKind::negative_multiple;
        }
        return ClusterKind::other;
    };

    std::vector<Vector> representatives;
    std::vector<std::vector<std::size_t>> members;
    std::size_t truth_count = 0;
    std::size_t truth_or_negative = 0;
    for (std::size_t i = 0; i < summary.final_iterates.size(); ++i) {
        const Vector& p = summary.final_iterates[i];
        double scale = 0.0;
        const ClusterKind kind = classify(p, scale);
        if (kind == ClusterKind::truth) ++truth_count;
        if (kind == ClusterKind::truth || kind == ClusterKind::negative_multiple) ++truth_or_negative;

        std::size_t c = 0;
        for (; c < representatives.size(); ++c) {
            if ((representatives[c] - p).norm() < radius) break;
        }
        if (c == representatives.size()) {
            representatives.push_back(p);
            members.emplace_back();
        }
        members[c].push_back(i);
    }

    std::size_t largest_negative = 0;
    for (std::size_t c = 0; c < representatives.size(); ++c) {
        Cluster cluster;
        cluster.center = Vector::Zero(k);
        double loss = 0.0;
        for (const std::size_t i : members[c]) {
            cluster.center += summary.final_iterates[i];
            loss += objective.value(summary.final_iterates[i]);
        }
        cluster.size = members[c].size();
        cluster.center /= static_cast<double>(cluster.size);
        cluster.loss = loss / static_cast<double>(cluster.size);
        cluster.kind = classify(cluster.center, cluster.scale_vs_truth);
        if (cluster.kind == ClusterKind::negative_multiple && cluster.size > largest_negative) {
            largest_negative = cluster.size;
            summary.negative_scale = -cluster.scale_vs_truth;
        }
        summary.clusters.push_back(std::move(cluster));
    }

    const double total = static_cast<double>(summary.final_iterates.size());
    summary.fraction_truth = static_cast<double>(truth_count) / total;
    summary.fraction_truth_or_negative = static_cast<double>(truth_or_negative) / total;
    return summary;
}

}  // namespace genprior
