// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers as arguments
// to run a subset. Exit status is nonzero when any selected criterion fails.

#include "genprior/harness.hpp"
#include "genprior/linalg.hpp"
#include "genprior/network.hpp"
#include "genprior/pseudolip.hpp"
#include "genprior/recover.hpp"
#include "genprior/rng.hpp"
#include "genprior/wdc.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

using namespace genprior;
namespace h = genprior::harness;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double spectral_norm(const Matrix& m) {
    return Eigen::JacobiSVD<Eigen::MatrixXd>(Eigen::MatrixXd(m)).singularValues()(0);
}

double min_eigenvalue(const Matrix& m) {
    const Eigen::MatrixXd s = 0.5 * (Eigen::MatrixXd(m) + Eigen::MatrixXd(m).transpose());
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

double number(const h::ReportRow& row, const std::string& name) {
    for (const auto& f : row.outputs) {
        if (f.name != name) continue;
        if (const auto* d = std::get_if<double>(&f.value)) return *d;
        if (const auto* u = std::get_if<std::uint64_t>(&f.value)) return static_cast<double>(*u);
        if (const auto* i = std::get_if<std::int64_t>(&f.value)) return static_cast<double>(*i);
        if (const auto* b = std::get_if<bool>(&f.value)) return *b ? 1.0 : 0.0;
    }
    return std::nan("");
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char* pattern, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

bool any_failed(const std::vector<h::ReportRow>& rows) {
    return std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.failed(); });
}

Outcome q_monte_carlo() {
    constexpr Eigen::Index k = 5, n = 2000;
    constexpr int pairs = 20, matrices = 100;
    Rng rng(101);
    double worst = 0.0;
    for (int p = 0; p < pairs; ++p) {
        const Vector x = uniform_sphere(rng, k), y = uniform_sphere(rng, k);
        Matrix mean = Matrix::Zero(k, k);
        for (int t = 0; t < matrices; ++t) {
            mean += active_gram(gaussian_matrix(rng, n, k), x, y) / static_cast<double>(n);
        }
        mean /= matrices;
        worst = std::max(worst, spectral_norm(mean - q_matrix(x, y).matrix));
    }
    return {worst <= 0.05, fmt("max distance %.4f over %d pairs", worst, pairs)};
}

Outcome sandwich() {
    Rng rng(202);
    std::uniform_int_distribution<int> k_dist(1, 6), n_dist(5, 200);
    std::uniform_real_distribution<double> eps_dist(0.01, 1.0);
    double worst = std::numeric_limits<double>::infinity();
    for (int t = 0; t < 1000; ++t) {
        const Eigen::Index k = k_dist(rng), n = n_dist(rng);
        const Matrix w = gaussian_matrix(rng, n, k);
        const Vector x = gaussian_vector(rng, k);
        // Every third tuple correlates y with x so that many rows sit near both kinks.
        const Vector y = t % 3 == 0 ? Vector(x + 0.05 * gaussian_vector(rng, k)) : gaussian_vector(rng, k);
        const double eps = eps_dist(rng);
        const Matrix lower = smoothed_gram(w, x, y, eps, StepSide::lower);
        const Matrix exact = active_gram(w, x, y);
        const Matrix upper = smoothed_gram(w, x, y, eps, StepSide::upper);
        worst = std::min({worst, min_eigenvalue(exact - lower), min_eigenvalue(upper - exact)});
    }
    return {worst >= -1e-9, fmt("smallest eigenvalue %.3e over 1000 tuples", worst)};
}

Outcome wdc_trend() {
    h::ExperimentConfig c = h::default_config(h::ExperimentKind::wdc_sweep);
    c.k = 10;
    c.n_grid = {20, 100, 1000};
    c.pairs = 500;
    c.trial_count = 20;
    c.master_seed = 3;
    const auto rows = h::run_experiment(c);
    std::vector<double> med;
    for (std::size_t g = 0; g < c.n_grid.size(); ++g) {
        std::vector<double> values;
        for (const auto& r : rows) {
            if (r.grid_index == g) values.push_back(number(r, "max_deviation"));
        }
        med.push_back(median(values));
    }
    const bool ok = !any_failed(rows) && med[2] < med[1] && med[1] < med[0];
    return {ok, fmt("median max-deviation n=20: %.4f, n=100: %.4f, n=1000: %.4f", med[0], med[1], med[2])};
}

Outcome collisions() {
    Rng rng(404);
    int verified = 0, total = 0;
    for (Eigen::Index k = 2; k <= 8; ++k) {
        for (int t = 0; t < 200; ++t) {
            ++total;
            const Matrix w = gaussian_matrix(rng, 2 * k - 1, k);
            const Collision col = construct_collision(w);
            const GenerativeNetwork g({w});
            const double gap = (forward(g, col.x) - forward(g, col.y)).lpNorm<Eigen::Infinity>();
            const double bound = 1.0 / w.rowwise().norm().maxCoeff();
            if (gap <= 1e-9 && (col.x - col.y).norm() >= bound - 1e-9) ++verified;
        }
    }
    return {verified == total, fmt("%d of %d matrices give a verified collision", verified, total)};
}

Outcome nets() {
    h::ExperimentConfig c = h::default_config(h::ExperimentKind::net_demo);
    c.k_grid = {1, 2, 3};
    c.delta_grid = {0.3, 0.5};
    c.random_test_points = 10000;
    c.master_seed = 5;
    const auto rows = h::run_experiment(c);
    bool ok = !any_failed(rows);
    std::string detail;
    for (const auto& r : rows) {
        const bool bound = number(r, "within_bound") == 1.0;
        const bool covered = number(r, "random_covered") == number(r, "random_points") && number(r, "random_points") == 10000;
        ok = ok && bound && covered;
        detail += fmt("[%zu] %g centers, %g/%g covered; ", r.grid_index, number(r, "centers"),
                      number(r, "random_covered"), number(r, "random_points"));
    }
    return {ok, detail};
}

Outcome pseudo_lipschitz() {
    constexpr double eps = 0.2;
    double worst = 0.0;
    // 10 matrices x 100 trials.
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Matrix m = sample_theta_matrix(100, 4, derive_seed(606, tag_of("theta"), s));
        Rng rng(derive_seed(606, tag_of("u"), s));
        const Vector u = uniform_sphere(rng, 4);
        worst = std::max(worst, pseudo_lipschitz_check(m, u, eps, 100, derive_seed(606, tag_of("trials"), s)));
    }
    return {worst <= eps + 1e-9, fmt("max deviation %.4f (epsilon %.1f) over 1000 trials", worst, eps)};
}

Outcome gradients() {
    Rng rng(707);
    double worst = 0.0;
    int points = 0;
    for (std::size_t d = 1; d <= 3; ++d) {
        std::vector<Eigen::Index> dims{4};
        for (std::size_t i = 0; i < d; ++i) dims.push_back(12 + 10 * static_cast<Eigen::Index>(i));
        const GenerativeNetwork net = sample_gaussian_network(dims, VarianceRule::one_over_rows, 7000 + d);
        const Matrix a = gaussian_matrix(rng, 15, net.output_dim(), 1.0 / std::sqrt(15.0));
        const Vector y = matvec(a, forward(net, gaussian_vector(rng, 4)));
        double lip = 1.0;  // bound on how fast any pre-activation moves with x
        for (const auto& w : net.layers()) lip *= spectral_norm(w);
        const int target = d == 3 ? 166 : 167;
        for (int p = 0; p < target;) {
            const Vector x = gaussian_vector(rng, 4);
            const double margin = min_abs_preactivation(net, x);
            if (margin <= 1e-8) continue;
            ++p;
            ++points;
            // Inside this radius no unit changes sign, so f is quadratic and central
            // differences carry only rounding error.
            const double step = std::min(1e-3, 0.5 * margin / lip);
            const Vector g = risk_subgradient(net, a, y, x);
            Vector fd(4);
            for (Eigen::Index i = 0; i < 4; ++i) {
                Vector xp = x, xm = x;
                xp(i) += step;
                xm(i) -= step;
                fd(i) = (empirical_risk(net, a, y, xp) - empirical_risk(net, a, y, xm)) / (2 * step);
            }
            worst = std::max(worst, (fd - g).norm() / std::max(g.norm(), 1e-12));
        }
    }
    return {worst <= 1e-5, fmt("max relative error %.3e over %d points", worst, points)};
}

h::ExperimentConfig recovery_family() {
    h::ExperimentConfig c = h::default_config(h::ExperimentKind::recovery_sweep);
    c.layer_dims = {5, 50, 250};
    c.m_grid = {100};
    c.noise_grid = {0.0};
    c.restarts = 10;
    c.trial_count = 50;
    c.master_seed = 8;
    return c;
}

Outcome noiseless_recovery() {
    const auto rows = h::run_experiment(recovery_family());
    int ok = 0;
    double worst = 0.0;
    for (const auto& r : rows) {
        const double e = number(r, "relative_error");
        if (e <= 1e-3) ++ok;
        worst = std::max(worst, e);
    }
    const bool pass = !any_failed(rows) && ok * 5 >= static_cast<int>(rows.size()) * 4;
    return {pass, fmt("%d of %zu instances within 1e-3 (worst %.2e)", ok, rows.size(), worst)};
}

Outcome noise_scaling() {
    h::ExperimentConfig fixed = recovery_family();
    fixed.noise_grid = {0.01, 0.05, 0.1};
    fixed.step_scale = 40.0;
    const auto fixed_rows = h::run_experiment(fixed);
    int monotone = 0;
    for (std::size_t t = 0; t < fixed.trial_count; ++t) {
        const double e0 = number(fixed_rows[0 * fixed.trial_count + t], "absolute_error");
        const double e1 = number(fixed_rows[1 * fixed.trial_count + t], "absolute_error");
        const double e2 = number(fixed_rows[2 * fixed.trial_count + t], "absolute_error");
        if (e0 <= e1 && e1 <= e2) ++monotone;
    }

    h::ExperimentConfig gauss = recovery_family();
    gauss.noise_kind = h::NoiseKind::gaussian;
    gauss.m_grid = {100, 200};
    gauss.noise_grid = {0.05};
    gauss.noise_draws = 8;
    gauss.restarts = 4;
    gauss.step_scale = 40.0;
    const auto gauss_rows = h::run_experiment(gauss);
    int decreasing = 0;
    for (std::size_t t = 0; t < gauss.trial_count; ++t) {
        const double small_m = number(gauss_rows[t], "mean_squared_error");
        const double large_m = number(gauss_rows[gauss.trial_count + t], "mean_squared_error");
        if (large_m < small_m) ++decreasing;
    }
    const int n = static_cast<int>(fixed.trial_count);
    const bool pass = !any_failed(fixed_rows) && !any_failed(gauss_rows) && monotone * 10 >= n * 9 &&
                      decreasing * 10 >= static_cast<int>(gauss.trial_count) * 9;
    return {pass, fmt("fixed noise monotone in %d/%d seeds; gaussian MSE decreases with 2m in %d/%zu seeds",
                      monotone, n, decreasing, gauss.trial_count)};
}

Outcome q_lipschitz() {
    Rng rng(1010);
    std::uniform_real_distribution<double> radius(0.5, 1.5);
    std::uniform_int_distribution<int> k_dist(2, 8);
    auto shell = [&](Eigen::Index k) { return Vector(radius(rng) * uniform_sphere(rng, k)); };
    double worst_ratio = 0.0;
    bool ok = true;
    for (int t = 0; t < 10000; ++t) {
        const Eigen::Index k = k_dist(rng);
        const Vector x = shell(k), y = shell(k);
        Vector xt = shell(k), yt = shell(k);
        if (t % 2 == 0) {
            // Nearby quadruples probe the local constant; the scale is varied per sample.
            const double s = std::pow(10.0, -1.0 - 5.0 * std::uniform_real_distribution<double>(0, 1)(rng));
            xt = x + s * gaussian_vector(rng, k);
            yt = y + s * gaussian_vector(rng, k);
        }
        const double d = std::max((x - xt).norm(), (y - yt).norm());
        const double lhs = spectral_norm(q_matrix(x, y).matrix - q_matrix(xt, yt).matrix);
        ok = ok && lhs <= 7.0 * d + 1e-9;
        worst_ratio = std::max(worst_ratio, lhs / d);
    }
    return {ok, fmt("largest observed ratio %.4f over 10000 quadruples", worst_ratio)};
}

Outcome rric_trend() {
    h::ExperimentConfig c = h::default_config(h::ExperimentKind::rric_sweep);
    c.layer_dims = {5, 50, 250};
    const Eigen::Index k = c.layer_dims.front();
    c.m_grid = {2 * k, 40 * k};
    c.quadruples = 200;
    c.trial_count = 10;
    c.master_seed = 11;
    const auto rows = h::run_experiment(c);
    int below = 0;
    double sum_small = 0.0, sum_large = 0.0;
    for (std::size_t t = 0; t < c.trial_count; ++t) {
        const double small_m = number(rows[t], "max_ratio_deviation");
        const double large_m = number(rows[c.trial_count + t], "max_ratio_deviation");
        if (large_m < small_m) ++below;
        sum_small += small_m;
        sum_large += large_m;
    }
    const int n = static_cast<int>(c.trial_count);
    return {!any_failed(rows) && below == n,
            fmt("m=40k below m=2k in %d/%d seeds (means %.3f vs %.3f)", below, n, sum_large / n, sum_small / n)};
}

h::ExperimentConfig determinism_config(h::ExperimentKind kind) {
    h::ExperimentConfig c = h::default_config(kind);
    c.master_seed = 12;
    c.trial_count = 3;
    switch (kind) {
        case h::ExperimentKind::wdc_sweep:
            c.n_grid = {20, 100};
            c.pairs = 50;
            break;
        case h::ExperimentKind::recovery_sweep:
            c.m_grid = {60, 100};
            c.noise_grid = {0.0, 0.05};
            c.restarts = 2;
            c.step_scale = 40.0;
            break;
        case h::ExperimentKind::expansion_phase:
            c.n_grid = {80, 400};
            c.pair_trials = 10;
            break;
        case h::ExperimentKind::net_demo:
            c.k_grid = {1, 2};
            c.random_test_points = 2000;
            break;
        case h::ExperimentKind::rric_sweep:
            c.quadruples = 50;
            break;
        case h::ExperimentKind::landscape:
            c.restarts = 20;
            c.max_iterations = 1000;
            break;
        case h::ExperimentKind::collision_demo:
            break;
    }
    return c;
}

Outcome determinism() {
    const std::vector<h::ExperimentKind> kinds{
        h::ExperimentKind::wdc_sweep,      h::ExperimentKind::recovery_sweep, h::ExperimentKind::expansion_phase,
        h::ExperimentKind::collision_demo, h::ExperimentKind::net_demo,       h::ExperimentKind::rric_sweep,
        h::ExperimentKind::landscape};
    std::vector<std::string> mismatched;
    for (const auto kind : kinds) {
        h::ExperimentConfig c = determinism_config(kind);
        std::string reference;
        for (const unsigned threads : {1u, 4u, 8u}) {
            c.threads = threads;
            const auto rows = h::run_experiment(c);
            const std::string text =
                h::format_report(rows, h::ReportFormat::csv) + h::format_report(rows, h::ReportFormat::json);
            if (threads == 1) {
                reference = text;
            } else if (text != reference) {
                mismatched.push_back(std::string(h::kind_name(kind)) + "@" + std::to_string(threads));
            }
        }
    }
    std::string detail = mismatched.empty() ? "7 experiment kinds identical at 1, 4 and 8 threads" : "differs:";
    for (const auto& m : mismatched) detail += " " + m;
    return {mismatched.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
    const std::map<int, std::pair<std::string, std::function<Outcome()>>> criteria{
        {1, {"Q closed form matches Monte Carlo", q_monte_carlo}},
        {2, {"smoothed Gram sandwich ordering", sandwich}},
        {3, {"WDC deviation decreases with n", wdc_trend}},
        {4, {"collision construction for m = 2k-1", collisions}},
        {5, {"aspherical net size and coverage", nets}},
        {6, {"pseudo-Lipschitz deviation bound", pseudo_lipschitz}},
        {7, {"risk gradient matches finite differences", gradients}},
        {8, {"noiseless recovery", noiseless_recovery}},
        {9, {"noise scaling", noise_scaling}},
        {10, {"Q Lipschitz bound on the shell", q_lipschitz}},
        {11, {"RRIC deviation decreases with m", rric_trend}},
        {12, {"reports independent of thread count", determinism}},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

    int failures = 0;
    for (const auto& [id, entry] : criteria) {
        if (!selected.empty() && !selected.contains(id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = entry.second();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!outcome.pass) ++failures;
        std::printf("%s %2d %s: %s (%.1fs)\n", outcome.pass ? "PASS" : "FAIL", id, entry.first.c_str(),
                    outcome.detail.c_str(), seconds);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
