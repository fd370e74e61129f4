#include "genprior/pseudolip.hpp"

#include "genprior/linalg.hpp"
#include "genprior/network.hpp"
#include "genprior/rng.hpp"
#include "genprior/wdc.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>

namespace genprior {

PseudoBallSpec::PseudoBallSpec(Slab slab) : spec_(std::move(slab)) {
    const auto& s = std::get<Slab>(spec_);
    require(s.w.size() > 0, "slab: empty normal vector");
    require(s.epsilon > 0.0, "slab: epsilon must be positive");
}

PseudoBallSpec::PseudoBallSpec(WeightedSlab slab) : spec_(std::move(slab)) {
    const auto& s = std::get<WeightedSlab>(spec_);
    require(s.m.rows() > 0 && s.m.cols() > 0, "weighted slab: empty matrix");
    require(s.t > 0.0, "weighted slab: t must be positive");
    require_dims(s.u.size() == s.m.cols(), "weighted slab: u has the wrong length");
    weighted_row_coeffs_ = matvec(s.m, s.u).array().square();
}

Eigen::Index PseudoBallSpec::dim() const {
    return std::visit(
        [](const auto& s) -> Eigen::Index {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Slab>) return s.w.size();
            else return s.m.cols();
        },
        spec_);
}

bool PseudoBallSpec::contains(const Vector& v) const {
    require_dims(v.size() == dim(), "pseudo-ball membership: dimension mismatch");
    if (const auto* slab = std::get_if<Slab>(&spec_)) {
        return std::abs(slab->w.dot(v)) <= slab->epsilon;
    }
    const auto& ws = std::get<WeightedSlab>(spec_);
    const double lhs = matvec(ws.m, v).cwiseAbs().dot(weighted_row_coeffs_);
    return lhs <= ws.t * static_cast<double>(ws.m.rows());
}

double PseudoBallSpec::gauge(const Vector& v) const {
    require_dims(v.size() == dim(), "pseudo-ball gauge: dimension mismatch");
    if (const auto* slab = std::get_if<Slab>(&spec_)) {
        return std::abs(slab->w.dot(v)) / slab->epsilon;
    }
    const auto& ws = std::get<WeightedSlab>(spec_);
    const double lhs = matvec(ws.m, v).cwiseAbs().dot(weighted_row_coeffs_);
    return lhs / (ws.t * static_cast<double>(ws.m.rows()));
}

bool pseudo_ball_contains(const PseudoBallSpec& spec, const Vector& v) { return spec.contains(v); }

double slab_exact_fraction(const Slab& slab, double delta) {
    require(delta > 0.0, "slab_exact_fraction: delta must be positive");
    const double wn = slab.w.norm();
    if (wn == 0.0) return 1.0;
    const double a = slab.epsilon / (wn * delta);
    if (a >= 1.0) return 1.0;
    // For v uniform in the unit k-ball, (v . w^)^2 ~ Beta(1/2, (k+1)/2).
    const double k = static_cast<double>(slab.w.size());
    return boost::math::ibeta(0.5, 0.5 * (k + 1.0), a * a);
}

double weighted_slab_lower_bound(double t, double delta) {
    return std::max(0.0, 1.0 - 72.0 * delta / (t * std::sqrt(std::numbers::pi)));
}

double net_size_bound(double gamma, double delta, Eigen::Index k) {
    require(gamma > 0.0 && delta > 0.0, "net_size_bound: gamma and delta must be positive");
    return std::pow(5.0 / delta, static_cast<double>(k)) / gamma;
}

WidenessCertificate volume_fraction(const PseudoBallSpec& spec, double delta, std::size_t samples,
                                    std::uint64_t seed) {
    require(delta > 0.0, "volume_fraction: delta must be positive");
    require(samples >= 1000, "volume_fraction: needs at least 1000 samples");
    Rng rng(seed);
    std::size_t inside = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        if (spec.contains(uniform_ball(rng, spec.dim(), delta))) ++inside;
    }
    WidenessCertificate cert;
    cert.delta = delta;
    cert.samples = samples;
    cert.gamma_estimate = static_cast<double>(inside) / static_cast<double>(samples);
    cert.standard_error =
        std::sqrt(cert.gamma_estimate * (1.0 - cert.gamma_estimate) / static_cast<double>(samples));
    if (const auto* slab = std::get_if<Slab>(&spec.variant())) {
        cert.analytic_lower_bound = slab_exact_fraction(*slab, delta);
    } else {
        cert.analytic_lower_bound = weighted_slab_lower_bound(std::get<WeightedSlab>(spec.variant()).t, delta);
    }
    return cert;
}

namespace {

double radical_inverse(std::size_t index, unsigned base) {
    double result = 0.0;
    double f = 1.0 / base;
    while (index > 0) {
        result += f * static_cast<double>(index % base);
        index /= base;
        f /= base;
    }
    return result;
}

constexpr std::array<unsigned, 8> kPrimes{2, 3, 5, 7, 11, 13, 17, 19};

}  // namespace

std::vector<Vector> sphere_sequence(Eigen::Index k, std::size_t count) {
    require(k >= 1 && k <= static_cast<Eigen::Index>(kPrimes.size()), "sphere_sequence: unsupported dimension");
    std::vector<Vector> points;
    if (k == 1) {
        for (std::size_t i = 0; i < std::min<std::size_t>(count, 2); ++i) {
            points.push_back(Vector::Constant(1, i == 0 ? 1.0 : -1.0));
        }
        return points;
    }
    points.reserve(count);
    for (std::size_t i = 1; i <= count; ++i) {
        Vector p(k);
        if (k == 2) {
            const double phi = 2.0 * std::numbers::pi * radical_inverse(i, 2);
            p << std::cos(phi), std::sin(phi);
        } else if (k == 3) {
            // Area-preserving map of the (2, 3) Halton point.
            const double z = 1.0 - 2.0 * radical_inverse(i, 2);
            const double phi = 2.0 * std::numbers::pi * radical_inverse(i, 3);
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            p << r * std::cos(phi), r * std::sin(phi), z;
        } else {
            for (Eigen::Index d = 0; d < k; ++d) {
                const double uu = radical_inverse(i, kPrimes[static_cast<std::size_t>(d)]);
                p[d] = std::numbers::sqrt2 * boost::math::erf_inv(2.0 * uu - 1.0);
            }
            p.normalize();
        }
        points.push_back(std::move(p));
    }
    return points;
}

bool in_half_bounded_ball(const PseudoBallSpec& spec, double delta, const Vector& v) {
    return v.squaredNorm() <= 0.25 * delta * delta && spec.contains(2.0 * v);
}

namespace {

bool covered_by_centers(const std::vector<Vector>& centers, const PseudoBallSpec& spec, double delta,
                        const Vector& p) {
    const double r2 = 0.25 * delta * delta;
    for (const Vector& c : centers) {
        const Vector d = p - c;
        if (d.squaredNorm() > r2) continue;
        if (spec.contains(2.0 * d)) return true;
    }
    return false;
}

Vector sample_half_bounded_ball(const PseudoBallSpec& spec, double delta, Rng& rng, std::size_t cap) {
    std::uniform_real_distribution<double> box(-0.5 * delta, 0.5 * delta);
    const Eigen::Index k = spec.dim();
    for (std::size_t attempt = 0; attempt < cap; ++attempt) {
        Vector v(k);
        for (Eigen::Index d = 0; d < k; ++d) v[d] = box(rng);
        if (in_half_bounded_ball(spec, delta, v)) return v;
    }
    throw NetConstructionError("perturbation sampler exceeded " + std::to_string(cap) + " rejections");
}

}  // namespace

AsphericalNet build_aspherical_net(const PseudoBallSpec& spec, double delta, std::size_t sphere_test_points,
                                   std::uint64_t seed, const NetOptions& options) {
    const Eigen::Index k = spec.dim();
    require(k >= 1 && k <= 6, "build_aspherical_net: supports 1 <= k <= 6");
    require(delta > 0.0 && delta < 1.0, "build_aspherical_net: delta must lie in (0, 1)");
    if (sphere_test_points == 0) sphere_test_points = 10000 * static_cast<std::size_t>(k);

    AsphericalNet net;
    net.delta = delta;
    const WidenessCertificate cert =
        volume_fraction(spec, delta, options.gamma_samples, derive_seed(seed, tag_of("gamma"), 0));
    net.gamma = cert.gamma_estimate;
    net.gamma_standard_error = cert.standard_error;

    const std::vector<Vector> scan = sphere_sequence(k, sphere_test_points);
    net.sphere_test_points = scan.size();
    net.centers.push_back(Vector::Unit(k, 0));
    for (const Vector& p : scan) {
        if (covered_by_centers(net.centers, spec, delta, p)) continue;
        if (net.centers.size() >= options.max_centers) {
            throw NetConstructionError("net construction did not cover the sphere test set within " +
                                       std::to_string(options.max_centers) + " centers");
        }
        net.centers.push_back(p);
    }

    for (const Vector& p : scan) {
        if (covered_by_centers(net.centers, spec, delta, p)) ++net.covered_test_points;
    }
    if (net.covered_test_points != net.sphere_test_points) {
        throw NetConstructionError("net construction left " +
                                   std::to_string(net.sphere_test_points - net.covered_test_points) +
                                   " sphere test points uncovered");
    }

    Rng rng(derive_seed(seed, tag_of("perturb"), 0));
    net.perturbed.reserve(net.centers.size());
    for (const Vector& c : net.centers) {
        net.perturbed.push_back(c + sample_half_bounded_ball(spec, delta, rng, options.rejection_cap));
    }
    return net;
}

bool net_covers(const AsphericalNet& net, const PseudoBallSpec& spec, const Vector& p) {
    for (const Vector& y : net.perturbed) {
        if (spec.contains(p - y)) return true;
    }
    return false;
}

bool net_quarter_sets_disjoint(const AsphericalNet& net, const PseudoBallSpec& spec) {
    for (std::size_t a = 0; a < net.centers.size(); ++a) {
        for (std::size_t b = a + 1; b < net.centers.size(); ++b) {
            if (in_half_bounded_ball(spec, net.delta, net.centers[a] - net.centers[b])) return false;
        }
    }
    return true;
}

double smoothed_quadratic_form(const Matrix& m, const Vector& x, const Vector& y, const Vector& u,
                               double epsilon) {
    require_dims(m.cols() == x.size() && m.cols() == y.size() && m.cols() == u.size(),
                 "smoothed_quadratic_form: dimension mismatch");
    const Vector mx = matvec(m, x);
    const Vector my = matvec(m, y);
    const Vector mu = matvec(m, u);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        sum += smoothed_step(mx[i], epsilon, StepSide::upper) * smoothed_step(my[i], epsilon, StepSide::upper) *
               mu[i] * mu[i];
    }
    return sum / static_cast<double>(m.rows());
}

double pseudo_lipschitz_check(const Matrix& m, const Vector& u, double epsilon, std::size_t trials,
                              std::uint64_t seed, const PseudoLipschitzOptions& options) {
    require(epsilon > 0.0, "pseudo_lipschitz_check: epsilon must be positive");
    require_dims(u.size() == m.cols(), "pseudo_lipschitz_check: u has the wrong length");
    const Eigen::Index k = m.cols();
    const PseudoBallSpec ball(WeightedSlab{m, 0.25 * epsilon * epsilon, u});

    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    // Radial draw: the set is a seminorm ball, so s * d is a member iff s * gauge(d) <= 1.
    auto perturbation = [&] {
        const Vector d = uniform_sphere(rng, k);
        const double g = ball.gauge(d);
        const double s_max = g > 0.0 ? (1.0 - 1e-12) / g : 1.0;
        Vector p = (options.radius_scale * s_max * unit(rng)) * d;
        if (!ball.contains(p)) throw std::runtime_error("pseudo_lipschitz_check: perturbation left the pseudo-ball");
        return p;
    };

    double worst = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const Vector x = uniform_sphere(rng, k);
        const Vector y = uniform_sphere(rng, k);
        const Vector xt = x + perturbation();
        const Vector yt = y + perturbation();
        const double dev = std::abs(smoothed_quadratic_form(m, x, y, u, epsilon) -
                                    smoothed_quadratic_form(m, xt, yt, u, epsilon));
        worst = std::max(worst, dev);
    }
    return worst;
}

double concentration_deviation(const Matrix& w, const Vector& x, const Vector& y, const Vector& u,
                               double epsilon) {
    const Matrix q = q_matrix(x, y).matrix;
    return smoothed_quadratic_form(w, x, y, u, epsilon) - u.dot(q * u);
}

double concentration_sup_over_u(const Matrix& w, const Vector& x, const Vector& y, double epsilon) {
    const Matrix diff = smoothed_gram(w, x, y, epsilon, StepSide::upper) / static_cast<double>(w.rows()) -
                        q_matrix(x, y).matrix;
    const Eigen::MatrixXd sym = 0.5 * (diff + diff.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().maxCoeff();
}

namespace {

// Theta is a product of per-row constraints intersected with an operator-norm bound, so
// W | Theta is sampled exactly by drawing each row from N(0, I) | (||w_i|| <= sqrt(2k)) and then
// rejecting whole matrices that violate the norm bound. `cap` bounds the total discarded draws.
std::pair<Matrix, std::size_t> sample_theta_with_count(Eigen::Index n, Eigen::Index k, std::uint64_t seed,
                                                       std::size_t cap) {
    require(n >= k && k >= 1, "Theta sampling needs n >= k >= 1");
    const double row_bound_sq = 2.0 * static_cast<double>(k);
    const double norm_bound = 3.0 * std::sqrt(static_cast<double>(n));
    std::size_t rejections = 0;
    auto reject = [&] {
        if (++rejections > cap) {
            throw ThetaRejectionError("Theta rejection sampling exceeded " + std::to_string(cap) + " rejections");
        }
    };
    for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(derive_seed(seed, tag_of("theta"), attempt));
        Matrix w(n, k);
        for (Eigen::Index i = 0; i < n; ++i) {
            Vector row = gaussian_vector(rng, k);
            while (row.squaredNorm() > row_bound_sq) {
                reject();
                row = gaussian_vector(rng, k);
            }
            w.row(i) = row.transpose();
        }
        if (operator_norm(w) <= norm_bound) return {std::move(w), rejections};
        reject();
    }
}

}  // namespace

Matrix sample_theta_matrix(Eigen::Index n, Eigen::Index k, std::uint64_t seed, std::size_t cap) {
    return sample_theta_with_count(n, k, seed, cap).first;
}

double matrix_sup_deviation(const Matrix& w, double epsilon, std::size_t pair_trials, std::uint64_t seed) {
    require(pair_trials >= 1, "matrix_sup_deviation: needs at least one pair");
    double worst = -std::numeric_limits<double>::infinity();
    for (const DirectionPair& p : sample_direction_pairs(w.cols(), pair_trials, seed)) {
        worst = std::max(worst, concentration_sup_over_u(w, p.x, p.y, epsilon));
    }
    return worst;
}

ConcentrationResult uniform_concentration_experiment(Eigen::Index k, Eigen::Index n, double epsilon,
                                                     std::size_t matrix_trials, std::size_t pair_trials,
                                                     std::uint64_t seed, double threshold) {
    require(n >= k && k >= 1, "uniform_concentration_experiment: needs n >= k >= 1");
    require(epsilon > 0.0, "uniform_concentration_experiment: epsilon must be positive");
    require(matrix_trials >= 1, "uniform_concentration_experiment: needs at least one matrix trial");

    ConcentrationResult result;
    result.k = k;
    result.n = n;
    result.epsilon = epsilon;
    result.threshold = threshold;
    std::size_t exceeding = 0;
    for (std::size_t t = 0; t < matrix_trials; ++t) {
        ConcentrationTrial trial;
        trial.seed = derive_seed(seed, tag_of("concentration"), t);
        auto [w, rejections] = sample_theta_with_count(n, k, trial.seed, 1000);
        trial.rejections = rejections;
        trial.max_deviation = matrix_sup_deviation(w, epsilon, pair_trials, derive_seed(trial.seed, tag_of("pairs"), 0));
        if (trial.max_deviation > threshold) ++exceeding;
        result.trials.push_back(trial);
    }
    result.fraction_exceeding = static_cast<double>(exceeding) / static_cast<double>(matrix_trials);

    std::vector<double> maxima;
    for (const auto& t : result.trials) maxima.push_back(t.max_deviation);
    std::sort(maxima.begin(), maxima.end());
    const std::size_t mid = maxima.size() / 2;
    result.median_max_deviation = maxima.size() % 2 == 1 ? maxima[mid] : 0.5 * (maxima[mid - 1] + maxima[mid]);
    return result;
}

void write_concentration_csv(std::ostream& out, const ConcentrationResult& result) {
    out << "seed,n,k,epsilon,max_deviation\n";
    for (const auto& t : result.trials) {
        out << t.seed << ',' << result.n << ',' << result.k << ',' << format_double(result.epsilon) << ','
            << format_double(t.max_deviation) << '\n';
    }
}

}  // namespace genprior
