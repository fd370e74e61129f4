#pragma once

#include "genprior/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

namespace genprior {

/// B_w = { v : |w . v| <= epsilon }
struct Slab {
    Vector w;
    double epsilon = 1.0;
};

/// B_{M,t,u} = { v : sum_i |M_i v| (M_i u)^2 <= t n }
struct WeightedSlab {
    Matrix m;
    double t = 1.0;
    Vector u;
};

/// A symmetric convex pseudo-ball. Both variants are sublevel sets of a seminorm, so
/// membership of s * v for s >= 0 is decided by gauge(v) * s <= 1.
class PseudoBallSpec {
public:
    PseudoBallSpec(Slab slab);
    PseudoBallSpec(WeightedSlab slab);

    Eigen::Index dim() const;
    bool contains(const Vector& v) const;
    /// Smallest s >= 0 with v in s B (0 when v lies in the lineality space of B).
    double gauge(const Vector& v) const;

    const std::variant<Slab, WeightedSlab>& variant() const { return spec_; }

private:
    std::variant<Slab, WeightedSlab> spec_;
    Vector weighted_row_coeffs_;  // (M_i u)^2 for the weighted slab
};

bool pseudo_ball_contains(const PseudoBallSpec& spec, const Vector& v);

struct WidenessCertificate {
    double delta = 0.0;
    double gamma_estimate = 0.0;
    std::size_t samples = 0;
    double analytic_lower_bound = 0.0;
    double standard_error = 0.0;
};

/// Fraction of uniform samples from the ball delta B that land in the pseudo-ball.
WidenessCertificate volume_fraction(const PseudoBallSpec& spec, double delta, std::size_t samples,
                                    std::uint64_t seed);

/// Exact fraction of delta B inside a slab: I_{a^2}(1/2, (k+1)/2) with a = eps / (||w|| delta).
double slab_exact_fraction(const Slab& slab, double delta);

/// max(0, 1 - 72 delta / (t sqrt(pi))), the volume bound for B_{M,t,u} with M in Theta.
double weighted_slab_lower_bound(double t, double delta);

/// gamma^{-1} (5 / delta)^k
double net_size_bound(double gamma, double delta, Eigen::Index k);

struct AsphericalNet {
    std::vector<Vector> centers;    ///< x_0 = e_1, then uncovered sphere points in scan order
    std::vector<Vector> perturbed;  ///< y_j uniform in x_j + (B cap delta B) / 2
    double delta = 0.0;
    double gamma = 0.0;             ///< volume fraction estimate used for the size bound
    double gamma_standard_error = 0.0;
    std::size_t sphere_test_points = 0;
    std::size_t covered_test_points = 0;
};

class NetConstructionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct NetOptions {
    std::size_t max_centers = 200000;
    std::size_t gamma_samples = 20000;
    std::size_t rejection_cap = 1000000;
};

/// Deterministic low-discrepancy sequence on S^{k-1} (k = 1 gives {+1, -1}).
std::vector<Vector> sphere_sequence(Eigen::Index k, std::size_t count);

/// v in (B cap delta B) / 2
bool in_half_bounded_ball(const PseudoBallSpec& spec, double delta, const Vector& v);

AsphericalNet build_aspherical_net(const PseudoBallSpec& spec, double delta, std::size_t sphere_test_points,
                                   std::uint64_t seed, const NetOptions& options = {});

/// True when p lies in y_j + B for some net point.
bool net_covers(const AsphericalNet& net, const PseudoBallSpec& spec, const Vector& p);

/// Pairwise check that x_{j1} - x_{j2} is never in (B cap delta B) / 2, i.e. the quarter-size
/// translates are disjoint.
bool net_quarter_sets_disjoint(const AsphericalNet& net, const PseudoBallSpec& spec);

/// f_M(x, y) = (1/n) u^T G_{M,-eps}(x, y) u
double smoothed_quadratic_form(const Matrix& m, const Vector& x, const Vector& y, const Vector& u, double epsilon);

struct PseudoLipschitzOptions {
    /// Perturbations are drawn radially up to this fraction of the pseudo-ball boundary.
    double radius_scale = 1.0;
};

/// Max |f_M(x,y) - f_M(x~,y~)| over sampled points and perturbations in B_{M, eps^2/4, u}.
double pseudo_lipschitz_check(const Matrix& m, const Vector& u, double epsilon, std::size_t trials,
                              std::uint64_t seed, const PseudoLipschitzOptions& options = {});

/// (1/n) u^T G_{W,-eps}(x,y) u - u^T Q_{x,y} u
double concentration_deviation(const Matrix& w, const Vector& x, const Vector& y, const Vector& u,
                               double epsilon);

/// sup over u of the above at a fixed (x, y): the top eigenvalue of (1/n) G_{W,-eps} - Q.
double concentration_sup_over_u(const Matrix& w, const Vector& x, const Vector& y, double epsilon);

class ThetaRejectionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Gaussian N(0,1) n x k matrix conditioned on membership in Theta. Rows are rejected individually
/// against the row-norm bound, whole matrices against the operator-norm bound; `cap` limits the
/// total number of discarded draws.
Matrix sample_theta_matrix(Eigen::Index n, Eigen::Index k, std::uint64_t seed, std::size_t cap = 1000);

struct ConcentrationTrial {
    std::uint64_t seed = 0;
    double max_deviation = 0.0;
    std::size_t rejections = 0;
};

struct ConcentrationResult {
    Eigen::Index k = 0;
    Eigen::Index n = 0;
    double epsilon = 0.0;
    double threshold = 0.0;
    std::vector<ConcentrationTrial> trials;
    double fraction_exceeding = 0.0;
    double median_max_deviation = 0.0;
};

ConcentrationResult uniform_concentration_experiment(Eigen::Index k, Eigen::Index n, double epsilon,
                                                     std::size_t matrix_trials, std::size_t pair_trials,
                                                     std::uint64_t seed, double threshold = 0.0);

/// Per-trial maximum deviation for one matrix, over `pair_trials` sampled (x, y) with u maximizing.
double matrix_sup_deviation(const Matrix& w, double epsilon, std::size_t pair_trials, std::uint64_t seed);

/// CSV with header `seed,n,k,epsilon,max_deviation`, one line per matrix trial.
void write_concentration_csv(std::ostream& out, const ConcentrationResult& result);

}  // namespace genprior
