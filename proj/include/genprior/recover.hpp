#pragma once

#include "genprior/network.hpp"
#include "genprior/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace genprior {

/// y = A G(x*)
struct LinearMeasurement {
    Matrix a;
};

/// y = A G(x*) + e with a fixed noise vector
struct NoisyLinearMeasurement {
    Matrix a;
    Vector e;
};

/// y = A G(x*) + e, e ~ N(0, sigma^2 I) drawn from `seed`
struct GaussianNoiseMeasurement {
    Matrix a;
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

/// y = |A G(x*)|
struct PhaselessMeasurement {
    Matrix a;
};

/// y = sign(A G(x*) + xi + tau), sign(0) = +1
struct OneBitMeasurement {
    Matrix a;
    Vector tau;
    Vector xi;
};

using MeasurementModel = std::variant<LinearMeasurement, NoisyLinearMeasurement, GaussianNoiseMeasurement,
                                      PhaselessMeasurement, OneBitMeasurement>;

const Matrix& measurement_matrix(const MeasurementModel& model);

/// Noise vector realized by the model (zero for noiseless variants).
Vector noise_vector(const MeasurementModel& model);

Vector measure(const MeasurementModel& model, const GenerativeNetwork& net, const Vector& x_star);

/// f(x) = 1/2 ||A G(x) - y||^2
double empirical_risk(const GenerativeNetwork& net, const Matrix& a, const Vector& y, const Vector& x);

/// (prod_i W^{(i)}_{+,x^{(i)}})^T A^T (A G(x) - y)
Vector risk_subgradient(const GenerativeNetwork& net, const Matrix& a, const Vector& y, const Vector& x);

/// Smallest |pre-activation| over all layers at x.
double min_abs_preactivation(const GenerativeNetwork& net, const Vector& x);

struct RecoveryConfig {
    double step_size = 0.0;  ///< 0 selects 0.25 / (d L), L = ||A||^2 prod ||W_i||^2
    std::size_t max_iterations = 20000;
    double gradient_tolerance = 1e-9;
    bool negation_check = true;
    std::size_t restarts = 1;
    std::uint64_t init_seed = 0;
    std::optional<Vector> initial_point;  ///< used by restart 0 when set
    double init_scale = 1.0;              ///< random starts are N(0, init_scale^2 I)
};

struct RecoveryResult {
    Vector estimate;
    std::vector<double> loss_trace;
    std::vector<double> gradient_norms;
    std::vector<double> iterate_norms;
    std::optional<double> relative_error;
    std::optional<double> absolute_error;
    bool converged = false;
    bool diverged = false;
    std::size_t iterations = 0;
    std::size_t restart_index = 0;
    std::size_t restarts_run = 0;
    std::size_t negation_jumps = 0;
    double step_size = 0.0;
    double final_loss = 0.0;
};

double default_step_size(const GenerativeNetwork& net, const Matrix& a);

/// Fixed-step subgradient descent on the empirical risk with an optional per-iteration
/// negation check, over `restarts` starts; returns the lowest-loss run. A step that would
/// raise the loss is rejected and the step size halved, so accepted losses never increase.
/// Rejects phaseless and one-bit models.
RecoveryResult recover(const GenerativeNetwork& net, const MeasurementModel& model, const Vector& y,
                       const RecoveryConfig& config, const std::optional<Vector>& ground_truth = std::nullopt);

std::string to_json(const RecoveryResult& result);

/// CSV `iteration,loss,gradient_norm`.
void write_loss_trace_csv(std::ostream& out, const RecoveryResult& result);

struct RricReport {
    double max_ratio_deviation = 0.0;
    std::size_t quadruples_tested = 0;
    std::size_t quadruples_skipped = 0;
};

/// Sampled RRIC parameter of A with respect to G. Odd-indexed quadruples reuse (z, w) = (x, y).
RricReport rric_deviation(const Matrix& a, const GenerativeNetwork& net, std::size_t quadruples,
                          std::uint64_t seed);

std::string to_json(const RricReport& report);

enum class LandscapeMode { grid, multistart };

struct LandscapeOptions {
    LandscapeMode mode = LandscapeMode::multistart;
    std::size_t restarts = 200;
    std::size_t grid_points_per_axis = 20;
    double grid_extent = 3.0;
    double init_scale = 1.0;
    RecoveryConfig descent{.step_size = 0.0, .max_iterations = 5000, .gradient_tolerance = 1e-9,
                           .negation_check = false, .restarts = 1, .init_seed = 0,
                           .initial_point = std::nullopt, .init_scale = 1.0};
    /// Clustering radius relative to ||x*|| (absolute when x* is absent or zero).
    double cluster_radius = 1e-2;
    /// Gain applied to the correlation term of the one-bit loss.
    double one_bit_gain = 1.0;
};

enum class ClusterKind { truth, negative_multiple, zero, other };

std::string_view cluster_kind_name(ClusterKind kind);

struct Cluster {
    Vector center;
    std::size_t size = 0;
    double loss = 0.0;
    ClusterKind kind = ClusterKind::other;
    double scale_vs_truth = 0.0;  ///< <center, x*> / ||x*||^2
};

struct LandscapeSummary {
    std::vector<Cluster> clusters;
    std::vector<Vector> final_iterates;
    std::size_t starts = 0;
    double fraction_truth_or_negative = 0.0;
    double fraction_truth = 0.0;
    std::optional<double> negative_scale;  ///< empirical rho of the largest negative cluster
};

/// Loss minimized by landscape scans: squared loss for the linear variants,
/// 1/2 || |A G(x)| - y ||^2 for phaseless, and 1/2 ||G(x)||^2 - (gain/m) <y, A G(x)> for one-bit.
double landscape_loss(const GenerativeNetwork& net, const MeasurementModel& model, const Vector& y,
                      const Vector& x, double one_bit_gain = 1.0);
Vector landscape_gradient(const GenerativeNetwork& net, const MeasurementModel& model, const Vector& y,
                          const Vector& x, double one_bit_gain = 1.0);

LandscapeSummary landscape_scan(const GenerativeNetwork& net, const MeasurementModel& model, const Vector& y,
                                const LandscapeOptions& options, std::uint64_t seed,
                                const std::optional<Vector>& x_star = std::nullopt);

}  // namespace genprior
