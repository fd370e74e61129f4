#include "genprior/wdc.hpp"

#include "genprior/linalg.hpp"
#include "genprior/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <numbers>

namespace genprior {
namespace {

constexpr double kParallelTolerance = 1e-12;

struct PlaneBasis {
    Vector x_hat;
    Vector u;  // unit vector in span{x, y} orthogonal to x_hat; empty when x and y are parallel
    double cos_theta = 1.0;
    double sin_theta = 0.0;
    double theta = 0.0;
};

PlaneBasis plane_basis(const Vector& x, const Vector& y) {
    require_dims(x.size() == y.size(), "vectors must have equal length");
    const double nx = x.norm();
    const double ny = y.norm();
    require(nx > 0.0 && ny > 0.0, "x and y must be nonzero");

    PlaneBasis b;
    b.x_hat = x / nx;
    const Vector y_hat = y / ny;
    const double parallel = b.x_hat.dot(y_hat);
    Vector perp = y_hat - parallel * b.x_hat;
    const double perp_norm = perp.norm();
    b.theta = std::atan2(perp_norm, parallel);
    b.cos_theta = std::cos(b.theta);
    b.sin_theta = std::sin(b.theta);
    if (perp_norm >= kParallelTolerance) b.u = perp / perp_norm;
    return b;
}

}  // namespace

double angle_between(const Vector& x, const Vector& y) { return plane_basis(x, y).theta; }

Matrix swap_matrix(const Vector& x, const Vector& y) {
    const PlaneBasis b = plane_basis(x, y);
    const Matrix xx = b.x_hat * b.x_hat.transpose();
    if (b.u.size() == 0) {
        // y = +-x: M x^ = +-x^ and M vanishes off the line.
        return b.cos_theta >= 0.0 ? xx : Matrix(-xx);
    }
    // In the basis {x^, u}: M = [[c, s], [s, -c]].
    const Matrix uu = b.u * b.u.transpose();
    const Matrix xu = b.x_hat * b.u.transpose();
    return b.cos_theta * (xx - uu) + b.sin_theta * (xu + xu.transpose());
}

QMatrix q_matrix(const Vector& x, const Vector& y) {
    const PlaneBasis b = plane_basis(x, y);
    const Eigen::Index k = x.size();
    constexpr double two_pi = 2.0 * std::numbers::pi;
    QMatrix q;
    q.angle = b.theta;
    q.matrix = ((std::numbers::pi - b.theta) / two_pi) * Matrix::Identity(k, k);
    if (b.u.size() != 0) q.matrix += (b.sin_theta / two_pi) * swap_matrix(x, y);
    return q;
}

Matrix active_gram(const Matrix& w, const Vector& x, const Vector& y) {
    require_dims(w.cols() == x.size() && w.cols() == y.size(), "active_gram: dimension mismatch");
    const Vector wx = matvec(w, x);
    const Vector wy = matvec(w, y);
    std::vector<double> weights(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        weights[static_cast<std::size_t>(i)] = (wx[i] > 0.0 && wy[i] > 0.0) ? 1.0 : 0.0;
    }
    Matrix gram = Matrix::Zero(w.cols(), w.cols());
    add_weighted_gram(w, weights, gram);
    return gram;
}

std::vector<DirectionPair> sample_direction_pairs(Eigen::Index k, std::size_t count, std::uint64_t seed) {
    require(k >= 1, "sample_direction_pairs: k must be positive");
    Rng rng(seed);
    std::vector<DirectionPair> pairs;
    pairs.reserve(count);

    const Vector e1 = Vector::Unit(k, 0);
    const Vector a = uniform_sphere(rng, k);
    std::vector<DirectionPair> extremes{{e1, e1}, {e1, -e1}, {a, a}, {a, -a}};
    if (k >= 2) {
        extremes.push_back({e1, Vector::Unit(k, 1)});
        Vector b = uniform_sphere(rng, k);
        b -= b.dot(a) * a;
        if (b.norm() > 1e-8) extremes.push_back({a, b.normalized()});
    }
    for (const DirectionPair& p : extremes) {
        if (pairs.size() == count) break;
        pairs.push_back(p);
    }
    while (pairs.size() < count) {
        Vector x = uniform_sphere(rng, k);
        Vector y = uniform_sphere(rng, k);
        pairs.push_back({std::move(x), std::move(y)});
    }
    return pairs;
}

double wdc_pair_deviation(const Matrix& w, const Vector& x, const Vector& y, bool normalized) {
    const double scale = normalized ? 1.0 / static_cast<double>(w.rows()) : 1.0;
    const Matrix diff = scale * active_gram(w, x, y) - q_matrix(x, y).matrix;
    return operator_norm(diff);
}

WdcReport wdc_deviation(const Matrix& w, const std::vector<DirectionPair>& pairs, bool normalized) {
    require(!pairs.empty(), "wdc_deviation: pair list is empty");
    WdcReport report;
    report.normalized = normalized;
    report.max_deviation = -1.0;
    for (const DirectionPair& p : pairs) {
        const double dev = wdc_pair_deviation(w, p.x, p.y, normalized);
        if (dev > report.max_deviation) {
            report.max_deviation = dev;
            report.argmax_x = p.x;
            report.argmax_y = p.y;
        }
    }
    report.pairs_tested = pairs.size();
    return report;
}

std::string to_json(const WdcReport& report) {
    nlohmann::ordered_json j;
    j["max_deviation"] = report.max_deviation;
    j["pairs_tested"] = report.pairs_tested;
    j["normalized"] = report.normalized;
    j["argmax_x"] = std::vector<double>(report.argmax_x.data(), report.argmax_x.data() + report.argmax_x.size());
    j["argmax_y"] = std::vector<double>(report.argmax_y.data(), report.argmax_y.data() + report.argmax_y.size());
    return j.dump();
}

double smoothed_step(double z, double epsilon, StepSide side) {
    require(epsilon > 0.0, "smoothed_step: epsilon must be positive");
    if (side == StepSide::upper) {
        if (z >= 0.0) return 1.0;
        if (z <= -epsilon) return 0.0;
        return 1.0 + z / epsilon;
    }
    if (z <= 0.0) return 0.0;
    if (z >= epsilon) return 1.0;
    return z / epsilon;
}

Matrix smoothed_gram(const Matrix& w, const Vector& x, const Vector& y, double epsilon, StepSide side) {
    require(epsilon > 0.0, "smoothed_gram: epsilon must be positive");
    require_dims(w.cols() == x.size() && w.cols() == y.size(), "smoothed_gram: dimension mismatch");
    const Vector wx = matvec(w, x);
    const Vector wy = matvec(w, y);
    std::vector<double> weights(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        weights[static_cast<std::size_t>(i)] =
            smoothed_step(wx[i], epsilon, side) * smoothed_step(wy[i], epsilon, side);
    }
    Matrix gram = Matrix::Zero(w.cols(), w.cols());
    add_weighted_gram(w, weights, gram);
    return gram;
}

bool in_theta(const Matrix& w) {
    const double n = static_cast<double>(w.rows());
    const double k = static_cast<double>(w.cols());
    if (w.rows() == 0 || w.cols() == 0) return true;
    if (w.rowwise().norm().maxCoeff() > std::sqrt(2.0 * k)) return false;
    return operator_norm(w) <= 3.0 * std::sqrt(n);
}

double operator_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    constexpr int kMaxIterations = 10000;
    constexpr double kRelativeTolerance = 1e-10;

    Rng rng(0x6a09e667f3bcc908ULL);
    Vector v = uniform_sphere(rng, m.cols());
    double rayleigh = 0.0;
    for (int it = 0; it < kMaxIterations; ++it) {
        const Vector mv = matvec(m, v);
        const Vector z = matvec_t(m, mv);
        const double next = v.dot(z);  // = ||M v||^2 with ||v|| = 1
        const double z_norm = z.norm();
        if (z_norm == 0.0) return 0.0;
        v = z / z_norm;
        if (it > 0 && std::abs(next - rayleigh) < kRelativeTolerance * next) {
            rayleigh = next;
            break;
        }
        rayleigh = next;
    }
    // One more Rayleigh quotient at the final iterate, which is at least as accurate.
    const double final_value = matvec(m, v).squaredNorm();
    return std::sqrt(std::max(rayleigh, final_value));
}

}  // namespace genprior
