#pragma once

#include "genprior/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace genprior {

/// Angle between two nonzero vectors in [0, pi], computed as atan2(|perp|, parallel).
double angle_between(const Vector& x, const Vector& y);

/// M_{x,y}: maps x^ to y^ and y^ to x^, annihilates span{x, y}^perp. Symmetric, norm <= 1.
Matrix swap_matrix(const Vector& x, const Vector& y);

struct QMatrix {
    Matrix matrix;
    double angle = 0.0;
};

/// Gaussian expectation (1/n) E[W_{+,x}^T W_{+,y}] for i.i.d. N(0,1) entries:
/// ((pi - theta) / 2pi) I + (sin theta / 2pi) M_{x,y}.
QMatrix q_matrix(const Vector& x, const Vector& y);

/// sum_i 1{w_i x > 0} 1{w_i y > 0} w_i w_i^T, i.e. W_{+,x}^T W_{+,y}.
Matrix active_gram(const Matrix& w, const Vector& x, const Vector& y);

struct DirectionPair {
    Vector x;
    Vector y;
};

/// `count` uniform pairs on the sphere, preceded by the structured extremes
/// (equal, antipodal and orthogonal pairs along coordinate and random directions).
std::vector<DirectionPair> sample_direction_pairs(Eigen::Index k, std::size_t count, std::uint64_t seed);

struct WdcReport {
    double max_deviation = 0.0;
    Vector argmax_x;
    Vector argmax_y;
    std::size_t pairs_tested = 0;
    bool normalized = true;
};

/// ||c W_{+,x}^T W_{+,y} - Q_{x,y}|| at one pair, with c = 1/n (normalized) or 1 (unnormalized).
double wdc_pair_deviation(const Matrix& w, const Vector& x, const Vector& y, bool normalized);

WdcReport wdc_deviation(const Matrix& w, const std::vector<DirectionPair>& pairs, bool normalized);

/// Single-line JSON record: max_deviation, pairs_tested, normalized, argmax_x, argmax_y.
std::string to_json(const WdcReport& report);

enum class StepSide {
    lower,  ///< h_eps: 0 for z <= 0, z/eps on [0, eps], 1 above; a lower approximation of 1{z > 0}
    upper,  ///< h_{-eps}: 0 for z <= -eps, 1 + z/eps on [-eps, 0], 1 above; an upper approximation
};

double smoothed_step(double z, double epsilon, StepSide side);

/// G_{W,+-eps}(x, y) = sum_i h(w_i x) h(w_i y) w_i w_i^T.
Matrix smoothed_gram(const Matrix& w, const Vector& x, const Vector& y, double epsilon, StepSide side);

/// Membership in the good-matrix set: ||W|| <= 3 sqrt(n) and every row norm <= sqrt(2k).
bool in_theta(const Matrix& w);

/// Largest singular value by power iteration on M^T M from a fixed seeded start.
double operator_norm(const Matrix& m);

}  // namespace genprior
