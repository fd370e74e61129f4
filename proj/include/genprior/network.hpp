#pragma once

#include "genprior/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace genprior {

/// Bias-free fully connected ReLU network G(x) = ReLU(W_d ... ReLU(W_1 x)).
/// Layer i maps R^{n_{i-1}} to R^{n_i}; n_0 = k is the latent dimension, n_d = n the output.
class GenerativeNetwork {
public:
    explicit GenerativeNetwork(std::vector<Matrix> weights);

    std::size_t depth() const { return weights_.size(); }
    const Matrix& layer(std::size_t i) const { return weights_.at(i); }
    const std::vector<Matrix>& layers() const { return weights_; }

    /// (n_0, n_1, ..., n_d)
    std::vector<Eigen::Index> dims() const;
    Eigen::Index input_dim() const { return weights_.front().cols(); }
    Eigen::Index output_dim() const { return weights_.back().rows(); }

private:
    std::vector<Matrix> weights_;
};

enum class VarianceRule {
    unit,           ///< entries N(0, 1)
    one_over_rows,  ///< entries N(0, 1/n_i) for a layer with n_i rows
};

Vector forward(const GenerativeNetwork& net, const Vector& x);

/// W_{+,x}: row i kept when W_i x > 0 (strictly), zeroed otherwise.
Matrix active_submatrix(const Matrix& w, const Vector& x);

/// Activation indicator 1{W_i x > 0} per row.
std::vector<double> active_mask(const Matrix& w, const Vector& x);

GenerativeNetwork sample_gaussian_network(const std::vector<Eigen::Index>& dims, VarianceRule rule,
                                          std::uint64_t seed);

struct HiddenTrace {
    /// states[i] is the input to layer i (states[0] = x); these are the x^{(i)} vectors.
    std::vector<Vector> states;
    /// prod_i W^{(i)}_{+, x^{(i)}}, an n x k matrix.
    Matrix active_product;
};

HiddenTrace hidden_trace(const GenerativeNetwork& net, const Vector& x);

struct Collision {
    Vector x;
    Vector y;
    bool rank_deficient = false;
    double row_norm_bound = 0.0;  ///< B = max_i ||W_i||
};

/// Two latent points with ReLU(Wx) = ReLU(Wy) that are at least 1/B apart, for m <= 2k - 1 rows.
/// Throws std::invalid_argument when m >= 2k.
Collision construct_collision(const Matrix& w);

/// Matrix text format: header `rows cols seed_or_zero`, then rows of whitespace separated
/// entries printed in shortest round-trip form.
void write_matrix(std::ostream& out, const Matrix& m, std::uint64_t seed = 0);

struct StoredMatrix {
    Matrix matrix;
    std::uint64_t seed = 0;
};

StoredMatrix read_matrix(std::istream& in);

/// Shortest representation that parses back to the identical double.
std::string format_double(double value);

}  // namespace genprior
