#include "genprior/network.hpp"

#include "genprior/linalg.hpp"
#include "genprior/rng.hpp"

#include <cmath>
#include <string>

namespace genprior {

GenerativeNetwork::GenerativeNetwork(std::vector<Matrix> weights) : weights_(std::move(weights)) {
    require(!weights_.empty(), "network needs at least one layer");
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        const Matrix& w = weights_[i];
        require(w.rows() > 0 && w.cols() > 0, "layer " + std::to_string(i) + " is empty");
        require(w.allFinite(), "layer " + std::to_string(i) + " has non-finite entries");
        if (i > 0) {
            require_dims(w.cols() == weights_[i - 1].rows(),
                         "layer " + std::to_string(i) + " has " + std::to_string(w.cols()) +
                             " columns, previous layer has " + std::to_string(weights_[i - 1].rows()) + " rows");
        }
    }
}

std::vector<Eigen::Index> GenerativeNetwork::dims() const {
    std::vector<Eigen::Index> out{input_dim()};
    for (const Matrix& w : weights_) out.push_back(w.rows());
    return out;
}

Vector forward(const GenerativeNetwork& net, const Vector& x) {
    require_dims(x.size() == net.input_dim(), "forward: latent vector has length " + std::to_string(x.size()) +
                                                  ", network expects " + std::to_string(net.input_dim()));
    Vector h = x;
    for (const Matrix& w : net.layers()) {
        h = matvec(w, h);
        kernels::relu(as_span(h));
    }
    return h;
}

std::vector<double> active_mask(const Matrix& w, const Vector& x) {
    const Vector z = matvec(w, x);
    std::vector<double> mask(static_cast<std::size_t>(z.size()));
    for (Eigen::Index i = 0; i < z.size(); ++i) mask[static_cast<std::size_t>(i)] = z[i] > 0.0 ? 1.0 : 0.0;
    return mask;
}

Matrix active_submatrix(const Matrix& w, const Vector& x) {
    const std::vector<double> mask = active_mask(w, x);
    Matrix out = w;
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        if (mask[static_cast<std::size_t>(i)] == 0.0) out.row(i).setZero();
    }
    return out;
}

GenerativeNetwork sample_gaussian_network(const std::vector<Eigen::Index>& dims, VarianceRule rule,
                                          std::uint64_t seed) {
    require(dims.size() >= 2, "network dims need at least (k, n)");
    for (const Eigen::Index d : dims) require(d > 0, "network dims must be positive");

    Rng rng(seed);
    std::vector<Matrix> weights;
    for (std::size_t i = 1; i < dims.size(); ++i) {
        const double stddev =
            rule == VarianceRule::unit ? 1.0 : 1.0 / std::sqrt(static_cast<double>(dims[i]));
        weights.push_back(gaussian_matrix(rng, dims[i], dims[i - 1], stddev));
    }
    return GenerativeNetwork(std::move(weights));
}

HiddenTrace hidden_trace(const GenerativeNetwork& net, const Vector& x) {
    require_dims(x.size() == net.input_dim(), "hidden_trace: latent dimension mismatch");
    HiddenTrace trace;
    Matrix product = Matrix::Identity(x.size(), x.size());
    Vector h = x;
    for (const Matrix& w : net.layers()) {
        trace.states.push_back(h);
        const Matrix active = active_submatrix(w, h);
        product = active * product;
        h = matvec(w, h);
        kernels::relu(as_span(h));
    }
    trace.active_product = std::move(product);
    return trace;
}

namespace {

// Unit vector with its largest-magnitude entry made positive, so the null direction is canonical.
Vector canonical_sign(Vector v) {
    Eigen::Index idx = 0;
    v.cwiseAbs().maxCoeff(&idx);
    if (v[idx] < 0.0) v = -v;
    return v;
}

Vector null_direction(const Matrix& rows, Eigen::Index k) {
    if (rows.rows() == 0) return Vector::Unit(k, 0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(rows), Eigen::ComputeFullV);
    // rows has fewer than k rows, so the trailing right singular vector lies in its null space.
    return canonical_sign(svd.matrixV().col(k - 1));
}

}  // namespace

Collision construct_collision(const Matrix& w) {
    const Eigen::Index m = w.rows();
    const Eigen::Index k = w.cols();
    require(k >= 1 && m >= 1, "construct_collision: empty matrix");
    require(m <= 2 * k - 1, "construct_collision: needs m <= 2k - 1 rows, got m = " + std::to_string(m) +
                                ", k = " + std::to_string(k));

    Collision result;
    result.row_norm_bound = w.rowwise().norm().maxCoeff();

    // Column-pivoted elimination on W^T picks a spanning subset S of the rows of W.
    const Eigen::MatrixXd wt = Matrix(w.transpose());
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(wt);

    auto rank_deficient_pair = [&] {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(w), Eigen::ComputeFullV);
        result.rank_deficient = true;
        result.x = Vector::Zero(k);
        result.y = canonical_sign(svd.matrixV().col(k - 1));
        return result;
    };

    if (qr.rank() < k) return rank_deficient_pair();

    const auto& perm = qr.colsPermutation().indices();
    Matrix ws(k, k);
    Matrix wt_rows(m - k, k);
    for (Eigen::Index i = 0; i < k; ++i) ws.row(i) = w.row(perm[i]);
    for (Eigen::Index i = k; i < m; ++i) wt_rows.row(i - k) = w.row(perm[i]);

    const Vector minus_ones = Vector::Constant(k, -1.0);
    const Vector x = Eigen::MatrixXd(ws).fullPivLu().solve(minus_ones);

    const Vector v = null_direction(wt_rows, k);
    const double lambda = (ws * v).cwiseAbs().maxCoeff();
    if (lambda < 1e-12) return rank_deficient_pair();

    result.x = x;
    result.y = x + v / lambda;
    return result;
}

}  // namespace genprior
