#pragma once

// Eigen-level wrappers over the dispatched kernels.

#include "genprior/kernels.hpp"
#include "genprior/types.hpp"

namespace genprior {

inline Vector matvec(const Matrix& m, const Vector& x) {
    require_dims(m.cols() == x.size(), "matvec: matrix has " + std::to_string(m.cols()) +
                                           " columns but vector has length " + std::to_string(x.size()));
    Vector y(m.rows());
    kernels::table().gemv(m.data(), static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()),
                          x.data(), y.data());
    return y;
}

inline Vector matvec_t(const Matrix& m, const Vector& x) {
    require_dims(m.rows() == x.size(), "matvec_t: matrix has " + std::to_string(m.rows()) +
                                           " rows but vector has length " + std::to_string(x.size()));
    Vector y(m.cols());
    kernels::table().gemv_t(m.data(), static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()),
                            x.data(), y.data());
    return y;
}

/// out += sum_i weights[i] * m_i m_i^T
inline void add_weighted_gram(const Matrix& m, std::span<const double> weights, Matrix& out) {
    require_dims(static_cast<Eigen::Index>(weights.size()) == m.rows(), "weighted gram: weight count mismatch");
    require_dims(out.rows() == m.cols() && out.cols() == m.cols(), "weighted gram: output must be cols x cols");
    kernels::table().weighted_gram(m.data(), static_cast<std::size_t>(m.rows()),
                                   static_cast<std::size_t>(m.cols()), weights.data(), out.data());
}

}  // namespace genprior
