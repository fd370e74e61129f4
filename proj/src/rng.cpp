#include "genprior/rng.hpp"

#include <cmath>
#include <string_view>

namespace genprior {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag, std::uint64_t index) {
    return splitmix64(splitmix64(splitmix64(parent) ^ tag) ^ index);
}

std::uint64_t tag_of(std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

Vector gaussian_vector(Rng& rng, Eigen::Index size, double stddev) {
    std::normal_distribution<double> normal(0.0, stddev);
    Vector v(size);
    for (Eigen::Index i = 0; i < size; ++i) v[i] = normal(rng);
    return v;
}

Matrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double stddev) {
    std::normal_distribution<double> normal(0.0, stddev);
    Matrix m(rows, cols);
    // Row-major fill order is part of the reproducibility contract.
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
}

Vector uniform_sphere(Rng& rng, Eigen::Index k) {
    for (;;) {
        Vector v = gaussian_vector(rng, k);
        const double norm = v.norm();
        if (norm > 1e-300) return v / norm;
    }
}

Vector uniform_ball(Rng& rng, Eigen::Index k, double radius) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vector direction = uniform_sphere(rng, k);
    const double r = radius * std::pow(unit(rng), 1.0 / static_cast<double>(k));
    return r * direction;
}

}  // namespace genprior
