#pragma once

#include "genprior/types.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace genprior {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Stable child seed for (parent, tag, index). Used for every per-trial and per-restart stream
/// so results do not depend on scheduling.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag, std::uint64_t index);

/// FNV-1a of a short label, for readable stream tags.
std::uint64_t tag_of(std::string_view label);

Vector gaussian_vector(Rng& rng, Eigen::Index size, double stddev = 1.0);
Matrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double stddev = 1.0);

/// Uniform point on the unit sphere S^{k-1}.
Vector uniform_sphere(Rng& rng, Eigen::Index k);

/// Uniform point in the ball of the given radius.
Vector uniform_ball(Rng& rng, Eigen::Index k, double radius);

}  // namespace genprior
