#include "genprior/network.hpp"

#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace genprior {

std::string format_double(double value) {
    std::array<char, 64> buffer{};
    const auto [end, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return std::string(buffer.data(), end);
}

void write_matrix(std::ostream& out, const Matrix& m, std::uint64_t seed) {
    out << m.rows() << ' ' << m.cols() << ' ' << seed << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) out << ' ';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

namespace {

double parse_double(const std::string& token) {
    double value = 0.0;
    const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || end != token.data() + token.size()) {
        throw std::runtime_error("read_matrix: malformed entry '" + token + "'");
    }
    return value;
}

}  // namespace

StoredMatrix read_matrix(std::istream& in) {
    long long rows = 0;
    long long cols = 0;
    StoredMatrix stored;
    if (!(in >> rows >> cols >> stored.seed) || rows < 0 || cols < 0) {
        throw std::runtime_error("read_matrix: malformed header");
    }
    stored.matrix.resize(rows, cols);
    std::string token;
    for (long long i = 0; i < rows; ++i) {
        for (long long j = 0; j < cols; ++j) {
            if (!(in >> token)) throw std::runtime_error("read_matrix: truncated data");
            stored.matrix(i, j) = parse_double(token);
        }
    }
    return stored;
}

}  // namespace genprior
