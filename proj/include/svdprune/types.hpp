#pragma once

#include <cstddef>
#include <vector>

namespace svdprune {

/// Storage precision of a feature matrix on disk. Internal arithmetic is
/// always double; Single only controls serialization width.
enum class Precision { Single, Double };

/// Dense row-major matrix of doubles. Plain storage, no ownership tricks.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data; // length rows * cols, row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
};

/// Vision-token feature matrix: one row per token, one column per feature
/// dimension. Immutable by convention once built; all library operations
/// take it by const reference.
struct FeatureMatrix {
    std::size_t rows = 0;              // token count T
    std::size_t cols = 0;              // hidden dimension D
    std::vector<double> data;          // length T * D, row-major
    Precision precision = Precision::Double;

    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }

    /// Checks T >= 1, D >= 1, data length T*D (ShapeError) and that every
    /// element is finite (DataError naming the first offending position).
    void validate() const;
};

} // namespace svdprune
