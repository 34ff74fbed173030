#pragma once

#include <cstddef>
#include <vector>

#include "svdprune/types.hpp"

namespace svdprune {

/// Thin SVD factors of a T x D feature matrix F = U * diag(s) * Vt.
///
/// Contract (validated by validate_factors):
///   - columns of U orthonormal, max |U^T U - I| <= 1e-10
///   - rows of Vt orthonormal to the same tolerance
///   - singular values strictly positive, non-increasing
///   - ||F - U diag(s) Vt||_F <= 1e-8 * ||F||_F
///   - per U column, the entry of largest magnitude is non-negative
///     (ties resolved to the lowest row index); Vt rows carry the
///     compensating sign
struct SvdFactors {
    Matrix u;                            // T x r
    std::vector<double> singular_values; // length r, descending
    Matrix vt;                           // r x D
    std::size_t rank = 0;                // r, numerical rank
};

struct SvdOptions {
    int max_sweeps = 100; // cyclic Jacobi sweep cap
};

/// Residuals measured by validate_factors.
struct ValidationReport {
    double u_orthonormality = 0.0;  // max |U^T U - I|
    double v_orthonormality = 0.0;  // max |Vt Vt^T - I|
    double reconstruction = 0.0;    // ||F - U S Vt||_F / ||F||_F
    bool singular_values_descending = false;
    bool sign_convention_ok = false;
    bool pass = false;
};

/// Relative cutoff for the numerical rank: keep s_i > max(T, D) * s_1 * kRankEpsilon.
inline constexpr double kRankEpsilon = 2.2e-16;

/// Deterministic thin SVD by one-sided (Hestenes) cyclic Jacobi rotations.
///
/// The wider side is transposed internally so the kernel always orthogonalizes
/// min(T, D) columns; results are reported in the original orientation. Fixed
/// sweep order and a scale-invariant sign convention make repeat calls on
/// identical input bit-identical.
///
/// Throws DegenerateInputError for an exactly zero matrix, NumericalError if
/// the sweep cap is exhausted, ShapeError for inconsistent dimensions.
SvdFactors thin_svd(const FeatureMatrix& m, const SvdOptions& opts = {});

/// Measures the SvdFactors contract against its source matrix without
/// mutating either. Throws ShapeError when shapes are inconsistent.
ValidationReport validate_factors(const SvdFactors& f, const FeatureMatrix& m);

} // namespace svdprune
