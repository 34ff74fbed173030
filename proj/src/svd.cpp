#include "svdprune/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "svdprune/errors.hpp"

namespace svdprune {
namespace {

// Off-diagonal Gram entries below this (relative to the column norms) count
// as orthogonal. Leaves three orders of magnitude under the 1e-10
// orthonormality contract.
constexpr double kConvergenceTol = 1e-13;

// Column-major scratch buffer: pair rotations stream over contiguous columns.
struct ColMajor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    ColMajor(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
    double* col(std::size_t j) { return a.data() + j * rows; }
    const double* col(std::size_t j) const { return a.data() + j * rows; }
};

double dot(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void rotate_cols(double* x, double* y, std::size_t n, double c, double s) {
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x[i];
        const double yi = y[i];
        x[i] = c * xi - s * yi;
        y[i] = s * xi + c * yi;
    }
}

// One-sided (Hestenes) Jacobi: cyclic plane rotations make the columns of w
// mutually orthogonal, accumulating the rotations into v. On return norms2
// holds freshly computed squared column norms. Throws NumericalError when the
// sweep cap runs out before a clean sweep.
void orthogonalize_columns(ColMajor& w, ColMajor& v, std::vector<double>& norms2,
                           int max_sweeps) {
    const std::size_t n = w.cols;
    const std::size_t rows = w.rows;
    norms2.assign(n, 0.0);

    bool converged = n <= 1;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        // Fresh norms each sweep; the in-loop updates below only bridge until
        // the next refresh, bounding drift.
        for (std::size_t j = 0; j < n; ++j) norms2[j] = dot(w.col(j), w.col(j), rows);
        converged = true;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double app = norms2[p];
                const double aqq = norms2[q];
                if (app == 0.0 || aqq == 0.0) continue;
                const double apq = dot(w.col(p), w.col(q), rows);
                if (std::abs(apq) <= kConvergenceTol * std::sqrt(app * aqq)) continue;
                converged = false;

                const double tau = (aqq - app) / (2.0 * apq);
                const double t =
                    std::copysign(1.0, tau) / (std::abs(tau) + std::hypot(1.0, tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                rotate_cols(w.col(p), w.col(q), rows, c, s);
                rotate_cols(v.col(p), v.col(q), v.rows, c, s);
                // Rotated 2x2 Gram diagonal; the p column takes the smaller
                // value. Clamp against cancellation on near-null pairs.
                norms2[p] = std::max(app - t * apq, 0.0);
                norms2[q] = aqq + t * apq;
            }
        }
    }
    if (!converged)
        throw NumericalError("thin_svd: Jacobi sweeps did not converge within the cap");
    for (std::size_t j = 0; j < n; ++j) norms2[j] = dot(w.col(j), w.col(j), rows);
}

// Largest-magnitude entry per U column made non-negative (ties to the lowest
// row index); the matching Vt row absorbs the flip.
void apply_sign_convention(SvdFactors& f) {
    for (std::size_t j = 0; j < f.rank; ++j) {
        std::size_t imax = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < f.u.rows; ++i) {
            const double a = std::abs(f.u(i, j));
            if (a > best) {
                best = a;
                imax = i;
            }
        }
        if (f.u(imax, j) < 0.0) {
            for (std::size_t i = 0; i < f.u.rows; ++i) f.u(i, j) = -f.u(i, j);
            for (std::size_t i = 0; i < f.vt.cols; ++i) f.vt(j, i) = -f.vt(j, i);
        }
    }
}

} // namespace

SvdFactors thin_svd(const FeatureMatrix& m, const SvdOptions& opts) {
    if (m.rows < 1 || m.cols < 1 || m.data.size() != m.rows * m.cols)
        throw ShapeError("thin_svd: inconsistent matrix shape");
    const std::size_t T = m.rows;
    const std::size_t D = m.cols;

    double max_abs = 0.0;
    for (double x : m.data) max_abs = std::max(max_abs, std::abs(x));
    if (max_abs == 0.0)
        throw DegenerateInputError("thin_svd: all-zero matrix has no informative decomposition");

    // Exact power-of-two prescale keeps Gram entries in range for extreme
    // magnitudes; undone exactly on the singular values.
    int scale_exp = 0;
    std::frexp(max_abs, &scale_exp);
    const double prescale = std::ldexp(1.0, -scale_exp);

    // The kernel wants at least as many rows as columns; decompose the
    // transpose when the input is wide and swap the roles of the factors.
    const bool transposed = T < D;
    const std::size_t work_rows = transposed ? D : T;
    const std::size_t work_cols = transposed ? T : D;

    ColMajor w(work_rows, work_cols);
    if (!transposed) {
        for (std::size_t j = 0; j < work_cols; ++j) {
            double* wj = w.col(j);
            for (std::size_t i = 0; i < work_rows; ++i) wj[i] = m.data[i * D + j] * prescale;
        }
    } else {
        for (std::size_t j = 0; j < work_cols; ++j) {
            double* wj = w.col(j);
            const double* row = m.data.data() + j * D;
            for (std::size_t i = 0; i < work_rows; ++i) wj[i] = row[i] * prescale;
        }
    }

    ColMajor v(work_cols, work_cols);
    for (std::size_t j = 0; j < work_cols; ++j) v.col(j)[j] = 1.0;

    std::vector<double> norms2;
    orthogonalize_columns(w, v, norms2, opts.max_sweeps);

    std::vector<double> sigma(work_cols);
    for (std::size_t j = 0; j < work_cols; ++j) sigma[j] = std::sqrt(norms2[j]);

    std::vector<std::size_t> order(work_cols);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

    const double cutoff =
        static_cast<double>(std::max(T, D)) * sigma[order[0]] * kRankEpsilon;
    std::size_t r = 0;
    while (r < work_cols && sigma[order[r]] > cutoff) ++r;

    SvdFactors f;
    f.rank = r;
    f.singular_values.resize(r);
    f.u = Matrix(T, r);
    f.vt = Matrix(r, D);
    for (std::size_t jj = 0; jj < r; ++jj) {
        const std::size_t src = order[jj];
        f.singular_values[jj] = std::ldexp(sigma[src], scale_exp);
        const double inv = 1.0 / sigma[src];
        if (!transposed) {
            const double* wc = w.col(src);
            for (std::size_t i = 0; i < T; ++i) f.u(i, jj) = wc[i] * inv;
            const double* vc = v.col(src);
            for (std::size_t j = 0; j < D; ++j) f.vt(jj, j) = vc[j];
        } else {
            const double* vc = v.col(src);
            for (std::size_t i = 0; i < T; ++i) f.u(i, jj) = vc[i];
            const double* wc = w.col(src);
            for (std::size_t j = 0; j < D; ++j) f.vt(jj, j) = wc[j] * inv;
        }
    }
    apply_sign_convention(f);
    return f;
}

ValidationReport validate_factors(const SvdFactors& f, const FeatureMatrix& m) {
    const std::size_t T = m.rows;
    const std::size_t D = m.cols;
    const std::size_t r = f.rank;
    if (r < 1 || f.u.rows != T || f.u.cols != r || f.vt.rows != r || f.vt.cols != D ||
        f.singular_values.size() != r || m.data.size() != T * D)
        throw ShapeError("validate_factors: factor shapes inconsistent with the matrix");

    ValidationReport rep;

    double worst_u = 0.0;
    for (std::size_t a = 0; a < r; ++a) {
        for (std::size_t b = a; b < r; ++b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < T; ++i) acc += f.u(i, a) * f.u(i, b);
            if (a == b) acc -= 1.0;
            worst_u = std::max(worst_u, std::abs(acc));
        }
    }
    rep.u_orthonormality = worst_u;

    double worst_v = 0.0;
    for (std::size_t a = 0; a < r; ++a) {
        for (std::size_t b = a; b < r; ++b) {
            double acc = 0.0;
            for (std::size_t j = 0; j < D; ++j) acc += f.vt(a, j) * f.vt(b, j);
            if (a == b) acc -= 1.0;
            worst_v = std::max(worst_v, std::abs(acc));
        }
    }
    rep.v_orthonormality = worst_v;

    double err2 = 0.0;
    double ref2 = 0.0;
    std::vector<double> row(D);
    for (std::size_t i = 0; i < T; ++i) {
        std::fill(row.begin(), row.end(), 0.0);
        for (std::size_t k = 0; k < r; ++k) {
            const double uik = f.u(i, k) * f.singular_values[k];
            const double* vtk = f.vt.data.data() + k * D;
            for (std::size_t j = 0; j < D; ++j) row[j] += uik * vtk[j];
        }
        const double* src = m.data.data() + i * D;
        for (std::size_t j = 0; j < D; ++j) {
            const double d = src[j] - row[j];
            err2 += d * d;
            ref2 += src[j] * src[j];
        }
    }
    rep.reconstruction = ref2 > 0.0 ? std::sqrt(err2) / std::sqrt(ref2) : std::sqrt(err2);

    rep.singular_values_descending = true;
    for (std::size_t i = 0; i < r; ++i) {
        if (f.singular_values[i] <= 0.0 ||
            (i + 1 < r && f.singular_values[i] < f.singular_values[i + 1])) {
            rep.singular_values_descending = false;
            break;
        }
    }

    rep.sign_convention_ok = true;
    for (std::size_t j = 0; j < r && rep.sign_convention_ok; ++j) {
        std::size_t imax = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < T; ++i) {
            const double a = std::abs(f.u(i, j));
            if (a > best) {
                best = a;
                imax = i;
            }
        }
        if (f.u(imax, j) < 0.0) rep.sign_convention_ok = false;
    }

    rep.pass = rep.u_orthonormality <= 1e-10 && rep.v_orthonormality <= 1e-10 &&
               rep.reconstruction <= 1e-8 && rep.singular_values_descending &&
               rep.sign_convention_ok;
    return rep;
}

} // namespace svdprune
