#include "support/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "support/jacobi_eigen.hpp"

namespace testsupport {

OracleResult oracle_prune(const svdprune::FeatureMatrix& m, const svdprune::PruneConfig& cfg) {
    const std::size_t T = m.rows;
    const std::size_t D = m.cols;
    const bool gram_on_features = D <= T; // decompose the smaller Gram matrix
    const std::size_t n = gram_on_features ? D : T;

    svdprune::Matrix gram(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double acc = 0.0;
            if (gram_on_features) {
                for (std::size_t t = 0; t < T; ++t) acc += m(t, i) * m(t, j);
            } else {
                for (std::size_t d = 0; d < D; ++d) acc += m(i, d) * m(j, d);
            }
            gram(i, j) = gram(j, i) = acc;
        }
    }

    const EigenDecomposition eig = jacobi_symmetric_eigen(gram);

    std::vector<double> sigma(n);
    for (std::size_t i = 0; i < n; ++i) sigma[i] = std::sqrt(std::max(eig.values[i], 0.0));

    const double cutoff = static_cast<double>(std::max(T, D)) * sigma[0] * 2.2e-16;
    std::size_t r = 0;
    while (r < n && sigma[r] > cutoff) ++r;

    OracleResult out;
    out.singular_values.assign(sigma.begin(), sigma.begin() + r);

    // U columns: eigenvectors directly when the Gram ran on the token side,
    // else U = F * V * inv(Sigma).
    svdprune::Matrix u(T, r);
    if (gram_on_features) {
        for (std::size_t j = 0; j < r; ++j) {
            for (std::size_t t = 0; t < T; ++t) {
                double acc = 0.0;
                for (std::size_t d = 0; d < D; ++d) acc += m(t, d) * eig.vectors(d, j);
                u(t, j) = acc / sigma[j];
            }
        }
    } else {
        for (std::size_t j = 0; j < r; ++j)
            for (std::size_t t = 0; t < T; ++t) u(t, j) = eig.vectors(t, j);
    }

    double total = 0.0;
    for (std::size_t i = 0; i < r; ++i) total += sigma[i] * sigma[i];

    const double rank_eps = cfg.rank_epsilon.value_or(cfg.epsilon);
    std::size_t k = r;
    for (std::size_t cand = 1; cand <= r; ++cand) {
        double cum = 0.0; // fresh prefix sum per candidate
        for (std::size_t i = 0; i < cand; ++i) cum += sigma[i] * sigma[i] / total;
        if (cum >= rank_eps) {
            k = cand;
            break;
        }
    }
    out.truncation_rank = k;

    out.leverage.assign(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j) acc += u(t, j) * u(t, j);
        out.leverage[t] = acc / static_cast<double>(k);
    }

    std::vector<std::size_t> order(T);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (out.leverage[a] != out.leverage[b]) return out.leverage[a] > out.leverage[b];
        return a < b;
    });

    std::size_t keep = 0;
    if (cfg.mode == svdprune::PruneMode::Budget) {
        keep = std::min(*cfg.budget, T);
    } else {
        const double sel_eps = cfg.select_epsilon.value_or(cfg.epsilon);
        keep = T;
        for (std::size_t cand = 1; cand <= T; ++cand) {
            double cum = 0.0;
            for (std::size_t i = 0; i < cand; ++i) cum += out.leverage[order[i]];
            if (cum >= sel_eps) {
                keep = cand;
                break;
            }
        }
        keep = std::max(keep, std::min(cfg.min_tokens, T));
    }

    out.selected.assign(order.begin(), order.begin() + keep);
    std::sort(out.selected.begin(), out.selected.end());
    return out;
}

} // namespace testsupport
