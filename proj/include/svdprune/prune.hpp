#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "svdprune/svd.hpp"
#include "svdprune/types.hpp"

namespace svdprune {

enum class PruneMode { Adaptive, Budget };

/// Pruning parameters.
///
/// Adaptive mode keeps the smallest token prefix whose cumulative sorted
/// leverage reaches epsilon; budget mode keeps a fixed top-K by leverage.
/// rank_epsilon / select_epsilon override the shared epsilon for the variance
/// cut and the token cut separately; both default to epsilon.
struct PruneConfig {
    double epsilon = 0.9;
    std::size_t min_tokens = 4;
    std::optional<std::size_t> budget;
    PruneMode mode = PruneMode::Adaptive;
    std::optional<double> rank_epsilon;
    std::optional<double> select_epsilon;

    /// ParamError on out-of-range values or a Budget mode without a budget.
    void validate() const;
};

/// Explained-variance ratios of the singular spectrum and the rank k where
/// the cumulative ratio first reaches the threshold.
struct VarianceProfile {
    std::vector<double> ratios;     // s_i^2 / sum_j s_j^2, length r
    std::vector<double> cumulative; // running sums, length r
    std::size_t truncation_rank = 0;
};

/// Result of select_tokens: the kept indices in ascending order, the
/// cumulative sorted leverage at the final m, and the full descending-score
/// permutation used for the cut.
struct Selection {
    std::vector<std::size_t> indices;
    double cumulative_leverage = 0.0;
    std::vector<std::size_t> order; // length T
};

struct PruneResult {
    std::vector<std::size_t> selected_indices; // ascending, length m
    std::vector<double> leverage_scores;       // length T, sums to 1
    std::size_t truncation_rank = 0;
    double cumulative_leverage_at_m = 0.0;
    std::vector<std::size_t> permutation;      // length T, descending leverage
    FeatureMatrix pruned;                      // m x D, rows in original order
    std::vector<double> singular_values;       // diagnostics
    VarianceProfile variance;                  // diagnostics
};

/// Squared-singular-value variance ratios, compensated cumulative sums, and
/// the smallest k with cumulative >= epsilon (k = r if rounding leaves the
/// final cumulative just short). ParamError for epsilon outside (0, 1],
/// DegenerateInputError when all singular values are zero.
VarianceProfile variance_profile(const SvdFactors& f, double epsilon);

/// Rank-k leverage scores: l_t = (1/k) * sum_{j<k} U(t,j)^2. Length-T list
/// summing to 1 by orthonormality of U. ParamError for k outside [1, rank].
std::vector<double> leverage_scores(const SvdFactors& f, std::size_t k);

/// Sorts tokens by descending score (ties to the lower index), then keeps
/// the smallest prefix whose cumulative score reaches the selection epsilon
/// (adaptive) or a fixed min(budget, T) prefix (budget). The adaptive m is
/// clamped to [min(min_tokens, T), T]. ParamError on a negative score,
/// ShapeError on an empty list.
Selection select_tokens(const std::vector<double>& scores, const PruneConfig& cfg);

/// Full pipeline: thin_svd -> variance_profile -> leverage_scores ->
/// select_tokens -> row gather. The pruned matrix holds the selected rows
/// bit-exactly, in their original order.
PruneResult prune(const FeatureMatrix& m, const PruneConfig& cfg);

} // namespace svdprune
