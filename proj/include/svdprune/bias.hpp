#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace svdprune {

/// How a key position's received attention is averaged into its score:
/// over all T tokens, or only over the queries allowed to attend to it.
enum class AveragingScheme { AllTokens, AttendingTokens };

/// Monte-Carlo setup for the causal-attention positional-bias experiment.
/// self_boost is an additive logit bonus on the diagonal, modeling the
/// strong self-attention seen in decoder layers.
struct BiasSimConfig {
    std::size_t seq_len = 576;
    std::size_t trials = 1000;
    double self_boost = 0.0;
    AveragingScheme scheme = AveragingScheme::AllTokens;
    std::uint64_t seed = 0;

    /// ParamError unless seq_len >= 2, trials >= 1, self_boost >= 0.
    void validate() const;
};

/// Per-position mean received-attention scores with standard errors.
struct BiasProfile {
    std::vector<double> mean_received; // length seq_len, each in [0, 1]
    std::vector<double> std_error;     // length seq_len, >= 0
    std::size_t argmax_position = 0;
};

/// Runs the simulation: per trial, i.i.d. standard-normal logits for every
/// unmasked (query, key) pair, self_boost added on the diagonal, row softmax,
/// then each key's received weight summed over its queries and divided by T
/// (AllTokens) or T - position (AttendingTokens). Per-trial RNG streams are
/// derived from (seed, trial index), so results are bit-reproducible for a
/// given seed regardless of scheduling.
BiasProfile simulate_bias(const BiasSimConfig& cfg);

/// Writes the profile as CSV with header "position,mean,stderr".
void write_profile_csv(const BiasProfile& profile, std::ostream& os);

namespace detail {
/// Numerically stable in-place softmax; the result sums to 1 within 1e-12.
void softmax_inplace(std::span<double> logits);
} // namespace detail

} // namespace svdprune
