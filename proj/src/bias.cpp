#include "svdprune/bias.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>

#include "svdprune/errors.hpp"

namespace svdprune {
namespace detail {

void softmax_inplace(std::span<double> logits) {
    if (logits.empty()) return;
    const double peak = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double& x : logits) {
        x = std::exp(x - peak);
        sum += x;
    }
    for (double& x : logits) x /= sum;
}

} // namespace detail

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Independent stream per trial: results do not depend on how trials are
// scheduled, only on (seed, trial).
std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial) {
    return mix64(mix64(seed) ^ mix64(static_cast<std::uint64_t>(trial) + 1));
}

} // namespace

void BiasSimConfig::validate() const {
    if (seq_len < 2) throw ParamError("seq_len must be at least 2");
    if (trials < 1) throw ParamError("trials must be at least 1");
    if (!(self_boost >= 0.0)) throw ParamError("self_boost must be non-negative");
}

BiasProfile simulate_bias(const BiasSimConfig& cfg) {
    cfg.validate();
    const std::size_t T = cfg.seq_len;

    // Welford running moments per key position, over trials.
    std::vector<double> mean(T, 0.0);
    std::vector<double> m2(T, 0.0);
    std::vector<double> received(T);
    std::vector<double> row(T);

    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        std::mt19937_64 rng(trial_seed(cfg.seed, trial));
        std::normal_distribution<double> gauss(0.0, 1.0);

        std::fill(received.begin(), received.end(), 0.0);
        for (std::size_t q = 0; q < T; ++q) {
            const std::size_t width = q + 1; // causal mask: keys 0..q
            for (std::size_t t = 0; t < width; ++t) row[t] = gauss(rng);
            row[q] += cfg.self_boost;
            detail::softmax_inplace(std::span<double>(row.data(), width));
            for (std::size_t t = 0; t < width; ++t) received[t] += row[t];
        }

        const double n = static_cast<double>(trial + 1);
        for (std::size_t t = 0; t < T; ++t) {
            const double denom = cfg.scheme == AveragingScheme::AllTokens
                                     ? static_cast<double>(T)
                                     : static_cast<double>(T - t);
            const double score = received[t] / denom;
            const double delta = score - mean[t];
            mean[t] += delta / n;
            m2[t] += delta * (score - mean[t]);
        }
    }

    BiasProfile profile;
    profile.mean_received = std::move(mean);
    profile.std_error.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        const double var =
            cfg.trials > 1 ? m2[t] / static_cast<double>(cfg.trials - 1) : 0.0;
        profile.std_error[t] =
            std::sqrt(std::max(var, 0.0) / static_cast<double>(cfg.trials));
    }
    profile.argmax_position = 0;
    for (std::size_t t = 1; t < T; ++t) {
        if (profile.mean_received[t] > profile.mean_received[profile.argmax_position])
            profile.argmax_position = t;
    }
    return profile;
}

void write_profile_csv(const BiasProfile& profile, std::ostream& os) {
    os << "position,mean,stderr\n";
    char line[96];
    for (std::size_t t = 0; t < profile.mean_received.size(); ++t) {
        std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g\n", t,
                      profile.mean_received[t], profile.std_error[t]);
        os << line;
    }
}

} // namespace svdprune
