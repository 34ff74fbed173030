#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "svdprune/bias.hpp"
#include "svdprune/errors.hpp"

using namespace svdprune;

namespace {

// E[received score at key t] under i.i.d. logits: each of query q's keys has
// expected weight 1/(q+1) by exchangeability.
std::vector<double> expected_means(std::size_t T, AveragingScheme scheme) {
    std::vector<double> e(T);
    for (std::size_t t = 0; t < T; ++t) {
        double sum = 0.0;
        for (std::size_t q = t; q < T; ++q) sum += 1.0 / static_cast<double>(q + 1);
        const double denom = scheme == AveragingScheme::AllTokens
                                 ? static_cast<double>(T)
                                 : static_cast<double>(T - t);
        e[t] = sum / denom;
    }
    return e;
}

} // namespace

TEST_CASE("two-token closed form") {
    BiasSimConfig cfg;
    cfg.seq_len = 2;
    cfg.trials = 4000;
    cfg.seed = 7;
    const BiasProfile p = simulate_bias(cfg);
    // E = [(1 + 1/2)/2, (1/2)/2] = [0.75, 0.25]
    CHECK(std::abs(p.mean_received[0] - 0.75) <= 3.0 * p.std_error[0]);
    CHECK(std::abs(p.mean_received[1] - 0.25) <= 3.0 * p.std_error[1]);
    CHECK(p.argmax_position == 0);
}

TEST_CASE("unbiased logits match the closed form at every position") {
    for (const AveragingScheme scheme :
         {AveragingScheme::AllTokens, AveragingScheme::AttendingTokens}) {
        BiasSimConfig cfg;
        cfg.seq_len = 8;
        cfg.trials = 3000;
        cfg.seed = 21;
        cfg.scheme = scheme;
        const BiasProfile p = simulate_bias(cfg);
        const std::vector<double> want = expected_means(cfg.seq_len, scheme);
        for (std::size_t t = 0; t < cfg.seq_len; ++t) {
            CAPTURE(t);
            CHECK(std::abs(p.mean_received[t] - want[t]) <= 3.0 * p.std_error[t]);
        }
    }
}

TEST_CASE("all-token scores sum to one") {
    // per trial the received weights total exactly T rows of softmax mass
    BiasSimConfig cfg;
    cfg.seq_len = 16;
    cfg.trials = 50;
    cfg.seed = 3;
    const BiasProfile p = simulate_bias(cfg);
    double total = 0.0;
    for (double m : p.mean_received) total += m;
    CHECK(std::abs(total - 1.0) <= 1e-12);
}

TEST_CASE("bias reversal between the two averaging schemes") {
    BiasSimConfig cfg;
    cfg.seq_len = 64;
    cfg.trials = 1000;
    cfg.seed = 1;

    SUBCASE("no boost, all-token averaging favors early keys") {
        const BiasProfile p = simulate_bias(cfg);
        CHECK(p.argmax_position == 0);
        // curve decreases along the whole sequence
        for (std::size_t t = 1; t < cfg.seq_len; ++t)
            CHECK(p.mean_received[t] < p.mean_received[t - 1]);
    }
    SUBCASE("strong self-attention plus attender averaging favors the last key") {
        cfg.self_boost = 5.0;
        cfg.scheme = AveragingScheme::AttendingTokens;
        const BiasProfile p = simulate_bias(cfg);
        CHECK(p.argmax_position == cfg.seq_len - 1);
    }
}

TEST_CASE("profiles are deterministic in the seed") {
    BiasSimConfig cfg;
    cfg.seq_len = 12;
    cfg.trials = 100;
    cfg.seed = 99;
    const BiasProfile a = simulate_bias(cfg);
    const BiasProfile b = simulate_bias(cfg);
    CHECK(a.mean_received == b.mean_received);
    CHECK(a.std_error == b.std_error);
    CHECK(a.argmax_position == b.argmax_position);

    cfg.seed = 100;
    const BiasProfile c = simulate_bias(cfg);
    CHECK(a.mean_received != c.mean_received);
}

TEST_CASE("profile values stay in range") {
    BiasSimConfig cfg;
    cfg.seq_len = 20;
    cfg.trials = 64;
    cfg.seed = 5;
    cfg.self_boost = 2.0;
    cfg.scheme = AveragingScheme::AttendingTokens;
    const BiasProfile p = simulate_bias(cfg);
    for (std::size_t t = 0; t < cfg.seq_len; ++t) {
        CHECK(p.mean_received[t] >= 0.0);
        CHECK(p.mean_received[t] <= 1.0);
        CHECK(p.std_error[t] >= 0.0);
    }
}

TEST_CASE("a single trial has zero standard error") {
    BiasSimConfig cfg;
    cfg.seq_len = 6;
    cfg.trials = 1;
    cfg.seed = 2;
    const BiasProfile p = simulate_bias(cfg);
    for (double se : p.std_error) CHECK(se == 0.0);
}

TEST_CASE("softmax is stable and stochastic") {
    std::vector<double> row = {1000.0, -1000.0, 999.0};
    detail::softmax_inplace(row);
    double sum = 0.0;
    for (double w : row) {
        CHECK(std::isfinite(w));
        CHECK(w >= 0.0);
        sum += w;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    CHECK(row[0] > row[2]);
    CHECK(row[2] > row[1]);

    std::vector<double> single = {3.5};
    detail::softmax_inplace(single);
    CHECK(single[0] == 1.0);
}

TEST_CASE("config validation") {
    BiasSimConfig cfg;
    cfg.seq_len = 1;
    CHECK_THROWS_AS(simulate_bias(cfg), ParamError);
    cfg = BiasSimConfig{};
    cfg.trials = 0;
    CHECK_THROWS_AS(simulate_bias(cfg), ParamError);
    cfg = BiasSimConfig{};
    cfg.self_boost = -0.5;
    CHECK_THROWS_AS(simulate_bias(cfg), ParamError);
}

TEST_CASE("CSV emission is stable") {
    BiasProfile p;
    p.mean_received = {0.5, 0.25};
    p.std_error = {0.0, 0.125};
    p.argmax_position = 0;
    std::ostringstream out;
    write_profile_csv(p, out);
    CHECK(out.str() == "position,mean,stderr\n0,0.5,0\n1,0.25,0.125\n");
}
