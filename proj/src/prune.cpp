#include "svdprune/prune.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "svdprune/errors.hpp"

namespace svdprune {
namespace {

// Compensated (Kahan) accumulator. Cumulative thresholds compare against
// epsilon exactly, so the running sums must not drift.
struct Kahan {
    double sum = 0.0;
    double comp = 0.0;
    void add(double x) {
        const double y = x - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
};

void check_epsilon(double eps, const char* name) {
    if (!(eps > 0.0) || !(eps <= 1.0)) {
        std::ostringstream msg;
        msg << name << " must lie in (0, 1], got " << eps;
        throw ParamError(msg.str());
    }
}

} // namespace

void PruneConfig::validate() const {
    check_epsilon(epsilon, "epsilon");
    if (rank_epsilon) check_epsilon(*rank_epsilon, "rank_epsilon");
    if (select_epsilon) check_epsilon(*select_epsilon, "select_epsilon");
    if (min_tokens < 1) throw ParamError("min_tokens must be at least 1");
    if (budget && *budget < 1) throw ParamError("budget must be at least 1");
    if (mode == PruneMode::Budget && !budget)
        throw ParamError("budget mode requires a budget");
}

VarianceProfile variance_profile(const SvdFactors& f, double epsilon) {
    check_epsilon(epsilon, "epsilon");
    const std::size_t r = f.singular_values.size();
    double s1 = 0.0;
    for (double s : f.singular_values) s1 = std::max(s1, std::abs(s));
    if (r == 0 || s1 == 0.0)
        throw DegenerateInputError("variance_profile: all singular values are zero");

    // Normalizing by the largest value keeps the squares in range whatever
    // the input scale; the ratios are scale-free anyway.
    std::vector<double> sq(r);
    Kahan total;
    for (std::size_t i = 0; i < r; ++i) {
        const double q = f.singular_values[i] / s1;
        sq[i] = q * q;
        total.add(sq[i]);
    }

    VarianceProfile vp;
    vp.ratios.resize(r);
    vp.cumulative.resize(r);
    Kahan running;
    for (std::size_t i = 0; i < r; ++i) {
        vp.ratios[i] = sq[i] / total.sum;
        running.add(vp.ratios[i]);
        vp.cumulative[i] = running.sum;
    }

    vp.truncation_rank = r; // rounding can leave c_r a hair under epsilon = 1
    for (std::size_t i = 0; i < r; ++i) {
        if (vp.cumulative[i] >= epsilon) {
            vp.truncation_rank = i + 1;
            break;
        }
    }
    return vp;
}

std::vector<double> leverage_scores(const SvdFactors& f, std::size_t k) {
    if (k < 1 || k > f.rank) {
        std::ostringstream msg;
        msg << "leverage_scores: k = " << k << " outside [1, " << f.rank << "]";
        throw ParamError(msg.str());
    }
    const std::size_t T = f.u.rows;
    std::vector<double> scores(T);
    const double inv_k = 1.0 / static_cast<double>(k);
    for (std::size_t t = 0; t < T; ++t) {
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double u = f.u(t, j);
            acc += u * u;
        }
        scores[t] = acc * inv_k;
    }
    return scores;
}

Selection select_tokens(const std::vector<double>& scores, const PruneConfig& cfg) {
    cfg.validate();
    const std::size_t T = scores.size();
    if (T == 0) throw ShapeError("select_tokens: empty score list");
    for (std::size_t t = 0; t < T; ++t) {
        if (!(scores[t] >= 0.0)) {
            std::ostringstream msg;
            msg << "select_tokens: score at index " << t << " is negative or not a number";
            throw ParamError(msg.str());
        }
    }

    Selection sel;
    sel.order.resize(T);
    std::iota(sel.order.begin(), sel.order.end(), std::size_t{0});
    std::sort(sel.order.begin(), sel.order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b; // ties keep the earlier token
    });

    std::size_t m = 0;
    if (cfg.mode == PruneMode::Budget) {
        m = std::min(*cfg.budget, T);
    } else {
        const double eps = cfg.select_epsilon.value_or(cfg.epsilon);
        Kahan cum;
        m = T; // accumulated mass can fall short of epsilon by rounding
        for (std::size_t i = 0; i < T; ++i) {
            cum.add(scores[sel.order[i]]);
            if (cum.sum >= eps) {
                m = i + 1;
                break;
            }
        }
        m = std::max(m, std::min(cfg.min_tokens, T));
    }

    Kahan cum_at_m;
    for (std::size_t i = 0; i < m; ++i) cum_at_m.add(scores[sel.order[i]]);
    sel.cumulative_leverage = cum_at_m.sum;

    sel.indices.assign(sel.order.begin(), sel.order.begin() + m);
    std::sort(sel.indices.begin(), sel.indices.end());
    return sel;
}

PruneResult prune(const FeatureMatrix& m, const PruneConfig& cfg) {
    cfg.validate();
    m.validate();

    SvdFactors f = thin_svd(m);
    VarianceProfile vp = variance_profile(f, cfg.rank_epsilon.value_or(cfg.epsilon));
    std::vector<double> scores = leverage_scores(f, vp.truncation_rank);
    Selection sel = select_tokens(scores, cfg);

    PruneResult out;
    out.truncation_rank = vp.truncation_rank;
    out.cumulative_leverage_at_m = sel.cumulative_leverage;
    out.singular_values = std::move(f.singular_values);
    out.variance = std::move(vp);
    out.leverage_scores = std::move(scores);
    out.permutation = std::move(sel.order);
    out.selected_indices = std::move(sel.indices);

    out.pruned.rows = out.selected_indices.size();
    out.pruned.cols = m.cols;
    out.pruned.precision = m.precision;
    out.pruned.data.resize(out.pruned.rows * m.cols);
    for (std::size_t i = 0; i < out.selected_indices.size(); ++i) {
        const double* src = m.data.data() + out.selected_indices[i] * m.cols;
        std::copy(src, src + m.cols, out.pruned.data.begin() + i * m.cols);
    }
    return out;
}

} // namespace svdprune
