#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pnp/solvers.hpp"

// Convergence analysis over traces: log-log rate fits against the O(1/t)
// claim, seed ensembles that estimate the expected distance to fix(P), and
// fixed-budget comparisons between the batch and online algorithms.

namespace pnp {

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::int64_t t_min = 0, t_max = 0;  // range actually used
    double r_squared = 0.0;
    bool truncated = false;  // range cut at the first exactly-zero residual
};

// Least-squares line through (log t, log min_{j<=t} residual_j^2) for
// t in [t_min, t_max]. The running minimum starts at the first record, so
// entries before t_min still lower the floor.
inline RateFit fit_rate(const IterateTrace& trace, std::int64_t t_min, std::int64_t t_max) {
    if (t_min < 1 || t_max <= t_min) throw Error("fit_rate: need 1 <= t_min < t_max");
    std::vector<double> xs, ys;
    bool truncated = false;
    std::int64_t last_t = 0;
    double min_sq = std::numeric_limits<double>::infinity();
    for (const auto& rec : trace.records) {
        min_sq = std::min(min_sq, rec.residual * rec.residual);
        if (rec.iter < t_min) continue;
        if (rec.iter > t_max) break;
        if (min_sq == 0.0) {
            truncated = true;
            break;
        }
        xs.push_back(std::log(static_cast<double>(rec.iter)));
        ys.push_back(std::log(min_sq));
        last_t = rec.iter;
    }
    if (xs.size() < 3)
        throw Error("fit_rate: fewer than 3 usable points in [" + std::to_string(t_min) + ", " +
                    std::to_string(t_max) + "]");

    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.t_min = t_min;
    fit.t_max = last_t;
    fit.truncated = truncated;
    if (syy <= 0) {
        fit.r_squared = 1.0;  // perfectly constant data
    } else {
        double ss_res = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
            ss_res += e * e;
        }
        fit.r_squared = 1.0 - ss_res / syy;
    }
    return fit;
}

struct EnsembleSummary {
    std::string algorithm;
    int b = 1;
    std::vector<std::uint64_t> seeds;
    double mean_final_sq_dist = 0.0;
    double std_final_sq_dist = 0.0;
    double mean_final_snr = 0.0;
};

// Factory hook so tests can substitute deterministic samplers; the default
// builds the shipped i.i.d. uniform sampler from each seed.
struct UniformSamplerFactory {
    int k, b;
    MinibatchSampler operator()(std::uint64_t seed) const { return MinibatchSampler(k, b, seed); }
};

// Runs the algorithm once per seed and summarizes final |x - x*|^2 (and
// final SNR when truth is supplied). Expectations in the convergence claims
// are estimated by exactly this kind of seed ensemble.
template <class SamplerFactory>
EnsembleSummary ensemble_with_sampler(Algorithm alg, const FidelityTerm& f, const Denoiser& d,
                                      const SolverConfig& cfg,
                                      const std::vector<std::uint64_t>& seeds,
                                      const Signal& x_star, SamplerFactory make_sampler,
                                      const Signal* truth = nullptr) {
    if (seeds.size() < 2) throw Error("ensemble: need at least 2 seeds");
    for (std::size_t i = 0; i < seeds.size(); ++i)
        for (std::size_t j = i + 1; j < seeds.size(); ++j)
            if (seeds[i] == seeds[j]) throw Error("ensemble: seeds must be distinct");

    std::vector<double> sq_dists, snrs;
    const Signal x0 = zeros_like(f.input_shape());
    RunOptions opts;
    opts.truth = truth;
    for (std::uint64_t seed : seeds) {
        SolverConfig run_cfg = cfg;
        run_cfg.seed = seed;
        RunResult res;
        try {
            auto sampler = make_sampler(seed);
            res = run_with_sampler(alg, f, d, run_cfg, x0, sampler, opts);
        } catch (const Error& e) {
            throw Error("ensemble: seed " + std::to_string(seed) + " failed: " + e.what());
        }
        const double dist = l2_distance(res.final_point, x_star);
        sq_dists.push_back(dist * dist);
        snrs.push_back(truth ? snr_db(*truth, res.final_point)
                             : std::numeric_limits<double>::quiet_NaN());
    }

    EnsembleSummary s;
    s.algorithm = to_string(alg);
    s.b = alg == Algorithm::sgd ? cfg.minibatch_b : f.k();
    s.seeds = seeds;
    const double n = static_cast<double>(sq_dists.size());
    for (double v : sq_dists) s.mean_final_sq_dist += v;
    s.mean_final_sq_dist /= n;
    for (double v : sq_dists) {
        const double e = v - s.mean_final_sq_dist;
        s.std_final_sq_dist += e * e;
    }
    s.std_final_sq_dist = std::sqrt(s.std_final_sq_dist / n);
    for (double v : snrs) s.mean_final_snr += v;
    s.mean_final_snr /= n;
    return s;
}

inline EnsembleSummary ensemble(Algorithm alg, const FidelityTerm& f, const Denoiser& d,
                                const SolverConfig& cfg,
                                const std::vector<std::uint64_t>& seeds, const Signal& x_star,
                                const Signal* truth = nullptr) {
    return ensemble_with_sampler(
        alg, f, d, cfg, seeds, x_star,
        UniformSamplerFactory{f.k(), alg == Algorithm::sgd ? cfg.minibatch_b : 1}, truth);
}

struct BudgetRow {
    std::string algorithm;
    double final_snr_db = 0.0;
    std::int64_t iterations = 0;
};

// Runs every algorithm under the same measurement budget and tabulates the
// final reconstruction quality; the harness defaults are budgets 10 and 30.
inline std::vector<BudgetRow> budget_comparison(const std::vector<Algorithm>& algorithms,
                                                const FidelityTerm& f, const Denoiser& d,
                                                const SolverConfig& cfg, double budget,
                                                const Signal& truth) {
    if (budget <= 0) throw Error("budget_comparison: budget must be positive");
    std::vector<BudgetRow> rows;
    const Signal x0 = zeros_like(f.input_shape());
    RunOptions opts;
    opts.truth = &truth;
    opts.budget_limit = budget;
    for (Algorithm alg : algorithms) {
        const RunResult res = run(alg, f, d, cfg, x0, opts);
        rows.push_back({to_string(alg), snr_db(truth, res.final_point),
                        static_cast<std::int64_t>(res.trace.records.size())});
    }
    return rows;
}

}  // namespace pnp
