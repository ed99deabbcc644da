#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "pnp/config.hpp"
#include "pnp/diagnostics.hpp"
#include "pnp/io.hpp"
#include "pnp/phantom.hpp"
#include "pnp/solvers.hpp"

// Experiment execution: builds one problem instance per seed, runs every
// (algorithm, budget, seed) triple, writes one trace CSV per triple plus a
// single summary.csv aggregated over seeds. Everything is derived
// deterministically from the triple's seed, so reruns are byte-identical.

namespace pnp {

struct BuiltProblem {
    FidelityTerm fidelity;
    Denoiser denoiser;
    Signal truth;
    SolverConfig solver;
};

inline Denoiser build_denoiser(const DenoiserSection& d) {
    if (d.variant == "identity") return Denoiser::identity();
    if (d.variant == "soft_threshold")
        return Denoiser::soft_threshold(
            d.transform == "dct" ? TransformKind::dct : TransformKind::identity, d.sigma);
    return Denoiser::gaussian_smooth(d.sigma);
}

// Sub-seed streams: 1 phantom, 2 sensing matrix, 3 measurement noise,
// 4 minibatch sampler.
inline BuiltProblem build_problem(const ExperimentConfig& cfg, std::uint64_t seed) {
    const auto& p = cfg.problem;
    const bool is_blur = p.model == "blur";
    const Shape shape = is_blur ? Shape::grid(p.h, p.w) : Shape::flat(p.n);

    PhantomParams params;
    params.sparsity = p.sparsity;
    params.blocks = p.blocks;
    params.cell = p.cell;
    Signal truth = make_phantom(parse_phantom_kind(p.phantom), shape, params,
                                derive_seed(seed, 1));

    ForwardModel model =
        is_blur ? [&] {
            const std::vector<double> taps = gaussian_taps(p.kernel_sigma);
            const Eigen::Index r = static_cast<Eigen::Index>(taps.size());
            Eigen::MatrixXd kernel(r, r);
            for (Eigen::Index i = 0; i < r; ++i)
                for (Eigen::Index j = 0; j < r; ++j) kernel(i, j) = taps[i] * taps[j];
            return make_blur(std::move(kernel), shape, p.k, p.noise_sigma);
        }()
                : make_gaussian_cs(p.m, p.n, p.k, p.noise_sigma, derive_seed(seed, 2));

    MeasurementSet ms = simulate_measurements(model, truth, derive_seed(seed, 3));
    FidelityTerm fidelity(std::move(model), std::move(ms));

    SolverConfig solver;
    solver.gamma = cfg.solver.gamma ? *cfg.solver.gamma : default_gamma(fidelity);
    solver.sigma = cfg.denoiser.sigma;
    solver.minibatch_b = cfg.solver.b;
    solver.max_iters = cfg.solver.max_iters;
    solver.seed = derive_seed(seed, 4);
    solver.admm_rho = cfg.solver.rho;

    return BuiltProblem{std::move(fidelity), build_denoiser(cfg.denoiser), std::move(truth),
                        solver};
}

namespace detail {

inline std::string fmt_budget(double b) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", b);
    return buf;
}

inline std::uint64_t seed_offset_from_env(std::ostream& err, bool& ok) {
    ok = true;
    const char* env = std::getenv("PNP_SEED_OFFSET");
    if (env == nullptr || *env == '\0') return 0;
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (end == nullptr || *end != '\0') {
        err << "pnp: PNP_SEED_OFFSET is not an integer: " << env << "\n";
        ok = false;
        return 0;
    }
    return static_cast<std::uint64_t>(v);
}

struct TripleResult {
    double final_snr = 0.0;
    double final_sq_dist = 0.0;
    std::int64_t iters = 0;
    bool failed = false;
    std::string error;
};

}  // namespace detail

struct SummaryRow {
    std::string algorithm;
    int b = 1;
    double budget = 0.0;
    double final_snr_db = 0.0;
    double final_sq_dist = 0.0;
    std::int64_t iters = 0;
};

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
    os << "algorithm,b,budget,final_snr_db,final_sq_dist,iters\n";
    for (const auto& r : rows)
        os << r.algorithm << ',' << r.b << ',' << pnp::detail::fmt17(r.budget) << ','
           << pnp::detail::fmt17(r.final_snr_db) << ',' << pnp::detail::fmt17(r.final_sq_dist)
           << ',' << r.iters << '\n';
}

// Runs the full experiment described by cfg. Returns 0 on success, 2 on a
// configuration problem (nothing written), 1 on a runtime failure (the
// failing triple is named on err). jobs > 1 runs triples concurrently;
// outputs do not depend on the job count.
inline int run_experiment(ExperimentConfig cfg, std::ostream& err, int jobs = 1,
                          const std::string& outdir_override = "") {
    try {
        validate_config(cfg);
    } catch (const ConfigError& e) {
        err << e.what() << "\n";
        return 2;
    }
    if (!outdir_override.empty()) cfg.experiment.outdir = outdir_override;
    if (jobs < 1) jobs = 1;

    bool env_ok = false;
    const std::uint64_t offset = detail::seed_offset_from_env(err, env_ok);
    if (!env_ok) return 2;
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s : cfg.experiment.seeds) seeds.push_back(s + offset);

    std::error_code ec;
    std::filesystem::create_directories(cfg.experiment.outdir, ec);
    if (ec) {
        err << "pnp: cannot create output directory " << cfg.experiment.outdir << "\n";
        return 1;
    }

    // One problem instance and one fixed-point reference per seed; both are
    // shared read-only by every algorithm/budget pair.
    std::vector<BuiltProblem> problems;
    std::vector<Signal> x_stars;
    try {
        for (std::uint64_t seed : seeds) {
            problems.push_back(build_problem(cfg, seed));
            const BuiltProblem& bp = problems.back();
            x_stars.push_back(find_fixed_point(bp.fidelity, bp.denoiser, bp.solver.gamma,
                                               zeros_like(bp.truth.shape), 1e-9, 200000));
        }
    } catch (const Error& e) {
        err << "pnp: problem setup failed: " << e.what() << "\n";
        return 1;
    }

    struct Triple {
        std::size_t alg_i, budget_i, seed_i;
    };
    std::vector<Triple> triples;
    for (std::size_t a = 0; a < cfg.experiment.algorithms.size(); ++a)
        for (std::size_t b = 0; b < cfg.experiment.budgets.size(); ++b)
            for (std::size_t s = 0; s < seeds.size(); ++s) triples.push_back({a, b, s});

    std::vector<detail::TripleResult> results(triples.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t = next.fetch_add(1); t < triples.size(); t = next.fetch_add(1)) {
            const Triple& tr = triples[t];
            const Algorithm alg = parse_algorithm(cfg.experiment.algorithms[tr.alg_i]);
            const double budget = cfg.experiment.budgets[tr.budget_i];
            const BuiltProblem& bp = problems[tr.seed_i];
            detail::TripleResult& out = results[t];
            try {
                RunOptions opts;
                opts.truth = &bp.truth;
                opts.budget_limit = budget;
                const RunResult res =
                    run(alg, bp.fidelity, bp.denoiser, bp.solver, zeros_like(bp.truth.shape), opts);
                const std::string path = cfg.experiment.outdir + "/" + to_string(alg) + "_b" +
                                         detail::fmt_budget(budget) + "_s" +
                                         std::to_string(seeds[tr.seed_i]) + ".csv";
                write_trace_csv(path, res.trace, /*zero_wall=*/true);
                const double dist = l2_distance(res.final_point, x_stars[tr.seed_i]);
                out.final_snr = snr_db(bp.truth, res.final_point);
                out.final_sq_dist = dist * dist;
                out.iters = static_cast<std::int64_t>(res.trace.records.size());
            } catch (const std::exception& e) {
                out.failed = true;
                out.error = e.what();
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (std::size_t t = 0; t < triples.size(); ++t) {
        if (results[t].failed) {
            err << "pnp: triple (" << cfg.experiment.algorithms[triples[t].alg_i] << ", b"
                << detail::fmt_budget(cfg.experiment.budgets[triples[t].budget_i]) << ", s"
                << seeds[triples[t].seed_i] << ") failed: " << results[t].error << "\n";
            return 1;
        }
    }

    // Seed-averaged summary, one row per (algorithm, budget) in config order.
    std::vector<SummaryRow> rows;
    for (std::size_t a = 0; a < cfg.experiment.algorithms.size(); ++a) {
        for (std::size_t b = 0; b < cfg.experiment.budgets.size(); ++b) {
            SummaryRow row;
            row.algorithm = cfg.experiment.algorithms[a];
            row.b = parse_algorithm(row.algorithm) == Algorithm::sgd ? cfg.solver.b
                                                                     : cfg.problem.k;
            row.budget = cfg.experiment.budgets[b];
            double snr = 0, dist = 0;
            std::int64_t iters = 0;
            std::size_t count = 0;
            for (std::size_t t = 0; t < triples.size(); ++t) {
                if (triples[t].alg_i != a || triples[t].budget_i != b) continue;
                snr += results[t].final_snr;
                dist += results[t].final_sq_dist;
                iters = results[t].iters;
                ++count;
            }
            row.final_snr_db = snr / static_cast<double>(count);
            row.final_sq_dist = dist / static_cast<double>(count);
            row.iters = iters;
            rows.push_back(row);
        }
    }
    std::ofstream os(cfg.experiment.outdir + "/summary.csv");
    if (!os) {
        err << "pnp: cannot write summary.csv\n";
        return 1;
    }
    write_summary_csv(os, rows);
    return 0;
}

}  // namespace pnp
