#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "pnp/denoisers.hpp"
#include "pnp/fidelity.hpp"
#include "pnp/signal.hpp"
#include "pnp/transforms.hpp"

// The four plug-in iterations built around the denoiser-gradient operator
//
//     P(x) = denoise_sigma(x - gamma * grad D(x)).
//
// ISTA iterates P directly, FISTA adds the momentum recurrence
// q_k = (1 + sqrt(1 + 4 q_{k-1}^2)) / 2, SGD replaces grad D with the
// minibatch estimate, and ADMM alternates an exact quadratic solve with a
// denoising step and a dual update. Budgets are tracked in integer units of
// gradient-component evaluations, so one full pass over the data costs k.

namespace pnp {

enum class Algorithm { ista, fista, sgd, admm };

inline std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::ista: return "ista";
        case Algorithm::fista: return "fista";
        case Algorithm::sgd: return "sgd";
        case Algorithm::admm: return "admm";
    }
    return "?";
}

inline Algorithm parse_algorithm(const std::string& name) {
    if (name == "ista") return Algorithm::ista;
    if (name == "fista") return Algorithm::fista;
    if (name == "sgd") return Algorithm::sgd;
    if (name == "admm") return Algorithm::admm;
    throw Error("unknown algorithm '" + name + "' (ista|fista|sgd|admm)");
}

struct ConvergenceError : Error {
    ConvergenceError(const std::string& what, double residual_, std::int64_t iters_)
        : Error(what), residual(residual_), iters(iters_) {}
    double residual;
    std::int64_t iters;
};

struct SolverState {
    Signal x_curr, x_prev, s_curr;
    double q_curr = 1.0, q_prev = 1.0;
    std::int64_t iter = 0;
    std::int64_t budget_units = 0;  // gradient-component evaluations
    Signal admm_x, admm_v, admm_u;
};

inline Signal operator_P(const FidelityTerm& f, const Denoiser& d, double gamma,
                         const Signal& x) {
    if (gamma <= 0) throw Error("operator_P: gamma must be positive");
    return d.apply(Signal(x.values - gamma * f.full_gradient(x).values, x.shape));
}

inline void step_pnp_ista(SolverState& st, const FidelityTerm& f, const Denoiser& d,
                          const SolverConfig& cfg) {
    Signal x_new = operator_P(f, d, cfg.gamma, st.s_curr);
    st.x_prev = std::move(st.x_curr);
    st.x_curr = x_new;
    st.s_curr = std::move(x_new);  // momentum coefficient is 0 when q == 1
    st.budget_units += f.k();
    ++st.iter;
}

inline void step_pnp_fista(SolverState& st, const FidelityTerm& f, const Denoiser& d,
                           const SolverConfig& cfg) {
    Signal x_new = operator_P(f, d, cfg.gamma, st.s_curr);
    const double q_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * st.q_curr * st.q_curr));
    const double coeff = (st.q_curr - 1.0) / q_new;
    st.s_curr = Signal(x_new.values + coeff * (x_new.values - st.x_curr.values), x_new.shape);
    st.q_prev = st.q_curr;
    st.q_curr = q_new;
    st.x_prev = std::move(st.x_curr);
    st.x_curr = std::move(x_new);
    st.budget_units += f.k();
    ++st.iter;
}

template <class SamplerT>
inline void step_pnp_sgd(SolverState& st, const FidelityTerm& f, const Denoiser& d,
                         const SolverConfig& cfg, SamplerT& sampler) {
    auto [grad, indices] = f.minibatch_gradient(sampler, st.x_curr);
    Signal x_new =
        d.apply(Signal(st.x_curr.values - cfg.gamma * grad.values, st.x_curr.shape));
    st.x_prev = std::move(st.x_curr);
    st.x_curr = x_new;
    st.s_curr = std::move(x_new);  // no acceleration
    st.budget_units += static_cast<std::int64_t>(indices.size());
    ++st.iter;
}

// Exact solver for the ADMM x-update
//     argmin_x D(x) + (rho/2) |x - t|^2  =>  (A^T A + rho I) x = A^T y + rho t.
// Dense Cholesky for the sensing matrix; DFT diagonalization for circular
// blur. The factorization is built once and reused across iterations.
class AdmmSolver {
public:
    AdmmSolver(const FidelityTerm& f, double rho) : rho_(rho), shape_(f.input_shape()) {
        if (rho <= 0) throw Error("AdmmSolver: rho must be positive");
        if (const auto* g = std::get_if<GaussianCsModel>(&f.model().variant)) {
            Eigen::MatrixXd normal = g->matrix.transpose() * g->matrix;
            normal.diagonal().array() += rho;
            llt_.compute(normal);
            if (llt_.info() != Eigen::Success)
                throw Error("AdmmSolver: singular normal equations");
            aty_ = g->matrix.transpose() * f.measurements().stacked();
            return;
        }
        const auto& b = std::get<BlurModel>(f.model().variant);
        dft_.emplace(shape_.rows(), shape_.cols());
        const Eigen::MatrixXcd khat = kernel_spectrum(b.kernel, shape_.rows(), shape_.cols());
        using CRowMap = Eigen::Map<const RowMat>;
        const Eigen::VectorXd y = f.measurements().stacked();
        const Eigen::MatrixXcd yhat =
            dft_->forward(CRowMap(y.data(), shape_.rows(), shape_.cols()));
        atyhat_ = khat.conjugate().cwiseProduct(yhat);
        denom_ = khat.cwiseAbs2().array() + rho;
    }

    Signal solve(const Signal& t) const {
        if (t.shape != shape_) throw Error("AdmmSolver: shape mismatch");
        if (!dft_) return Signal(llt_.solve(aty_ + rho_ * t.values), shape_);
        const Eigen::MatrixXcd that = dft_->forward(t.grid_view());
        const Eigen::MatrixXcd xhat =
            (atyhat_ + rho_ * that).cwiseQuotient(denom_.cast<std::complex<double>>());
        const Eigen::MatrixXd x = dft_->inverse_real(xhat);
        RowMat xr = x;
        return Signal(Eigen::Map<const Eigen::VectorXd>(xr.data(), xr.size()), shape_);
    }

private:
    double rho_;
    Shape shape_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd aty_;
    std::optional<Dft2> dft_;
    Eigen::MatrixXcd atyhat_;
    Eigen::MatrixXd denom_;
};

// x-solve, denoise, dual update. x_curr mirrors the denoised iterate v,
// which is what traces and final points report.
inline void step_pnp_admm(SolverState& st, const FidelityTerm& f, const Denoiser& d,
                          const SolverConfig& cfg, const AdmmSolver& solver) {
    st.admm_x = solver.solve(Signal(st.admm_v.values - st.admm_u.values, st.admm_v.shape));
    st.admm_v = d.apply(Signal(st.admm_x.values + st.admm_u.values, st.admm_x.shape));
    st.admm_u = Signal(st.admm_u.values + st.admm_x.values - st.admm_v.values, st.admm_u.shape);
    st.x_prev = std::move(st.x_curr);
    st.x_curr = st.admm_v;
    st.s_curr = st.admm_v;
    st.budget_units += f.k();  // the exact solve touches every component
    ++st.iter;
    (void)cfg;
}

// Fixed-point oracle: iterate P until |x - P(x)| <= tol.
inline Signal find_fixed_point(const FidelityTerm& f, const Denoiser& d, double gamma,
                               const Signal& x0, double tol, std::int64_t max_iters) {
    if (tol <= 0) throw Error("find_fixed_point: tol must be positive");
    Signal x = x0;
    double residual = std::numeric_limits<double>::infinity();
    for (std::int64_t it = 0; it <= max_iters; ++it) {
        Signal p = operator_P(f, d, gamma, x);
        residual = l2_distance(x, p);
        if (residual <= tol) return x;
        if (it == max_iters) break;
        x = std::move(p);
    }
    throw ConvergenceError("find_fixed_point: residual " + std::to_string(residual) +
                               " > tol after " + std::to_string(max_iters) + " iterations",
                           residual, max_iters);
}

struct RunOptions {
    const Signal* truth = nullptr;            // enables the SNR trace column
    std::optional<double> budget_limit;       // in full-gradient passes
};

struct RunResult {
    Signal final_point;
    IterateTrace trace;
};

// Drives one algorithm until max_iters or the budget limit. The trace
// residual is measured against the full-gradient P for every algorithm, so
// batch and online runs are compared against the same fixed-point target.
template <class SamplerT>
RunResult run_with_sampler(Algorithm alg, const FidelityTerm& f, const Denoiser& d,
                           const SolverConfig& cfg, const Signal& x0, SamplerT& sampler,
                           const RunOptions& opts = {}) {
    if (cfg.gamma <= 0) throw Error("run: gamma must be positive (see default_gamma)");
    if (cfg.max_iters < 0) throw Error("run: max_iters must be >= 0");
    if (x0.shape != f.input_shape()) throw Error("run: x0 shape mismatch");

    SolverState st;
    st.x_curr = x0;
    st.x_prev = x0;
    st.s_curr = x0;

    std::optional<AdmmSolver> admm;
    if (alg == Algorithm::admm) {
        admm.emplace(f, cfg.admm_rho);
        st.admm_x = x0;
        st.admm_v = x0;
        st.admm_u = zeros_like(x0.shape);
    }

    const std::int64_t step_units = alg == Algorithm::sgd ? sampler.b() : f.k();
    std::optional<std::int64_t> limit_units;
    if (opts.budget_limit) {
        if (*opts.budget_limit <= 0) throw Error("run: budget_limit must be positive");
        limit_units = static_cast<std::int64_t>(
            std::floor(*opts.budget_limit * f.k() + 1e-9));
    }

    IterateTrace trace;
    const auto start = std::chrono::steady_clock::now();
    for (std::int64_t i = 1; i <= cfg.max_iters; ++i) {
        if (limit_units && st.budget_units + step_units > *limit_units) break;
        switch (alg) {
            case Algorithm::ista: step_pnp_ista(st, f, d, cfg); break;
            case Algorithm::fista: step_pnp_fista(st, f, d, cfg); break;
            case Algorithm::sgd: step_pnp_sgd(st, f, d, cfg, sampler); break;
            case Algorithm::admm: step_pnp_admm(st, f, d, cfg, *admm); break;
        }
        if (!st.x_curr.is_finite())
            throw Error("run: non-finite iterate at iteration " + std::to_string(i) + " (" +
                        to_string(alg) + ")");
        TraceRecord rec;
        rec.iter = i;
        rec.residual = l2_distance(st.x_curr, operator_P(f, d, cfg.gamma, st.x_curr));
        rec.snr_db = opts.truth ? snr_db(*opts.truth, st.x_curr)
                                : std::numeric_limits<double>::quiet_NaN();
        rec.budget = static_cast<double>(st.budget_units) / static_cast<double>(f.k());
        rec.wall_ns = static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(
                std::chrono::steady_clock::now() - start)
                .count());
        trace.records.push_back(rec);
    }
    return {st.x_curr, std::move(trace)};
}

inline RunResult run(Algorithm alg, const FidelityTerm& f, const Denoiser& d,
                     const SolverConfig& cfg, const Signal& x0, const RunOptions& opts = {}) {
    MinibatchSampler sampler(f.k(), alg == Algorithm::sgd ? cfg.minibatch_b : 1, cfg.seed);
    return run_with_sampler(alg, f, d, cfg, x0, sampler, opts);
}

}  // namespace pnp
