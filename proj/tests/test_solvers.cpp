#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "pnp/diagnostics.hpp"
#include "pnp/solvers.hpp"

using Catch::Approx;
using pnp::Algorithm;
using pnp::Denoiser;
using pnp::FidelityTerm;
using pnp::Signal;
using pnp::SolverConfig;
using pnp::SolverState;

namespace {

FidelityTerm identity_term(const Eigen::VectorXd& y, int k) {
    pnp::GaussianCsModel g;
    const Eigen::Index n = y.size();
    g.matrix = Eigen::MatrixXd::Identity(n, n);
    g.block_rows = pnp::balanced_partition(n, k);
    pnp::MeasurementSet ms;
    Eigen::Index at = 0;
    for (Eigen::Index rows : g.block_rows) {
        ms.blocks.push_back(y.segment(at, rows));
        at += rows;
    }
    return FidelityTerm(pnp::ForwardModel{std::move(g), 0.0}, std::move(ms));
}

Signal random_flat(Eigen::Index n, std::uint64_t seed) {
    pnp::Rng rng(seed);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = pnp::gaussian(rng);
    return pnp::make_flat(std::move(v));
}

SolverState fresh_state(const Signal& x0) {
    SolverState st;
    st.x_curr = x0;
    st.x_prev = x0;
    st.s_curr = x0;
    return st;
}

const Eigen::MatrixXd& cs_matrix(const FidelityTerm& f) {
    return std::get<pnp::GaussianCsModel>(f.model().variant).matrix;
}

}  // namespace

TEST_CASE("operator_P fixed points and exact gradient steps") {
    // x with grad D(x) = 0 and identity denoiser stays put
    Eigen::VectorXd y(4);
    y << 1, -2, 0.5, 3;
    FidelityTerm f = identity_term(y, 2);
    const Signal at_opt(y, pnp::Shape::flat(4));
    const Signal p = pnp::operator_P(f, Denoiser::identity(), 0.7, at_opt);
    CHECK((p.values - y).norm() == 0.0);

    // A = I, gamma = 1: the gradient step lands on the minimizer from anywhere
    for (int t = 0; t < 5; ++t) {
        const Signal x = random_flat(4, 70 + t);
        const Signal px = pnp::operator_P(f, Denoiser::identity(), 1.0, x);
        CHECK((px.values - y).norm() < 1e-14);
    }

    CHECK_THROWS_AS(pnp::operator_P(f, Denoiser::identity(), 0.0, at_opt), pnp::Error);
}

TEST_CASE("iterating P with the matched prox denoiser solves the lasso") {
    auto inst = oracle::make_lasso_instance();
    const double gamma = pnp::default_gamma(inst.fidelity);
    const Denoiser d =
        Denoiser::soft_threshold(pnp::TransformKind::identity, gamma * inst.lambda);
    const Eigen::VectorXd x_cd =
        oracle::lasso_cd(cs_matrix(inst.fidelity), inst.fidelity.measurements().stacked(),
                         inst.lambda);

    Signal x = pnp::zeros_like(inst.fidelity.input_shape());
    for (int it = 0; it < 4000; ++it) x = pnp::operator_P(inst.fidelity, d, gamma, x);
    CHECK((x.values - x_cd).norm() < 1e-6);
}

TEST_CASE("one ista step is operator_P and two steps are P o P") {
    auto inst = oracle::make_lasso_instance();
    const double gamma = pnp::default_gamma(inst.fidelity);
    const Denoiser d =
        Denoiser::soft_threshold(pnp::TransformKind::identity, gamma * inst.lambda);
    SolverConfig cfg;
    cfg.gamma = gamma;

    const Signal x0 = random_flat(64, 81);
    SolverState st = fresh_state(x0);
    pnp::step_pnp_ista(st, inst.fidelity, d, cfg);
    const Signal direct = pnp::operator_P(inst.fidelity, d, gamma, x0);
    CHECK((st.x_curr.values - direct.values).norm() == 0.0);
    CHECK((st.s_curr.values - st.x_curr.values).norm() == 0.0);  // no momentum
    CHECK(st.budget_units == inst.fidelity.k());

    pnp::step_pnp_ista(st, inst.fidelity, d, cfg);
    const Signal twice = pnp::operator_P(inst.fidelity, d, gamma, direct);
    CHECK((st.x_curr.values - twice.values).norm() == 0.0);
}

TEST_CASE("ista matches a hand-rolled classical ista on the lasso") {
    auto inst = oracle::make_lasso_instance();
    const Eigen::MatrixXd& a = cs_matrix(inst.fidelity);
    const Eigen::VectorXd y = inst.fidelity.measurements().stacked();
    const double gamma = pnp::default_gamma(inst.fidelity);
    const Denoiser d =
        Denoiser::soft_threshold(pnp::TransformKind::identity, gamma * inst.lambda);
    SolverConfig cfg;
    cfg.gamma = gamma;

    SolverState st = fresh_state(pnp::zeros_like(inst.fidelity.input_shape()));
    Eigen::VectorXd x = Eigen::VectorXd::Zero(64);
    for (int it = 0; it < 25; ++it) {
        pnp::step_pnp_ista(st, inst.fidelity, d, cfg);
        x = pnp::soft_threshold(x - gamma * (a.transpose() * (a * x - y)), gamma * inst.lambda);
        REQUIRE((st.x_curr.values - x).norm() < 1e-13);
    }
}

TEST_CASE("500 ista steps reach the oracle optimum to 1e-8 in objective") {
    auto inst = oracle::make_lasso_instance();
    const double gamma = pnp::default_gamma(inst.fidelity);
    const Denoiser d =
        Denoiser::soft_threshold(pnp::TransformKind::identity, gamma * inst.lambda);
    SolverConfig cfg;
    cfg.gamma = gamma;
    cfg.max_iters = 500;

    const pnp::RunResult res = pnp::run(Algorithm::ista, inst.fidelity, d, cfg,
                                        pnp::zeros_like(inst.fidelity.input_shape()));
    const Eigen::VectorXd x_cd =
        oracle::lasso_cd(cs_matrix(inst.fidelity), inst.fidelity.measurements().stacked(),
                         inst.lambda);
    const pnp::L1Regularizer reg{inst.lambda, pnp::TransformKind::identity};
    const double f_star = pnp::objective(inst.fidelity, Signal(x_cd, res.final_point.shape), reg);
    const double f_ista = pnp::objective(inst.fidelity, res.final_point, reg);
    CHECK(f_ista - f_star >= -1e-10);  // the oracle really is the minimum
    CHECK(f_ista - f_star <= 1e-8);
}

TEST_CASE("fista momentum recurrence values") {
    auto inst = oracle::make_lasso_instance();
    const double gamma = pnp::default_gamma(inst.fidelity);
    const Denoiser d = Denoiser::identity();
    SolverConfig cfg;
    cfg.gamma = gamma;

    SolverState st = fresh_state(pnp::zeros_like(inst.fidelity.input_shape()));
    CHECK(st.q_curr == 1.0);
    pnp::step_pnp_fista(st, inst.fidelity, d, cfg);
    CHECK(st.q_curr == Approx(1.6180339887498949).margin(1e-12));  // (1+sqrt 5)/2
    pnp::step_pnp_fista(st, inst.fidelity, d, cfg);
    CHECK(st.q_curr == Approx(2.1935270853310538).margin(1e-12));
    CHECK(st.q_prev == Approx(1.6180339887498949).margin(1e-12));
    CHECK(st.q_curr >= st.q_prev);
    CHECK(st.q_prev >= 1.0);
}

TEST_CASE("the first fista step equals the first ista step") {
    auto inst = oracle::make_lasso_instance();
    const double gamma = pnp::default_gamma(inst.fidelity);
    const Denoiser d =
        Denoiser::soft_threshold(pnp::TransformKind::identity, gamma * inst.lambda);
    SolverConfig cfg;
    cfg.gamma = gamma;

    const Signal x0 = random_flat(64, 91);
    SolverState ista = fresh_state(x0);
    SolverState fista = fresh_state(x0);
    pnp::step_pnp_ista(ista, inst.fidelity, d, cfg);
    pnp::step_pnp_fista(fista, inst.fidelity, d, cfg);
    // momentum coefficient (q0 - 1)/q1 = 0, so even s agrees
    CHECK((ista.x_curr.values - fista.x_curr.values).norm() == 0.0);
    CHECK((ista.s_curr.values - fista.s_curr.values).norm() == 0.0);
}

TEST_CASE("fista reaches the oracle objective gap in fewer iterations than ista") {
    auto inst = oracle::make_lasso_instance();
    const double gamma = pnp::default_gamma(inst.fidelity);
    const Denoiser d =
        Denoiser::soft_threshold(pnp::TransformKind::identity, gamma * inst.lambda);
    const Eigen::VectorXd x_cd =
        oracle::lasso_cd(cs_matrix(inst.fidelity), inst.fidelity.measurements().stacked(),
                         inst.lambda);
    const pnp::L1Regularizer reg{inst.lambda, pnp::TransformKind::identity};
    const double f_star =
        pnp::objective(inst.fidelity, Signal(x_cd, inst.fidelity.input_shape()), reg);

    auto iters_to_gap = [&](Algorithm alg) {
        SolverConfig cfg;
        cfg.gamma = gamma;
        SolverState st = fresh_state(pnp::zeros_like(inst.fidelity.input_shape()));
        for (int it = 1; it <= 5000; ++it) {
            if (alg == Algorithm::ista) pnp::step_pnp_ista(st, inst.fidelity, d, cfg);
            else pnp::step_pnp_fista(st, inst.fidelity, d, cfg);
            if (pnp::objective(inst.fidelity, st.x_curr, reg) - f_star <= 1e-8) return it;
        }
        return 5001;
    };
    const int ista_iters = iters_to_gap(Algorithm::ista);
    const int fista_iters = iters_to_gap(Algorithm::fista);
    REQUIRE(ista_iters <= 5000);
    REQUIRE(fista_iters <= 5000);
    CHECK(fista_iters < ista_iters);
}

TEST_CASE("sgd with b=k and distinct draws reproduces ista") {
    auto inst = oracle::make_lasso_instance(24, 12, 4, 0.1, 11);
    const double gamma = pnp::default_gamma(inst.fidelity);
    const Denoiser d =
        Denoiser::soft_threshold(pnp::TransformKind::identity, gamma * inst.lambda);
    SolverConfig cfg;
    cfg.gamma = gamma;

    const Signal x0 = random_flat(24, 101);
    SolverState ista = fresh_state(x0);
    SolverState sgd = fresh_state(x0);
    oracle::RoundRobinSampler sampler(4, 4);
    for (int it = 0; it < 10; ++it) {
        pnp::step_pnp_ista(ista, inst.fidelity, d, cfg);
        pnp::step_pnp_sgd(sgd, inst.fidelity, d, cfg, sampler);
        CHECK((ista.x_curr.values - sgd.x_curr.values).norm() < 1e-12);
    }
    CHECK(sgd.budget_units == ista.budget_units);  // b=k costs a full pass
}

TEST_CASE("sgd trajectories are bitwise deterministic given the seed") {
    auto inst = oracle::make_lasso_instance(24, 12, 4, 0.1, 12);
    const double gamma = pnp::default_gamma(inst.fidelity);
    const Denoiser d =
        Denoiser::soft_threshold(pnp::TransformKind::identity, gamma * inst.lambda);
    SolverConfig cfg;
    cfg.gamma = gamma;
    cfg.minibatch_b = 2;
    cfg.max_iters = 50;
    cfg.seed = 777;

    const Signal x0 = pnp::zeros_like(inst.fidelity.input_shape());
    const pnp::RunResult r1 = pnp::run(Algorithm::sgd, inst.fidelity, d, cfg, x0);
    const pnp::RunResult r2 = pnp::run(Algorithm::sgd, inst.fidelity, d, cfg, x0);
    REQUIRE(r1.trace.records.size() == r2.trace.records.size());
    CHECK((r1.final_point.values - r2.final_point.values).norm() == 0.0);
    for (std::size_t i = 0; i < r1.trace.records.size(); ++i) {
        CHECK(r1.trace.records[i].residual == r2.trace.records[i].residual);
        CHECK(r1.trace.records[i].budget == r2.trace.records[i].budget);
    }
}

TEST_CASE("one sgd step averaged over all draws equals the ista step for linear denoisers") {
    // k=3, b=1: expectation passes through a linear denoiser
    auto inst = oracle::make_lasso_instance(12, 6, 3, 0.1, 13);
    const double gamma = pnp::default_gamma(inst.fidelity);
    const Denoiser d = Denoiser::identity();
    SolverConfig cfg;
    cfg.gamma = gamma;

    const Signal x0 = random_flat(12, 111);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(12);
    for (int i = 0; i < 3; ++i) {
        SolverState st = fresh_state(x0);
        oracle::ForcedSampler sampler(std::vector<std::vector<int>>{{i}});
        pnp::step_pnp_sgd(st, inst.fidelity, d, cfg, sampler);
        mean += st.x_curr.values;
    }
    mean /= 3.0;

    SolverState ista = fresh_state(x0);
    pnp::step_pnp_ista(ista, inst.fidelity, d, cfg);
    CHECK((mean - ista.x_curr.values).norm() < 1e-12);
}

TEST_CASE("admm on an identity problem converges to x = v = y with u = 0") {
    Eigen::VectorXd y(6);
    y << 1, -0.5, 2, 0, 3, -1;
    FidelityTerm f = identity_term(y, 3);
    SolverConfig cfg;
    cfg.gamma = 1.0;
    cfg.admm_rho = 1.0;
    cfg.max_iters = 200;

    const pnp::RunResult res =
        pnp::run(Algorithm::admm, f, Denoiser::identity(), cfg, pnp::zeros_like(f.input_shape()));
    CHECK((res.final_point.values - y).norm() < 1e-8);
}

TEST_CASE("admm with the matched prox denoiser solves the lasso") {
    auto inst = oracle::make_lasso_instance();
    const double rho = 1.0;
    const Denoiser d =
        Denoiser::soft_threshold(pnp::TransformKind::identity, inst.lambda / rho);
    SolverConfig cfg;
    cfg.gamma = pnp::default_gamma(inst.fidelity);
    cfg.admm_rho = rho;
    cfg.max_iters = 3000;

    const pnp::RunResult res = pnp::run(Algorithm::admm, inst.fidelity, d, cfg,
                                        pnp::zeros_like(inst.fidelity.input_shape()));
    const Eigen::VectorXd x_cd =
        oracle::lasso_cd(cs_matrix(inst.fidelity), inst.fidelity.measurements().stacked(),
                         inst.lambda);
    CHECK((res.final_point.values - x_cd).norm() < 1e-6);
}

TEST_CASE("admm holds an exact fixed point to 1e-12") {
    Eigen::VectorXd y(5);
    y << 0.2, -1, 0.7, 2, -0.3;
    FidelityTerm f = identity_term(y, 5);
    SolverConfig cfg;
    cfg.gamma = 1.0;
    cfg.admm_rho = 2.0;

    // x* = v* = y, u* = 0 is a fixed point of the identity-denoiser ADMM
    SolverState st;
    st.x_curr = Signal(y, f.input_shape());
    st.x_prev = st.x_curr;
    st.s_curr = st.x_curr;
    st.admm_x = st.x_curr;
    st.admm_v = st.x_curr;
    st.admm_u = pnp::zeros_like(f.input_shape());
    const pnp::AdmmSolver solver(f, cfg.admm_rho);
    pnp::step_pnp_admm(st, f, Denoiser::identity(), cfg, solver);
    CHECK((st.admm_x.values - y).norm() < 1e-12);
    CHECK((st.admm_v.values - y).norm() < 1e-12);
    CHECK(st.admm_u.values.norm() < 1e-12);
}

TEST_CASE("admm exact solve agrees with a dense reference on blur problems") {
    Eigen::MatrixXd kernel(3, 3);
    kernel << 0.0625, 0.125, 0.0625, 0.125, 0.25, 0.125, 0.0625, 0.125, 0.0625;
    pnp::ForwardModel model = pnp::make_blur(kernel, pnp::Shape::grid(5, 4), 2, 0.0);
    const Signal truth = random_flat(20, 121);
    const Signal img(truth.values, pnp::Shape::grid(5, 4));
    pnp::MeasurementSet ms = pnp::simulate_measurements(model, img, 122);
    FidelityTerm f(std::move(model), std::move(ms));

    const double rho = 0.7;
    const pnp::AdmmSolver solver(f, rho);
    const Signal t = Signal(random_flat(20, 123).values, pnp::Shape::grid(5, 4));

    // dense route: (A^T A + rho I) x = A^T y + rho t
    const Eigen::MatrixXd a = oracle::dense_blur_matrix(kernel, 5, 4);
    Eigen::MatrixXd normal = a.transpose() * a;
    normal.diagonal().array() += rho;
    const Eigen::VectorXd rhs = a.transpose() * f.measurements().stacked() + rho * t.values;
    const Eigen::VectorXd x_dense = normal.ldlt().solve(rhs);

    CHECK((solver.solve(t).values - x_dense).norm() < 1e-10);
}

TEST_CASE("find_fixed_point oracle behavior") {
    Eigen::VectorXd y(4);
    y << 1, 2, -1, 0.5;
    FidelityTerm f = identity_term(y, 2);

    // A = I, identity denoiser, gamma = 1: lands on y after one application
    const Signal found = pnp::find_fixed_point(f, Denoiser::identity(), 1.0,
                                               pnp::zeros_like(f.input_shape()), 1e-12, 5);
    CHECK((found.values - y).norm() == 0.0);

    // starting at the fixed point returns immediately, even with max_iters 0
    const Signal again =
        pnp::find_fixed_point(f, Denoiser::identity(), 1.0, Signal(y, f.input_shape()), 1e-12, 0);
    CHECK((again.values - y).norm() == 0.0);

    // an unreachable tolerance raises the convergence error with the residual
    auto inst = oracle::make_lasso_instance(16, 8, 4, 0.1, 14);
    const double gamma = pnp::default_gamma(inst.fidelity);
    const Denoiser d =
        Denoiser::soft_threshold(pnp::TransformKind::identity, gamma * inst.lambda);
    try {
        pnp::find_fixed_point(inst.fidelity, d, gamma,
                              pnp::zeros_like(inst.fidelity.input_shape()), 1e-300, 10);
        FAIL("expected ConvergenceError");
    } catch (const pnp::ConvergenceError& e) {
        CHECK(e.residual > 0.0);
        CHECK(e.iters == 10);
    }
}

TEST_CASE("fixed point of the matched prox iteration matches the lasso oracle") {
    auto inst = oracle::make_lasso_instance();
    const double gamma = pnp::default_gamma(inst.fidelity);
    const Denoiser d =
        Denoiser::soft_threshold(pnp::TransformKind::identity, gamma * inst.lambda);
    const Signal x_star = pnp::find_fixed_point(inst.fidelity, d, gamma,
                                                pnp::zeros_like(inst.fidelity.input_shape()),
                                                1e-10, 100000);
    const Signal p = pnp::operator_P(inst.fidelity, d, gamma, x_star);
    CHECK(pnp::l2_distance(x_star, p) <= 1e-10);
    const Eigen::VectorXd x_cd =
        oracle::lasso_cd(cs_matrix(inst.fidelity), inst.fidelity.measurements().stacked(),
                         inst.lambda);
    CHECK((x_star.values - x_cd).norm() < 1e-6);
}

TEST_CASE("run honors budget limits exactly") {
    auto inst = oracle::make_lasso_instance(20, 50, 50, 0.1, 15);  // k = 50, one row each
    const double gamma = pnp::default_gamma(inst.fidelity);
    const Denoiser d =
        Denoiser::soft_threshold(pnp::TransformKind::identity, gamma * inst.lambda);
    SolverConfig cfg;
    cfg.gamma = gamma;
    cfg.max_iters = 100000;
    pnp::RunOptions opts;
    opts.budget_limit = 10.0;

    // batch: exactly 10 iterations under budget 10
    for (Algorithm alg : {Algorithm::ista, Algorithm::fista, Algorithm::admm}) {
        const pnp::RunResult res =
            pnp::run(alg, inst.fidelity, d, cfg, pnp::zeros_like(inst.fidelity.input_shape()), opts);
        CHECK(res.trace.records.size() == 10);
        CHECK(res.trace.back().budget == 10.0);
    }

    // online with b = k/10: 100 iterations under the same budget
    cfg.minibatch_b = 5;
    const pnp::RunResult sgd =
        pnp::run(Algorithm::sgd, inst.fidelity, d, cfg, pnp::zeros_like(inst.fidelity.input_shape()),
                 opts);
    CHECK(sgd.trace.records.size() == 100);
    CHECK(sgd.trace.back().budget == Approx(10.0).margin(1e-12));
    for (std::size_t i = 0; i + 1 < sgd.trace.records.size(); ++i) {
        const double step = sgd.trace.records[i + 1].budget - sgd.trace.records[i].budget;
        CHECK(step == Approx(5.0 / 50.0).margin(1e-12));
    }
}

TEST_CASE("run with max_iters 0 returns x0 and an empty trace") {
    auto inst = oracle::make_lasso_instance(16, 8, 4, 0.1, 16);
    SolverConfig cfg;
    cfg.gamma = 0.1;
    cfg.max_iters = 0;
    const Signal x0 = random_flat(16, 131);
    const pnp::RunResult res = pnp::run(Algorithm::ista, inst.fidelity, Denoiser::identity(), cfg, x0);
    CHECK(res.trace.empty());
    CHECK((res.final_point.values - x0.values).norm() == 0.0);
}

TEST_CASE("run records snr against the truth and nan without it") {
    auto inst = oracle::make_lasso_instance(16, 8, 4, 0.1, 17);
    SolverConfig cfg;
    cfg.gamma = pnp::default_gamma(inst.fidelity);
    cfg.max_iters = 3;

    const Signal x0 = pnp::zeros_like(inst.fidelity.input_shape());
    const pnp::RunResult bare = pnp::run(Algorithm::ista, inst.fidelity, Denoiser::identity(), cfg, x0);
    CHECK(std::isnan(bare.trace.back().snr_db));

    pnp::RunOptions opts;
    opts.truth = &inst.truth;
    const pnp::RunResult with_truth =
        pnp::run(Algorithm::ista, inst.fidelity, Denoiser::identity(), cfg, x0, opts);
    CHECK(std::isfinite(with_truth.trace.back().snr_db));
    CHECK(with_truth.trace.back().snr_db ==
          Approx(pnp::snr_db(inst.truth, with_truth.final_point)));
}

TEST_CASE("ista residuals are non-increasing for nonexpansive denoisers") {
    auto inst = oracle::make_lasso_instance();
    const double gamma = pnp::default_gamma(inst.fidelity);
    SolverConfig cfg;
    cfg.gamma = gamma;
    cfg.max_iters = 300;

    for (const Denoiser& d :
         {Denoiser::identity(),
          Denoiser::soft_threshold(pnp::TransformKind::identity, gamma * inst.lambda)}) {
        const pnp::RunResult res = pnp::run(Algorithm::ista, inst.fidelity, d, cfg,
                                            pnp::zeros_like(inst.fidelity.input_shape()));
        for (std::size_t i = 0; i + 1 < res.trace.records.size(); ++i)
            CHECK(res.trace.records[i + 1].residual <= res.trace.records[i].residual + 1e-12);
    }
}

TEST_CASE("a divergent run aborts naming the iteration") {
    Eigen::VectorXd y(4);
    y << 1, 2, 3, 4;
    FidelityTerm f = identity_term(y, 2);
    SolverConfig cfg;
    cfg.gamma = 1e12;  // absurd step size blows up the iterates
    cfg.max_iters = 5000;
    try {
        pnp::run(Algorithm::ista, f, Denoiser::identity(), cfg, pnp::zeros_like(f.input_shape()));
        FAIL("expected a non-finite iterate error");
    } catch (const pnp::Error& e) {
        CHECK(std::string(e.what()).find("iteration") != std::string::npos);
    }
}
