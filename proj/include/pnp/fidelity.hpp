#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pnp/denoisers.hpp"
#include "pnp/rng.hpp"
#include "pnp/signal.hpp"
#include "pnp/transforms.hpp"

// Data-fidelity terms D(x) = (1/k) sum_i D_i(x) with
// D_i(x) = (k/2) |y_i - A_i x|^2, so that D is the plain (1/2)|y - Ax|^2
// while each component touches only its own measurement block. Two concrete
// forward models: a dense seeded Gaussian sensing matrix partitioned into
// row blocks, and circular 2D blur whose components are contiguous row
// bands of the blurred image.

namespace pnp {

// total split into k parts, sizes differing by at most one.
inline std::vector<Eigen::Index> balanced_partition(Eigen::Index total, int k) {
    if (k < 1 || total < k) throw Error("balanced_partition: need 1 <= k <= total");
    std::vector<Eigen::Index> sizes(k, total / k);
    for (Eigen::Index i = 0; i < total % k; ++i) ++sizes[static_cast<std::size_t>(i)];
    return sizes;
}

struct GaussianCsModel {
    Eigen::MatrixXd matrix;                // m x n
    std::vector<Eigen::Index> block_rows;  // k row counts, summing to m
};

struct BlurModel {
    Eigen::MatrixXd kernel;  // odd dims, circular boundary
    Shape image;             // grid shape of x (and of the blurred output)
    int bands = 1;           // k contiguous row bands of the output
};

struct ForwardModel {
    std::variant<GaussianCsModel, BlurModel> variant;
    double noise_sigma = 0.0;

    int component_count() const {
        if (const auto* g = std::get_if<GaussianCsModel>(&variant))
            return static_cast<int>(g->block_rows.size());
        return std::get<BlurModel>(variant).bands;
    }

    Shape input_shape() const {
        if (const auto* g = std::get_if<GaussianCsModel>(&variant))
            return Shape::flat(g->matrix.cols());
        return std::get<BlurModel>(variant).image;
    }

    Eigen::Index output_size() const {
        if (const auto* g = std::get_if<GaussianCsModel>(&variant)) return g->matrix.rows();
        return std::get<BlurModel>(variant).image.size();
    }

    std::string describe() const {
        char buf[128];
        if (const auto* g = std::get_if<GaussianCsModel>(&variant)) {
            std::snprintf(buf, sizeof(buf), "gaussian_cs(m=%ld, n=%ld, k=%zu)",
                          static_cast<long>(g->matrix.rows()), static_cast<long>(g->matrix.cols()),
                          g->block_rows.size());
            return buf;
        }
        const auto& b = std::get<BlurModel>(variant);
        std::snprintf(buf, sizeof(buf), "blur(%ldx%ld kernel, %ldx%ld image, k=%d)",
                      static_cast<long>(b.kernel.rows()), static_cast<long>(b.kernel.cols()),
                      static_cast<long>(b.image.rows()), static_cast<long>(b.image.cols()),
                      b.bands);
        return buf;
    }
};

// Dense sensing matrix with N(0, 1/m) entries, rows split into k blocks.
inline ForwardModel make_gaussian_cs(Eigen::Index m, Eigen::Index n, int k, double noise_sigma,
                                     std::uint64_t seed) {
    GaussianCsModel g;
    g.matrix.resize(m, n);
    Rng rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j) g.matrix(i, j) = scale * gaussian(rng);
    g.block_rows = balanced_partition(m, k);
    return ForwardModel{std::move(g), noise_sigma};
}

inline ForwardModel make_blur(Eigen::MatrixXd kernel, Shape image, int bands,
                              double noise_sigma) {
    if (kernel.rows() % 2 == 0 || kernel.cols() % 2 == 0)
        throw Error("make_blur: kernel dims must be odd");
    if (!kernel.allFinite()) throw Error("make_blur: kernel entries must be finite");
    if (!image.is_grid()) throw Error("make_blur: image shape required");
    balanced_partition(image.rows(), bands);  // validates 1 <= bands <= h
    return ForwardModel{BlurModel{std::move(kernel), image, bands}, noise_sigma};
}

namespace detail {

inline Eigen::VectorXd apply_forward(const ForwardModel& model, const Signal& x) {
    if (const auto* g = std::get_if<GaussianCsModel>(&model.variant)) {
        if (x.size() != g->matrix.cols()) throw Error("forward: dimension mismatch");
        return g->matrix * x.values;
    }
    const auto& b = std::get<BlurModel>(model.variant);
    if (x.shape != b.image) throw Error("forward: image shape mismatch");
    RowMat out = circular_conv2(x.grid_view(), b.kernel);
    return Eigen::Map<const Eigen::VectorXd>(out.data(), out.size());
}

inline Eigen::VectorXd apply_adjoint(const ForwardModel& model, const Eigen::VectorXd& r) {
    if (const auto* g = std::get_if<GaussianCsModel>(&model.variant)) {
        if (r.size() != g->matrix.rows()) throw Error("adjoint: dimension mismatch");
        return g->matrix.transpose() * r;
    }
    const auto& b = std::get<BlurModel>(model.variant);
    if (r.size() != b.image.size()) throw Error("adjoint: dimension mismatch");
    using CRowMap = Eigen::Map<const RowMat>;
    RowMat out = circular_conv2(CRowMap(r.data(), b.image.rows(), b.image.cols()), b.kernel,
                                /*flip=*/true);
    return Eigen::Map<const Eigen::VectorXd>(out.data(), out.size());
}

}  // namespace detail

// y = A x_true + w with w ~ N(0, noise_sigma^2), partitioned into the
// model's component blocks; deterministic given the seed.
inline MeasurementSet simulate_measurements(const ForwardModel& model, const Signal& x_true,
                                            std::uint64_t seed) {
    Eigen::VectorXd y = detail::apply_forward(model, x_true);
    if (model.noise_sigma > 0) {
        Rng rng(seed);
        for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += model.noise_sigma * gaussian(rng);
    }
    std::vector<Eigen::Index> sizes;
    if (const auto* g = std::get_if<GaussianCsModel>(&model.variant)) {
        sizes = g->block_rows;
    } else {
        const auto& b = std::get<BlurModel>(model.variant);
        for (Eigen::Index rows : balanced_partition(b.image.rows(), b.bands))
            sizes.push_back(rows * b.image.cols());
    }
    MeasurementSet ms;
    ms.model_ref = model.describe();
    Eigen::Index at = 0;
    for (Eigen::Index s : sizes) {
        ms.blocks.push_back(y.segment(at, s));
        at += s;
    }
    return ms;
}

// Draws b component indices i.i.d. uniform over {0, ..., k-1}, with
// replacement. Single-owner mutable state; one draw sequence per solver run.
class MinibatchSampler {
public:
    MinibatchSampler(int k, int b, std::uint64_t seed) : k_(k), b_(b), rng_(seed) {
        if (k < 1 || b < 1) throw Error("MinibatchSampler: k and b must be >= 1");
        if (b > k)
            std::fprintf(stderr, "pnp: warning: minibatch b=%d exceeds component count k=%d\n", b,
                         k);
        buf_.resize(static_cast<std::size_t>(b));
    }

    const std::vector<int>& draw() {
        for (int j = 0; j < b_; ++j)
            buf_[static_cast<std::size_t>(j)] =
                static_cast<int>(uniform_index(rng_, static_cast<std::uint64_t>(k_)));
        return buf_;
    }

    int k() const { return k_; }
    int b() const { return b_; }

private:
    int k_, b_;
    Rng rng_;
    std::vector<int> buf_;
};

class FidelityTerm {
public:
    FidelityTerm(ForwardModel model, MeasurementSet measurements)
        : model_(std::move(model)), y_(std::move(measurements)) {
        y_.validate();
        if (static_cast<int>(y_.blocks.size()) != model_.component_count())
            throw Error("FidelityTerm: block count != model component count");
        Eigen::Index at = 0;
        for (const auto& b : y_.blocks) {
            offsets_.push_back(at);
            at += b.size();
        }
        if (at != model_.output_size())
            throw Error("FidelityTerm: measurement size != model output size");
        stacked_ = y_.stacked();
    }

    int k() const { return model_.component_count(); }
    Shape input_shape() const { return model_.input_shape(); }
    Eigen::Index measurement_count() const { return stacked_.size(); }
    const ForwardModel& model() const { return model_; }
    const MeasurementSet& measurements() const { return y_; }

    Eigen::VectorXd forward(const Signal& x) const { return detail::apply_forward(model_, x); }

    Signal adjoint(const Eigen::VectorXd& r) const {
        return Signal(detail::apply_adjoint(model_, r), input_shape());
    }

    // D_i(x) = (k/2) |y_i - A_i x|^2
    double eval_component(int i, const Signal& x) const {
        check_index(i);
        const Eigen::VectorXd r = component_residual(i, x);
        return 0.5 * k() * r.squaredNorm();
    }

    // grad D_i(x) = k A_i^T (A_i x - y_i)
    Signal component_gradient(int i, const Signal& x) const {
        check_index(i);
        const Eigen::VectorXd r = component_residual(i, x);
        if (const auto* g = std::get_if<GaussianCsModel>(&model_.variant)) {
            const auto block = g->matrix.middleRows(offsets_[static_cast<std::size_t>(i)],
                                                    y_.blocks[static_cast<std::size_t>(i)].size());
            return Signal(k() * (block.transpose() * r), input_shape());
        }
        // Embed the band residual into a zero image, then apply A^T.
        Eigen::VectorXd full = Eigen::VectorXd::Zero(measurement_count());
        full.segment(offsets_[static_cast<std::size_t>(i)], r.size()) = r;
        return Signal(static_cast<double>(k()) * detail::apply_adjoint(model_, full),
                      input_shape());
    }

    // grad D(x) = (1/k) sum_i grad D_i(x) = A^T (A x - y)
    Signal full_gradient(const Signal& x) const {
        return Signal(detail::apply_adjoint(model_, forward(x) - stacked_), input_shape());
    }

    // (1/b) sum_j grad D_{i_j}(x) over one sampler draw; also reports the
    // indices so callers can account for consumed gradient components.
    template <class SamplerT>
    std::pair<Signal, std::vector<int>> minibatch_gradient(SamplerT& sampler,
                                                           const Signal& x) const {
        const std::vector<int>& idx = sampler.draw();
        if (idx.empty()) throw Error("minibatch_gradient: sampler drew no indices");
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(input_shape().size());
        for (int i : idx) acc += component_gradient(i, x).values;
        acc /= static_cast<double>(idx.size());
        return {Signal(std::move(acc), input_shape()), idx};
    }

    // D(x) = (1/k) sum_i D_i(x) = (1/2)|y - Ax|^2
    double data_term(const Signal& x) const { return 0.5 * (stacked_ - forward(x)).squaredNorm(); }

private:
    void check_index(int i) const {
        if (i < 0 || i >= k())
            throw Error("FidelityTerm: component index " + std::to_string(i) + " out of range");
    }

    Eigen::VectorXd component_residual(int i, const Signal& x) const {
        const auto& yi = y_.blocks[static_cast<std::size_t>(i)];
        if (const auto* g = std::get_if<GaussianCsModel>(&model_.variant)) {
            const auto block = g->matrix.middleRows(offsets_[static_cast<std::size_t>(i)],
                                                    yi.size());
            return block * x.values - yi;
        }
        const Eigen::VectorXd out = forward(x);
        return out.segment(offsets_[static_cast<std::size_t>(i)], yi.size()) - yi;
    }

    ForwardModel model_;
    MeasurementSet y_;
    std::vector<Eigen::Index> offsets_;
    Eigen::VectorXd stacked_;
};

// C(x) = D(x) + R(x); pass no regularizer to get D alone.
inline double objective(const FidelityTerm& f, const Signal& x,
                        const std::optional<L1Regularizer>& reg = std::nullopt) {
    double v = f.data_term(x);
    if (reg) v += reg->value(x);
    return v;
}

// Largest eigenvalue of A^T A by power iteration (matrix-free).
inline double estimate_lipschitz(const FidelityTerm& f, int iters = 50, double tol = 1e-9,
                                 std::uint64_t seed = 0x5EEDULL) {
    const Eigen::Index n = f.input_shape().size();
    Rng rng(seed);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = gaussian(rng);
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
        const Signal vs(v, f.input_shape());
        Eigen::VectorXd w = f.adjoint(f.forward(vs)).values;
        const double next = v.dot(w);
        w.normalize();
        v = w;
        if (it > 0 && std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next))) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return lambda;
}

// Default step size 1/L; the L estimate is deterministic for a given term.
inline double default_gamma(const FidelityTerm& f) {
    const double lips = estimate_lipschitz(f);
    if (lips <= 0) throw Error("default_gamma: nonpositive Lipschitz estimate");
    return 1.0 / lips;
}

}  // namespace pnp
