#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <variant>

#include "pnp/rng.hpp"
#include "pnp/signal.hpp"
#include "pnp/transforms.hpp"

// The pluggable denoise operators. SoftThreshold in an orthonormal transform
// is the proximal operator of tau * |T x|_1, which makes the plug-in solvers
// coincide with their classical counterparts; GaussianSmooth is a genuinely
// non-proximal (but provably nonexpansive) linear smoother.

namespace pnp {

enum class TransformKind { identity, dct };

inline std::string to_string(TransformKind t) {
    return t == TransformKind::identity ? "identity" : "dct";
}

// Elementwise soft-thresholding: the closed-form prox of tau * |.|_1.
inline Eigen::VectorXd soft_threshold(const Eigen::VectorXd& y, double tau) {
    if (tau < 0) throw Error("soft_threshold: tau must be >= 0");
    return y.array().sign() * (y.array().abs() - tau).max(0.0);
}

inline Signal prox_l1(const Signal& y, double tau) {
    return Signal(soft_threshold(y.values, tau), y.shape);
}

// Explicit regularizer R(x) = weight * |T x|_1 for objective evaluation.
struct L1Regularizer {
    double weight = 0.0;
    TransformKind transform = TransformKind::identity;

    double value(const Signal& x) const {
        if (transform == TransformKind::identity) return weight * x.values.lpNorm<1>();
        return weight * dct2_forward(x).values.lpNorm<1>();
    }
};

class Denoiser {
public:
    static Denoiser identity() { return Denoiser(Identity{}, 0.0); }

    static Denoiser soft_threshold(TransformKind transform, double sigma) {
        if (sigma < 0) throw Error("Denoiser: sigma must be >= 0");
        return Denoiser(SoftThreshold{transform}, sigma);
    }

    static Denoiser gaussian_smooth(double sigma) {
        if (sigma < 0) throw Error("Denoiser: sigma must be >= 0");
        return Denoiser(GaussianSmooth{}, sigma);
    }

    double strength() const { return strength_; }

    // Linear denoisers admit the direct spectral nonexpansiveness check.
    bool is_linear() const { return !std::holds_alternative<SoftThreshold>(variant_); }

    Signal apply(const Signal& x) const {
        if (const auto* st = std::get_if<SoftThreshold>(&variant_)) {
            if (st->transform == TransformKind::identity) return prox_l1(x, strength_);
            if (!x.shape.is_grid()) throw Error("Denoiser: dct transform needs a grid signal");
            return dct2_inverse(prox_l1(dct2_forward(x), strength_));
        }
        if (std::holds_alternative<GaussianSmooth>(variant_)) {
            if (!x.shape.is_grid()) throw Error("Denoiser: gaussian_smooth needs a grid signal");
            const std::vector<double> taps = gaussian_taps(strength_);
            RowMat img = x.grid_view();
            img = circular_conv_axis(img, taps, 0);
            img = circular_conv_axis(img, taps, 1);
            return Signal(Eigen::Map<const Eigen::VectorXd>(img.data(), img.size()), x.shape);
        }
        return x;
    }

    std::string describe() const {
        char buf[96];
        if (std::holds_alternative<Identity>(variant_)) return "identity";
        if (const auto* st = std::get_if<SoftThreshold>(&variant_)) {
            std::snprintf(buf, sizeof(buf), "soft_threshold(transform=%s, tau=%g)",
                          to_string(st->transform).c_str(), strength_);
            return buf;
        }
        std::snprintf(buf, sizeof(buf), "gaussian_smooth(kernel_sigma=%g)", strength_);
        return buf;
    }

    // Separable kernel taps of the smoothing variant (for spectral checks).
    std::vector<double> smoothing_taps() const {
        if (!std::holds_alternative<GaussianSmooth>(variant_))
            throw Error("Denoiser: not a smoothing denoiser");
        return gaussian_taps(strength_);
    }

private:
    struct Identity {};
    struct SoftThreshold {
        TransformKind transform;
    };
    struct GaussianSmooth {};

    using Variant = std::variant<Identity, SoftThreshold, GaussianSmooth>;

    Denoiser(Variant v, double strength) : variant_(v), strength_(strength) {}

    Variant variant_;
    double strength_ = 0.0;
};

// Empirical Lipschitz probe: max |d(x)-d(z)| / |x-z| over random pairs.
// Every shipped denoiser must stay <= 1 (up to rounding); this is the
// testable necessary condition for the averaged-operator assumption.
inline double nonexpansiveness_probe(const Denoiser& d, const Shape& shape, int trials,
                                     std::uint64_t seed) {
    if (trials < 1) throw Error("nonexpansiveness_probe: trials must be >= 1");
    Rng rng(seed);
    const Eigen::Index n = shape.size();
    double worst = 0.0;
    Eigen::VectorXd a(n), b(n);
    for (int t = 0; t < trials; ++t) {
        for (Eigen::Index i = 0; i < n; ++i) a[i] = gaussian(rng);
        for (Eigen::Index i = 0; i < n; ++i) b[i] = gaussian(rng);
        const double gap = (a - b).norm();
        if (gap == 0.0) continue;
        const Signal da = d.apply(Signal(a, shape));
        const Signal db = d.apply(Signal(b, shape));
        worst = std::max(worst, (da.values - db.values).norm() / gap);
    }
    return worst;
}

}  // namespace pnp
