#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "pnp/signal.hpp"

// Small dense transforms used by the denoisers and the blur model. Sizes
// are desk scale, so 1D transforms are applied as explicit matrix products
// along rows and columns; everything is exact up to floating-point rounding
// and bitwise reproducible.

namespace pnp {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Orthonormal DCT-II matrix: T(p,j) = c_p cos(pi (2j+1) p / (2N)),
// c_0 = sqrt(1/N), c_p = sqrt(2/N). T is orthogonal, so T^-1 = T^T.
inline Eigen::MatrixXd dct2_matrix(Eigen::Index n) {
    Eigen::MatrixXd t(n, n);
    const double c0 = std::sqrt(1.0 / static_cast<double>(n));
    const double cp = std::sqrt(2.0 / static_cast<double>(n));
    for (Eigen::Index p = 0; p < n; ++p)
        for (Eigen::Index j = 0; j < n; ++j)
            t(p, j) = (p == 0 ? c0 : cp) *
                      std::cos(M_PI * (2.0 * j + 1.0) * p / (2.0 * static_cast<double>(n)));
    return t;
}

// Separable 2D DCT-II on a grid signal, orthonormal scaling.
inline Signal dct2_forward(const Signal& x) {
    if (!x.shape.is_grid()) throw Error("dct2_forward: grid signal required");
    const Eigen::MatrixXd th = dct2_matrix(x.shape.rows());
    const Eigen::MatrixXd tw = dct2_matrix(x.shape.cols());
    RowMat y = th * x.grid_view() * tw.transpose();
    return Signal(Eigen::Map<const Eigen::VectorXd>(y.data(), y.size()),
                  x.shape);
}

inline Signal dct2_inverse(const Signal& y) {
    if (!y.shape.is_grid()) throw Error("dct2_inverse: grid signal required");
    const Eigen::MatrixXd th = dct2_matrix(y.shape.rows());
    const Eigen::MatrixXd tw = dct2_matrix(y.shape.cols());
    RowMat x = th.transpose() * y.grid_view() * tw;
    return Signal(Eigen::Map<const Eigen::VectorXd>(x.data(), x.size()),
                  y.shape);
}

// Dense 2D DFT by row/column matrix products; fine for desk-scale grids.
class Dft2 {
public:
    Dft2(Eigen::Index h, Eigen::Index w) : h_(h), w_(w), wh_(h, h), ww_(w, w) {
        fill(wh_, h);
        fill(ww_, w);
    }

    Eigen::MatrixXcd forward(const Eigen::MatrixXd& x) const {
        return wh_ * x * ww_.transpose();
    }

    Eigen::MatrixXd inverse_real(const Eigen::MatrixXcd& y) const {
        const Eigen::MatrixXcd x =
            (wh_.conjugate() * y * ww_.conjugate().transpose()) /
            static_cast<double>(h_ * w_);
        return x.real();
    }

private:
    static void fill(Eigen::MatrixXcd& m, Eigen::Index n) {
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index j = 0; j < n; ++j) {
                const double ang = -2.0 * M_PI * static_cast<double>(p) *
                                   static_cast<double>(j) / static_cast<double>(n);
                m(p, j) = std::complex<double>(std::cos(ang), std::sin(ang));
            }
    }

    Eigen::Index h_, w_;
    Eigen::MatrixXcd wh_, ww_;
};

// Normalized 1D Gaussian taps exp(-j^2 / (2 sigma^2)), j in [-r, r] with
// r = ceil(4 sigma); sigma == 0 degenerates to a unit impulse.
inline std::vector<double> gaussian_taps(double sigma) {
    if (sigma < 0) throw Error("gaussian_taps: sigma must be >= 0");
    if (sigma == 0.0) return {1.0};
    const int r = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
    std::vector<double> taps(2 * r + 1);
    double sum = 0.0;
    for (int j = -r; j <= r; ++j) {
        const double v = std::exp(-0.5 * (j / sigma) * (j / sigma));
        taps[j + r] = v;
        sum += v;
    }
    for (double& v : taps) v /= sum;
    return taps;
}

// Circular 1D convolution of each row (axis=1) or column (axis=0) with an
// odd-length tap vector centered at zero.
inline RowMat circular_conv_axis(const RowMat& x, const std::vector<double>& taps, int axis) {
    const int r = static_cast<int>(taps.size() / 2);
    RowMat y = RowMat::Zero(x.rows(), x.cols());
    const Eigen::Index len = axis == 0 ? x.rows() : x.cols();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            double acc = 0.0;
            for (int t = -r; t <= r; ++t) {
                Eigen::Index src = (axis == 0 ? i : j) - t;
                src = ((src % len) + len) % len;
                acc += taps[t + r] * (axis == 0 ? x(src, j) : x(i, src));
            }
            y(i, j) = acc;
        }
    }
    return y;
}

// Circular 2D convolution with a (possibly non-separable) odd-sized kernel.
// flip=true applies the adjoint (correlation), i.e. convolution with the
// point-reflected kernel.
inline RowMat circular_conv2(const RowMat& x, const Eigen::MatrixXd& kernel, bool flip = false) {
    if (kernel.rows() % 2 == 0 || kernel.cols() % 2 == 0)
        throw Error("circular_conv2: kernel dims must be odd");
    const int rr = static_cast<int>(kernel.rows() / 2);
    const int rc = static_cast<int>(kernel.cols() / 2);
    const Eigen::Index h = x.rows(), w = x.cols();
    RowMat y(h, w);
    for (Eigen::Index i = 0; i < h; ++i) {
        for (Eigen::Index j = 0; j < w; ++j) {
            double acc = 0.0;
            for (int a = -rr; a <= rr; ++a) {
                for (int b = -rc; b <= rc; ++b) {
                    const double kv = flip ? kernel(rr - a, rc - b) : kernel(a + rr, b + rc);
                    Eigen::Index si = ((i - a) % h + h) % h;
                    Eigen::Index sj = ((j - b) % w + w) % w;
                    acc += kv * x(si, sj);
                }
            }
            y(i, j) = acc;
        }
    }
    return y;
}

// DFT eigenvalues of the circulant operator "circular convolution with
// kernel" on an h x w grid: the 2D DFT of the kernel embedded at the origin
// with wrap-around.
inline Eigen::MatrixXcd kernel_spectrum(const Eigen::MatrixXd& kernel, Eigen::Index h,
                                        Eigen::Index w) {
    if (kernel.rows() % 2 == 0 || kernel.cols() % 2 == 0)
        throw Error("kernel_spectrum: kernel dims must be odd");
    const int rr = static_cast<int>(kernel.rows() / 2);
    const int rc = static_cast<int>(kernel.cols() / 2);
    Eigen::MatrixXd embedded = Eigen::MatrixXd::Zero(h, w);
    for (int a = -rr; a <= rr; ++a)
        for (int b = -rc; b <= rc; ++b) {
            const Eigen::Index i = ((a % h) + h) % h;
            const Eigen::Index j = ((b % w) + w) % w;
            embedded(i, j) += kernel(a + rr, b + rc);
        }
    return Dft2(h, w).forward(embedded);
}

}  // namespace pnp
