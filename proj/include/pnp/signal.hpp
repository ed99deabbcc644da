#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pnp {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Largest SNR ever reported; exact recovery would otherwise be +inf.
inline constexpr double kSnrCapDb = 300.0;

// Flat(n) vector or Grid(h, w) image; h*w always equals the value count.
class Shape {
public:
    Shape() = default;

    static Shape flat(Eigen::Index n) {
        if (n < 1) throw Error("Shape: flat length must be >= 1");
        return Shape(n, 1, false);
    }

    static Shape grid(Eigen::Index h, Eigen::Index w) {
        if (h < 1 || w < 1) throw Error("Shape: grid dims must be >= 1");
        return Shape(h, w, true);
    }

    bool is_grid() const { return grid_; }
    Eigen::Index rows() const { return rows_; }
    Eigen::Index cols() const { return cols_; }
    Eigen::Index size() const { return rows_ * cols_; }

    bool operator==(const Shape&) const = default;

private:
    Shape(Eigen::Index r, Eigen::Index c, bool g) : rows_(r), cols_(c), grid_(g) {}

    Eigen::Index rows_ = 0;
    Eigen::Index cols_ = 1;
    bool grid_ = false;
};

// Real n-vector with a shape tag. Values are stored row-major for grids.
struct Signal {
    Eigen::VectorXd values;
    Shape shape;

    Signal() = default;

    Signal(Eigen::VectorXd v, Shape s) : values(std::move(v)), shape(s) {
        if (values.size() != shape.size())
            throw Error("Signal: shape size " + std::to_string(shape.size()) +
                        " != value count " + std::to_string(values.size()));
    }

    Eigen::Index size() const { return values.size(); }
    bool is_finite() const { return values.allFinite(); }

    // Row-major matrix view of a grid signal.
    auto grid_view() const {
        using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        return Eigen::Map<const RowMat>(values.data(), shape.rows(), shape.cols());
    }
};

inline Signal make_flat(Eigen::VectorXd v) {
    const Eigen::Index n = v.size();
    return Signal(std::move(v), Shape::flat(n));
}

inline Signal make_grid(Eigen::VectorXd v, Eigen::Index h, Eigen::Index w) {
    return Signal(std::move(v), Shape::grid(h, w));
}

inline Signal zeros_like(const Shape& s) {
    return Signal(Eigen::VectorXd::Zero(s.size()), s);
}

inline void require_same_size(const Signal& a, const Signal& b, const char* where) {
    if (a.size() != b.size())
        throw Error(std::string(where) + ": dimension mismatch (" +
                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
}

inline double l2_distance(const Signal& a, const Signal& b) {
    require_same_size(a, b, "l2_distance");
    return (a.values - b.values).norm();
}

// Reconstruction SNR: 20*log10(|truth| / |truth - estimate|), capped at
// kSnrCapDb so exact recovery stays finite.
inline double snr_db(const Signal& truth, const Signal& estimate) {
    require_same_size(truth, estimate, "snr_db");
    const double ref = truth.values.norm();
    if (ref == 0.0) throw Error("snr_db: truth signal is all-zero");
    const double err = (truth.values - estimate.values).norm();
    if (err == 0.0) return kSnrCapDb;
    return std::min(kSnrCapDb, 20.0 * std::log10(ref / err));
}

// Measurement vector y split into k component blocks.
struct MeasurementSet {
    std::vector<Eigen::VectorXd> blocks;
    std::string model_ref;

    Eigen::Index total_size() const {
        Eigen::Index m = 0;
        for (const auto& b : blocks) m += b.size();
        return m;
    }

    Eigen::VectorXd stacked() const {
        Eigen::VectorXd y(total_size());
        Eigen::Index at = 0;
        for (const auto& b : blocks) {
            y.segment(at, b.size()) = b;
            at += b.size();
        }
        return y;
    }

    void validate() const {
        if (blocks.empty()) throw Error("MeasurementSet: needs at least one block");
        for (const auto& b : blocks) {
            if (b.size() == 0) throw Error("MeasurementSet: empty block");
            if (!b.allFinite()) throw Error("MeasurementSet: non-finite entry");
        }
    }
};

struct SolverConfig {
    double gamma = 0.0;      // step size; > 0 (resolve via default_gamma when unset)
    double sigma = 0.0;      // denoiser strength
    int minibatch_b = 1;     // SGD only
    int max_iters = 100;
    std::uint64_t seed = 0;
    double admm_rho = 1.0;   // ADMM only
};

struct TraceRecord {
    std::int64_t iter = 0;        // 1-based step count
    double residual = 0.0;        // |x_k - P(x_k)| with the full-gradient P
    double snr_db = 0.0;          // NaN when no ground truth was supplied
    double budget = 0.0;          // component evaluations / k
    std::uint64_t wall_ns = 0;    // elapsed since run start
};

struct IterateTrace {
    std::vector<TraceRecord> records;

    bool empty() const { return records.empty(); }
    const TraceRecord& back() const { return records.back(); }
};

}  // namespace pnp
