#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "pnp/rng.hpp"
#include "pnp/signal.hpp"

// Synthetic ground-truth signals for benchmarking: seeded and deterministic,
// so a (kind, shape, params, seed) tuple always names the same signal.

namespace pnp {

enum class PhantomKind { sparse_spikes, piecewise_blocks, checker_image };

inline std::string to_string(PhantomKind k) {
    switch (k) {
        case PhantomKind::sparse_spikes: return "sparse_spikes";
        case PhantomKind::piecewise_blocks: return "piecewise_blocks";
        case PhantomKind::checker_image: return "checker_image";
    }
    return "?";
}

inline PhantomKind parse_phantom_kind(const std::string& name) {
    if (name == "sparse_spikes") return PhantomKind::sparse_spikes;
    if (name == "piecewise_blocks") return PhantomKind::piecewise_blocks;
    if (name == "checker_image") return PhantomKind::checker_image;
    throw Error("unknown phantom kind '" + name +
                "' (sparse_spikes|piecewise_blocks|checker_image)");
}

struct PhantomParams {
    double sparsity = 0.1;  // sparse_spikes: fraction of nonzeros
    int blocks = 8;         // piecewise_blocks: number of constant segments
    int cell = 2;           // checker_image: block edge length in pixels
};

inline Signal make_phantom(PhantomKind kind, const Shape& shape, const PhantomParams& params,
                           std::uint64_t seed) {
    const Eigen::Index n = shape.size();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    Rng rng(seed);

    switch (kind) {
        case PhantomKind::sparse_spikes: {
            if (!(params.sparsity > 0.0 && params.sparsity <= 1.0))
                throw Error("make_phantom: sparsity must be in (0, 1]");
            const Eigen::Index nnz = static_cast<Eigen::Index>(
                std::ceil(params.sparsity * static_cast<double>(n)));
            // Partial Fisher-Yates picks nnz distinct positions.
            std::vector<Eigen::Index> pos(static_cast<std::size_t>(n));
            std::iota(pos.begin(), pos.end(), 0);
            for (Eigen::Index i = 0; i < nnz; ++i) {
                const Eigen::Index j =
                    i + static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(n - i)));
                std::swap(pos[static_cast<std::size_t>(i)], pos[static_cast<std::size_t>(j)]);
                v[pos[static_cast<std::size_t>(i)]] = uniform01(rng) < 0.5 ? -1.0 : 1.0;
            }
            break;
        }
        case PhantomKind::piecewise_blocks: {
            if (params.blocks < 1 || params.blocks > n)
                throw Error("make_phantom: blocks must be in [1, n]");
            // blocks-1 distinct cut points, then one level per segment.
            std::vector<Eigen::Index> cuts(static_cast<std::size_t>(n - 1));
            std::iota(cuts.begin(), cuts.end(), 1);
            for (int i = 0; i + 1 < params.blocks; ++i) {
                const Eigen::Index j =
                    i + static_cast<Eigen::Index>(
                            uniform_index(rng, static_cast<std::uint64_t>(n - 1 - i)));
                std::swap(cuts[static_cast<std::size_t>(i)], cuts[static_cast<std::size_t>(j)]);
            }
            std::vector<Eigen::Index> bounds(cuts.begin(), cuts.begin() + (params.blocks - 1));
            bounds.push_back(0);
            bounds.push_back(n);
            std::sort(bounds.begin(), bounds.end());
            for (std::size_t s = 0; s + 1 < bounds.size(); ++s) {
                const double level = 2.0 * uniform01(rng) - 1.0;
                for (Eigen::Index i = bounds[s]; i < bounds[s + 1]; ++i) v[i] = level;
            }
            break;
        }
        case PhantomKind::checker_image: {
            if (!shape.is_grid()) throw Error("make_phantom: checker_image needs a grid shape");
            if (params.cell < 1) throw Error("make_phantom: cell must be >= 1");
            for (Eigen::Index r = 0; r < shape.rows(); ++r)
                for (Eigen::Index c = 0; c < shape.cols(); ++c) {
                    const bool even = ((r / params.cell) + (c / params.cell)) % 2 == 0;
                    v[r * shape.cols() + c] = even ? 0.25 : 0.75;
                }
            break;
        }
    }
    return Signal(std::move(v), shape);
}

}  // namespace pnp
