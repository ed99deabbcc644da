#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

#include "pnp/signal.hpp"

// On-disk formats. The .pnps layout is byte-exact regardless of host
// endianness: "PNPS", u32le h, u32le w (w == 1 means flat), then h*w
// float64le values in row-major order.

namespace pnp {

namespace detail {

inline void put_u32le(std::ostream& os, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                 static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    os.write(b, 4);
}

inline std::uint32_t get_u32le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_f64le(std::ostream& os, double v) {
    const auto u = std::bit_cast<std::uint64_t>(v);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((u >> (8 * i)) & 0xFF);
    os.write(b, 8);
}

inline double get_f64le(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(u);
}

// 17 significant digits round-trips any IEEE-754 double.
inline std::string fmt17(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline void write_pnps(std::ostream& os, const Signal& s) {
    os.write("PNPS", 4);
    const std::uint32_t h = static_cast<std::uint32_t>(s.shape.rows());
    const std::uint32_t w = static_cast<std::uint32_t>(s.shape.is_grid() ? s.shape.cols() : 1);
    detail::put_u32le(os, h);
    detail::put_u32le(os, w);
    for (Eigen::Index i = 0; i < s.size(); ++i) detail::put_f64le(os, s.values[i]);
}

inline void write_pnps(const std::string& path, const Signal& s) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("write_pnps: cannot open " + path);
    write_pnps(os, s);
    if (!os) throw Error("write_pnps: write failed on " + path);
}

inline Signal read_pnps(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != "PNPS") throw Error("read_pnps: bad magic");
    const std::uint32_t h = detail::get_u32le(is);
    const std::uint32_t w = detail::get_u32le(is);
    if (!is || h == 0 || w == 0) throw Error("read_pnps: bad header");
    Eigen::VectorXd v(static_cast<Eigen::Index>(h) * w);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = detail::get_f64le(is);
    if (!is) throw Error("read_pnps: truncated file");
    if (!v.allFinite()) throw Error("read_pnps: non-finite value");
    return w == 1 ? make_flat(std::move(v)) : make_grid(std::move(v), h, w);
}

inline Signal read_pnps(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("read_pnps: cannot open " + path);
    return read_pnps(is);
}

// Binary PGM export for grid signals; [0,1] maps to 0..255, out-of-range
// values are clipped here only.
inline void write_pgm(std::ostream& os, const Signal& s) {
    if (!s.shape.is_grid()) throw Error("write_pgm: signal is not 2D");
    os << "P5\n" << s.shape.cols() << " " << s.shape.rows() << "\n255\n";
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        const double clipped = std::clamp(s.values[i], 0.0, 1.0);
        os.put(static_cast<char>(std::lround(clipped * 255.0)));
    }
}

inline void write_pgm(const std::string& path, const Signal& s) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("write_pgm: cannot open " + path);
    write_pgm(os, s);
    if (!os) throw Error("write_pgm: write failed on " + path);
}

// Per-iteration trace CSV. zero_wall drops timing so that repeated runs of
// the same experiment emit identical bytes.
inline void write_trace_csv(std::ostream& os, const IterateTrace& trace, bool zero_wall = false) {
    os << "iter,residual,snr_db,budget,wall_ns\n";
    for (const auto& r : trace.records) {
        os << r.iter << ',' << detail::fmt17(r.residual) << ',' << detail::fmt17(r.snr_db) << ','
           << detail::fmt17(r.budget) << ',' << (zero_wall ? 0 : r.wall_ns) << '\n';
    }
}

inline void write_trace_csv(const std::string& path, const IterateTrace& trace,
                            bool zero_wall = false) {
    std::ofstream os(path);
    if (!os) throw Error("write_trace_csv: cannot open " + path);
    write_trace_csv(os, trace, zero_wall);
}

}  // namespace pnp
