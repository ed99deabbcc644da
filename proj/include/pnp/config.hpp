#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pnp/denoisers.hpp"
#include "pnp/phantom.hpp"
#include "pnp/signal.hpp"
#include "pnp/solvers.hpp"

// Experiment configuration: a plain-text file of `section.key = value`
// lines, `#` starts a comment, keys are case-sensitive. parse and emit are
// exact inverses on valid configs. The grammar is documented in the README.

namespace pnp {

struct ConfigError : Error {
    using Error::Error;
};

struct ProblemConfig {
    std::string model = "gaussian_cs";  // gaussian_cs | blur
    Eigen::Index n = 256;               // gaussian_cs signal length
    Eigen::Index h = 0, w = 0;          // blur image shape
    Eigen::Index m = 128;               // gaussian_cs measurement count
    int k = 50;                         // component count
    double noise_sigma = 0.01;
    double kernel_sigma = 1.0;          // blur kernel width (pixels)
    std::string phantom = "sparse_spikes";
    double sparsity = 0.1;
    int blocks = 8;
    int cell = 2;

    bool operator==(const ProblemConfig&) const = default;
};

struct DenoiserSection {
    std::string variant = "soft_threshold";  // identity | soft_threshold | gaussian_smooth
    std::string transform = "identity";      // identity | dct (soft_threshold only)
    double sigma = 0.005;

    bool operator==(const DenoiserSection&) const = default;
};

struct SolverSection {
    std::optional<double> gamma = 0.05;  // `auto` in a file selects 1/L
    int b = 5;
    int max_iters = 100000;
    std::uint64_t seed = 0;
    double rho = 1.0;

    bool operator==(const SolverSection&) const = default;
};

struct ExperimentSection {
    std::vector<std::string> algorithms = {"ista", "fista", "sgd", "admm"};
    std::vector<double> budgets = {10.0, 30.0};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::string outdir = "out";

    bool operator==(const ExperimentSection&) const = default;
};

struct ExperimentConfig {
    ProblemConfig problem;
    DenoiserSection denoiser;
    SolverSection solver;
    ExperimentSection experiment;

    bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double parse_double(const std::string& v, const std::string& key) {
    std::size_t used = 0;
    double d = 0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        throw ConfigError("config: bad number '" + v + "' for " + key);
    }
    if (used != v.size()) throw ConfigError("config: bad number '" + v + "' for " + key);
    return d;
}

inline long long parse_int(const std::string& v, const std::string& key) {
    std::size_t used = 0;
    long long i = 0;
    try {
        i = std::stoll(v, &used);
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer '" + v + "' for " + key);
    }
    if (used != v.size()) throw ConfigError("config: bad integer '" + v + "' for " + key);
    return i;
}

inline std::uint64_t parse_u64(const std::string& v, const std::string& key) {
    std::size_t used = 0;
    unsigned long long i = 0;
    try {
        i = std::stoull(v, &used);
    } catch (const std::exception&) {
        throw ConfigError("config: bad seed '" + v + "' for " + key);
    }
    if (used != v.size()) throw ConfigError("config: bad seed '" + v + "' for " + key);
    return i;
}

inline std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& is) {
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: missing '=' on line " + std::to_string(lineno));
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (val.empty())
            throw ConfigError("config: empty value for " + key + " on line " +
                              std::to_string(lineno));

        if (key == "problem.model") cfg.problem.model = val;
        else if (key == "problem.n") cfg.problem.n = detail::parse_int(val, key);
        else if (key == "problem.h") cfg.problem.h = detail::parse_int(val, key);
        else if (key == "problem.w") cfg.problem.w = detail::parse_int(val, key);
        else if (key == "problem.m") cfg.problem.m = detail::parse_int(val, key);
        else if (key == "problem.k") cfg.problem.k = static_cast<int>(detail::parse_int(val, key));
        else if (key == "problem.noise_sigma") cfg.problem.noise_sigma = detail::parse_double(val, key);
        else if (key == "problem.kernel_sigma") cfg.problem.kernel_sigma = detail::parse_double(val, key);
        else if (key == "problem.phantom") cfg.problem.phantom = val;
        else if (key == "problem.sparsity") cfg.problem.sparsity = detail::parse_double(val, key);
        else if (key == "problem.blocks") cfg.problem.blocks = static_cast<int>(detail::parse_int(val, key));
        else if (key == "problem.cell") cfg.problem.cell = static_cast<int>(detail::parse_int(val, key));
        else if (key == "denoiser.variant") cfg.denoiser.variant = val;
        else if (key == "denoiser.transform") cfg.denoiser.transform = val;
        else if (key == "denoiser.sigma") cfg.denoiser.sigma = detail::parse_double(val, key);
        else if (key == "solver.gamma") {
            if (val == "auto") cfg.solver.gamma.reset();
            else cfg.solver.gamma = detail::parse_double(val, key);
        }
        else if (key == "solver.b") cfg.solver.b = static_cast<int>(detail::parse_int(val, key));
        else if (key == "solver.max_iters") cfg.solver.max_iters = static_cast<int>(detail::parse_int(val, key));
        else if (key == "solver.seed") cfg.solver.seed = detail::parse_u64(val, key);
        else if (key == "solver.rho") cfg.solver.rho = detail::parse_double(val, key);
        else if (key == "experiment.algorithms") cfg.experiment.algorithms = detail::split_list(val);
        else if (key == "experiment.budgets") {
            cfg.experiment.budgets.clear();
            for (const auto& item : detail::split_list(val))
                cfg.experiment.budgets.push_back(detail::parse_double(item, key));
        }
        else if (key == "experiment.seeds") {
            cfg.experiment.seeds.clear();
            for (const auto& item : detail::split_list(val))
                cfg.experiment.seeds.push_back(detail::parse_u64(item, key));
        }
        else if (key == "experiment.outdir") cfg.experiment.outdir = val;
        else throw ConfigError("config: unknown key '" + key + "' on line " + std::to_string(lineno));
    }
    return cfg;
}

inline ExperimentConfig parse_config(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

inline std::string emit_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "problem.model = " << cfg.problem.model << "\n";
    os << "problem.n = " << cfg.problem.n << "\n";
    os << "problem.h = " << cfg.problem.h << "\n";
    os << "problem.w = " << cfg.problem.w << "\n";
    os << "problem.m = " << cfg.problem.m << "\n";
    os << "problem.k = " << cfg.problem.k << "\n";
    os << "problem.noise_sigma = " << detail::fmt_num(cfg.problem.noise_sigma) << "\n";
    os << "problem.kernel_sigma = " << detail::fmt_num(cfg.problem.kernel_sigma) << "\n";
    os << "problem.phantom = " << cfg.problem.phantom << "\n";
    os << "problem.sparsity = " << detail::fmt_num(cfg.problem.sparsity) << "\n";
    os << "problem.blocks = " << cfg.problem.blocks << "\n";
    os << "problem.cell = " << cfg.problem.cell << "\n";
    os << "denoiser.variant = " << cfg.denoiser.variant << "\n";
    os << "denoiser.transform = " << cfg.denoiser.transform << "\n";
    os << "denoiser.sigma = " << detail::fmt_num(cfg.denoiser.sigma) << "\n";
    if (cfg.solver.gamma) os << "solver.gamma = " << detail::fmt_num(*cfg.solver.gamma) << "\n";
    else os << "solver.gamma = auto\n";
    os << "solver.b = " << cfg.solver.b << "\n";
    os << "solver.max_iters = " << cfg.solver.max_iters << "\n";
    os << "solver.seed = " << cfg.solver.seed << "\n";
    os << "solver.rho = " << detail::fmt_num(cfg.solver.rho) << "\n";
    os << "experiment.algorithms = ";
    for (std::size_t i = 0; i < cfg.experiment.algorithms.size(); ++i)
        os << (i ? "," : "") << cfg.experiment.algorithms[i];
    os << "\n";
    os << "experiment.budgets = ";
    for (std::size_t i = 0; i < cfg.experiment.budgets.size(); ++i)
        os << (i ? "," : "") << detail::fmt_num(cfg.experiment.budgets[i]);
    os << "\n";
    os << "experiment.seeds = ";
    for (std::size_t i = 0; i < cfg.experiment.seeds.size(); ++i)
        os << (i ? "," : "") << cfg.experiment.seeds[i];
    os << "\n";
    os << "experiment.outdir = " << cfg.experiment.outdir << "\n";
    return os.str();
}

// Throws ConfigError on the first problem found.
inline void validate_config(const ExperimentConfig& cfg) {
    const auto& p = cfg.problem;
    const bool is_blur = p.model == "blur";
    if (p.model != "gaussian_cs" && !is_blur)
        throw ConfigError("config: problem.model must be gaussian_cs or blur");
    if (is_blur) {
        if (p.h < 1 || p.w < 1) throw ConfigError("config: blur needs problem.h and problem.w");
        if (p.k < 1 || p.k > p.h)
            throw ConfigError("config: problem.k must be in [1, h] for blur");
        if (p.kernel_sigma < 0) throw ConfigError("config: kernel_sigma must be >= 0");
    } else {
        if (p.n < 1) throw ConfigError("config: problem.n must be >= 1");
        if (p.m < 1) throw ConfigError("config: problem.m must be >= 1");
        if (p.k < 1 || p.k > p.m)
            throw ConfigError("config: problem.k must be in [1, m] for gaussian_cs");
    }
    if (p.noise_sigma < 0) throw ConfigError("config: noise_sigma must be >= 0");

    PhantomKind kind;
    try {
        kind = parse_phantom_kind(p.phantom);
    } catch (const Error& e) {
        throw ConfigError("config: " + std::string(e.what()));
    }
    if (kind == PhantomKind::checker_image && !is_blur)
        throw ConfigError("config: checker_image needs a grid (blur) problem");
    if (kind == PhantomKind::sparse_spikes && !(p.sparsity > 0 && p.sparsity <= 1))
        throw ConfigError("config: sparsity must be in (0, 1]");
    if (kind == PhantomKind::piecewise_blocks && p.blocks < 1)
        throw ConfigError("config: blocks must be >= 1");
    if (kind == PhantomKind::checker_image && p.cell < 1)
        throw ConfigError("config: cell must be >= 1");

    const auto& d = cfg.denoiser;
    if (d.variant != "identity" && d.variant != "soft_threshold" &&
        d.variant != "gaussian_smooth")
        throw ConfigError("config: denoiser.variant must be identity|soft_threshold|gaussian_smooth");
    if (d.transform != "identity" && d.transform != "dct")
        throw ConfigError("config: denoiser.transform must be identity|dct");
    if (d.sigma < 0) throw ConfigError("config: denoiser.sigma must be >= 0");
    if (!is_blur && d.variant == "gaussian_smooth")
        throw ConfigError("config: gaussian_smooth needs a grid (blur) problem");
    if (!is_blur && d.variant == "soft_threshold" && d.transform == "dct")
        throw ConfigError("config: dct transform needs a grid (blur) problem");

    const auto& s = cfg.solver;
    if (s.gamma && *s.gamma <= 0) throw ConfigError("config: solver.gamma must be positive");
    if (s.b < 1) throw ConfigError("config: solver.b must be >= 1");
    if (s.b > p.k) throw ConfigError("config: solver.b must be <= problem.k");
    if (s.max_iters < 1) throw ConfigError("config: solver.max_iters must be >= 1");
    if (s.rho <= 0) throw ConfigError("config: solver.rho must be positive");

    const auto& e = cfg.experiment;
    if (e.algorithms.empty()) throw ConfigError("config: need at least one algorithm");
    for (const auto& a : e.algorithms) {
        try {
            parse_algorithm(a);
        } catch (const Error& ex) {
            throw ConfigError("config: " + std::string(ex.what()));
        }
    }
    if (e.budgets.empty()) throw ConfigError("config: need at least one budget");
    for (double b : e.budgets)
        if (b <= 0) throw ConfigError("config: budgets must be positive");
    if (e.seeds.empty()) throw ConfigError("config: need at least one seed");
    for (std::size_t i = 0; i < e.seeds.size(); ++i)
        for (std::size_t j = i + 1; j < e.seeds.size(); ++j)
            if (e.seeds[i] == e.seeds[j])
                throw ConfigError("config: seeds must be distinct");
    if (e.outdir.empty()) throw ConfigError("config: outdir must not be empty");
}

}  // namespace pnp
