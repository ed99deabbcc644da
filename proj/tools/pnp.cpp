#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "pnp/pnp.hpp"

// pnp: command-line harness for the plug-in reconstruction experiments.
//   pnp run <config>       run every (algorithm, budget, seed) triple
//   pnp validate <config>  check a config without writing anything
//   pnp phantom ...        write a synthetic ground-truth signal
//   pnp snr ...            reconstruction SNR between two .pnps files

namespace {

pnp::Shape parse_shape(const std::string& text) {
    const auto x = text.find('x');
    try {
        if (x == std::string::npos) return pnp::Shape::flat(std::stoll(text));
        return pnp::Shape::grid(std::stoll(text.substr(0, x)), std::stoll(text.substr(x + 1)));
    } catch (const std::exception&) {
        throw pnp::Error("bad shape '" + text + "' (expected N or HxW)");
    }
}

pnp::ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw pnp::ConfigError("cannot open config file " + path);
    return pnp::parse_config(is);
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"plug-in reconstruction benchmark harness"};
    app.require_subcommand(1);

    std::string config_path, outdir_override;
    int jobs = 1;
    auto* cmd_run = app.add_subcommand("run", "run the experiment described by a config file");
    cmd_run->add_option("config", config_path, "config file")->required();
    cmd_run->add_option("--outdir", outdir_override, "override the config's output directory");
    cmd_run->add_option("--jobs", jobs, "max concurrent triples")->check(CLI::PositiveNumber);

    std::string validate_path;
    auto* cmd_validate = app.add_subcommand("validate", "check a config file");
    cmd_validate->add_option("config", validate_path, "config file")->required();

    std::string kind_name, shape_text, phantom_out;
    std::uint64_t phantom_seed = 0;
    pnp::PhantomParams params;
    auto* cmd_phantom = app.add_subcommand("phantom", "write a synthetic ground-truth signal");
    cmd_phantom->add_option("kind", kind_name, "sparse_spikes|piecewise_blocks|checker_image")
        ->required();
    cmd_phantom->add_option("shape", shape_text, "N or HxW")->required();
    cmd_phantom->add_option("seed", phantom_seed, "seed")->required();
    cmd_phantom->add_option("out", phantom_out, "output path (.pnps, or .pgm for grids)")
        ->required();
    cmd_phantom->add_option("--sparsity", params.sparsity, "sparse_spikes nonzero fraction");
    cmd_phantom->add_option("--blocks", params.blocks, "piecewise_blocks segment count");
    cmd_phantom->add_option("--cell", params.cell, "checker_image cell size");

    std::string truth_path, estimate_path;
    auto* cmd_snr = app.add_subcommand("snr", "reconstruction SNR between two .pnps signals");
    cmd_snr->add_option("truth", truth_path, "ground truth .pnps")->required();
    cmd_snr->add_option("estimate", estimate_path, "estimate .pnps")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_run->parsed()) {
            pnp::ExperimentConfig cfg;
            try {
                cfg = load_config(config_path);
            } catch (const pnp::ConfigError& e) {
                std::cerr << e.what() << "\n";
                return 2;
            }
            return pnp::run_experiment(cfg, std::cerr, jobs, outdir_override);
        }
        if (cmd_validate->parsed()) {
            try {
                pnp::validate_config(load_config(validate_path));
            } catch (const pnp::ConfigError& e) {
                std::cerr << e.what() << "\n";
                return 2;
            }
            std::cout << "ok\n";
            return 0;
        }
        if (cmd_phantom->parsed()) {
            const pnp::Signal s = pnp::make_phantom(pnp::parse_phantom_kind(kind_name),
                                                    parse_shape(shape_text), params, phantom_seed);
            if (ends_with(phantom_out, ".pgm")) pnp::write_pgm(phantom_out, s);
            else pnp::write_pnps(phantom_out, s);
            return 0;
        }
        if (cmd_snr->parsed()) {
            const double v = pnp::snr_db(pnp::read_pnps(truth_path), pnp::read_pnps(estimate_path));
            std::printf("%.12g\n", v);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "pnp: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
