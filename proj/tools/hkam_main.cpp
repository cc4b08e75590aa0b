#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hkam/commands.hpp"
#include "hkam/errors.hpp"

namespace {

struct Overrides {
    std::optional<double> epsilon;
    std::optional<int> e_max;
    std::optional<int> max_steps;
    std::optional<std::string> out;
};

void apply(hkam::RunConfig& cfg, const Overrides& o) {
    if (o.epsilon) {
        cfg.epsilon = *o.epsilon;
        cfg.kam.epsilon0 = *o.epsilon;
    }
    if (o.e_max) cfg.E_max = *o.e_max;
    if (o.max_steps) cfg.kam.max_steps = *o.max_steps;
    if (o.out) cfg.output_dir = *o.out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"KAM reducibility for the quasi-periodically forced harmonic oscillator"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides ov;
    std::string artifacts;
    int k_range = 3;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--epsilon", ov.epsilon, "override epsilon");
        sub->add_option("--e-max", ov.e_max, "override the energy cutoff");
        sub->add_option("--max-steps", ov.max_steps, "override the KAM step limit");
    };

    auto* reduce = app.add_subcommand("reduce", "run the KAM iteration and write artifacts");
    add_common(reduce);
    reduce->add_option("-o,--out", ov.out, "output directory");

    auto* verify = app.add_subcommand("verify", "check artifacts against direct integration");
    add_common(verify);
    verify->add_option("-a,--artifacts", artifacts, "directory written by reduce")->required();

    auto* measure = app.add_subcommand("measure", "Monte Carlo estimate of the excluded frequency measure");
    add_common(measure);
    measure->add_option("-o,--out", ov.out, "output directory");

    auto* spectrum = app.add_subcommand("spectrum", "write the Floquet spectrum from artifacts");
    add_common(spectrum);
    spectrum->add_option("-a,--artifacts", artifacts, "directory written by reduce")->required();
    spectrum->add_option("--k-range", k_range, "|k|_inf range of the Floquet shifts")->check(CLI::NonNegativeNumber);

    auto* norms = app.add_subcommand("norms", "write Sobolev norm trajectories");
    add_common(norms);
    norms->add_option("-a,--artifacts", artifacts, "directory written by reduce")->required();

    CLI11_PARSE(app, argc, argv);

    hkam::RunConfig cfg;
    try {
        cfg = hkam::load_config(config_path);
        apply(cfg, ov);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return hkam::kExitError;
    }

    if (reduce->parsed()) return hkam::cmd_reduce(cfg, std::cerr);
    if (verify->parsed()) return hkam::cmd_verify(cfg, artifacts, std::cerr);
    if (measure->parsed()) return hkam::cmd_measure(cfg, std::cerr);
    if (spectrum->parsed()) return hkam::cmd_spectrum(cfg, artifacts, k_range, std::cerr);
    return hkam::cmd_norms(cfg, artifacts, std::cerr);
}
