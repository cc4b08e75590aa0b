#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hkam/kam.hpp"
#include "hkam/melnikov.hpp"
#include "hkam/qpmat.hpp"

namespace hkam {

struct DynamicsConfig {
    double t_final = 100.0;
    std::optional<double> dt;          // defaults to the largest admissible sampling step
    std::vector<double> xi0;           // real amplitudes in flat mode order; empty selects modes with w <= 5
    int floquet_k_cut = 8;
    std::vector<double> floquet_eps;   // extra epsilons for the Floquet cross-check
    int phi_samples = 50;
    double tol = 1e-12;
};

struct MeasureConfig {
    std::vector<double> kappas{1e-4, 1e-3, 1e-2};
    std::vector<int> Ks{5};
    std::int64_t samples = 100000;
    std::uint64_t seed = 20240601;
    SamplingBox box;
    std::optional<int> E_max;  // basis used for the sampled normal form
};

struct RunConfig {
    int d = 1;
    int n = 1;
    int E_max = 21;
    int Q_pts = 0;
    double s = 2.0;
    double beta = 0.25;
    double sigma0 = 1.0;
    double epsilon = 1e-3;
    std::optional<double> delta;
    std::optional<Frequency> omega;
    PotentialSpec potential;
    KamParams kam;  // schedule overrides; d, n, epsilon0, sigma0, norm, delta filled from the fields above
    DynamicsConfig dynamics;
    MeasureConfig measure;
    std::string output_dir = "out";
};

// Parses and validates; every violation found is listed in one ParameterError.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

PotentialSpec parse_potential(const nlohmann::json& j, std::vector<std::string>& errors);
nlohmann::json potential_to_json(const PotentialSpec& v);

std::string sha256_hex(const std::string& bytes);

}  // namespace hkam
