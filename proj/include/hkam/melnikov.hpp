#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "hkam/blockmat.hpp"
#include "hkam/homological.hpp"

namespace hkam {

struct Frequency {
    std::vector<double> omega;

    int n() const noexcept { return static_cast<int>(omega.size()); }
    double dot(const std::vector<int>& k) const;
    // Throws ParameterError unless every component lies in [0, 2 pi).
    void validate() const;
};

struct A1Report {
    double c0_lower = 0.0;  // inf_a lambda_min(N_[a]) / w_a
    double c0_gap = 0.0;    // inf_{a != b} spectral distance / |w_a - w_b|
};

A1Report check_A1(const NormalFormMatrix& n);

struct DivisorViolation {
    std::vector<int> k;
    int wa = 0, wb = 0;
    double divisor = 0.0;
    double bound = 0.0;
};

struct DivisorReport {
    double kappa = 0.0;
    int K = 0;
    std::vector<DivisorViolation> violations;
    bool passed = true;
    // min over scanned divisors of |k.omega - alpha + beta| / (1 + |w_a - w_b|)
    double min_ratio = 0.0;
};

// Scans 0 < |k|_inf <= K for all cluster pairs and k = 0 across distinct clusters.
DivisorReport check_divisors(const NormalFormMatrix& n, const Frequency& w, double kappa, int K);
DivisorReport check_divisors(const EigenBlocks& eig, const Frequency& w, double kappa, int K);

void write_violations_csv(std::ostream& os, const DivisorReport& r, int n);

// |k.omega + j| >= kappa / |k|_inf^tau for all integers j and 0 < |k|_inf <= K.
bool diophantine_member(const Frequency& w, double kappa, double tau, int K);

struct MeasureEstimate {
    std::int64_t samples = 0;
    double excluded_fraction = 0.0;
    double confidence_halfwidth = 0.0;  // 95 % normal approximation to the binomial
};

struct SamplingBox {
    double lo = 0.0;
    double hi = 6.283185307179586;
};

// Sample i draws from its own generator seeded by (seed, i).
Frequency sample_frequency(int n, const SamplingBox& box, std::uint64_t seed, std::int64_t i);

// Smallest normalized divisor over the scan of check_divisors; the frequency
// fails at kappa exactly when this is below kappa.
double min_divisor_ratio(const EigenBlocks& eig, const Frequency& w, int K);

MeasureEstimate estimate_excluded_measure(const NormalFormMatrix& n, double kappa, int K, std::int64_t samples,
                                          std::uint64_t seed, const SamplingBox& box = {}, int n_freq = 1);

struct MeasureGrid {
    std::vector<double> kappas;
    std::vector<int> Ks;
    std::vector<std::vector<MeasureEstimate>> table;  // [K index][kappa index]
    double slope = 0.0;  // least-squares slope of log fraction against log kappa at Ks.front()
};

// One pass over the samples serves every (kappa, K): the ratio is computed once per (sample, K).
MeasureGrid estimate_measure_grid(const NormalFormMatrix& n, const std::vector<double>& kappas,
                                  const std::vector<int>& Ks, std::int64_t samples, std::uint64_t seed,
                                  const SamplingBox& box = {}, int n_freq = 1);

}  // namespace hkam
