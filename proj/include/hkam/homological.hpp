#pragma once

#include <cstdint>
#include <vector>

#include "hkam/blockmat.hpp"
#include "hkam/qpmat.hpp"

namespace hkam {

struct Frequency;

// Per-cluster spectral decomposition P^dagger N_[a] P = diag(alpha).
struct EigenBlocks {
    BasisPtr basis;
    std::vector<Eigen::MatrixXcd> P;
    std::vector<Eigen::VectorXd> eigenvalues;  // ascending per cluster

    // Block-diagonal unitary assembled from the P blocks.
    Eigen::MatrixXcd unitary() const;
    // All eigenvalues in flat mode order.
    Eigen::VectorXd flat_eigenvalues() const;
};

// Exactly diagonal blocks keep P = Id; otherwise each eigenvector is scaled so
// that its largest-magnitude entry is real and positive.
EigenBlocks diagonalize_normal_form(const NormalFormMatrix& n);

struct HomologicalSolution {
    QPMatrix S;
    NormalFormMatrix N_tilde;
    QPMatrix R;
    double divisor_min = 0.0;  // smallest |k.omega - alpha + beta| used
    double residual = 0.0;     // relative to msb_scale(Q)
};

// Solves omega.grad S - i[N, S] = Ntilde - Q + R with S supported in |k|_inf <= K.
// Every divisor used must satisfy |k.omega - alpha + beta| >= kappa (1 + |w_a - w_b|).
HomologicalSolution solve_homological(const NormalFormMatrix& n, const QPMatrix& q, const Frequency& w, double kappa,
                                      int K, const NormParams& p, const EigenBlocks* eig = nullptr);

// sup over grid phases of |omega.grad S - i[N,S] - Ntilde + Q - R|_{s,beta}; derivative taken spectrally.
double homological_residual(const NormalFormMatrix& n, const QPMatrix& q, const Frequency& w,
                            const HomologicalSolution& sol, const NormParams& p);

// Spectral derivative omega.grad: coefficient k multiplied by i k.omega.
QPMatrix directional_derivative(const QPMatrix& s, const Frequency& w);

struct DelortCase {
    int pairs = 0;               // (k, [a], [b]) triples in this case
    double prefactor = 0.0;      // 8, 2/kappa or K2^{d/2}/kappa
    double max_ratio = 0.0;      // sup ||B|| (1 + |w_a - w_b|) / ||A||
    double max_normalized = 0.0; // max_ratio / prefactor; the case bound holds iff <= 1
};

struct DelortReport {
    double K1 = 0.0, K2 = 0.0, C_mu = 0.0;
    DelortCase cases[3];
    // sup ||B|| kappa^{1 + d/(2 delta)} (1 + |w_a - w_b|) / (K^{d/2} ||A||)
    double combined_ratio = 0.0;
    bool zero_input_gives_zero = true;
};

// Random unit-norm blocks A are divided entrywise by the divisors in the eigenbasis of N.
// C_mu is fitted as max_a |mu_a - w_a| w_a^delta; throws PreconditionError when the
// eigenvalue proximity or divisor hypotheses fail.
DelortReport delort_bound_check(const NormalFormMatrix& n, const Frequency& w, double kappa, int K, double delta,
                                int trials, std::uint64_t seed);

}  // namespace hkam
