#pragma once

#include <optional>
#include <vector>

#include "hkam/blockmat.hpp"
#include "hkam/torus.hpp"

namespace hkam {

// Real spatial profile prod_k poly_k(x_k) exp(-gamma_k x_k^2).
// A single poly or gamma entry is broadcast to every axis.
struct SpatialProfile {
    std::vector<double> gamma{1.0};
    std::vector<std::vector<double>> poly{{1.0}};  // ascending coefficients per axis
};

struct PotentialTerm {
    std::vector<int> k;
    cplx coefficient{1.0, 0.0};
    SpatialProfile profile;
};

struct PotentialSpec {
    std::vector<PotentialTerm> terms;
    int n = 1;  // number of forcing frequencies

    // Throws ParameterError on shape errors or missing conjugate partners.
    void validate(int d) const;
    int max_wavenumber() const;
};

// Quasi-periodic matrix map phi -> sum_k Qhat(k) e^{i k.phi} with |k|_inf <= K.
class QPMatrix {
public:
    QPMatrix(BasisPtr basis, int n, int K);

    const Basis& basis() const noexcept { return *basis_; }
    const BasisPtr& basis_ptr() const noexcept { return basis_; }
    const FourierBox& box() const noexcept { return box_; }
    int n() const noexcept { return box_.n(); }
    int K() const noexcept { return box_.K(); }

    double sigma() const noexcept { return sigma_; }
    void set_sigma(double s) noexcept { sigma_ = s; }

    const Eigen::MatrixXcd& coeff(std::size_t flat) const { return coeffs_.at(flat); }
    Eigen::MatrixXcd& coeff(std::size_t flat) {
        grid_.reset();
        return coeffs_.at(flat);
    }
    const std::vector<Eigen::MatrixXcd>& coeffs() const noexcept { return coeffs_; }
    // Zero when k lies outside the box.
    BlockMatrix coefficient(const std::vector<int>& k) const;

    // Values at arbitrary real or complex phase by direct summation.
    Eigen::MatrixXcd evaluate(const std::vector<double>& phi) const;

    bool has_grid() const noexcept { return grid_.has_value(); }
    const TorusGrid& grid() const { return grid_.value().grid; }
    const std::vector<Eigen::MatrixXcd>& grid_values() const { return grid_.value().values; }

    // Same map on a larger or smaller box (truncating or zero padding).
    QPMatrix resized(int K) const;

    // max_k |Qhat(-k) - Qhat(k)^dagger|: zero iff Q(phi) is hermitian for real phi.
    double hermitian_symmetry_defect() const;

    bool is_zero() const;

private:
    friend QPMatrix synthesize_on_grid(const QPMatrix& q, int G);
    struct GridCache {
        TorusGrid grid;
        std::vector<Eigen::MatrixXcd> values;
    };

    BasisPtr basis_;
    FourierBox box_;
    std::vector<Eigen::MatrixXcd> coeffs_;
    double sigma_ = 1.0;
    std::optional<GridCache> grid_;
};

// sum_k |Qhat(k)|_{s,beta}: the scalar used to measure the size of a perturbation.
double msb_scale(const QPMatrix& q, const NormParams& p);

// Qhat(k)_ab = int V_k(x) Phi_a(x) Phi_b(x) dx by Gauss-Hermite quadrature
// matched to each Gaussian profile; verified against a rule with twice the nodes.
QPMatrix assemble_Q(const PotentialSpec& v, BasisPtr basis);

// 1-d moments int phi_m phi_n poly(x) exp(-gamma x^2) dx for m, n < levels.
Eigen::MatrixXd profile_moments(int levels, double gamma, const std::vector<double>& poly, int q_pts);

QPMatrix synthesize_on_grid(const QPMatrix& q, int G = 0);

// Fourier coefficients with |k|_inf <= K_out of grid samples.
QPMatrix from_grid(BasisPtr basis, const TorusGrid& grid, const std::vector<Eigen::MatrixXcd>& values, int K_out,
                   std::vector<Eigen::MatrixXcd>* dropped = nullptr);

struct DecayRow {
    int gap = 0;            // |w_a - w_b|
    double envelope = 0.0;  // max over k and cluster pairs with this gap
};

struct DecayProfile {
    double sup = 0.0;
    std::vector<DecayRow> rows;
    double fitted_exponent = 0.0;        // slope of log envelope against log(1 + gap), gaps >= 2
                                         // (rows at roundoff level are skipped here and below)
    std::vector<int> monotonicity_breaks; // gaps >= 4 where the envelope increases
};

DecayProfile decay_profile(const QPMatrix& q, const NormParams& p);

}  // namespace hkam
