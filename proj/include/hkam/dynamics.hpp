#pragma once

#include <iosfwd>
#include <vector>

#include "hkam/kam.hpp"

namespace hkam {

using StateVector = Eigen::VectorXcd;

double sobolev_norm(const Basis& b, const StateVector& xi, double s);

struct Trajectory {
    std::vector<double> times;
    std::vector<StateVector> states;
    double norm_drift = 0.0;  // max | ||xi(t)||_2 - ||xi(0)||_2 |
};

// Largest sampling step accepted by integrate_direct: 0.1 / (E_max + eps |Q|).
double max_sampling_step(const QPMatrix& q, double eps);

// xi' = -i N_0 xi - i eps Q(omega t)^T xi, adaptive Runge-Kutta-Fehlberg 7(8),
// sampled every dt up to t_final.
Trajectory integrate_direct(const QPMatrix& q, const Frequency& w, double eps, const StateVector& xi0,
                            double t_final, double dt, double tol = 1e-12);

// xi(t) = M(omega t)^T exp(-i conj(N) t) conj(M(0)) xi0.
class ReducedPropagator {
public:
    ReducedPropagator(Transformation t, const NormalFormMatrix& n_final, Frequency w);
    StateVector operator()(const StateVector& xi0, double t) const;

private:
    Transformation t_;
    BasisPtr basis_;
    Frequency w_;
    Eigen::MatrixXcd conj_p_;  // conj(P)
    Eigen::VectorXd mu_;
    Eigen::MatrixXcd m0_conj_;
};

StateVector propagate_reduced(const Transformation& t, const NormalFormMatrix& n_final, const Frequency& w,
                              const StateVector& xi0, double t_value);

struct FloquetPoint {
    std::size_t mode = 0;  // flat index of mu_c
    std::vector<int> k;
    double value = 0.0;
};

struct FloquetSpectrum {
    Eigen::VectorXd mu;  // per flat mode, ascending inside each cluster
    Frequency omega;
    int k_range = 0;
    std::vector<FloquetPoint> points;
    double max_deviation = 0.0;   // max_c |mu_c - w_c|
    double fitted_exponent = 0.0; // -slope of log|mu_c - w_c| against log w_c
    double fitted_constant = 0.0; // max_c |mu_c - w_c| w_c^{exponent}
};

FloquetSpectrum floquet_spectrum(const NormalFormMatrix& n_final, const Frequency& w, int k_range);

void write_spectrum_csv(std::ostream& os, const FloquetSpectrum& f);

struct FloquetCrosscheck {
    int dimension = 0;
    int interior_count = 0;
    double hausdorff = 0.0;           // interior window against the predicted set
    double assignment_distance = 0.0; // per-group sorted matching
    double min_group_mass = 1.0;      // over interior eigenvectors
    double max_imag = 0.0;            // imaginary parts from a general eigensolver
};

// Dense eigensolve of the truncated Floquet matrix diag(k.omega) (x) Id + Id (x) N_0 + eps [Q(k-j)^T]
// over |k|_inf <= k_cut, compared with {mu_c + k.omega} from n_final.
FloquetCrosscheck floquet_direct_crosscheck(const QPMatrix& q, const Frequency& w, double eps, int k_cut,
                                            const NormalFormMatrix& n_final, int max_dimension = 4000);

struct NormBand {
    double s = 0.0;
    double upper = 0.0;  // sup_t ||xi(t)||_s / ||xi0||_s - 1
    double lower = 0.0;  // 1 - inf_t ||xi(t)||_s / ||xi0||_s
    double half_width() const { return std::max(upper, lower); }
};

NormBand norm_band(const Basis& b, const std::vector<StateVector>& states, double s);

// Writes "t,norm_1,norm_s,l2_error_vs_reduced".
void write_trajectory_csv(std::ostream& os, const Basis& b, const Trajectory& direct,
                          const std::vector<StateVector>& reduced, double s);

}  // namespace hkam
