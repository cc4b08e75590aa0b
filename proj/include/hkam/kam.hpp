#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hkam/homological.hpp"
#include "hkam/melnikov.hpp"
#include "hkam/qpmat.hpp"

namespace hkam {

struct KamParams {
    int d = 1;
    int n = 1;
    double epsilon0 = 1e-3;
    std::optional<double> delta;  // defaults to delta0
    double sigma0 = 1.0;
    NormParams norm{2.0, 0.25};
    int max_steps = 8;
    std::optional<double> target_qnorm;  // defaults to 1e-12 * epsilon0
    std::optional<double> alpha1;        // defaults to n + 1
    double alpha2 = 1.0;

    std::optional<double> kappa_override;  // replaces every kappa_m when set
    double kappa_floor = 1e-13;
    int fourier_cap = 16;       // Fourier support kept for Q_m
    int divisor_scan_cap = 256; // largest |k|_inf scanned by the divisor check
    int t_nodes = 6;            // Gauss-Legendre nodes in the t integral

    double delta0() const;
    double delta0_prime() const;
    double nu() const;
    double alpha_exp() const;
    double delta_value() const { return delta.value_or(delta0()); }
    double target() const { return target_qnorm.value_or(1e-12 * epsilon0); }
    double alpha1_value() const { return alpha1.value_or(n + 1.0); }

    void validate() const;
};

struct Schedule {
    int m = 0;
    double sigma = 0.0;
    long long K = 0;
    double kappa = 0.0;
    double eps = 0.0;
    bool kappa_floored = false;
};

// Closed-form rung m >= 1 of the parameter ladder; C* = 3 / pi^2.
Schedule make_schedule(const KamParams& p, int m);
constexpr double schedule_c_star() { return 0.30396355092701331; }

// Per-step diagnostics recorded when passing from rung m - 1 to m.
struct StepDiagnostics {
    int K_scan = 0;             // |k|_inf range actually scanned for divisors
    double divisor_min = 0.0;   // smallest |divisor| used in the solve
    double divisor_ratio = 0.0; // min normalized divisor over the scan
    double homological_residual = 0.0;
    double truncation_defect = 0.0;  // msb_scale of the Fourier tail dropped from Q_m
    double t_quadrature_change = 0.0;
    double hermitization = 0.0;
    int grid_points = 0;
};

struct KamState {
    int m = 0;
    NormalFormMatrix N;
    QPMatrix Q;
    Schedule schedule;  // values of rung m (rung 0 carries sigma0 and epsilon0)
    std::vector<QPMatrix> S_list;
    std::vector<double> qnorm_history;
    std::vector<StepDiagnostics> diagnostics;
};

KamState initial_state(const NormalFormMatrix& n0, const QPMatrix& q0, const KamParams& p);

// One KAM step; throws SmallDivisorError when the frequency is excluded.
KamState kam_step(const KamState& state, const Frequency& w, const KamParams& p);

// Q_{m+1}(phi) = R + int_0^1 e^{itS} i[S, (1-t)(Ntilde + R) + tQ] e^{-itS} dt at one phase.
Eigen::MatrixXcd transformed_perturbation(const Eigen::MatrixXcd& s, const Eigen::MatrixXcd& q,
                                          const Eigen::MatrixXcd& r, const Eigen::MatrixXcd& n_tilde,
                                          const Eigen::VectorXd& t_nodes, const Eigen::VectorXd& t_weights);

// M(phi) = e^{iS_M(phi)} ... e^{iS_1(phi)}: maps the original coordinates to the final ones.
class Transformation {
public:
    Transformation() = default;
    explicit Transformation(std::vector<QPMatrix> generators) : gens_(std::move(generators)) {}

    const std::vector<QPMatrix>& generators() const noexcept { return gens_; }
    bool is_identity() const noexcept { return gens_.empty(); }
    Eigen::MatrixXcd evaluate(const std::vector<double>& phi, std::size_t dim) const;
    Transformation without_last() const;

private:
    std::vector<QPMatrix> gens_;
};

// Deterministic phases 2 pi frac(j alpha_i) with a fixed irrational alpha per axis.
std::vector<std::vector<double>> sample_phases(int n, int count);

double transformation_distance(const Transformation& t, const Basis& b, int n, double s_prime, double beta,
                               int phi_samples);
double unitarity_defect(const Transformation& t, const Basis& b, int n, int phi_samples);

struct WabReport {
    double operator_distance = 0.0;  // || N_final - N_0 - Pi(Qhat_0(0)) ||_2
    double msb_distance = 0.0;
    double normalized = 0.0;         // operator_distance / eps
};

WabReport wab_check(const NormalFormMatrix& n_final, const QPMatrix& q0, double eps, const NormParams& p);

struct KamOutcome {
    KamState final_state;
    std::vector<KamState> history;  // rungs 0..M
    Transformation transformation;
    bool converged = false;
    bool excluded = false;
    int excluded_step = 0;
    std::string exclusion_message;
    std::vector<int> excluded_k;
    int excluded_wa = 0, excluded_wb = 0;
    double normal_form_distance = 0.0;  // |N_final - N_0|_{s,beta}
};

KamOutcome run_kam(const NormalFormMatrix& n0, const QPMatrix& q0, const Frequency& w, const KamParams& p);

}  // namespace hkam
