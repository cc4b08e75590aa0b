#include "hkam/kam.hpp"
#include "hkam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

namespace hkam {

double KamParams::delta0() const {
    const double b = norm.beta;
    return b * b * alpha2 / (16.0 * (2.0 + d + 2.0 * b * alpha2) * (d + 2.0 * b));
}

double KamParams::delta0_prime() const { return norm.beta / (8.0 * (d + 2.0 * norm.beta)); }

double KamParams::nu() const { return 4.0 * (d / norm.beta + 2.0); }

double KamParams::alpha_exp() const {
    const double b = norm.beta;
    return b * alpha2 / (2.0 + d + 2.0 * b * alpha2);
}

void KamParams::validate() const {
    std::ostringstream err;
    if (d < 1) err << "d must be >= 1; ";
    if (n < 1) err << "n must be >= 1; ";
    if (!(epsilon0 > 0.0 && epsilon0 < 1.0)) err << "epsilon must lie in (0, 1); ";
    if (!(sigma0 > 0.0)) err << "sigma0 must be > 0; ";
    try {
        norm.validate();
    } catch (const ParameterError& e) {
        err << e.what() << "; ";
    }
    if (delta && !(*delta > 0.0 && *delta <= delta0())) err << "delta must lie in (0, delta0]; ";
    if (max_steps < 0) err << "max_steps must be >= 0; ";
    if (target_qnorm && !(*target_qnorm >= 0.0)) err << "target_qnorm must be >= 0; ";
    if (!(alpha2 > 0.0)) err << "alpha2 must be > 0; ";
    if (kappa_override && !(*kappa_override > 0.0)) err << "kappa_override must be > 0; ";
    if (!(kappa_floor > 0.0)) err << "kappa_floor must be > 0; ";
    if (fourier_cap < 1) err << "fourier_cap must be >= 1; ";
    if (divisor_scan_cap < 1) err << "divisor_scan_cap must be >= 1; ";
    if (t_nodes < 2) err << "t_nodes must be >= 2; ";
    const auto msg = err.str();
    if (!msg.empty()) throw ParameterError("KamParams: " + msg);
}

Schedule make_schedule(const KamParams& p, int m) {
    if (m < 1) throw ParameterError("make_schedule: m must be >= 1");
    const double log_eps0 = std::log(p.epsilon0);
    Schedule s;
    s.m = m;
    s.eps = std::exp(std::pow(1.5, m) * log_eps0);
    double shrink = 0.0;
    for (int j = 1; j <= m; ++j) shrink += 1.0 / (double(j) * j);
    s.sigma = p.sigma0 * (1.0 - schedule_c_star() * shrink);
    const double step = schedule_c_star() * p.sigma0 / (double(m) * m);
    // ln(1/eps_m) from logs so that underflowed eps_m still yields a finite cutoff.
    const double k = 2.0 / step * (-std::pow(1.5, m) * log_eps0);
    s.K = k > 1e15 ? static_cast<long long>(1e15) : static_cast<long long>(std::floor(k));
    if (p.kappa_override) {
        s.kappa = *p.kappa_override;
    } else {
        s.kappa = std::exp(p.delta_value() * std::pow(1.5, m - 1) * log_eps0);
        if (s.kappa < p.kappa_floor) {
            s.kappa = p.kappa_floor;
            s.kappa_floored = true;
        }
    }
    return s;
}

KamState initial_state(const NormalFormMatrix& n0, const QPMatrix& q0, const KamParams& p) {
    require_same_basis(n0.basis(), q0.basis());
    Schedule s0;
    s0.sigma = p.sigma0;
    s0.eps = p.epsilon0;
    s0.K = q0.K();
    KamState st{0, n0, q0, s0, {}, {msb_scale(q0, p.norm)}, {}};
    st.Q.set_sigma(p.sigma0);
    return st;
}

Eigen::MatrixXcd transformed_perturbation(const Eigen::MatrixXcd& s, const Eigen::MatrixXcd& q,
                                          const Eigen::MatrixXcd& r, const Eigen::MatrixXcd& n_tilde,
                                          const Eigen::VectorXd& t_nodes, const Eigen::VectorXd& t_weights) {
    const cplx I(0.0, 1.0);
    const Eigen::MatrixXcd base = n_tilde + r;
    const Eigen::MatrixXcd c_base = I * (s * base - base * s);
    const Eigen::MatrixXcd c_q = I * (s * q - q * s);
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(s.rows(), s.cols());
    for (Eigen::Index j = 0; j < t_nodes.size(); ++j) {
        const double t = t_nodes[j];
        const Eigen::MatrixXcd u = expm(I * t * s);
        const Eigen::MatrixXcd uinv = expm(-I * t * s);
        acc += t_weights[j] * (u * ((1.0 - t) * c_base + t * c_q) * uinv);
    }
    return r + acc;
}

namespace {

int grid_size_for(int K) { return 4 * K + 1; }

}  // namespace

KamState kam_step(const KamState& state, const Frequency& w, const KamParams& p) {
    const int m1 = state.m + 1;
    const Schedule sched = make_schedule(p, m1);
    const auto& basis = state.N.basis_ptr();

    StepDiagnostics diag;
    const auto eig = diagonalize_normal_form(state.N);
    diag.K_scan = static_cast<int>(std::min<long long>(sched.K, p.divisor_scan_cap));
    const auto report = check_divisors(eig, w, sched.kappa, diag.K_scan);
    diag.divisor_ratio = report.min_ratio;
    if (!report.passed) {
        // Report the lowest-order resonance; the scan order is not meaningful.
        auto order = [](const DivisorViolation& x) {
            long long s = 0;
            for (int c : x.k) s += std::abs(c);
            return std::make_pair(s, std::abs(x.divisor));
        };
        const auto& v = *std::min_element(report.violations.begin(), report.violations.end(),
                                          [&](const auto& a, const auto& b) { return order(a) < order(b); });
        throw SmallDivisorError(v.k, v.wa, v.wb, std::abs(v.divisor), v.bound);
    }

    const int K_solve = static_cast<int>(std::min<long long>(sched.K, state.Q.K()));
    HomologicalSolution sol = solve_homological(state.N, state.Q, w, sched.kappa, K_solve, p.norm, &eig);
    diag.divisor_min = sol.divisor_min;
    diag.homological_residual = sol.residual;

    NormalFormMatrix n_next(state.N.matrix() + sol.N_tilde.matrix(), 1e-12);

    const int K_in = std::max({state.Q.K(), sol.S.K(), sol.R.K()});
    const int K_out = static_cast<int>(std::min<long long>(sched.K, p.fourier_cap));
    const TorusGrid grid(w.n(), grid_size_for(std::max(K_in, K_out)));
    diag.grid_points = static_cast<int>(grid.size());
    const FourierBox in_box(w.n(), K_in);
    const auto sg = fourier_to_grid(in_box, sol.S.resized(K_in).coeffs(), grid);
    const auto qg = fourier_to_grid(in_box, state.Q.resized(K_in).coeffs(), grid);
    const auto rg = fourier_to_grid(in_box, sol.R.resized(K_in).coeffs(), grid);
    const Eigen::MatrixXcd& nt = sol.N_tilde.dense();

    Eigen::VectorXd t1, w1, t2, w2;
    gauss_legendre01(p.t_nodes, t1, w1);
    gauss_legendre01(2 * p.t_nodes, t2, w2);

    std::vector<Eigen::MatrixXcd> values(grid.size());
    double diff = 0.0, scale = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        Eigen::MatrixXcd v = transformed_perturbation(sg[g], qg[g], rg[g], nt, t1, w1);
        const Eigen::MatrixXcd v2 = transformed_perturbation(sg[g], qg[g], rg[g], nt, t2, w2);
        diff = std::max(diff, (v - v2).cwiseAbs().maxCoeff());
        scale = std::max(scale, v2.cwiseAbs().maxCoeff());
        const Eigen::MatrixXcd h = 0.5 * (v + v.adjoint());
        diag.hermitization = std::max(diag.hermitization, (h - v).cwiseAbs().maxCoeff());
        values[g] = h;
    }
    diag.t_quadrature_change = scale > 0.0 ? diff / scale : diff;
    if (diag.t_quadrature_change > 1e-10) {
        std::ostringstream os;
        os << "kam_step: t-quadrature not converged (relative change " << diag.t_quadrature_change << ")";
        throw NumericalResolutionError(os.str());
    }

    std::vector<Eigen::MatrixXcd> dropped;
    QPMatrix q_next = from_grid(basis, grid, values, K_out, &dropped);
    q_next.set_sigma(sched.sigma);
    for (const auto& c : dropped)
        if (c.cwiseAbs().maxCoeff() != 0.0) diag.truncation_defect += msb_norm(BlockMatrix(basis, c, false), p.norm);

    KamState next{m1, std::move(n_next), std::move(q_next), sched, state.S_list, state.qnorm_history,
                  state.diagnostics};
    sol.S.set_sigma(sched.sigma);
    next.S_list.push_back(std::move(sol.S));
    next.qnorm_history.push_back(msb_scale(next.Q, p.norm));
    next.diagnostics.push_back(diag);
    return next;
}

Eigen::MatrixXcd Transformation::evaluate(const std::vector<double>& phi, std::size_t dim) const {
    const auto n = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(n, n);
    for (const auto& s : gens_) m = (expm(cplx(0.0, 1.0) * s.evaluate(phi)) * m).eval();
    return m;
}

Transformation Transformation::without_last() const {
    if (gens_.empty()) return *this;
    return Transformation(std::vector<QPMatrix>(gens_.begin(), gens_.end() - 1));
}

std::vector<std::vector<double>> sample_phases(int n, int count) {
    // Fractional parts of sqrt(p) for the first primes; deterministic and equidistributed.
    static constexpr double irr[] = {0.41421356237309515, 0.7320508075688772, 0.2360679774997898,
                                     0.6457513110645907,  0.3166247903554,    0.6055512754639891};
    std::vector<std::vector<double>> out;
    for (int j = 0; j < count; ++j) {
        std::vector<double> phi(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double a = irr[static_cast<std::size_t>(i) % 6] + 0.1 * (i / 6);
            const double x = (j + 0.5) * a;
            phi[static_cast<std::size_t>(i)] = 2.0 * 3.14159265358979323846 * (x - std::floor(x));
        }
        out.push_back(std::move(phi));
    }
    return out;
}

double transformation_distance(const Transformation& t, const Basis& b, int n, double s_prime, double beta,
                               int phi_samples) {
    if (t.is_identity()) return 0.0;
    const auto id = Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(b.size()), static_cast<Eigen::Index>(b.size()));
    double worst = 0.0;
    for (const auto& phi : sample_phases(n, phi_samples)) {
        const Eigen::MatrixXcd m = t.evaluate(phi, b.size()) - id;
        worst = std::max(worst, operator_norm_weighted(b, m, s_prime, s_prime + 2.0 * beta));
    }
    return worst;
}

double unitarity_defect(const Transformation& t, const Basis& b, int n, int phi_samples) {
    const auto dim = static_cast<Eigen::Index>(b.size());
    double worst = 0.0;
    for (const auto& phi : sample_phases(n, phi_samples)) {
        const Eigen::MatrixXcd m = t.evaluate(phi, b.size());
        const Eigen::MatrixXcd e = m.adjoint() * m - Eigen::MatrixXcd::Identity(dim, dim);
        if (e.cwiseAbs().maxCoeff() == 0.0) continue;
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(e);
        worst = std::max(worst, svd.singularValues()(0));
    }
    return worst;
}

WabReport wab_check(const NormalFormMatrix& n_final, const QPMatrix& q0, double eps, const NormParams& p) {
    const auto& basis = n_final.basis_ptr();
    const auto proj = project_block_diagonal(BlockMatrix(basis, q0.coeff(q0.box().zero()), false));
    const BlockMatrix diff = n_final.matrix() - BlockMatrix::harmonic(basis) - proj.matrix();
    WabReport r;
    r.operator_distance = operator_norm_weighted(diff, 0.0, 0.0);
    r.msb_distance = msb_norm(diff, p);
    r.normalized = eps > 0.0 ? r.operator_distance / eps : 0.0;
    return r;
}

KamOutcome run_kam(const NormalFormMatrix& n0, const QPMatrix& q0, const Frequency& w, const KamParams& p) {
    p.validate();
    if (w.n() != q0.n()) throw ParameterError("run_kam: frequency dimension does not match Q");
    KamState st = initial_state(n0, q0, p);
    KamOutcome out{st, {st}, {}, false, false, 0, {}, {}, 0, 0, 0.0};
    const double target = p.target();
    while (st.qnorm_history.back() > target && st.m < p.max_steps) {
        try {
            st = kam_step(st, w, p);
        } catch (const SmallDivisorError& e) {
            out.excluded = true;
            out.excluded_step = st.m + 1;
            out.exclusion_message = e.what();
            out.excluded_k = e.k();
            out.excluded_wa = e.wa();
            out.excluded_wb = e.wb();
            break;
        }
        out.history.push_back(st);
    }
    out.converged = !out.excluded && st.qnorm_history.back() <= target;
    out.transformation = Transformation(st.S_list);
    out.normal_form_distance = msb_norm(st.N.matrix() - BlockMatrix::harmonic(st.N.basis_ptr()), p.norm);
    out.final_state = std::move(st);
    return out;
}

}  // namespace hkam
