#include "hkam/dynamics.hpp"
#include "hkam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>

#include <boost/numeric/odeint.hpp>

namespace hkam {

double sobolev_norm(const Basis& b, const StateVector& xi, double s) {
    if (xi.size() != static_cast<Eigen::Index>(b.size())) throw BasisMismatchError("sobolev_norm: size mismatch");
    return std::sqrt((b.weights().array().pow(s) * xi.array().abs2()).sum());
}

double max_sampling_step(const QPMatrix& q, double eps) {
    // |Q| bounded by the sum over k of the max-entry norm times the dimension.
    double qscale = 0.0;
    for (const auto& c : q.coeffs())
        if (c.size() > 0) qscale += c.cwiseAbs().maxCoeff() * static_cast<double>(c.rows());
    return 0.1 / (q.basis().energy_cutoff() + std::abs(eps) * qscale);
}

Trajectory integrate_direct(const QPMatrix& q, const Frequency& w, double eps, const StateVector& xi0,
                            double t_final, double dt, double tol) {
    namespace ode = boost::numeric::odeint;
    const Basis& b = q.basis();
    const auto dim = static_cast<Eigen::Index>(b.size());
    if (xi0.size() != dim) throw BasisMismatchError("integrate_direct: state size mismatch");
    if (w.n() != q.n()) throw ParameterError("integrate_direct: frequency dimension mismatch");
    if (!(t_final >= 0.0) || !(dt > 0.0)) throw ParameterError("integrate_direct: need t_final >= 0, dt > 0");
    const double dt_max = max_sampling_step(q, eps);
    if (dt > dt_max * (1.0 + 1e-12))
        throw PreconditionError("integrate_direct: dt exceeds 0.1 / (E_max + eps |Q|)");

    // Nonzero transposed coefficients with their wavenumbers.
    std::vector<Eigen::MatrixXcd> coeffs;
    std::vector<double> rates;
    for (std::size_t f = 0; f < q.box().size(); ++f) {
        if (q.coeff(f).cwiseAbs().maxCoeff() == 0.0) continue;
        coeffs.push_back(eps * q.coeff(f).transpose());
        rates.push_back(w.dot(q.box().vector(f)));
    }
    const Eigen::VectorXd n0 = b.weights();

    using state = std::vector<cplx>;
    Eigen::MatrixXcd gen(dim, dim);
    auto rhs = [&](const state& x, state& dxdt, double t) {
        gen.setZero();
        for (std::size_t j = 0; j < coeffs.size(); ++j) gen += coeffs[j] * std::polar(1.0, rates[j] * t);
        Eigen::Map<const Eigen::VectorXcd> xv(x.data(), dim);
        Eigen::Map<Eigen::VectorXcd> dv(dxdt.data(), dim);
        dv = cplx(0.0, -1.0) * (n0.cwiseProduct(xv) + gen * xv);
    };

    Trajectory traj;
    state x(xi0.data(), xi0.data() + dim);
    const double norm0 = xi0.norm();
    const auto steps = static_cast<long long>(std::llround(t_final / dt));
    auto stepper = ode::make_controlled(tol, tol, ode::runge_kutta_fehlberg78<state>());
    traj.times.push_back(0.0);
    traj.states.push_back(xi0);
    try {
        for (long long i = 1; i <= steps; ++i) {
            const double t0 = (i - 1) * dt, t1 = i * dt;
            ode::integrate_adaptive(stepper, rhs, x, t0, t1, dt);
            StateVector v = Eigen::Map<const Eigen::VectorXcd>(x.data(), dim);
            traj.norm_drift = std::max(traj.norm_drift, std::abs(v.norm() - norm0));
            traj.times.push_back(t1);
            traj.states.push_back(std::move(v));
        }
    } catch (const std::exception& e) {
        throw NumericalResolutionError(std::string("integrate_direct: step-size control failed: ") + e.what());
    }
    return traj;
}

ReducedPropagator::ReducedPropagator(Transformation t, const NormalFormMatrix& n_final, Frequency w)
    : t_(std::move(t)), basis_(n_final.basis_ptr()), w_(std::move(w)) {
    const auto eig = diagonalize_normal_form(n_final);
    conj_p_ = eig.unitary().conjugate();
    mu_ = eig.flat_eigenvalues();
    const std::vector<double> zero(static_cast<std::size_t>(w_.n()), 0.0);
    m0_conj_ = t_.evaluate(zero, basis_->size()).conjugate();
}

StateVector ReducedPropagator::operator()(const StateVector& xi0, double t) const {
    // exp(-i conj(N) t) = conj(P) exp(-i D t) P^T
    const Eigen::VectorXcd phases = (mu_ * (-t)).unaryExpr([](double a) { return std::polar(1.0, a); });
    StateVector y = m0_conj_ * xi0;
    y = conj_p_ * phases.cwiseProduct(conj_p_.adjoint() * y);
    std::vector<double> phi(static_cast<std::size_t>(w_.n()));
    for (int i = 0; i < w_.n(); ++i) phi[static_cast<std::size_t>(i)] = w_.omega[static_cast<std::size_t>(i)] * t;
    return t_.evaluate(phi, basis_->size()).transpose() * y;
}

StateVector propagate_reduced(const Transformation& t, const NormalFormMatrix& n_final, const Frequency& w,
                              const StateVector& xi0, double t_value) {
    return ReducedPropagator(t, n_final, w)(xi0, t_value);
}

FloquetSpectrum floquet_spectrum(const NormalFormMatrix& n_final, const Frequency& w, int k_range) {
    const auto eig = diagonalize_normal_form(n_final);
    const Basis& b = n_final.basis();
    FloquetSpectrum f;
    f.mu = eig.flat_eigenvalues();
    f.omega = w;
    f.k_range = k_range;
    const FourierBox box(w.n(), k_range);
    for (std::size_t c = 0; c < b.size(); ++c) {
        for (std::size_t fk = 0; fk < box.size(); ++fk) {
            const auto k = box.vector(fk);
            f.points.push_back({c, k, f.mu[static_cast<Eigen::Index>(c)] + w.dot(k)});
        }
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    std::vector<std::pair<double, double>> dev;
    for (std::size_t c = 0; c < b.size(); ++c) {
        const double wc = b.weights()[static_cast<Eigen::Index>(c)];
        const double e = std::abs(f.mu[static_cast<Eigen::Index>(c)] - wc);
        f.max_deviation = std::max(f.max_deviation, e);
        dev.emplace_back(wc, e);
        if (e > 0.0) {
            const double x = std::log(wc), y = std::log(e);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++cnt;
        }
    }
    if (cnt >= 2 && cnt * sxx - sx * sx > 0.0) f.fitted_exponent = -(cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    for (auto [wc, e] : dev) f.fitted_constant = std::max(f.fitted_constant, e * std::pow(wc, f.fitted_exponent));
    return f;
}

void write_spectrum_csv(std::ostream& os, const FloquetSpectrum& f) {
    os << "mu";
    for (int i = 0; i < f.omega.n(); ++i) os << ",k" << i + 1;
    os << ",value\n";
    char buf[64];
    for (const auto& p : f.points) {
        std::snprintf(buf, sizeof buf, "%.17g", f.mu[static_cast<Eigen::Index>(p.mode)]);
        os << buf;
        for (int v : p.k) os << ',' << v;
        std::snprintf(buf, sizeof buf, ",%.17g\n", p.value);
        os << buf;
    }
}

FloquetCrosscheck floquet_direct_crosscheck(const QPMatrix& q, const Frequency& w, double eps, int k_cut,
                                            const NormalFormMatrix& n_final, int max_dimension) {
    const Basis& b = q.basis();
    require_same_basis(b, n_final.basis());
    if (k_cut < 0) throw ParameterError("floquet_direct_crosscheck: k_cut must be >= 0");
    const FourierBox box(w.n(), k_cut);
    const auto dim = static_cast<Eigen::Index>(b.size());
    const double total = static_cast<double>(box.size()) * static_cast<double>(dim);
    if (total > max_dimension) throw ParameterError("floquet_direct_crosscheck: truncated Floquet matrix too large");
    const auto nk = static_cast<Eigen::Index>(box.size());
    const Eigen::Index big = nk * dim;

    Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(big, big);
    for (Eigen::Index i = 0; i < nk; ++i) {
        const auto ki = box.vector(static_cast<std::size_t>(i));
        for (Eigen::Index j = 0; j < nk; ++j) {
            const auto kj = box.vector(static_cast<std::size_t>(j));
            std::vector<int> diff(ki.size());
            for (std::size_t a = 0; a < ki.size(); ++a) diff[a] = ki[a] - kj[a];
            const auto f = q.box().flat(diff);
            if (f != q.box().size()) K.block(i * dim, j * dim, dim, dim) = eps * q.coeff(f).transpose();
        }
        K.block(i * dim, i * dim, dim, dim).diagonal().array() += b.weights().array().cast<cplx>() + w.dot(ki);
    }

    FloquetCrosscheck r;
    r.dimension = static_cast<int>(big);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> general(K, false);
    r.max_imag = general.eigenvalues().imag().cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (K + K.adjoint()));
    const Eigen::VectorXd& lam = es.eigenvalues();
    const Eigen::MatrixXcd& vec = es.eigenvectors();

    const auto eig = diagonalize_normal_form(n_final);
    const Eigen::VectorXd mu = eig.flat_eigenvalues();
    const auto& cs = b.clusters();
    const auto ncl = static_cast<Eigen::Index>(cs.size());
    auto interior = [&](Eigen::Index kflat, Eigen::Index cl) {
        int kn = 0;
        for (int v : box.vector(static_cast<std::size_t>(kflat))) kn = std::max(kn, std::abs(v));
        return 2 * kn <= k_cut && 2 * cs[static_cast<std::size_t>(cl)].energy <= b.energy_cutoff();
    };

    std::vector<double> predicted_all;
    std::vector<double> predicted_interior;
    for (Eigen::Index i = 0; i < nk; ++i) {
        const double kw = w.dot(box.vector(static_cast<std::size_t>(i)));
        for (Eigen::Index c = 0; c < ncl; ++c) {
            const auto& cl = cs[static_cast<std::size_t>(c)];
            for (int l = 0; l < cl.dimension; ++l) {
                const double v = mu[static_cast<Eigen::Index>(cl.offset) + l] + kw;
                predicted_all.push_back(v);
                if (interior(i, c)) predicted_interior.push_back(v);
            }
        }
    }
    std::sort(predicted_all.begin(), predicted_all.end());
    auto nearest = [](const std::vector<double>& sorted, double x) {
        auto it = std::lower_bound(sorted.begin(), sorted.end(), x);
        double best = std::numeric_limits<double>::infinity();
        if (it != sorted.end()) best = std::min(best, std::abs(*it - x));
        if (it != sorted.begin()) best = std::min(best, std::abs(*(it - 1) - x));
        return best;
    };

    std::map<std::pair<Eigen::Index, Eigen::Index>, std::vector<double>> by_group;
    for (Eigen::Index e = 0; e < big; ++e) {
        double best = -1.0;
        Eigen::Index bk = 0, bc = 0;
        for (Eigen::Index i = 0; i < nk; ++i) {
            for (Eigen::Index c = 0; c < ncl; ++c) {
                const auto& cl = cs[static_cast<std::size_t>(c)];
                const double m = vec.col(e).segment(i * dim + static_cast<Eigen::Index>(cl.offset), cl.dimension).squaredNorm();
                if (m > best) {
                    best = m;
                    bk = i;
                    bc = c;
                }
            }
        }
        if (!interior(bk, bc)) continue;
        ++r.interior_count;
        r.min_group_mass = std::min(r.min_group_mass, best / vec.col(e).squaredNorm());
        r.hausdorff = std::max(r.hausdorff, nearest(predicted_all, lam[e]));
        by_group[{bk, bc}].push_back(lam[e]);
    }
    std::vector<double> eig_sorted(lam.data(), lam.data() + lam.size());
    std::sort(eig_sorted.begin(), eig_sorted.end());
    for (double p : predicted_interior) r.hausdorff = std::max(r.hausdorff, nearest(eig_sorted, p));

    for (auto& [key, vals] : by_group) {
        const auto& cl = cs[static_cast<std::size_t>(key.second)];
        const double kw = w.dot(box.vector(static_cast<std::size_t>(key.first)));
        std::vector<double> pred;
        for (int l = 0; l < cl.dimension; ++l) pred.push_back(mu[static_cast<Eigen::Index>(cl.offset) + l] + kw);
        std::sort(vals.begin(), vals.end());
        if (vals.size() != pred.size()) {
            r.assignment_distance = std::numeric_limits<double>::infinity();
            continue;
        }
        for (std::size_t i = 0; i < vals.size(); ++i)
            r.assignment_distance = std::max(r.assignment_distance, std::abs(vals[i] - pred[i]));
    }
    return r;
}

NormBand norm_band(const Basis& b, const std::vector<StateVector>& states, double s) {
    NormBand band;
    band.s = s;
    if (states.empty()) return band;
    const double n0 = sobolev_norm(b, states.front(), s);
    for (const auto& x : states) {
        const double r = sobolev_norm(b, x, s) / n0;
        band.upper = std::max(band.upper, r - 1.0);
        band.lower = std::max(band.lower, 1.0 - r);
    }
    return band;
}

void write_trajectory_csv(std::ostream& os, const Basis& b, const Trajectory& direct,
                          const std::vector<StateVector>& reduced, double s) {
    os << "t,norm_1,norm_s,l2_error_vs_reduced\n";
    char buf[160];
    for (std::size_t i = 0; i < direct.states.size(); ++i) {
        const double err = i < reduced.size() ? (direct.states[i] - reduced[i]).norm() : std::nan("");
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", direct.times[i],
                      sobolev_norm(b, direct.states[i], 1.0), sobolev_norm(b, direct.states[i], s), err);
        os << buf;
    }
}

}  // namespace hkam
