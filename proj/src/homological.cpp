#include "hkam/homological.hpp"
#include "hkam/errors.hpp"
#include "hkam/melnikov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace hkam {

Eigen::MatrixXcd EigenBlocks::unitary() const {
    const auto dim = static_cast<Eigen::Index>(basis->size());
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::size_t c = 0; c < P.size(); ++c) {
        const auto off = static_cast<Eigen::Index>(basis->clusters()[c].offset);
        u.block(off, off, P[c].rows(), P[c].cols()) = P[c];
    }
    return u;
}

Eigen::VectorXd EigenBlocks::flat_eigenvalues() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(basis->size()));
    for (std::size_t c = 0; c < eigenvalues.size(); ++c)
        out.segment(static_cast<Eigen::Index>(basis->clusters()[c].offset), eigenvalues[c].size()) = eigenvalues[c];
    return out;
}

EigenBlocks diagonalize_normal_form(const NormalFormMatrix& n) {
    EigenBlocks e;
    e.basis = n.basis_ptr();
    const auto& cs = n.basis().clusters();
    for (std::size_t c = 0; c < cs.size(); ++c) {
        const Eigen::MatrixXcd blk = n.cluster_block(c);
        const Eigen::Index m = blk.rows();
        if ((blk - blk.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
            throw StructuralError("diagonalize_normal_form: block [" + std::to_string(cs[c].energy) +
                                  "] is not hermitian");
        Eigen::MatrixXcd offdiag = blk;
        offdiag.diagonal().setZero();
        if (offdiag.cwiseAbs().maxCoeff() == 0.0) {
            std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(),
                             [&](Eigen::Index i, Eigen::Index j) { return blk(i, i).real() < blk(j, j).real(); });
            Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(m, m);
            Eigen::VectorXd ev(m);
            for (Eigen::Index j = 0; j < m; ++j) {
                p(order[static_cast<std::size_t>(j)], j) = 1.0;
                ev[j] = blk(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(j)]).real();
            }
            e.P.push_back(std::move(p));
            e.eigenvalues.push_back(std::move(ev));
            continue;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (blk + blk.adjoint()));
        if (es.info() != Eigen::Success) throw StructuralError("diagonalize_normal_form: eigensolver failed");
        Eigen::MatrixXcd p = es.eigenvectors();
        for (Eigen::Index j = 0; j < m; ++j) {
            Eigen::Index imax = 0;
            p.col(j).cwiseAbs().maxCoeff(&imax);
            const cplx z = p(imax, j);
            p.col(j) *= std::conj(z) / std::abs(z);
            p(imax, j) = std::abs(z);
        }
        e.P.push_back(std::move(p));
        e.eigenvalues.push_back(es.eigenvalues());
    }
    return e;
}

QPMatrix directional_derivative(const QPMatrix& s, const Frequency& w) {
    QPMatrix out = s.resized(s.K());
    for (std::size_t f = 0; f < s.box().size(); ++f) {
        const double kw = w.dot(s.box().vector(f));
        out.coeff(f) = s.coeff(f) * cplx(0.0, kw);
    }
    return out;
}

HomologicalSolution solve_homological(const NormalFormMatrix& n, const QPMatrix& q, const Frequency& w, double kappa,
                                      int K, const NormParams& p, const EigenBlocks* eig) {
    require_same_basis(n.basis(), q.basis());
    if (w.n() != q.n()) throw ParameterError("solve_homological: frequency dimension does not match Q");
    if (K < 0) throw ParameterError("solve_homological: K must be >= 0");
    const EigenBlocks local = eig ? EigenBlocks{} : diagonalize_normal_form(n);
    const EigenBlocks& e = eig ? *eig : local;
    const auto& basis = q.basis_ptr();
    const auto& cs = basis->clusters();

    const int ks = std::min(K, q.K());
    QPMatrix S(basis, q.n(), ks);
    QPMatrix R(basis, q.n(), q.K());
    for (std::size_t f = 0; f < q.box().size(); ++f) {
        const auto k = q.box().vector(f);
        if (S.box().flat(k) == S.box().size()) R.coeff(f) = q.coeff(f);
    }

    const std::size_t qzero = q.box().zero();
    NormalFormMatrix nt = project_block_diagonal(BlockMatrix(basis, q.coeff(qzero), false));

    double divisor_min = std::numeric_limits<double>::infinity();
    const std::size_t szero = S.box().zero();
    for (std::size_t f = 0; f < S.box().size(); ++f) {
        const auto k = S.box().vector(f);
        const double kw = w.dot(k);
        const Eigen::MatrixXcd& qk = q.coeff(q.box().flat(k));
        Eigen::MatrixXcd& sk = S.coeff(f);
        for (std::size_t a = 0; a < cs.size(); ++a) {
            for (std::size_t b = 0; b < cs.size(); ++b) {
                if (f == szero && a == b) continue;
                const double bound = kappa * (1.0 + std::abs(cs[a].energy - cs[b].energy));
                const auto& alpha = e.eigenvalues[a];
                const auto& beta = e.eigenvalues[b];
                Eigen::MatrixXcd div(alpha.size(), beta.size());
                for (Eigen::Index j = 0; j < alpha.size(); ++j) {
                    for (Eigen::Index l = 0; l < beta.size(); ++l) {
                        const double d = kw - alpha[j] + beta[l];
                        if (std::abs(d) < bound || d == 0.0)
                            throw SmallDivisorError(k, cs[a].energy, cs[b].energy, std::abs(d), bound);
                        divisor_min = std::min(divisor_min, std::abs(d));
                        div(j, l) = d;
                    }
                }
                const auto ra = static_cast<Eigen::Index>(cs[a].offset);
                const auto rb = static_cast<Eigen::Index>(cs[b].offset);
                const auto qab = qk.block(ra, rb, cs[a].dimension, cs[b].dimension);
                if (qab.cwiseAbs().maxCoeff() == 0.0) continue;
                const Eigen::MatrixXcd qp = e.P[a].adjoint() * qab * e.P[b];
                const Eigen::MatrixXcd sp = cplx(0.0, 1.0) * qp.cwiseQuotient(div);
                sk.block(ra, rb, cs[a].dimension, cs[b].dimension) = e.P[a] * sp * e.P[b].adjoint();
            }
        }
    }

    // Exact arithmetic gives S(-k) = S(k)^dagger whenever Q has that symmetry; the
    // eigenbasis round trip only loses it at rounding level, so restore it.
    double q_max = 0.0;
    for (const auto& c : q.coeffs()) q_max = std::max(q_max, c.size() ? c.cwiseAbs().maxCoeff() : 0.0);
    if (q_max > 0.0 && q.hermitian_symmetry_defect() <= 1e-14 * q_max) {
        for (std::size_t f = 0; f < S.box().size(); ++f) {
            const std::size_t g = S.box().negated(f);
            if (g < f) continue;
            const Eigen::MatrixXcd avg = 0.5 * (S.coeff(f) + S.coeff(g).adjoint());
            S.coeff(f) = avg;
            S.coeff(g) = avg.adjoint();
        }
    }

    HomologicalSolution sol{std::move(S), std::move(nt), std::move(R), divisor_min, 0.0};
    const double scale = msb_scale(q, p);
    const double res = homological_residual(n, q, w, sol, p);
    sol.residual = scale > 0.0 ? res / scale : res;
    return sol;
}

double homological_residual(const NormalFormMatrix& n, const QPMatrix& q, const Frequency& w,
                            const HomologicalSolution& sol, const NormParams& p) {
    const int K = std::max({q.K(), sol.S.K(), sol.R.K()});
    const int G = 2 * K + 1 + 2 * K;
    const TorusGrid grid(q.n(), G);
    const auto sg = fourier_to_grid(FourierBox(q.n(), K), sol.S.resized(K).coeffs(), grid);
    const auto dsg = fourier_to_grid(FourierBox(q.n(), K), directional_derivative(sol.S, w).resized(K).coeffs(), grid);
    const auto qg = fourier_to_grid(FourierBox(q.n(), K), q.resized(K).coeffs(), grid);
    const auto rg = fourier_to_grid(FourierBox(q.n(), K), sol.R.resized(K).coeffs(), grid);
    const Eigen::MatrixXcd& nm = n.dense();
    const Eigen::MatrixXcd& nt = sol.N_tilde.dense();
    double worst = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        Eigen::MatrixXcd e = dsg[g] - cplx(0.0, 1.0) * (nm * sg[g] - sg[g] * nm) - nt + qg[g] - rg[g];
        worst = std::max(worst, msb_norm(BlockMatrix(q.basis_ptr(), std::move(e), false), p));
    }
    return worst;
}

DelortReport delort_bound_check(const NormalFormMatrix& n, const Frequency& w, double kappa, int K, double delta,
                                int trials, std::uint64_t seed) {
    if (!(kappa > 0.0) || K < 0 || !(delta > 0.0) || trials < 1)
        throw ParameterError("delort_bound_check: need kappa > 0, K >= 0, delta > 0, trials >= 1");
    const auto e = diagonalize_normal_form(n);
    const auto& cs = n.basis().clusters();
    const int d = n.basis().dimension_d();

    DelortReport r;
    for (std::size_t a = 0; a < cs.size(); ++a) {
        for (double mu : e.eigenvalues[a]) {
            const double dev = std::abs(mu - cs[a].energy);
            if (dev > 0.25)
                throw PreconditionError("delort_bound_check: eigenvalue farther than 1/4 from its cluster energy");
            r.C_mu = std::max(r.C_mu, dev * std::pow(cs[a].energy, delta));
        }
    }
    const auto div = check_divisors(e, w, kappa, K);
    if (!div.passed) throw PreconditionError("delort_bound_check: divisor hypothesis fails");

    double wnorm = 0.0;
    for (double v : w.omega) wnorm += v * v;
    wnorm = std::sqrt(wnorm);
    r.K1 = std::max(4.0, 4.0 * K * wnorm);
    r.K2 = r.K1 * std::pow(2.0 * r.C_mu / kappa, 1.0 / delta);
    r.cases[0].prefactor = 8.0;
    r.cases[1].prefactor = 2.0 / kappa;
    r.cases[2].prefactor = std::pow(r.K2, 0.5 * d) / kappa;
    const double combined_scale = std::pow(kappa, 1.0 + d / (2.0 * delta)) / std::pow(std::max(K, 1), 0.5 * d);

    std::mt19937_64 gen(seed);
    std::normal_distribution<double> g01(0.0, 1.0);
    const FourierBox box(w.n(), K);
    const std::size_t zero = box.zero();
    for (std::size_t f = 0; f < box.size(); ++f) {
        const double kw = w.dot(box.vector(f));
        for (std::size_t a = 0; a < cs.size(); ++a) {
            for (std::size_t b = 0; b < cs.size(); ++b) {
                if (f == zero && a == b) continue;
                const double wa = cs[a].energy, wb = cs[b].energy;
                const double hi = std::max(wa, wb), lo = std::min(wa, wb);
                const int which = hi > r.K1 * lo ? 0 : (hi > r.K2 ? 1 : 2);
                auto& cs_case = r.cases[which];
                ++cs_case.pairs;
                const auto& alpha = e.eigenvalues[a];
                const auto& beta = e.eigenvalues[b];
                Eigen::MatrixXcd divs(alpha.size(), beta.size());
                for (Eigen::Index j = 0; j < alpha.size(); ++j)
                    for (Eigen::Index l = 0; l < beta.size(); ++l) divs(j, l) = kw - alpha[j] + beta[l];
                const double weight = 1.0 + std::abs(wa - wb);
                const Eigen::MatrixXcd zero_b = Eigen::MatrixXcd::Zero(alpha.size(), beta.size()).cwiseQuotient(divs);
                if (zero_b.cwiseAbs().maxCoeff() != 0.0) r.zero_input_gives_zero = false;
                for (int t = 0; t < trials; ++t) {
                    Eigen::MatrixXcd A(alpha.size(), beta.size());
                    for (Eigen::Index j = 0; j < A.rows(); ++j)
                        for (Eigen::Index l = 0; l < A.cols(); ++l) A(j, l) = cplx(g01(gen), g01(gen));
                    A /= block_operator_norm(A);
                    const double nb = block_operator_norm(A.cwiseQuotient(divs));
                    const double ratio = nb * weight;
                    cs_case.max_ratio = std::max(cs_case.max_ratio, ratio);
                    r.combined_ratio = std::max(r.combined_ratio, ratio * combined_scale);
                }
            }
        }
    }
    for (auto& c : r.cases) c.max_normalized = c.prefactor > 0.0 ? c.max_ratio / c.prefactor : 0.0;
    return r;
}

}  // namespace hkam
