#include "oracles.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <fftw3.h>
#include <unsupported/Eigen/MatrixFunctions>

namespace oracle {

using hkam::cplx;

double hermite_function(int n, double x) {
    double log_norm = 0.5 * (n * std::log(2.0) + std::lgamma(n + 1.0) + 0.5 * std::log(std::numbers::pi));
    return std::hermite(static_cast<unsigned>(n), x) * std::exp(-0.5 * x * x - log_norm);
}

int odd_tuple_count(int d, int j) {
    if (d == 0) return j == 0 ? 1 : 0;
    int c = 0;
    for (int i = 1; i <= j; i += 2) c += odd_tuple_count(d - 1, j - i);
    return c;
}

Eigen::MatrixXcd synthesize(const hkam::QPMatrix& q, const std::vector<double>& phi) {
    const auto dim = static_cast<Eigen::Index>(q.basis().size());
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::size_t f = 0; f < q.box().size(); ++f) {
        const auto k = q.box().vector(f);
        double arg = 0.0;
        for (std::size_t i = 0; i < k.size(); ++i) arg += k[i] * phi[i];
        out += std::polar(1.0, arg) * q.coeff(f);
    }
    return out;
}

Eigen::MatrixXcd directional(const hkam::QPMatrix& q, const hkam::Frequency& w, const std::vector<double>& phi) {
    const auto dim = static_cast<Eigen::Index>(q.basis().size());
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::size_t f = 0; f < q.box().size(); ++f) {
        const auto k = q.box().vector(f);
        double arg = 0.0, kw = 0.0;
        for (std::size_t i = 0; i < k.size(); ++i) {
            arg += k[i] * phi[i];
            kw += k[i] * w.omega[i];
        }
        out += cplx(0.0, kw) * std::polar(1.0, arg) * q.coeff(f);
    }
    return out;
}

std::vector<std::vector<double>> grid_phases(int n, int G) {
    std::vector<std::vector<double>> out;
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(G);
    for (std::size_t f = 0; f < total; ++f) {
        std::vector<double> phi(static_cast<std::size_t>(n));
        std::size_t r = f;
        for (int i = n - 1; i >= 0; --i) {
            phi[static_cast<std::size_t>(i)] = 2.0 * std::numbers::pi * static_cast<double>(r % G) / G;
            r /= static_cast<std::size_t>(G);
        }
        out.push_back(std::move(phi));
    }
    return out;
}

double homological_residual(const hkam::NormalFormMatrix& n, const hkam::QPMatrix& q, const hkam::Frequency& w,
                            const hkam::HomologicalSolution& sol, const hkam::NormParams& p, int G) {
    const auto& bp = q.basis_ptr();
    const Eigen::MatrixXcd& N = n.dense();
    const Eigen::MatrixXcd& Nt = sol.N_tilde.dense();
    double worst = 0.0;
    for (const auto& phi : grid_phases(q.n(), G)) {
        const Eigen::MatrixXcd S = synthesize(sol.S, phi);
        const Eigen::MatrixXcd lhs = directional(sol.S, w, phi) - cplx(0.0, 1.0) * (N * S - S * N);
        const Eigen::MatrixXcd rhs = Nt - synthesize(q, phi) + synthesize(sol.R, phi);
        worst = std::max(worst, hkam::msb_norm(hkam::BlockMatrix(bp, lhs - rhs), p));
    }
    double scale = 0.0;
    for (std::size_t f = 0; f < q.box().size(); ++f) scale += hkam::msb_norm(hkam::BlockMatrix(bp, q.coeff(f)), p);
    return scale > 0.0 ? worst / scale : worst;
}

Eigen::MatrixXcd conjugated_hamiltonian(const hkam::NormalFormMatrix& n, const hkam::QPMatrix& q,
                                        const hkam::QPMatrix& s, const hkam::Frequency& w,
                                        const std::vector<double>& phi) {
    const auto dim = static_cast<Eigen::Index>(q.basis().size());
    const cplx I(0.0, 1.0);
    const Eigen::MatrixXcd S = synthesize(s, phi);
    const Eigen::MatrixXcd H = n.dense() + synthesize(q, phi);
    const Eigen::MatrixXcd X = -I * S;
    const Eigen::MatrixXcd E = -I * directional(s, w, phi);
    Eigen::MatrixXcd big = Eigen::MatrixXcd::Zero(2 * dim, 2 * dim);
    big.topLeftCorner(dim, dim) = X;
    big.topRightCorner(dim, dim) = E;
    big.bottomRightCorner(dim, dim) = X;
    const Eigen::MatrixXcd ebig = big.exp();
    const Eigen::MatrixXcd u_inv = ebig.topLeftCorner(dim, dim);  // e^{-iS}
    const Eigen::MatrixXcd du_inv = ebig.topRightCorner(dim, dim);
    const Eigen::MatrixXcd u = (I * S).exp();
    return u * H * u_inv + I * u * du_inv;
}

ConjugationCheck conjugation_identity(const hkam::KamState& before, const hkam::KamState& after,
                                      const hkam::Frequency& w, const hkam::NormParams& p, int G) {
    const auto& bp = before.Q.basis_ptr();
    const auto& s = after.S_list.back();
    double worst = 0.0, scale = 0.0;
    for (const auto& phi : grid_phases(before.Q.n(), G)) {
        const Eigen::MatrixXcd h = before.N.dense() + synthesize(before.Q, phi);
        const Eigen::MatrixXcd hp = conjugated_hamiltonian(before.N, before.Q, s, w, phi);
        const Eigen::MatrixXcd target = after.N.dense() + synthesize(after.Q, phi);
        worst = std::max(worst, hkam::msb_norm(hkam::BlockMatrix(bp, hp - target), p));
        scale = std::max(scale, hkam::msb_norm(hkam::BlockMatrix(bp, h), p));
    }
    return {scale > 0.0 ? worst / scale : worst, worst};
}

namespace {

double envelope(const hkam::Basis& b, const hkam::NormParams& p, Eigen::Index i, Eigen::Index j, bool plus) {
    const double wa = b.weights()[i], wb = b.weights()[j];
    const double lo = std::sqrt(std::min(wa, wb));
    const double br = lo / (lo + std::abs(wa - wb));
    double e = std::pow(wa * wb, -p.beta) * std::pow(br, 0.5 * p.s);
    if (plus) e /= 1.0 + std::abs(wa - wb);
    return e;
}

}  // namespace

hkam::QPMatrix random_hermitian_qp(hkam::BasisPtr b, int n, int K, double scale, std::uint64_t seed) {
    hkam::QPMatrix q(b, n, K);
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const hkam::NormParams shape{2.0, 0.25};
    const auto dim = static_cast<Eigen::Index>(b->size());
    const auto& box = q.box();
    for (std::size_t f = 0; f < box.size(); ++f) {
        const std::size_t g = box.negated(f);
        if (g < f) continue;
        Eigen::MatrixXcd c(dim, dim);
        for (Eigen::Index i = 0; i < dim; ++i)
            for (Eigen::Index j = 0; j < dim; ++j)
                c(i, j) = scale * envelope(*b, shape, i, j, false) * cplx(u(gen), u(gen));
        if (f == g) {
            q.coeff(f) = 0.5 * (c + c.adjoint());
        } else {
            q.coeff(f) = c;
            q.coeff(g) = c.adjoint();
        }
    }
    return q;
}

Eigen::MatrixXcd random_envelope_matrix(const hkam::Basis& b, const hkam::NormParams& p, bool plus_shape,
                                        std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * std::numbers::pi);
    const auto dim = static_cast<Eigen::Index>(b.size());
    Eigen::MatrixXcd a(dim, dim);
    // A random sparsity level spreads the instances between diagonal-heavy and dense.
    const double keep = 0.2 + 0.8 * u(gen);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j)
            a(i, j) = u(gen) < keep ? envelope(b, p, i, j, plus_shape) * std::polar(u(gen), ph(gen)) : cplx(0.0);
    return a;
}

hkam::NormalFormMatrix random_normal_form(hkam::BasisPtr b, double scale, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    hkam::BlockMatrix m = hkam::BlockMatrix::harmonic(b);
    Eigen::MatrixXcd dense = m.dense();
    for (const auto& c : b->clusters()) {
        Eigen::MatrixXcd blk(c.dimension, c.dimension);
        for (int i = 0; i < c.dimension; ++i)
            for (int j = 0; j < c.dimension; ++j) blk(i, j) = cplx(u(gen), u(gen));
        blk = 0.5 * scale * (blk + blk.adjoint()).eval() / std::max(1.0, static_cast<double>(c.energy));
        dense.block(static_cast<Eigen::Index>(c.offset), static_cast<Eigen::Index>(c.offset), c.dimension,
                    c.dimension) += blk;
    }
    return hkam::NormalFormMatrix(hkam::BlockMatrix(b, dense, true));
}

std::vector<double> weighted_convolution_sums(double beta, int k_max, int j_max) {
    // c(j) = sum_k a_k b_{j-k} with a_k = k^{-beta}, b_m = 1/(1+|m|) for |m| <= k_max.
    std::size_t len = 1;
    const std::size_t need = static_cast<std::size_t>(k_max) + 1 + 2 * static_cast<std::size_t>(k_max) + 1;
    while (len < need) len <<= 1;
    const std::size_t nc = len / 2 + 1;
    double* a = fftw_alloc_real(len);
    double* bb = fftw_alloc_real(len);
    fftw_complex* fa = fftw_alloc_complex(nc);
    fftw_complex* fb = fftw_alloc_complex(nc);
    for (std::size_t i = 0; i < len; ++i) a[i] = bb[i] = 0.0;
    for (int k = 1; k <= k_max; ++k) a[k] = std::pow(static_cast<double>(k), -beta);
    // b is stored with offset k_max so index m + k_max holds b_m.
    for (int m = -k_max; m <= k_max; ++m) bb[m + k_max] = 1.0 / (1.0 + std::abs(m));
    fftw_plan pa = fftw_plan_dft_r2c_1d(static_cast<int>(len), a, fa, FFTW_ESTIMATE);
    fftw_plan pb = fftw_plan_dft_r2c_1d(static_cast<int>(len), bb, fb, FFTW_ESTIMATE);
    fftw_execute(pa);
    fftw_execute(pb);
    for (std::size_t i = 0; i < nc; ++i) {
        const double re = fa[i][0] * fb[i][0] - fa[i][1] * fb[i][1];
        const double im = fa[i][0] * fb[i][1] + fa[i][1] * fb[i][0];
        fa[i][0] = re;
        fa[i][1] = im;
    }
    fftw_plan pc = fftw_plan_dft_c2r_1d(static_cast<int>(len), fa, a, FFTW_ESTIMATE);
    fftw_execute(pc);
    std::vector<double> out(static_cast<std::size_t>(j_max) + 1);
    for (int j = 0; j <= j_max; ++j) out[static_cast<std::size_t>(j)] = a[j + k_max] / static_cast<double>(len);
    fftw_destroy_plan(pa);
    fftw_destroy_plan(pb);
    fftw_destroy_plan(pc);
    fftw_free(a);
    fftw_free(bb);
    fftw_free(fa);
    fftw_free(fb);
    return out;
}

double weighted_convolution_direct(double beta, int k_max, int j) {
    long double s = 0.0L;
    for (int k = 1; k <= k_max; ++k) s += std::pow(static_cast<long double>(k), -beta) / (1.0L + std::abs(k - j));
    return static_cast<double>(s);
}

long double bracket(long long j, long long k) {
    const long double m = std::sqrt(static_cast<long double>(std::min(j, k)));
    return m / (m + std::llabs(j - k));
}

}  // namespace oracle
