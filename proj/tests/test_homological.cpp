#include <doctest.h>

#include <cmath>

#include "hkam/errors.hpp"
#include "hkam/homological.hpp"
#include "hkam/melnikov.hpp"
#include "oracles.hpp"
#include "suites.hpp"

using namespace hkam;

namespace {

const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;
const NormParams kNorm{2.0, 0.25};

BasisPtr basis(int d, int e_max) { return std::make_shared<const Basis>(d, e_max, 0); }

}  // namespace

TEST_CASE("diagonalizing the harmonic normal form") {
    const auto b = basis(2, 8);
    const auto e = diagonalize_normal_form(NormalFormMatrix::harmonic(b));
    for (std::size_t c = 0; c < b->clusters().size(); ++c) {
        const int dim = b->clusters()[c].dimension;
        CHECK((e.P[c] - Eigen::MatrixXcd::Identity(dim, dim)).cwiseAbs().maxCoeff() == 0.0);
        for (Eigen::Index j = 0; j < dim; ++j) CHECK(e.eigenvalues[c][j] == b->clusters()[c].energy);
    }

    const auto b1 = basis(1, 7);
    Eigen::MatrixXcd d = BlockMatrix::harmonic(b1).dense();
    d(2, 2) = 4.75;
    const auto e1 = diagonalize_normal_form(NormalFormMatrix(BlockMatrix(b1, d, true)));
    CHECK(e1.P[2](0, 0) == cplx(1.0));
    CHECK(e1.eigenvalues[2][0] == 4.75);
}

TEST_CASE("two by two block rotates by a quarter turn") {
    const auto b = basis(2, 4);  // clusters 2 (dim 1) and 4 (dim 2)
    Eigen::MatrixXcd d = BlockMatrix::harmonic(b).dense();
    d.block(1, 1, 2, 2) << 2.0, 0.1, 0.1, 2.0;
    const NormalFormMatrix n(BlockMatrix(b, d, true));
    const auto e = diagonalize_normal_form(n);
    CHECK(e.eigenvalues[1][0] == doctest::Approx(1.9).epsilon(1e-14));
    CHECK(e.eigenvalues[1][1] == doctest::Approx(2.1).epsilon(1e-14));
    const Eigen::MatrixXcd& p = e.P[1];
    CHECK((p.cwiseAbs() - Eigen::MatrixXd::Constant(2, 2, 1.0 / std::sqrt(2.0))).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((p.adjoint() * p - Eigen::MatrixXcd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
    const Eigen::MatrixXcd blk = d.block(1, 1, 2, 2);
    const Eigen::MatrixXcd rec = p * e.eigenvalues[1].cast<cplx>().asDiagonal() * p.adjoint();
    CHECK((rec - blk).cwiseAbs().maxCoeff() < 1e-12);
    // The largest-magnitude entry of every eigenvector is real and positive.
    for (int j = 0; j < 2; ++j) {
        Eigen::Index row = 0;
        p.col(j).cwiseAbs().maxCoeff(&row);
        CHECK(p(row, j).real() > 0.0);
        CHECK(p(row, j).imag() == 0.0);
    }
}

TEST_CASE("diagonalization is deterministic and orthonormal on random blocks") {
    const auto b = basis(2, 12);
    const auto n = oracle::random_normal_form(b, 0.3, 5);
    const auto e1 = diagonalize_normal_form(n);
    const auto e2 = diagonalize_normal_form(n);
    const Eigen::MatrixXcd u = e1.unitary();
    const auto dim = static_cast<Eigen::Index>(b->size());
    CHECK((u.adjoint() * u - Eigen::MatrixXcd::Identity(dim, dim)).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::MatrixXcd rec = u * e1.flat_eigenvalues().cast<cplx>().asDiagonal() * u.adjoint();
    CHECK((rec - n.dense()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((e1.unitary() - e2.unitary()).cwiseAbs().maxCoeff() == 0.0);
    for (const auto& ev : e1.eigenvalues)
        for (Eigen::Index j = 1; j < ev.size(); ++j) CHECK(ev[j - 1] <= ev[j]);
}

TEST_CASE("non-hermitian blocks are refused") {
    const auto b = basis(2, 4);
    Eigen::MatrixXcd d = BlockMatrix::harmonic(b).dense();
    d(1, 2) = 1e-8;
    const NormalFormMatrix loose(BlockMatrix(b, d), 1e-6);
    CHECK_THROWS_AS(diagonalize_normal_form(loose), StructuralError);
}

TEST_CASE("scalar solution entry") {
    const auto b = basis(1, 3);
    QPMatrix q(b, 1, 1);
    q.coeff(q.box().flat({1}))(0, 1) = 1.0;
    q.coeff(q.box().flat({-1}))(1, 0) = 1.0;
    const auto sol = solve_homological(NormalFormMatrix::harmonic(b), q, Frequency{{0.5}}, 1e-3, 1, kNorm);
    const cplx s = sol.S.coeff(sol.S.box().flat({1}))(0, 1);
    CHECK(std::abs(s - cplx(0.0, 0.4)) < 1e-15);
    CHECK(sol.residual < 1e-14);
}

TEST_CASE("same-cluster average goes into the normal form") {
    const auto b = basis(1, 3);
    QPMatrix q(b, 1, 0);
    q.coeff(0)(0, 0) = 0.2;
    const auto sol = solve_homological(NormalFormMatrix::harmonic(b), q, Frequency{{kGolden}}, 1e-3, 0, kNorm);
    CHECK(sol.N_tilde.dense()(0, 0) == cplx(0.2));
    CHECK(sol.S.coeff(0)(0, 0) == cplx(0.0));
}

TEST_CASE("constant perturbation against the harmonic normal form") {
    const auto b = basis(1, 21);
    QPMatrix q = oracle::random_hermitian_qp(b, 1, 0, 1.0, 8);
    const auto n0 = NormalFormMatrix::harmonic(b);
    const auto sol = solve_homological(n0, q, Frequency{{kGolden}}, 1e-3, 0, kNorm);
    const auto& qq = q.coeff(0);
    const auto& ss = sol.S.coeff(0);
    for (Eigen::Index a = 0; a < qq.rows(); ++a) {
        for (Eigen::Index c = 0; c < qq.cols(); ++c) {
            if (a == c) continue;
            const double wa = b->weights()[a], wc = b->weights()[c];
            CHECK(std::abs(ss(a, c) - cplx(0.0, 1.0) * qq(a, c) / (wc - wa)) < 1e-15);
        }
    }
    CHECK(oracle::homological_residual(n0, q, Frequency{{kGolden}}, sol, kNorm, 5) < 1e-12);
}

TEST_CASE("small divisors are refused with the offending pair named") {
    const auto b = basis(1, 9);
    QPMatrix q = oracle::random_hermitian_qp(b, 1, 4, 1.0, 2);
    try {
        solve_homological(NormalFormMatrix::harmonic(b), q, Frequency{{0.5}}, 1e-3, 4, kNorm);
        FAIL("expected a small divisor error");
    } catch (const SmallDivisorError& e) {
        CHECK(std::abs(e.k()[0]) == 4);
        CHECK(std::abs(e.wa() - e.wb()) == 2);
        CHECK(e.value() == 0.0);
    }
}

TEST_CASE("support split, symmetry and contraction of the average") {
    const auto b = basis(2, 10);
    const auto n = oracle::random_normal_form(b, 0.2, 3);
    const QPMatrix q = oracle::random_hermitian_qp(b, 2, 3, 1.0, 4);
    const Frequency w{{0.7123, 2.3187}};
    const double kappa = 0.5 * check_divisors(n, w, 0.0, 2).min_ratio;
    const auto sol = solve_homological(n, q, w, kappa, 2, kNorm);
    CHECK(sol.S.K() == 2);
    for (std::size_t f = 0; f < q.box().size(); ++f) {
        const auto k = q.box().vector(f);
        const bool inside = std::abs(k[0]) <= 2 && std::abs(k[1]) <= 2;
        if (inside) CHECK(sol.R.coeff(f).cwiseAbs().maxCoeff() == 0.0);
        else CHECK((sol.R.coeff(f) - q.coeff(f)).cwiseAbs().maxCoeff() == 0.0);
    }
    double s_max = 0.0;
    for (const auto& c : sol.S.coeffs()) s_max = std::max(s_max, c.cwiseAbs().maxCoeff());
    CHECK(sol.S.hermitian_symmetry_defect() <= 1e-12 * s_max);
    CHECK(msb_norm(sol.N_tilde.matrix(), kNorm) <= msb_norm(q.coefficient({0, 0}), kNorm) * (1.0 + 1e-14));
    CHECK(sol.residual < 1e-9);
}

TEST_CASE("residual identity on random admissible instances") {
    for (auto [d, e_max] : {std::pair{1, 21}, std::pair{2, 12}}) {
        const auto r = suites::homological_suite(d, e_max, 10, 77);
        INFO("d = " << d);
        CHECK(r.oracle_residual <= 1e-9);
        CHECK(r.library_residual <= 1e-9);
        CHECK(r.symmetry_defect <= 1e-12);
    }
}

TEST_CASE("generator size follows the divisor estimate with a stable constant") {
    const auto b = basis(1, 15);
    const auto n0 = NormalFormMatrix::harmonic(b);
    const Frequency w{{kGolden}};
    const int K = 3, d = 1;
    const double kappa = 0.5 * check_divisors(n0, w, 0.0, K).min_ratio;
    auto fit = [&](std::uint64_t seed) {
        double c = 0.0;
        for (int t = 0; t < 50; ++t) {
            const QPMatrix q = oracle::random_hermitian_qp(b, 1, K, 1.0, seed + t);
            const auto sol = solve_homological(n0, q, w, kappa, K, kNorm);
            double s_plus = 0.0;
            for (std::size_t f = 0; f < sol.S.box().size(); ++f)
                s_plus += msb_plus_norm(BlockMatrix(b, sol.S.coeff(f)), kNorm);
            const double bound = std::pow(K, d + 1) * std::pow(kappa, -(d / kNorm.beta + 2.0)) * msb_scale(q, kNorm);
            c = std::max(c, s_plus / bound);
        }
        return c;
    };
    const double c1 = fit(100), c2 = fit(900);
    CHECK(c1 > 0.0);
    CHECK(c2 == doctest::Approx(c1).epsilon(0.5));
}

TEST_CASE("divided-difference bound by case") {
    const auto b = basis(1, 21);
    const Frequency w{{kGolden}};

    const auto flat = delort_bound_check(NormalFormMatrix::harmonic(b), w, 0.1, 2, 1.0, 5, 1);
    CHECK(flat.zero_input_gives_zero);
    for (const auto& c : flat.cases) CHECK(c.max_normalized <= 1.0);

    // mu_a = w_a + 0.01 / w_a: C_mu = 0.01 at delta = 1, so K2 = 2 K1 (C_mu / kappa) = 2 with kappa = 0.04.
    Eigen::MatrixXcd d = BlockMatrix::harmonic(b).dense();
    for (Eigen::Index a = 0; a < d.rows(); ++a) d(a, a) += 0.01 / b->weights()[a];
    const NormalFormMatrix n(BlockMatrix(b, d, true));
    const auto r = delort_bound_check(n, w, 0.04, 1, 1.0, 5, 2);
    CHECK(r.C_mu == doctest::Approx(0.01));
    CHECK(r.K1 == doctest::Approx(4.0));
    CHECK(r.K2 == doctest::Approx(2.0));
    for (const auto& c : r.cases) {
        CHECK(c.pairs > 0);
        CHECK(c.max_normalized <= 1.0);
    }
    CHECK(std::isfinite(r.combined_ratio));

    Eigen::MatrixXcd far = BlockMatrix::harmonic(b).dense() + 0.3 * Eigen::MatrixXcd::Identity(11, 11);
    CHECK_THROWS_AS(delort_bound_check(NormalFormMatrix(BlockMatrix(b, far, true)), w, 0.04, 1, 1.0, 1, 1),
                    PreconditionError);
    CHECK_THROWS_AS(delort_bound_check(NormalFormMatrix::harmonic(b), Frequency{{0.5}}, 0.04, 4, 1.0, 1, 1),
                    PreconditionError);
}
