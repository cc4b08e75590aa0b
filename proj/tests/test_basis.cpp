#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hkam/basis.hpp"
#include "hkam/errors.hpp"
#include "oracles.hpp"

using namespace hkam;

namespace {

std::vector<int> energies(const Basis& b) {
    std::vector<int> e;
    for (const auto& c : b.clusters()) e.push_back(c.energy);
    return e;
}

std::vector<int> dimensions(const Basis& b) {
    std::vector<int> e;
    for (const auto& c : b.clusters()) e.push_back(c.dimension);
    return e;
}

}  // namespace

TEST_CASE("cluster layout for small bases") {
    const auto b1 = build_basis(1, 7, 32);
    CHECK(energies(b1) == std::vector<int>{1, 3, 5, 7});
    CHECK(dimensions(b1) == std::vector<int>{1, 1, 1, 1});

    const auto b2 = build_basis(2, 6, 32);
    CHECK(energies(b2) == std::vector<int>{2, 4, 6});
    CHECK(dimensions(b2) == std::vector<int>{1, 2, 3});

    const auto b3 = build_basis(3, 5, 32);
    CHECK(energies(b3) == std::vector<int>{3, 5});
    CHECK(dimensions(b3) == std::vector<int>{1, 3});
}

TEST_CASE("energy cutoff with the wrong parity is rounded down") {
    const auto b = build_basis(2, 7, 32);
    CHECK(b.energy_cutoff() == 6);
    CHECK(energies(b).back() == 6);
}

TEST_CASE("cluster dimensions match brute-force enumeration and the multiplicity bound") {
    for (int d = 1; d <= 3; ++d) {
        const auto b = build_basis(d, d == 1 ? 21 : (d == 2 ? 12 : 9));
        for (const auto& c : b.clusters()) {
            CHECK(c.dimension == oracle::odd_tuple_count(d, c.energy));
            CHECK(c.dimension <= std::pow(c.energy, d - 1));
            CHECK(static_cast<int>(c.members.size()) == c.dimension);
            for (const auto& m : c.members) {
                int sum = 0;
                for (int i : m.multi_index) {
                    CHECK(i % 2 == 1);
                    sum += i;
                }
                CHECK(sum == c.energy);
            }
            for (std::size_t i = 1; i < c.members.size(); ++i)
                CHECK(c.members[i - 1].multi_index < c.members[i].multi_index);
        }
    }
}

TEST_CASE("enumeration is reproducible") {
    const auto a = build_basis(2, 12);
    const auto b = build_basis(2, 12);
    CHECK(a.modes() == b.modes());
    CHECK(a.same_as(b));
}

TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(build_basis(0, 5, 10), ParameterError);
    CHECK_THROWS_AS(build_basis(3, 2, 10), ParameterError);
    CHECK_THROWS_AS(build_basis(1, 21, 10), ParameterError);
}

TEST_CASE("eigenfunction values at the origin") {
    const auto b1 = build_basis(1, 7, 32);
    CHECK(eval_eigenfunction(b1, b1.modes()[0], {0.0}) == doctest::Approx(std::pow(std::numbers::pi, -0.25)).epsilon(1e-14));
    CHECK(eval_eigenfunction(b1, b1.modes()[0], {0.0}) == doctest::Approx(0.751126).epsilon(1e-6));
    CHECK(std::abs(eval_eigenfunction(b1, b1.modes()[1], {0.0})) < 1e-15);

    const auto b2 = build_basis(2, 6, 32);
    CHECK(eval_eigenfunction(b2, b2.modes()[0], {0.0, 0.0}) == doctest::Approx(1.0 / std::sqrt(std::numbers::pi)).epsilon(1e-14));

    Mode stranger{9, 1, {9}};
    CHECK_THROWS_AS(eval_eigenfunction(b1, stranger, {0.0}), IndexError);
}

TEST_CASE("recurrence agrees with the closed-form Hermite functions") {
    for (double x : {-4.0, -1.3, 0.0, 0.7, 2.5, 6.0}) {
        const auto v = hermite_functions(40, x);
        for (int n = 0; n < 40; ++n) CHECK(v[n] == doctest::Approx(oracle::hermite_function(n, x)).epsilon(1e-10).scale(1.0));
    }
}

TEST_CASE("recurrence stays finite far beyond factorial overflow") {
    const auto v = hermite_functions(400, 3.0);
    for (double x : v) CHECK(std::isfinite(x));
}

TEST_CASE("quadrature Gram matrix is the identity") {
    for (int d = 1; d <= 2; ++d) {
        const auto b = build_basis(d, d == 1 ? 21 : 12);
        const auto& q = b.quadrature();
        const auto dim = static_cast<Eigen::Index>(b.size());
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dim, dim);
        // Tensor product rule over d axes.
        const int Q = static_cast<int>(q.nodes.size());
        int total = 1;
        for (int i = 0; i < d; ++i) total *= Q;
        for (int g = 0; g < total; ++g) {
            std::vector<double> x(static_cast<std::size_t>(d));
            double w = 1.0;
            int r = g;
            for (int i = 0; i < d; ++i) {
                x[static_cast<std::size_t>(i)] = q.nodes[r % Q];
                w *= q.reweighted[r % Q];
                r /= Q;
            }
            Eigen::VectorXd v(dim);
            for (Eigen::Index a = 0; a < dim; ++a) v[a] = eval_eigenfunction(b, b.modes()[static_cast<std::size_t>(a)], x);
            gram += w * v * v.transpose();
        }
        CHECK((gram - Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("sobolev weights") {
    CHECK(sobolev_weight(1, 2.0) == 1.0);
    CHECK(sobolev_weight(3, 2.0) == doctest::Approx(9.0));
    CHECK(sobolev_weight(4, 0.5) == doctest::Approx(2.0));
}

TEST_CASE("Gauss-Legendre rule integrates polynomials exactly") {
    Eigen::VectorXd x, w;
    gauss_legendre01(6, x, w);
    for (int p = 0; p <= 11; ++p) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], p);
        CHECK(s == doctest::Approx(1.0 / (p + 1)).epsilon(1e-13));
    }
}
