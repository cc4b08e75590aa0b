#include <doctest.h>

#include <cmath>
#include <complex>
#include <sstream>

#include "fixtures.hpp"
#include "hkam/dynamics.hpp"
#include "hkam/errors.hpp"

using namespace hkam;

namespace {

const Frequency& golden() { return *fixtures::reference_config().omega; }

StateVector free_evolution(const Basis& b, const StateVector& xi0, double t) {
    StateVector out = xi0;
    for (Eigen::Index j = 0; j < out.size(); ++j) out(j) *= std::polar(1.0, -b.weights()(j) * t);
    return out;
}

}  // namespace

TEST_CASE("sobolev norm") {
    const Basis b(1, 9, 0);
    StateVector e = StateVector::Zero(static_cast<Eigen::Index>(b.size()));
    e(2) = std::complex<double>(0.0, 2.0);
    CHECK(sobolev_norm(b, e, 0.0) == doctest::Approx(2.0));
    CHECK(sobolev_norm(b, e, 2.0) == doctest::Approx(2.0 * b.weights()(2)));
    CHECK(sobolev_norm(b, e, 1.0) == doctest::Approx(2.0 * std::sqrt(b.weights()(2))));
    CHECK_THROWS_AS(sobolev_norm(b, StateVector::Zero(2), 1.0), BasisMismatchError);
}

TEST_CASE("unforced evolution rotates each mode by its energy") {
    const auto& b = *fixtures::reference_basis();
    const auto& q = fixtures::reference_q();
    const StateVector xi0 = initial_state_vector(fixtures::reference_config(), b);
    const double dt = max_sampling_step(q, 0.0);
    const auto traj = integrate_direct(q, golden(), 0.0, xi0, 20.0, dt);
    double err = 0.0;
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        err = std::max(err, (traj.states[i] - free_evolution(b, xi0, traj.times[i])).norm());
    CHECK(err <= 1e-9);
    CHECK(traj.norm_drift <= 1e-10);
}

TEST_CASE("sampling step precondition") {
    const auto& b = *fixtures::reference_basis();
    const auto& q = fixtures::reference_q();
    const StateVector xi0 = initial_state_vector(fixtures::reference_config(), b);
    const double eps = 1e-3;
    const double dt = max_sampling_step(q, eps);
    CHECK(dt > 0.0);
    CHECK(dt <= 0.1 / b.energy_cutoff());
    CHECK_THROWS_AS(integrate_direct(q, golden(), eps, xi0, 1.0, 1.01 * dt), PreconditionError);
    CHECK_THROWS_AS(integrate_direct(q, golden(), eps, xi0, 1.0, 0.0), ParameterError);
    CHECK_THROWS_AS(integrate_direct(q, golden(), eps, StateVector::Zero(3), 1.0, dt), BasisMismatchError);
}

TEST_CASE("identity transformation propagates freely") {
    const auto b = fixtures::reference_basis();
    const StateVector xi0 = initial_state_vector(fixtures::reference_config(), *b);
    for (double t : {0.0, 0.7, 13.0})
        CHECK((propagate_reduced(Transformation{}, NormalFormMatrix::harmonic(b), golden(), xi0, t) -
               free_evolution(*b, xi0, t)).norm() <= 1e-13);
}

TEST_CASE("direct and reduced propagation agree on the reference run") {
    const auto& cfg = fixtures::reference_config();
    const auto& b = *fixtures::reference_basis();
    const auto& out = fixtures::reference_run();
    const StateVector xi0 = initial_state_vector(cfg, b);
    const double dt = max_sampling_step(fixtures::reference_q(), cfg.epsilon);
    const auto traj = integrate_direct(fixtures::reference_q(), golden(), cfg.epsilon, xi0, 30.0, dt);
    const ReducedPropagator reduced(out.transformation, out.final_state.N, golden());
    double err = 0.0;
    std::vector<StateVector> red;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        red.push_back(reduced(xi0, traj.times[i]));
        err = std::max(err, (traj.states[i] - red.back()).norm());
    }
    CHECK(err <= 1e-5);
    CHECK(traj.norm_drift <= 1e-8);

    const auto band = norm_band(b, traj.states, 1.0);
    CHECK(band.half_width() <= 20.0 * cfg.epsilon);
    CHECK(band.upper >= 0.0);
    CHECK(band.lower >= 0.0);

    std::ostringstream os;
    write_trajectory_csv(os, b, traj, red, cfg.s);
    const std::string csv = os.str();
    CHECK(csv.rfind("t,norm_1,norm_s,l2_error_vs_reduced\n", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == traj.times.size() + 1);
}

TEST_CASE("norm band of a constant trajectory is zero") {
    const Basis b(1, 9, 0);
    const StateVector xi = StateVector::Ones(static_cast<Eigen::Index>(b.size()));
    const auto band = norm_band(b, {xi, xi, xi}, 2.0);
    CHECK(band.half_width() == 0.0);
    const auto grow = norm_band(b, {xi, 1.5 * xi, 0.5 * xi}, 2.0);
    CHECK(grow.upper == doctest::Approx(0.5));
    CHECK(grow.lower == doctest::Approx(0.5));
}

TEST_CASE("floquet spectrum of the unperturbed oscillator") {
    const auto b = fixtures::reference_basis();
    const auto f = floquet_spectrum(NormalFormMatrix::harmonic(b), golden(), 1);
    CHECK(f.max_deviation == 0.0);
    for (Eigen::Index j = 0; j < f.mu.size(); ++j) CHECK(f.mu(j) == b->weights()(j));
    CHECK(f.points.size() == 3 * b->size());

    std::ostringstream os;
    write_spectrum_csv(os, f);
    CHECK(os.str().rfind("mu,k1,value\n", 0) == 0);
}

TEST_CASE("floquet shifts decay with the energy") {
    const auto& out = fixtures::reference_run();
    const auto f = floquet_spectrum(out.final_state.N, golden(), 0);
    const double beta = fixtures::reference_config().beta;
    MESSAGE("fitted exponent " << f.fitted_exponent << " constant " << f.fitted_constant);
    CHECK(f.max_deviation <= 2.0 * fixtures::reference_config().epsilon);
    CHECK(std::abs(f.fitted_exponent - 2.0 * beta) <= 0.3);
}

TEST_CASE("floquet spectrum against a direct eigensolve") {
    const auto& cfg = fixtures::reference_config();
    const auto& out = fixtures::reference_run();
    const auto r = floquet_direct_crosscheck(fixtures::reference_q(), golden(), cfg.epsilon, cfg.dynamics.floquet_k_cut,
                                             out.final_state.N);
    MESSAGE("hausdorff " << r.hausdorff << " mass " << r.min_group_mass << " imag " << r.max_imag);
    CHECK(r.interior_count > 0);
    CHECK(r.hausdorff <= 10.0 * cfg.epsilon * cfg.epsilon + 1e-6);
    CHECK(r.min_group_mass >= 0.99);
    CHECK(r.max_imag <= 1e-10);
    CHECK_THROWS_AS(floquet_direct_crosscheck(fixtures::reference_q(), golden(), cfg.epsilon, 400, out.final_state.N),
                    ParameterError);
}
