#include "hkam/basis.hpp"
#include "hkam/errors.hpp"

#include <cmath>
#include <numbers>

namespace hkam {

namespace {

void golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& sub, double mu0,
                  Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success)
        throw NumericalResolutionError("Golub-Welsch eigensolve failed");
    nodes = es.eigenvalues();
    weights = mu0 * es.eigenvectors().row(0).transpose().array().square();
}

}  // namespace

void gauss_hermite(int q, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
    if (q < 1) throw ParameterError("gauss_hermite: q must be >= 1");
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(q);
    Eigen::VectorXd sub(std::max(q - 1, 0));
    for (int k = 1; k < q; ++k) sub[k - 1] = std::sqrt(0.5 * k);
    golub_welsch(diag, sub, std::sqrt(std::numbers::pi), nodes, weights);
    // Symmetrize: the rule is even, so remove the eigensolver's tiny asymmetry.
    for (int i = 0; i < q / 2; ++i) {
        const double x = 0.5 * (nodes[q - 1 - i] - nodes[i]);
        const double w = 0.5 * (weights[i] + weights[q - 1 - i]);
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        weights[i] = weights[q - 1 - i] = w;
    }
    if (q % 2 == 1) nodes[q / 2] = 0.0;
}

void gauss_legendre01(int q, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
    if (q < 1) throw ParameterError("gauss_legendre01: q must be >= 1");
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(q);
    Eigen::VectorXd sub(std::max(q - 1, 0));
    for (int k = 1; k < q; ++k) sub[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
    golub_welsch(diag, sub, 2.0, nodes, weights);
    nodes = (nodes.array() + 1.0) * 0.5;
    weights *= 0.5;
}

std::vector<double> hermite_functions(int count, double x) {
    std::vector<double> phi(static_cast<std::size_t>(std::max(count, 0)));
    if (count <= 0) return phi;
    phi[0] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x);
    if (count > 1) phi[1] = std::sqrt(2.0) * x * phi[0];
    for (int n = 1; n + 1 < count; ++n) {
        phi[n + 1] = std::sqrt(2.0 / (n + 1)) * x * phi[n] - std::sqrt(double(n) / (n + 1)) * phi[n - 1];
    }
    return phi;
}

}  // namespace hkam
