#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace hkam {

// One basis function: a product of 1-d Hermite functions with odd
// eigenvalues i_k (level n_k = (i_k - 1) / 2) summing to the cluster energy.
struct Mode {
    int cluster_energy = 0;
    int multiplicity_index = 0;  // 1-based position inside its cluster
    std::vector<int> multi_index;

    int level(std::size_t axis) const { return (multi_index.at(axis) - 1) / 2; }
    friend bool operator==(const Mode&, const Mode&) = default;
};

struct Cluster {
    int energy = 0;
    int dimension = 0;
    std::size_t offset = 0;  // position of the first member in the flat mode list
    std::vector<Mode> members;
};

struct Quadrature1d {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;      // Gauss-Hermite weights for the e^{-x^2} measure
    Eigen::VectorXd reweighted;   // weights for plain dx against Hermite functions
    Eigen::MatrixXd table;        // table(n, q) = phi_n(nodes[q]), n = 0..levels-1
};

class Basis {
public:
    Basis(int d, int e_max, int q_pts);

    int dimension_d() const noexcept { return d_; }
    int energy_cutoff() const noexcept { return e_max_; }
    int quadrature_points() const noexcept { return q_pts_; }
    const std::vector<Cluster>& clusters() const noexcept { return clusters_; }
    const std::vector<Mode>& modes() const noexcept { return modes_; }
    std::size_t size() const noexcept { return modes_.size(); }
    const Quadrature1d& quadrature() const noexcept { return quad_; }

    // Weight w_a of every flat mode index.
    const Eigen::VectorXd& weights() const noexcept { return w_; }
    // Cluster index of every flat mode index.
    const std::vector<int>& cluster_of() const noexcept { return cluster_of_; }

    std::size_t cluster_index(int energy) const;
    std::size_t flat_index(const Mode& a) const;

    bool same_as(const Basis& other) const noexcept;

private:
    int d_, e_max_, q_pts_;
    std::vector<Cluster> clusters_;
    std::vector<Mode> modes_;
    std::vector<int> cluster_of_;
    Eigen::VectorXd w_;
    Quadrature1d quad_;
};

// Q_pts <= 0 selects the default 2 * E_max.
Basis build_basis(int d, int e_max, int q_pts = 0);

// Normalized Hermite functions phi_0..phi_{count-1} at x, by the three-term recurrence.
std::vector<double> hermite_functions(int count, double x);

double eval_eigenfunction(const Basis& b, const Mode& a, const std::vector<double>& x);

double sobolev_weight(int w, double s);

// Gauss-Hermite nodes and weights for the e^{-x^2} measure (Golub-Welsch).
void gauss_hermite(int q, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre01(int q, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

}  // namespace hkam
