#include "hkam/basis.hpp"
#include "hkam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hkam {

SmallDivisorError::SmallDivisorError(std::vector<int> k, int wa, int wb, double value, double bound)
    : std::runtime_error([&] {
          std::ostringstream os;
          os << "small divisor at k=(";
          for (std::size_t i = 0; i < k.size(); ++i) os << (i ? "," : "") << k[i];
          os << "), clusters [" << wa << "],[" << wb << "]: |divisor|=" << value << " < " << bound;
          return os.str();
      }()),
      k_(std::move(k)), wa_(wa), wb_(wb), value_(value), bound_(bound) {}

namespace {

// All d-tuples of odd positive integers summing to w, in lexicographic order.
void odd_compositions(int d, int w, std::vector<int>& prefix, std::vector<std::vector<int>>& out) {
    if (d == 1) {
        if (w >= 1 && w % 2 == 1) {
            prefix.push_back(w);
            out.push_back(prefix);
            prefix.pop_back();
        }
        return;
    }
    for (int i = 1; i <= w - (d - 1); i += 2) {
        prefix.push_back(i);
        odd_compositions(d - 1, w - i, prefix, out);
        prefix.pop_back();
    }
}

}  // namespace

Basis::Basis(int d, int e_max, int q_pts) : d_(d), e_max_(e_max), q_pts_(q_pts) {
    if (d < 1) throw ParameterError("build_basis: d must be >= 1");
    if (e_max < d) throw ParameterError("build_basis: E_max must be >= d");
    if ((e_max - d) % 2 != 0) e_max_ = --e_max;
    if (q_pts_ <= 0) q_pts_ = 2 * e_max_;
    if (q_pts_ < e_max_) throw ParameterError("build_basis: Q_pts must be >= E_max");

    for (int w = d; w <= e_max_; w += 2) {
        Cluster c;
        c.energy = w;
        c.offset = modes_.size();
        std::vector<int> prefix;
        std::vector<std::vector<int>> tuples;
        odd_compositions(d, w, prefix, tuples);
        int l = 0;
        for (auto& t : tuples) {
            Mode m{w, ++l, std::move(t)};
            c.members.push_back(m);
            modes_.push_back(m);
            cluster_of_.push_back(static_cast<int>(clusters_.size()));
        }
        c.dimension = l;
        clusters_.push_back(std::move(c));
    }
    w_.resize(static_cast<Eigen::Index>(modes_.size()));
    for (std::size_t i = 0; i < modes_.size(); ++i) w_[static_cast<Eigen::Index>(i)] = modes_[i].cluster_energy;

    // 1-d tables for levels 0..(E_max - d)/2, the largest level any mode uses.
    const int levels = (e_max_ - d) / 2 + 1;
    gauss_hermite(q_pts_, quad_.nodes, quad_.weights);
    quad_.table.resize(levels, q_pts_);
    quad_.reweighted.resize(q_pts_);
    for (int q = 0; q < q_pts_; ++q) {
        const auto all = hermite_functions(q_pts_, quad_.nodes[q]);
        double christoffel = 0.0;
        for (double v : all) christoffel += v * v;
        // Christoffel identity: w_q e^{x_q^2} = 1 / sum_{k<Q} phi_k(x_q)^2.
        quad_.reweighted[q] = 1.0 / christoffel;
        for (int n = 0; n < levels; ++n) quad_.table(n, q) = all[static_cast<std::size_t>(n)];
    }

    const Eigen::MatrixXd gram = quad_.table * quad_.reweighted.asDiagonal() * quad_.table.transpose();
    Eigen::Index wi = 0, wj = 0;
    const double err = (gram - Eigen::MatrixXd::Identity(levels, levels)).cwiseAbs().maxCoeff(&wi, &wj);
    if (err > 1e-10) {
        std::ostringstream os;
        os << "build_basis: quadrature orthonormality error " << err << " at pair (" << wi << "," << wj
           << ") with Q_pts=" << q_pts_;
        throw NumericalResolutionError(os.str());
    }
}

std::size_t Basis::cluster_index(int energy) const {
    if (energy < d_ || energy > e_max_ || (energy - d_) % 2 != 0)
        throw IndexError("cluster energy " + std::to_string(energy) + " outside basis");
    return static_cast<std::size_t>((energy - d_) / 2);
}

std::size_t Basis::flat_index(const Mode& a) const {
    if (static_cast<int>(a.multi_index.size()) != d_) throw IndexError("mode has wrong dimension");
    const auto& c = clusters_[cluster_index(a.cluster_energy)];
    auto it = std::find_if(c.members.begin(), c.members.end(),
                           [&](const Mode& m) { return m.multi_index == a.multi_index; });
    if (it == c.members.end()) throw IndexError("mode not in basis");
    return c.offset + static_cast<std::size_t>(it - c.members.begin());
}

bool Basis::same_as(const Basis& other) const noexcept {
    return this == &other || (d_ == other.d_ && e_max_ == other.e_max_ && q_pts_ == other.q_pts_);
}

Basis build_basis(int d, int e_max, int q_pts) { return Basis(d, e_max, q_pts); }

double eval_eigenfunction(const Basis& b, const Mode& a, const std::vector<double>& x) {
    (void)b.flat_index(a);
    if (x.size() != a.multi_index.size()) throw IndexError("point dimension mismatch");
    double v = 1.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const int n = a.level(k);
        v *= hermite_functions(n + 1, x[k])[static_cast<std::size_t>(n)];
    }
    return v;
}

double sobolev_weight(int w, double s) { return std::pow(static_cast<double>(w), s); }

}  // namespace hkam
