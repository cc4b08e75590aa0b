#include "hkam/qpmat.hpp"
#include "hkam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace hkam {

namespace {

double axis_gamma(const SpatialProfile& p, std::size_t axis) {
    return p.gamma.size() == 1 ? p.gamma[0] : p.gamma.at(axis);
}

const std::vector<double>& axis_poly(const SpatialProfile& p, std::size_t axis) {
    return p.poly.size() == 1 ? p.poly[0] : p.poly.at(axis);
}

bool same_profile(const SpatialProfile& a, const SpatialProfile& b) { return a.gamma == b.gamma && a.poly == b.poly; }

}  // namespace

void PotentialSpec::validate(int d) const {
    std::ostringstream err;
    if (n < 1) err << "potential: n must be >= 1; ";
    for (std::size_t t = 0; t < terms.size(); ++t) {
        const auto& term = terms[t];
        if (static_cast<int>(term.k.size()) != n) err << "term " << t << ": k has length " << term.k.size() << " != n; ";
        const auto& p = term.profile;
        if (p.gamma.size() != 1 && static_cast<int>(p.gamma.size()) != d)
            err << "term " << t << ": gamma needs 1 or d entries; ";
        if (p.poly.size() != 1 && static_cast<int>(p.poly.size()) != d)
            err << "term " << t << ": poly needs 1 or d entries; ";
        for (double g : p.gamma)
            if (!(g > 0.0)) err << "term " << t << ": gamma must be > 0; ";
        for (const auto& c : p.poly)
            if (c.empty()) err << "term " << t << ": empty polynomial; ";
        if (!std::isfinite(term.coefficient.real()) || !std::isfinite(term.coefficient.imag()))
            err << "term " << t << ": non-finite coefficient; ";
    }
    // Reality of V: the term list must be closed under k -> -k with conjugated coefficients.
    for (std::size_t t = 0; t < terms.size(); ++t) {
        std::vector<int> neg = terms[t].k;
        for (int& v : neg) v = -v;
        const bool found = std::any_of(terms.begin(), terms.end(), [&](const PotentialTerm& o) {
            return o.k == neg && same_profile(o.profile, terms[t].profile) &&
                   std::abs(o.coefficient - std::conj(terms[t].coefficient)) <= 1e-14 * (1.0 + std::abs(o.coefficient));
        });
        if (!found) err << "term " << t << ": no conjugate partner at -k (V must be real); ";
    }
    const auto msg = err.str();
    if (!msg.empty()) throw ParameterError(msg);
}

int PotentialSpec::max_wavenumber() const {
    int m = 0;
    for (const auto& t : terms)
        for (int v : t.k) m = std::max(m, std::abs(v));
    return m;
}

QPMatrix::QPMatrix(BasisPtr basis, int n, int K) : basis_(std::move(basis)), box_(n, K) {
    if (!basis_) throw ParameterError("QPMatrix: null basis");
    const auto dim = static_cast<Eigen::Index>(basis_->size());
    coeffs_.assign(box_.size(), Eigen::MatrixXcd::Zero(dim, dim));
}

BlockMatrix QPMatrix::coefficient(const std::vector<int>& k) const {
    const auto f = box_.flat(k);
    if (f == box_.size()) return BlockMatrix(basis_);
    return BlockMatrix(basis_, coeffs_[f], false);
}

Eigen::MatrixXcd QPMatrix::evaluate(const std::vector<double>& phi) const {
    if (static_cast<int>(phi.size()) != n()) throw ParameterError("QPMatrix::evaluate: phase dimension mismatch");
    const auto dim = static_cast<Eigen::Index>(basis_->size());
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::size_t f = 0; f < box_.size(); ++f) {
        if (coeffs_[f].cwiseAbs().maxCoeff() == 0.0) continue;
        const auto k = box_.vector(f);
        double arg = 0.0;
        for (std::size_t i = 0; i < k.size(); ++i) arg += k[i] * phi[i];
        out += coeffs_[f] * std::polar(1.0, arg);
    }
    return out;
}

QPMatrix QPMatrix::resized(int K) const {
    QPMatrix out(basis_, n(), K);
    out.sigma_ = sigma_;
    for (std::size_t f = 0; f < box_.size(); ++f) {
        const auto g = out.box_.flat(box_.vector(f));
        if (g != out.box_.size()) out.coeffs_[g] = coeffs_[f];
    }
    return out;
}

double QPMatrix::hermitian_symmetry_defect() const {
    double worst = 0.0;
    for (std::size_t f = 0; f < box_.size(); ++f) {
        const auto& a = coeffs_[box_.negated(f)];
        if (a.size() == 0) continue;
        worst = std::max(worst, (a - coeffs_[f].adjoint()).cwiseAbs().maxCoeff());
    }
    return worst;
}

bool QPMatrix::is_zero() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(),
                       [](const Eigen::MatrixXcd& c) { return c.size() == 0 || c.cwiseAbs().maxCoeff() == 0.0; });
}

double msb_scale(const QPMatrix& q, const NormParams& p) {
    double total = 0.0;
    for (std::size_t f = 0; f < q.box().size(); ++f) {
        if (q.coeff(f).cwiseAbs().maxCoeff() == 0.0) continue;
        total += msb_norm(BlockMatrix(q.basis_ptr(), q.coeff(f), false), p);
    }
    return total;
}

Eigen::MatrixXd profile_moments(int levels, double gamma, const std::vector<double>& poly, int q_pts) {
    Eigen::VectorXd y, wy;
    gauss_hermite(q_pts, y, wy);
    const double scale = 1.0 / std::sqrt(1.0 + gamma);
    Eigen::MatrixXd phi(levels, q_pts);
    Eigen::VectorXd weight(q_pts);
    for (int q = 0; q < q_pts; ++q) {
        // w_y e^{y^2} via the Christoffel sum, then the change of variable x = y / sqrt(1 + gamma).
        const auto at_y = hermite_functions(q_pts, y[q]);
        double christoffel = 0.0;
        for (double v : at_y) christoffel += v * v;
        const double x = y[q] * scale;
        double p = 0.0;
        for (auto it = poly.rbegin(); it != poly.rend(); ++it) p = p * x + *it;
        weight[q] = scale / christoffel * p * std::exp(-gamma * x * x);
        const auto at_x = hermite_functions(levels, x);
        for (int n = 0; n < levels; ++n) phi(n, q) = at_x[static_cast<std::size_t>(n)];
    }
    return phi * weight.asDiagonal() * phi.transpose();
}

QPMatrix assemble_Q(const PotentialSpec& v, BasisPtr basis) {
    const Basis& b = *basis;
    v.validate(b.dimension_d());
    QPMatrix out(basis, v.n, v.max_wavenumber());
    const int d = b.dimension_d();
    const int levels = (b.energy_cutoff() - d) / 2 + 1;
    const auto& modes = b.modes();
    const auto dim = static_cast<Eigen::Index>(modes.size());

    // Moment tables are shared by terms with equal (gamma, poly) on an axis.
    std::map<std::pair<double, std::vector<double>>, Eigen::MatrixXd> cache;
    auto moments = [&](double gamma, const std::vector<double>& poly) -> const Eigen::MatrixXd& {
        auto key = std::make_pair(gamma, poly);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        const int deg = static_cast<int>(poly.size()) - 1;
        // Exact once 2 q_pts - 1 >= 2 (levels - 1) + deg.
        const int q = std::max(b.quadrature_points(), levels + (deg + 2) / 2);
        Eigen::MatrixXd m = profile_moments(levels, gamma, poly, q);
        const Eigen::MatrixXd m2 = profile_moments(levels, gamma, poly, 2 * q);
        const double change = (m - m2).cwiseAbs().maxCoeff();
        if (change > 1e-10) {
            std::ostringstream os;
            os << "assemble_Q: quadrature not converged (doubling nodes changes moments by " << change << ")";
            throw NumericalResolutionError(os.str());
        }
        return cache.emplace(std::move(key), std::move(m)).first->second;
    };

    for (const auto& term : v.terms) {
        std::vector<const Eigen::MatrixXd*> axes;
        for (int ax = 0; ax < d; ++ax)
            axes.push_back(&moments(axis_gamma(term.profile, static_cast<std::size_t>(ax)),
                                    axis_poly(term.profile, static_cast<std::size_t>(ax))));
        Eigen::MatrixXcd block(dim, dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            for (Eigen::Index j = 0; j < dim; ++j) {
                double val = 1.0;
                for (int ax = 0; ax < d; ++ax)
                    val *= (*axes[static_cast<std::size_t>(ax)])(modes[static_cast<std::size_t>(i)].level(ax),
                                                                 modes[static_cast<std::size_t>(j)].level(ax));
                block(i, j) = val;
            }
        }
        out.coeff(out.box().flat(term.k)) += term.coefficient * block;
    }
    return out;
}

QPMatrix synthesize_on_grid(const QPMatrix& q, int G) {
    if (G <= 0) G = 4 * q.K() + 1;
    if (G <= 2 * q.K()) throw ParameterError("synthesize_on_grid: G must exceed 2K to avoid aliasing");
    QPMatrix out = q;
    TorusGrid grid(q.n(), G);
    out.grid_ = QPMatrix::GridCache{grid, fourier_to_grid(q.box(), q.coeffs(), grid)};
    return out;
}

QPMatrix from_grid(BasisPtr basis, const TorusGrid& grid, const std::vector<Eigen::MatrixXcd>& values, int K_out,
                   std::vector<Eigen::MatrixXcd>* dropped) {
    QPMatrix out(basis, grid.n(), K_out);
    auto c = grid_to_fourier(grid, values, out.box(), dropped);
    for (std::size_t f = 0; f < c.size(); ++f) out.coeff(f) = std::move(c[f]);
    return out;
}

DecayProfile decay_profile(const QPMatrix& q, const NormParams& p) {
    DecayProfile out;
    const auto& cs = q.basis().clusters();
    std::map<int, double> env;
    for (std::size_t f = 0; f < q.box().size(); ++f) {
        const BlockMatrix c(q.basis_ptr(), q.coeff(f), false);
        for (std::size_t i = 0; i < cs.size(); ++i) {
            for (std::size_t j = 0; j < cs.size(); ++j) {
                const double wa = cs[i].energy, wb = cs[j].energy;
                const double rmin = std::sqrt(std::min(wa, wb));
                const int gap = std::abs(cs[i].energy - cs[j].energy);
                const double v = block_operator_norm(c.block(i, j)) * std::pow(wa * wb, p.beta) *
                                 std::pow((rmin + gap) / rmin, 0.5 * p.s);
                out.sup = std::max(out.sup, v);
                env[gap] = std::max(env[gap], v);
            }
        }
    }
    // Entries forbidden by parity come out at roundoff level; they carry no decay information.
    const double floor = 1e-12 * out.sup;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    DecayRow prev{-1, 0.0};
    for (auto [gap, e] : env) {
        out.rows.push_back({gap, e});
        if (e <= floor) continue;
        if (gap >= 2) {
            const double x = std::log(1.0 + gap), y = std::log(e);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++cnt;
        }
        if (prev.gap >= 4 && e > prev.envelope * (1.0 + 1e-12)) out.monotonicity_breaks.push_back(gap);
        prev = {gap, e};
    }
    if (cnt >= 2) out.fitted_exponent = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    return out;
}

}  // namespace hkam
