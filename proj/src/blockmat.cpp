#include "hkam/blockmat.hpp"
#include "hkam/errors.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace hkam {

void NormParams::validate() const {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ParameterError("NormParams: s must be >= 0");
    if (!(beta > 0.0 && beta <= 1.0)) throw ParameterError("NormParams: beta must lie in (0, 1]");
}

BlockMatrix::BlockMatrix(BasisPtr basis) : basis_(std::move(basis)) {
    if (!basis_) throw ParameterError("BlockMatrix: null basis");
    const auto n = static_cast<Eigen::Index>(basis_->size());
    m_ = Eigen::MatrixXcd::Zero(n, n);
}

BlockMatrix::BlockMatrix(BasisPtr basis, Eigen::MatrixXcd dense, bool hermitian)
    : basis_(std::move(basis)), m_(std::move(dense)), hermitian_(hermitian) {
    if (!basis_) throw ParameterError("BlockMatrix: null basis");
    const auto n = static_cast<Eigen::Index>(basis_->size());
    if (m_.rows() != n || m_.cols() != n) throw BasisMismatchError("BlockMatrix: shape does not match basis");
}

BlockMatrix BlockMatrix::identity(BasisPtr basis) {
    const auto n = static_cast<Eigen::Index>(basis->size());
    return BlockMatrix(std::move(basis), Eigen::MatrixXcd::Identity(n, n), true);
}

BlockMatrix BlockMatrix::harmonic(BasisPtr basis) {
    Eigen::MatrixXcd d = basis->weights().cast<cplx>().asDiagonal();
    return BlockMatrix(std::move(basis), std::move(d), true);
}

Eigen::Block<const Eigen::MatrixXcd> BlockMatrix::block(std::size_t ca, std::size_t cb) const {
    const auto& cs = basis_->clusters();
    const auto& a = cs.at(ca);
    const auto& b = cs.at(cb);
    return m_.block(static_cast<Eigen::Index>(a.offset), static_cast<Eigen::Index>(b.offset), a.dimension,
                    b.dimension);
}

void BlockMatrix::set_block(std::size_t ca, std::size_t cb, const Eigen::MatrixXcd& value) {
    const auto& cs = basis_->clusters();
    const auto& a = cs.at(ca);
    const auto& b = cs.at(cb);
    if (value.rows() != a.dimension || value.cols() != b.dimension)
        throw IndexError("set_block: block shape mismatch");
    m_.block(static_cast<Eigen::Index>(a.offset), static_cast<Eigen::Index>(b.offset), a.dimension, b.dimension) =
        value;
}

BlockMatrix BlockMatrix::adjoint() const { return BlockMatrix(basis_, m_.adjoint(), hermitian_); }
BlockMatrix BlockMatrix::conjugate() const { return BlockMatrix(basis_, m_.conjugate(), hermitian_); }
BlockMatrix BlockMatrix::transpose() const { return BlockMatrix(basis_, m_.transpose(), hermitian_); }

BlockMatrix& BlockMatrix::operator+=(const BlockMatrix& o) {
    require_same_basis(*basis_, o.basis());
    m_ += o.m_;
    hermitian_ = hermitian_ && o.hermitian_;
    return *this;
}

BlockMatrix& BlockMatrix::operator-=(const BlockMatrix& o) {
    require_same_basis(*basis_, o.basis());
    m_ -= o.m_;
    hermitian_ = hermitian_ && o.hermitian_;
    return *this;
}

BlockMatrix& BlockMatrix::operator*=(cplx z) {
    m_ *= z;
    hermitian_ = hermitian_ && z.imag() == 0.0;
    return *this;
}

double BlockMatrix::hermiticity_defect() const {
    if (m_.size() == 0) return 0.0;
    return (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
}

void require_same_basis(const Basis& a, const Basis& b) {
    if (!a.same_as(b)) throw BasisMismatchError("operands live on different bases");
}

double block_operator_norm(const Eigen::Ref<const Eigen::MatrixXcd>& block) {
    if (block.size() == 0) return 0.0;
    if (block.size() == 1) return std::abs(block(0, 0));
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(block);
    return svd.singularValues()(0);
}

namespace {

double msb_generic(const BlockMatrix& a, const NormParams& p, bool plus) {
    const auto& cs = a.basis().clusters();
    double best = 0.0;
    for (std::size_t i = 0; i < cs.size(); ++i) {
        for (std::size_t j = 0; j < cs.size(); ++j) {
            const double op = block_operator_norm(a.block(i, j));
            if (op == 0.0) continue;
            const double wa = cs[i].energy, wb = cs[j].energy;
            const double rmin = std::sqrt(std::min(wa, wb));
            const double gap = std::abs(wa - wb);
            double v = std::pow(wa * wb, p.beta) * op * std::pow((rmin + gap) / rmin, 0.5 * p.s);
            if (plus) v /= 1.0 + gap;
            best = std::max(best, v);
        }
    }
    return best;
}

}  // namespace

double msb_norm(const BlockMatrix& a, const NormParams& p) { return msb_generic(a, p, false); }
double msb_plus_norm(const BlockMatrix& a, const NormParams& p) { return msb_generic(a, p, true); }

BlockMatrix multiply(const BlockMatrix& a, const BlockMatrix& b) {
    require_same_basis(a.basis(), b.basis());
    Eigen::MatrixXcd c = a.dense() * b.dense();
    for (Eigen::Index j = 0; j < c.cols(); ++j)
        for (Eigen::Index i = 0; i < c.rows(); ++i)
            if (std::abs(c(i, j)) < 1e-300) c(i, j) = 0.0;
    return BlockMatrix(a.basis_ptr(), std::move(c), false);
}

BlockMatrix commutator(const BlockMatrix& a, const BlockMatrix& b) {
    require_same_basis(a.basis(), b.basis());
    return BlockMatrix(a.basis_ptr(), a.dense() * b.dense() - b.dense() * a.dense(), false);
}

double operator_norm_weighted(const Basis& b, const Eigen::MatrixXcd& a, double s_from, double s_to) {
    if (a.size() == 0) return 0.0;
    const Eigen::ArrayXd w = b.weights().array();
    const Eigen::VectorXd to = w.pow(0.5 * s_to).matrix();
    const Eigen::VectorXd from = w.pow(-0.5 * s_from).matrix();
    const Eigen::MatrixXcd scaled = to.cast<cplx>().asDiagonal() * a * from.cast<cplx>().asDiagonal();
    if (scaled.cwiseAbs().maxCoeff() == 0.0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(scaled);
    return svd.singularValues()(0);
}

double operator_norm_weighted(const BlockMatrix& a, double s_from, double s_to) {
    return operator_norm_weighted(a.basis(), a.dense(), s_from, s_to);
}

Eigen::MatrixXcd expm(const Eigen::MatrixXcd& a) {
    if (!a.allFinite()) throw ParameterError("expm: non-finite entries");
    const Eigen::Index n = a.rows();
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
    if (n == 0 || a.isZero(0.0)) return id;
    static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                   1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                   670442572800.0,      33522128640.0,       1323241920.0,
                                   40840800.0,          960960.0,            16380.0,
                                   182.0,               1.0};
    constexpr double theta13 = 5.371920351148152;
    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > theta13) squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / theta13))));
    const Eigen::MatrixXcd x = a * std::ldexp(1.0, -squarings);
    const Eigen::MatrixXcd x2 = x * x;
    const Eigen::MatrixXcd x4 = x2 * x2;
    const Eigen::MatrixXcd x6 = x4 * x2;
    const Eigen::MatrixXcd u =
        x * (x6 * (b[13] * x6 + b[11] * x4 + b[9] * x2) + b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * id);
    const Eigen::MatrixXcd v = x6 * (b[12] * x6 + b[10] * x4 + b[8] * x2) + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * id;
    Eigen::MatrixXcd r = (v - u).partialPivLu().solve(v + u);
    for (int k = 0; k < squarings; ++k) r = (r * r).eval();
    return r;
}

BlockMatrix block_expm(const BlockMatrix& s, cplx scale) {
    return BlockMatrix(s.basis_ptr(), expm(scale * s.dense()), false);
}

NormalFormMatrix::NormalFormMatrix(BlockMatrix m, double tol) : m_(std::move(m)) {
    const auto& cs = m_.basis().clusters();
    for (std::size_t i = 0; i < cs.size(); ++i)
        for (std::size_t j = 0; j < cs.size(); ++j)
            if (i != j && m_.block(i, j).cwiseAbs().maxCoeff() != 0.0)
                throw StructuralError("NormalFormMatrix: nonzero off-diagonal block [" +
                                      std::to_string(cs[i].energy) + "],[" + std::to_string(cs[j].energy) + "]");
    const double h = m_.hermiticity_defect();
    if (h > tol) throw StructuralError("NormalFormMatrix: hermiticity defect " + std::to_string(h));
    m_.set_hermitian_flag(true);
}

NormalFormMatrix::NormalFormMatrix(BlockMatrix m, double correction, std::nullptr_t)
    : m_(std::move(m)), correction_(correction) {
    m_.set_hermitian_flag(true);
}

NormalFormMatrix NormalFormMatrix::harmonic(BasisPtr basis) {
    return NormalFormMatrix(BlockMatrix::harmonic(std::move(basis)));
}

NormalFormMatrix project_block_diagonal(const BlockMatrix& a) {
    BlockMatrix out(a.basis_ptr());
    const auto& cs = a.basis().clusters();
    double correction = 0.0;
    for (std::size_t c = 0; c < cs.size(); ++c) {
        Eigen::MatrixXcd blk = a.block(c, c);
        if (!a.hermitian_flag()) {
            const Eigen::MatrixXcd h = 0.5 * (blk + blk.adjoint());
            if (blk.size() > 0) correction = std::max(correction, (h - blk).cwiseAbs().maxCoeff());
            blk = h;
        }
        out.set_block(c, c, blk);
    }
    return NormalFormMatrix(std::move(out), correction, nullptr);
}

void write_csv(std::ostream& os, const BlockMatrix& a, bool header) {
    if (header) os << "w_row,l_row,w_col,l_col,re,im\n";
    const auto& cs = a.basis().clusters();
    char buf[128];
    for (std::size_t i = 0; i < cs.size(); ++i) {
        for (std::size_t j = 0; j < cs.size(); ++j) {
            const auto blk = a.block(i, j);
            if (blk.cwiseAbs().maxCoeff() == 0.0) continue;
            for (Eigen::Index r = 0; r < blk.rows(); ++r) {
                for (Eigen::Index c = 0; c < blk.cols(); ++c) {
                    std::snprintf(buf, sizeof buf, "%.17g,%.17g", blk(r, c).real(), blk(r, c).imag());
                    os << cs[i].energy << ',' << r + 1 << ',' << cs[j].energy << ',' << c + 1 << ',' << buf << '\n';
                }
            }
        }
    }
}

BlockMatrix read_csv(std::istream& is, BasisPtr basis) {
    BlockMatrix out(basis);
    Eigen::MatrixXcd m = out.dense();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line.rfind("w_row", 0) == 0) continue;
        std::istringstream ls(line);
        int wr = 0, lr = 0, wc = 0, lc = 0;
        double re = 0, im = 0;
        char c1, c2, c3, c4, c5;
        if (!(ls >> wr >> c1 >> lr >> c2 >> wc >> c3 >> lc >> c4 >> re >> c5 >> im) || c1 != ',' || c2 != ',' ||
            c3 != ',' || c4 != ',' || c5 != ',')
            throw ParameterError("read_csv: malformed line " + std::to_string(lineno));
        const auto& ca = basis->clusters()[basis->cluster_index(wr)];
        const auto& cb = basis->clusters()[basis->cluster_index(wc)];
        if (lr < 1 || lr > ca.dimension || lc < 1 || lc > cb.dimension)
            throw IndexError("read_csv: multiplicity index out of range at line " + std::to_string(lineno));
        m(static_cast<Eigen::Index>(ca.offset) + lr - 1, static_cast<Eigen::Index>(cb.offset) + lc - 1) = cplx(re, im);
    }
    return BlockMatrix(std::move(basis), std::move(m), false);
}

ProductBounds truncation_product_bounds(const Basis& b, const NormParams& p, double s_prime) {
    const auto& cs = b.clusters();
    const std::size_t nc = cs.size();
    auto bracket = [](double wa, double wb) {
        const double r = std::sqrt(std::min(wa, wb));
        return (r + std::abs(wa - wb)) / r;
    };
    ProductBounds out;
    // (AB)_ab = sum_c A_ac B_cb; the bracket factors combine through
    // bracket(a,b) <= bracket(a,c) bracket(c,b), leaving sums over c.
    for (std::size_t i = 0; i < nc; ++i) {
        for (std::size_t j = 0; j < nc; ++j) {
            const double wa = cs[i].energy, wb = cs[j].energy;
            double sum_ab = 0.0, sum_ba = 0.0, sum_pp = 0.0;
            for (std::size_t k = 0; k < nc; ++k) {
                const double wc = cs[k].energy;
                const double rb = std::pow(bracket(wa, wb) / (bracket(wa, wc) * bracket(wc, wb)), 0.5 * p.s);
                const double base = std::pow(wc, -2.0 * p.beta) * rb;
                sum_ab += base * (1.0 + std::abs(wc - wb));
                sum_ba += base * (1.0 + std::abs(wa - wc));
                sum_pp += base * (1.0 + std::abs(wa - wc)) * (1.0 + std::abs(wc - wb)) / (1.0 + std::abs(wa - wb));
            }
            out.c_product = std::max({out.c_product, sum_ab, sum_ba});
            out.c_plus_product = std::max(out.c_plus_product, sum_pp);
        }
    }
    // ||A|| <= || (||A_ab||)_ab || for the matrix of block norms.
    Eigen::MatrixXd t(nc, nc);
    for (std::size_t i = 0; i < nc; ++i) {
        for (std::size_t j = 0; j < nc; ++j) {
            const double wa = cs[i].energy, wb = cs[j].energy;
            t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                std::pow(wa, 0.5 * (s_prime + 2.0 * p.beta)) * std::pow(wb, -0.5 * s_prime) *
                (1.0 + std::abs(wa - wb)) * std::pow(wa * wb, -p.beta) * std::pow(bracket(wa, wb), -0.5 * p.s);
        }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(t);
    out.c_mapping = svd.singularValues()(0);
    return out;
}

}  // namespace hkam
