#pragma once

#include <complex>
#include <iosfwd>
#include <memory>

#include <Eigen/Dense>

#include "hkam/basis.hpp"

namespace hkam {

using cplx = std::complex<double>;
using BasisPtr = std::shared_ptr<const Basis>;

struct NormParams {
    double s = 0.0;
    double beta = 0.25;

    // Throws ParameterError unless s >= 0 and 0 < beta <= 1.
    void validate() const;
};

// Dense matrix over a truncated basis, addressed by cluster blocks.
// Blocks that are exactly zero play the role of absent blocks.
class BlockMatrix {
public:
    explicit BlockMatrix(BasisPtr basis);
    BlockMatrix(BasisPtr basis, Eigen::MatrixXcd dense, bool hermitian = false);

    static BlockMatrix identity(BasisPtr basis);
    // Diagonal of cluster energies, the unperturbed N_0.
    static BlockMatrix harmonic(BasisPtr basis);

    const Basis& basis() const noexcept { return *basis_; }
    const BasisPtr& basis_ptr() const noexcept { return basis_; }
    const Eigen::MatrixXcd& dense() const noexcept { return m_; }
    Eigen::Index size() const noexcept { return m_.rows(); }

    bool hermitian_flag() const noexcept { return hermitian_; }
    void set_hermitian_flag(bool h) noexcept { hermitian_ = h; }

    // Block for row cluster index ca and column cluster index cb.
    Eigen::Block<const Eigen::MatrixXcd> block(std::size_t ca, std::size_t cb) const;
    void set_block(std::size_t ca, std::size_t cb, const Eigen::MatrixXcd& value);

    BlockMatrix adjoint() const;
    BlockMatrix conjugate() const;
    BlockMatrix transpose() const;

    BlockMatrix& operator+=(const BlockMatrix& o);
    BlockMatrix& operator-=(const BlockMatrix& o);
    BlockMatrix& operator*=(cplx z);

    friend BlockMatrix operator+(BlockMatrix a, const BlockMatrix& b) { return a += b; }
    friend BlockMatrix operator-(BlockMatrix a, const BlockMatrix& b) { return a -= b; }
    friend BlockMatrix operator*(cplx z, BlockMatrix a) { return a *= z; }

    // max |A - A^dagger| entrywise
    double hermiticity_defect() const;

private:
    BasisPtr basis_;
    Eigen::MatrixXcd m_;
    bool hermitian_ = false;
};

void require_same_basis(const Basis& a, const Basis& b);

double block_operator_norm(const Eigen::Ref<const Eigen::MatrixXcd>& block);

double msb_norm(const BlockMatrix& a, const NormParams& p);
double msb_plus_norm(const BlockMatrix& a, const NormParams& p);

BlockMatrix multiply(const BlockMatrix& a, const BlockMatrix& b);
BlockMatrix commutator(const BlockMatrix& a, const BlockMatrix& b);

// sigma_max(D_to A D_from^{-1}) with D_t = diag(w_a^{t/2}).
double operator_norm_weighted(const BlockMatrix& a, double s_from, double s_to);
double operator_norm_weighted(const Basis& b, const Eigen::MatrixXcd& a, double s_from, double s_to);

// exp(scale * m) by scaling and squaring with a degree-13 Pade approximant.
Eigen::MatrixXcd expm(const Eigen::MatrixXcd& m);
BlockMatrix block_expm(const BlockMatrix& s, cplx scale);

// Hermitian, block diagonal across clusters.
class NormalFormMatrix {
public:
    // Validates structure; off-diagonal blocks must be exactly zero and
    // the hermiticity defect at most tol.
    explicit NormalFormMatrix(BlockMatrix m, double tol = 1e-12);

    static NormalFormMatrix harmonic(BasisPtr basis);

    const BlockMatrix& matrix() const noexcept { return m_; }
    const Basis& basis() const noexcept { return m_.basis(); }
    const BasisPtr& basis_ptr() const noexcept { return m_.basis_ptr(); }
    const Eigen::MatrixXcd& dense() const noexcept { return m_.dense(); }
    Eigen::Block<const Eigen::MatrixXcd> cluster_block(std::size_t c) const { return m_.block(c, c); }

    // Size of the hermitizing correction applied by project_block_diagonal.
    double hermitization_correction() const noexcept { return correction_; }

private:
    friend NormalFormMatrix project_block_diagonal(const BlockMatrix& a);
    NormalFormMatrix(BlockMatrix m, double correction, std::nullptr_t);

    BlockMatrix m_;
    double correction_ = 0.0;
};

NormalFormMatrix project_block_diagonal(const BlockMatrix& a);

// CSV rows "w_row,l_row,w_col,l_col,re,im" for every entry of each nonzero block.
void write_csv(std::ostream& os, const BlockMatrix& a, bool header = true);
BlockMatrix read_csv(std::istream& is, BasisPtr basis);

// Constants C for which the product and mapping inequalities hold at this
// truncation, obtained by bounding block sums through the cluster norms.
struct ProductBounds {
    double c_product = 0.0;       // |AB|, |BA| <= C |A| |B|_+
    double c_plus_product = 0.0;  // |AB|_+ <= C |A|_+ |B|_+
    double c_mapping = 0.0;       // ||A xi||_{s'+2beta} <= C |A|_+ ||xi||_{s'}
};
ProductBounds truncation_product_bounds(const Basis& b, const NormParams& p, double s_prime);

}  // namespace hkam
