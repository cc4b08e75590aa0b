#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace hkam {

// Integer vectors k in Z^n with |k|_inf <= K, enumerated lexicographically
// with the first component slowest.
class FourierBox {
public:
    FourierBox() = default;
    FourierBox(int n, int K);

    int n() const noexcept { return n_; }
    int K() const noexcept { return K_; }
    std::size_t size() const noexcept { return size_; }

    std::vector<int> vector(std::size_t flat) const;
    // Returns size() when k lies outside the box.
    std::size_t flat(const std::vector<int>& k) const;
    std::size_t zero() const { return flat(std::vector<int>(static_cast<std::size_t>(n_), 0)); }
    std::size_t negated(std::size_t flat) const { return size_ - 1 - flat; }

    friend bool operator==(const FourierBox&, const FourierBox&) = default;

private:
    int n_ = 0, K_ = 0;
    std::size_t size_ = 0;
};

// Uniform grid of G points per axis on T^n, phi_g = 2 pi g / G; point
// index is lexicographic with the first axis slowest.
class TorusGrid {
public:
    TorusGrid() = default;
    TorusGrid(int n, int G);

    int n() const noexcept { return n_; }
    int G() const noexcept { return G_; }
    std::size_t size() const noexcept { return size_; }
    std::vector<double> point(std::size_t flat) const;

    friend bool operator==(const TorusGrid&, const TorusGrid&) = default;

private:
    int n_ = 0, G_ = 0;
    std::size_t size_ = 0;
};

// Matrix-valued trigonometric synthesis on a grid: values[g] = sum_k c[k] e^{i k.phi_g}.
// Requires G > 2K.
std::vector<Eigen::MatrixXcd> fourier_to_grid(const FourierBox& box, const std::vector<Eigen::MatrixXcd>& coeffs,
                                              const TorusGrid& grid);

// Discrete analysis; returns every coefficient with |k|_inf <= K_out (K_out <= (G-1)/2)
// and, in `dropped`, the coefficients of the remaining aliases-free modes.
std::vector<Eigen::MatrixXcd> grid_to_fourier(const TorusGrid& grid, const std::vector<Eigen::MatrixXcd>& values,
                                              const FourierBox& out_box,
                                              std::vector<Eigen::MatrixXcd>* dropped = nullptr);

}  // namespace hkam
