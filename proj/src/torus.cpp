#include "hkam/torus.hpp"
#include "hkam/errors.hpp"

#include <cmath>
#include <complex>
#include <cstring>
#include <memory>
#include <numbers>

#include <fftw3.h>

namespace hkam {

FourierBox::FourierBox(int n, int K) : n_(n), K_(K) {
    if (n < 1 || K < 0) throw ParameterError("FourierBox: need n >= 1 and K >= 0");
    size_ = 1;
    for (int i = 0; i < n; ++i) size_ *= static_cast<std::size_t>(2 * K + 1);
}

std::vector<int> FourierBox::vector(std::size_t flat) const {
    std::vector<int> k(static_cast<std::size_t>(n_));
    const auto side = static_cast<std::size_t>(2 * K_ + 1);
    for (int i = n_ - 1; i >= 0; --i) {
        k[static_cast<std::size_t>(i)] = static_cast<int>(flat % side) - K_;
        flat /= side;
    }
    return k;
}

std::size_t FourierBox::flat(const std::vector<int>& k) const {
    if (static_cast<int>(k.size()) != n_) return size_;
    std::size_t f = 0;
    const auto side = static_cast<std::size_t>(2 * K_ + 1);
    for (int v : k) {
        if (v < -K_ || v > K_) return size_;
        f = f * side + static_cast<std::size_t>(v + K_);
    }
    return f;
}

TorusGrid::TorusGrid(int n, int G) : n_(n), G_(G) {
    if (n < 1 || G < 1) throw ParameterError("TorusGrid: need n >= 1 and G >= 1");
    size_ = 1;
    for (int i = 0; i < n; ++i) size_ *= static_cast<std::size_t>(G);
}

std::vector<double> TorusGrid::point(std::size_t flat) const {
    std::vector<double> phi(static_cast<std::size_t>(n_));
    for (int i = n_ - 1; i >= 0; --i) {
        phi[static_cast<std::size_t>(i)] = 2.0 * std::numbers::pi * static_cast<double>(flat % G_) / G_;
        flat /= static_cast<std::size_t>(G_);
    }
    return phi;
}

namespace {

struct FftwBuffer {
    explicit FftwBuffer(std::size_t n) : p(fftw_alloc_complex(n)), size(n) {
        if (!p) throw std::bad_alloc();
        std::memset(p, 0, sizeof(fftw_complex) * n);
    }
    ~FftwBuffer() { fftw_free(p); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    fftw_complex* p;
    std::size_t size;
};

struct Plan {
    Plan(const TorusGrid& grid, int howmany, fftw_complex* data, int sign) {
        std::vector<int> dims(static_cast<std::size_t>(grid.n()), grid.G());
        p = fftw_plan_many_dft(grid.n(), dims.data(), howmany, data, nullptr, howmany, 1, data, nullptr, howmany, 1,
                               sign, FFTW_ESTIMATE);
        if (!p) throw NumericalResolutionError("FFTW planning failed");
    }
    ~Plan() { fftw_destroy_plan(p); }
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;
    fftw_plan p;
};

// Grid frequency slot of wavenumber k along one axis.
std::size_t slot(int k, int G) { return static_cast<std::size_t>(((k % G) + G) % G); }

std::size_t grid_flat(const std::vector<int>& k, int G) {
    std::size_t f = 0;
    for (int v : k) f = f * static_cast<std::size_t>(G) + slot(v, G);
    return f;
}

}  // namespace

std::vector<Eigen::MatrixXcd> fourier_to_grid(const FourierBox& box, const std::vector<Eigen::MatrixXcd>& coeffs,
                                              const TorusGrid& grid) {
    if (box.n() != grid.n()) throw ParameterError("fourier_to_grid: dimension mismatch");
    if (grid.G() <= 2 * box.K()) throw ParameterError("fourier_to_grid: grid aliases the Fourier box (need G > 2K)");
    if (coeffs.size() != box.size()) throw ParameterError("fourier_to_grid: coefficient count mismatch");
    const Eigen::Index rows = coeffs.empty() ? 0 : coeffs[0].rows();
    const Eigen::Index cols = coeffs.empty() ? 0 : coeffs[0].cols();
    const auto m = static_cast<std::size_t>(rows * cols);
    std::vector<Eigen::MatrixXcd> out(grid.size(), Eigen::MatrixXcd::Zero(rows, cols));
    if (m == 0) return out;
    FftwBuffer buf(grid.size() * m);
    Plan plan(grid, static_cast<int>(m), buf.p, FFTW_BACKWARD);
    for (std::size_t f = 0; f < box.size(); ++f) {
        const auto dst = grid_flat(box.vector(f), grid.G()) * m;
        std::memcpy(buf.p + dst, coeffs[f].data(), sizeof(fftw_complex) * m);
    }
    fftw_execute(plan.p);
    for (std::size_t g = 0; g < grid.size(); ++g)
        std::memcpy(static_cast<void*>(out[g].data()), buf.p + g * m, sizeof(fftw_complex) * m);
    return out;
}

std::vector<Eigen::MatrixXcd> grid_to_fourier(const TorusGrid& grid, const std::vector<Eigen::MatrixXcd>& values,
                                              const FourierBox& out_box, std::vector<Eigen::MatrixXcd>* dropped) {
    if (out_box.n() != grid.n()) throw ParameterError("grid_to_fourier: dimension mismatch");
    if (values.size() != grid.size()) throw ParameterError("grid_to_fourier: value count mismatch");
    const int kmax = (grid.G() - 1) / 2;
    if (out_box.K() > kmax) throw ParameterError("grid_to_fourier: output box exceeds grid resolution");
    const Eigen::Index rows = values.empty() ? 0 : values[0].rows();
    const Eigen::Index cols = values.empty() ? 0 : values[0].cols();
    const auto m = static_cast<std::size_t>(rows * cols);
    std::vector<Eigen::MatrixXcd> out(out_box.size(), Eigen::MatrixXcd::Zero(rows, cols));
    if (m == 0) return out;
    FftwBuffer buf(grid.size() * m);
    Plan plan(grid, static_cast<int>(m), buf.p, FFTW_FORWARD);
    for (std::size_t g = 0; g < grid.size(); ++g) std::memcpy(buf.p + g * m, values[g].data(), sizeof(fftw_complex) * m);
    fftw_execute(plan.p);
    const double scale = 1.0 / static_cast<double>(grid.size());
    auto extract = [&](const std::vector<int>& k) {
        Eigen::MatrixXcd c(rows, cols);
        std::memcpy(static_cast<void*>(c.data()), buf.p + grid_flat(k, grid.G()) * m, sizeof(fftw_complex) * m);
        return Eigen::MatrixXcd(c * scale);
    };
    for (std::size_t f = 0; f < out_box.size(); ++f) out[f] = extract(out_box.vector(f));
    if (dropped) {
        dropped->clear();
        const FourierBox full(grid.n(), kmax);
        for (std::size_t f = 0; f < full.size(); ++f) {
            const auto k = full.vector(f);
            if (out_box.flat(k) == out_box.size()) dropped->push_back(extract(k));
        }
    }
    return out;
}

}  // namespace hkam
