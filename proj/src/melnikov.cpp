#include "hkam/melnikov.hpp"
#include "hkam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

namespace hkam {

double Frequency::dot(const std::vector<int>& k) const {
    double s = 0.0;
    for (std::size_t i = 0; i < k.size() && i < omega.size(); ++i) s += k[i] * omega[i];
    return s;
}

void Frequency::validate() const {
    if (omega.empty()) throw ParameterError("frequency vector is empty");
    for (double v : omega)
        if (!(v >= 0.0 && v < 2.0 * std::numbers::pi)) throw ParameterError("frequency component outside [0, 2 pi)");
}

A1Report check_A1(const NormalFormMatrix& n) {
    const auto eig = diagonalize_normal_form(n);
    const auto& cs = n.basis().clusters();
    A1Report r;
    r.c0_lower = std::numeric_limits<double>::infinity();
    r.c0_gap = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < cs.size(); ++a) {
        r.c0_lower = std::min(r.c0_lower, eig.eigenvalues[a].minCoeff() / cs[a].energy);
        for (std::size_t b = 0; b < cs.size(); ++b) {
            if (a == b) continue;
            double dist = std::numeric_limits<double>::infinity();
            for (double x : eig.eigenvalues[a])
                for (double y : eig.eigenvalues[b]) dist = std::min(dist, std::abs(x - y));
            r.c0_gap = std::min(r.c0_gap, dist / std::abs(cs[a].energy - cs[b].energy));
        }
    }
    if (cs.size() < 2) r.c0_gap = 1.0;
    return r;
}

namespace {

// Calls f(k, a, b, divisor, bound) for every scanned divisor.
template <class F>
void scan_divisors(const EigenBlocks& eig, const Frequency& w, int K, F&& f) {
    const auto& cs = eig.basis->clusters();
    const FourierBox box(w.n(), K);
    const std::size_t zero = box.zero();
    for (std::size_t fk = 0; fk < box.size(); ++fk) {
        const auto k = box.vector(fk);
        const double kw = w.dot(k);
        for (std::size_t a = 0; a < cs.size(); ++a) {
            for (std::size_t b = 0; b < cs.size(); ++b) {
                if (fk == zero && a == b) continue;
                const double weight = 1.0 + std::abs(cs[a].energy - cs[b].energy);
                for (double alpha : eig.eigenvalues[a])
                    for (double beta : eig.eigenvalues[b]) f(k, a, b, kw - alpha + beta, weight);
            }
        }
    }
}

}  // namespace

DivisorReport check_divisors(const EigenBlocks& eig, const Frequency& w, double kappa, int K) {
    if (kappa < 0.0) throw ParameterError("check_divisors: kappa must be >= 0");
    if (K < 0) throw ParameterError("check_divisors: K must be >= 0");
    DivisorReport r;
    r.kappa = kappa;
    r.K = K;
    r.min_ratio = std::numeric_limits<double>::infinity();
    const auto& cs = eig.basis->clusters();
    scan_divisors(eig, w, K, [&](const std::vector<int>& k, std::size_t a, std::size_t b, double div, double weight) {
        const double ratio = std::abs(div) / weight;
        r.min_ratio = std::min(r.min_ratio, ratio);
        // kappa = 0 still rejects an exact resonance.
        if (ratio < kappa || div == 0.0)
            r.violations.push_back({k, cs[a].energy, cs[b].energy, div, kappa * weight});
    });
    r.passed = r.violations.empty();
    return r;
}

DivisorReport check_divisors(const NormalFormMatrix& n, const Frequency& w, double kappa, int K) {
    return check_divisors(diagonalize_normal_form(n), w, kappa, K);
}

void write_violations_csv(std::ostream& os, const DivisorReport& r, int n) {
    for (int i = 0; i < n; ++i) os << 'k' << i + 1 << ',';
    os << "wa,wb,divisor,bound\n";
    char buf[96];
    for (const auto& v : r.violations) {
        for (int x : v.k) os << x << ',';
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", v.divisor, v.bound);
        os << v.wa << ',' << v.wb << ',' << buf << '\n';
    }
}

bool diophantine_member(const Frequency& w, double kappa, double tau, int K) {
    if (!(tau > w.n())) throw ParameterError("diophantine_member: tau must exceed n");
    const FourierBox box(w.n(), K);
    const std::size_t zero = box.zero();
    for (std::size_t f = 0; f < box.size(); ++f) {
        if (f == zero) continue;
        const auto k = box.vector(f);
        int norm = 0;
        for (int v : k) norm = std::max(norm, std::abs(v));
        const double x = w.dot(k);
        const double dist = std::abs(x - std::round(x));  // min_j |k.omega + j|
        if (dist == 0.0 || dist < kappa / std::pow(norm, tau)) return false;
    }
    return true;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

Frequency sample_frequency(int n, const SamplingBox& box, std::uint64_t seed, std::int64_t i) {
    std::mt19937_64 gen(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(i))));
    std::uniform_real_distribution<double> u(box.lo, box.hi);
    Frequency w;
    for (int j = 0; j < n; ++j) w.omega.push_back(u(gen));
    return w;
}

double min_divisor_ratio(const EigenBlocks& eig, const Frequency& w, int K) {
    double best = std::numeric_limits<double>::infinity();
    scan_divisors(eig, w, K, [&](const std::vector<int>&, std::size_t, std::size_t, double div, double weight) {
        best = std::min(best, std::abs(div) / weight);
    });
    return best;
}

namespace {

MeasureEstimate summarize(std::int64_t samples, std::int64_t failed) {
    MeasureEstimate m;
    m.samples = samples;
    m.excluded_fraction = static_cast<double>(failed) / static_cast<double>(samples);
    const double p = m.excluded_fraction;
    m.confidence_halfwidth = 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
    return m;
}

bool fails(double ratio, double kappa) { return ratio < kappa || ratio == 0.0; }

}  // namespace

MeasureEstimate estimate_excluded_measure(const NormalFormMatrix& n, double kappa, int K, std::int64_t samples,
                                          std::uint64_t seed, const SamplingBox& box, int n_freq) {
    if (samples < 100) throw ParameterError("estimate_excluded_measure: need at least 100 samples");
    const auto eig = diagonalize_normal_form(n);
    std::int64_t failed = 0;
    for (std::int64_t i = 0; i < samples; ++i)
        if (fails(min_divisor_ratio(eig, sample_frequency(n_freq, box, seed, i), K), kappa)) ++failed;
    return summarize(samples, failed);
}

MeasureGrid estimate_measure_grid(const NormalFormMatrix& n, const std::vector<double>& kappas,
                                  const std::vector<int>& Ks, std::int64_t samples, std::uint64_t seed,
                                  const SamplingBox& box, int n_freq) {
    if (samples < 100) throw ParameterError("estimate_measure_grid: need at least 100 samples");
    if (kappas.empty() || Ks.empty()) throw ParameterError("estimate_measure_grid: empty grid");
    const auto eig = diagonalize_normal_form(n);
    MeasureGrid g;
    g.kappas = kappas;
    g.Ks = Ks;
    std::vector<std::vector<std::int64_t>> failed(Ks.size(), std::vector<std::int64_t>(kappas.size(), 0));
    for (std::int64_t i = 0; i < samples; ++i) {
        const auto w = sample_frequency(n_freq, box, seed, i);
        for (std::size_t ik = 0; ik < Ks.size(); ++ik) {
            const double ratio = min_divisor_ratio(eig, w, Ks[ik]);
            for (std::size_t j = 0; j < kappas.size(); ++j)
                if (fails(ratio, kappas[j])) ++failed[ik][j];
        }
    }
    for (std::size_t ik = 0; ik < Ks.size(); ++ik) {
        g.table.emplace_back();
        for (std::size_t j = 0; j < kappas.size(); ++j) g.table.back().push_back(summarize(samples, failed[ik][j]));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (std::size_t j = 0; j < kappas.size(); ++j) {
        const double f = g.table[0][j].excluded_fraction;
        if (kappas[j] <= 0.0 || f <= 0.0) continue;
        const double x = std::log(kappas[j]), y = std::log(f);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++cnt;
    }
    g.slope = cnt >= 2 ? (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx) : std::numeric_limits<double>::quiet_NaN();
    return g;
}

}  // namespace hkam
