#pragma once

#include "gbo/errors.hpp"
#include "gbo/fft.hpp"

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

namespace gbo {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;

// Periodic grid of N points on [0, L), L = 2 pi 2^{K_L}.
class Grid {
public:
    Grid() = default;
    Grid(int K_L, int N) : K_L_(K_L), N_(N) {
        require(N >= 8, "grid size N must be at least 8");
        require((N & (N - 1)) == 0, "grid size N must be a power of two");
        require(K_L >= -8 && K_L <= 16, "K_L out of range [-8, 16]");
        L_ = 2.0 * pi * std::ldexp(1.0, K_L);
        dx_ = L_ / N;
    }

    int K_L() const { return K_L_; }
    int size() const { return N_; }
    double period() const { return L_; }
    double dx() const { return dx_; }
    double dk() const { return 2.0 * pi / L_; }
    double x(int n) const { return n * dx_; }

    // Frequency of FFT-ordered index j; index N/2 is the Nyquist mode -N/2 * dk.
    double freq(int j) const { return (j < N_ / 2 ? j : j - N_) * dk(); }
    int nyquist_index() const { return N_ / 2; }
    double nyquist() const { return 0.5 * N_ * dk(); }

    // FFT index of integer wavenumber n (frequency n*dk), or -1 if off-grid.
    int index_of(long n) const {
        if (n < -N_ / 2 || n >= N_ / 2) return -1;
        return static_cast<int>(n >= 0 ? n : n + N_);
    }

    std::vector<double> frequencies() const {
        std::vector<double> f(N_);
        for (int j = 0; j < N_; ++j) f[j] = freq(j);
        return f;
    }

    bool operator==(const Grid& o) const { return K_L_ == o.K_L_ && N_ == o.N_; }

private:
    int K_L_ = 0;
    int N_ = 0;
    double L_ = 0;
    double dx_ = 0;
};

inline Grid make_grid(int K_L, int N) { return Grid(K_L, N); }

// Immutable samples plus spectral coefficients f(x) = sum_j c_j e^{i xi_j x}.
class Field {
public:
    Field() = default;

    static Field from_samples(const Grid& g, std::vector<double> s) {
        require(static_cast<int>(s.size()) == g.size(), "sample count does not match grid");
        std::vector<cplx> z(s.begin(), s.end());
        auto c = fft::forward(z);
        return Field(g, std::move(z), std::move(c), true);
    }

    static Field from_samples(const Grid& g, std::vector<cplx> s) {
        require(static_cast<int>(s.size()) == g.size(), "sample count does not match grid");
        auto c = fft::forward(s);
        return Field(g, std::move(s), std::move(c), false);
    }

    // When real is set the inverse transform is projected onto its real part.
    static Field from_spectrum(const Grid& g, std::vector<cplx> c, bool real) {
        require(static_cast<int>(c.size()) == g.size(), "coefficient count does not match grid");
        auto s = fft::inverse(c);
        if (real) {
            for (auto& v : s) v = v.real();
            // keep the spectrum consistent with the stored samples
            c = fft::forward(s);
        }
        return Field(g, std::move(s), std::move(c), real);
    }

    template <class F>
    static Field sample(const Grid& g, F&& f) {
        using R = decltype(f(0.0));
        if constexpr (std::is_same_v<R, cplx>) {
            std::vector<cplx> s(g.size());
            for (int n = 0; n < g.size(); ++n) s[n] = f(g.x(n));
            return from_samples(g, std::move(s));
        } else {
            std::vector<double> s(g.size());
            for (int n = 0; n < g.size(); ++n) s[n] = f(g.x(n));
            return from_samples(g, std::move(s));
        }
    }

    static Field zeros(const Grid& g, bool real = true) {
        return Field(g, std::vector<cplx>(g.size()), std::vector<cplx>(g.size()), real);
    }

    const Grid& grid() const { return grid_; }
    int size() const { return grid_.size(); }
    bool is_real() const { return real_; }
    const std::vector<cplx>& samples() const { return samples_; }
    const std::vector<cplx>& spectrum() const { return spectrum_; }
    cplx operator[](int n) const { return samples_[n]; }
    cplx coeff(int j) const { return spectrum_[j]; }

    std::vector<double> real_samples() const {
        std::vector<double> r(samples_.size());
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = samples_[i].real();
        return r;
    }

    Field as_complex() const { return Field(grid_, samples_, spectrum_, false); }

    // Band-limited evaluation at an arbitrary point (sparse over nonzero modes).
    cplx eval(double x, int derivative = 0) const {
        cplx acc = 0;
        for (int j = 0; j < size(); ++j) {
            if (spectrum_[j] == cplx(0)) continue;
            const double k = grid_.freq(j);
            cplx w = std::pow(cplx(0, k), derivative);
            acc += spectrum_[j] * w * std::exp(cplx(0, k * x));
        }
        return real_ ? cplx(acc.real(), 0) : acc;
    }

private:
    Field(Grid g, std::vector<cplx> s, std::vector<cplx> c, bool real)
        : grid_(g), samples_(std::move(s)), spectrum_(std::move(c)), real_(real) {}

    Grid grid_;
    std::vector<cplx> samples_;
    std::vector<cplx> spectrum_;
    bool real_ = true;
};

inline void require_same_grid(const Field& a, const Field& b) {
    require(a.grid() == b.grid(), "fields live on different grids");
}

inline Field operator+(const Field& a, const Field& b) {
    require_same_grid(a, b);
    std::vector<cplx> c(a.size());
    for (int j = 0; j < a.size(); ++j) c[j] = a.coeff(j) + b.coeff(j);
    return Field::from_spectrum(a.grid(), std::move(c), a.is_real() && b.is_real());
}

inline Field operator-(const Field& a, const Field& b) {
    require_same_grid(a, b);
    std::vector<cplx> c(a.size());
    for (int j = 0; j < a.size(); ++j) c[j] = a.coeff(j) - b.coeff(j);
    return Field::from_spectrum(a.grid(), std::move(c), a.is_real() && b.is_real());
}

inline Field operator*(cplx s, const Field& a) {
    std::vector<cplx> c(a.spectrum());
    for (auto& v : c) v *= s;
    return Field::from_spectrum(a.grid(), std::move(c), a.is_real() && s.imag() == 0.0);
}

inline Field operator*(double s, const Field& a) { return cplx(s, 0) * a; }

// Pointwise product (no dealiasing).
inline Field pointwise(const Field& a, const Field& b) {
    require_same_grid(a, b);
    std::vector<cplx> s(a.size());
    for (int n = 0; n < a.size(); ++n) s[n] = a[n] * b[n];
    if (a.is_real() && b.is_real()) {
        std::vector<double> r(a.size());
        for (int n = 0; n < a.size(); ++n) r[n] = s[n].real();
        return Field::from_samples(a.grid(), std::move(r));
    }
    return Field::from_samples(a.grid(), std::move(s));
}

} // namespace gbo
