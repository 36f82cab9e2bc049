#pragma once

#include "gbo/grid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace gbo {

using Multiplier = std::function<cplx(double)>;

// True when m(-xi) = conj(m(xi)) on every non-Nyquist grid frequency.
inline bool hermitian_on(const Grid& g, const std::vector<cplx>& mv) {
    const int N = g.size();
    for (int j = 1; j < N / 2; ++j) {
        const cplx a = mv[j], b = mv[N - j];
        if (std::abs(a - std::conj(b)) > 1e-14 * (1.0 + std::abs(a))) return false;
    }
    return mv[0].imag() == 0.0;
}

inline Field apply_multiplier(const Field& f, const Multiplier& m) {
    const Grid& g = f.grid();
    const int N = g.size();
    std::vector<cplx> mv(N);
    for (int j = 0; j < N; ++j) {
        mv[j] = m(g.freq(j));
        if (!std::isfinite(mv[j].real()) || !std::isfinite(mv[j].imag()))
            throw InvalidArgument("multiplier is not finite at xi = " + std::to_string(g.freq(j)));
    }
    std::vector<cplx> c(f.spectrum());
    for (int j = 0; j < N; ++j) c[j] *= mv[j];
    bool real = f.is_real() && hermitian_on(g, mv);
    if (real && mv[g.nyquist_index()].imag() != 0.0) c[g.nyquist_index()] = 0;
    return Field::from_spectrum(g, std::move(c), real);
}

inline cplx dispersive_symbol(double xi, double alpha) {
    return xi == 0.0 ? cplx(0) : cplx(0, xi * std::pow(std::abs(xi), alpha));
}

// |D|^alpha d/dx, symbol i xi |xi|^alpha.
inline Field dispersive_multiplier(const Field& f, double alpha) {
    require(alpha >= 0.0 && alpha <= 3.0, "alpha outside [0, 3]");
    return apply_multiplier(f, [alpha](double xi) { return dispersive_symbol(xi, alpha); });
}

inline Field derivative(const Field& f) {
    return apply_multiplier(f, [](double xi) { return cplx(0, xi); });
}

// |D|^s with value 0 at xi = 0 (s may be negative).
inline Field abs_d_power(const Field& f, double s) {
    return apply_multiplier(f, [s](double xi) {
        return xi == 0.0 ? cplx(0) : cplx(std::pow(std::abs(xi), s), 0);
    });
}

// <D>^s, symbol (1 + xi^2)^{s/2}.
inline Field japanese_power(const Field& f, double s) {
    return apply_multiplier(f, [s](double xi) { return cplx(std::pow(1.0 + xi * xi, 0.5 * s), 0); });
}

// ---------------------------------------------------------------- Littlewood-Paley

namespace lp {

inline double theta(double s) {
    if (s <= 1.0) return 1.0;
    if (s >= 2.0) return 0.0;
    const double c = std::cos(0.5 * pi * (s - 1.0));
    return c * c;
}

// chi_{<= a}(xi) = theta(|xi| / 2^a); a may be fractional.
inline double chi_le(double a, double xi) { return theta(std::abs(xi) / std::exp2(a)); }

// Block k >= 1, supported in 2^{k-1} <= |xi| <= 2^{k+1}.
inline double chi(double k, double xi) { return chi_le(k, xi) - chi_le(k - 1.0, xi); }

inline double chi_plus(double k, double xi) { return xi >= 0.0 ? chi(k, xi) : 0.0; }
inline double chi_minus(double k, double xi) { return xi <= 0.0 ? chi(k, xi) : 0.0; }

// P_{<k} = sum_{1<=j<k} chi_j + chi_{<=0}.
inline double below(double k, double xi) { return chi_le(k - 1.0, xi); }
inline double at_least(double k, double xi) { return 1.0 - below(k, xi); }

// Band (a, b): sum of blocks strictly between a and b, so below(b) = chi_le(a) + band(a, b).
inline double band(double a, double b, double xi) { return chi_le(b - 1.0, xi) - chi_le(a, xi); }

} // namespace lp

enum class LPKind { Block, BlockPlus, BlockMinus, Below, AtLeast, LowEnd, Band };

struct LPSpec {
    LPKind kind = LPKind::Block;
    double k = 0;  // block index (or upper index b of a band)
    double a = 0;  // lower index of a band; LowEnd uses chi_{<= a}
};

inline double lp_symbol(const LPSpec& s, double xi) {
    switch (s.kind) {
    case LPKind::Block: return lp::chi(s.k, xi);
    case LPKind::BlockPlus: return lp::chi_plus(s.k, xi);
    case LPKind::BlockMinus: return lp::chi_minus(s.k, xi);
    case LPKind::Below: return lp::below(s.k, xi);
    case LPKind::AtLeast: return lp::at_least(s.k, xi);
    case LPKind::LowEnd: return lp::chi_le(s.a, xi);
    case LPKind::Band: return lp::band(s.a, s.k, xi);
    }
    return 0.0;
}

// Highest frequency touched by the projection's transition region.
inline double lp_top(const LPSpec& s) {
    switch (s.kind) {
    case LPKind::LowEnd: return std::exp2(s.a + 1.0);
    case LPKind::Below:
    case LPKind::AtLeast:
    case LPKind::Band: return std::exp2(s.k);
    default: return std::exp2(s.k + 1.0);
    }
}

inline bool resolvable(const Grid& g, double k) { return std::exp2(k + 1.0) <= g.nyquist() * (1 + 1e-12); }

inline Field lp_project(const Field& f, const LPSpec& s) {
    require(lp_top(s) <= f.grid().nyquist() * (1 + 1e-12),
            "Littlewood-Paley block not resolvable on this grid (k = " + std::to_string(s.k) + ")");
    if (s.kind == LPKind::Band) require(s.a <= s.k - 1.0, "band (a, b) requires a <= b - 1");
    return apply_multiplier(f, [&s](double xi) { return cplx(lp_symbol(s, xi), 0); });
}

inline Field P_k(const Field& f, double k) { return lp_project(f, {LPKind::Block, k, 0}); }
inline Field P_k_plus(const Field& f, double k) { return lp_project(f, {LPKind::BlockPlus, k, 0}); }
inline Field P_below(const Field& f, double k) { return lp_project(f, {LPKind::Below, k, 0}); }
inline Field P_at_least(const Field& f, double k) { return lp_project(f, {LPKind::AtLeast, k, 0}); }
inline Field P_low_end(const Field& f, double a) { return lp_project(f, {LPKind::LowEnd, 0, a}); }
inline Field P_band(const Field& f, double a, double b) { return lp_project(f, {LPKind::Band, b, a}); }

// ---------------------------------------------------------------- norms

inline double l2_norm(const Field& f) {
    double s = 0;
    for (const auto& c : f.spectrum()) s += std::norm(c);
    return std::sqrt(f.grid().period() * s);
}

inline double l2_norm_physical(const Field& f) {
    double s = 0;
    for (const auto& v : f.samples()) s += std::norm(v);
    return std::sqrt(f.grid().dx() * s);
}

inline double linf_norm(const Field& f) {
    double m = 0;
    for (const auto& v : f.samples()) m = std::max(m, std::abs(v));
    return m;
}

inline double lp_norm(const Field& f, double p) {
    if (std::isinf(p)) return linf_norm(f);
    double s = 0;
    for (const auto& v : f.samples()) s += std::pow(std::abs(v), p);
    return std::pow(f.grid().dx() * s, 1.0 / p);
}

inline double hs_norm(const Field& f, double s) {
    const Grid& g = f.grid();
    double acc = 0;
    for (int j = 0; j < g.size(); ++j) {
        const double xi = g.freq(j);
        acc += std::pow(1.0 + xi * xi, s) * std::norm(f.coeff(j));
    }
    return std::sqrt(g.period() * acc);
}

inline cplx inner(const Field& f, const Field& h) {
    require_same_grid(f, h);
    cplx s = 0;
    for (int j = 0; j < f.size(); ++j) s += f.coeff(j) * std::conj(h.coeff(j));
    return f.grid().period() * s;
}

inline double mean(const Field& f) { return f.coeff(0).real(); }

// Relative energy above the 2/3 cutoff, used as the "resolved" test.
inline double spectral_tail(const Field& f, double fraction = 2.0 / 3.0) {
    const Grid& g = f.grid();
    double tail = 0, total = 0;
    for (int j = 0; j < g.size(); ++j) {
        const double e = std::norm(f.coeff(j));
        total += e;
        if (std::abs(g.freq(j)) > fraction * g.nyquist()) tail += e;
    }
    return total == 0 ? 0.0 : std::sqrt(tail / total);
}

// Relative L2 mass outside a multiplier's support (mass of (1 - 1_{m != 0}) f).
inline double outside_fraction(const Field& f, const std::function<bool(double)>& inside) {
    const Grid& g = f.grid();
    double out = 0, total = 0;
    for (int j = 0; j < g.size(); ++j) {
        const double e = std::norm(f.coeff(j));
        total += e;
        if (!inside(g.freq(j))) out += e;
    }
    return total == 0 ? 0.0 : std::sqrt(out / total);
}

// ---------------------------------------------------------------- misc operators

// Phi with dPhi/dx = f and zero mean.
inline Field band_antiderivative(const Field& f) {
    const double rms = l2_norm(f) / std::sqrt(f.grid().period());
    require(std::abs(f.coeff(0)) <= 1e-10 * std::max(rms, 1e-300) || rms == 0.0,
            "band_antiderivative needs a zero-mean input");
    return apply_multiplier(f, [](double xi) { return xi == 0.0 ? cplx(0) : cplx(0, -1.0 / xi); });
}

// (T_y f)(x) = f(x + y).
inline Field translate(const Field& f, double y) {
    return apply_multiplier(f, [y](double xi) { return std::exp(cplx(0, xi * y)); });
}

inline double dealias_cutoff(const Grid& g) { return 2.0 / 3.0 * g.nyquist(); }

inline Field dealias(const Field& f) {
    const double cut = dealias_cutoff(f.grid());
    std::vector<cplx> c(f.spectrum());
    for (int j = 0; j < f.size(); ++j)
        if (std::abs(f.grid().freq(j)) > cut) c[j] = 0;
    return Field::from_spectrum(f.grid(), std::move(c), f.is_real());
}

} // namespace gbo
