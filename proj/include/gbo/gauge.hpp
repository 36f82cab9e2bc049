#pragma once

#include "gbo/spectral.hpp"

#include <cmath>
#include <ostream>
#include <vector>

namespace gbo {

// e^{iA} with symbol a(y, xi) = (1+alpha)^{-1} Phi_band(y) xi |xi|^{-alpha}, right quantized,
// acting on the frequencies in the support of chi_k.
struct GaugeOperator {
    double alpha = 1.0;
    double k = 1.0;
    double kprime = 0.0;
    Field phi_band;
    std::vector<int> band;  // FFT indices with chi_k(xi) > 0

    const Grid& grid() const { return phi_band.grid(); }

    static double weight(double xi, double alpha) {
        return xi == 0.0 ? 0.0 : xi * std::pow(std::abs(xi), -alpha);
    }

    double symbol(double phi_value, double xi) const { return phi_value * weight(xi, alpha) / (1.0 + alpha); }

    double symbol_at(int n, double xi) const { return symbol(phi_band[n].real(), xi); }
};

inline double gauge_kprime(double alpha, double k) { return 0.5 * (1.0 - alpha) * k; }

inline std::vector<int> block_support(const Grid& g, double k) {
    std::vector<int> idx;
    for (int j = 0; j < g.size(); ++j)
        if (j != g.nyquist_index() && lp::chi(k, g.freq(j)) > 0.0) idx.push_back(j);
    return idx;
}

// Gauge built from a given phase field (Phi_band itself); used for synthetic phases.
inline GaugeOperator gauge_from_phase(const Field& phase, double alpha, double k) {
    require(phase.is_real(), "gauge phase must be real");
    require(resolvable(phase.grid(), k), "gauge block not resolvable on this grid");
    GaugeOperator G;
    G.alpha = alpha;
    G.k = k;
    G.kprime = gauge_kprime(alpha, k);
    G.phi_band = phase;
    G.band = block_support(phase.grid(), k);
    return G;
}

inline GaugeOperator build_gauge(const Field& phi, double alpha, double k) {
    require(phi.is_real(), "build_gauge needs a real field");
    const double kp = gauge_kprime(alpha, k);
    require(resolvable(phi.grid(), k), "gauge block not resolvable on this grid");
    require(kp <= k - 1.0, "band (k', k) is empty for this alpha and k");
    GaugeOperator G = gauge_from_phase(band_antiderivative(P_band(phi, kp, k)), alpha, k);
    G.kprime = kp;
    return G;
}

inline double block_tail(const Field& f, double k) {
    return outside_fraction(f, [k](double xi) { return lp::chi(k, xi) > 0.0; });
}

// Right quantization by one quadrature per band frequency; no input check.
inline Field apply_exp_gauge_unchecked(const GaugeOperator& G, const Field& f) {
    require_same_grid(G.phi_band, f);
    const Grid& g = f.grid();
    const int N = g.size();
    std::vector<double> w(N);
    for (int n = 0; n < N; ++n) w[n] = G.phi_band[n].real() / (1.0 + G.alpha);
    std::vector<cplx> c(N);
    for (int j : G.band) {
        const double xi = g.freq(j);
        const double m = GaugeOperator::weight(xi, G.alpha);
        cplx acc = 0;
        for (int n = 0; n < N; ++n) acc += std::polar(1.0, w[n] * m - xi * g.x(n)) * f[n];
        c[j] = acc / static_cast<double>(N);
    }
    return Field::from_spectrum(g, std::move(c), f.is_real());
}

inline Field apply_exp_gauge(const GaugeOperator& G, const Field& f) {
    require(block_tail(f, G.k) <= 1e-8, "apply_exp_gauge needs a P_k band-limited input");
    return apply_exp_gauge_unchecked(G, f);
}

// psi_k^+ = P_k^+ e^{iA} P_k^+ input, with the gauge built from the background.
inline Field conjugated_variable(const Field& input, const Field& background, double alpha, double k) {
    require(input.is_real() && background.is_real(), "conjugated_variable needs real inputs");
    GaugeOperator G = build_gauge(background, alpha, k);
    return P_k_plus(apply_exp_gauge(G, P_k_plus(input, k)), k);
}

// ---------------------------------------------------------------- kernel diagnostics

struct GaugeKernel {
    Grid grid;
    std::vector<cplx> K;  // row-major K[x * N + y]

    cplx operator()(int x, int y) const { return K[static_cast<std::size_t>(x) * grid.size() + y]; }
};

// K(x, y) = (1/L) sum_band e^{i(x-y) xi} e^{i a(y, xi)}, so e^{iA} f = sum_y K f dx.
inline GaugeKernel gauge_kernel(const GaugeOperator& G) {
    const Grid& g = G.grid();
    const int N = g.size();
    require(N <= 4096, "dense gauge kernel limited to N <= 4096");
    GaugeKernel out{g, std::vector<cplx>(static_cast<std::size_t>(N) * N)};
    std::vector<cplx> col(N);
    for (int y = 0; y < N; ++y) {
        std::fill(col.begin(), col.end(), cplx(0));
        for (int j : G.band) {
            const double xi = g.freq(j);
            col[j] = std::polar(1.0 / g.period(), G.symbol_at(y, xi) - xi * g.x(y));
        }
        auto vals = fft::inverse(col);
        for (int x = 0; x < N; ++x) out.K[static_cast<std::size_t>(x) * N + y] = vals[x];
    }
    return out;
}

inline Field kernel_apply(const GaugeKernel& K, const Field& f) {
    const int N = K.grid.size();
    std::vector<cplx> s(N);
    for (int x = 0; x < N; ++x) {
        cplx acc = 0;
        for (int y = 0; y < N; ++y) acc += K(x, y) * f[y];
        s[x] = acc * K.grid.dx();
    }
    return Field::from_samples(K.grid, std::move(s));
}

inline double torus_distance(double x, double y, double L) {
    double d = std::fmod(std::abs(x - y), L);
    return std::min(d, L - d);
}

// sup <d>^2 |K| * 2 pi / |band| with |band| the measure of the band frequency set.
inline double kernel_decay_statistic(const GaugeKernel& K, std::size_t band_count) {
    const Grid& g = K.grid;
    const int N = g.size();
    const double measure = band_count * g.dk();
    double sup = 0;
    for (int x = 0; x < N; ++x)
        for (int y = 0; y < N; ++y) {
            const double d = torus_distance(g.x(x), g.x(y), g.period());
            sup = std::max(sup, (1.0 + d * d) * std::abs(K(x, y)));
        }
    return sup * 2.0 * pi / measure;
}

// max_x |e^{iA} f|(x) / (<.>^{-2} * |f|)(x) on the torus.
inline double pointwise_domination_ratio(const Field& gauged, const Field& f) {
    const Grid& g = f.grid();
    const int N = g.size();
    std::vector<cplx> kern(N), absf(N);
    for (int n = 0; n < N; ++n) {
        const double d = torus_distance(g.x(n), 0.0, g.period());
        kern[n] = 1.0 / (1.0 + d * d);
        absf[n] = std::abs(f[n]);
    }
    auto ck = fft::forward(kern), cf = fft::forward(absf);
    std::vector<cplx> prod(N);
    for (int j = 0; j < N; ++j) prod[j] = ck[j] * cf[j] * g.period();
    auto conv = fft::inverse(prod);
    double worst = 0;
    const double floor = 1e-12 * linf_norm(gauged);
    for (int n = 0; n < N; ++n)
        if (std::abs(gauged[n]) > floor) worst = std::max(worst, std::abs(gauged[n]) / conv[n].real());
    return worst;
}

inline void write_kernel_csv(const GaugeKernel& K, std::ostream& os) {
    os << "x,y,re,im\n";
    os.precision(17);
    for (int x = 0; x < K.grid.size(); ++x)
        for (int y = 0; y < K.grid.size(); ++y)
            os << K.grid.x(x) << ',' << K.grid.x(y) << ',' << K(x, y).real() << ',' << K(x, y).imag() << '\n';
}

} // namespace gbo
