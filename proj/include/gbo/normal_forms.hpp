#pragma once

#include "gbo/evolution.hpp"
#include "gbo/fit.hpp"
#include "gbo/gauge.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace gbo {

inline double omega(double xi, double alpha) { return -xi * std::pow(std::abs(xi), alpha); }

inline double resonance(double xi1, double xi2, double alpha) {
    return omega(xi1, alpha) + omega(xi2, alpha) - omega(xi1 + xi2, alpha);
}

struct RatioStats {
    double min = INFINITY;
    double max = 0;
    std::size_t count = 0;
};

// |Omega| / (|xi_min| |xi_max|^alpha) over sample pairs, min/max over {|xi1|, |xi2|, |xi1+xi2|}.
inline RatioStats resonance_equiv_check(double alpha, const std::vector<std::array<double, 2>>& samples) {
    RatioStats s;
    for (const auto& p : samples) {
        const double a = std::abs(p[0]), b = std::abs(p[1]), c = std::abs(p[0] + p[1]);
        const double lo = std::min({a, b, c}), hi = std::max({a, b, c});
        require(lo >= 1e-3, "resonance sample lies on a vanishing line");
        const double r = std::abs(resonance(p[0], p[1], alpha)) / (lo * std::pow(hi, alpha));
        s.min = std::min(s.min, r);
        s.max = std::max(s.max, r);
        ++s.count;
    }
    return s;
}

// Pairs (±2^i, ±2^j), i, j in [0, top], skipping xi1 + xi2 = 0.
inline std::vector<std::array<double, 2>> dyadic_sweep(int top) {
    std::vector<std::array<double, 2>> out;
    for (int i = 0; i <= top; ++i)
        for (int j = 0; j <= top; ++j)
            for (int s1 : {-1, 1})
                for (int s2 : {-1, 1}) {
                    const double a = s1 * std::exp2(i), b = s2 * std::exp2(j);
                    if (a + b != 0.0) out.push_back({a, b});
                }
    return out;
}

// ---------------------------------------------------------------- bilinear symbols

enum class SymbolId { Q2k, QexpI, QexpII, Qexph, Qlin };

inline const char* symbol_name(SymbolId id) {
    switch (id) {
    case SymbolId::Q2k: return "Q2k";
    case SymbolId::QexpI: return "QexpI";
    case SymbolId::QexpII: return "QexpII";
    case SymbolId::Qexph: return "Qexph";
    case SymbolId::Qlin: return "Qlin";
    }
    return "?";
}

inline constexpr std::array<SymbolId, 5> all_symbols = {SymbolId::Q2k, SymbolId::QexpI, SymbolId::QexpII,
                                                        SymbolId::Qexph, SymbolId::Qlin};

// Symbols m(xi1, xi2) of the quadratic terms; xi1 pairs with the first argument.
//   Q2k(u,v)   = P_k^+(u_{>=k} v_{<k}') + 1/2 (P_k^+(u_{>=k} v_{>=k}))' + [P_k^+, u_{<k}] v'
//   QexpI      = P_k^+-block of (d_x u_b) v,           u_b = P_{(k',k)} u
//   QexpII     = (|D|^alpha u_b) P_k^+ v
//   Qexph(h)   = -xi1 xi2 |(1-h) xi1 + xi2|^{alpha-2} on u_b x P_k^+ v
//   Qlin(v,phi)= v_{(0,k)} d_x P_k^+ phi
struct BilinearSymbol {
    SymbolId id = SymbolId::Q2k;
    double k = 1;
    double alpha = 1;
    double h = 0;

    double kprime() const { return gauge_kprime(alpha, k); }

    double low(double xi1) const {
        if (id == SymbolId::Qlin) return lp::band(0.0, k, xi1);
        return lp::band(kprime(), k, xi1);
    }

    bool left_support(double xi1) const { return id == SymbolId::Q2k || low(xi1) != 0.0; }
    bool right_support(double xi2) const { return id == SymbolId::Q2k || lp::chi_plus(k, xi2) != 0.0; }

    cplx value(double xi1, double xi2) const {
        const double xi = xi1 + xi2;
        switch (id) {
        case SymbolId::Q2k: {
            const double hi1 = lp::at_least(k, xi1), lo1 = lp::below(k, xi1);
            const double hi2 = lp::at_least(k, xi2), lo2 = lp::below(k, xi2);
            const double pk = lp::chi_plus(k, xi), pk2 = lp::chi_plus(k, xi2);
            const double re = 0;
            const double im = pk * hi1 * xi2 * lo2 + 0.5 * xi * pk * hi1 * hi2 + (pk - pk2) * lo1 * xi2;
            return {re, im};
        }
        case SymbolId::QexpI: return {0, xi1 * low(xi1) * lp::chi_plus(k, xi2)};
        case SymbolId::QexpII:
            return {std::pow(std::abs(xi1), alpha) * low(xi1) * lp::chi_plus(k, xi2), 0};
        case SymbolId::Qexph: {
            const double w = low(xi1) * lp::chi_plus(k, xi2);
            const double base = std::abs((1 - h) * xi1 + xi2);
            // The band reaches 2^k, so for alpha < 2 the weight can sit on its integrable
            // singularity; that single point is dropped.
            if (w == 0.0 || (alpha < 2 && base <= 1e-12 * std::abs(xi2))) return 0;
            return {-xi1 * xi2 * std::pow(base, alpha - 2) * w, 0};
        }
        case SymbolId::Qlin: return {0, xi2 * low(xi1) * lp::chi_plus(k, xi2)};
        }
        return 0;
    }
};

// m / Omega with the zero guard |Omega| < 1e-12 -> 0.
struct NormalFormCorrection {
    BilinearSymbol symbol;
    static constexpr double guard = 1e-12;

    cplx value(double xi1, double xi2) const {
        const double om = resonance(xi1, xi2, symbol.alpha);
        if (std::abs(om) < guard) return 0;
        return symbol.value(xi1, xi2) / om;
    }
};

struct PairSymbol {
    std::function<cplx(double, double)> m;
    std::function<bool(double)> left = [](double) { return true; };
    std::function<bool(double)> right = [](double) { return true; };
};

inline PairSymbol as_pair(const BilinearSymbol& s) {
    return {[s](double a, double b) { return s.value(a, b); }, [s](double a) { return s.left_support(a); },
            [s](double b) { return s.right_support(b); }};
}

inline PairSymbol as_pair(const NormalFormCorrection& c) {
    const BilinearSymbol s = c.symbol;
    return {[c](double a, double b) { return c.value(a, b); }, [s](double a) { return s.left_support(a); },
            [s](double b) { return s.right_support(b); }};
}

// Output coefficient at xi = sum over grid pairs xi1 + xi2 = xi of m u(xi1) v(xi2); pairs whose sum
// leaves the grid are dropped and the output is dealiased.
inline Field apply_bilinear(const PairSymbol& m, const Field& u, const Field& v) {
    require_same_grid(u, v);
    const Grid& g = u.grid();
    const int N = g.size();
    const double cut = dealias_cutoff(g);
    std::vector<int> left, right;
    for (int j = 0; j < N; ++j) {
        const double xi = g.freq(j);
        if (u.coeff(j) != cplx(0) && m.left(xi)) left.push_back(j);
        if (v.coeff(j) != cplx(0) && m.right(xi)) right.push_back(j);
    }
    std::vector<cplx> out(N);
    const long half = N / 2;
    for (int a : left) {
        const long n1 = a < N / 2 ? a : a - N;
        const double xi1 = g.freq(a);
        for (int b : right) {
            const long n2 = b < N / 2 ? b : b - N;
            const long n = n1 + n2;
            if (n < -half || n >= half) continue;
            const double xi = n * g.dk();
            if (std::abs(xi) > cut) continue;
            const cplx w = m.m(xi1, g.freq(b));
            if (w == cplx(0)) continue;
            if (!std::isfinite(w.real()) || !std::isfinite(w.imag()))
                throw NumericalError("bilinear symbol overflow at (" + std::to_string(xi1) + ", " +
                                     std::to_string(g.freq(b)) + ")");
            out[g.index_of(n)] += w * u.coeff(a) * v.coeff(b);
        }
    }
    return Field::from_spectrum(g, std::move(out), false);
}

inline Field apply_bilinear(const BilinearSymbol& s, const Field& u, const Field& v) {
    return apply_bilinear(as_pair(s), u, v);
}

inline Field apply_bilinear(const NormalFormCorrection& c, const Field& u, const Field& v) {
    return apply_bilinear(as_pair(c), u, v);
}

// The same Q2k through projections and pointwise products (inputs must not alias).
inline Field q2k_apply(const Field& u, const Field& v, double k) {
    const Field uhi = P_at_least(u, k), ulo = P_below(u, k);
    const Field vhi = P_at_least(v, k), vlo = P_below(v, k);
    const Field t1 = P_k_plus(pointwise(uhi, derivative(vlo)), k);
    const Field t2 = 0.5 * derivative(P_k_plus(pointwise(uhi, vhi), k));
    const Field t3 = P_k_plus(pointwise(ulo, derivative(v)), k) - pointwise(ulo, derivative(P_k_plus(v, k)));
    return dealias((t1 + t2 + t3).as_complex());
}

// ---------------------------------------------------------------- guard soundness

struct GuardReport {
    double max_nonzero_output = 0;  // max |m| at resonant pairs with output xi != 0
    double max_zero_output = 0;     // max |m| at resonant pairs with output xi == 0
    std::size_t resonant_pairs = 0;
};

inline GuardReport guard_soundness(const BilinearSymbol& s, const Grid& g) {
    GuardReport r;
    const int N = g.size();
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b) {
            const double x1 = g.freq(a), x2 = g.freq(b);
            if (std::abs(resonance(x1, x2, s.alpha)) >= NormalFormCorrection::guard) continue;
            ++r.resonant_pairs;
            const double m = std::abs(s.value(x1, x2));
            if (x1 + x2 == 0.0)
                r.max_zero_output = std::max(r.max_zero_output, m);
            else
                r.max_nonzero_output = std::max(r.max_nonzero_output, m);
        }
    return r;
}

// ---------------------------------------------------------------- cancellation identity

struct CancellationReport {
    double residual = 0;           // sup |(d_t - L) B + i Q| over non-resonant pairs, relative to sup |Q|
    double resonant_fraction = 0;  // sup of the guarded (resonant) part of Q, relative to sup |Q|
    double q_norm = 0;
};

// (d_t - |D|^a d_x) B(u(t), v(t)) = -i Q(u(t), v(t)) along exact linear flows, B = Q / Omega.
// The time derivative of each pair carries the phase factor -i(omega(xi1) + omega(xi2)).
inline CancellationReport nf_cancellation_check(const Field& u0, const Field& v0, const BilinearSymbol& s,
                                                double t = 0.37) {
    require_same_grid(u0, v0);
    const Grid& g = u0.grid();
    const double tail_u = spectral_tail(u0), tail_v = spectral_tail(v0);
    require(tail_u <= 1e-8 && tail_v <= 1e-8, "cancellation inputs must be band-limited");
    const int N = g.size();
    const double a = s.alpha;
    const Field u = linear_flow(u0, a, t), v = linear_flow(v0, a, t);
    std::vector<cplx> lhs(N), q(N), qres(N);
    const double cut = dealias_cutoff(g);
    for (int i = 0; i < N; ++i) {
        if (u.coeff(i) == cplx(0) || !s.left_support(g.freq(i))) continue;
        const long n1 = i < N / 2 ? i : i - N;
        for (int j = 0; j < N; ++j) {
            if (v.coeff(j) == cplx(0) || !s.right_support(g.freq(j))) continue;
            const long n2 = j < N / 2 ? j : j - N;
            const long n = n1 + n2;
            if (n < -N / 2 || n >= N / 2 || std::abs(n * g.dk()) > cut) continue;
            const double x1 = g.freq(i), x2 = g.freq(j), x = n * g.dk();
            const cplx m = s.value(x1, x2);
            const cplx uv = u.coeff(i) * v.coeff(j);
            const int out = g.index_of(n);
            const double om = resonance(x1, x2, a);
            if (std::abs(om) < NormalFormCorrection::guard) {
                qres[out] += m * uv;
                continue;
            }
            q[out] += m * uv;
            const cplx bcoef = m / om * uv;
            const cplx dt = cplx(0, -(omega(x1, a) + omega(x2, a))) * bcoef;
            lhs[out] += dt - dispersive_symbol(x, a) * bcoef;
        }
    }
    auto lhs_f = Field::from_spectrum(g, lhs, false);
    auto q_f = Field::from_spectrum(g, q, false);
    auto res_f = Field::from_spectrum(g, qres, false);
    CancellationReport r;
    r.q_norm = linf_norm(q_f) + linf_norm(res_f);
    std::vector<cplx> diff(N);
    for (int j = 0; j < N; ++j) diff[j] = lhs[j] + cplx(0, 1) * q[j];
    const double d = linf_norm(Field::from_spectrum(g, diff, false));
    r.residual = r.q_norm > 0 ? d / r.q_norm : d;
    r.resonant_fraction = r.q_norm > 0 ? linf_norm(res_f) / r.q_norm : 0;
    return r;
}

// ---------------------------------------------------------------- renormalizations

// Gauss-Legendre nodes and weights on [0, 1].
inline const std::array<std::array<double, 2>, 8>& gauss_legendre8() {
    static const std::array<std::array<double, 2>, 8> nw = [] {
        const double x[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
        const double w[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
        std::array<std::array<double, 2>, 8> out{};
        for (int i = 0; i < 4; ++i) {
            out[2 * i] = {0.5 * (1 - x[i]), 0.5 * w[i]};
            out[2 * i + 1] = {0.5 * (1 + x[i]), 0.5 * w[i]};
        }
        return out;
    }();
    return nw;
}

// N = i (Q / Omega): the correction whose (d_t - L) derivative equals Q on linear flows.
inline constexpr cplx normal_form_constant{0.0, 1.0};

inline Field correction(SymbolId id, double alpha, double k, const Field& u, const Field& v, double h = 0) {
    NormalFormCorrection c{BilinearSymbol{id, k, alpha, h}};
    return normal_form_constant * apply_bilinear(c, u, v);
}

// Coefficient of the h-integral term: alpha (alpha - 1) / (1 + alpha).
inline double h_term_coefficient(double alpha) { return alpha * (alpha - 1.0) / (1.0 + alpha); }

namespace detail {

// Exponential-gauge part of the correction for arguments (u, v) with gauge G.
inline Field gauge_corrections(const GaugeOperator& G, const Field& u, const Field& v) {
    const double a = G.alpha, k = G.k, c = 1.0 / (1.0 + a);
    Field acc = -c * apply_exp_gauge_unchecked(G, correction(SymbolId::QexpI, a, k, u, v));
    acc = acc + c * abs_d_power(apply_exp_gauge_unchecked(G, derivative(correction(SymbolId::QexpII, a, k, u, v))), -a);
    const double kappa = h_term_coefficient(a);
    if (kappa != 0.0) {
        Field integral = Field::zeros(u.grid(), false);
        for (const auto& [h, w] : gauss_legendre8())
            integral = integral + (w * (1 - h)) * correction(SymbolId::Qexph, a, k, u, v, h);
        acc = acc - kappa * derivative(abs_d_power(apply_exp_gauge_unchecked(G, integral), -a));
    }
    return acc;
}

} // namespace detail

struct Renormalized {
    Field psi;        // P_k^+ e^{iA} P_k^+ phi
    Field bk;         // the bilinear correction B_k
    Field psi_tilde;  // psi - bk
};

inline Renormalized renormalize_nonlinear_parts(const Field& phi, double alpha, double k) {
    require(phi.is_real(), "renormalization needs a real field");
    GaugeOperator G = build_gauge(phi, alpha, k);
    Renormalized r;
    r.psi = P_k_plus(apply_exp_gauge(G, P_k_plus(phi, k)), k);
    Field inner = apply_exp_gauge_unchecked(G, correction(SymbolId::Q2k, alpha, k, phi, phi));
    inner = inner + detail::gauge_corrections(G, phi, phi);
    r.bk = P_k_plus(inner, k);
    r.psi_tilde = r.psi - r.bk;
    return r;
}

inline Field renormalize_nonlinear(const Field& phi, double alpha, double k) {
    return renormalize_nonlinear_parts(phi, alpha, k).psi_tilde;
}

inline Renormalized renormalize_linearized_parts(const Field& v, const Field& phi, double alpha, double k) {
    require(v.is_real() && phi.is_real(), "renormalization needs real fields");
    GaugeOperator G = build_gauge(phi, alpha, k);
    Renormalized r;
    r.psi = P_k_plus(apply_exp_gauge(G, P_k_plus(v, k)), k);
    Field q = correction(SymbolId::Q2k, alpha, k, phi, v) + correction(SymbolId::Q2k, alpha, k, v, phi) +
              correction(SymbolId::Qlin, alpha, k, v, phi);
    Field inner = apply_exp_gauge_unchecked(G, q) + detail::gauge_corrections(G, phi, v);
    r.bk = P_k_plus(inner, k);
    r.psi_tilde = r.psi - r.bk;
    return r;
}

inline Field renormalize_linearized(const Field& v, const Field& phi, double alpha, double k) {
    return renormalize_linearized_parts(v, phi, alpha, k).psi_tilde;
}

// ---------------------------------------------------------------- cubic residual

struct ResidualOptions {
    double h = 0;            // time step of the difference stencil; 0 picks one from the block
    bool linearized = false; // measure w~ on the linearized flow with v0 = phi0 unless v0 given
    bool linear_only = false;
    const Field* v0 = nullptr;
};

struct ResidualPoint {
    double eps = 0;
    double norm = 0;      // ||R||_{L^2}
    double exponent = 0;  // log2(||R(eps_prev)|| / ||R(eps)||) / log2(eps_prev / eps); 0 for the first
};

inline double default_stencil_step(double alpha, double k) {
    return 0.8 / std::abs(omega(std::exp2(k + 1.0), alpha));
}

// Residual R = d_t psi~ - L psi~ - phi_{<=k'} d_x psi~ at the stencil centre, via fourth-order
// centred differences of the interaction-picture variable e^{-tL} psi~.
inline Field renormalized_residual(const Field& phi0, double alpha, double k, const ResidualOptions& opt) {
    const double h = opt.h > 0 ? opt.h : default_stencil_step(alpha, k);
    require(h * std::abs(omega(std::exp2(k + 1.0), alpha)) <= 4.0, "time step too coarse for the difference stencil");
    EvolutionConfig cfg{alpha, h, 4 * h};
    Trajectory tr;
    std::vector<Field> vs;
    if (opt.linearized) {
        auto both = coupled_linearized_solve(phi0, opt.v0 ? *opt.v0 : phi0, cfg, !opt.linear_only);
        tr = std::move(both.background);
        vs = std::move(both.linearized.fields);
    } else {
        tr = gbo_solve(phi0, cfg, !opt.linear_only);
    }
    std::vector<Field> psi;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        Field p;
        if (opt.linear_only)
            p = P_k_plus(opt.linearized ? vs[i] : tr.fields[i], k);
        else if (opt.linearized)
            p = renormalize_linearized(vs[i], tr.fields[i], alpha, k);
        else
            p = renormalize_nonlinear(tr.fields[i], alpha, k);
        psi.push_back(linear_flow(p, alpha, -tr.times[i]));
    }
    require(psi.size() == 5, "difference stencil needs five samples");
    const Field d = (1.0 / (12 * h)) * ((psi[0] - psi[4]) + 8.0 * (psi[3] - psi[1]));
    const double tc = tr.times[2];
    const Field centre = linear_flow(psi[2], alpha, tc);
    const Field low = P_low_end(tr.fields[2], gauge_kprime(alpha, k));
    return linear_flow(d, alpha, tc) - pointwise(low.as_complex(), derivative(centre));
}

inline std::vector<ResidualPoint> residual_scaling_test(const Field& phi0, double alpha, double k,
                                                        const std::vector<double>& eps,
                                                        const ResidualOptions& opt = {}) {
    std::vector<ResidualPoint> out;
    for (double e : eps) {
        require(e > 0 && e <= 1e-2, "amplitudes must lie in (0, 1e-2]");
        ResidualOptions o = opt;
        Field scaled_v;
        if (opt.v0) {
            scaled_v = e * (*opt.v0);
            o.v0 = &scaled_v;
        }
        ResidualPoint p;
        p.eps = e;
        p.norm = l2_norm(renormalized_residual(e * phi0, alpha, k, o));
        if (!out.empty())
            p.exponent = std::log2(out.back().norm / p.norm) / std::log2(out.back().eps / e);
        out.push_back(p);
    }
    return out;
}

// ---------------------------------------------------------------- B_k operator-norm scaling

struct NormScaling {
    std::vector<double> k;
    std::vector<double> ratio;  // max over trials of ||B(u, v)||_2 / (||u||_2 ||v||_inf)
    double exponent = 0;        // fitted d log2(ratio) / dk
};

// u random in the k-block, v random with modes 1 <= |xi| <= 4.
inline NormScaling bk_norm_scaling(double alpha, const std::vector<int>& ks, int trials, std::uint64_t seed) {
    NormScaling out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    int top = *std::max_element(ks.begin(), ks.end());
    int N = 64;
    while (dealias_cutoff(make_grid(0, N)) < std::exp2(top + 1)) N *= 2;
    Grid g = make_grid(0, N);
    auto random_real = [&](auto inside) {
        std::vector<cplx> c(N);
        for (int j = 1; j < N / 2; ++j)
            if (inside(g.freq(j))) {
                c[j] = cplx(nd(rng), nd(rng));
                c[N - j] = std::conj(c[j]);
            }
        return Field::from_spectrum(g, c, true);
    };
    for (int k : ks) {
        NormalFormCorrection c{BilinearSymbol{SymbolId::Q2k, double(k), alpha, 0}};
        double worst = 0;
        for (int t = 0; t < trials; ++t) {
            Field u = random_real([&](double xi) { return lp::chi(k, xi) > 0; });
            Field v = random_real([](double xi) { return std::abs(xi) <= 4; });
            worst = std::max(worst, l2_norm(apply_bilinear(c, u, v)) / (l2_norm(u) * linf_norm(v)));
        }
        out.k.push_back(k);
        out.ratio.push_back(worst);
    }
    std::vector<double> ly;
    for (double r : out.ratio) ly.push_back(std::log2(r));
    out.exponent = least_squares(out.k, ly).slope;
    return out;
}

} // namespace gbo
