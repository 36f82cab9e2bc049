#pragma once

#include "gbo/evolution.hpp"
#include "gbo/fit.hpp"
#include "gbo/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <random>
#include <vector>

namespace gbo {

// ---------------------------------------------------------------- transport coefficients

struct CosineTerm {
    double amp = 0;
    double k = 0;      // spatial wavenumber
    double omega = 0;  // temporal frequency
    double phase = 0;
};

// b(t, x) = sum amp cos(k x + omega t + phase); derivatives are exact.
struct CosineField {
    std::vector<CosineTerm> terms;

    double eval(double t, double x, int dx = 0, int dt = 0) const {
        double acc = 0;
        const int order = dx + dt;
        for (const auto& c : terms) {
            const double arg = c.k * x + c.omega * t + c.phase;
            // d^n cos(arg) = cos(arg + n pi / 2)
            acc += c.amp * std::pow(c.k, dx) * std::pow(c.omega, dt) * std::cos(arg + order * pi / 2);
        }
        return acc;
    }

    bool empty() const { return terms.empty(); }

    Field sample(const Grid& g, double t) const {
        return Field::sample(g, [&](double x) { return eval(t, x); });
    }
};

struct AdmissibilityReport {
    double lambda = 0;
    double m = 2;
    // worst ratio ||d_x^a d_t^g b||_{L^1_t L^inf} / lambda^{delta (a - 1)} over 1 <= a <= 4, g in {0, 1}
    double l1_constant = 0;
    // worst ||d_t^g b||_{L^inf L^inf}, g in {0, 1}
    double linf_constant = 0;
    bool admissible(double c_adm = 1.0) const { return l1_constant <= c_adm && linf_constant <= c_adm; }
};

// Seminorms sampled on [0, 1] x (one period of the slowest term), trapezoid in t.
inline AdmissibilityReport check_admissible(const CosineField& b, double lambda, double m, int nt = 101,
                                            int nx = 256) {
    AdmissibilityReport r;
    r.lambda = lambda;
    r.m = m;
    const double delta = (2.0 - m) / 2.0;
    double kmin = INFINITY;
    for (const auto& c : b.terms)
        if (c.k > 0) kmin = std::min(kmin, c.k);
    const double span = std::isfinite(kmin) ? 2 * pi / kmin : 1.0;
    auto sup_x = [&](double t, int a, int g) {
        double s = 0;
        for (int i = 0; i < nx; ++i) s = std::max(s, std::abs(b.eval(t, span * i / nx, a, g)));
        return s;
    };
    for (int g = 0; g <= 1; ++g) {
        for (int a = 0; a <= 4; ++a) {
            double l1 = 0, linf = 0;
            for (int i = 0; i < nt; ++i) {
                const double t = double(i) / (nt - 1);
                const double s = sup_x(t, a, g);
                l1 += ((i == 0 || i == nt - 1) ? 0.5 : 1.0) * s / (nt - 1);
                linf = std::max(linf, s);
            }
            if (a == 0)
                r.linf_constant = std::max(r.linf_constant, linf);
            else
                r.l1_constant = std::max(r.l1_constant, l1 / std::pow(lambda, delta * (a - 1)));
        }
    }
    return r;
}

// Random cosine sum aimed at the admissible class for (lambda, m): wavenumbers below
// lambda^delta, halving per term, snapped to multiples of quantum (0 leaves them free).
inline CosineField random_transport(double lambda, double m, double quantum, std::mt19937_64& rng,
                                    int terms = 3, double beta = 0.4) {
    std::uniform_real_distribution<double> u01(0, 1);
    const double kmax = std::pow(lambda, (2.0 - m) / 2.0);
    CosineField b;
    for (int j = 0; j < terms; ++j) {
        double k = kmax * std::exp2(-j) * (0.6 + 0.4 * u01(rng));
        if (quantum > 0) {
            k = std::floor(k / quantum) * quantum;
            if (k <= 0) break;
        }
        b.terms.push_back({beta * std::exp2(-j), k, 0.3 + 0.6 * u01(rng), 2 * pi * u01(rng)});
    }
    return b;
}

// ---------------------------------------------------------------- rescaled symbol

// a~(t, y, xi) = b~(t, y) xi + tau mu^{-m} |xi|^m with b~ = tau mu^{-1} b(tau t, mu y),
// mu = tau^{1/2} lambda^{-delta}; the cutoff chi_lambda is taken as 1 on the tracked band.
struct RescaledSymbol {
    CosineField b;
    double lambda = 16;
    double m = 2;
    double tau = 1;

    RescaledSymbol() = default;
    RescaledSymbol(CosineField b_, double lambda_, double m_, double tau_)
        : b(std::move(b_)), lambda(lambda_), m(m_), tau(tau_) {
        require(lambda > 0 && m > 0, "rescaled symbol needs lambda > 0 and m > 0");
        require(tau >= std::pow(lambda, -m) * (1 - 1e-12) && tau <= 1 + 1e-12, "tau must lie in [lambda^-m, 1]");
    }

    double delta() const { return (2.0 - m) / 2.0; }
    double mu() const { return std::sqrt(tau) * std::pow(lambda, -delta()); }
    double frequency() const { return mu() * lambda; }
    double dispersion() const { return tau * std::pow(mu(), -m); }

    double bt(double t, double y, int dy = 0, int dt = 0) const {
        if (b.empty()) return 0;
        const double mu_ = mu();
        return tau / mu_ * std::pow(mu_, dy) * std::pow(tau, dt) * b.eval(tau * t, mu_ * y, dy, dt);
    }

    double a(double t, double y, double xi) const {
        return bt(t, y) * xi + dispersion() * std::pow(std::abs(xi), m);
    }
    double a_xi(double t, double y, double xi) const {
        const double s = xi >= 0 ? 1.0 : -1.0;
        return bt(t, y) + dispersion() * m * std::pow(std::abs(xi), m - 1) * s;
    }
    double a_x(double t, double y, double xi) const { return bt(t, y, 1) * xi; }
    double a_xixi(double, double, double xi) const {
        return dispersion() * m * (m - 1) * std::pow(std::abs(xi), m - 2);
    }
    double a_xxi(double t, double y, double) const { return bt(t, y, 1); }
    double a_xx(double t, double y, double xi) const { return bt(t, y, 2) * xi; }

    Field sample_b(const Grid& g, double t) const {
        return Field::sample(g, [&](double y) { return bt(t, y); });
    }
};

// ---------------------------------------------------------------- Hamilton flow

struct PhasePoint {
    double x = 0;
    double xi = 0;
};

struct FlowSample {
    double t = 0;
    double x = 0, xi = 0;
    // d x^t / dx, d xi^t / dx, d x^t / dxi, d xi^t / dxi
    double xx = 1, xix = 0, xxi = 0, xixi = 1;
};

// orientation +1 integrates x' = a_xi, xi' = -a_x; -1 the flow of -a, which carries packets of
// i u_t + A u = 0.
struct FlowOptions {
    double dt = 0;       // 0 picks t_end / 2000
    int orientation = 1;
    bool check_window = true;
};

namespace detail {

using FlowState = std::array<double, 6>;

inline FlowState flow_rhs(const RescaledSymbol& s, double t, const FlowState& u, int o) {
    const double x = u[0], xi = u[1];
    const double axx = s.a_xx(t, x, xi), axxi = s.a_xxi(t, x, xi), axixi = s.a_xixi(t, x, xi);
    FlowState d;
    d[0] = o * s.a_xi(t, x, xi);
    d[1] = -o * s.a_x(t, x, xi);
    // columns (xx, xix) and (xxi, xixi) of the Jacobian
    d[2] = o * (axxi * u[2] + axixi * u[3]);
    d[3] = -o * (axx * u[2] + axxi * u[3]);
    d[4] = o * (axxi * u[4] + axixi * u[5]);
    d[5] = -o * (axx * u[4] + axxi * u[5]);
    return d;
}

inline void rk4_step(const RescaledSymbol& s, double t, double h, FlowState& u, int o) {
    auto axpy = [](const FlowState& a, double c, const FlowState& b) {
        FlowState r;
        for (int i = 0; i < 6; ++i) r[i] = a[i] + c * b[i];
        return r;
    };
    const FlowState k1 = flow_rhs(s, t, u, o);
    const FlowState k2 = flow_rhs(s, t + h / 2, axpy(u, h / 2, k1), o);
    const FlowState k3 = flow_rhs(s, t + h / 2, axpy(u, h / 2, k2), o);
    const FlowState k4 = flow_rhs(s, t + h, axpy(u, h, k3), o);
    for (int i = 0; i < 6; ++i) u[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
}

inline void check_window(const RescaledSymbol& s, double xi, double t) {
    const double f = s.frequency();
    if (!(std::abs(xi) >= f / 4 && std::abs(xi) <= 4 * f))
        throw NumericalError("characteristic left the frequency window at t = " + std::to_string(t));
}

} // namespace detail

// RK4 path with the variational system alongside; t_end may be negative (backward flow).
inline std::vector<FlowSample> flow_jacobian(const PhasePoint& p0, const RescaledSymbol& s, double t_end,
                                             const FlowOptions& opt = {}) {
    require(std::isfinite(t_end) && t_end != 0, "flow needs a nonzero final time");
    require(opt.orientation == 1 || opt.orientation == -1, "orientation must be +1 or -1");
    const double span = std::abs(t_end);
    const double dt = opt.dt > 0 ? opt.dt : span / 2000;
    require(dt <= 1e-3 * span * (1 + 1e-12), "flow step must be at most 1e-3 t_end");
    const long steps = static_cast<long>(std::ceil(span / dt - 1e-9));
    const double h = (t_end > 0 ? 1 : -1) * span / steps;
    detail::FlowState u{p0.x, p0.xi, 1, 0, 0, 1};
    if (opt.check_window) detail::check_window(s, p0.xi, 0);
    std::vector<FlowSample> out;
    out.push_back({0, u[0], u[1], u[2], u[3], u[4], u[5]});
    for (long i = 0; i < steps; ++i) {
        const double t = i * h;
        detail::rk4_step(s, t, h, u, opt.orientation);
        const double tn = (i + 1) * h;
        if (opt.check_window) detail::check_window(s, u[1], tn);
        for (double v : u)
            if (!std::isfinite(v)) throw NumericalError("Hamilton flow produced a non-finite value");
        out.push_back({tn, u[0], u[1], u[2], u[3], u[4], u[5]});
    }
    return out;
}

inline std::vector<FlowSample> hamilton_flow(const PhasePoint& p0, const RescaledSymbol& s, double t_end,
                                             const FlowOptions& opt = {}) {
    return flow_jacobian(p0, s, t_end, opt);
}

// Centred differences of the end point in (x, xi).
inline FlowSample fd_jacobian(const PhasePoint& p0, const RescaledSymbol& s, double t_end,
                              const FlowOptions& opt = {}, double hx = 1e-5, double hxi = 0) {
    if (hxi <= 0) hxi = 1e-5 * std::abs(p0.xi);
    auto end = [&](double x, double xi) { return flow_jacobian({x, xi}, s, t_end, opt).back(); };
    const FlowSample px = end(p0.x + hx, p0.xi), mx = end(p0.x - hx, p0.xi);
    const FlowSample pk = end(p0.x, p0.xi + hxi), mk = end(p0.x, p0.xi - hxi);
    FlowSample r = end(p0.x, p0.xi);
    r.xx = (px.x - mx.x) / (2 * hx);
    r.xix = (px.xi - mx.xi) / (2 * hx);
    r.xxi = (pk.x - mk.x) / (2 * hxi);
    r.xixi = (pk.xi - mk.xi) / (2 * hxi);
    return r;
}

// ---------------------------------------------------------------- eikonal phase

// psi(t, .) on the image of the launch grid: nodes y^t, values, and exact slopes.
struct EikonalTable {
    double t = 0;
    std::vector<double> y;      // increasing characteristic positions
    std::vector<double> psi;    // psi(t, y_i)
    std::vector<double> dpsi;   // d_y psi = xi^t
    std::vector<double> d2psi;  // d_y^2 psi = (d xi^t / dx) / (d x^t / dx)

    double lo() const { return y.front(); }
    double hi() const { return y.back(); }

    // Cubic Hermite interpolation of psi (value, d_y) at a point inside the nodes.
    std::array<double, 2> eval(double yq) const {
        require(yq >= y.front() && yq <= y.back(), "eikonal query outside the characteristic image");
        std::size_t i = std::upper_bound(y.begin(), y.end(), yq) - y.begin();
        i = std::clamp<std::size_t>(i, 1, y.size() - 1) - 1;
        const double h = y[i + 1] - y[i], s = (yq - y[i]) / h;
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
        const double v = h00 * psi[i] + h10 * h * dpsi[i] + h01 * psi[i + 1] + h11 * h * dpsi[i + 1];
        const double d00 = 6 * s * s - 6 * s, d10 = 3 * s * s - 4 * s + 1, d01 = -d00, d11 = 3 * s * s - 2 * s;
        const double dv = (d00 * psi[i] + d01 * psi[i + 1]) / h + d10 * dpsi[i] + d11 * dpsi[i + 1];
        return {v, dv};
    }
};

// Characteristics of d_t psi = -a~(t, y, d_y psi), psi(0, y) = xi0 (y - x0), launched from
// the given points and reported at each requested time (ascending, positive).
inline std::vector<EikonalTable> eikonal_solve(double x0, double xi0, const RescaledSymbol& s,
                                               const std::vector<double>& launch,
                                               const std::vector<double>& times, double dt = 0) {
    require(launch.size() >= 4, "eikonal needs at least four launch points");
    require(std::is_sorted(launch.begin(), launch.end()), "launch points must be increasing");
    require(!times.empty() && std::is_sorted(times.begin(), times.end()) && times.front() > 0,
            "eikonal times must be positive and increasing");
    const double t_end = times.back();
    if (dt <= 0) dt = t_end / 2000;
    const std::size_t n = launch.size();
    std::vector<detail::FlowState> u(n);
    std::vector<double> psi(n);
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = {launch[i], xi0, 1, 0, 0, 1};
        psi[i] = xi0 * (launch[i] - x0);
    }
    auto psi_rate = [&s](double t, const detail::FlowState& v) {
        return v[1] * s.a_xi(t, v[0], v[1]) - s.a(t, v[0], v[1]);
    };
    std::vector<EikonalTable> out;
    double t = 0;
    for (double target : times) {
        while (t < target - 1e-14 * t_end) {
            const double h = std::min(dt, target - t);
            for (std::size_t i = 0; i < n; ++i) {
                // psi rides along with the same RK4 stages as the characteristic
                detail::FlowState v = u[i];
                const double r1 = psi_rate(t, v);
                auto k1 = detail::flow_rhs(s, t, v, 1);
                detail::FlowState w;
                for (int j = 0; j < 6; ++j) w[j] = v[j] + h / 2 * k1[j];
                const double r2 = psi_rate(t + h / 2, w);
                auto k2 = detail::flow_rhs(s, t + h / 2, w, 1);
                for (int j = 0; j < 6; ++j) w[j] = v[j] + h / 2 * k2[j];
                const double r3 = psi_rate(t + h / 2, w);
                auto k3 = detail::flow_rhs(s, t + h / 2, w, 1);
                for (int j = 0; j < 6; ++j) w[j] = v[j] + h * k3[j];
                const double r4 = psi_rate(t + h, w);
                auto k4 = detail::flow_rhs(s, t + h, w, 1);
                for (int j = 0; j < 6; ++j) u[i][j] += h / 6 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
                psi[i] += h / 6 * (r1 + 2 * r2 + 2 * r3 + r4);
            }
            t += h;
        }
        t = target;
        EikonalTable tab;
        tab.t = target;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(u[i][2] > 0) || (i > 0 && !(u[i][0] > u[i - 1][0])))
                throw NumericalError("characteristics crossed: the flow is not bilipschitz at t = " +
                                     std::to_string(target));
            tab.y.push_back(u[i][0]);
            tab.psi.push_back(psi[i]);
            tab.dpsi.push_back(u[i][1]);
            tab.d2psi.push_back(u[i][3] / u[i][2]);
        }
        out.push_back(std::move(tab));
    }
    return out;
}

// ---------------------------------------------------------------- FBI transform

// (Tf)(x, xi) = 2^{-1/2} pi^{-3/4} int e^{-(x-y)^2/2} e^{i xi (x-y)} f(y) dy on the torus with the
// periodized window; x on the spatial grid, xi on the spectral grid.
struct PhaseSpace {
    Grid grid;
    // row j: frequency grid.freq(j); column n: position grid.x(n)
    std::vector<std::vector<cplx>> rows;

    cplx at(int j, int n) const { return rows[j][n]; }
    double cell() const { return grid.dx() * grid.dk(); }

    double l2_norm() const {
        double s = 0;
        for (const auto& r : rows)
            for (const auto& v : r) s += std::norm(v);
        return std::sqrt(s * cell());
    }
};

inline const double fbi_constant = 1.0 / (std::sqrt(2.0) * std::pow(pi, 0.75));

namespace detail {

inline void check_fbi_grid(const Grid& g) {
    // the Riemann sum over the xi grid of e^{-(eta - xi)^2} is exact up to 2 e^{-pi^2 / dk^2}
    require(g.dk() <= 0.5 + 1e-12, "phase-space grid under-resolved: need L >= 4 pi (K_L >= 1)");
}

inline double fbi_weight(double eta, double xi) {
    return fbi_constant * std::sqrt(2 * pi) * std::exp(-0.5 * (eta - xi) * (eta - xi));
}

} // namespace detail

inline PhaseSpace fbi_transform(const Field& f) {
    const Grid& g = f.grid();
    detail::check_fbi_grid(g);
    const double edge = g.nyquist() - 8;
    require(outside_fraction(f, [edge](double xi) { return std::abs(xi) < edge; }) <= 1e-9,
            "field too close to the Nyquist frequency for the phase-space grid");
    const int N = g.size();
    PhaseSpace ps;
    ps.grid = g;
    ps.rows.resize(N);
    parallel_for(N, [&](int j) {
        const double xi = g.freq(j);
        std::vector<cplx> c(N);
        for (int e = 0; e < N; ++e) {
            const double eta = g.freq(e);
            if (std::abs(eta - xi) > 40) continue;
            c[e] = detail::fbi_weight(eta, xi) * f.coeff(e);
        }
        ps.rows[j] = fft::inverse(c);
    });
    return ps;
}

// T^* F(y) = 2^{-1/2} pi^{-3/4} int e^{-(x-y)^2/2} e^{-i xi (x-y)} F(x, xi) dx dxi.
inline Field fbi_inverse(const PhaseSpace& F) {
    const Grid& g = F.grid;
    detail::check_fbi_grid(g);
    const int N = g.size();
    std::vector<cplx> acc(N);
    std::vector<std::vector<cplx>> hat(N);
    parallel_for(N, [&](int j) { hat[j] = fft::forward(F.rows[j]); });
    for (int j = 0; j < N; ++j) {
        const double xi = g.freq(j);
        for (int e = 0; e < N; ++e) {
            const double eta = g.freq(e);
            if (std::abs(eta - xi) > 40) continue;
            acc[e] += g.dk() * detail::fbi_weight(eta, xi) * hat[j][e];
        }
    }
    return Field::from_spectrum(g, std::move(acc), false);
}

inline void write_phase_space_csv(const PhaseSpace& F, std::ostream& os) {
    os << "x,xi,density\n";
    char buf[96];
    for (int j = 0; j < F.grid.size(); ++j)
        for (int n = 0; n < F.grid.size(); ++n) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", F.grid.x(n), F.grid.freq(j), std::norm(F.at(j, n)));
            os << buf;
        }
}

// Coherent state T^* of a unit phase-space delta at (x0, xi0):
// 2^{-1/2} pi^{-3/4} e^{-(x0-y)^2/2} e^{i xi0 (y - x0)}, periodized.
inline Field coherent_state(const Grid& g, double x0, double xi0) {
    std::vector<cplx> c(g.size());
    for (int e = 0; e < g.size(); ++e) {
        if (e == g.nyquist_index()) continue;
        const double eta = g.freq(e);
        // int e^{-z^2/2} e^{i xi0 z} e^{-i eta (z + x0)} dz / L
        c[e] = detail::fbi_weight(eta, xi0) / g.period() * std::exp(cplx(0, -eta * x0));
    }
    return Field::from_spectrum(g, std::move(c), false);
}

// ---------------------------------------------------------------- packet coherence

struct CoherenceReport {
    double t = 0;
    PhasePoint predicted;   // Hamilton flow of -a~ from (x0, xi0)
    PhasePoint centroid;    // |Tu|^2-weighted phase-space centre
    double fraction = 0;    // |Tu|^2 mass within radius r of the predicted point
    double norm_drift = 0;
};

inline double torus_offset(double a, double b, double L) {
    double d = std::fmod(a - b, L);
    if (d > L / 2) d -= L;
    if (d < -L / 2) d += L;
    return d;
}

inline CoherenceReport packet_coherence_check(const RescaledSymbol& s, const Grid& g, const PhasePoint& p0,
                                              double t_end, double r, double dt = 0) {
    require(t_end >= 0, "coherence time must be non-negative");
    CoherenceReport rep;
    rep.t = t_end;
    Field u = coherent_state(g, p0.x, p0.xi);
    PhasePoint pred = p0;
    if (t_end > 0) {
        FlowOptions fo;
        fo.orientation = -1;
        auto path = flow_jacobian(p0, s, t_end, fo);
        pred = {path.back().x, path.back().xi};
        TransportSymbol ts;
        ts.m = s.m;
        ts.dispersion = s.dispersion();
        ts.cutoff = false;
        if (!s.b.empty()) ts.b = [&s, &g](double t) { return s.sample_b(g, t); };
        const double step = dt > 0 ? dt : std::min(t_end / 200, 0.5 / std::max(1.0, g.nyquist()));
        auto res = transport_dispersive_solve(u, ts, {}, {0, step, t_end, true, 1 << 30});
        u = res.trajectory.fields.back();
        rep.norm_drift = res.norm_drift;
    }
    rep.predicted = {std::fmod(std::fmod(pred.x, g.period()) + g.period(), g.period()), pred.xi};
    const PhaseSpace F = fbi_transform(u);
    double total = 0, inside = 0, cx = 0, cxi = 0;
    for (int j = 0; j < g.size(); ++j)
        for (int n = 0; n < g.size(); ++n) {
            const double w = std::norm(F.at(j, n));
            const double dx = torus_offset(g.x(n), rep.predicted.x, g.period());
            const double dxi = g.freq(j) - rep.predicted.xi;
            total += w;
            cx += w * dx;
            cxi += w * dxi;
            if (dx * dx + dxi * dxi <= r * r) inside += w;
        }
    rep.fraction = total > 0 ? inside / total : 0;
    rep.centroid = {rep.predicted.x + cx / total, rep.predicted.xi + cxi / total};
    return rep;
}

// ---------------------------------------------------------------- dispersive decay

struct DecayRun {
    double lambda = 0;
    double m = 2;
    std::vector<double> t;
    std::vector<double> sup;  // ||u(t)||_inf / ||u0||_{L^1}
    double slope = 0;         // fitted d log sup / d log t
    double prefactor = 0;     // geometric mean of sup * t^{1/2}
    double wrap = 0;          // |u|^2 fraction in the outer fifth of the torus at the final time
    double lateral = 0;       // sup |u| / (lambda^{1/2} t^{-1/2} int |y - y'|^{-1/2} |u0|)
    bool admissible = true;
    double adm_l1 = 0, adm_linf = 0;
    int K_L = 0, N = 0;
};

struct DecayOptions {
    bool with_b = true;
    std::uint64_t seed = 1;
    double t_lo = 4;     // first fitted time in units of lambda^{-m}
    double t_hi = 256;   // final time in units of lambda^{-m}
    int samples = 24;    // log-spaced fit times
    double c_adm = 1.0;
};

namespace detail {

// Smallest torus that holds the spread of the lambda block until t_hi and the slowest b mode.
inline Grid decay_grid(double lambda, double m, const DecayOptions& o) {
    const double T = o.t_hi * std::pow(lambda, -m);
    const double reach = T * m * std::pow(2 * lambda, m - 1);  // fastest group speed times T
    const double need_L = std::max(2.5 * reach + 20.0 / lambda, o.with_b ? 2 * pi / (0.5 * std::pow(lambda, (2 - m) / 2)) : 0.0);
    int K = 0;
    while (2 * pi * std::exp2(K) < need_L) ++K;
    const double dk = std::exp2(-K);
    int N = 16;
    while (0.5 * N * dk < 4 * lambda) N *= 2;
    return make_grid(K, N);
}

} // namespace detail

// u0 = P_lambda delta at the torus centre; i u_t + A u = 0 with A the Weyl quantization of
// (b xi + |xi|^m) chi, chi the sum of the three blocks around lambda (equal to 1 on supp u0).
inline DecayRun dispersive_decay_run(double lambda, double m, const DecayOptions& o) {
    require(m >= 2 && m <= 3, "dispersion order must lie in [2, 3]");
    require(lambda >= 4, "lambda must be at least 4");
    const Grid g = detail::decay_grid(lambda, m, o);
    DecayRun run;
    run.lambda = lambda;
    run.m = m;
    run.K_L = g.K_L();
    run.N = g.size();
    const double xc = g.period() / 2;
    std::vector<cplx> c(g.size());
    const double k = std::log2(lambda);
    for (int j = 0; j < g.size(); ++j) c[j] = lp::chi(k, g.freq(j)) / g.period() * std::exp(cplx(0, -g.freq(j) * xc));
    const Field u0 = Field::from_spectrum(g, c, false);
    double l1 = 0;
    for (int n = 0; n < g.size(); ++n) l1 += std::abs(u0[n]) * g.dx();

    TransportSymbol ts;
    ts.m = m;
    ts.lambda = lambda;
    ts.spread = 1;  // symbol cutoff equal to 1 on the support of u0
    CosineField b;
    if (o.with_b) {
        std::mt19937_64 rng(o.seed);
        b = random_transport(lambda, m, g.dk(), rng);
        auto adm = check_admissible(b, lambda, m);
        run.adm_l1 = adm.l1_constant;
        run.adm_linf = adm.linf_constant;
        run.admissible = !b.empty() && adm.admissible(o.c_adm);
        require(run.admissible, "transport coefficient failed the admissibility check");
        ts.b = [b, g](double t) { return b.sample(g, t); };
    }

    const double unit = std::pow(lambda, -m);
    const double T = o.t_hi * unit;
    const int save = 8;
    const double dt = std::min(T / 1024, 0.05 / lambda);
    auto res = transport_dispersive_solve(u0, ts, {}, {0, dt, T, true, save});
    const auto& tr = res.trajectory;

    std::vector<double> targets;
    for (int i = 0; i < o.samples; ++i)
        targets.push_back(o.t_lo * unit * std::pow(o.t_hi / o.t_lo, double(i) / (o.samples - 1)));
    // nearby u0 samples for the lateral kernel
    std::vector<int> support;
    double u0max = linf_norm(u0);
    for (int n = 0; n < g.size(); ++n)
        if (std::abs(u0[n]) > 1e-6 * u0max) support.push_back(n);
    std::size_t idx = 0;
    for (double target : targets) {
        while (idx + 1 < tr.size() && std::abs(tr.times[idx + 1] - target) <= std::abs(tr.times[idx] - target)) ++idx;
        const double t = tr.times[idx];
        if (!run.t.empty() && t == run.t.back()) continue;
        const Field& u = tr.fields[idx];
        run.t.push_back(t);
        run.sup.push_back(linf_norm(u) / l1);
        // lateral diagnostic on a subsample of output points
        for (int n = 0; n < g.size(); n += std::max(1, g.size() / 512)) {
            double kern = 0;
            for (int q : support) {
                const double d = std::max(std::abs(torus_offset(g.x(n), g.x(q), g.period())), 0.5 * g.dx());
                kern += std::abs(u0[q]) * g.dx() / std::sqrt(d);
            }
            const double bound = std::sqrt(lambda / t) * kern;
            run.lateral = std::max(run.lateral, std::abs(u[n]) / bound);
        }
    }
    const Field& last = tr.fields.back();
    double total = 0, outer = 0;
    for (int n = 0; n < g.size(); ++n) {
        const double w = std::norm(last[n]);
        total += w;
        if (std::abs(g.x(n) - xc) > 0.4 * g.period()) outer += w;
    }
    run.wrap = outer / total;
    if (run.wrap > 1e-3) throw NumericalError("dispersive run wrapped around the torus");
    const auto fit = least_squares(
        [&] {
            std::vector<double> lx;
            for (double t : run.t) lx.push_back(std::log(t));
            return lx;
        }(),
        [&] {
            std::vector<double> ly;
            for (double v : run.sup) ly.push_back(std::log(v));
            return ly;
        }());
    run.slope = fit.slope;
    double acc = 0;
    for (std::size_t i = 0; i < run.t.size(); ++i) acc += std::log(run.sup[i] * std::sqrt(run.t[i]));
    run.prefactor = std::exp(acc / run.t.size());
    return run;
}

struct DecayExperiment {
    double m = 2;
    std::vector<DecayRun> runs;
    double mean_slope = 0;
    double worst_slope_error = 0;  // max |slope + 1/2|
    double lambda_exponent = 0;    // fitted d log prefactor / d log lambda
    double delta() const { return (2 - m) / 2; }
};

inline DecayExperiment dispersive_decay_experiment(double m, const std::vector<double>& lambdas,
                                                   const DecayOptions& o = {}) {
    DecayExperiment ex;
    ex.m = m;
    ex.runs.resize(lambdas.size());
    parallel_for(static_cast<int>(lambdas.size()), [&](int i) {
        DecayOptions oi = o;
        oi.seed = o.seed + 7919 * i;
        ex.runs[i] = dispersive_decay_run(lambdas[i], m, oi);
    });
    std::vector<double> ll, lp;
    for (const auto& r : ex.runs) {
        ex.mean_slope += r.slope / ex.runs.size();
        ex.worst_slope_error = std::max(ex.worst_slope_error, std::abs(r.slope + 0.5));
        ll.push_back(std::log(r.lambda));
        lp.push_back(std::log(r.prefactor));
    }
    if (ex.runs.size() >= 2) ex.lambda_exponent = least_squares(ll, lp).slope;
    return ex;
}

inline void write_decay_csv(const DecayExperiment& ex, std::ostream& os) {
    os << "m,lambda,slope,prefactor,wrap,lateral\n";
    char buf[192];
    for (const auto& r : ex.runs) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.m, r.lambda, r.slope, r.prefactor,
                      r.wrap, r.lateral);
        os << buf;
    }
}

} // namespace gbo
