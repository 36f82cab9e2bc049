#pragma once

#include "gbo/spectral.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace gbo {

struct EvolutionConfig {
    double alpha = 1.0;
    double dt = 1e-3;
    double T = 1.0;
    bool dealias = true;
    int save_every = 1;  // store every n-th step (the final time is always stored)
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Field> fields;
    EvolutionConfig config;
    double mass_drift = 0;  // relative drift of the conserved L2 quantity

    std::size_t size() const { return times.size(); }
    const Field& back() const { return fields.back(); }
};

// 1/6 is the cubic coefficient conserved by d_t phi = |D|^a d_x phi + 1/2 d_x(phi^2).
inline constexpr double energy_cubic_coefficient = 1.0 / 6.0;

struct Conserved {
    double mass = 0;
    double energy = 0;
};

inline Conserved conserved_quantities(const Field& phi, double alpha) {
    const Grid& g = phi.grid();
    Conserved q;
    double kin = 0;
    for (int j = 0; j < g.size(); ++j) {
        const double xi = std::abs(g.freq(j));
        const double w = xi == 0.0 ? 0.0 : std::pow(xi, alpha);
        kin += w * std::norm(phi.coeff(j));
        q.mass += std::norm(phi.coeff(j));
    }
    q.mass *= g.period();
    double cubic = 0;
    for (const auto& v : phi.samples()) cubic += v.real() * v.real() * v.real();
    q.energy = 0.5 * g.period() * kin + energy_cubic_coefficient * g.dx() * cubic;
    return q;
}

namespace detail {

using Spectrum = std::vector<cplx>;
using Nonlinear = std::function<Spectrum(double, const Spectrum&)>;

// Lawson (integrating-factor) RK4 for c' = lin*c + N(t, c).
class IFRK4 {
public:
    explicit IFRK4(std::vector<cplx> lin) : lin_(std::move(lin)) {}

    void step(Spectrum& c, double t, double dt, const Nonlinear& nl) {
        if (dt != cached_dt_) {
            half_.resize(lin_.size());
            full_.resize(lin_.size());
            for (std::size_t j = 0; j < lin_.size(); ++j) {
                half_[j] = std::exp(lin_[j] * (0.5 * dt));
                full_[j] = half_[j] * half_[j];
            }
            cached_dt_ = dt;
        }
        const std::size_t n = c.size();
        Spectrum tmp(n);
        Spectrum k1 = nl(t, c);
        for (std::size_t j = 0; j < n; ++j) tmp[j] = half_[j] * (c[j] + 0.5 * dt * k1[j]);
        Spectrum k2 = nl(t + 0.5 * dt, tmp);
        for (std::size_t j = 0; j < n; ++j) tmp[j] = half_[j] * c[j] + 0.5 * dt * k2[j];
        Spectrum k3 = nl(t + 0.5 * dt, tmp);
        for (std::size_t j = 0; j < n; ++j) tmp[j] = full_[j] * c[j] + dt * half_[j] * k3[j];
        Spectrum k4 = nl(t + dt, tmp);
        for (std::size_t j = 0; j < n; ++j)
            c[j] = full_[j] * c[j] +
                   dt / 6.0 * (full_[j] * k1[j] + 2.0 * half_[j] * (k2[j] + k3[j]) + k4[j]);
    }

private:
    std::vector<cplx> lin_;
    std::vector<cplx> half_, full_;
    double cached_dt_ = -1;
};

inline void check_dt(const EvolutionConfig& cfg) {
    require(cfg.dt > 0 && std::isfinite(cfg.dt), "time step must be positive");
    require(cfg.T >= 0 && std::isfinite(cfg.T), "final time must be non-negative");
    require(cfg.save_every >= 1, "save_every must be at least 1");
}

// Drives the stepper over [0, T] with a partial final step, storing samples.
template <class Stepper, class Store>
void march(const EvolutionConfig& cfg, Stepper&& step, Store&& store) {
    const long steps = cfg.T == 0 ? 0 : static_cast<long>(std::ceil(cfg.T / cfg.dt - 1e-9));
    store(0.0);
    double t = 0;
    for (long s = 1; s <= steps; ++s) {
        const double h = (s == steps) ? cfg.T - (steps - 1) * cfg.dt : cfg.dt;
        step(t, h);
        t = (s == steps) ? cfg.T : s * cfg.dt;
        if (s % cfg.save_every == 0 || s == steps) store(t);
    }
}

inline std::vector<double> real_inverse(const Spectrum& c) {
    auto z = fft::inverse(c);
    std::vector<double> r(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) r[i] = z[i].real();
    return r;
}

inline Spectrum dx_dealiased(const Grid& g, Spectrum c, bool dealias_on, double factor) {
    const double cut = dealias_cutoff(g);
    for (int j = 0; j < g.size(); ++j) {
        const double xi = g.freq(j);
        if ((dealias_on && std::abs(xi) > cut) || j == g.nyquist_index())
            c[j] = 0;
        else
            c[j] *= cplx(0, factor * xi);
    }
    return c;
}

inline void guard_blowup(const std::vector<double>& u, double t) {
    for (double v : u)
        if (!(std::abs(v) <= 1e6))
            throw NumericalError("blow-up detected: |phi| exceeded 1e6 at t = " + std::to_string(t));
}

} // namespace detail

inline Field gbo_rhs(const Field& phi, double alpha, bool dealias_on = true) {
    const Grid& g = phi.grid();
    auto u = phi.real_samples();
    std::vector<cplx> sq(u.size());
    for (std::size_t n = 0; n < u.size(); ++n) sq[n] = u[n] * u[n];
    auto c = detail::dx_dealiased(g, fft::forward(sq), dealias_on, 0.5);
    for (int j = 0; j < g.size(); ++j)
        if (j != g.nyquist_index()) c[j] += dispersive_symbol(g.freq(j), alpha) * phi.coeff(j);
    return Field::from_spectrum(g, std::move(c), true);
}

// Exact solution of the linear part: c_j(t) = e^{t i xi |xi|^alpha} c_j(0).
inline Field linear_flow(const Field& f, double alpha, double t) {
    return apply_multiplier(f, [alpha, t](double xi) { return std::exp(t * dispersive_symbol(xi, alpha)); });
}

inline Trajectory gbo_solve(const Field& phi0, const EvolutionConfig& cfg, bool nonlinear = true) {
    detail::check_dt(cfg);
    require(phi0.is_real(), "gbo_solve needs real initial data");
    require(spectral_tail(phi0) <= 1e-8, "initial data not resolved on the grid");
    const Grid& g = phi0.grid();
    std::vector<cplx> lin(g.size());
    for (int j = 0; j < g.size(); ++j) lin[j] = dispersive_symbol(g.freq(j), cfg.alpha);
    detail::IFRK4 rk(lin);

    auto nl = [&](double t, const detail::Spectrum& c) -> detail::Spectrum {
        if (!nonlinear) return detail::Spectrum(c.size());
        auto u = detail::real_inverse(c);
        detail::guard_blowup(u, t);
        std::vector<cplx> sq(u.size());
        for (std::size_t n = 0; n < u.size(); ++n) sq[n] = u[n] * u[n];
        return detail::dx_dealiased(g, fft::forward(sq), cfg.dealias, 0.5);
    };

    Trajectory tr;
    tr.config = cfg;
    detail::Spectrum c = phi0.spectrum();
    c[g.nyquist_index()] = 0;
    const double m0 = conserved_quantities(phi0, cfg.alpha).mass;
    detail::march(
        cfg, [&](double t, double h) { rk.step(c, t, h, nl); },
        [&](double t) {
            Field f = Field::from_spectrum(g, c, true);
            detail::guard_blowup(f.real_samples(), t);
            if (m0 > 0)
                tr.mass_drift = std::max(
                    tr.mass_drift, std::abs(conserved_quantities(f, cfg.alpha).mass - m0) / m0);
            tr.times.push_back(t);
            tr.fields.push_back(std::move(f));
        });
    return tr;
}

// Cubic Hermite interpolation of a stored gBO trajectory in t.
class BackgroundInterpolant {
public:
    BackgroundInterpolant(const Trajectory& bg, double alpha) : bg_(&bg) {
        require(bg.size() >= 2, "background trajectory needs at least two samples");
        for (const auto& f : bg.fields) {
            values_.push_back(f.real_samples());
            rates_.push_back(gbo_rhs(f, alpha, bg.config.dealias).real_samples());
        }
    }

    double max_gap() const {
        double m = 0;
        for (std::size_t i = 1; i < bg_->times.size(); ++i)
            m = std::max(m, bg_->times[i] - bg_->times[i - 1]);
        return m;
    }

    std::vector<double> operator()(double t) const {
        const auto& ts = bg_->times;
        std::size_t i = std::upper_bound(ts.begin(), ts.end(), t) - ts.begin();
        i = std::clamp<std::size_t>(i, 1, ts.size() - 1) - 1;
        const double h = ts[i + 1] - ts[i];
        const double s = (t - ts[i]) / h;
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
        std::vector<double> out(values_[i].size());
        for (std::size_t n = 0; n < out.size(); ++n)
            out[n] = h00 * values_[i][n] + h10 * h * rates_[i][n] + h01 * values_[i + 1][n] +
                     h11 * h * rates_[i + 1][n];
        return out;
    }

private:
    const Trajectory* bg_;
    std::vector<std::vector<double>> values_, rates_;
};

// (d_t - |D|^a d_x) v = d_x(phi v) along a stored background.
inline Trajectory linearized_solve(const Field& v0, const Trajectory& background, const EvolutionConfig& cfg) {
    detail::check_dt(cfg);
    require(v0.is_real(), "linearized_solve needs real data");
    require(spectral_tail(v0) <= 1e-8, "initial data not resolved on the grid");
    require(!background.fields.empty() && background.fields.front().grid() == v0.grid(),
            "background lives on a different grid");
    require(background.times.back() >= cfg.T - 1e-12, "background trajectory is too short");
    BackgroundInterpolant phi(background, cfg.alpha);
    require(phi.max_gap() <= cfg.dt * (1 + 1e-9), "background sample gap exceeds the time step");

    const Grid& g = v0.grid();
    std::vector<cplx> lin(g.size());
    for (int j = 0; j < g.size(); ++j) lin[j] = dispersive_symbol(g.freq(j), cfg.alpha);
    detail::IFRK4 rk(lin);
    auto nl = [&](double t, const detail::Spectrum& c) -> detail::Spectrum {
        auto v = detail::real_inverse(c);
        auto p = phi(t);
        std::vector<cplx> prod(v.size());
        for (std::size_t n = 0; n < v.size(); ++n) prod[n] = p[n] * v[n];
        return detail::dx_dealiased(g, fft::forward(prod), cfg.dealias, 1.0);
    };

    Trajectory tr;
    tr.config = cfg;
    detail::Spectrum c = v0.spectrum();
    c[g.nyquist_index()] = 0;
    detail::march(
        cfg, [&](double t, double h) { rk.step(c, t, h, nl); },
        [&](double t) {
            tr.times.push_back(t);
            tr.fields.push_back(Field::from_spectrum(g, c, true));
        });
    return tr;
}

struct CoupledTrajectory {
    Trajectory background;
    Trajectory linearized;
};

// gBO and its linearization advanced together with the same stages, so v sees the exact
// stage values of phi instead of an interpolant.
inline CoupledTrajectory coupled_linearized_solve(const Field& phi0, const Field& v0, const EvolutionConfig& cfg,
                                                  bool nonlinear = true) {
    detail::check_dt(cfg);
    require(phi0.is_real() && v0.is_real(), "coupled solve needs real data");
    require(phi0.grid() == v0.grid(), "background and perturbation live on different grids");
    require(spectral_tail(phi0) <= 1e-8 && spectral_tail(v0) <= 1e-8, "initial data not resolved on the grid");
    const Grid& g = phi0.grid();
    const int N = g.size();
    std::vector<cplx> lin(2 * N);
    for (int j = 0; j < N; ++j) lin[j] = lin[N + j] = dispersive_symbol(g.freq(j), cfg.alpha);
    detail::IFRK4 rk(lin);
    auto nl = [&](double t, const detail::Spectrum& c) -> detail::Spectrum {
        detail::Spectrum out(2 * N);
        if (!nonlinear) return out;
        auto u = detail::real_inverse(detail::Spectrum(c.begin(), c.begin() + N));
        auto v = detail::real_inverse(detail::Spectrum(c.begin() + N, c.end()));
        detail::guard_blowup(u, t);
        std::vector<cplx> sq(N), prod(N);
        for (int n = 0; n < N; ++n) {
            sq[n] = u[n] * u[n];
            prod[n] = u[n] * v[n];
        }
        auto a = detail::dx_dealiased(g, fft::forward(sq), cfg.dealias, 0.5);
        auto b = detail::dx_dealiased(g, fft::forward(prod), cfg.dealias, 1.0);
        std::copy(a.begin(), a.end(), out.begin());
        std::copy(b.begin(), b.end(), out.begin() + N);
        return out;
    };

    CoupledTrajectory out;
    out.background.config = out.linearized.config = cfg;
    detail::Spectrum c = phi0.spectrum();
    const auto cv = v0.spectrum();
    c.insert(c.end(), cv.begin(), cv.end());
    c[g.nyquist_index()] = c[N + g.nyquist_index()] = 0;
    detail::march(
        cfg, [&](double t, double h) { rk.step(c, t, h, nl); },
        [&](double t) {
            out.background.times.push_back(t);
            out.linearized.times.push_back(t);
            out.background.fields.push_back(Field::from_spectrum(g, detail::Spectrum(c.begin(), c.begin() + N), true));
            out.linearized.fields.push_back(Field::from_spectrum(g, detail::Spectrum(c.begin() + N, c.end()), true));
        });
    return out;
}

// ---------------------------------------------------------------- transport-dispersive model

using FieldOfTime = std::function<Field(double)>;

struct TransportSymbol {
    FieldOfTime b;            // real transport coefficient; empty means b = 0
    double m = 2.0;           // dispersion order
    double lambda = 1.0;      // frequency of the cutoff chi_lambda (need not be dyadic)
    double dispersion = 1.0;  // coefficient of |D|^m
    bool cutoff = true;       // include chi_lambda(D)
    int spread = 0;           // chi_lambda summed over this many neighbouring blocks on each side

    double delta() const { return (2.0 - m) / 2.0; }
    double chi(double xi) const {
        if (!cutoff) return 1.0;
        double s = 0;
        for (int d = -spread; d <= spread; ++d) s += lp::chi(std::log2(lambda) + d, xi);
        return s;
    }
};

struct TransportResult {
    Trajectory trajectory;
    double norm_drift = 0;
};

namespace detail {

// B_b u = 1/2 [ b (D chi u) + D chi (b u) ], D = -i d_x.
inline Spectrum transport_part(const Grid& g, const std::vector<double>& chi, const Field& b,
                               const Spectrum& c) {
    const int N = g.size();
    Spectrum dchi(N);
    for (int j = 0; j < N; ++j) dchi[j] = g.freq(j) * chi[j] * c[j];
    auto du = fft::inverse(dchi);
    auto u = fft::inverse(c);
    std::vector<cplx> bdu(N), bu(N);
    for (int n = 0; n < N; ++n) {
        const double bn = b[n].real();
        bdu[n] = bn * du[n];
        bu[n] = bn * u[n];
    }
    auto f1 = fft::forward(bdu);
    auto f2 = fft::forward(bu);
    Spectrum out(N);
    for (int j = 0; j < N; ++j) out[j] = 0.5 * (f1[j] + g.freq(j) * chi[j] * f2[j]);
    return out;
}

} // namespace detail

inline Field transport_apply(const Field& u, const TransportSymbol& sym, double t) {
    const Grid& g = u.grid();
    std::vector<double> chi(g.size());
    for (int j = 0; j < g.size(); ++j) chi[j] = sym.chi(g.freq(j));
    detail::Spectrum out(g.size());
    for (int j = 0; j < g.size(); ++j)
        out[j] = sym.dispersion * std::pow(std::abs(g.freq(j)), sym.m) * chi[j] * u.coeff(j);
    if (sym.b) {
        auto tp = detail::transport_part(g, chi, sym.b(t), u.spectrum());
        for (int j = 0; j < g.size(); ++j) out[j] += tp[j];
    }
    return Field::from_spectrum(g, std::move(out), false);
}

// i d_t u = -A u + f, i.e. d_t u = i A u - i f.
inline TransportResult transport_dispersive_solve(const Field& u0, const TransportSymbol& sym,
                                                  const FieldOfTime& forcing, const EvolutionConfig& cfg) {
    detail::check_dt(cfg);
    require(sym.m >= 0 && sym.lambda > 0, "transport symbol needs m >= 0 and lambda > 0");
    const Grid& g = u0.grid();
    if (sym.cutoff) {
        require(std::exp2(1 + sym.spread) * sym.lambda <= g.nyquist() * (1 + 1e-12), "frequency lambda not resolvable");
        const double tail = outside_fraction(u0, [&](double xi) { return sym.chi(xi) > 0.0; });
        require(tail <= 1e-8, "initial data not localized to the lambda block");
    }
    std::vector<double> chi(g.size());
    std::vector<cplx> lin(g.size());
    for (int j = 0; j < g.size(); ++j) {
        chi[j] = sym.chi(g.freq(j));
        lin[j] = cplx(0, sym.dispersion * std::pow(std::abs(g.freq(j)), sym.m) * chi[j]);
    }
    detail::IFRK4 rk(lin);
    auto nl = [&](double t, const detail::Spectrum& c) -> detail::Spectrum {
        detail::Spectrum out(c.size());
        if (sym.b) {
            auto tp = detail::transport_part(g, chi, sym.b(t), c);
            for (std::size_t j = 0; j < c.size(); ++j) out[j] = cplx(0, 1) * tp[j];
        }
        if (forcing) {
            const Field f = forcing(t);
            for (std::size_t j = 0; j < c.size(); ++j) out[j] -= cplx(0, 1) * f.coeff(j);
        }
        return out;
    };

    TransportResult res;
    res.trajectory.config = cfg;
    detail::Spectrum c = u0.spectrum();
    const double n0 = l2_norm(u0);
    detail::march(
        cfg, [&](double t, double h) { rk.step(c, t, h, nl); },
        [&](double t) {
            Field f = Field::from_spectrum(g, c, false);
            if (n0 > 0) res.norm_drift = std::max(res.norm_drift, std::abs(l2_norm(f) / n0 - 1.0));
            res.trajectory.times.push_back(t);
            res.trajectory.fields.push_back(std::move(f));
        });
    res.trajectory.mass_drift = res.norm_drift;
    return res;
}

// ---------------------------------------------------------------- data and serialization

// Periodized Gaussian bump of amplitude eps and width sigma centred at L/2, built from its spectrum.
inline Field smooth_bump(const Grid& g, double eps, double sigma = 1.0) {
    std::vector<cplx> c(g.size());
    const double xc = 0.5 * g.period();
    const double norm = eps * sigma * std::sqrt(2.0 * pi) / g.period();
    for (int j = 0; j < g.size(); ++j) {
        if (j == g.nyquist_index()) continue;
        const double xi = g.freq(j);
        c[j] = norm * std::exp(-0.5 * xi * xi * sigma * sigma) * std::exp(cplx(0, -xi * xc));
    }
    return Field::from_spectrum(g, std::move(c), true);
}

namespace detail {

template <class T>
void put(std::ostream& os, T v) {
    static_assert(std::endian::native == std::endian::little, "binary format assumes little-endian host");
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw NumericalError("truncated trajectory file");
    return v;
}

inline constexpr char traj_magic[8] = {'G', 'B', 'O', 'T', 'R', 'A', 'J', '1'};

} // namespace detail

// Header (magic, N, K_L, L, dt, alpha, count, is_real) then per sample t and the values.
inline void write_trajectory(const Trajectory& tr, const std::string& path) {
    require(!tr.fields.empty(), "cannot serialize an empty trajectory");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    const Grid& g = tr.fields.front().grid();
    const bool real = tr.fields.front().is_real();
    os.write(detail::traj_magic, 8);
    detail::put<std::int64_t>(os, g.size());
    detail::put<std::int64_t>(os, g.K_L());
    detail::put<double>(os, g.period());
    detail::put<double>(os, tr.config.dt);
    detail::put<double>(os, tr.config.alpha);
    detail::put<std::int64_t>(os, static_cast<std::int64_t>(tr.size()));
    detail::put<std::int64_t>(os, real ? 1 : 0);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        detail::put<double>(os, tr.times[i]);
        for (const auto& v : tr.fields[i].samples()) {
            detail::put<double>(os, v.real());
            if (!real) detail::put<double>(os, v.imag());
        }
    }
}

inline Trajectory read_trajectory(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || !std::equal(magic, magic + 8, detail::traj_magic))
        throw NumericalError("not a trajectory file: " + path);
    const auto N = detail::get<std::int64_t>(is);
    const auto K_L = detail::get<std::int64_t>(is);
    detail::get<double>(is);
    Trajectory tr;
    tr.config.dt = detail::get<double>(is);
    tr.config.alpha = detail::get<double>(is);
    const auto count = detail::get<std::int64_t>(is);
    const bool real = detail::get<std::int64_t>(is) != 0;
    Grid g(static_cast<int>(K_L), static_cast<int>(N));
    for (std::int64_t i = 0; i < count; ++i) {
        tr.times.push_back(detail::get<double>(is));
        if (real) {
            std::vector<double> s(N);
            for (auto& v : s) v = detail::get<double>(is);
            tr.fields.push_back(Field::from_samples(g, std::move(s)));
        } else {
            std::vector<cplx> s(N);
            for (auto& v : s) {
                const double re = detail::get<double>(is);
                v = cplx(re, detail::get<double>(is));
            }
            tr.fields.push_back(Field::from_samples(g, std::move(s)));
        }
    }
    if (!tr.times.empty()) tr.config.T = tr.times.back();
    return tr;
}

inline void write_trajectory_csv(const Trajectory& tr, std::ostream& os) {
    const bool real = tr.fields.empty() || tr.fields.front().is_real();
    os << (real ? "t,x,value\n" : "t,x,re,im\n");
    os << std::setprecision(17);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const Field& f = tr.fields[i];
        for (int n = 0; n < f.size(); ++n) {
            os << tr.times[i] << ',' << f.grid().x(n) << ',' << f[n].real();
            if (!real) os << ',' << f[n].imag();
            os << '\n';
        }
    }
}

} // namespace gbo
