#pragma once

#include "gbo/evolution.hpp"
#include "gbo/fit.hpp"
#include "gbo/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <vector>

namespace gbo {

// ---------------------------------------------------------------- mixed norms

enum class NormOrder { TimeOuter, SpaceOuter };
enum class SobolevKind { Inhomogeneous, Homogeneous };

// p is the exponent of the outer variable and q of the inner one: TimeOuter is
// L^p_t L^q_x, SpaceOuter (lateral) is L^p_x L^q_t. The weight <D>^s or |D|^s is
// applied before the norm.
struct MixedNormSpec {
    double p = 2;
    double q = 2;
    double s = 0;
    NormOrder order = NormOrder::TimeOuter;
    SobolevKind kind = SobolevKind::Inhomogeneous;
};

namespace detail {

inline Field sobolev_weight(const Field& f, double s, SobolevKind kind) {
    if (s == 0) return f;
    return kind == SobolevKind::Inhomogeneous ? japanese_power(f, s) : abs_d_power(f, s);
}

// Composite trapezoid weights for the (possibly non-uniform) sample times.
inline std::vector<double> trapezoid_weights(const std::vector<double>& t) {
    std::vector<double> w(t.size(), 0.0);
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        const double h = t[i + 1] - t[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    return w;
}

// Accumulates |v|^p (or the max for p = inf) with weight w.
struct PowerSum {
    double p;
    double acc = 0;
    void add(double v, double w) {
        if (std::isinf(p))
            acc = std::max(acc, std::abs(v));
        else
            acc += w * std::pow(std::abs(v), p);
    }
    double value() const { return std::isinf(p) ? acc : std::pow(acc, 1.0 / p); }
};

} // namespace detail

inline double mixed_norm(const Trajectory& tr, const MixedNormSpec& spec) {
    require(tr.size() > 0, "mixed norm of an empty trajectory");
    require(spec.p >= 1 && spec.q >= 1, "mixed norm exponents must be at least 1");
    for (std::size_t i = 1; i < tr.size(); ++i) require(tr.times[i] > tr.times[i - 1], "trajectory times must increase");
    const Grid& g = tr.fields.front().grid();
    const auto wt = detail::trapezoid_weights(tr.times);
    std::vector<std::vector<cplx>> samples(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i)
        samples[i] = detail::sobolev_weight(tr.fields[i].as_complex(), spec.s, spec.kind).samples();

    if (spec.order == NormOrder::TimeOuter) {
        detail::PowerSum outer{spec.p};
        for (std::size_t i = 0; i < tr.size(); ++i) {
            detail::PowerSum inner{spec.q};
            for (const auto& v : samples[i]) inner.add(std::abs(v), g.dx());
            outer.add(inner.value(), wt[i]);
        }
        return outer.value();
    }
    detail::PowerSum outer{spec.p};
    for (int n = 0; n < g.size(); ++n) {
        detail::PowerSum inner{spec.q};
        for (std::size_t i = 0; i < tr.size(); ++i) inner.add(std::abs(samples[i][n]), wt[i]);
        outer.add(inner.value(), g.dx());
    }
    return outer.value();
}

// S = L^inf_t L^2_x  intersected with  L^4_t W^{-(1-alpha)/4, inf}_x; the norm is the sum.
inline double strichartz_norm(const Trajectory& tr, double alpha) {
    return mixed_norm(tr, {INFINITY, 2, 0}) + mixed_norm(tr, {4, INFINITY, -(1 - alpha) / 4});
}

// ||D|^{-1/4} u|_{L^4_x L^inf_t} + ||D|^{alpha/2} u|_{L^inf_x L^2_t}.
inline double lateral_norm(const Trajectory& tr, double alpha) {
    return mixed_norm(tr, {4, INFINITY, -0.25, NormOrder::SpaceOuter, SobolevKind::Homogeneous}) +
           mixed_norm(tr, {INFINITY, 2, alpha / 2, NormOrder::SpaceOuter, SobolevKind::Homogeneous});
}

inline bool strichartz_admissible(double p, double q) {
    if (!(p >= 2 && q >= 1)) return false;
    const double lhs = (std::isinf(p) ? 0.0 : 2.0 / p) + (std::isinf(q) ? 0.0 : 1.0 / q);
    return std::abs(lhs - 0.5) <= 1e-12;
}

// ---------------------------------------------------------------- frequency envelopes

// Block 0 is the low part chi_{<=0}; block k >= 1 is P_k.
inline Field lp_block(const Field& f, int k) {
    return k == 0 ? lp_project(f, {LPKind::Below, 1, 0}) : P_k(f, k);
}

// Highest block whose support fits below the Nyquist frequency.
inline int top_block(const Grid& g) {
    int k = 0;
    while (resolvable(g, k + 1)) ++k;
    return k;
}

struct FrequencyEnvelope {
    std::vector<double> blocks;  // ||P_k phi||_{H^s}
    std::vector<double> c;       // envelope
    double s = 0;
    double delta = 0.125;
    double norm = 0;             // ||phi||_{H^s}

    // sum c_k^2 / ||phi||^2
    double energy_ratio() const {
        double acc = 0;
        for (double v : c) acc += v * v;
        return norm > 0 ? acc / (norm * norm) : 0.0;
    }
    // bound on energy_ratio implied by the construction: sum over j of 2^{-2 delta |j|}
    double energy_bound() const { return 1.0 + 2.0 / (std::exp2(2 * delta) - 1.0); }

    bool dominates() const {
        for (std::size_t k = 0; k < c.size(); ++k)
            if (blocks[k] > c[k] * (1 + 1e-12)) return false;
        return true;
    }
    bool slowly_varying() const {
        for (std::size_t j = 0; j < c.size(); ++j)
            for (std::size_t k = 0; k < c.size(); ++k) {
                const double d = std::abs(double(j) - double(k));
                if (c[j] > std::exp2(delta * d) * c[k] * (1 + 1e-12)) return false;
            }
        return true;
    }
};

inline FrequencyEnvelope frequency_envelope(const Field& phi, double s, double delta = 0.125) {
    require(delta > 0, "envelope exponent must be positive");
    FrequencyEnvelope env;
    env.s = s;
    env.delta = delta;
    env.norm = hs_norm(phi, s);
    const int K = top_block(phi.grid());
    for (int k = 0; k <= K; ++k) env.blocks.push_back(hs_norm(lp_block(phi, k), s));
    env.c.assign(env.blocks.size(), 0.0);
    for (int k = 0; k <= K; ++k)
        for (int j = 0; j <= K; ++j) env.c[k] = std::max(env.c[k], std::exp2(-delta * std::abs(j - k)) * env.blocks[j]);
    if (!env.dominates() || !env.slowly_varying() || env.energy_ratio() > env.energy_bound() * (1 + 1e-12))
        throw NumericalError("frequency envelope failed its own axioms");
    return env;
}

// ---------------------------------------------------------------- control parameters

struct ControlParams {
    double A = 0;  // |<D>^{(1 - 3 alpha)/4} phi|_inf
    double B = 0;  // |<D>^{(1 - alpha)/2} phi|_inf
};

inline ControlParams control_params(const Field& phi, double alpha) {
    return {linf_norm(japanese_power(phi, (1 - 3 * alpha) / 4)), linf_norm(japanese_power(phi, (1 - alpha) / 2))};
}

// ---------------------------------------------------------------- transport flows

// d_t u = |D|^alpha d_x u + phi d_x u with a frozen real background phi.
inline Trajectory paradiff_transport_solve(const Field& u0, const Field& phi, const EvolutionConfig& cfg) {
    detail::check_dt(cfg);
    require(u0.grid() == phi.grid(), "background and data live on different grids");
    const Grid& g = u0.grid();
    std::vector<cplx> lin(g.size());
    for (int j = 0; j < g.size(); ++j) lin[j] = j == g.nyquist_index() ? cplx(0) : dispersive_symbol(g.freq(j), cfg.alpha);
    detail::IFRK4 rk(lin);
    const auto b = phi.real_samples();
    const bool zero = std::all_of(b.begin(), b.end(), [](double v) { return v == 0.0; });
    auto nl = [&](double, const detail::Spectrum& c) -> detail::Spectrum {
        if (zero) return detail::Spectrum(c.size());
        auto du = fft::inverse(detail::dx_dealiased(g, c, false, 1.0));
        for (int n = 0; n < g.size(); ++n) du[n] *= b[n];
        return fft::forward(du);
    };
    Trajectory tr;
    tr.config = cfg;
    detail::Spectrum c = u0.spectrum();
    detail::march(
        cfg, [&](double t, double h) { rk.step(c, t, h, nl); },
        [&](double t) {
            tr.times.push_back(t);
            tr.fields.push_back(Field::from_spectrum(g, c, false));
        });
    return tr;
}

// max over y of |u(t, x) v(t, x - y)|_{L^2_{t,x}}, y on the spatial grid.
inline double bilinear_product_norm(const Trajectory& u, const Trajectory& v) {
    require(u.size() == v.size() && u.size() > 0, "trajectories must share their sample times");
    const Grid& g = u.fields.front().grid();
    const auto w = detail::trapezoid_weights(u.times);
    std::vector<double> acc(g.size(), 0.0);
    for (std::size_t i = 0; i < u.size(); ++i) {
        require(std::abs(u.times[i] - v.times[i]) <= 1e-12 * (1 + std::abs(u.times[i])), "sample times differ");
        std::vector<cplx> a(g.size()), b(g.size());
        for (int n = 0; n < g.size(); ++n) {
            a[n] = std::norm(u.fields[i][n]);
            b[n] = std::norm(v.fields[i][n]);
        }
        auto fa = fft::forward(a), fb = fft::forward(b);
        for (int j = 0; j < g.size(); ++j) fa[j] *= std::conj(fb[j]);
        const auto corr = fft::inverse(fa);
        const double weight = u.size() == 1 ? 1.0 : w[i];
        for (int n = 0; n < g.size(); ++n) acc[n] += weight * g.period() * corr[n].real();
    }
    return std::sqrt(std::max(0.0, *std::max_element(acc.begin(), acc.end())));
}

// ---------------------------------------------------------------- bilinear decay

struct BilinearOptions {
    double mu = 8;
    double sigma = 0.5;        // packet width
    int K_L = 1;
    int N = 4096;
    double background = 0.05;  // amplitude of the frozen low-frequency background
    int steps = 400;
    double data_scale = 1.0;
};

struct BilinearRun {
    double lambda = 0;
    double T = 0;
    double v_rel = 0;
    double product = 0;  // |u v|_{L^2_{t,x}} maximized over translations
    double u_norm = 0;   // |u|_{L^inf L^2}
    double v_norm = 0;
    double ratio = 0;    // product / (u_norm v_norm)
    double control = 0;  // A of the background
};

struct BilinearExperiment {
    double alpha = 1;
    double mu = 8;
    std::vector<BilinearRun> runs;
    double exponent = 0;  // fitted d log ratio / d log lambda
    double predicted() const { return -alpha / 2; }
};

// Gaussian packet e^{i xi0 x} e^{-(x - x0)^2 / (2 sigma^2)}, periodized, built from its spectrum.
inline Field gaussian_packet(const Grid& g, double x0, double xi0, double sigma) {
    std::vector<cplx> c(g.size());
    const double norm = sigma * std::sqrt(2 * pi) / g.period();
    for (int j = 0; j < g.size(); ++j) {
        if (j == g.nyquist_index()) continue;
        const double d = (g.freq(j) - xi0) * sigma;
        c[j] = norm * std::exp(-0.5 * d * d) * std::exp(cplx(0, -(g.freq(j) - xi0) * x0));
    }
    return Field::from_spectrum(g, std::move(c), false);
}

inline Field default_background(const Grid& g, double amp) {
    return Field::sample(g, [&](double x) { return amp * (std::cos(0.5 * x + 0.3) + 0.5 * std::cos(x + 1.0)); });
}

inline BilinearRun bilinear_run(double alpha, double lambda, const BilinearOptions& o) {
    require(alpha > 0, "alpha must be positive");
    require(lambda >= 2 * o.mu && o.mu >= 1, "need lambda >= 2 mu >= 2");
    const Grid g = make_grid(o.K_L, o.N);
    require(lambda + 12 / o.sigma <= dealias_cutoff(g), "packet frequency not resolvable on the grid");
    const Field phi = default_background(g, o.background);
    require(outside_fraction(phi, [](double xi) { return std::abs(xi) <= 1.0; }) <= 1e-12,
            "background must be supported at frequencies <= 1");
    BilinearRun r;
    r.lambda = lambda;
    r.v_rel = (1 + alpha) * (std::pow(lambda, alpha) - std::pow(o.mu, alpha));
    r.T = 0.5 * g.period() / r.v_rel;
    r.control = control_params(phi, alpha).A;
    const Field u0 = o.data_scale * gaussian_packet(g, 0.5 * g.period(), lambda, o.sigma);
    const Field v0 = gaussian_packet(g, 0.5 * g.period(), o.mu, o.sigma);
    const EvolutionConfig cfg{alpha, r.T / o.steps, r.T, false, 1};
    const Trajectory tu = paradiff_transport_solve(u0, phi, cfg);
    const Trajectory tv = paradiff_transport_solve(v0, phi, cfg);
    r.product = bilinear_product_norm(tu, tv);
    r.u_norm = mixed_norm(tu, {INFINITY, 2, 0});
    r.v_norm = mixed_norm(tv, {INFINITY, 2, 0});
    r.ratio = r.product / (r.u_norm * r.v_norm);
    return r;
}

inline BilinearExperiment bilinear_decay_experiment(double alpha, const std::vector<double>& lambdas,
                                                    const BilinearOptions& o = {}) {
    BilinearExperiment ex;
    ex.alpha = alpha;
    ex.mu = o.mu;
    ex.runs.resize(lambdas.size());
    parallel_for(static_cast<int>(lambdas.size()), [&](int i) { ex.runs[i] = bilinear_run(alpha, lambdas[i], o); });
    if (lambdas.size() >= 2) {
        std::vector<double> x, y;
        for (const auto& r : ex.runs) {
            x.push_back(r.lambda);
            y.push_back(r.ratio);
        }
        ex.exponent = loglog_fit(x, y).slope;
    }
    return ex;
}

// ---------------------------------------------------------------- convergence of regularized data

struct LwpOptions {
    double alpha = 1.5;
    double s = 0;
    double eps = 0.01;
    int K_L = 0;
    int N = 2048;
    double dt = 1e-3;
    double T = 1;
    int n_lo = 4;
    int n_hi = 9;
    int top = 8;  // highest data block
    std::uint64_t seed = 1;
    int save_every = 10;
    double delta_env = 0.125;
};

struct LwpReport {
    std::vector<int> n;            // n_lo .. n_hi - 1
    std::vector<double> diff;      // |phi^(n) - phi^(n+1)|_{L^inf_t H^{s-1/2}}
    double rate = 0;               // fitted slope of log2 diff against n (NaN if < 2 differ)
    double envelope_constant = 0;  // max_{n,k} |P_k phi^(n)|_{S^s} / c_k
    double lateral_constant = 0;   // same with S_lat, reported only
    double bilinear_constant = 0;  // max_{j != k} 2^{alpha max(j,k)/2} |phi_j phi_k|_{L^2} / (d_j d_k)
    double data_norm = 0;
    FrequencyEnvelope envelope;
};

// Real data with equal H^s mass in every block 1..top, random phases, |phi0|_{H^s} = eps.
inline Field flat_dyadic_data(const Grid& g, double s, double eps, int top, std::uint64_t seed) {
    require(std::exp2(top + 1) <= dealias_cutoff(g), "data blocks not resolvable on the grid");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0, 2 * pi);
    Field sum = Field::zeros(g);
    for (int k = 1; k <= top; ++k) {
        std::vector<cplx> c(g.size());
        for (int j = 1; j < g.nyquist_index(); ++j) {
            const double xi = g.freq(j);
            if (lp::chi(k, xi) <= 0) continue;
            c[j] = std::exp(cplx(0, phase(rng))) * lp::chi(k, xi);
            c[g.size() - j] = std::conj(c[j]);
        }
        Field block = Field::from_spectrum(g, std::move(c), true);
        sum = sum + (1.0 / hs_norm(block, s)) * block;
    }
    return (eps / hs_norm(sum, s)) * sum;
}

inline LwpReport lwp_convergence_experiment(const Field& phi0, const LwpOptions& o) {
    require(o.s > 0.75 * (1 - o.alpha) - 1e-12, "Sobolev index below the well-posedness threshold");
    require(o.n_hi > o.n_lo + 1, "need at least two regularization levels");
    const Grid& g = phi0.grid();
    require(hs_norm(phi0, o.s) <= 0.1 * (1 + 1e-12), "data too large (|phi0|_{H^s} > 0.1)");
    require(std::exp2(o.n_hi) <= dealias_cutoff(g), "regularization levels not resolvable on the grid");
    LwpReport rep;
    rep.data_norm = hs_norm(phi0, o.s);
    rep.envelope = frequency_envelope(phi0, o.s, o.delta_env);

    const int levels = o.n_hi - o.n_lo + 1;
    std::vector<Trajectory> runs(levels);
    const EvolutionConfig cfg{o.alpha, o.dt, o.T, true, o.save_every};
    parallel_for(levels, [&](int i) { runs[i] = gbo_solve(P_below(phi0, o.n_lo + i), cfg); });

    for (int i = 0; i + 1 < levels; ++i) {
        double worst = 0;
        for (std::size_t t = 0; t < runs[i].size(); ++t)
            worst = std::max(worst, hs_norm(runs[i].fields[t] - runs[i + 1].fields[t], o.s - 0.5));
        rep.n.push_back(o.n_lo + i);
        rep.diff.push_back(worst);
    }
    std::vector<double> nx, ly;
    for (std::size_t i = 0; i < rep.n.size(); ++i) {
        if (rep.diff[i] <= 1e-13 * rep.data_norm) continue;  // identical up to rounding
        nx.push_back(rep.n[i]);
        ly.push_back(std::log2(rep.diff[i]));
    }
    rep.rate = nx.size() >= 2 ? least_squares(nx, ly).slope : NAN;

    const int K = static_cast<int>(rep.envelope.c.size()) - 1;
    auto block_traj = [&](const Trajectory& tr, int k) {
        Trajectory b;
        b.config = tr.config;
        b.times = tr.times;
        for (const auto& f : tr.fields) b.fields.push_back(japanese_power(lp_block(f, k), o.s));
        return b;
    };
    std::vector<std::vector<double>> s_ratio(levels), lat_ratio(levels);
    parallel_for(levels, [&](int i) {
        for (int k = 0; k <= K; ++k) {
            const double ck = rep.envelope.c[k];
            if (ck <= 1e-14 * rep.data_norm) continue;
            const Trajectory b = block_traj(runs[i], k);
            s_ratio[i].push_back(strichartz_norm(b, o.alpha) / ck);
            lat_ratio[i].push_back(lateral_norm(b, o.alpha) / ck);
        }
    });
    for (int i = 0; i < levels; ++i) {
        for (double v : s_ratio[i]) rep.envelope_constant = std::max(rep.envelope_constant, v);
        for (double v : lat_ratio[i]) rep.lateral_constant = std::max(rep.lateral_constant, v);
    }

    // bilinear bound on the least regularized run, blocks 3..top
    const Trajectory& fine = runs.back();
    const int top = std::min(K, o.top);
    std::vector<Trajectory> blocks;
    for (int k = 3; k <= top; ++k) blocks.push_back(block_traj(fine, k));
    const auto w = detail::trapezoid_weights(fine.times);
    for (int j = 3; j <= top; ++j)
        for (int k = j + 1; k <= top; ++k) {
            double acc = 0;
            for (std::size_t t = 0; t < fine.size(); ++t) {
                const Field p = pointwise(blocks[j - 3].fields[t], blocks[k - 3].fields[t]);
                acc += w[t] * std::pow(l2_norm_physical(p), 2);
            }
            const double dj = std::exp2(-o.s * j) * rep.envelope.c[j], dk = std::exp2(-o.s * k) * rep.envelope.c[k];
            const double v = std::exp2(o.alpha * k / 2) * std::sqrt(acc) / (dj * dk);
            rep.bilinear_constant = std::max(rep.bilinear_constant, v);
        }
    return rep;
}

inline void write_lwp_csv(const LwpReport& r, std::ostream& os) {
    os << "n,difference\n";
    char buf[64];
    for (std::size_t i = 0; i < r.n.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%d,%.17g\n", r.n[i], r.diff[i]);
        os << buf;
    }
}

inline void write_bilinear_csv(const BilinearExperiment& ex, std::ostream& os) {
    os << "alpha,mu,lambda,T,v_rel,product,ratio\n";
    char buf[192];
    for (const auto& r : ex.runs) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", ex.alpha, ex.mu, r.lambda, r.T,
                      r.v_rel, r.product, r.ratio);
        os << buf;
    }
}

} // namespace gbo
