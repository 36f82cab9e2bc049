#pragma once

#include "gbo/cli/config.hpp"
#include "gbo/cli/record.hpp"
#include "gbo/estimates.hpp"
#include "gbo/evolution.hpp"
#include "gbo/gauge.hpp"
#include "gbo/normal_forms.hpp"
#include "gbo/wavepacket.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <random>
#include <string>

namespace gbo::cli {

using Runner = std::function<ResultRecord(const ExperimentConfig&)>;

namespace detail {

inline Grid grid_of(const ExperimentConfig& c) { return make_grid(c.get_int("K_L"), c.get_int("N")); }

// |u|^2 share in the outer fifth of the torus (|x - L/2| > 0.4 L); data start centred at L/2.
inline double wrap_fraction(const Field& u) {
    const Grid& g = u.grid();
    double total = 0, edge = 0;
    for (int n = 0; n < g.size(); ++n) {
        const double w = std::norm(u[n]);
        total += w;
        if (std::abs(g.x(n) - 0.5 * g.period()) > 0.4 * g.period()) edge += w;
    }
    return total > 0 ? edge / total : 0.0;
}

inline int stride_for(double T, double dt, int target = 100) {
    const double steps = std::ceil(T / dt - 1e-9);
    return std::max(1, static_cast<int>(steps / target));
}

inline EvolutionConfig evolution_of(const ExperimentConfig& c, int save_every) {
    EvolutionConfig e;
    e.alpha = c.get("alpha");
    e.dt = c.get("dt");
    e.T = c.get("T");
    e.save_every = save_every;
    return e;
}

inline void profile_rows(ResultRecord& rec, const std::string& series, const Field& f) {
    for (int n = 0; n < f.size(); ++n) rec.row(series, f.grid().x(n), f[n].real());
}

// Dyadic sweep lambda, 2 lambda, ... up to lambda_max.
inline std::vector<double> lambda_sweep(const ExperimentConfig& c) {
    std::vector<double> out;
    for (double l = c.get("lambda"); l <= c.get("lambda_max") * (1 + 1e-12); l *= 2) out.push_back(l);
    return out;
}

inline std::uint64_t seed_of(const ExperimentConfig& c) { return static_cast<std::uint64_t>(c.get("seed")); }

template <class Pred>
Field random_real(const Grid& g, std::mt19937_64& rng, Pred inside) {
    std::normal_distribution<double> nd;
    std::vector<cplx> c(g.size());
    for (int j = 1; j < g.size() / 2; ++j)
        if (inside(std::abs(g.freq(j)))) {
            c[j] = cplx(nd(rng), nd(rng));
            c[g.size() - j] = std::conj(c[j]);
        }
    return Field::from_spectrum(g, c, true);
}

inline void require_lattice(const Grid& g) {
    if (g.K_L() < 0) throw ConfigError("key 'K_L' must be >= 0 for integer-frequency data");
}

// ---------------------------------------------------------------- evolution

inline ResultRecord run_solve(const ExperimentConfig& c) {
    const Grid g = grid_of(c);
    const Field phi0 = smooth_bump(g, c.get("eps"));
    const auto tr = gbo_solve(phi0, evolution_of(c, stride_for(c.get("T"), c.get("dt"))));
    ResultRecord rec;
    rec.table = {"x", "u", {}};
    rec.add("data_h1", hs_norm(phi0, 1), "1");
    rec.add("final_l2", l2_norm(tr.back()), "1");
    rec.add("final_linf", linf_norm(tr.back()), "1");
    rec.add("mass_drift", tr.mass_drift, "1");
    rec.add("wrap_fraction", wrap_fraction(tr.back()), "1");
    profile_rows(rec, "u0", phi0);
    profile_rows(rec, "u_final", tr.back());
    return rec;
}

inline ResultRecord run_conserve(const ExperimentConfig& c) {
    const Grid g = grid_of(c);
    const double a = c.get("alpha");
    const Field phi0 = smooth_bump(g, c.get("eps"));
    const auto tr = gbo_solve(phi0, evolution_of(c, stride_for(c.get("T"), c.get("dt"))));
    const auto q0 = conserved_quantities(phi0, a);
    ResultRecord rec;
    rec.table = {"t", "relative_drift", {}};
    double dm = 0, de = 0;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const auto q = conserved_quantities(tr.fields[i], a);
        const double rm = std::abs(q.mass - q0.mass) / std::abs(q0.mass);
        const double re = std::abs(q.energy - q0.energy) / std::abs(q0.energy);
        dm = std::max(dm, rm);
        de = std::max(de, re);
        rec.row("mass", tr.times[i], rm);
        rec.row("energy", tr.times[i], re);
    }
    rec.add("mass", q0.mass, "1");
    rec.add("energy", q0.energy, "1");
    rec.add("mass_drift", dm, "1");
    rec.add("energy_drift", de, "1");
    rec.add("data_h1", hs_norm(phi0, 1), "1");
    rec.add("wrap_fraction", wrap_fraction(tr.back()), "1");
    return rec;
}

inline ResultRecord run_linearized(const ExperimentConfig& c) {
    const Grid g = grid_of(c);
    const double eps = c.get("eps");
    const Field phi0 = smooth_bump(g, eps);
    const Field v0 = smooth_bump(g, eps, 2.0);
    EvolutionConfig e = evolution_of(c, 1);
    auto both = coupled_linearized_solve(phi0, v0, e);
    const auto& v = both.linearized;
    ResultRecord rec;
    rec.table = {"t", "l2", {}};
    const int stride = stride_for(c.get("T"), c.get("dt"));
    double growth = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double r = l2_norm(v.fields[i]) / l2_norm(v0);
        growth = std::max(growth, r);
        if (i % stride == 0 || i + 1 == v.size()) rec.row("v", v.times[i], l2_norm(v.fields[i]));
    }
    rec.add("final_ratio", l2_norm(v.back()) / l2_norm(v0), "1");
    rec.add("max_ratio", growth, "1");
    rec.add("wrap_fraction", std::max(wrap_fraction(v.back()), wrap_fraction(both.background.back())), "1");
    return rec;
}

inline ResultRecord run_scaling(const ExperimentConfig& c) {
    const Grid g = grid_of(c);
    const double a = c.get("alpha"), lam = c.get("lambda");
    if (lam != std::floor(lam) || lam < 2) throw ConfigError("key 'lambda' must be an integer >= 2 for scaling");
    const int l = static_cast<int>(lam);
    // wide bump so the dilated copy stays resolved
    const Field phi0 = smooth_bump(g, c.get("eps"), 2.0);
    // psi0(x) = lam^a phi0(lam x): mode n moves to lam n
    std::vector<cplx> spec(g.size());
    const int N = g.size();
    for (int j = 0; j < N; ++j) {
        const long n = j < N / 2 ? j : j - N;
        const int out = g.index_of(n * l);
        if (out >= 0) spec[out] += std::pow(lam, a) * phi0.coeff(j);
    }
    const Field psi0 = Field::from_spectrum(g, spec, true);
    const double s = std::pow(lam, 1 + a);
    EvolutionConfig es = evolution_of(c, 1 << 30);
    EvolutionConfig ep = es;
    ep.dt *= s;
    ep.T *= s;
    const auto scaled = gbo_solve(psi0, es);
    const auto plain = gbo_solve(phi0, ep);
    std::vector<double> expect(N);
    for (int n = 0; n < N; ++n) expect[n] = std::pow(lam, a) * plain.back()[(l * n) % N].real();
    const Field e = Field::from_samples(g, expect);
    ResultRecord rec;
    rec.table = {"x", "u", {}};
    rec.add("commutation_error", l2_norm(scaled.back() - e) / l2_norm(e), "1");
    rec.add("wrap_fraction", wrap_fraction(plain.back()), "1");
    profile_rows(rec, "scaled", scaled.back());
    profile_rows(rec, "expected", e);
    return rec;
}

inline ResultRecord run_strichartz(const ExperimentConfig& c) {
    const Grid g = grid_of(c);
    const double a = c.get("alpha");
    const Field phi0 = smooth_bump(g, c.get("eps"));
    const auto tr = gbo_solve(phi0, evolution_of(c, stride_for(c.get("T"), c.get("dt"), 200)));
    ResultRecord rec;
    rec.table = {"t", "norm", {}};
    const double S = strichartz_norm(tr, a), Sl = lateral_norm(tr, a), d = l2_norm(phi0);
    rec.add("strichartz", S, "1");
    rec.add("lateral", Sl, "1");
    rec.add("data_l2", d, "1");
    rec.add("strichartz_ratio", S / d, "1");
    rec.add("lateral_ratio", Sl / d, "1");
    rec.add("wrap_fraction", wrap_fraction(tr.back()), "1");
    for (std::size_t i = 0; i < tr.size(); ++i) {
        rec.row("linf", tr.times[i], linf_norm(tr.fields[i]));
        rec.row("l2", tr.times[i], l2_norm(tr.fields[i]));
    }
    return rec;
}

// ---------------------------------------------------------------- gauge and normal forms

inline ResultRecord run_gauge_kernel(const ExperimentConfig& c) {
    const Grid g = grid_of(c);
    require_lattice(g);
    const double a = c.get("alpha"), k = c.get("k"), eps = c.get("eps");
    const Field phi = Field::sample(g, [eps](double x) { return eps * (std::cos(x) + std::sin(3 * x) * 2.0 / 3.0); });
    const auto G = build_gauge(phi, a, k);
    const auto K = gauge_kernel(G);
    std::mt19937_64 rng(seed_of(c));
    double lo = INFINITY, hi = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const Field f = random_real(g, rng, [k](double x) { return lp::chi(k, x) > 0; });
        const double r = l2_norm(apply_exp_gauge(G, f)) / l2_norm(f);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    ResultRecord rec;
    rec.table = {"distance", "abs_kernel", {}};
    rec.add("decay_statistic", kernel_decay_statistic(K, G.band.size()), "1");
    rec.add("l2_ratio_min", lo, "1");
    rec.add("l2_ratio_max", hi, "1");
    rec.add("band_modes", static_cast<double>(G.band.size()), "1");
    rec.add("wrap_fraction", 0.0, "1");
    for (int x = 0; x < g.size(); ++x) rec.row("y=0", torus_distance(g.x(x), 0, g.period()), std::abs(K(x, 0)));
    return rec;
}

inline ResultRecord run_nf_cancel(const ExperimentConfig& c) {
    const Grid g = grid_of(c);
    const double a = c.get("alpha"), k = c.get("k");
    if (std::exp2(k + 1) > dealias_cutoff(g)) throw ConfigError("key 'k': block 2^(k+1) above the dealiasing cutoff");
    std::mt19937_64 rng(seed_of(c));
    ResultRecord rec;
    rec.table = {"symbol", "residual", {}};
    double worst = 0;
    int idx = 0;
    for (SymbolId id : all_symbols) {
        const Field u = random_real(g, rng, [k](double x) { return x >= 1 && x <= std::exp2(k - 1); });
        const Field v = random_real(g, rng, [k](double x) { return x >= std::exp2(k) && x <= std::exp2(k + 1); });
        const auto r = nf_cancellation_check(u, v, BilinearSymbol{id, k, a, 0.25});
        rec.add(std::string("residual_") + symbol_name(id), r.residual, "1");
        rec.row(symbol_name(id), idx++, r.residual);
        worst = std::max(worst, r.residual);
    }
    rec.add("worst_residual", worst, "1");
    rec.add("wrap_fraction", 0.0, "1");
    return rec;
}

// Low modes 2, 3, 5 plus a high pair at 3 2^{k-1} and 3 2^{k-1} + 1, scaled by 3.
inline Field residual_data(const Grid& g, int k) {
    const int hi = 3 << (k - 1);
    return 3.0 * Field::sample(g, [hi](double x) {
               return std::cos(2 * x + 0.3) + std::cos(3 * x + 1.1) + 0.7 * std::cos(5 * x + 2) +
                      std::cos(hi * x + 0.5) + 0.8 * std::cos((hi + 1) * x + 1.7);
           });
}

inline ResultRecord run_nf_residual(const ExperimentConfig& c) {
    const Grid g = grid_of(c);
    require_lattice(g);
    const double a = c.get("alpha"), eps = c.get("eps");
    const int k = c.get_int("k");
    if (eps > 1e-2) throw ConfigError("key 'eps' must be <= 1e-2 for the residual sweep");
    if (std::exp2(k + 2) > dealias_cutoff(g)) throw ConfigError("key 'k': block too high for the grid");
    const auto pts = residual_scaling_test(residual_data(g, k), a, k, {eps, eps / 2, eps / 4});
    ResultRecord rec;
    rec.table = {"eps", "residual_l2", {}};
    for (const auto& p : pts) rec.row("residual", p.eps, p.norm);
    rec.add("exponent_1", pts[1].exponent, "1");
    rec.add("exponent_2", pts[2].exponent, "1");
    rec.add("exponent", std::min(pts[1].exponent, pts[2].exponent), "1");
    rec.add("wrap_fraction", 0.0, "1");
    return rec;
}

// ---------------------------------------------------------------- wave packets

inline ResultRecord run_hamilton(const ExperimentConfig& c) {
    const double m = c.get("m"), lambda = c.get("lambda");
    std::mt19937_64 rng(seed_of(c));
    std::uniform_real_distribution<double> u01(0, 1);
    const int samples = 50;
    double dxx = 0, xi_lo = INFINITY, xi_hi = 0, r_lo = INFINITY, r_hi = 0;
    int admissible = 0;
    ResultRecord rec;
    rec.table = {"t", "value", {}};
    for (int i = 0; i < samples; ++i) {
        const double tau = c.given.count("tau") ? c.get("tau") : std::pow(lambda, -m * u01(rng));
        const auto b = random_transport(lambda, m, 0, rng);
        if (check_admissible(b, lambda, m).admissible()) ++admissible;
        const RescaledSymbol s(b, lambda, m, tau);
        const PhasePoint p0{5 * u01(rng), s.frequency() * (0.8 + 0.4 * u01(rng))};
        const auto path = hamilton_flow(p0, s, 0.1 / tau);
        const double target = s.dispersion() * m * (m - 1) * std::pow(p0.xi, m - 2);
        for (const auto& p : path) {
            dxx = std::max(dxx, std::abs(p.xx - 1));
            xi_lo = std::min(xi_lo, p.xi / p0.xi);
            xi_hi = std::max(xi_hi, p.xi / p0.xi);
            if (p.t > 0) {
                const double r = p.xxi / (p.t * target);
                r_lo = std::min(r_lo, r);
                r_hi = std::max(r_hi, r);
            }
            if (i == 0) {
                rec.row("dx_x", p.t, p.xx);
                rec.row("dxi_x_over_t", p.t, p.t > 0 ? p.xxi / (p.t * target) : 1.0);
            }
        }
    }
    rec.add("samples", samples, "1");
    rec.add("admissible_samples", admissible, "1");
    rec.add("max_abs_dxx_minus_1", dxx, "1");
    rec.add("xi_ratio_min", xi_lo, "1");
    rec.add("xi_ratio_max", xi_hi, "1");
    rec.add("dxix_ratio_min", r_lo, "1");
    rec.add("dxix_ratio_max", r_hi, "1");
    rec.add("wrap_fraction", 0.0, "1");
    return rec;
}

inline ResultRecord run_eikonal(const ExperimentConfig& c) {
    const double m = c.get("m"), lambda = c.get("lambda");
    const double tau = c.get("tau", std::pow(lambda, -m / 2));
    std::mt19937_64 rng(seed_of(c));
    const RescaledSymbol s(random_transport(lambda, m, 0, rng), lambda, m, tau);
    const double xi0 = s.frequency(), x0 = 0.0, T = 0.1 / tau;
    std::vector<double> launch;
    for (int i = 0; i < 201; ++i) launch.push_back(-3 + 0.03 * i);
    const double h = std::min(1e-3 * T, 0.5 / std::abs(s.a_xi(0, x0, xi0)));
    const auto tabs = eikonal_solve(x0, xi0, s, launch, {T / 2 - h, T / 2, T / 2 + h, T}, T / 4000);
    const auto& tab = tabs[1];
    const auto e = hamilton_flow({0.4, xi0}, s, T / 2, {T / 4000, 1, true}).back();
    double pde = 0;
    const double lo = std::max(tabs[0].lo(), tabs[2].lo()), hi = std::min(tabs[0].hi(), tabs[2].hi());
    for (double q : {0.25, 0.5, 0.75}) {
        const double y = lo + q * (hi - lo);
        const double dt_psi = (tabs[2].eval(y)[0] - tabs[0].eval(y)[0]) / (2 * h);
        const double av = s.a(T / 2, y, tab.eval(y)[1]);
        pde = std::max(pde, std::abs(dt_psi + av) / std::abs(av));
    }
    double d2 = 0;
    for (const auto& t : tabs)
        for (double v : t.d2psi) d2 = std::max(d2, std::abs(v));
    ResultRecord rec;
    rec.table = {"y", "value", {}};
    rec.add("slope_error", std::abs(tab.eval(e.x)[1] - e.xi) / std::abs(e.xi), "1");
    rec.add("pde_residual", pde, "1");
    rec.add("max_abs_d2psi", d2, "1/length^2");
    rec.add("wrap_fraction", 0.0, "1");
    const auto& last = tabs.back();
    for (std::size_t i = 0; i < last.y.size(); ++i) {
        rec.row("psi", last.y[i], last.psi[i]);
        rec.row("dpsi", last.y[i], last.dpsi[i]);
    }
    return rec;
}

inline ResultRecord run_fbi(const ExperimentConfig& c) {
    const Grid g = grid_of(c);
    const double xc = 0.5 * g.period();
    const Field f = Field::sample(g, [xc](double x) {
        return std::exp(-0.5 * (x - xc) * (x - xc)) * cplx(std::cos(5 * x), std::sin(3 * x)) + 0.3 * std::sin(2 * x);
    });
    const auto F = fbi_transform(f);
    const Field back = fbi_inverse(F);
    ResultRecord rec;
    rec.table = {"xi", "mass", {}};
    rec.add("isometry_ratio", F.l2_norm() / l2_norm(f), "1");
    rec.add("inversion_error", l2_norm(back - f) / l2_norm(f), "1");
    rec.add("wrap_fraction", wrap_fraction(f), "1");
    for (int j = 0; j < g.size(); ++j) {
        double acc = 0;
        for (int n = 0; n < g.size(); ++n) acc += std::norm(F.at(j, n));
        rec.row("xi_marginal", g.freq(j), acc * g.dx());
    }
    return rec;
}

inline ResultRecord run_packet(const ExperimentConfig& c) {
    const Grid g = grid_of(c);
    const double m = c.get("m"), lambda = c.get("lambda"), tau = c.get("tau");
    std::mt19937_64 rng(seed_of(c));
    const RescaledSymbol probe({}, lambda, m, tau);
    const auto b = random_transport(lambda, m, g.dk() / probe.mu(), rng);
    if (!check_admissible(b, lambda, m).admissible()) throw NumericalError("sampled transport is not admissible");
    const RescaledSymbol s(b, lambda, m, tau);
    const PhasePoint p0{0.8 * g.period(), s.frequency()};
    const double T = 0.1 / tau;
    ResultRecord rec;
    rec.table = {"t", "fraction", {}};
    CoherenceReport last;
    for (int i = 0; i <= 4; ++i) {
        const auto r = packet_coherence_check(s, g, p0, T * i / 4, 10.0);
        rec.row("fraction", r.t, r.fraction);
        last = r;
    }
    rec.add("fraction", last.fraction, "1");
    rec.add("predicted_x", last.predicted.x, "length");
    rec.add("predicted_xi", last.predicted.xi, "1/length");
    rec.add("centroid_dx", torus_offset(last.centroid.x, last.predicted.x, g.period()), "length");
    rec.add("centroid_dxi", last.centroid.xi - last.predicted.xi, "1/length");
    rec.add("norm_drift", last.norm_drift, "1");
    rec.add("wrap_fraction", 0.0, "1");
    return rec;
}

inline ResultRecord run_dispersive_decay(const ExperimentConfig& c) {
    DecayOptions o;
    o.seed = seed_of(c);
    const auto ex = dispersive_decay_experiment(c.get("m"), lambda_sweep(c), o);
    ResultRecord rec;
    rec.table = {"t", "sup", {}};
    double wrap = 0;
    for (const auto& r : ex.runs) {
        wrap = std::max(wrap, r.wrap);
        char name[48];
        std::snprintf(name, sizeof name, "lambda=%g", r.lambda);
        for (std::size_t i = 0; i < r.t.size(); ++i) rec.row(name, r.t[i], r.sup[i]);
    }
    rec.add("mean_slope", ex.mean_slope, "1");
    rec.add("worst_slope_error", ex.worst_slope_error, "1");
    rec.add("lambda_exponent", ex.lambda_exponent, "1");
    rec.add("delta", ex.delta(), "1");
    rec.add("wrap_fraction", wrap, "1");
    return rec;
}

// ---------------------------------------------------------------- estimates

inline ResultRecord run_bilinear(const ExperimentConfig& c) {
    BilinearOptions o;
    o.mu = c.get("mu");
    const auto ex = bilinear_decay_experiment(c.get("alpha"), lambda_sweep(c), o);
    ResultRecord rec;
    rec.table = {"lambda", "value", {}};
    for (const auto& r : ex.runs) {
        rec.row("ratio", r.lambda, r.ratio);
        rec.row("ratio_sqrt_vrel", r.lambda, r.ratio * std::sqrt(r.v_rel));
    }
    rec.add("exponent", ex.exponent, "1");
    rec.add("predicted", ex.predicted(), "1");
    rec.add("wrap_fraction", 0.0, "1");
    return rec;
}

inline ResultRecord run_envelope(const ExperimentConfig& c) {
    const Grid g = grid_of(c);
    const int top = top_block(g) - 1;
    if (top < 1) throw ConfigError("key 'N': grid resolves no dyadic block");
    const Field phi = flat_dyadic_data(g, c.get("s"), c.get("eps"), top, seed_of(c));
    const auto env = frequency_envelope(phi, c.get("s"));
    ResultRecord rec;
    rec.table = {"k", "norm", {}};
    for (std::size_t k = 0; k < env.c.size(); ++k) {
        rec.row("block", k, env.blocks[k]);
        rec.row("envelope", k, env.c[k]);
    }
    rec.add("data_norm", env.norm, "1");
    rec.add("energy_ratio", env.energy_ratio(), "1");
    rec.add("energy_bound", env.energy_bound(), "1");
    rec.add("dominates", env.dominates() ? 1 : 0, "1");
    rec.add("slowly_varying", env.slowly_varying() ? 1 : 0, "1");
    rec.add("wrap_fraction", 0.0, "1");
    return rec;
}

inline ResultRecord run_lwp(const ExperimentConfig& c) {
    LwpOptions o;
    o.alpha = c.get("alpha");
    o.s = c.get("s");
    o.eps = c.get("eps");
    o.K_L = c.get_int("K_L");
    o.N = c.get_int("N");
    o.dt = c.get("dt");
    o.T = c.get("T");
    o.seed = seed_of(c);
    const Grid g = make_grid(o.K_L, o.N);
    const auto rep = lwp_convergence_experiment(flat_dyadic_data(g, o.s, o.eps, o.top, o.seed), o);
    ResultRecord rec;
    rec.table = {"n", "difference", {}};
    for (std::size_t i = 0; i < rep.n.size(); ++i) rec.row("difference", rep.n[i], rep.diff[i]);
    rec.add("rate", rep.rate, "1");
    rec.add("envelope_constant", rep.envelope_constant, "1");
    rec.add("lateral_constant", rep.lateral_constant, "1");
    rec.add("bilinear_constant", rep.bilinear_constant, "1");
    rec.add("data_norm", rep.data_norm, "1");
    rec.add("wrap_fraction", 0.0, "1");
    return rec;
}

} // namespace detail

inline const std::map<std::string, Runner>& registry() {
    static const std::map<std::string, Runner> r = {
        {"solve", detail::run_solve},
        {"linearized", detail::run_linearized},
        {"conserve", detail::run_conserve},
        {"scaling", detail::run_scaling},
        {"gauge-kernel", detail::run_gauge_kernel},
        {"nf-cancel", detail::run_nf_cancel},
        {"nf-residual", detail::run_nf_residual},
        {"hamilton", detail::run_hamilton},
        {"eikonal", detail::run_eikonal},
        {"fbi", detail::run_fbi},
        {"packet", detail::run_packet},
        {"dispersive-decay", detail::run_dispersive_decay},
        {"strichartz", detail::run_strichartz},
        {"bilinear", detail::run_bilinear},
        {"envelope", detail::run_envelope},
        {"lwp-converge", detail::run_lwp}};
    return r;
}

// Dispatches to the owning module; errors keep their type and gain the experiment id.
inline ResultRecord run_experiment(const ExperimentConfig& cfg) {
    auto it = registry().find(cfg.experiment);
    if (it == registry().end()) throw ConfigError("key 'experiment': no runner for '" + cfg.experiment + "'");
    const std::string ctx = "experiment " + cfg.experiment + ": ";
    const auto start = std::chrono::steady_clock::now();
    ResultRecord rec;
    try {
        rec = it->second(cfg);
    } catch (const ConfigError& e) {
        throw ConfigError(ctx + e.what());
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(ctx + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(ctx + e.what());
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rec.config = config_echo(cfg);
    return rec;
}

} // namespace gbo::cli
