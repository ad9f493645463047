#pragma once

#include "dynlab/deformation.hpp"
#include "dynlab/dynamics.hpp"
#include "dynlab/parallel.hpp"
#include "dynlab/rng.hpp"

#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace dynlab {

struct SeriesValue {
    double value = 0.0;
    double tail = 0.0; // bound on the truncation error
};

/// Truncated unstable-slope series
///   alpha_uu(p) = sum_{j=0}^{depth-1} lambda_uu^{-1} rho^j dg/dx(x_{-(j+1)})
/// along the backward orbit determined by (x0, word). The word is read
/// periodically past its stored length.
inline SeriesValue alpha_uu_series_at(double x0, const Itinerary& backward,
                                      const MapParams& p, int depth) {
    if (depth < 1) throw DepthTooSmall("alpha_uu_series: depth must be >= 1");
    const double rho = p.rho();
    double coeff = 1.0 / p.lambda_uu();
    double cur = wrap01(x0);
    double acc = 0.0;
    for (int j = 0; j < depth; ++j) {
        cur = (cur + static_cast<double>(backward.at(j) - 1)) / p.l;
        acc += coeff * alpha_of(cur, p);
        coeff *= rho;
    }
    const double tail = p.sup_alpha() * std::pow(rho, depth) / (p.lambda_uu() * (1.0 - rho));
    return {acc, tail};
}

/// Series with the base point pinned to the word's periodic angle.
inline SeriesValue alpha_uu_series(const Itinerary& backward, const MapParams& p, int depth) {
    if (backward.depth() < depth)
        throw DepthTooSmall("alpha_uu_series: backward word shorter than requested depth");
    return alpha_uu_series_at(periodic_base_x(backward, p.l), backward, p, depth);
}

/// Unnormalized unstable direction (1, alpha_uu, 0).
inline std::array<double, 3> unstable_vector(const Itinerary& backward, const MapParams& p,
                                             int depth) {
    return {1.0, alpha_uu_series(backward, p, depth).value, 0.0};
}

/// Closed-form slope-gap floor for example 1:
///   C(eps) = lambda_uu^{-1} rho^{log eps / log lambda_ss} alpha (1-3rho)/(1-rho).
/// Positive only when rho < 1/3.
inline double transversality_constant(double eps, const MapParams& p) {
    if (p.example != Example::ex1)
        throw std::invalid_argument("transversality_constant: defined for example 1");
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("transversality_constant: eps must be in (0,1)");
    const double rho = p.rho();
    if (rho >= 1.0 / 3.0) throw InvalidRho("transversality_constant: rho >= 1/3, bound vacuous");
    const double expo = std::log(eps) / std::log(p.lambda_ss);
    return (1.0 / p.lambda_uu()) * std::pow(rho, expo) * p.alpha * (1.0 - 3.0 * rho) /
           (1.0 - rho);
}

struct Ex2Constants {
    double K = 0.0;
    double K2 = 0.0;
    bool K_positive = false;
    bool K2_positive = false;
    // the source formula writes a bare lambda; it is resolved as lambda_c
    std::string lambda_resolution = "lambda = lambda_c";
};

/// Example-2 separation constants, evaluated verbatim with lambda = lambda_c.
inline Ex2Constants example2_constants(const MapParams& p) {
    const double pi = std::numbers::pi;
    const double lam = p.lambda_c;
    Ex2Constants out;
    out.K = 2.0 * pi *
            (std::cos(2.0 * pi / 5.0) -
             lam / 4.0 * (std::cos(pi / 5.0) + std::cos(pi / 2.0 - pi / 5.0)) -
             lam * lam / 4.0 * 2.0 / (2.0 - lam));
    out.K2 = 2.0 * (std::sin(2.0 * pi / 5.0) - lam * std::sin(3.0 * pi / 10.0) -
                    lam * lam / (1.0 - lam));
    out.K_positive = out.K > 0.0;
    out.K2_positive = out.K2 > 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Slope field for the deformed family
// ---------------------------------------------------------------------------

/// One attractor sample: a rotation of a periodic backward word together with
/// the reconstructed orbit point and the local operator data.
struct SlopeSample {
    Itinerary word;     // backward word of the sample (rotation of its cycle)
    Point p;            // reconstructed point on (near) the attractor
    double value = 0.0; // alpha_uu at the sample
    double residual = 0.0;
};

struct FieldGrid {
    int n_words = 200;
    int period = 17;   // kept coprime to n_power so orbits sweep all rotations
    std::uint64_t seed = 1;
    int warmup_cycles = 4;
};

struct SlopeField {
    std::vector<SlopeSample> samples;
    double eta = 0.0;       // measured contraction factor
    int iterations = 0;
    double final_change = 0.0;
    double sup_bound = 0.0;

    double sup_value() const {
        double m = 0.0;
        for (const auto& s : samples) m = std::max(m, std::fabs(s.value));
        return m;
    }
};

namespace detail {

inline Itinerary rotate_left(const Itinerary& w, int r) {
    Itinerary out;
    out.orientation = Orientation::backward;
    const int P = w.depth();
    out.symbols.resize(P);
    for (int i = 0; i < P; ++i) out.symbols[i] = w.symbols[(i + r) % P];
    return out;
}

inline Itinerary random_word(Rng& rng, int l, int len) {
    Itinerary w;
    w.orientation = Orientation::backward;
    w.symbols.resize(len);
    for (auto& s : w.symbols) s = 1 + static_cast<int>(rng.below(l));
    return w;
}

// Periodic x-cycle of a word under the n-step expansion: rotation r's base
// point, computed in closed form so the cycle cannot drift.
struct WordCycle {
    std::vector<double> base_x;   // base point of each rotation
    std::vector<int> order;       // rotation visited at step m: order[m]
};

inline WordCycle make_cycle(const Itinerary& w, int l, int n) {
    const int P = w.depth();
    WordCycle c;
    c.base_x.resize(P);
    for (int r = 0; r < P; ++r) c.base_x[r] = periodic_base_x(rotate_left(w, r), l);
    c.order.resize(P);
    int r = 0;
    for (int m = 0; m < P; ++m) {
        c.order[m] = r;
        r = ((r - n) % P + P) % P;
    }
    return c;
}

} // namespace detail

/// Fixed point of the slope-transfer operator for the deformed family,
/// sampled on periodic backward words. Each word contributes one closed
/// orbit; points are reconstructed by forward iteration in (y, z) over the
/// exact periodic x-cycle, then the affine slope recursion
///   alpha(F q) = lambda_uu^{-n} (g_n' + Phi_x)(q) + lambda_uu^{-n}(lambda_c^n + Phi_y)(q) alpha(q)
/// is iterated to sup-convergence.
inline SlopeField alpha_uu_fixed_point(const MapParams& params, const FieldGrid& grid,
                                       double tol, int max_iters = 200, int threads = 0,
                                       std::vector<double>* change_log = nullptr) {
    const DeformedMap map(params);
    const int n = params.n_power;
    int period = grid.period;
    while (std::gcd(period, n) != 1) ++period; // orbit must sweep every rotation

    // eta over the bump support (analytic grid bound), checked before iterating
    double eta = map.lambda_c_n() / map.lambda_uu_n();
    {
        const int G = 160;
        const double dlt = params.delta_bump;
        for (int i = 0; i <= G; ++i)
            for (int j = 0; j <= G; ++j) {
                const double x = map.q.x + dlt * (2.0 * i / G - 1.0);
                const double y = map.q.y + dlt * (2.0 * j / G - 1.0);
                const double lam =
                    (map.lambda_c_n() + map.phi_grad(wrap01(x), y)[1]) / map.lambda_uu_n();
                eta = std::max(eta, std::fabs(lam));
            }
    }
    if (eta >= 1.0) throw NotContracting(eta);

    struct Orbit {
        std::vector<Point> pts;     // step order
        std::vector<double> a_term; // A(q_m)
        std::vector<double> l_term; // lambda(q_m)
        std::vector<int> rot;       // rotation index per step
    };
    std::vector<Orbit> orbits(grid.n_words);

    parallel_for(grid.n_words, threads, [&](long wi) {
        Rng rng(grid.seed, static_cast<std::uint64_t>(wi));
        Itinerary w = detail::random_word(rng, params.l, period);
        auto cyc = detail::make_cycle(w, params.l, n);
        Orbit orb;
        orb.rot = cyc.order;
        orb.pts.resize(period);
        orb.a_term.resize(period);
        orb.l_term.resize(period);
        // seed (y, z) from the base attractor and run warm-up cycles
        AttractorPoint seed =
            attractor_point(extend_periodic(detail::rotate_left(w, cyc.order[0]), 60), params, 60);
        double y = seed.p.y, z = seed.p.z;
        const int total = (grid.warmup_cycles + 1) * period;
        for (int m = 0; m < total; ++m) {
            const int r = cyc.order[m % period];
            const double x = cyc.base_x[r];
            const int slot = m - grid.warmup_cycles * period;
            if (slot >= 0) {
                orb.pts[slot] = Point{x, y, z};
                const auto pg = map.phi_grad(x, y);
                orb.a_term[slot] = (g_n_deriv(x, n, params) + pg[0]) / map.lambda_uu_n();
                orb.l_term[slot] = (map.lambda_c_n() + pg[1]) / map.lambda_uu_n();
            }
            const double ynew = map.lambda_c_n() * y + g_n(x, n, params) + map.phi(x, y);
            const double znew = map.lambda_ss_n() * z + h_n(x, n, params);
            y = ynew;
            z = znew;
        }
        orbits[wi] = std::move(orb);
    });

    // iterate the affine recursion on every orbit until sup-change < tol
    SlopeField field;
    field.sup_bound = params.slope_sup_bound();
    std::vector<std::vector<double>> alpha(grid.n_words);
    for (int wi = 0; wi < grid.n_words; ++wi) alpha[wi].assign(period, 0.0);

    double change = 0.0;
    int iter = 0;
    for (iter = 0; iter < max_iters; ++iter) {
        change = 0.0;
        std::vector<double> changes(grid.n_words, 0.0);
        parallel_for(grid.n_words, threads, [&](long wi) {
            auto& a = alpha[wi];
            const auto& orb = orbits[wi];
            std::vector<double> next(period);
            for (int m = 0; m < period; ++m) {
                const int mn = (m + 1) % period;
                next[mn] = orb.a_term[m] + orb.l_term[m] * a[m];
            }
            double c = 0.0;
            for (int m = 0; m < period; ++m) c = std::max(c, std::fabs(next[m] - a[m]));
            a = std::move(next);
            changes[wi] = c;
        });
        for (double c : changes) change = std::max(change, c);
        if (change_log) change_log->push_back(change);
        if (change < tol) break;
    }
    if (change >= tol) throw NoConvergence("alpha_uu_fixed_point: no convergence after max_iters");

    field.eta = eta;
    field.iterations = iter + 1;
    field.final_change = change;
    for (int wi = 0; wi < grid.n_words; ++wi) {
        const auto& orb = orbits[wi];
        Rng rng(grid.seed, static_cast<std::uint64_t>(wi));
        Itinerary w = detail::random_word(rng, params.l, period);
        for (int m = 0; m < period; ++m) {
            SlopeSample s;
            s.word = detail::rotate_left(w, orb.rot[m]);
            s.p = orb.pts[m];
            s.value = alpha[wi][m];
            const int mn = (m + 1) % period;
            s.residual = std::fabs(alpha[wi][mn] - (orb.a_term[m] + orb.l_term[m] * alpha[wi][m]));
            field.samples.push_back(std::move(s));
        }
    }
    return field;
}

struct PerturbationAudit {
    int n = 0;
    double mu = 0.0;
    double eta = 0.0;
    double sup_diff = 0.0;  // measured sup |alpha_mu - alpha_0|
    double d_A = 0.0;       // sup |A_mu - A_0|
    double d_lambda = 0.0;  // sup |lambda_mu - lambda_0|
    double alpha0_sup = 0.0;
    double bound_rhs = 0.0; // (d_A + d_lambda * alpha0_sup) / (1 - eta)
    bool pass = false;
};

/// Compares the deformed slope field against the mu = 0 field on shared
/// words and evaluates the contraction-mapping perturbation bound.
inline PerturbationAudit perturbation_audit(MapParams params, const FieldGrid& grid, double tol,
                                            int threads = 0) {
    PerturbationAudit audit;
    audit.n = params.n_power;
    audit.mu = params.mu;

    MapParams base = params;
    base.mu = 0.0;
    SlopeField f_mu = alpha_uu_fixed_point(params, grid, tol, 200, threads);
    SlopeField f_0 = alpha_uu_fixed_point(base, grid, tol, 200, threads);

    audit.eta = f_mu.eta;
    for (std::size_t i = 0; i < f_mu.samples.size(); ++i)
        audit.sup_diff =
            std::max(audit.sup_diff, std::fabs(f_mu.samples[i].value - f_0.samples[i].value));
    audit.alpha0_sup = f_0.sup_value();

    // operator distance over a dense grid on the bump support; the grid is a
    // superset of the attractor there, so the bound errs on the safe side
    const DeformedMap map(params);
    const int G = 240;
    const double dlt = params.delta_bump;
    for (int i = 0; i <= G; ++i)
        for (int j = 0; j <= G; ++j) {
            const double x = wrap01(map.q.x + dlt * (2.0 * i / G - 1.0));
            const double y = map.q.y + dlt * (2.0 * j / G - 1.0);
            const auto pg = map.phi_grad(x, y);
            audit.d_A = std::max(audit.d_A, std::fabs(pg[0]) / map.lambda_uu_n());
            audit.d_lambda = std::max(audit.d_lambda, std::fabs(pg[1]) / map.lambda_uu_n());
        }
    audit.bound_rhs = (audit.d_A + audit.d_lambda * audit.alpha0_sup) / (1.0 - audit.eta);
    audit.pass = audit.sup_diff <= audit.bound_rhs;
    return audit;
}

// ---------------------------------------------------------------------------
// Exhaustive cylinder field for the base map (small depth)
// ---------------------------------------------------------------------------

struct CylinderEntry {
    Itinerary word;
    double value = 0.0;    // slope of the cylinder's periodic representative
    double residual = 0.0; // recursion residual at the representative
};

inline std::vector<CylinderEntry> cylinder_field(const MapParams& p, int depth) {
    long count = 1;
    for (int i = 0; i < depth; ++i) count *= p.l;
    std::vector<CylinderEntry> entries(count);
    for (long idx = 0; idx < count; ++idx) {
        Itinerary w;
        w.orientation = Orientation::backward;
        w.symbols.resize(depth);
        long rem = idx;
        for (int i = 0; i < depth; ++i) {
            w.symbols[i] = 1 + static_cast<int>(rem % p.l);
            rem /= p.l;
        }
        CylinderEntry e;
        e.value = alpha_uu_series(w, p, depth).value;
        // residual of alpha(F p) = lambda_uu^{-1} alpha(p) + rho alpha(p)
        const double x0 = periodic_base_x(w, p.l);
        Itinerary fw; // word of the forward image: own cell prepended
        fw.orientation = Orientation::backward;
        fw.symbols.reserve(depth + 1);
        fw.symbols.push_back(cell_of(x0, p.l));
        fw.symbols.insert(fw.symbols.end(), w.symbols.begin(), w.symbols.end());
        const double lhs = alpha_uu_series_at(wrap01(p.l * x0), fw, p, depth).value;
        const double rhs = alpha_of(x0, p) / p.lambda_uu() + p.rho() * e.value;
        e.residual = std::fabs(lhs - rhs);
        e.word = std::move(w);
        entries[idx] = std::move(e);
    }
    return entries;
}

} // namespace dynlab
