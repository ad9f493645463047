#pragma once

#include "dynlab/unstable_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace dynlab {

/// z-level of the unstable leaf coded by a backward word (h is constant on
/// each expanding cell, so the level depends on the word alone).
inline double z_of_word(const Itinerary& w, const MapParams& p, int depth) {
    double acc = 0.0, c = 1.0;
    for (int i = 0; i < depth; ++i) {
        const int s = w.at(i);
        acc += c * (p.example == Example::ex1 ? p.shifts_d[s - 1] : (s == 1 ? 0.5 : -0.5));
        c *= p.lambda_ss;
    }
    return acc;
}

inline double z_tail_bound(const MapParams& p, int depth) {
    return p.sup_h() * std::pow(p.lambda_ss, depth) / (1.0 - p.lambda_ss);
}

/// y-coordinate of the leaf point over base angle x (series to `depth`).
inline double leaf_y(double x, const Itinerary& w, const MapParams& p, int depth) {
    const auto xs = backward_x_orbit(x, w, depth, p.l);
    double acc = 0.0, c = 1.0;
    for (int i = 0; i < depth; ++i) {
        acc += c * g_of(xs[i], p);
        c *= p.lambda_c;
    }
    return acc;
}

/// A sampled piece of one unstable leaf: the graph x -> (x, y(x), z) over an
/// x-interval, z constant along the piece.
struct UnstableCurve {
    Itinerary word;
    int depth = 40;
    double x_lo = 0.0, x_hi = 1.0;
    double z_level = 0.0;
    std::vector<Point> samples;
    double length = 0.0;
};

inline UnstableCurve make_unstable_curve(const Itinerary& word, const MapParams& p, int depth,
                                         double x_lo = 0.0, double x_hi = 1.0,
                                         int n_samples = 257,
                                         double max_length = std::numeric_limits<double>::infinity()) {
    if (depth < 1 || word.depth() < 1) throw DepthTooSmall("make_unstable_curve: bad depth");
    if (!(x_lo >= 0.0 && x_lo < x_hi && x_hi <= 1.0))
        throw std::invalid_argument("make_unstable_curve: need 0 <= x_lo < x_hi <= 1");
    UnstableCurve c;
    c.word = word;
    c.depth = depth;
    c.x_lo = x_lo;
    c.x_hi = x_hi;
    c.z_level = z_of_word(word, p, depth);
    for (int pass = 0; pass < 2; ++pass) {
        c.samples.resize(n_samples);
        c.length = 0.0;
        for (int k = 0; k < n_samples; ++k) {
            const double x = c.x_lo + (c.x_hi - c.x_lo) * k / (n_samples - 1);
            c.samples[k] = Point{x, leaf_y(x, word, p, depth), c.z_level};
        }
        for (int k = 1; k < n_samples; ++k)
            c.length += std::hypot(c.samples[k].x - c.samples[k - 1].x,
                                   c.samples[k].y - c.samples[k - 1].y);
        if (c.length <= max_length) break;
        c.x_hi = c.x_lo + (c.x_hi - c.x_lo) * max_length / c.length;
    }
    return c;
}

/// Vertical projection onto the center-unstable plane z = target_z.
inline Point project_stable(const Point& pt, double target_z) {
    return Point{pt.x, pt.y, target_z};
}

/// Stable distance between two leaf pieces. Stable leaves are vertical
/// z-segments, so the distance is |z1 - z2| whenever the (x, y) footprints
/// meet (footprints fattened by the center-unstable radius R0), and infinity
/// otherwise. For example 2 a footprint reaching the other across the seam
/// x = 0 ~ 1 sees the identified plane z -> 1 - z.
inline double stable_distance(const UnstableCurve& c1, const UnstableCurve& c2,
                              const MapParams& p, double R0 = 0.25) {
    auto ymin = [](const UnstableCurve& c) {
        double m = c.samples.front().y;
        for (const auto& s : c.samples) m = std::min(m, s.y);
        return m;
    };
    auto ymax = [](const UnstableCurve& c) {
        double m = c.samples.front().y;
        for (const auto& s : c.samples) m = std::max(m, s.y);
        return m;
    };
    const bool x_direct = (c1.x_lo <= c2.x_hi + R0) && (c2.x_lo <= c1.x_hi + R0);
    const bool y_meet = (ymin(c1) <= ymax(c2) + R0) && (ymin(c2) <= ymax(c1) + R0);
    const bool x_wrapped = (c1.x_hi + R0 >= 1.0 && c2.x_lo <= R0 - (1.0 - c1.x_hi)) ||
                           (c2.x_hi + R0 >= 1.0 && c1.x_lo <= R0 - (1.0 - c2.x_hi));
    double best = std::numeric_limits<double>::infinity();
    if (x_direct && y_meet) best = std::fabs(c1.z_level - c2.z_level);
    if (x_wrapped && y_meet) {
        const double ident = p.example == Example::ex2 ? 1.0 - c2.z_level : c2.z_level;
        best = std::min(best, std::fabs(c1.z_level - ident));
    }
    return best;
}

// ---------------------------------------------------------------------------
// Transversality audits
// ---------------------------------------------------------------------------

struct WorstPair {
    double x0 = 0.0;
    double dss = 0.0;
    double slope_gap = 0.0;
    double angle = 0.0;
    double chart_dist = 0.0;
};

struct EpsilonAudit {
    double epsilon = 0.0;
    long pairs_found = 0;
    double theta_hat = 0.0;       // min angle over compared pairs
    double slope_gap_min = 0.0;
    double closed_form_floor = 0.0; // C(eps) for ex1, K for ex2 near-pairs
    double separation_floor = 0.0;  // ex2 only: K2 point-separation fallback
    bool pass = false;
    std::vector<WorstPair> worst;
};

struct TransversalityReport {
    std::vector<EpsilonAudit> audits;
    int depth = 0;
    long n_pairs = 0;
    std::uint64_t seed = 0;
    bool pass = false;
};

/// Monte-Carlo transversality audit: for each epsilon, samples pairs of
/// attractor leaves over a common base point with stable distance in
/// (eps, eps/lambda_ss], and compares the projected tangent slopes against
/// the closed-form floor. Pair streams are counter-seeded, so results do not
/// depend on the thread budget.
inline TransversalityReport transversality_audit(const MapParams& p,
                                                 std::span<const double> eps_list, long n_pairs,
                                                 int depth, std::uint64_t seed, int threads = 0) {
    double eps_min = 1.0;
    for (double e : eps_list) eps_min = std::min(eps_min, e);
    const int needed = static_cast<int>(std::ceil(std::log(eps_min) / std::log(p.lambda_ss))) + 4;
    if (depth < needed)
        throw InsufficientDepth("transversality_audit: depth " + std::to_string(depth) +
                                " below required " + std::to_string(needed));

    TransversalityReport rep;
    rep.depth = depth;
    rep.n_pairs = n_pairs;
    rep.seed = seed;
    rep.pass = true;

    const Ex2Constants ex2 = example2_constants(p);
    for (std::size_t ei = 0; ei < eps_list.size(); ++ei) {
        const double eps = eps_list[ei];
        EpsilonAudit audit;
        audit.epsilon = eps;
        audit.closed_form_floor =
            p.example == Example::ex1 ? transversality_constant(eps, p) : ex2.K;
        audit.separation_floor = p.example == Example::ex2 ? ex2.K2 : 0.0;

        const long max_attempts = 400 * n_pairs;
        std::vector<WorstPair> found(max_attempts);
        std::vector<char> ok(max_attempts, 0);
        parallel_for(max_attempts, threads, [&](long k) {
            Rng rng(seed, (static_cast<std::uint64_t>(ei) << 40) ^ static_cast<std::uint64_t>(k));
            const double x0 = rng.next_double();
            Itinerary w1 = detail::random_word(rng, p.l, depth);
            Itinerary w2 = detail::random_word(rng, p.l, depth);
            const double dss = std::fabs(z_of_word(w1, p, depth) - z_of_word(w2, p, depth));
            if (!(dss > eps && dss <= eps / p.lambda_ss)) return;
            WorstPair wp;
            wp.x0 = x0;
            wp.dss = dss;
            const double a1 = alpha_uu_series_at(x0, w1, p, depth).value;
            const double a2 = alpha_uu_series_at(x0, w2, p, depth).value;
            wp.slope_gap = std::fabs(a1 - a2);
            wp.angle = std::fabs(std::atan(a1) - std::atan(a2));
            wp.chart_dist = std::fabs(leaf_y(x0, w1, p, depth) - leaf_y(x0, w2, p, depth));
            found[k] = wp;
            ok[k] = 1;
        });

        double gap_min = std::numeric_limits<double>::infinity();
        double theta_min = std::numeric_limits<double>::infinity();
        for (long k = 0; k < max_attempts && audit.pairs_found < n_pairs; ++k) {
            if (!ok[k]) continue;
            const WorstPair& wp = found[k];
            ++audit.pairs_found;
            // example 2: pairs separated in the chart need no angle bound
            if (p.example == Example::ex2 && wp.chart_dist >= ex2.K2 / 2.0) continue;
            if (wp.slope_gap < gap_min) {
                gap_min = wp.slope_gap;
                theta_min = wp.angle;
            }
            if (audit.worst.size() < 8) audit.worst.push_back(wp);
            std::sort(audit.worst.begin(), audit.worst.end(),
                      [](const WorstPair& a, const WorstPair& b) {
                          return a.slope_gap < b.slope_gap;
                      });
            if (audit.worst.size() > 8) audit.worst.resize(8);
        }
        audit.slope_gap_min = gap_min;
        audit.theta_hat = theta_min;
        audit.pass = gap_min >= audit.closed_form_floor;
        rep.pass = rep.pass && audit.pass;
        rep.audits.push_back(std::move(audit));
    }
    return rep;
}

struct ExhaustiveAudit {
    double epsilon = 0.0;
    int depth = 0;
    long cylinders = 0;
    long pairs_compared = 0;
    double min_gap = 0.0; // conservative: partial-sum gap minus both tails
    double floor_C = 0.0;
    bool pass = false;
};

/// Exact enumeration over all depth-d cylinder pairs of example 1: every pair
/// whose leaf z-intervals are more than eps apart must have slope gap at
/// least C(eps). Interval arithmetic absorbs the series tails on both sides.
inline ExhaustiveAudit transversality_audit_exhaustive(const MapParams& p, double eps, int depth,
                                                       int threads = 0) {
    if (p.example != Example::ex1)
        throw std::invalid_argument("transversality_audit_exhaustive: example 1 only");
    ExhaustiveAudit out;
    out.epsilon = eps;
    out.depth = depth;
    out.floor_C = transversality_constant(eps, p);

    const auto cyl = cylinder_field(p, depth);
    out.cylinders = static_cast<long>(cyl.size());
    std::vector<double> zs(cyl.size());
    for (std::size_t i = 0; i < cyl.size(); ++i) zs[i] = z_of_word(cyl[i].word, p, depth);
    const double ztail = z_tail_bound(p, depth);
    const double atail = p.sup_alpha() * std::pow(p.rho(), depth) /
                         (p.lambda_uu() * (1.0 - p.rho()));

    const long n = static_cast<long>(cyl.size());
    std::vector<double> local_min(n, std::numeric_limits<double>::infinity());
    std::vector<long> local_cnt(n, 0);
    parallel_for(n, threads, [&](long i) {
        double mn = std::numeric_limits<double>::infinity();
        long cnt = 0;
        for (long j = i + 1; j < n; ++j) {
            if (std::fabs(zs[i] - zs[j]) - 2.0 * ztail <= eps) continue;
            ++cnt;
            const double gap = std::fabs(cyl[i].value - cyl[j].value) - 2.0 * atail;
            mn = std::min(mn, gap);
        }
        local_min[i] = mn;
        local_cnt[i] = cnt;
    });
    out.min_gap = std::numeric_limits<double>::infinity();
    for (long i = 0; i < n; ++i) {
        out.min_gap = std::min(out.min_gap, local_min[i]);
        out.pairs_compared += local_cnt[i];
    }
    out.pass = out.min_gap >= out.floor_C;
    return out;
}

struct DeformedAudit {
    double a = 0.0; // fundamental domain lower end, window (a, a/lambda_ss]
    long pairs_found = 0;
    double theta_hat = 0.0;
    double slope_gap_min = 0.0;
    double floor_half_theta = 0.0; // theta(a)/2
    bool pass = false;
};

/// Transversality audit for the deformed family: pairwise angles of the fixed-point
/// slope field over sample pairs whose leaf distance falls in the
/// fundamental window, against the half-angle floor theta(a)/2.
inline DeformedAudit transversality_audit_deformed(MapParams params, double mu, int n,
                                                   const FieldGrid& grid, double a = 0.0,
                                                   double tol = 1e-11, int threads = 0) {
    params.mu = mu;
    params.n_power = n;
    if (a <= 0.0) a = params.lambda_ss / 20.0;

    SlopeField f = alpha_uu_fixed_point(params, grid, tol, 200, threads);
    const int depth = f.samples.empty() ? 17 : f.samples.front().word.depth();
    std::vector<double> zs(f.samples.size());
    for (std::size_t i = 0; i < f.samples.size(); ++i)
        zs[i] = z_of_word(f.samples[i].word, params, depth);

    DeformedAudit out;
    out.a = a;
    const double s = params.slope_sup_bound();
    const double gap_floor = params.example == Example::ex1
                                 ? transversality_constant(a, params)
                                 : example2_constants(params).K;
    out.floor_half_theta = std::atan(gap_floor / (1.0 + s * s)) / 2.0;

    double gap_min = std::numeric_limits<double>::infinity();
    double theta_min = std::numeric_limits<double>::infinity();
    const long m = static_cast<long>(f.samples.size());
    std::vector<double> g_min(m, std::numeric_limits<double>::infinity());
    std::vector<double> t_min(m, std::numeric_limits<double>::infinity());
    std::vector<long> cnt(m, 0);
    parallel_for(m, threads, [&](long i) {
        for (long j = i + 1; j < m; ++j) {
            const double dss = std::fabs(zs[i] - zs[j]);
            if (!(dss > a && dss <= a / params.lambda_ss)) continue;
            ++cnt[i];
            const double gap = std::fabs(f.samples[i].value - f.samples[j].value);
            const double ang = std::fabs(std::atan(f.samples[i].value) -
                                         std::atan(f.samples[j].value));
            g_min[i] = std::min(g_min[i], gap);
            t_min[i] = std::min(t_min[i], ang);
        }
    });
    for (long i = 0; i < m; ++i) {
        gap_min = std::min(gap_min, g_min[i]);
        theta_min = std::min(theta_min, t_min[i]);
        out.pairs_found += cnt[i];
    }
    out.slope_gap_min = gap_min;
    out.theta_hat = theta_min;
    out.pass = out.theta_hat >= out.floor_half_theta;
    return out;
}

struct ConeMargin {
    double a = 0.0;              // fundamental stable domain anchor
    double theta_a = 0.0;        // closed-form angle floor at distance a
    double omega_required = 0.0; // sup |alpha_mu - alpha_0|
    double angle_inflation = 0.0;
    double margin = 0.0;         // theta_a / 2 - inflation
    double eta = 0.0;
};

/// Width of the unstable cone family needed to contain the deformed unstable
/// direction, and the margin left against the half-angle floor.
inline ConeMargin cone_family_margin(MapParams params, double mu, int n, const FieldGrid& grid,
                                     double tol = 1e-11, int threads = 0) {
    params.mu = mu;
    params.n_power = n;
    MapParams base = params;
    base.mu = 0.0;

    SlopeField f_mu = alpha_uu_fixed_point(params, grid, tol, 200, threads);
    SlopeField f_0 = alpha_uu_fixed_point(base, grid, tol, 200, threads);

    ConeMargin cm;
    cm.eta = f_mu.eta;
    for (std::size_t i = 0; i < f_mu.samples.size(); ++i)
        cm.omega_required =
            std::max(cm.omega_required, std::fabs(f_mu.samples[i].value - f_0.samples[i].value));

    cm.a = params.lambda_ss / 20.0;
    const double s = params.slope_sup_bound();
    const double gap_floor = params.example == Example::ex1
                                 ? transversality_constant(cm.a, params)
                                 : example2_constants(params).K;
    cm.theta_a = std::atan(gap_floor / (1.0 + s * s));
    cm.angle_inflation = 2.0 * cm.omega_required; // atan is 1-Lipschitz
    cm.margin = cm.theta_a / 2.0 - cm.angle_inflation;
    return cm;
}

} // namespace dynlab
