#pragma once

#include "dynlab/boxes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace dynlab {

struct ScanEntry {
    double r = 0.0;
    double norm = 0.0;
    double atoms_per_ball = 0.0;
};

struct ScanReport {
    std::vector<ScanEntry> entries;
    double max_min_ratio = 0.0;   // over the last decade of radii
    bool bounded = false;
    double fitted_exponent = 0.0; // slope of log norm vs log r
    double bounded_threshold = 2.0;
};

/// Norm scan across radii. Flags the measure L2-bounded when the norm is
/// flat (max/min below threshold) over the last decade; a singular measure
/// shows up as a power-law slope instead.
inline ScanReport abs_continuity_scan(const ProjectedMeasure& mu, std::span<const double> rs,
                                      const Domain2D& X, double bounded_threshold = 2.0,
                                      int threads = 0) {
    if (rs.size() < 4)
        throw std::invalid_argument("abs_continuity_scan: need at least 4 radii");
    for (std::size_t i = 1; i < rs.size(); ++i)
        if (!(rs[i] < rs[i - 1]))
            throw std::invalid_argument("abs_continuity_scan: radii must decrease");
    if (!(rs.front() / rs.back() >= 10.0))
        throw std::invalid_argument("abs_continuity_scan: radii must span at least one decade");

    const double occupancy = atom_centered_ball_count(mu, rs.back());
    if (occupancy < 10.0)
        throw AtomStarvation("abs_continuity_scan: " + std::to_string(occupancy) +
                             " atoms per ball at the smallest radius; estimate unreliable");

    ScanReport rep;
    rep.bounded_threshold = bounded_threshold;
    for (double r : rs) {
        NormConfig cfg;
        cfg.r = r;
        cfg.threads = threads;
        ScanEntry e;
        e.r = r;
        e.norm = r_norm(mu, cfg, X);
        e.atoms_per_ball = atom_centered_ball_count(mu, r, 500);
        rep.entries.push_back(e);
    }

    double lo = rep.entries.back().norm, hi = lo;
    for (const auto& e : rep.entries) {
        if (e.r <= 10.0 * rs.back()) {
            lo = std::min(lo, e.norm);
            hi = std::max(hi, e.norm);
        }
    }
    rep.max_min_ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    rep.bounded = rep.max_min_ratio < bounded_threshold;

    // least-squares slope in log-log coordinates
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(rep.entries.size());
    for (const auto& e : rep.entries) {
        const double lx = std::log(e.r), ly = std::log(std::max(e.norm, 1e-300));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    rep.fitted_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return rep;
}

struct CnPolicy {
    double scale = 1.0; // c_n = scale * lambda_c^{-n}
};

struct InequalityConfig {
    CnPolicy policy;
    int layers = 16;            // Birkhoff levels of the u-Gibbs proxy
    int atoms_per_level = 250000;
    int floor_offset = 6;       // saturation reference at max(n) + offset
    int z_slabs = 2;
    int threads = 0;
};

struct InequalityEntry {
    int n = 0;
    double lhs = 0.0;  // |||F^n mu|||^2_r
    double mid = 0.0;  // |||mu|||^2_{c_n r}
    double c_n = 0.0;
    double R_n = 0.0;  // c_n * r
    bool mid_valid = false; // comparison radius inside the chart validity cap
    bool usable = false;    // enters the decay fit
};

struct InequalityReport {
    std::vector<InequalityEntry> entries;
    int floor_n = 0;
    double floor_value = 0.0; // saturation level, plays the mass-term role
    double mass_sq = 0.0;
    double sigma_hat = 0.0;
    double fit_intercept = 0.0;
    int usable_count = 0;
    bool fit_degenerate = false; // fewer than 3 usable levels
    bool pass = false;           // sigma_hat > 1
    double r = 0.0;
    double cn_scale = 0.0;
    int layers = 0;
    int atoms_per_level = 0;
    int z_slabs = 0;
};

/// Two-norm decay audit. Builds a finite Birkhoff proxy from `curve`,
/// evaluates lhs_n = |||F^n mu|||^2_r and mid_n = |||mu|||^2_{c_n r}, and
/// fits the geometric decay rate of (lhs_n - floor)/mid_n. The floor is the
/// measured saturation level of lhs far past the fitted range. This variant
/// always returns the raw table; a degenerate fit is flagged, not thrown.
inline InequalityReport main_inequality_table(const UnstableCurve& curve, const MapParams& p,
                                              std::span<const int> n_list, double r,
                                              const InequalityConfig& cfg = {}) {
    InequalityReport rep;
    rep.r = r;
    rep.cn_scale = cfg.policy.scale;
    rep.layers = cfg.layers;
    rep.atoms_per_level = cfg.atoms_per_level;
    rep.z_slabs = cfg.z_slabs;

    EmpiricalMeasure mu = birkhoff_measure(curve, cfg.layers, p, cfg.atoms_per_level);
    rep.mass_sq = mu.total_mass * mu.total_mass;
    const BoxFamily fam = BoxFamily::standard(p, cfg.z_slabs);

    NormConfig lhs_cfg;
    lhs_cfg.r = r;
    lhs_cfg.threads = cfg.threads;

    int n_max = 0;
    for (int n : n_list) n_max = std::max(n_max, n);
    rep.floor_n = n_max + cfg.floor_offset;

    // walk the push-forward once, evaluating lhs at each requested level
    std::vector<int> levels(n_list.begin(), n_list.end());
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

    std::vector<std::pair<int, double>> lhs_at;
    {
        EmpiricalMeasure cur = mu;
        int done = 0;
        for (int n : levels) {
            for (; done < n; ++done)
                for (auto& a : cur.atoms) {
                    Point pt = step(Point{a.x, a.y, a.z}, p);
                    a.x = pt.x;
                    a.y = pt.y;
                    a.z = pt.z;
                }
            lhs_at.emplace_back(n, family_norm_sq(cur, fam, lhs_cfg));
        }
        for (; done < rep.floor_n; ++done)
            for (auto& a : cur.atoms) {
                Point pt = step(Point{a.x, a.y, a.z}, p);
                a.x = pt.x;
                a.y = pt.y;
                a.z = pt.z;
            }
        rep.floor_value = family_norm_sq(cur, fam, lhs_cfg);
    }

    // a ball is only a ball of the box midplane chart while it fits inside
    // the widened midplane (width 2/l); past that the count saturates on the
    // box and the norm loses meaning
    const double R_cap = std::min(0.25, 0.5 / p.l);
    for (auto [n, lhs] : lhs_at) {
        InequalityEntry e;
        e.n = n;
        e.lhs = lhs;
        e.c_n = cfg.policy.scale * std::pow(p.lambda_c, -n);
        e.R_n = e.c_n * r;
        e.mid_valid = e.R_n < R_cap;
        if (e.mid_valid) {
            NormConfig mid_cfg;
            mid_cfg.r = e.R_n;
            mid_cfg.threads = cfg.threads;
            e.mid = family_norm_sq(mu, fam, mid_cfg, /*tilde=*/true);
        }
        rep.entries.push_back(e);
    }

    // least-squares fit of log((lhs - floor)/mid) against n
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (auto& e : rep.entries) {
        const double excess = e.lhs - rep.floor_value;
        e.usable = e.mid_valid && excess > 0.0 && e.mid > 0.0 && e.n > 0;
        if (!e.usable) continue;
        const double ly = std::log(excess / e.mid);
        sx += e.n;
        sy += ly;
        sxx += static_cast<double>(e.n) * e.n;
        sxy += e.n * ly;
        ++m;
    }
    rep.usable_count = m;
    if (m < 3) {
        rep.fit_degenerate = true;
        return rep;
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    rep.sigma_hat = std::exp(-slope);
    rep.fit_intercept = (sy - slope * sx) / m;
    rep.pass = rep.sigma_hat > 1.0;
    return rep;
}

/// Throwing form of the audit: a degenerate fit is an error.
inline InequalityReport main_inequality_audit(const UnstableCurve& curve, const MapParams& p,
                                              std::span<const int> n_list, double r,
                                              const InequalityConfig& cfg = {}) {
    InequalityReport rep = main_inequality_table(curve, p, n_list, r, cfg);
    if (rep.fit_degenerate)
        throw FitDegenerate("main_inequality_audit: only " + std::to_string(rep.usable_count) +
                            " usable levels in the decay fit");
    return rep;
}

} // namespace dynlab
