#pragma once

#include "dynlab/deformation.hpp"
#include "dynlab/transversality.hpp"

#include <cmath>
#include <vector>

namespace dynlab {

struct Atom {
    double x = 0.0, y = 0.0, z = 0.0;
    double w = 0.0;
    int birth = 0; // push-forward level the atom belongs to (diagnostics)
};

/// Weighted atom cloud standing in for a finite Borel measure.
struct EmpiricalMeasure {
    std::vector<Atom> atoms;
    double total_mass = 0.0;

    void recompute_mass() {
        total_mass = 0.0;
        for (const auto& a : atoms) total_mass += a.w;
    }
};

/// Target center-unstable chart: the plane z = z_level with coordinates
/// (x, y), x periodic of width 1 unless the chart is a flat stand-in.
struct Chart {
    double z_level = 0.0;
    bool periodic_x = true;
    double x_lo = 0.0, x_hi = 1.0;
    double y_lo = -1.0, y_hi = 1.0;
};

struct PAtom {
    double x = 0.0, y = 0.0;
    double w = 0.0;
};

struct ProjectedMeasure {
    std::vector<PAtom> atoms;
    double total_mass = 0.0;
    Chart chart;

    void recompute_mass() {
        total_mass = 0.0;
        for (const auto& a : atoms) total_mass += a.w;
    }
};

/// Normalized Lebesgue measure on a leaf piece: equal weights at
/// arc-length-equispaced midpoints.
inline EmpiricalMeasure lebesgue_on_curve(const UnstableCurve& curve, int n_atoms) {
    if (n_atoms < 2) throw std::invalid_argument("lebesgue_on_curve: n_atoms must be >= 2");
    EmpiricalMeasure mu;
    mu.atoms.reserve(n_atoms);

    // cumulative arc length over the curve's samples
    const auto& s = curve.samples;
    std::vector<double> cum(s.size(), 0.0);
    for (std::size_t k = 1; k < s.size(); ++k)
        cum[k] = cum[k - 1] + std::hypot(s[k].x - s[k - 1].x, s[k].y - s[k - 1].y);
    const double total = cum.back();

    std::size_t seg = 1;
    for (int i = 0; i < n_atoms; ++i) {
        const double target = total * (i + 0.5) / n_atoms; // midpoint rule
        while (seg + 1 < s.size() && cum[seg] < target) ++seg;
        const double t = (target - cum[seg - 1]) / (cum[seg] - cum[seg - 1]);
        Atom a;
        a.x = s[seg - 1].x + t * (s[seg].x - s[seg - 1].x);
        a.y = s[seg - 1].y + t * (s[seg].y - s[seg - 1].y);
        a.z = curve.z_level;
        a.w = 1.0 / n_atoms;
        a.birth = 0;
        mu.atoms.push_back(a);
    }
    mu.total_mass = 1.0;
    return mu;
}

/// Push-forward by n steps of the base map; mass is carried unchanged.
inline EmpiricalMeasure pushforward(const EmpiricalMeasure& mu, const MapParams& p,
                                    int n_steps = 1) {
    EmpiricalMeasure out = mu;
    for (auto& a : out.atoms) {
        Point pt{a.x, a.y, a.z};
        for (int j = 0; j < n_steps; ++j) pt = step(pt, p);
        a.x = pt.x;
        a.y = pt.y;
        a.z = pt.z;
        a.birth += n_steps;
    }
    return out;
}

/// Birkhoff average measure (1/n) sum_{j<n} F^j_* m_curve. Atoms carry their
/// level index in `birth`.
inline EmpiricalMeasure birkhoff_measure(const UnstableCurve& curve, int n_iters,
                                         const MapParams& p, int atoms_per_level = 1000) {
    if (n_iters < 1) throw std::invalid_argument("birkhoff_measure: n_iters must be >= 1");
    EmpiricalMeasure base = lebesgue_on_curve(curve, atoms_per_level);
    EmpiricalMeasure out;
    out.atoms.reserve(static_cast<std::size_t>(n_iters) * base.atoms.size());
    const double level_w = 1.0 / n_iters;
    for (const auto& a0 : base.atoms) {
        Point pt{a0.x, a0.y, a0.z};
        for (int j = 0; j < n_iters; ++j) {
            Atom a;
            a.x = pt.x;
            a.y = pt.y;
            a.z = pt.z;
            a.w = a0.w * level_w;
            a.birth = j;
            out.atoms.push_back(a);
            pt = step(pt, p);
        }
    }
    out.total_mass = 1.0;
    return out;
}

/// Vertical projection of every atom into the chart plane; mass preserved
/// exactly.
inline ProjectedMeasure project_measure(const EmpiricalMeasure& mu, const Chart& chart) {
    ProjectedMeasure out;
    out.chart = chart;
    out.atoms.reserve(mu.atoms.size());
    for (const auto& a : mu.atoms) out.atoms.push_back({a.x, a.y, a.w});
    out.total_mass = mu.total_mass;
    return out;
}

/// Restriction to a sub-box of the chart (used by box norms and tests).
inline ProjectedMeasure restrict_measure(const ProjectedMeasure& mu, double x_lo, double x_hi,
                                         double y_lo, double y_hi) {
    ProjectedMeasure out;
    out.chart = mu.chart;
    for (const auto& a : mu.atoms)
        if (a.x >= x_lo && a.x < x_hi && a.y >= y_lo && a.y < y_hi) out.atoms.push_back(a);
    out.recompute_mass();
    return out;
}

} // namespace dynlab
