#pragma once

#include "dynlab/norms.hpp"

#include <vector>

namespace dynlab {

/// Product box: an expanding x-cell times the full y-range times one z-slab.
/// W is the slab's midplane rectangle over the cell; W~ widens the cell by
/// half a cell on each side. The stable projection of the box is vertical.
struct BoxSpec {
    int x_cell = 1; // 1-based
    int z_slab = 0;
    double x_lo = 0.0, x_hi = 1.0;
    double z_lo = -1.0, z_hi = 1.0;
    Domain2D W, W_tilde;
};

struct BoxFamily {
    std::vector<BoxSpec> boxes;
    int s0 = 0;

    /// l x-cells times `z_slabs` z-slabs (default family size 2l).
    static BoxFamily standard(const MapParams& p, int z_slabs = 2) {
        BoxFamily fam;
        const double ymax = p.y_max();
        for (int c = 1; c <= p.l; ++c) {
            for (int zs = 0; zs < z_slabs; ++zs) {
                BoxSpec b;
                b.x_cell = c;
                b.z_slab = zs;
                b.x_lo = static_cast<double>(c - 1) / p.l;
                b.x_hi = static_cast<double>(c) / p.l;
                b.z_lo = -1.0 + 2.0 * zs / z_slabs;
                b.z_hi = -1.0 + 2.0 * (zs + 1) / z_slabs;
                const double margin = 0.5 / p.l;
                b.W = Domain2D{b.x_lo, b.x_hi, -ymax, ymax, false};
                b.W_tilde = Domain2D{b.x_lo - margin, b.x_hi + margin, -ymax, ymax, false};
                fam.boxes.push_back(b);
            }
        }
        fam.s0 = static_cast<int>(fam.boxes.size());
        return fam;
    }
};

/// Projection of the measure restricted to one box onto the slab midplane.
/// The projected measure lives on the box footprint; the chart is flat
/// (non-periodic), so the W~ norm integrates the same measure over the wider
/// rectangle.
inline ProjectedMeasure box_projection(const EmpiricalMeasure& mu, const BoxSpec& box) {
    ProjectedMeasure out;
    out.chart.periodic_x = false;
    out.chart.z_level = 0.5 * (box.z_lo + box.z_hi);
    out.chart.x_lo = box.W_tilde.x_lo;
    out.chart.x_hi = box.W_tilde.x_hi;
    for (const auto& a : mu.atoms) {
        if (a.z < box.z_lo || a.z >= box.z_hi) continue;
        if (a.x >= box.x_lo && a.x < box.x_hi) out.atoms.push_back({a.x, a.y, a.w});
    }
    out.recompute_mass();
    return out;
}

/// Family norm |||mu|||^2_r = max_i ||(pi_i)_* (mu|_{C_i})||^2_{W_i, r}.
/// With `tilde` the integration runs over the widened midplanes.
inline double family_norm_sq(const EmpiricalMeasure& mu, const BoxFamily& fam,
                             const NormConfig& cfg, bool tilde = false) {
    double best = 0.0;
    for (const auto& box : fam.boxes) {
        ProjectedMeasure proj = box_projection(mu, box);
        if (proj.atoms.empty()) continue;
        const Domain2D& X = tilde ? box.W_tilde : box.W;
        best = std::max(best, r_norm_sq(proj, cfg, X));
    }
    return best;
}

} // namespace dynlab
