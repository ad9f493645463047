#pragma once

#include "dynlab/deformation.hpp"
#include "dynlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace dynlab {

/// Fixed dictionary of smooth observables, each normalized to sup-norm <= 1.
/// The default six separate measures that differ in any coordinate marginal
/// up to second order.
struct ObservableDictionary {
    std::vector<std::string> names;
    double y_scale = 1.0; // y_max of the phase space, used to normalize

    static ObservableDictionary standard(const MapParams& p) {
        ObservableDictionary d;
        d.names = {"sin2pix", "cos2pix", "y", "y2", "z", "yz"};
        d.y_scale = p.y_max();
        return d;
    }

    int size() const { return static_cast<int>(names.size()); }

    void evaluate(const Point& pt, double* out) const {
        const double tp = 2.0 * std::numbers::pi;
        const double yn = pt.y / y_scale;
        out[0] = std::sin(tp * pt.x);
        out[1] = std::cos(tp * pt.x);
        out[2] = yn;
        out[3] = yn * yn;
        out[4] = pt.z;
        out[5] = yn * pt.z;
    }
};

struct AveragesResult {
    std::vector<double> averages;
    // gap between half-window and full-window average vectors, reported as
    // the root-mean-square over observables (a sup over coordinates would be
    // dominated by whichever observable has the largest CLT noise)
    double conv_gap = 0.0;
};

/// Time average of a single observable over iterates burn_in..n_iters.
template <typename Fn>
double birkhoff_average_fn(const Point& p0, Fn&& phi, long n_iters, long burn_in,
                           const MapParams& p) {
    const bool deformed = p.mu > 0.0;
    DeformedMap dmap(deformed ? p : ex1_defaults());
    Point pt = p0;
    double acc = 0.0;
    for (long i = 0; i < n_iters; ++i) {
        if (i >= burn_in) acc += phi(pt);
        pt = deformed ? dmap.apply(pt) : step(pt, p);
    }
    return acc / (n_iters - burn_in);
}

/// Time averages of the dictionary over iterates burn_in..n_iters. With
/// mu > 0 the orbit runs under the deformed family (one iterate = one
/// application of the n_power-step map).
inline AveragesResult birkhoff_averages(const Point& p0, const ObservableDictionary& dict,
                                        long n_iters, long burn_in, const MapParams& p) {
    if (n_iters < 10 * std::max<long>(burn_in, 1))
        throw std::invalid_argument("birkhoff_averages: need n_iters >= 10 burn_in");
    const int dim = dict.size();
    std::vector<double> full(dim, 0.0), half(dim, 0.0), vals(dim, 0.0);
    const long window = n_iters - burn_in;
    const long half_cut = burn_in + window / 2;

    const bool deformed = p.mu > 0.0;
    DeformedMap dmap(deformed ? p : ex1_defaults()); // unused when mu == 0
    Point pt = p0;
    for (long i = 0; i < n_iters; ++i) {
        if (i >= burn_in) {
            dict.evaluate(pt, vals.data());
            for (int k = 0; k < dim; ++k) full[k] += vals[k];
            if (i < half_cut)
                for (int k = 0; k < dim; ++k) half[k] += vals[k];
        }
        pt = deformed ? dmap.apply(pt) : step(pt, p);
    }
    AveragesResult res;
    res.averages.resize(dim);
    const long half_n = half_cut - burn_in;
    double gap_sq = 0.0;
    for (int k = 0; k < dim; ++k) {
        res.averages[k] = full[k] / window;
        const double h = half_n > 0 ? half[k] / half_n : res.averages[k];
        gap_sq += (h - res.averages[k]) * (h - res.averages[k]);
    }
    res.conv_gap = std::sqrt(gap_sq / dim);
    return res;
}

struct GridSpec {
    int nx = 32, ny = 32, nz = 8;
    long total() const { return static_cast<long>(nx) * ny * nz; }
};

struct BasinReport {
    int k_clusters = 0;
    std::vector<std::vector<double>> cluster_centers;
    std::vector<double> basin_fractions;
    double unresolved_fraction = 0.0;
    long grid_points = 0;
    double cluster_tol = 0.0;
    long n_iters = 0, burn_in = 0;
};

struct GridPointResult {
    Point start;
    std::vector<double> averages;
    double conv_gap = 0.0;
    int cluster = -1; // -1 = unresolved
};

/// Classifies a grid of initial conditions by their dictionary averages:
/// single-linkage clustering in the sup metric at radius cluster_tol.
/// Points whose convergence indicator exceeds cluster_tol/2 stay unresolved
/// rather than being force-assigned.
inline BasinReport survey_basins(const GridSpec& grid, const ObservableDictionary& dict,
                                 long n_iters, long burn_in, double cluster_tol,
                                 const MapParams& p, int threads = 0,
                                 std::vector<GridPointResult>* detail = nullptr) {
    const long n = grid.total();
    std::vector<GridPointResult> pts(n);
    const double ymax = p.y_max();
    // irrational intra-cell offset: binary-rational x-values would lock the
    // expanding coordinate onto exactly periodic (atypical) orbits
    const double cell_off = 0.5 + 7.0710678118654752e-4;
    parallel_for(n, threads, [&](long idx) {
        const long iz = idx % grid.nz;
        const long iy = (idx / grid.nz) % grid.ny;
        const long ix = idx / (static_cast<long>(grid.ny) * grid.nz);
        Point p0{(ix + cell_off) / grid.nx, -ymax + 2.0 * ymax * (iy + 0.5) / grid.ny,
                 -1.0 + 2.0 * (iz + 0.5) / grid.nz};
        auto res = birkhoff_averages(p0, dict, n_iters, burn_in, p);
        pts[idx].start = p0;
        pts[idx].averages = std::move(res.averages);
        pts[idx].conv_gap = res.conv_gap;
    });

    const double resolve_tol = cluster_tol / 2.0;
    std::vector<long> resolved;
    resolved.reserve(n);
    for (long i = 0; i < n; ++i)
        if (pts[i].conv_gap <= resolve_tol) resolved.push_back(i);

    // single-linkage components of the tol-neighborhood graph (union-find)
    std::vector<long> parent(resolved.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<long(long)> find = [&](long a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    const int dim = dict.size();
    auto sup_dist = [&](long a, long b) {
        double d = 0.0;
        for (int k = 0; k < dim; ++k)
            d = std::max(d, std::fabs(pts[a].averages[k] - pts[b].averages[k]));
        return d;
    };
    for (std::size_t i = 0; i < resolved.size(); ++i)
        for (std::size_t j = i + 1; j < resolved.size(); ++j)
            if (sup_dist(resolved[i], resolved[j]) <= cluster_tol) {
                const long ri = find(i), rj = find(j);
                if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
            }

    std::vector<long> roots;
    std::vector<int> cluster_of(resolved.size());
    for (std::size_t i = 0; i < resolved.size(); ++i) {
        const long r = find(i);
        auto it = std::find(roots.begin(), roots.end(), r);
        if (it == roots.end()) {
            roots.push_back(r);
            cluster_of[i] = static_cast<int>(roots.size()) - 1;
        } else {
            cluster_of[i] = static_cast<int>(it - roots.begin());
        }
        pts[resolved[i]].cluster = cluster_of[i];
    }

    BasinReport rep;
    rep.k_clusters = static_cast<int>(roots.size());
    rep.grid_points = n;
    rep.cluster_tol = cluster_tol;
    rep.n_iters = n_iters;
    rep.burn_in = burn_in;
    rep.cluster_centers.assign(rep.k_clusters, std::vector<double>(dim, 0.0));
    std::vector<long> counts(rep.k_clusters, 0);
    for (std::size_t i = 0; i < resolved.size(); ++i) {
        const int c = cluster_of[i];
        ++counts[c];
        for (int k = 0; k < dim; ++k)
            rep.cluster_centers[c][k] += pts[resolved[i]].averages[k];
    }
    for (int c = 0; c < rep.k_clusters; ++c) {
        rep.basin_fractions.push_back(static_cast<double>(counts[c]) / n);
        for (int k = 0; k < dim; ++k) rep.cluster_centers[c][k] /= counts[c];
    }
    rep.unresolved_fraction = static_cast<double>(n - static_cast<long>(resolved.size())) / n;
    if (detail) *detail = std::move(pts);
    return rep;
}

} // namespace dynlab
