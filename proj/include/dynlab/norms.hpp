#pragma once

#include "dynlab/measures.hpp"
#include "dynlab/parallel.hpp"
#include "dynlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace dynlab {

/// Uniform-grid spatial index over a projected atom cloud. Cell width is at
/// least the query radius, so a ball query touches a 3x3 block. Counts are
/// exact; the index is immutable after construction.
class SpatialHash2D {
public:
    SpatialHash2D(const ProjectedMeasure& mu, double radius) : r_(radius), rr_(radius * radius) {
        periodic_ = mu.chart.periodic_x;
        if (periodic_) {
            x0_ = 0.0;
            nx_ = std::max(3, static_cast<int>(std::floor(1.0 / radius)));
            cw_ = 1.0 / nx_;
        } else {
            double xmin = 0.0, xmax = 1.0;
            if (!mu.atoms.empty()) {
                xmin = xmax = mu.atoms.front().x;
                for (const auto& a : mu.atoms) {
                    xmin = std::min(xmin, a.x);
                    xmax = std::max(xmax, a.x);
                }
            }
            x0_ = xmin - radius;
            cw_ = radius;
            nx_ = std::max(1, static_cast<int>(std::ceil((xmax - xmin + 2.0 * radius) / cw_)));
        }
        double ymin = 0.0, ymax = 1.0;
        if (!mu.atoms.empty()) {
            ymin = ymax = mu.atoms.front().y;
            for (const auto& a : mu.atoms) {
                ymin = std::min(ymin, a.y);
                ymax = std::max(ymax, a.y);
            }
        }
        y0_ = ymin - radius;
        ch_ = radius;
        ny_ = std::max(1, static_cast<int>(std::ceil((ymax - ymin + 2.0 * radius) / ch_)));

        const std::size_t n = mu.atoms.size();
        std::vector<int> cell(n);
        std::vector<int> count(static_cast<std::size_t>(nx_) * ny_ + 1, 0);
        for (std::size_t i = 0; i < n; ++i) {
            cell[i] = cell_index(mu.atoms[i].x, mu.atoms[i].y);
            ++count[cell[i] + 1];
        }
        for (std::size_t c = 1; c < count.size(); ++c) count[c] += count[c - 1];
        start_ = count;
        ax_.resize(n);
        ay_.resize(n);
        aw_.resize(n);
        std::vector<int> cursor(start_.begin(), start_.end() - 1);
        for (std::size_t i = 0; i < n; ++i) {
            const int slot = cursor[cell[i]]++;
            ax_[slot] = mu.atoms[i].x;
            ay_[slot] = mu.atoms[i].y;
            aw_[slot] = mu.atoms[i].w;
        }
    }

    double radius() const { return r_; }

    /// Total weight of atoms within distance r of (cx, cy).
    double ball_mass(double cx, double cy) const {
        double acc = 0.0;
        visit(cx, cy, [&](double w) { acc += w; });
        return acc;
    }

    long ball_count(double cx, double cy) const {
        long n = 0;
        visit(cx, cy, [&](double) { ++n; });
        return n;
    }

private:
    template <typename Fn>
    void visit(double cx, double cy, Fn&& fn) const {
        const int iy0 = static_cast<int>(std::floor((cy - y0_) / ch_));
        const int ix0 = periodic_
                            ? static_cast<int>(std::floor(wrap01(cx) / cw_))
                            : static_cast<int>(std::floor((cx - x0_) / cw_));
        for (int dy = -1; dy <= 1; ++dy) {
            const int iy = iy0 + dy;
            if (iy < 0 || iy >= ny_) continue;
            for (int dx = -1; dx <= 1; ++dx) {
                int ix = ix0 + dx;
                if (periodic_) {
                    ix = (ix % nx_ + nx_) % nx_;
                } else if (ix < 0 || ix >= nx_) {
                    continue;
                }
                const int c = iy * nx_ + ix;
                for (int s = start_[c]; s < start_[c + 1]; ++s) {
                    const double ddx = periodic_ ? circle_diff(ax_[s], cx) : ax_[s] - cx;
                    const double ddy = ay_[s] - cy;
                    if (ddx * ddx + ddy * ddy <= rr_) fn(aw_[s]);
                }
            }
        }
    }

    int cell_index(double x, double y) const {
        int ix = periodic_ ? static_cast<int>(std::floor(wrap01(x) / cw_))
                           : static_cast<int>(std::floor((x - x0_) / cw_));
        ix = std::clamp(ix, 0, nx_ - 1);
        int iy = static_cast<int>(std::floor((y - y0_) / ch_));
        iy = std::clamp(iy, 0, ny_ - 1);
        return iy * nx_ + ix;
    }

    double r_, rr_;
    bool periodic_ = true;
    double x0_ = 0.0, y0_ = 0.0, cw_ = 1.0, ch_ = 1.0;
    int nx_ = 1, ny_ = 1;
    std::vector<int> start_;
    std::vector<double> ax_, ay_, aw_;
};

enum class IntegrationScheme { grid, montecarlo };

struct NormConfig {
    double r = 0.02;
    IntegrationScheme scheme = IntegrationScheme::grid;
    double grid_spacing_factor = 0.25; // node spacing = factor * r
    long mc_samples = 200000;
    std::uint64_t seed = 1;
    int threads = 0;
};

/// Integration domain X inside the chart.
struct Domain2D {
    double x_lo = 0.0, x_hi = 1.0;
    double y_lo = -1.0, y_hi = 1.0;
    bool periodic_x = true;

    double area() const { return (x_hi - x_lo) * (y_hi - y_lo); }
};

inline void check_norm_radius(const NormConfig& cfg, const Domain2D& X) {
    if (X.periodic_x && cfg.r >= 0.25)
        throw std::invalid_argument("norm radius must stay below the chart injectivity bound 1/4");
    if (cfg.r <= 0.0) throw std::invalid_argument("norm radius must be positive");
}

/// <mu1, mu2>_{X,r} = r^-4 \int_X mu1(B(z,r)) mu2(B(z,r)) dm(z), evaluated by
/// the configured scheme with exact ball counts.
inline double r_inner(const ProjectedMeasure& mu1, const ProjectedMeasure& mu2,
                      const NormConfig& cfg, const Domain2D& X) {
    check_norm_radius(cfg, X);
    if (mu1.atoms.empty() || mu2.atoms.empty()) return 0.0;
    const SpatialHash2D h1(mu1, cfg.r);
    std::optional<SpatialHash2D> h2_store;
    const SpatialHash2D* h2 = &h1;
    if (&mu1 != &mu2) {
        h2_store.emplace(mu2, cfg.r);
        h2 = &*h2_store;
    }

    const double inv_r4 = 1.0 / (cfg.r * cfg.r * cfg.r * cfg.r);
    if (cfg.scheme == IntegrationScheme::montecarlo) {
        std::vector<double> partial(cfg.mc_samples);
        parallel_for(cfg.mc_samples, cfg.threads, [&](long i) {
            Rng rng(cfg.seed, static_cast<std::uint64_t>(i));
            const double x = rng.uniform(X.x_lo, X.x_hi);
            const double y = rng.uniform(X.y_lo, X.y_hi);
            partial[i] = h1.ball_mass(x, y) * h2->ball_mass(x, y);
        });
        double acc = 0.0;
        for (double v : partial) acc += v;
        return acc / cfg.mc_samples * X.area() * inv_r4;
    }

    const double spacing = cfg.grid_spacing_factor * cfg.r;
    const long nx = std::max<long>(1, std::llround((X.x_hi - X.x_lo) / spacing));
    const long ny = std::max<long>(1, std::llround((X.y_hi - X.y_lo) / spacing));
    const double dx = (X.x_hi - X.x_lo) / nx;
    const double dy = (X.y_hi - X.y_lo) / ny;
    std::vector<double> row_acc(ny, 0.0);
    parallel_for(ny, cfg.threads, [&](long iy) {
        const double y = X.y_lo + (iy + 0.5) * dy;
        double acc = 0.0;
        for (long ix = 0; ix < nx; ++ix) {
            const double x = X.x_lo + (ix + 0.5) * dx;
            acc += h1.ball_mass(x, y) * h2->ball_mass(x, y);
        }
        row_acc[iy] = acc;
    });
    double acc = 0.0;
    for (double v : row_acc) acc += v;
    return acc * dx * dy * inv_r4;
}

inline double r_norm_sq(const ProjectedMeasure& mu, const NormConfig& cfg, const Domain2D& X) {
    return r_inner(mu, mu, cfg, X);
}

inline double r_norm(const ProjectedMeasure& mu, const NormConfig& cfg, const Domain2D& X) {
    return std::sqrt(std::max(0.0, r_norm_sq(mu, cfg, X)));
}

/// Ball-covering constant of the scale-comparison inequality
/// ||nu||_{r2} <= C0(r1, r2) ||nu||_{r1}: cover an r2-ball by squares
/// inscribed in r1-balls.
inline double covering_constant(double r1, double r2) {
    const double k = std::ceil(std::numbers::sqrt2 * r2 / r1);
    return k * k * (r1 * r1) / (r2 * r2);
}

struct DensityField {
    long nx = 0, ny = 0;
    Domain2D domain;
    double r = 0.0;
    std::vector<double> values; // row-major J_r at node centers
    double l2_norm = 0.0;
    double mass_integral = 0.0; // \int J_r dm, should recover |mu| away from edges

    double at(long ix, long iy) const { return values[iy * nx + ix]; }
};

/// Ball-average density J_r nu (x) = nu(B(x,r)) / (pi r^2) on an nx-by-ny
/// node grid. The flat chart has m(B(x,r)) = pi r^2 exactly.
inline DensityField density_estimate(const ProjectedMeasure& mu, double r, long nx, long ny,
                                     const Domain2D& X, int threads = 0) {
    DensityField f;
    f.nx = nx;
    f.ny = ny;
    f.domain = X;
    f.r = r;
    f.values.assign(static_cast<std::size_t>(nx) * ny, 0.0);
    const SpatialHash2D hash(mu, r);
    const double dx = (X.x_hi - X.x_lo) / nx;
    const double dy = (X.y_hi - X.y_lo) / ny;
    const double ball_area = std::numbers::pi * r * r;
    parallel_for(ny, threads, [&](long iy) {
        const double y = X.y_lo + (iy + 0.5) * dy;
        for (long ix = 0; ix < nx; ++ix) {
            const double x = X.x_lo + (ix + 0.5) * dx;
            f.values[iy * nx + ix] = hash.ball_mass(x, y) / ball_area;
        }
    });
    double sq = 0.0, mass = 0.0;
    for (double v : f.values) {
        sq += v * v;
        mass += v;
    }
    f.l2_norm = std::sqrt(sq * dx * dy);
    f.mass_integral = mass * dx * dy;
    return f;
}

/// Average atom count inside an r-ball centered at the measure's own atoms
/// (sub-sampled). This is the occupancy statistic the scan starvation guard
/// uses.
inline double atom_centered_ball_count(const ProjectedMeasure& mu, double r,
                                       long max_probes = 2000) {
    if (mu.atoms.empty()) return 0.0;
    const SpatialHash2D hash(mu, r);
    const long n = static_cast<long>(mu.atoms.size());
    const long stride = std::max<long>(1, n / max_probes);
    double acc = 0.0;
    long probes = 0;
    for (long i = 0; i < n; i += stride) {
        acc += static_cast<double>(hash.ball_count(mu.atoms[i].x, mu.atoms[i].y));
        ++probes;
    }
    return acc / probes;
}

} // namespace dynlab
