#pragma once

#include "dynlab/common.hpp"
#include "dynlab/params.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace dynlab {

/// A point of the phase space S^1 x [-y_max, y_max] x [-1, 1].
struct Point {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// Index (1-based) of the expanding cell [(k-1)/l, k/l) containing x.
/// Boundary points belong to the cell on their right.
inline int cell_of(double x, int l) {
    int k = static_cast<int>(std::floor(wrap01(x) * l));
    if (k >= l) k = l - 1;
    return k + 1;
}

inline double g_of(double x, const MapParams& p) {
    if (p.example == Example::ex2) return std::sin(2.0 * std::numbers::pi * x);
    const int i = cell_of(x, p.l) - 1;
    return p.slopes[i] * x + p.shifts_c[i];
}

inline double h_of(double x, const MapParams& p) {
    if (p.example == Example::ex2) return x < 0.5 ? 0.5 : -0.5;
    return p.shifts_d[cell_of(x, p.l) - 1];
}

/// dg/dx, the datum driving the unstable slope recursion.
inline double alpha_of(double x, const MapParams& p) {
    if (p.example == Example::ex2)
        return 2.0 * std::numbers::pi * std::cos(2.0 * std::numbers::pi * x);
    return p.slopes[cell_of(x, p.l) - 1];
}

/// One step of the base skew product:
///   (x, y, z) -> (l x mod 1, lambda_c y + g(x), lambda_ss z + h(x)).
/// The image representative already lies in the fundamental domain, so no
/// extra identification is applied here; the example-2 gluing only enters
/// chart bookkeeping (see transversality.hpp).
inline Point step(const Point& pt, const MapParams& p) {
    Point out;
    out.x = wrap01(static_cast<double>(p.l) * pt.x);
    out.y = p.lambda_c * pt.y + g_of(pt.x, p);
    out.z = p.lambda_ss * pt.z + h_of(pt.x, p);
    return out;
}

/// Inverse branch: the unique preimage of `pt` inside cell `branch`.
/// Throws BranchMiss when `pt` is not in the image of that cell.
inline Point inverse_step(const Point& pt, int branch, const MapParams& p) {
    if (branch < 1 || branch > p.l)
        throw BranchMiss("inverse_step: branch out of range");
    Point q;
    q.x = (pt.x + static_cast<double>(branch - 1)) / p.l;
    q.y = (pt.y - g_of(q.x, p)) / p.lambda_c;
    q.z = (pt.z - h_of(q.x, p)) / p.lambda_ss;
    const double tol = 1e-12 / std::min(p.lambda_c, p.lambda_ss);
    if (std::fabs(q.y) > p.y_max() + tol || std::fabs(q.z) > 1.0 + tol)
        throw BranchMiss("inverse_step: point not in image of requested branch");
    return q;
}

// ---------------------------------------------------------------------------
// Itineraries
// ---------------------------------------------------------------------------

enum class Orientation { forward, backward };

/// Symbol word over {1, ..., l}. Forward words record the cells visited by
/// the expanding x-orbit; backward words record preimage branches, one per
/// backward step, and parametrize unstable leaves.
struct Itinerary {
    std::vector<int> symbols;
    Orientation orientation = Orientation::backward;

    int depth() const { return static_cast<int>(symbols.size()); }
    int at(int i) const { // periodic continuation beyond the stored word
        return symbols[static_cast<std::size_t>(i) % symbols.size()];
    }
};

inline Itinerary itinerary_of(double x, int depth, const MapParams& p) {
    Itinerary it;
    it.orientation = Orientation::forward;
    it.symbols.reserve(depth);
    double cur = wrap01(x);
    for (int j = 0; j < depth; ++j) {
        it.symbols.push_back(cell_of(cur, p.l));
        cur = wrap01(static_cast<double>(p.l) * cur);
    }
    return it;
}

/// Exact angle num/den on S^1; multiplication by l stays exact, so symbolic
/// tests can run past the ~40-step horizon where doubles lose all l-ary
/// digits.
struct RationalAngle {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    void advance(int l) { num = (num * static_cast<std::uint64_t>(l)) % den; }
    int cell(int l) const {
        return static_cast<int>((num * static_cast<std::uint64_t>(l)) / den) + 1;
    }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

inline Itinerary itinerary_of(RationalAngle x, int depth, const MapParams& p) {
    Itinerary it;
    it.orientation = Orientation::forward;
    it.symbols.reserve(depth);
    for (int j = 0; j < depth; ++j) {
        it.symbols.push_back(x.cell(p.l));
        x.advance(p.l);
    }
    return it;
}

/// Periodic continuation of a word out to `len` symbols.
inline Itinerary extend_periodic(const Itinerary& w, int len) {
    if (w.depth() >= len) return w;
    Itinerary out = w;
    out.symbols.resize(len);
    for (int i = w.depth(); i < len; ++i) out.symbols[i] = w.at(i);
    return out;
}

/// Base point on the circle whose backward itinerary is `w` read
/// periodically: the tau-periodic point with digit cycle (w_L-1, ..., w_1-1).
inline double periodic_base_x(const Itinerary& w, int l) {
    const int L = w.depth();
    // x = D / (l^L - 1) with digits taken deepest-first
    long double num = 0.0L, pw = 1.0L;
    for (int j = 0; j < L; ++j) { // digit j is symbol w_{L-j}
        num = num * l + (w.symbols[L - 1 - j] - 1);
        pw *= l;
    }
    return static_cast<double>(num / (pw - 1.0L));
}

/// Backward x-orbit x_{-1}, ..., x_{-depth} determined by base point x0 and
/// branch word w (periodically continued).
inline std::vector<double> backward_x_orbit(double x0, const Itinerary& w, int depth, int l) {
    std::vector<double> xs(depth);
    double cur = wrap01(x0);
    for (int i = 0; i < depth; ++i) {
        cur = (cur + static_cast<double>(w.at(i) - 1)) / l;
        xs[i] = cur;
    }
    return xs;
}

struct AttractorPoint {
    Point p;
    double y_tail = 0.0; // truncation bound on |y - y_exact|
    double z_tail = 0.0;
};

/// Reconstructs the attractor point with the given backward itinerary via the
/// truncated series y = sum lambda_c^{i-1} g(x_{-i}), z likewise with
/// lambda_ss and h. The word is read periodically, which pins the base point
/// to the associated tau-periodic angle.
inline AttractorPoint attractor_point(const Itinerary& backward, const MapParams& p, int depth) {
    if (depth < 1 || backward.depth() < 1)
        throw DepthTooSmall("attractor_point: depth must be >= 1");
    if (backward.depth() < depth)
        throw DepthTooSmall("attractor_point: backward word shorter than requested depth");
    AttractorPoint out;
    out.p.x = periodic_base_x(backward, p.l);
    const auto xs = backward_x_orbit(out.p.x, backward, depth, p.l);
    double yc = 1.0, zc = 1.0, y = 0.0, z = 0.0;
    for (int i = 0; i < depth; ++i) {
        y += yc * g_of(xs[i], p);
        z += zc * h_of(xs[i], p);
        yc *= p.lambda_c;
        zc *= p.lambda_ss;
    }
    out.p.y = y;
    out.p.z = z;
    out.y_tail = p.sup_g() * std::pow(p.lambda_c, depth) / (1.0 - p.lambda_c);
    out.z_tail = p.sup_h() * std::pow(p.lambda_ss, depth) / (1.0 - p.lambda_ss);
    return out;
}

// ---------------------------------------------------------------------------
// Iterated closed forms
// ---------------------------------------------------------------------------

inline double tau_n(double x, int n, int l) {
    double cur = wrap01(x);
    for (int j = 0; j < n; ++j) cur = wrap01(static_cast<double>(l) * cur);
    return cur;
}

/// g_n(x) = sum_{j=0}^{n-1} lambda_c^{n-j-1} g(tau^j x), the y-part of the
/// n-fold composition.
inline double g_n(double x, int n, const MapParams& p) {
    double acc = 0.0, cur = wrap01(x);
    for (int j = 0; j < n; ++j) {
        acc = p.lambda_c * acc + g_of(cur, p);
        cur = wrap01(static_cast<double>(p.l) * cur);
    }
    return acc;
}

/// h_n(x) = sum_{j=0}^{n-1} lambda_ss^{n-j-1} h(tau^j x). Composing the base
/// map n times forces lambda_ss coefficients here.
inline double h_n(double x, int n, const MapParams& p) {
    double acc = 0.0, cur = wrap01(x);
    for (int j = 0; j < n; ++j) {
        acc = p.lambda_ss * acc + h_of(cur, p);
        cur = wrap01(static_cast<double>(p.l) * cur);
    }
    return acc;
}

/// d g_n / dx = sum_j lambda_c^{n-j-1} l^j dg/dx(tau^j x).
inline double g_n_deriv(double x, int n, const MapParams& p) {
    double acc = 0.0, cur = wrap01(x), lpow = 1.0;
    std::vector<double> terms(n);
    for (int j = 0; j < n; ++j) {
        terms[j] = alpha_of(cur, p) * lpow;
        cur = wrap01(static_cast<double>(p.l) * cur);
        lpow *= p.l;
    }
    for (int j = 0; j < n; ++j) acc = p.lambda_c * acc + terms[j];
    return acc;
}

} // namespace dynlab
