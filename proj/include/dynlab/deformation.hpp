#pragma once

#include "dynlab/dynamics.hpp"

#include <array>
#include <cmath>

namespace dynlab {

// Smooth step built from exp(-1/t): 0 for t <= 0, 1 for t >= 1, C^inf.
inline double smoothstep(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / t);
    const double b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

inline double smoothstep_deriv(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double a = std::exp(-1.0 / t);
    const double b = std::exp(-1.0 / (1.0 - t));
    const double s = a / (a + b);
    const double da = 1.0 / (t * t);            // d/dt log a
    const double db = -1.0 / ((1.0 - t) * (1.0 - t)); // d/dt log b
    return s * (1.0 - s) * (da - db);
}

/// Radial C^inf bump: 1 on ||u|| <= delta/3, 0 on ||u|| >= 2 delta/3,
/// strictly decreasing in between.
inline double bump_psi1(double ux, double uy, double delta) {
    const double rr = std::hypot(ux, uy);
    return smoothstep(2.0 - 3.0 * rr / delta);
}

inline std::array<double, 2> bump_psi1_grad(double ux, double uy, double delta) {
    const double rr = std::hypot(ux, uy);
    if (rr <= delta / 3.0 || rr >= 2.0 * delta / 3.0 || rr == 0.0) return {0.0, 0.0};
    const double ds = smoothstep_deriv(2.0 - 3.0 * rr / delta) * (-3.0 / delta);
    return {ds * ux / rr, ds * uy / rr};
}

/// Measured C^1 norm of psi1 (sup of |grad| over radii). The smooth-step
/// construction gives 6/delta; reported rather than assumed.
inline double bump_c1_norm(double delta) {
    double best = 0.0;
    for (int i = 1; i < 2000; ++i) {
        const double rr = delta * i / 2000.0;
        const double d = std::fabs(smoothstep_deriv(2.0 - 3.0 * rr / delta) * 3.0 / delta);
        best = std::max(best, d);
    }
    return best;
}

/// The deformed n-step family. The base map's n-fold composition is modified
/// in the center direction inside a bump around a fixed point q, moving the
/// center multiplier at q from lambda_c^n (mu = 0) to lambda_c_plus (mu = 1).
class DeformedMap {
public:
    MapParams params;
    Point q;              // fixed point carrying the deformation
    double alpha_q = 0.0; // unstable slope at q
    double chart_scale = 1.0;

    explicit DeformedMap(const MapParams& p) : params(p) {
        // fixed point of the base map: cell-2 interior point for example 1,
        // the unique circle fixed point x = 0 for example 2
        if (p.example == Example::ex1) {
            q = Point{0.5, (p.slopes[1] * 0.5 + p.shifts_c[1]) / (1.0 - p.lambda_c),
                      p.shifts_d[1] / (1.0 - p.lambda_ss)};
            alpha_q = p.slopes[1] / (p.lambda_uu() - p.lambda_c);
        } else {
            q = Point{0.0, 0.0, 0.5 / (1.0 - p.lambda_ss)};
            // all terms of the slope series see cos(0) = 1
            alpha_q = 2.0 * std::numbers::pi / (p.lambda_uu() - p.lambda_c);
        }
        // shear sending E^uu(q) -> e1, E^c(q) -> e2, scaled so the chart is
        // 1-Lipschitz (image of B(q, delta) stays inside B(0, delta))
        const double a = alpha_q;
        const double t = 1.0 + a * a / 2.0;
        const double op_norm = std::sqrt(t + std::sqrt(t * t - 1.0));
        chart_scale = 1.0 / op_norm;
    }

    /// Chart around q: u = s A ((x, y) - q), A = [[1, 0], [-alpha_q, 1]].
    std::array<double, 2> psi0(double x, double y) const {
        const double dx = circle_diff(x, q.x);
        const double dy = y - q.y;
        return {chart_scale * dx, chart_scale * (dy - alpha_q * dx)};
    }

    double lambda_c_n() const { return std::pow(params.lambda_c, params.n_power); }
    double lambda_ss_n() const { return std::pow(params.lambda_ss, params.n_power); }
    double lambda_uu_n() const { return std::pow(params.lambda_uu(), params.n_power); }

    /// Center deformation Phi(x, y) = mu psi1(psi0(x, y)) (lambda_c+ - lambda_c^n) (y - q.y).
    double phi(double x, double y) const {
        if (params.mu == 0.0) return 0.0;
        const auto u = psi0(x, y);
        const double b = bump_psi1(u[0], u[1], params.delta_bump);
        if (b == 0.0) return 0.0;
        return params.mu * b * (params.lambda_c_plus - lambda_c_n()) * (y - q.y);
    }

    std::array<double, 2> phi_grad(double x, double y) const {
        if (params.mu == 0.0) return {0.0, 0.0};
        const auto u = psi0(x, y);
        const double b = bump_psi1(u[0], u[1], params.delta_bump);
        const auto gb = bump_psi1_grad(u[0], u[1], params.delta_bump);
        const double amp = params.mu * (params.lambda_c_plus - lambda_c_n());
        const double dy = y - q.y;
        // chain rule through u = s A (x - qx, y - qy)
        const double du_dx0 = chart_scale;                   // du1/dx
        const double du_dx1 = -chart_scale * alpha_q;        // du2/dx
        const double du_dy1 = chart_scale;                   // du2/dy
        const double db_dx = gb[0] * du_dx0 + gb[1] * du_dx1;
        const double db_dy = gb[1] * du_dy1;
        return {amp * db_dx * dy, amp * (db_dy * dy + b)};
    }

    /// One step of the deformed family:
    ///   x -> tau^n(x), y -> lambda_c^n y + g_n(x) + Phi(x, y),
    ///   z -> lambda_ss^n z + h_n(x).
    Point apply(const Point& pt) const {
        Point out;
        out.x = tau_n(pt.x, params.n_power, params.l);
        out.y = lambda_c_n() * pt.y + g_n(pt.x, params.n_power, params) + phi(pt.x, pt.y);
        out.z = lambda_ss_n() * pt.z + h_n(pt.x, params.n_power, params);
        return out;
    }

    /// Analytic center derivative at q: lambda_c^n + mu (lambda_c+ - lambda_c^n).
    double center_derivative_at_q() const {
        return lambda_c_n() + params.mu * (params.lambda_c_plus - lambda_c_n());
    }

    /// Whether (x, y) lies outside the support of the bump factor.
    bool outside_bump(double x, double y) const {
        const auto u = psi0(x, y);
        return std::hypot(u[0], u[1]) >= 2.0 * params.delta_bump / 3.0;
    }
};

} // namespace dynlab
