#pragma once

#include "dynlab/common.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace dynlab {

enum class Example { ex1 = 1, ex2 = 2 };

struct ConstraintCheck {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool ok = false;
    bool hard = true; // soft checks are reported but never fail validation
};

struct ConstraintReport {
    std::vector<ConstraintCheck> checks;
    bool all_hard_ok() const {
        for (const auto& c : checks)
            if (c.hard && !c.ok) return false;
        return true;
    }
};

/// Parameters for the two piecewise skew-product maps and their deformation.
///
/// Defaults give the hyperbolic baselines. The deformation fields
/// (lambda_c_plus, delta_bump, mu, n_power) are only consulted by the
/// deformed-map code paths; mu = 0 reduces to the n_power-fold base map.
struct MapParams {
    Example example = Example::ex1;
    int l = 3;                  // circle expansion degree (= lambda_uu)
    double lambda_ss = 0.1;
    double lambda_c = 0.4;
    double alpha = 0.5;         // example-1 slope magnitude
    // Example-1 per-rectangle affine data: g(x) = slopes[i] x + shifts_c[i],
    // h(x) = shifts_d[i] on cell i. Filled by finalize() from alpha unless
    // custom values are supplied.
    std::vector<double> slopes, shifts_c, shifts_d;
    bool custom_cells = false;

    double lambda_c_plus = 1.05;
    double delta_bump = 0.03;
    double mu = 0.0;
    int n_power = 1;

    double rho() const { return lambda_c / static_cast<double>(l); }
    double lambda_uu() const { return static_cast<double>(l); }

    /// Half-width of the forward-invariant y-interval. Example 2's sine term
    /// forces |y| <= 1/(1 - lambda_c); example 1 stays inside [-1, 1].
    double y_max() const {
        return example == Example::ex1 ? 1.0 : 1.0 / (1.0 - lambda_c);
    }

    double sup_g() const { return example == Example::ex1 ? alpha : 1.0; }
    double sup_h() const {
        if (example == Example::ex2) return 0.5;
        double m = 0.0;
        for (double d : shifts_d) m = std::max(m, std::fabs(d));
        return m;
    }
    /// sup |dg/dx| over the circle.
    double sup_alpha() const {
        if (example == Example::ex2) return 2.0 * std::acos(-1.0);
        double m = 0.0;
        for (double s : slopes) m = std::max(m, std::fabs(s));
        return m;
    }
    /// A-priori bound on the unstable slope: sup|dg/dx| / (lambda_uu - lambda_c).
    double slope_sup_bound() const { return sup_alpha() / (lambda_uu() - lambda_c); }

    void finalize() {
        if (example == Example::ex2) {
            l = 2;
            slopes.clear();
            shifts_c.clear();
            shifts_d = {0.5, -0.5};
            return;
        }
        if (custom_cells && static_cast<int>(slopes.size()) == l) return;
        slopes = {alpha, 0.0, -alpha};
        shifts_c = {-alpha, 0.0, alpha};
        shifts_d = {-2.0 / 3.0, 0.0, 2.0 / 3.0};
    }
};

inline MapParams ex1_defaults() {
    MapParams p;
    p.finalize();
    return p;
}

inline MapParams ex2_defaults() {
    MapParams p;
    p.example = Example::ex2;
    p.l = 2;
    p.lambda_ss = 0.45;
    p.lambda_c = 0.505;
    p.lambda_c_plus = 1.004;
    p.delta_bump = 0.04;
    p.finalize();
    return p;
}

/// Checks every stated parameter inequality and returns the full report.
/// Hard constraints gate validity; the neutrality/regularity flags are
/// informational and never fail a run.
inline ConstraintReport constraint_report(const MapParams& p) {
    ConstraintReport rep;
    auto add = [&](std::string name, double lhs, double rhs, bool ok, bool hard = true) {
        rep.checks.push_back({std::move(name), lhs, rhs, ok, hard});
    };

    add("l >= 2", static_cast<double>(p.l), 2.0, p.l >= 2);
    add("lambda_ss > 0", p.lambda_ss, 0.0, p.lambda_ss > 0.0);
    add("lambda_ss < lambda_c", p.lambda_ss, p.lambda_c, p.lambda_ss < p.lambda_c);
    add("lambda_c < 1", p.lambda_c, 1.0, p.lambda_c < 1.0);
    add("lambda_c > 1/l", p.lambda_c, 1.0 / p.l, p.lambda_c > 1.0 / p.l);

    if (p.example == Example::ex1) {
        add("example1: l == 3", static_cast<double>(p.l), 3.0, p.l == 3);
        add("alpha > 0", p.alpha, 0.0, p.alpha > 0.0);
        add("alpha < 1 - lambda_c", p.alpha, 1.0 - p.lambda_c, p.alpha < 1.0 - p.lambda_c);
        // translation constants must keep the image z-slabs disjoint and in
        // [-1, 1]; otherwise the map is not injective on the trapping box
        if (static_cast<int>(p.shifts_d.size()) == p.l) {
            double worst_gap = 2.0, worst_abs = 0.0;
            for (int i = 0; i < p.l; ++i) {
                worst_abs = std::max(worst_abs, std::fabs(p.shifts_d[i]));
                for (int j = i + 1; j < p.l; ++j)
                    worst_gap = std::min(worst_gap, std::fabs(p.shifts_d[i] - p.shifts_d[j]));
            }
            add("z-slabs disjoint: min|d_i - d_j| > 2 lambda_ss", worst_gap,
                2.0 * p.lambda_ss, worst_gap > 2.0 * p.lambda_ss);
            add("z-slabs inside box: max|d_i| + lambda_ss <= 1",
                worst_abs + p.lambda_ss, 1.0, worst_abs + p.lambda_ss <= 1.0);
        }
    } else {
        add("example2: l == 2", static_cast<double>(p.l), 2.0, p.l == 2);
        add("lambda_ss < 0.5", p.lambda_ss, 0.5, p.lambda_ss < 0.5);
        add("lambda_c > 0.5", p.lambda_c, 0.5, p.lambda_c > 0.5);
        add("lambda_c < 0.51", p.lambda_c, 0.51, p.lambda_c < 0.51);
    }

    add("mu in [0,1]", p.mu, 1.0, p.mu >= 0.0 && p.mu <= 1.0);
    add("n_power >= 1", static_cast<double>(p.n_power), 1.0, p.n_power >= 1);
    add("lambda_c_plus > 1", p.lambda_c_plus, 1.0, p.lambda_c_plus > 1.0);
    add("delta_bump < 1/(10 l)", p.delta_bump, 1.0 / (10.0 * p.l),
        p.delta_bump > 0.0 && p.delta_bump < 1.0 / (10.0 * p.l));

    // Advisory flags. The neutral-center ratio uses the family's honest rate
    // bounds (min center rate lambda_c^n, unstable rate l^n); it is reported,
    // not enforced.
    const double n = p.n_power;
    const double h2 = p.lambda_c_plus /
                      (std::pow(p.lambda_c, 2.0 * n) * std::pow(p.lambda_uu(), n));
    add("neutral center: lambda_c+ / ((lambda_c^n)^2 l^n) < 1", h2, 1.0, h2 < 1.0,
        /*hard=*/false);
    const double tc1 = p.lambda_c_plus * p.lambda_c_plus / (p.l * p.lambda_c);
    add("(lambda_c+)^2 / (l lambda_c) < 1", tc1, 1.0, tc1 < 1.0, /*hard=*/false);
    const double tc2 = p.l * p.lambda_ss / p.lambda_c_plus;
    add("l lambda_ss / lambda_c+ < 1", tc2, 1.0, tc2 < 1.0, /*hard=*/false);

    return rep;
}

/// Validates a raw parameter record. Throws ConstraintError carrying every
/// failed inequality; on success returns the finalized record.
inline MapParams validate_params(MapParams raw) {
    raw.finalize();
    ConstraintReport rep = constraint_report(raw);
    if (!rep.all_hard_ok()) {
        std::vector<ConstraintViolation> bad;
        std::string msg = "parameter constraints failed:";
        for (const auto& c : rep.checks) {
            if (c.hard && !c.ok) {
                bad.push_back({c.name, c.lhs, c.rhs});
                msg += " [" + c.name + "]";
            }
        }
        throw ConstraintError(msg, std::move(bad));
    }
    return raw;
}

// ---------------------------------------------------------------------------
// key=value config files
// ---------------------------------------------------------------------------

using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(std::istream& in) {
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const char* ws = " \t\r\n";
            auto b = s.find_first_not_of(ws);
            if (b == std::string::npos) return std::string{};
            auto e = s.find_last_not_of(ws);
            return s.substr(b, e - b + 1);
        };
        std::string t = trim(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
        kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return kv;
}

/// Applies config keys on top of `base`. Unknown keys are an error.
inline MapParams apply_config(MapParams base, const KeyValues& kv) {
    for (const auto& [key, value] : kv) {
        auto num = [&]() {
            try {
                return std::stod(value);
            } catch (const std::exception&) {
                throw ConfigError("config key '" + key + "': bad number '" + value + "'");
            }
        };
        if (key == "example") {
            int e = static_cast<int>(num());
            if (e != 1 && e != 2) throw ConfigError("config key 'example': must be 1 or 2");
            if (e == 2 && base.example != Example::ex2) base = ex2_defaults();
            if (e == 1 && base.example != Example::ex1) base = ex1_defaults();
        } else if (key == "l") {
            base.l = static_cast<int>(num());
        } else if (key == "lambda_ss") {
            base.lambda_ss = num();
        } else if (key == "lambda_c") {
            base.lambda_c = num();
        } else if (key == "alpha") {
            base.alpha = num();
        } else if (key == "lambda_c_plus") {
            base.lambda_c_plus = num();
        } else if (key == "delta_bump") {
            base.delta_bump = num();
        } else if (key == "mu") {
            base.mu = num();
        } else if (key == "n_power") {
            base.n_power = static_cast<int>(num());
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    base.finalize();
    return base;
}

inline MapParams load_params_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open params file: " + path);
    KeyValues kv = parse_key_values(in);
    MapParams base = ex1_defaults();
    auto it = kv.find("example");
    if (it != kv.end() && it->second == "2") base = ex2_defaults();
    return apply_config(base, kv);
}

inline KeyValues params_to_key_values(const MapParams& p) {
    KeyValues kv;
    auto put = [&](const std::string& k, double v) {
        char buf[32];
        auto res = std::to_chars(buf, buf + sizeof buf, v); // shortest round-trip form
        kv[k] = std::string(buf, res.ptr);
    };
    kv["example"] = p.example == Example::ex1 ? "1" : "2";
    kv["l"] = std::to_string(p.l);
    put("lambda_ss", p.lambda_ss);
    put("lambda_c", p.lambda_c);
    put("alpha", p.alpha);
    put("lambda_c_plus", p.lambda_c_plus);
    put("delta_bump", p.delta_bump);
    put("mu", p.mu);
    kv["n_power"] = std::to_string(p.n_power);
    return kv;
}

} // namespace dynlab
