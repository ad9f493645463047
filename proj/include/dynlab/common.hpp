#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynlab {

inline constexpr const char* version = "0.1.0";
inline constexpr int report_schema_version = 1;

/// Wrap a real number into [0, 1).
inline double wrap01(double x) {
    double w = x - std::floor(x);
    // floor can leave w == 1.0 for x just below an integer
    return (w >= 1.0) ? w - 1.0 : w;
}

/// Signed circle difference a - b, taken in (-1/2, 1/2].
inline double circle_diff(double a, double b) {
    double d = wrap01(a - b);
    return (d > 0.5) ? d - 1.0 : d;
}

/// Distance on S^1 = R/Z.
inline double circle_dist(double a, double b) {
    return std::fabs(circle_diff(a, b));
}

struct ConstraintViolation {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
};

class ConstraintError : public std::runtime_error {
public:
    std::vector<ConstraintViolation> violations;
    explicit ConstraintError(std::string what, std::vector<ConstraintViolation> v)
        : std::runtime_error(std::move(what)), violations(std::move(v)) {}
};

class BranchMiss : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DepthTooSmall : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientDepth : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotContracting : public std::runtime_error {
public:
    double eta;
    explicit NotContracting(double eta_)
        : std::runtime_error("slope operator is not a contraction, eta = " + std::to_string(eta_)),
          eta(eta_) {}
};

class NoConvergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class AtomStarvation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FitDegenerate : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidRho : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace dynlab
