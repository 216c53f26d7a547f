#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mkv {

// Closed family of scalar functions used to assemble coefficients and
// criteria. Values and first derivatives are available in closed form.
enum class FamilyKind { Constant, Affine, TanhSaturated, Square, Identity };

struct FunctionFamily {
    FamilyKind kind = FamilyKind::Constant;
    // constant: p0
    // affine: p0 + p1 * x
    // tanh_saturated: p0 + p1 * tanh(p2 * x)
    double p0 = 0.0, p1 = 0.0, p2 = 0.0;

    static FunctionFamily constant(double c) { return {FamilyKind::Constant, c, 0.0, 0.0}; }
    static FunctionFamily affine(double a, double b) { return {FamilyKind::Affine, a, b, 0.0}; }
    static FunctionFamily tanh_saturated(double c0, double c1, double s) {
        return {FamilyKind::TanhSaturated, c0, c1, s};
    }
    static FunctionFamily square() { return {FamilyKind::Square, 0.0, 0.0, 0.0}; }
    static FunctionFamily identity() { return {FamilyKind::Identity, 0.0, 0.0, 0.0}; }

    double value(double x) const {
        switch (kind) {
            case FamilyKind::Constant: return p0;
            case FamilyKind::Affine: return p0 + p1 * x;
            case FamilyKind::TanhSaturated: return p0 + p1 * std::tanh(p2 * x);
            case FamilyKind::Square: return x * x;
            case FamilyKind::Identity: return x;
        }
        return 0.0;
    }

    double deriv(double x) const {
        switch (kind) {
            case FamilyKind::Constant: return 0.0;
            case FamilyKind::Affine: return p1;
            case FamilyKind::TanhSaturated: {
                const double t = std::tanh(p2 * x);
                return p1 * p2 * (1.0 - t * t);
            }
            case FamilyKind::Square: return 2.0 * x;
            case FamilyKind::Identity: return 1.0;
        }
        return 0.0;
    }

    /// sup_x |f'(x)|; infinite for the square family.
    double deriv_bound() const {
        switch (kind) {
            case FamilyKind::Constant: return 0.0;
            case FamilyKind::Affine: return std::fabs(p1);
            case FamilyKind::TanhSaturated: return std::fabs(p1 * p2);
            case FamilyKind::Square: return std::numeric_limits<double>::infinity();
            case FamilyKind::Identity: return 1.0;
        }
        return 0.0;
    }

    bool is_zero() const {
        switch (kind) {
            case FamilyKind::Constant: return p0 == 0.0;
            case FamilyKind::Affine: return p0 == 0.0 && p1 == 0.0;
            case FamilyKind::TanhSaturated: return p1 == 0.0 && p0 == 0.0;
            default: return false;
        }
    }

    std::string describe() const;
};

/// Separable bivariate coefficient slice: beta(x, m) = p(x) + q(x) * m.
struct BivariateMap {
    FunctionFamily p, q;

    double value(double x, double m) const { return p.value(x) + q.value(x) * m; }
    double dx(double x, double m) const { return p.deriv(x) + q.deriv(x) * m; }
    double dm(double x) const { return q.value(x); }
};

} // namespace mkv
