#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mkv/families.hpp"

namespace mkv {

// ---------------------------------------------------------------------------
// Model: drift/diffusion coefficients of the interacting-particle dynamics.
//
// Both coefficients take the separable form  b(x, mu) = bhat(x, <g, mu>)
// with  bhat(x, m) = p(x) + q(x) * m.  The measure derivative is then
// closed-form:  d/d(atom x_j) of bhat(x, (1/N) sum g(x_l))  =
// (1/N) * q(x) * g'(x_j).
// ---------------------------------------------------------------------------

class ModelSpec {
public:
    /// Throws std::invalid_argument when a derivative-bearing slot uses a
    /// family with unbounded derivative (square everywhere; identity is
    /// admitted only for the interaction maps g, where it acts as affine).
    ModelSpec(BivariateMap drift, FunctionFamily drift_g, BivariateMap diffusion,
              FunctionFamily diffusion_g, double horizon);

    const BivariateMap& drift() const { return drift_; }
    const BivariateMap& diffusion() const { return diffusion_; }
    const FunctionFamily& drift_g() const { return drift_g_; }
    const FunctionFamily& diffusion_g() const { return diffusion_g_; }
    double horizon() const { return horizon_; }

private:
    BivariateMap drift_;
    FunctionFamily drift_g_;
    BivariateMap diffusion_;
    FunctionFamily diffusion_g_;
    double horizon_;
};

/// Drift, diffusion, and their four partials at one point.
struct CoefficientEval {
    double b0;     // drift value
    double b1;     // diffusion value
    double db0_dx; // d(drift)/dx
    double db0_dm; // d(drift)/d(interaction mean)
    double db1_dx;
    double db1_dm;
};

/// Pure pointwise evaluation; throws std::domain_error on non-finite input.
CoefficientEval eval_coefficients(const ModelSpec& spec, double x, double m0, double m1);

// ---------------------------------------------------------------------------
// Criterion: terminal-law functional with closed-form L-derivative.
// ---------------------------------------------------------------------------

enum class CriterionKind {
    LinearMean, // phi = <f, mu>
    Composed,   // phi = psi(<f, mu>)
    Variance,   // phi = <x^2, mu> - <x, mu>^2
};

struct Criterion {
    CriterionKind kind = CriterionKind::Variance;
    FunctionFamily f;   // linear_mean, composed
    FunctionFamily psi; // composed

    static Criterion variance() { return {CriterionKind::Variance, {}, {}}; }
    static Criterion linear_mean(FunctionFamily f) { return {CriterionKind::LinearMean, f, {}}; }
    /// Throws std::invalid_argument when the composition grows faster than
    /// quadratically (e.g. square of the second moment).
    static Criterion composed(FunctionFamily psi, FunctionFamily f);
};

/// phi evaluated at the uniform atom measure; throws on an empty vector.
double criterion_value(const Criterion& c, std::span<const double> atoms);

/// L-derivative at every atom. Equals N times the gradient of
/// criterion_value with respect to that atom.
std::vector<double> criterion_lgrad(const Criterion& c, std::span<const double> atoms);

// ---------------------------------------------------------------------------
// Initial law.
// ---------------------------------------------------------------------------

enum class LawKind { Gaussian, Uniform, TwoPoint };
enum class SamplingMode { Iid, QuantileStratified };

struct InitialLaw {
    LawKind kind = LawKind::Gaussian;
    // gaussian: a = mean, b = std (> 0)
    // uniform: a = lo, b = hi (> lo)
    // two_point: a = x1, b = x2, p = P(X = x1)
    double a = 0.0, b = 1.0, p = 0.5;
    SamplingMode sampling = SamplingMode::QuantileStratified;

    static InitialLaw gaussian(double mean, double std_dev,
                               SamplingMode mode = SamplingMode::QuantileStratified);
    static InitialLaw uniform(double lo, double hi,
                              SamplingMode mode = SamplingMode::QuantileStratified);
    static InitialLaw two_point(double x1, double x2, double prob,
                                SamplingMode mode = SamplingMode::QuantileStratified);

    double quantile(double u) const;
    double mean() const;
    double variance() const;
};

/// N initial atoms. Stratified mode places atom i at the ((i-0.5)/N)-quantile
/// and is seed-independent and sorted; iid mode draws from the stream keyed
/// by seed. Throws std::invalid_argument for n < 2.
std::vector<double> sample_initial(const InitialLaw& law, std::size_t n, std::uint64_t seed);

} // namespace mkv
