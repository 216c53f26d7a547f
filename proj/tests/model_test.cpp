#include <doctest.h>

#include <algorithm>

#include "support.hpp"

using namespace mkv;
using mkvtest::Draw;
using mkvtest::rel_err;

TEST_CASE("eval_coefficients: mean-reversion model") {
    const ModelSpec spec = mkvtest::ou_spec(1.0, 0.2);
    const auto e = eval_coefficients(spec, 0.3, 0.1, 0.0);
    CHECK(e.b0 == doctest::Approx(-0.2).epsilon(1e-15));
    CHECK(e.b1 == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(e.db0_dx == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(e.db0_dm == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(e.db1_dx == 0.0);
    CHECK(e.db1_dm == 0.0);
}

TEST_CASE("eval_coefficients: zero model and saturating diffusion") {
    const ModelSpec zero = mkvtest::frozen_spec();
    const auto e0 = eval_coefficients(zero, 0.7, -0.3, 0.4);
    CHECK(e0.b0 == 0.0);
    CHECK(e0.b1 == 0.0);
    CHECK(e0.db0_dx == 0.0);
    CHECK(e0.db0_dm == 0.0);
    CHECK(e0.db1_dx == 0.0);
    CHECK(e0.db1_dm == 0.0);

    const ModelSpec tanh_diff(
        {FunctionFamily::constant(0.0), FunctionFamily::constant(0.0)}, FunctionFamily::identity(),
        {FunctionFamily::tanh_saturated(0.2, 0.05, 1.0), FunctionFamily::constant(0.0)},
        FunctionFamily::constant(0.0), 1.0);
    const auto e1 = eval_coefficients(tanh_diff, 0.0, 0.0, 0.0);
    CHECK(e1.b1 == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(e1.db1_dx == doctest::Approx(0.05).epsilon(1e-15));

    CHECK_THROWS_AS(eval_coefficients(zero, std::nan(""), 0.0, 0.0), std::domain_error);
}

TEST_CASE("ModelSpec rejects unbounded-derivative coefficient families") {
    CHECK_THROWS_AS(ModelSpec({FunctionFamily::square(), FunctionFamily::constant(0.0)},
                              FunctionFamily::identity(),
                              {FunctionFamily::constant(0.1), FunctionFamily::constant(0.0)},
                              FunctionFamily::constant(0.0), 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(ModelSpec({FunctionFamily::identity(), FunctionFamily::constant(0.0)},
                              FunctionFamily::identity(),
                              {FunctionFamily::constant(0.1), FunctionFamily::constant(0.0)},
                              FunctionFamily::constant(0.0), 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(ModelSpec({FunctionFamily::constant(0.0), FunctionFamily::constant(0.0)},
                              FunctionFamily::square(),
                              {FunctionFamily::constant(0.1), FunctionFamily::constant(0.0)},
                              FunctionFamily::constant(0.0), 1.0),
                    std::invalid_argument);
    // identity is fine as an interaction map
    CHECK_NOTHROW(mkvtest::ou_spec());
}

TEST_CASE("criterion_value: frozen examples") {
    const std::vector<double> pm{-1.0, 1.0};
    CHECK(criterion_value(Criterion::variance(), pm) == doctest::Approx(1.0).epsilon(1e-15));

    const std::vector<double> two{0.0, 2.0};
    CHECK(criterion_value(Criterion::linear_mean(FunctionFamily::square()), two) ==
          doctest::Approx(2.0).epsilon(1e-15));

    CHECK_THROWS_AS(criterion_value(Criterion::variance(), std::vector<double>{}),
                    std::invalid_argument);
}

TEST_CASE("criterion_value: variance of a large gaussian sample") {
    // sd of the empirical variance of a gaussian sample is sqrt(2) var / sqrt(N)
    const std::size_t n = 100000;
    const InitialLaw law = InitialLaw::gaussian(0.0, 0.5, SamplingMode::Iid);
    const auto atoms = sample_initial(law, n, 99);
    const double var = criterion_value(Criterion::variance(), atoms);
    const double band = 3.0 * std::sqrt(2.0) * 0.25 / std::sqrt(static_cast<double>(n));
    CHECK(std::fabs(var - 0.25) <= band);
}

TEST_CASE("criterion_lgrad: frozen examples") {
    const std::vector<double> pm{-1.0, 1.0};
    const auto g = criterion_lgrad(Criterion::variance(), pm);
    CHECK(g[0] == doctest::Approx(-2.0).epsilon(1e-15));
    CHECK(g[1] == doctest::Approx(2.0).epsilon(1e-15));

    const auto ga =
        criterion_lgrad(Criterion::linear_mean(FunctionFamily::affine(0.4, 1.7)), pm);
    CHECK(ga[0] == doctest::Approx(1.7).epsilon(1e-15));
    CHECK(ga[1] == doctest::Approx(1.7).epsilon(1e-15));

    const auto gc = criterion_lgrad(
        Criterion::composed(FunctionFamily::square(), FunctionFamily::identity()),
        std::vector<double>{1.0, 3.0});
    CHECK(gc[0] == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(gc[1] == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("criterion_lgrad equals N times the finite-difference gradient") {
    Draw d(2024);
    for (int trial = 0; trial < 40; ++trial) {
        const Criterion c = mkvtest::random_criterion(d);
        const std::size_t n = 2 + d.index(30);
        auto atoms = d.normal_vector(n);
        const auto grad = criterion_lgrad(c, atoms);
        const double eps = 1e-6;
        for (std::size_t i = 0; i < n; i += 1 + d.index(3)) {
            auto up = atoms, dn = atoms;
            up[i] += eps;
            dn[i] -= eps;
            const double fd = static_cast<double>(n) *
                              (criterion_value(c, up) - criterion_value(c, dn)) / (2.0 * eps);
            CHECK(std::fabs(grad[i] - fd) <= 1e-5 * std::max(1.0, std::fabs(grad[i])));
        }
    }
}

TEST_CASE("measure derivative of the drift matches per-atom finite differences") {
    // d/d(atom j) of beta(x, <g, mu^N>) must equal (1/N) dm(beta) g'(x_j).
    Draw d(7);
    for (int trial = 0; trial < 30; ++trial) {
        const ModelSpec spec = mkvtest::random_spec(d);
        const std::size_t n = 4 + d.index(20);
        auto atoms = d.normal_vector(n);
        const double x = d.normal();
        const std::size_t j = d.index(n);

        auto mean_of = [&](const std::vector<double>& a) {
            return pairwise_sum_of(n, [&](std::size_t i) { return spec.drift_g().value(a[i]); }) /
                   static_cast<double>(n);
        };
        const double eps = 1e-6;
        auto up = atoms, dn = atoms;
        up[j] += eps;
        dn[j] -= eps;
        const double fd =
            (spec.drift().value(x, mean_of(up)) - spec.drift().value(x, mean_of(dn))) / (2.0 * eps);
        const double closed = spec.drift().dm(x) * spec.drift_g().deriv(atoms[j]) /
                              static_cast<double>(n);
        CHECK(std::fabs(fd - closed) <= 1e-5 * std::max(1e-3, std::fabs(closed)));
    }
}

TEST_CASE("sample_initial: stratified atoms") {
    const auto two = sample_initial(InitialLaw::two_point(0.0, 1.0, 0.5), 4, 1);
    CHECK(two == std::vector<double>{0.0, 0.0, 1.0, 1.0});

    const auto gauss = sample_initial(InitialLaw::gaussian(0.0, 0.5), 2, 1);
    CHECK(gauss[0] == doctest::Approx(-0.33724).epsilon(1e-4));
    CHECK(gauss[1] == doctest::Approx(0.33724).epsilon(1e-4));

    // seed independence and ascending order
    const auto a = sample_initial(InitialLaw::gaussian(0.3, 1.0), 33, 1);
    const auto b = sample_initial(InitialLaw::gaussian(0.3, 1.0), 33, 999);
    CHECK(a == b);
    CHECK(std::is_sorted(a.begin(), a.end()));

    CHECK_THROWS_AS(sample_initial(InitialLaw::gaussian(0.0, 1.0), 1, 1), std::invalid_argument);
}

TEST_CASE("sample_initial: iid determinism per seed") {
    const InitialLaw law = InitialLaw::gaussian(0.0, 0.5, SamplingMode::Iid);
    const auto a = sample_initial(law, 64, 42);
    const auto b = sample_initial(law, 64, 42);
    const auto c = sample_initial(law, 64, 43);
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("stratified second moment converges to the law second moment") {
    const InitialLaw laws[] = {InitialLaw::gaussian(0.1, 0.7), InitialLaw::uniform(-1.0, 2.0),
                               InitialLaw::two_point(-0.5, 1.5, 0.3)};
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t n = 64; n <= 4096; n *= 2) {
        double err = 0.0;
        for (const auto& law : laws) {
            const auto atoms = sample_initial(law, n, 0);
            const double m2 =
                pairwise_sum_of(n, [&](std::size_t i) { return atoms[i] * atoms[i]; }) /
                static_cast<double>(n);
            const double want = law.variance() + law.mean() * law.mean();
            err += std::fabs(m2 - want);
        }
        err /= 3.0;
        CHECK(err <= prev);
        prev = err;
    }
}

TEST_CASE("noise grid: counter addressing and moments") {
    const NoiseGrid grid(1234, 3, 64, 32, 0.01);
    // random access equals the materialized grid
    Draw d(5);
    for (int t = 0; t < 50; ++t) {
        const std::size_t i = d.index(64), k = d.index(32);
        CHECK(grid.at(i, k) == NoiseGrid::increment(1234, 3, i, k, 0.01));
    }
    // replicas and seeds decorrelate streams
    CHECK(NoiseGrid::increment(1234, 4, 0, 0, 0.01) != grid.at(0, 0));
    CHECK(NoiseGrid::increment(1235, 3, 0, 0, 0.01) != grid.at(0, 0));

    const std::size_t count = 256 * 64;
    const NoiseGrid big(777, 0, 256, 64, 0.01);
    double sum = 0.0, sq = 0.0;
    for (std::size_t k = 0; k < 64; ++k)
        for (double v : big.step_row(k)) {
            sum += v;
            sq += v * v;
        }
    const double m = sum / count;
    const double var = sq / count - m * m;
    CHECK(std::fabs(m) <= 4.0 * std::sqrt(0.01 / count));
    CHECK(std::fabs(var - 0.01) <= 4.0 * 0.01 * std::sqrt(2.0 / count));
}

TEST_CASE("Criterion: super-quadratic compositions are rejected") {
    CHECK_THROWS_AS(Criterion::composed(FunctionFamily::square(), FunctionFamily::square()),
                    std::invalid_argument);
    CHECK_NOTHROW(Criterion::composed(FunctionFamily::square(), FunctionFamily::identity()));
    CHECK_NOTHROW(Criterion::composed(FunctionFamily::affine(0.0, 1.0), FunctionFamily::square()));
    CHECK_NOTHROW(Criterion::composed(FunctionFamily::square(),
                                      FunctionFamily::tanh_saturated(0.0, 1.0, 1.0)));
}
