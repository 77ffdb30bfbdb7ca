#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "monas/errors.hpp"
#include "monas/gp.hpp"
#include "monas/rng.hpp"

using namespace monas;

// ---- oracle: direct 3x3 posterior solve, no Cholesky involved ----

static double matern52(const std::vector<double>& a, const std::vector<double>& b, const GpHyper& h) {
    double d2 = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double ls = std::exp(h.log_lengthscale[i]);
        const double d = (a[i] - b[i]) / ls;
        d2 += d * d;
    }
    const double t = std::sqrt(5.0) * std::sqrt(d2);
    return std::exp(h.log_signal_var) * (1.0 + t + t * t / 3.0) * std::exp(-t);
}

// Solve A x = b for a symmetric 3x3 system by Cramer's rule.
static std::array<double, 3> solve3(const double A[3][3], const std::array<double, 3>& b) {
    auto det3 = [](const double m[3][3]) {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    const double d = det3(A);
    std::array<double, 3> x{};
    for (int col = 0; col < 3; ++col) {
        double M[3][3];
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) M[i][j] = (j == col) ? b[i] : A[i][j];
        }
        x[col] = det3(M) / d;
    }
    return x;
}

struct Posterior {
    double mean, var;
};

static Posterior oracle_posterior(const std::vector<std::vector<double>>& xs, const std::array<double, 3>& y,
                                  const GpHyper& h, const std::vector<double>& q) {
    double K[3][3];
    const double noise = std::exp(h.log_noise_var);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) K[i][j] = matern52(xs[i], xs[j], h) + (i == j ? noise : 0.0);
    }
    const std::array<double, 3> alpha = solve3(K, y);
    std::array<double, 3> kstar{};
    for (int i = 0; i < 3; ++i) kstar[i] = matern52(q, xs[i], h);
    const std::array<double, 3> kinv_kstar = solve3(K, kstar);
    Posterior p;
    p.mean = 0.0;
    double quad = 0.0;
    for (int i = 0; i < 3; ++i) {
        p.mean += kstar[i] * alpha[i];
        quad += kstar[i] * kinv_kstar[i];
    }
    p.var = matern52(q, q, h) - quad;
    return p;
}

TEST_CASE("posterior matches a hand-solved three point system") {
    const std::vector<std::vector<double>> xs = {{0.1}, {0.5}, {0.9}};
    const std::vector<std::array<double, 2>> ys = {{0.3, 2.0}, {-0.2, 1.0}, {0.7, -0.5}};
    GpHyper h;
    h.log_lengthscale = {std::log(0.3)};
    h.log_signal_var = 0.0;
    h.log_noise_var = std::log(1e-4);

    GpPair gp;
    gp.fit_fixed(xs, ys, h);
    REQUIRE(gp.ok());

    for (double qx : {0.0, 0.2, 0.45, 0.7, 1.0}) {
        const std::vector<double> q = {qx};
        std::array<double, 2> mean{}, var{};
        gp.predict(q, mean, var);
        for (int obj = 0; obj < 2; ++obj) {
            std::array<double, 3> ycol = {ys[0][obj], ys[1][obj], ys[2][obj]};
            const Posterior want = oracle_posterior(xs, ycol, h, q);
            CHECK(mean[obj] == doctest::Approx(want.mean).epsilon(1e-5));
            CHECK(var[obj] == doctest::Approx(want.var).epsilon(1e-4).scale(1e-6));
            CHECK(var[obj] >= 0.0);
        }
    }
}

TEST_CASE("a near noiseless refit interpolates its training points") {
    Rng rng(41);
    const int n = 12, dim = 5;
    std::vector<std::vector<double>> xs;
    std::vector<std::array<double, 2>> ys;
    for (int i = 0; i < n; ++i) {
        std::vector<double> x(dim);
        for (double& v : x) v = rng.uniform01();
        const double f0 = std::sin(3.0 * x[0]) + x[1] * x[1];
        const double f1 = x[2] - 0.5 * x[3] + 0.1 * std::cos(6.0 * x[4]);
        xs.push_back(x);
        ys.push_back({f0, f1});
    }
    GpHyper h;
    h.log_lengthscale.assign(dim, std::log(0.7));
    h.log_signal_var = 0.0;
    h.log_noise_var = std::log(1e-8);

    GpPair gp;
    gp.fit_fixed(xs, ys, h);
    REQUIRE(gp.ok());
    for (int i = 0; i < n; ++i) {
        std::array<double, 2> mean{}, var{};
        gp.predict(xs[i], mean, var);
        for (int obj = 0; obj < 2; ++obj) {
            CHECK(std::abs(mean[obj] - ys[i][obj]) < 1e-3);
            CHECK(var[obj] >= 0.0);
            CHECK(var[obj] < 1e-3);
        }
    }
}

TEST_CASE("hyper search fit is deterministic and sane at training points") {
    Rng rng(43);
    const int n = 20, dim = 3;
    std::vector<std::vector<double>> xs;
    std::vector<std::array<double, 2>> ys;
    for (int i = 0; i < n; ++i) {
        std::vector<double> x(dim);
        for (double& v : x) v = rng.uniform01();
        xs.push_back(x);
        ys.push_back({0.05 + 0.9 * std::exp(-3.0 * x[0]), 1000.0 + 4000.0 * x[1]});
    }

    GpPair a, b;
    a.fit(xs, ys, 7);
    b.fit(xs, ys, 7);
    REQUIRE(a.ok());
    CHECK(a.hyper().log_lengthscale.size() == static_cast<size_t>(dim));
    CHECK(a.hyper().log_lengthscale == b.hyper().log_lengthscale);
    CHECK(a.hyper().log_signal_var == b.hyper().log_signal_var);
    CHECK(a.hyper().log_noise_var == b.hyper().log_noise_var);

    for (int i = 0; i < n; ++i) {
        std::array<double, 2> ma{}, va{}, mb{}, vb{};
        a.predict(xs[i], ma, va);
        b.predict(xs[i], mb, vb);
        CHECK(ma == mb);
        CHECK(va == vb);
        for (int obj = 0; obj < 2; ++obj) {
            // Within half a standard deviation of the pooled output scale.
            CHECK(std::abs(ma[obj] - ys[i][obj]) < 0.5 * a.out_std(obj));
            CHECK(va[obj] >= 0.0);
        }
    }
}

TEST_CASE("uncertainty grows away from the data and the mean reverts") {
    Rng rng(47);
    const int n = 10, dim = 2;
    std::vector<std::vector<double>> xs;
    std::vector<std::array<double, 2>> ys;
    for (int i = 0; i < n; ++i) {
        // All the data sits in a corner of the cube.
        std::vector<double> x = {0.2 * rng.uniform01(), 0.2 * rng.uniform01()};
        xs.push_back(x);
        ys.push_back({x[0] + 0.1, 2.0 - x[1]});
    }
    GpPair gp;
    gp.fit(xs, ys, 11);
    REQUIRE(gp.ok());

    std::array<double, 2> mean_near{}, var_near{}, mean_far{}, var_far{};
    gp.predict(xs[0], mean_near, var_near);
    gp.predict({0.95, 0.95}, mean_far, var_far);
    for (int obj = 0; obj < 2; ++obj) {
        CHECK(var_far[obj] > var_near[obj]);
        CHECK(var_far[obj] >= 0.0);
        // Far from the data the posterior falls back to the output mean.
        CHECK(std::abs(mean_far[obj] - gp.out_mean(obj)) < 2.0 * gp.out_std(obj));
    }
}

TEST_CASE("degenerate inputs are rejected or survived") {
    GpPair gp;
    CHECK_THROWS_WITH_AS(gp.fit({{0.1}}, {{1.0, 2.0}}, 1), doctest::Contains("gp.data"), Error);
    CHECK_THROWS_WITH_AS(gp.fit({{0.1}, {0.2, 0.3}}, {{1.0, 2.0}, {3.0, 4.0}}, 1),
                         doctest::Contains("gp.data"), Error);
    GpHyper bad;
    bad.log_lengthscale = {0.0, 0.0};
    CHECK_THROWS_WITH_AS(gp.fit_fixed({{0.1}, {0.2}}, {{1.0, 2.0}, {3.0, 4.0}}, bad),
                         doctest::Contains("gp.data"), Error);

    // Constant outputs: the standardizer clamp keeps everything finite.
    std::vector<std::vector<double>> xs = {{0.1, 0.1}, {0.4, 0.6}, {0.9, 0.2}};
    std::vector<std::array<double, 2>> ys = {{3.0, 7.0}, {3.0, 7.0}, {3.0, 7.0}};
    gp.fit(xs, ys, 3);
    REQUIRE(gp.ok());
    std::array<double, 2> mean{}, var{};
    gp.predict({0.5, 0.5}, mean, var);
    CHECK(std::isfinite(mean[0]));
    CHECK(std::isfinite(var[0]));
    CHECK(mean[0] == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(mean[1] == doctest::Approx(7.0).epsilon(1e-6));

    // Duplicated inputs with conflicting outputs stress the factorization;
    // jitter or the fallback flag must handle it without throwing.
    std::vector<std::vector<double>> dup = {{0.5}, {0.5}, {0.5}, {0.5}};
    std::vector<std::array<double, 2>> dupy = {{0.0, 1.0}, {1.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}};
    GpPair gp2;
    gp2.fit(dup, dupy, 5);
    if (gp2.ok()) {
        std::array<double, 2> m{}, v{};
        gp2.predict({0.5}, m, v);
        CHECK(std::isfinite(m[0]));
        CHECK(v[0] >= 0.0);
    }
}
