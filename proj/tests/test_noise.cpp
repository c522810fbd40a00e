#include <doctest.h>

#include <cmath>

#include "entroflow/noise.hpp"

using namespace entroflow;

TEST_CASE("determinism and shape") {
    auto a = NoisePath::sample(42, 3, 0.01, 100);
    auto b = NoisePath::sample(42, 3, 0.01, 100);
    CHECK((a.increments() - b.increments()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.steps() == 100);
    CHECK(a.modes() == 3);

    auto c = NoisePath::sample(43, 3, 0.01, 100);
    CHECK((a.increments() - c.increments()).cwiseAbs().maxCoeff() > 0.0);

    auto empty = NoisePath::sample(7, 0, 0.01, 10);
    CHECK(empty.increments().size() == 0);
}

TEST_CASE("increment variance sits in the concentration band") {
    // 1e4 draws of N(0, 0.01): the sample variance concentrates near 0.01
    auto p = NoisePath::sample(42, 1, 0.01, 10000);
    const double mean = p.increments().col(0).mean();
    double var = 0.0;
    for (int s = 0; s < p.steps(); ++s) {
        const double d = p.increment(s, 0) - mean;
        var += d * d;
    }
    var /= p.steps() - 1;
    CHECK(var >= 0.0097);
    CHECK(var <= 0.0103);
}

TEST_CASE("refinement reproduces parents bitwise") {
    auto p = NoisePath::sample(1234, 2, 0.02, 500);
    auto fine = p.refine();
    CHECK(fine.steps() == 1000);
    CHECK(fine.dt() == doctest::Approx(0.01));
    for (int k = 0; k < 2; ++k)
        for (int s = 0; s < p.steps(); ++s) {
            const double sum = fine.increment(2 * s, k) + fine.increment(2 * s + 1, k);
            CHECK(sum == p.increment(s, k));  // bitwise
        }

    // two refinements commute with pair-summing twice
    auto finer = fine.refine();
    for (int k = 0; k < 2; ++k)
        for (int s = 0; s < p.steps(); ++s) {
            const double sum = (finer.increment(4 * s, k) + finer.increment(4 * s + 1, k)) +
                               (finer.increment(4 * s + 2, k) + finer.increment(4 * s + 3, k));
            CHECK(sum == doctest::Approx(p.increment(s, k)).epsilon(1e-15));
        }

    // child increments carry the right scale
    double var = 0.0;
    const double cmean = fine.increments().col(0).mean();
    for (int s = 0; s < fine.steps(); ++s) {
        const double d = fine.increment(s, 0) - cmean;
        var += d * d;
    }
    var /= fine.steps() - 1;
    CHECK(var == doctest::Approx(0.01).epsilon(0.06));
}

TEST_CASE("modes decorrelate") {
    auto p = NoisePath::sample(9, 2, 0.01, 10000);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (int s = 0; s < p.steps(); ++s) {
        sxy += p.increment(s, 0) * p.increment(s, 1);
        sxx += p.increment(s, 0) * p.increment(s, 0);
        syy += p.increment(s, 1) * p.increment(s, 1);
    }
    const double rho = sxy / std::sqrt(sxx * syy);
    CHECK(std::abs(rho) <= 0.05);
}

TEST_CASE("scaled increments pass a normality test") {
    // Kolmogorov-Smirnov against the standard normal at the 1% level
    auto p = NoisePath::sample(42, 1, 0.04, 10000);
    std::vector<double> z(p.steps());
    for (int s = 0; s < p.steps(); ++s) z[s] = p.increment(s, 0) / 0.2;
    std::sort(z.begin(), z.end());
    auto normal_cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
    double ks = 0.0;
    const double n = static_cast<double>(z.size());
    for (size_t i = 0; i < z.size(); ++i) {
        const double f = normal_cdf(z[i]);
        ks = std::max(ks, std::max(std::abs(f - i / n), std::abs((i + 1) / n - f)));
    }
    CHECK(ks <= 1.6276 / std::sqrt(n));
}

TEST_CASE("oversized requests are rejected") {
    CHECK_THROWS(NoisePath::sample(1, 1, 0.0, 10));
    CHECK_THROWS(NoisePath::sample(1, -1, 0.1, 10));
    CHECK_THROWS(NoisePath::sample(1, 1 << 20, 0.1, 1 << 20));
}
