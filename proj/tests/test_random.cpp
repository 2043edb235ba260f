#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "amerlsm/random.hpp"

using namespace amerlsm::rng;

TEST(Splitmix, KnownSequenceFromZero) {
    // Reference outputs of the splitmix64 generator seeded with 0: the
    // state advances by the golden gamma before each mix.
    std::uint64_t state = 0;
    const std::uint64_t expected[3] = {0xE220A8397B1DCDAFULL, 0x6E789E6AA1B965F4ULL, 0x06C45D188009454FULL};
    for (std::uint64_t e : expected) {
        EXPECT_EQ(splitmix64(state), e);
        state += 0x9E3779B97F4A7C15ULL;
    }
}

TEST(CounterStream, UniformsAreInOpenUnitInterval) {
    const CounterStream s(42, 7);
    for (std::uint64_t c = 0; c < 100000; ++c) {
        const double u = s.uniform(c);
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(CounterStream, PureFunctionOfKeyAndCounter) {
    const CounterStream a(1, 2);
    const CounterStream b(1, 2);
    const CounterStream c(1, 3);
    const CounterStream d(2, 2);
    int same_c = 0;
    int same_d = 0;
    for (std::uint64_t k = 0; k < 1000; ++k) {
        EXPECT_EQ(a.bits(k), b.bits(k));
        same_c += a.bits(k) == c.bits(k);
        same_d += a.bits(k) == d.bits(k);
    }
    EXPECT_EQ(same_c, 0);
    EXPECT_EQ(same_d, 0);
}

TEST(CounterStream, UniformMomentsAndSerialCorrelation) {
    const CounterStream s(123, 0);
    const int n = 200000;
    double sum = 0.0;
    double sq = 0.0;
    double lag = 0.0;
    double prev = s.uniform(0);
    for (int k = 0; k < n; ++k) {
        const double u = s.uniform(static_cast<std::uint64_t>(k));
        sum += u;
        sq += u * u;
        if (k > 0) lag += (u - 0.5) * (prev - 0.5);
        prev = u;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    EXPECT_NEAR(mean, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
    EXPECT_NEAR(var, 1.0 / 12.0, 0.002);
    EXPECT_NEAR(lag / (n - 1) * 12.0, 0.0, 4.0 / std::sqrt(n));
}

TEST(BoxMuller, KnownPoint) {
    double n1 = 0.0;
    double n2 = 0.0;
    box_muller(std::exp(-0.5), 0.0, n1, n2);  // radius 1, angle 0
    EXPECT_NEAR(n1, 1.0, 1e-15);
    EXPECT_NEAR(n2, 0.0, 1e-15);
    box_muller(std::exp(-2.0), 0.25, n1, n2);  // radius 2, angle pi/2
    EXPECT_NEAR(n1, 0.0, 1e-15);
    EXPECT_NEAR(n2, 2.0, 1e-15);
}

TEST(BoxMuller, StandardNormalMoments) {
    const CounterStream s(9, 9);
    const int pairs = 100000;
    double sum = 0.0;
    double sq = 0.0;
    double cross = 0.0;
    double fourth = 0.0;
    for (int k = 0; k < pairs; ++k) {
        double a = 0.0;
        double b = 0.0;
        box_muller(s.uniform(2 * k), s.uniform(2 * k + 1), a, b);
        sum += a + b;
        sq += a * a + b * b;
        fourth += a * a * a * a + b * b * b * b;
        cross += a * b;
    }
    const double n = 2.0 * pairs;
    EXPECT_NEAR(sum / n, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(sq / n, 1.0, 4.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(fourth / n, 3.0, 4.0 * std::sqrt(96.0 / n));
    EXPECT_NEAR(cross / pairs, 0.0, 4.0 / std::sqrt(pairs));
}

TEST(PoissonInverse, ZeroMeanGivesZero) {
    EXPECT_EQ(poisson_inverse(0.999999, 0.0), 0);
    EXPECT_EQ(poisson_inverse(0.5, -1.0), 0);
}

TEST(PoissonInverse, MatchesCdfBoundaries) {
    const double mean = 2.5;
    // P(N = 0) = e^-2.5 ~ 0.0821, P(N <= 1) = 3.5 e^-2.5 ~ 0.2873
    EXPECT_EQ(poisson_inverse(0.08, mean), 0);
    EXPECT_EQ(poisson_inverse(0.09, mean), 1);
    EXPECT_EQ(poisson_inverse(0.28, mean), 1);
    EXPECT_EQ(poisson_inverse(0.29, mean), 2);
}

TEST(PoissonInverse, MonotoneInUniformAndMean) {
    for (double mean : {0.01, 0.5, 3.0, 20.0}) {
        int prev = 0;
        for (int k = 1; k < 1000; ++k) {
            const int n = poisson_inverse(k / 1000.0, mean);
            EXPECT_GE(n, prev);
            prev = n;
        }
    }
    for (double u : {0.1, 0.5, 0.9, 0.999}) {
        int prev = 0;
        for (double mean = 0.0; mean < 10.0; mean += 0.25) {
            const int n = poisson_inverse(u, mean);
            EXPECT_GE(n, prev);
            prev = n;
        }
    }
}

TEST(PoissonInverse, SampleMeanAndVariance) {
    const CounterStream s(5, 1);
    const double mean = 1.7;
    const int n = 200000;
    double sum = 0.0;
    double sq = 0.0;
    for (int k = 0; k < n; ++k) {
        const int v = poisson_inverse(s.uniform(k), mean);
        sum += v;
        sq += static_cast<double>(v) * v;
    }
    const double m = sum / n;
    EXPECT_NEAR(m, mean, 4.0 * std::sqrt(mean / n));
    EXPECT_NEAR(sq / n - m * m, mean, 0.03);
}
