#include "randbc/random_boundary.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

namespace randbc {
namespace {

BoundaryFunction one_hot(int K, int k, double value = 1) {
    BoundaryFunction bf{Eigen::VectorXd::Zero(K)};
    bf.coeffs[k - 1] = value;
    return bf;
}

std::vector<BoundaryFunction> draw(const RandomBoundaryModel& model, int M, std::uint64_t seed) {
    Rng rng = derive_stream(seed, 0);
    std::vector<BoundaryFunction> out;
    out.reserve(M);
    for (int m = 0; m < M; ++m) out.push_back(sample(model, rng));
    return out;
}

TEST(BoundaryBasis, DiscreteOrthonormality) {
    for (int n : {17, 33, 65, 129}) {
        const Grid2D g(n);
        const Eigen::MatrixXd G = BoundaryBasis(33).gram(g);
        const double dev = (G - Eigen::MatrixXd::Identity(33, 33)).cwiseAbs().maxCoeff();
        EXPECT_LE(dev, 10.0 / n) << "n=" << n;
    }
}

TEST(BoundaryBasis, Frequencies) {
    EXPECT_EQ(BoundaryBasis::frequency(1), 0);
    EXPECT_EQ(BoundaryBasis::frequency(2), 1);
    EXPECT_EQ(BoundaryBasis::frequency(3), 1);
    EXPECT_EQ(BoundaryBasis::frequency(6), 3);
    EXPECT_DOUBLE_EQ(BoundaryBasis::eval(1, 2.7), 0.5);
    EXPECT_DOUBLE_EQ(BoundaryBasis::eval(2, 0), 1 / std::sqrt(2.0));
    EXPECT_THROW(BoundaryBasis(0), std::invalid_argument);
}

TEST(Model, SigmaSequenceAndValidation) {
    const RandomBoundaryModel m(33, 1, 1.5, Family::gaussian);
    EXPECT_DOUBLE_EQ(m.sigma(1), 1);
    EXPECT_NEAR(m.sigma(3), 0.19245008972987526, 1e-15);
    for (int k = 1; k <= 33; ++k) EXPECT_GT(m.sigma(k), 0);
    EXPECT_THROW(RandomBoundaryModel(33, 0, 1.5, Family::gaussian), std::invalid_argument);
    EXPECT_THROW(RandomBoundaryModel(33, 1, 1.0, Family::gaussian), std::invalid_argument);
    EXPECT_THROW(parse_family("cauchy"), std::invalid_argument);
    EXPECT_EQ(parse_family("uniform"), Family::uniform);
    EXPECT_EQ(to_string(Family::rademacher), "rademacher");
}

TEST(Sample, RademacherFirstCoefficientIsUnit) {
    const RandomBoundaryModel m(5, 1, 1.5, Family::rademacher);
    for (const auto& bf : draw(m, 200, 4)) {
        EXPECT_EQ(std::abs(bf.coeffs[0]), 1.0);
        for (int k = 1; k <= 5; ++k) EXPECT_DOUBLE_EQ(std::abs(bf.coeffs[k - 1]), m.sigma(k));
    }
}

TEST(Sample, GaussianMeanWithinClt) {
    const RandomBoundaryModel m(5, 1, 1.5, Family::gaussian);
    const int M = 100000;
    double sum = 0;
    for (const auto& bf : draw(m, M, 9)) sum += bf.coeffs[1];
    EXPECT_LE(std::abs(sum / M), 4 * m.sigma(2) / std::sqrt(double(M)));
}

TEST(Sample, UniformSupport) {
    const RandomBoundaryModel m(5, 1, 1.5, Family::uniform);
    for (const auto& bf : draw(m, 5000, 2)) EXPECT_LE(std::abs(bf.coeffs[2]), 0.33333333333333337);
}

TEST(Sample, DeterministicPerStream) {
    const RandomBoundaryModel m(9, 1, 1.5, Family::gaussian);
    const auto a = draw(m, 50, 77), b = draw(m, 50, 77), c = draw(m, 50, 78);
    for (int i = 0; i < 50; ++i) EXPECT_EQ(a[i].coeffs, b[i].coeffs);
    EXPECT_NE(a[0].coeffs, c[0].coeffs);
    // Streams depend on (seed, index) only.
    Rng r1 = derive_stream(5, 3), r2 = derive_stream(5, 3), r3 = derive_stream(5, 4);
    EXPECT_EQ(r1(), r2());
    EXPECT_NE(derive_stream(5, 3)(), r3());
    EXPECT_EQ(trial_seed(5, 3), derive_stream(5, 3)());
}

TEST(Evaluate, Examples) {
    const Grid2D g(17);
    const BoundaryValues c = evaluate(one_hot(33, 1, 2), g);
    EXPECT_LE((c.array() - 1).abs().maxCoeff(), 1e-15);
    EXPECT_EQ(evaluate(BoundaryFunction{Eigen::VectorXd::Zero(33)}, g).cwiseAbs().maxCoeff(), 0);
    const BoundaryValues e2 = evaluate(one_hot(33, 2), g);
    for (int k = 0; k < g.num_boundary(); ++k) {
        EXPECT_NEAR(e2[k], std::cos(std::numbers::pi * g.arclength(k) / 2) / std::sqrt(2.0), 1e-14);
    }
}

TEST(SigmaNorm, Examples) {
    const RandomBoundaryModel m(33, 1, 1.5, Family::gaussian);
    EXPECT_NEAR(sigma_norm(BoundaryFunction{m.sigmas()}, m), std::sqrt(33.0), 1e-12);
    EXPECT_EQ(sigma_norm(BoundaryFunction{Eigen::VectorXd::Zero(33)}, m), 0);
    EXPECT_DOUBLE_EQ(sigma_norm(one_hot(33, 1, m.sigma(1)), m), 1);
    EXPECT_THROW(sigma_norm(one_hot(5, 1), m), std::invalid_argument);
}

TEST(SigmaNorm, MeanSquareEqualsK) {
    const RandomBoundaryModel m(9, 1, 1.5, Family::gaussian);
    const int M = 20000;
    double mean = 0, mean_sq = 0;
    for (const auto& bf : draw(m, M, 21)) {
        const double v = sigma_norm(bf, m);
        mean += v / M;
        mean_sq += v * v / M;
    }
    // E||phi||^2 = K; chi-square(9) has sd sqrt(18), so 5 standard errors.
    EXPECT_NEAR(mean_sq, 9, 5 * std::sqrt(18.0 / M));
    EXPECT_LE(mean * mean, 9 + 5 * std::sqrt(18.0 / M));
}

TEST(SurrogateNorm, Examples) {
    EXPECT_DOUBLE_EQ(surrogate_h12_norm(one_hot(33, 1, 2)), 2);
    EXPECT_EQ(surrogate_h12_norm(BoundaryFunction{Eigen::VectorXd::Zero(33)}), 0);
    EXPECT_NEAR(surrogate_h12_norm(one_hot(33, 6)), std::pow(10.0, 0.25), 1e-14);
}

TEST(Covariance, GaussianVarianceWithinStandardErrors) {
    const RandomBoundaryModel m(5, 1, 1.5, Family::gaussian);
    const int M = 10000;
    const auto samples = draw(m, M, 12);
    const auto cov = empirical_covariance(samples);
    // Var of the unbiased estimator for a normal: 2 sigma^4 / (M-1).
    EXPECT_NEAR(cov.variance[0], 1, 5 * std::sqrt(2.0 / (M - 1)));
    EXPECT_LE(cov.max_offdiag_correlation, 5 / std::sqrt(double(M)));
}

TEST(Covariance, ZeroSamplesAndErrors) {
    std::vector<BoundaryFunction> zeros(4, BoundaryFunction{Eigen::VectorXd::Zero(3)});
    EXPECT_EQ(empirical_covariance(zeros).variance.cwiseAbs().maxCoeff(), 0);
    EXPECT_THROW(empirical_covariance(std::span<const BoundaryFunction>(zeros.data(), 1)), std::invalid_argument);
}

TEST(Covariance, EveryFamilyHasVarianceSigmaSquared) {
    const int M = 10000;
    for (Family f : {Family::gaussian, Family::rademacher, Family::uniform}) {
        const RandomBoundaryModel m(7, 1, 1.5, f);
        const auto cov = empirical_covariance(draw(m, M, 31));
        for (int k = 1; k <= 7; ++k) {
            EXPECT_NEAR(cov.variance[k - 1] / (m.sigma(k) * m.sigma(k)), 1, 5 * std::sqrt(2.0 / M))
                << to_string(f) << " k=" << k;
        }
    }
}

} // namespace
} // namespace randbc
