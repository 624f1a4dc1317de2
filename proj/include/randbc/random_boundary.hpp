#pragma once

#include "randbc/elliptic.hpp"
#include "randbc/grid.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace randbc {

/// Trigonometric system on the boundary arclength s in [0, 4):
/// e_1 = 1/2, e_{2m} = cos(2 pi m s / 4) / sqrt 2, e_{2m+1} = sin(2 pi m s / 4) / sqrt 2.
/// Orthonormal in L^2 of the boundary (total length 4).
class BoundaryBasis {
public:
    explicit BoundaryBasis(int K);

    int size() const noexcept { return K_; }
    /// Trigonometric frequency m of the 1-based mode k.
    static int frequency(int k) noexcept { return k / 2; }
    /// Value of the 1-based mode k at arclength s.
    static double eval(int k, double s);

    /// K x (boundary nodes) matrix: row k-1 is e_k sampled in boundary order.
    Eigen::MatrixXd sample(const Grid2D& grid) const;
    /// Discrete L^2 Gram matrix with weight h per boundary node.
    Eigen::MatrixXd gram(const Grid2D& grid) const;

private:
    int K_;
};

enum class Family { gaussian, rademacher, uniform };

Family parse_family(std::string_view name);
std::string_view to_string(Family family);

/// Coefficient vector a_k, k = 1..K (stored 0-based).
struct BoundaryFunction {
    Eigen::VectorXd coeffs;
};

/// Independent coefficients with mean 0 and variance sigma_k^2, sigma_k = c k^-s.
class RandomBoundaryModel {
public:
    RandomBoundaryModel(int K, double c, double s, Family family);

    const BoundaryBasis& basis() const noexcept { return basis_; }
    int size() const noexcept { return basis_.size(); }
    double c() const noexcept { return c_; }
    double decay() const noexcept { return s_; }
    Family family() const noexcept { return family_; }
    /// sigma_k for 1-based k.
    double sigma(int k) const { return sigma_[static_cast<Eigen::Index>(k - 1)]; }
    const Eigen::VectorXd& sigmas() const noexcept { return sigma_; }

private:
    BoundaryBasis basis_;
    double c_, s_;
    Family family_;
    Eigen::VectorXd sigma_;
};

using Rng = std::mt19937_64;

/// Independent stream for work item `index` under `master_seed`. Depends only on
/// the pair, never on scheduling.
Rng derive_stream(std::uint64_t master_seed, std::uint64_t index);

/// Seed of trial `trial` under `master_seed`; run_trial(..., trial_seed(s, m), ...)
/// reproduces trial m of a success curve run with master seed s.
std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial);

BoundaryFunction sample(const RandomBoundaryModel& model, Rng& rng);

/// Boundary values sum_k a_k e_k(s(node)) in boundary order.
BoundaryValues evaluate(const BoundaryFunction& bf, const Grid2D& grid);

/// (sum_k a_k^2 / sigma_k^2)^(1/2).
double sigma_norm(const BoundaryFunction& bf, const RandomBoundaryModel& model);

/// Spectral H^{1/2} stand-in (sum_k (1 + m(k)^2)^(1/2) a_k^2)^(1/2).
double surrogate_h12_norm(const BoundaryFunction& bf);

struct CovarianceEstimate {
    Eigen::VectorXd variance;        // unbiased, per mode
    double max_offdiag_correlation;  // max |corr(a_j, a_k)| over j != k
};

CovarianceEstimate empirical_covariance(std::span<const BoundaryFunction> samples);

} // namespace randbc
