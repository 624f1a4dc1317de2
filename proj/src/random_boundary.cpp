#include "randbc/random_boundary.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace randbc {

BoundaryBasis::BoundaryBasis(int K) : K_(K) {
    if (K < 1) throw std::invalid_argument("bc.K must be >= 1");
}

double BoundaryBasis::eval(int k, double s) {
    if (k == 1) return 0.5;
    const double arg = 2 * std::numbers::pi * frequency(k) * s / Grid2D::perimeter();
    return (k % 2 == 0 ? std::cos(arg) : std::sin(arg)) / std::numbers::sqrt2;
}

Eigen::MatrixXd BoundaryBasis::sample(const Grid2D& grid) const {
    Eigen::MatrixXd out(K_, grid.num_boundary());
    for (int b = 0; b < grid.num_boundary(); ++b) {
        const double s = grid.arclength(b);
        for (int k = 1; k <= K_; ++k) out(k - 1, b) = eval(k, s);
    }
    return out;
}

Eigen::MatrixXd BoundaryBasis::gram(const Grid2D& grid) const {
    const Eigen::MatrixXd e = sample(grid);
    return grid.h() * e * e.transpose();
}

Family parse_family(std::string_view name) {
    if (name == "gaussian") return Family::gaussian;
    if (name == "rademacher") return Family::rademacher;
    if (name == "uniform") return Family::uniform;
    throw std::invalid_argument("unknown coefficient family '" + std::string(name) +
                                "' (expected gaussian, rademacher or uniform)");
}

std::string_view to_string(Family family) {
    switch (family) {
    case Family::gaussian: return "gaussian";
    case Family::rademacher: return "rademacher";
    case Family::uniform: return "uniform";
    }
    return "?";
}

RandomBoundaryModel::RandomBoundaryModel(int K, double c, double s, Family family)
    : basis_(K), c_(c), s_(s), family_(family), sigma_(K) {
    if (!(c > 0)) throw std::invalid_argument("bc.sigma.c must be > 0");
    if (!(s > 1)) throw std::invalid_argument("bc.sigma.s must be > 1 (summable sigma_k)");
    for (int k = 1; k <= K; ++k) sigma_[k - 1] = c * std::pow(static_cast<double>(k), -s);
}

Rng derive_stream(std::uint64_t master_seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      0x52424e44u};
    return Rng(seq);
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial) {
    return derive_stream(master_seed, trial)();
}

BoundaryFunction sample(const RandomBoundaryModel& model, Rng& rng) {
    BoundaryFunction bf{Eigen::VectorXd(model.size())};
    switch (model.family()) {
    case Family::gaussian: {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int k = 0; k < model.size(); ++k) bf.coeffs[k] = model.sigmas()[k] * normal(rng);
        break;
    }
    case Family::rademacher: {
        std::bernoulli_distribution coin(0.5);
        for (int k = 0; k < model.size(); ++k) bf.coeffs[k] = coin(rng) ? model.sigmas()[k] : -model.sigmas()[k];
        break;
    }
    case Family::uniform: {
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        for (int k = 0; k < model.size(); ++k) {
            bf.coeffs[k] = std::sqrt(3.0) * model.sigmas()[k] * unit(rng);
        }
        break;
    }
    }
    return bf;
}

BoundaryValues evaluate(const BoundaryFunction& bf, const Grid2D& grid) {
    BoundaryValues g = BoundaryValues::Zero(grid.num_boundary());
    for (int b = 0; b < grid.num_boundary(); ++b) {
        const double s = grid.arclength(b);
        double v = 0;
        for (int k = 1; k <= bf.coeffs.size(); ++k) {
            const double a = bf.coeffs[k - 1];
            if (a != 0) v += a * BoundaryBasis::eval(k, s);
        }
        g[b] = v;
    }
    return g;
}

double sigma_norm(const BoundaryFunction& bf, const RandomBoundaryModel& model) {
    if (bf.coeffs.size() != model.size()) {
        throw std::invalid_argument("sigma_norm: truncation order does not match the model");
    }
    return bf.coeffs.cwiseQuotient(model.sigmas()).norm();
}

double surrogate_h12_norm(const BoundaryFunction& bf) {
    double sum = 0;
    for (int k = 1; k <= bf.coeffs.size(); ++k) {
        const double m = BoundaryBasis::frequency(k);
        const double a = bf.coeffs[k - 1];
        sum += std::sqrt(1 + m * m) * a * a;
    }
    return std::sqrt(sum);
}

CovarianceEstimate empirical_covariance(std::span<const BoundaryFunction> samples) {
    if (samples.size() < 2) throw std::invalid_argument("empirical_covariance: need at least 2 samples");
    const Eigen::Index K = samples.front().coeffs.size();
    Eigen::MatrixXd data(static_cast<Eigen::Index>(samples.size()), K);
    for (std::size_t m = 0; m < samples.size(); ++m) {
        if (samples[m].coeffs.size() != K) throw std::invalid_argument("empirical_covariance: mixed truncation orders");
        data.row(static_cast<Eigen::Index>(m)) = samples[m].coeffs.transpose();
    }
    const Eigen::RowVectorXd mean = data.colwise().mean();
    const Eigen::MatrixXd centered = data.rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(samples.size() - 1);

    CovarianceEstimate out{cov.diagonal(), 0.0};
    for (Eigen::Index j = 0; j < K; ++j) {
        for (Eigen::Index k = j + 1; k < K; ++k) {
            const double denom = std::sqrt(cov(j, j) * cov(k, k));
            if (denom > 0) out.max_offdiag_correlation = std::max(out.max_offdiag_correlation, std::abs(cov(j, k)) / denom);
        }
    }
    return out;
}

} // namespace randbc
