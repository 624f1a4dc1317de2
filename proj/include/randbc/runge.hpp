#pragma once

#include "randbc/elliptic.hpp"
#include "randbc/grid.hpp"
#include "randbc/random_boundary.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace randbc {

/// Global solutions z_k with boundary data e_k, k = 1..K, stored as the
/// columns of a (nodes x K) matrix so that sum_k a_k z_k is a matrix-vector product.
struct Dictionary {
    Grid2D grid;
    Eigen::MatrixXd z;
    RandomBoundaryModel model;
    double max_residual = 0;  // worst relative solve residual among the K solves

    int size() const noexcept { return static_cast<int>(z.cols()); }
    Field member(int k) const { return z.col(k - 1); }
    /// sum_k a_k z_k; exact by linearity of the discrete problem.
    Field synthesize(const BoundaryFunction& bf) const;
};

/// K Dirichlet solves, parallel over k.
Dictionary build_dictionary(const DiscreteOperator& op, const RandomBoundaryModel& model, int threads = 1);

enum class TargetKind { dictionary_member, fundamental_solution, harmonic_poly };

struct TargetSpec {
    TargetKind kind = TargetKind::fundamental_solution;
    int member = 1;            // dictionary_member: 1-based k
    Point pole{0.9, 0.9};      // fundamental_solution: -(1/2pi) log|x - pole|
    int degree = 2;            // harmonic_poly: Re or Im of (x + i y)^degree
    bool imaginary = false;
};

/// Local solution h on a disk D together with its H^1(D) norm.
struct LocalTarget {
    Field h;
    SubdomainMask disk;
    double h1_norm = 0;
    double residual = 0;  // max |L_h h| on D relative to the target's scale
};

LocalTarget make_target(const Grid2D& grid, const SubdomainMask& disk, const TargetSpec& spec,
                        const Dictionary* dict = nullptr);

struct RungeResult {
    Eigen::VectorXd c;
    double eps_achieved = 0;   // ||sum c_k z_k - h||_{L2(D)} / ||h||_{H1(D)}
    double boundary_cost = 0;  // ||sum c_k e_k||_sigma / ||h||_{H1(D)}
    double lambda = 0;
    double eigen_floor = 0;    // 1e-14 * trace of the L2(D) Gram matrix
    int floored_modes = 0;     // eigen-directions discarded below the floor
};

/// Minimizes ||sum c_k z_k - h||^2_{L2(D)} + lambda sum_k c_k^2 / sigma_k^2 over the
/// first `modes` dictionary members (all when modes <= 0).
RungeResult approximate(const LocalTarget& target, const Dictionary& dict, double lambda, int modes = 0);

/// approximate() along a descending sequence of positive weights.
std::vector<RungeResult> tradeoff_curve(const LocalTarget& target, const Dictionary& dict,
                                        std::span<const double> lambdas, int modes = 0);

} // namespace randbc
