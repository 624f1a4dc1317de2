#pragma once

#include "randbc/grid.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <memory>

namespace randbc {

/// One value per grid node, row-major node order.
using Field = Eigen::VectorXd;
/// One value per boundary node, in `Grid2D::boundary_order()`.
using BoundaryValues = Eigen::VectorXd;
/// (d/dx, d/dy) per grid node.
using GradientField = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Coefficients (a, q) of -div(a grad u) + q u, sampled at grid nodes.
///
/// `a` is stored as its three independent entries; an isotropic field keeps
/// a12 = 0 and a11 = a22 and is assembled with the 5-point stencil.
struct CoefficientField {
    Field a11, a12, a22, q;
    bool isotropic = true;
    double lambda_bound = 1;

    /// a = I, q = 0.
    static CoefficientField identity(const Grid2D& grid);
    /// Scalar a (promoted to a*I). A non-positive `lambda` means "smallest
    /// admissible bound"; a positive one is checked.
    static CoefficientField scalar(const Grid2D& grid, Field a, Field q, double lambda = 0);
    static CoefficientField matrix(const Grid2D& grid, Field a11, Field a12, Field a22, Field q,
                                   double lambda = 0);
};

/// Throws std::invalid_argument naming the first node where a is not uniformly
/// elliptic or a, q exceed the bound.
void validate(const Grid2D& grid, const CoefficientField& coeff);

/// Smallest eigenvalue of the symmetric 2x2 matrix [[a11, a12], [a12, a22]].
double min_eigenvalue(double a11, double a12, double a22);

struct SolverOptions {
    double rtol = 1e-10;
    int maxiter = 0;  // 0 selects 20 * n
};

struct SolveStats {
    int iterations = 0;
    double residual = 0;   // ||A u - b||_inf / ||b||_inf
    bool direct = false;
};

/// Discrete L on the interior nodes plus the map from boundary values to the
/// interior right-hand side. Immutable once assembled; concurrent solves are safe.
class DiscreteOperator {
public:
    using Matrix = Eigen::SparseMatrix<double>;

    DiscreteOperator(Grid2D grid, Matrix interior, Matrix coupling, bool coercive,
                     SolverOptions options);
    ~DiscreteOperator();
    DiscreteOperator(DiscreteOperator&&) noexcept;
    DiscreteOperator& operator=(DiscreteOperator&&) noexcept;

    const Grid2D& grid() const noexcept { return grid_; }
    /// Interior-interior block A, acting on interior unknowns.
    const Matrix& interior() const noexcept { return interior_; }
    /// Interior-boundary block B; the interior rhs for boundary data g is -B g.
    const Matrix& coupling() const noexcept { return coupling_; }
    /// True when q >= 0 everywhere and the preconditioned CG path is used.
    bool coercive() const noexcept { return coercive_; }
    const SolverOptions& options() const noexcept { return options_; }
    /// Estimate of cond_1(A) from inverse iteration; only computed on the direct
    /// path (0 otherwise). Values beyond 1e12 make every solve fail.
    double condition_estimate() const noexcept { return condition_; }

    /// Solves A u_I = f_I - B g. `source` is a full-grid field whose interior
    /// entries form f; pass an empty vector for f = 0.
    Field solve(const BoundaryValues& g, const Field& source, SolveStats* stats = nullptr) const;

private:
    struct DirectSolver;

    Grid2D grid_;
    Matrix interior_;
    Matrix coupling_;
    bool coercive_;
    SolverOptions options_;
    double condition_ = 0;
    std::unique_ptr<DirectSolver> direct_;
};

DiscreteOperator assemble(const Grid2D& grid, const CoefficientField& coeff,
                          SolverOptions options = {});

/// Solution of L u = 0 with u = g on the boundary.
Field solve_dirichlet(const DiscreteOperator& op, const BoundaryValues& g,
                      SolveStats* stats = nullptr);

/// Solution of Laplace(u) = rhs with u = g on the boundary.
Field solve_poisson(const Grid2D& grid, const Field& rhs, const BoundaryValues& g,
                    SolverOptions options = {});

/// Central differences in the interior, second-order one-sided at the edges.
GradientField gradient(const Grid2D& grid, const Field& f);

/// 5-point Laplacian at interior nodes; boundary entries are NaN.
Field laplacian(const Grid2D& grid, const Field& f);

struct Norms {
    double l2 = 0;
    double h1 = 0;
    double linf = 0;
};

/// Node-quadrature norms over a mask (weight h^2 per member node).
Norms norms(const Grid2D& grid, const Field& f, const SubdomainMask& mask);

/// Restriction of a full-grid field to the boundary, in boundary order.
BoundaryValues boundary_trace(const Grid2D& grid, const Field& f);

/// Samples a function of position at every node.
template <typename Fn>
Field sample_field(const Grid2D& grid, Fn&& fn) {
    Field f(grid.num_nodes());
    for (int node = 0; node < grid.num_nodes(); ++node) {
        f[node] = fn(grid.point(node));
    }
    return f;
}

/// Samples a function of position at every boundary node.
template <typename Fn>
BoundaryValues sample_boundary(const Grid2D& grid, Fn&& fn) {
    const auto& order = grid.boundary_order();
    BoundaryValues g(static_cast<Eigen::Index>(order.size()));
    for (std::size_t k = 0; k < order.size(); ++k) {
        g[static_cast<Eigen::Index>(k)] = fn(grid.point(order[k]));
    }
    return g;
}

} // namespace randbc
