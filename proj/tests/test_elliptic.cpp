#include "randbc/elliptic.hpp"
#include "randbc/errors.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace randbc {
namespace {

using std::numbers::pi;

// Dense row of the interior operator for a node, keyed by lattice offset.
double entry(const DiscreteOperator& op, int node, int di, int dj) {
    const Grid2D& g = op.grid();
    const int row = g.interior_index(node);
    const int col = g.interior_index(g.index(g.ix(node) + di, g.iy(node) + dj));
    return Eigen::MatrixXd(op.interior()).coeff(row, col);
}

Field constant(const Grid2D& g, double v) { return Field::Constant(g.num_nodes(), v); }

TEST(Assemble, FivePointLaplacianRow) {
    const Grid2D g(9);
    const auto op = assemble(g, CoefficientField::identity(g));
    const int node = g.index(4, 4);
    const double s = 1 / (g.h() * g.h());
    EXPECT_DOUBLE_EQ(entry(op, node, 0, 0), 4 * s);
    EXPECT_DOUBLE_EQ(entry(op, node, 1, 0), -s);
    EXPECT_DOUBLE_EQ(entry(op, node, -1, 0), -s);
    EXPECT_DOUBLE_EQ(entry(op, node, 0, 1), -s);
    EXPECT_DOUBLE_EQ(entry(op, node, 0, -1), -s);
    EXPECT_DOUBLE_EQ(entry(op, node, 1, 1), 0);
    EXPECT_EQ(op.interior().nonZeros(), 5 * 49 - 4 * 7);
}

TEST(Assemble, ScalingTheCoefficientScalesTheStencil) {
    const Grid2D g(9);
    const auto one = assemble(g, CoefficientField::identity(g));
    const auto two = assemble(g, CoefficientField::scalar(g, constant(g, 2), constant(g, 0)));
    EXPECT_EQ((Eigen::MatrixXd(two.interior()) - 2 * Eigen::MatrixXd(one.interior())).cwiseAbs().maxCoeff(), 0);
    EXPECT_EQ((Eigen::MatrixXd(two.coupling()) - 2 * Eigen::MatrixXd(one.coupling())).cwiseAbs().maxCoeff(), 0);
}

TEST(Assemble, RejectsDegenerateDiffusion) {
    const Grid2D g(9);
    Field a = constant(g, 1);
    a[g.index(3, 5)] = 0;
    try {
        CoefficientField::scalar(g, a, constant(g, 0));
        FAIL() << "expected an ellipticity error";
    } catch (const std::invalid_argument& err) {
        EXPECT_NE(std::string(err.what()).find("(3,5)"), std::string::npos) << err.what();
    }
    // Matrix field with a zero eigenvalue at one node.
    Field a12 = constant(g, 0);
    a12[g.index(2, 2)] = 1;
    EXPECT_THROW(CoefficientField::matrix(g, constant(g, 1), a12, constant(g, 1), constant(g, 0)),
                 std::invalid_argument);
}

TEST(Assemble, ExplicitBoundIsChecked) {
    const Grid2D g(9);
    EXPECT_THROW(CoefficientField::scalar(g, constant(g, 3), constant(g, 0), 2.0), std::invalid_argument);
    EXPECT_THROW(CoefficientField::scalar(g, constant(g, 1), constant(g, -5), 2.0), std::invalid_argument);
    EXPECT_NO_THROW(CoefficientField::scalar(g, constant(g, 0.5), constant(g, 2), 2.0));
    EXPECT_DOUBLE_EQ(CoefficientField::scalar(g, constant(g, 0.25), constant(g, 0)).lambda_bound, 4);
}

TEST(Assemble, NinePointOperatorIsSymmetric) {
    const Grid2D g(17);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    Field a11(g.num_nodes()), a12(g.num_nodes()), a22(g.num_nodes()), q(g.num_nodes());
    for (int k = 0; k < g.num_nodes(); ++k) {
        a11[k] = 1 + u(rng);
        a22[k] = 1 + u(rng);
        a12[k] = 0.5 * (u(rng) - 0.5);
        q[k] = u(rng);
    }
    const auto op = assemble(g, CoefficientField::matrix(g, a11, a12, a22, q));
    const Eigen::MatrixXd A(op.interior());
    EXPECT_EQ((A - A.transpose()).cwiseAbs().maxCoeff(), 0);
    for (int r = 0; r < A.rows(); ++r) EXPECT_LE((A.row(r).array() != 0).count(), 9);
}

TEST(SolveDirichlet, QuadraticHarmonicIsReproduced) {
    const Grid2D g(65);
    const auto op = assemble(g, CoefficientField::identity(g));
    auto exact = [](const Point& p) { return p.x() * p.x() - p.y() * p.y(); };
    const Field u = solve_dirichlet(op, sample_boundary(g, exact));
    EXPECT_LE((u - sample_field(g, exact)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(SolveDirichlet, ZeroDataGivesZero) {
    const Grid2D g(33);
    const auto op = assemble(g, CoefficientField::identity(g));
    const Field u = solve_dirichlet(op, BoundaryValues::Zero(g.num_boundary()));
    EXPECT_EQ(u.cwiseAbs().maxCoeff(), 0);
}

TEST(SolveDirichlet, AbsorptionKeepsSolutionBelowBoundaryValue) {
    const Grid2D g(33);
    const auto op = assemble(g, CoefficientField::scalar(g, constant(g, 1), constant(g, 1)));
    const Field u = solve_dirichlet(op, BoundaryValues::Ones(g.num_boundary()));
    for (int node : g.interior_nodes()) {
        EXPECT_GT(u[node], 0);
        EXPECT_LE(u[node], 1);
    }
}

TEST(SolveDirichlet, ResidualMeetsTolerance) {
    const Grid2D g(33);
    const auto op = assemble(g, CoefficientField::identity(g));
    SolveStats stats;
    solve_dirichlet(op, sample_boundary(g, [](const Point& p) { return std::sin(3 * p.x()) + p.y(); }), &stats);
    EXPECT_LE(stats.residual, 1e-10);
    EXPECT_GT(stats.iterations, 0);
    EXPECT_LE(stats.iterations, 20 * 33);
}

TEST(SolveDirichlet, NonConvergenceCarriesResidual) {
    const Grid2D g(33);
    const auto op = assemble(g, CoefficientField::identity(g), SolverOptions{1e-10, 3});
    try {
        solve_dirichlet(op, sample_boundary(g, [](const Point& p) { return std::sin(5 * p.x()); }));
        FAIL() << "expected SolverError";
    } catch (const SolverError& err) {
        EXPECT_GT(err.residual(), 1e-10);
        EXPECT_EQ(err.iterations(), 3);
    }
}

TEST(SolveDirichlet, NearEigenvaluePotentialIsDetected) {
    const Grid2D g(33);
    // Smallest Dirichlet eigenvalue of the 5-point Laplacian.
    const double lambda_h = 2 * 4 / (g.h() * g.h()) * std::pow(std::sin(pi * g.h() / 2), 2);
    const auto op = assemble(g, CoefficientField::scalar(g, constant(g, 1), constant(g, -lambda_h)));
    EXPECT_FALSE(op.coercive());
    EXPECT_GT(op.condition_estimate(), 1e12);
    EXPECT_THROW(solve_dirichlet(op, BoundaryValues::Ones(g.num_boundary())), SolverError);
}

TEST(SolveDirichlet, NegativePotentialAwayFromSpectrumUsesDirectPath) {
    const Grid2D g(33);
    const auto op = assemble(g, CoefficientField::scalar(g, constant(g, 1), constant(g, -5)));
    SolveStats stats;
    const Field u = solve_dirichlet(op, BoundaryValues::Ones(g.num_boundary()), &stats);
    EXPECT_TRUE(stats.direct);
    EXPECT_LE(stats.residual, 1e-10);
    EXPECT_TRUE(u.allFinite());
    EXPECT_LT(op.condition_estimate(), 1e6);
}

TEST(SolveDirichlet, RejectsNonFiniteData) {
    const Grid2D g(9);
    const auto op = assemble(g, CoefficientField::identity(g));
    BoundaryValues bad = BoundaryValues::Zero(g.num_boundary());
    bad[3] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(solve_dirichlet(op, bad), std::invalid_argument);
    EXPECT_THROW(solve_dirichlet(op, BoundaryValues::Zero(5)), std::invalid_argument);
}

TEST(SolveDirichlet, SecondOrderConvergence) {
    auto exact = [](const Point& p) { return std::sin(pi * p.x()) * std::sinh(pi * p.y()) / std::sinh(pi); };
    auto error = [&](int n) {
        const Grid2D g(n);
        const auto op = assemble(g, CoefficientField::identity(g));
        return (solve_dirichlet(op, sample_boundary(g, exact)) - sample_field(g, exact)).cwiseAbs().maxCoeff();
    };
    const double e17 = error(17), e33 = error(33), e65 = error(65);
    EXPECT_GE(e17 / e33, 3.5);
    EXPECT_LE(e17 / e33, 4.5);
    EXPECT_GE(e33 / e65, 3.5);
    EXPECT_LE(e33 / e65, 4.5);
}

TEST(SolveDirichlet, DiscreteMaximumPrinciple) {
    const Grid2D g(33);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 5; ++trial) {
        Field a(g.num_nodes()), q(g.num_nodes());
        for (int k = 0; k < g.num_nodes(); ++k) {
            a[k] = 0.2 + 3 * u(rng);
            q[k] = trial == 0 ? 0.0 : 2 * u(rng);
        }
        BoundaryValues bc(g.num_boundary());
        for (int k = 0; k < g.num_boundary(); ++k) bc[k] = trial == 0 ? u(rng) - 0.5 : u(rng);
        const auto op = assemble(g, CoefficientField::scalar(g, a, q));
        const Field sol = solve_dirichlet(op, bc);
        const double tol = 1e-9;
        if (trial == 0) {
            EXPECT_LE(sol.maxCoeff(), bc.maxCoeff() + tol);
            EXPECT_GE(sol.minCoeff(), bc.minCoeff() - tol);
        } else {
            // With q >= 0 and non-negative data, 0 <= u <= max g.
            EXPECT_LE(sol.maxCoeff(), bc.maxCoeff() + tol);
            EXPECT_GE(sol.minCoeff(), -tol);
        }
    }
}

TEST(SolveDirichlet, Superposition) {
    const Grid2D g(33);
    Field a = sample_field(g, [](const Point& p) { return 1 + p.x() * p.y(); });
    const auto op = assemble(g, CoefficientField::scalar(g, a, constant(g, 0.5)));
    const auto g1 = sample_boundary(g, [](const Point& p) { return std::cos(4 * p.x()) * p.y(); });
    const auto g2 = sample_boundary(g, [](const Point& p) { return p.x() - 2 * p.y() * p.y(); });
    const double alpha = 1.7, beta = -0.3;
    const Field lhs = solve_dirichlet(op, alpha * g1 + beta * g2);
    const Field rhs = alpha * solve_dirichlet(op, g1) + beta * solve_dirichlet(op, g2);
    EXPECT_LE((lhs - rhs).norm() / rhs.norm(), 1e-8);
}

TEST(SolveDirichlet, AnisotropicConstantCoefficientReproducesAffineFields) {
    // Affine functions solve div(A grad u) = 0 for constant A; the 9-point scheme is exact on them.
    const Grid2D g(17);
    const auto op = assemble(g, CoefficientField::matrix(g, constant(g, 2), constant(g, 0.7), constant(g, 1),
                                                         constant(g, 0)));
    auto exact = [](const Point& p) { return 0.3 + 2 * p.x() - p.y(); };
    EXPECT_LE((solve_dirichlet(op, sample_boundary(g, exact)) - sample_field(g, exact)).cwiseAbs().maxCoeff(), 1e-9);
    // x*y: -div(A grad xy) = -2 a12.
    auto xy = [](const Point& p) { return p.x() * p.y(); };
    Field source = Field::Constant(g.num_nodes(), -2 * 0.7);
    EXPECT_LE((op.solve(sample_boundary(g, xy), source) - sample_field(g, xy)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(SolvePoisson, HarmonicAndQuadraticRightHandSides) {
    const Grid2D g(65);
    auto harm = [](const Point& p) { return p.x() * p.x() - p.y() * p.y(); };
    const Field u0 = solve_poisson(g, Field::Zero(g.num_nodes()), sample_boundary(g, harm));
    EXPECT_LE((u0 - sample_field(g, harm)).cwiseAbs().maxCoeff(), 1e-9);

    auto quad = [](const Point& p) { return p.x() * p.x() + p.y() * p.y(); };
    const Field u1 = solve_poisson(g, constant(g, 4), sample_boundary(g, quad));
    EXPECT_LE((u1 - sample_field(g, quad)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(SolvePoisson, RejectsNaN) {
    const Grid2D g(17);
    Field rhs = Field::Zero(g.num_nodes());
    rhs[g.index(5, 5)] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(solve_poisson(g, rhs, BoundaryValues::Zero(g.num_boundary())), std::invalid_argument);
}

TEST(Gradient, ExactOnLinearAndQuadraticFields) {
    const Grid2D g(17);
    const GradientField gx = gradient(g, sample_field(g, [](const Point& p) { return p.x(); }));
    EXPECT_LE((gx.col(0).array() - 1).abs().maxCoeff(), 1e-12);
    EXPECT_LE(gx.col(1).cwiseAbs().maxCoeff(), 1e-12);

    EXPECT_EQ(gradient(g, constant(g, 3.5)).cwiseAbs().maxCoeff(), 0);

    const Field sq = sample_field(g, [](const Point& p) { return p.x() * p.x(); });
    const GradientField gs = gradient(g, sq);
    for (int node = 0; node < g.num_nodes(); ++node) {
        EXPECT_NEAR(gs(node, 0), 2 * g.point(node).x(), 1e-12);
    }
}

TEST(Laplacian, PolynomialValues) {
    const Grid2D g(17);
    const Field l1 = laplacian(g, sample_field(g, [](const Point& p) { return p.x() * p.x() + p.y() * p.y(); }));
    const Field l2 = laplacian(g, sample_field(g, [](const Point& p) { return p.x() * p.x() - p.y() * p.y(); }));
    const Field l3 = laplacian(g, sample_field(g, [](const Point& p) { return p.x(); }));
    for (int node : g.interior_nodes()) {
        EXPECT_NEAR(l1[node], 4, 1e-9);
        EXPECT_NEAR(l2[node], 0, 1e-9);
        EXPECT_NEAR(l3[node], 0, 1e-9);
    }
    EXPECT_TRUE(std::isnan(l1[g.index(0, 3)]));
}

TEST(Norms, ConstantsZerosAndLinear) {
    const Grid2D g(65);
    const auto full = full_mask(g);
    const Norms one = norms(g, constant(g, 1), full);
    // Node quadrature over n^2 nodes: (n h)^2 = (65/64)^2.
    EXPECT_NEAR(one.l2, 65.0 / 64, 1e-12);
    EXPECT_NEAR(one.h1, one.l2, 1e-12);
    EXPECT_EQ(one.linf, 1);

    const Norms zero = norms(g, constant(g, 0), full);
    EXPECT_EQ(zero.l2, 0);
    EXPECT_EQ(zero.h1, 0);
    EXPECT_EQ(zero.linf, 0);

    // int_0^1 x^2 dx = 1/3; node quadrature error is O(h) and halves under refinement.
    auto err = [](int n) {
        const Grid2D gg(n);
        const Norms nx = norms(gg, sample_field(gg, [](const Point& p) { return p.x(); }), full_mask(gg));
        return std::abs(nx.l2 * nx.l2 - 1.0 / 3);
    };
    EXPECT_LE(err(65), 2.0 / 64);
    EXPECT_NEAR(err(33) / err(65), 2, 0.1);

    EXPECT_THROW(norms(g, constant(g, 1), SubdomainMask{}), std::invalid_argument);
}

TEST(Performance, SingleSolveAtDefaultResolution) {
    const auto start = std::chrono::steady_clock::now();
    const Grid2D g(65);
    const auto op = assemble(g, CoefficientField::identity(g));
    solve_dirichlet(op, sample_boundary(g, [](const Point& p) { return std::sin(pi * p.x()); }));
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 2.0);
}

} // namespace
} // namespace randbc
