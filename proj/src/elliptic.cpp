#include "randbc/elliptic.hpp"

#include "randbc/errors.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace randbc {

double min_eigenvalue(double a11, double a12, double a22) {
    const double mean = 0.5 * (a11 + a22);
    const double dev = std::hypot(0.5 * (a11 - a22), a12);
    return mean - dev;
}

namespace {

std::string describe_node(const Grid2D& grid, int node) {
    std::ostringstream out;
    const Point p = grid.point(node);
    out << "node (" << grid.ix(node) << "," << grid.iy(node) << ") at (" << p.x() << ","
        << p.y() << ")";
    return out.str();
}

void check_sizes(const Grid2D& grid, const CoefficientField& c) {
    const Eigen::Index nn = grid.num_nodes();
    if (c.a11.size() != nn || c.a12.size() != nn || c.a22.size() != nn || c.q.size() != nn) {
        throw std::invalid_argument("coefficient field size does not match the grid");
    }
}

/// Smallest Lambda >= 1 with lambda_min(a) >= 1/Lambda, |a_ij| <= Lambda, |q| <= Lambda.
double admissible_bound(const Grid2D& grid, const CoefficientField& c) {
    double bound = 1;
    for (int node = 0; node < grid.num_nodes(); ++node) {
        const double a11 = c.a11[node], a12 = c.a12[node], a22 = c.a22[node], q = c.q[node];
        if (!std::isfinite(a11) || !std::isfinite(a12) || !std::isfinite(a22) || !std::isfinite(q)) {
            throw std::invalid_argument("non-finite coefficient at " + describe_node(grid, node));
        }
        const double lmin = min_eigenvalue(a11, a12, a22);
        if (!(lmin > 0)) {
            throw std::invalid_argument("diffusion coefficient is not elliptic at " +
                                        describe_node(grid, node));
        }
        bound = std::max({bound, 1 / lmin, std::abs(a11), std::abs(a12), std::abs(a22),
                          std::abs(q)});
    }
    return bound;
}

double face(double left, double right) { return 2 * left * right / (left + right); }

} // namespace

CoefficientField CoefficientField::identity(const Grid2D& grid) {
    const Eigen::Index nn = grid.num_nodes();
    return scalar(grid, Field::Ones(nn), Field::Zero(nn), 1);
}

CoefficientField CoefficientField::scalar(const Grid2D& grid, Field a, Field q, double lambda) {
    CoefficientField c;
    c.a11 = a;
    c.a22 = std::move(a);
    c.a12 = Field::Zero(grid.num_nodes());
    c.q = std::move(q);
    c.isotropic = true;
    check_sizes(grid, c);
    c.lambda_bound = lambda > 0 ? lambda : admissible_bound(grid, c);
    validate(grid, c);
    return c;
}

CoefficientField CoefficientField::matrix(const Grid2D& grid, Field a11, Field a12, Field a22,
                                          Field q, double lambda) {
    CoefficientField c;
    c.a11 = std::move(a11);
    c.a12 = std::move(a12);
    c.a22 = std::move(a22);
    c.q = std::move(q);
    c.isotropic = false;
    check_sizes(grid, c);
    c.lambda_bound = lambda > 0 ? lambda : admissible_bound(grid, c);
    validate(grid, c);
    return c;
}

void validate(const Grid2D& grid, const CoefficientField& c) {
    check_sizes(grid, c);
    const double lambda = c.lambda_bound;
    if (!(lambda >= 1)) throw std::invalid_argument("ellipticity bound must be >= 1");
    // Relative slack so that a bound computed from the data always validates.
    const double slack = 1e-12;
    for (int node = 0; node < grid.num_nodes(); ++node) {
        const double a11 = c.a11[node], a12 = c.a12[node], a22 = c.a22[node], q = c.q[node];
        if (!std::isfinite(a11) || !std::isfinite(a12) || !std::isfinite(a22) || !std::isfinite(q)) {
            throw std::invalid_argument("non-finite coefficient at " + describe_node(grid, node));
        }
        const double lmin = min_eigenvalue(a11, a12, a22);
        if (!(lmin > 0) || lmin * lambda < 1 - slack) {
            throw std::invalid_argument("ellipticity violated at " + describe_node(grid, node));
        }
        const double big = std::max({std::abs(a11), std::abs(a12), std::abs(a22)});
        if (big > lambda * (1 + slack) || std::abs(q) > lambda * (1 + slack)) {
            throw std::invalid_argument("coefficient bound exceeded at " + describe_node(grid, node));
        }
    }
}

struct DiscreteOperator::DirectSolver {
    Eigen::SparseLU<Matrix> lu;
};

DiscreteOperator::DiscreteOperator(Grid2D grid, Matrix interior, Matrix coupling, bool coercive,
                                   SolverOptions options)
    : grid_(std::move(grid)),
      interior_(std::move(interior)),
      coupling_(std::move(coupling)),
      coercive_(coercive),
      options_(options) {
    if (options_.maxiter <= 0) options_.maxiter = 20 * grid_.n();
    if (!coercive_) {
        direct_ = std::make_unique<DirectSolver>();
        direct_->lu.analyzePattern(interior_);
        direct_->lu.factorize(interior_);
        if (direct_->lu.info() == Eigen::Success) {
            // Inverse iteration for the smallest singular direction.
            Eigen::VectorXd v = Eigen::VectorXd::Ones(interior_.rows()).normalized();
            double growth = 0;
            for (int it = 0; it < 8; ++it) {
                const Eigen::VectorXd w = direct_->lu.solve(v);
                growth = w.norm();
                if (!std::isfinite(growth) || growth == 0) {
                    growth = std::numeric_limits<double>::infinity();
                    break;
                }
                v = w / growth;
            }
            double norm1 = 0;
            for (Eigen::Index c = 0; c < interior_.outerSize(); ++c) {
                double col = 0;
                for (Matrix::InnerIterator it(interior_, c); it; ++it) col += std::abs(it.value());
                norm1 = std::max(norm1, col);
            }
            condition_ = norm1 * growth;
        } else {
            condition_ = std::numeric_limits<double>::infinity();
        }
    }
}

DiscreteOperator::~DiscreteOperator() = default;
DiscreteOperator::DiscreteOperator(DiscreteOperator&&) noexcept = default;
DiscreteOperator& DiscreteOperator::operator=(DiscreteOperator&&) noexcept = default;

DiscreteOperator assemble(const Grid2D& grid, const CoefficientField& coeff, SolverOptions options) {
    validate(grid, coeff);
    const double inv_h2 = 1 / (grid.h() * grid.h());
    const auto& interior = grid.interior_nodes();

    std::vector<int> boundary_pos(static_cast<std::size_t>(grid.num_nodes()), -1);
    for (std::size_t k = 0; k < grid.boundary_order().size(); ++k) {
        boundary_pos[static_cast<std::size_t>(grid.boundary_order()[k])] = static_cast<int>(k);
    }

    using Triplet = Eigen::Triplet<double>;
    std::vector<Triplet> inner, outer;
    inner.reserve(interior.size() * 9);

    auto add = [&](int row, int node, double value) {
        if (value == 0) return;
        const int col = grid.interior_index(node);
        if (col >= 0) {
            inner.emplace_back(row, col, value);
        } else {
            outer.emplace_back(row, boundary_pos[static_cast<std::size_t>(node)], value);
        }
    };

    for (int row = 0; row < static_cast<int>(interior.size()); ++row) {
        const int node = interior[static_cast<std::size_t>(row)];
        const int i = grid.ix(node), j = grid.iy(node);
        const int e = grid.index(i + 1, j), w = grid.index(i - 1, j);
        const int north = grid.index(i, j + 1), s = grid.index(i, j - 1);

        const double ae = face(coeff.a11[node], coeff.a11[e]) * inv_h2;
        const double aw = face(coeff.a11[node], coeff.a11[w]) * inv_h2;
        const double an = face(coeff.a22[node], coeff.a22[north]) * inv_h2;
        const double as = face(coeff.a22[node], coeff.a22[s]) * inv_h2;

        add(row, node, ae + aw + an + as + coeff.q[node]);
        add(row, e, -ae);
        add(row, w, -aw);
        add(row, north, -an);
        add(row, s, -as);

        if (!coeff.isotropic) {
            // -d/dx(a12 du/dy) - d/dy(a12 du/dx), centered mixed differences.
            const double c = 0.25 * inv_h2;
            const double ane = (coeff.a12[e] + coeff.a12[north]) * c;
            const double asw = (coeff.a12[w] + coeff.a12[s]) * c;
            const double ase = (coeff.a12[e] + coeff.a12[s]) * c;
            const double anw = (coeff.a12[w] + coeff.a12[north]) * c;
            add(row, grid.index(i + 1, j + 1), -ane);
            add(row, grid.index(i - 1, j - 1), -asw);
            add(row, grid.index(i + 1, j - 1), ase);
            add(row, grid.index(i - 1, j + 1), anw);
        }
    }

    const auto ni = static_cast<Eigen::Index>(interior.size());
    DiscreteOperator::Matrix a(ni, ni), b(ni, grid.num_boundary());
    a.setFromTriplets(inner.begin(), inner.end());
    b.setFromTriplets(outer.begin(), outer.end());
    a.makeCompressed();
    b.makeCompressed();

    const bool coercive = coeff.q.minCoeff() >= 0;
    return DiscreteOperator(grid, std::move(a), std::move(b), coercive, options);
}

Field DiscreteOperator::solve(const BoundaryValues& g, const Field& source, SolveStats* stats) const {
    if (g.size() != grid_.num_boundary()) {
        throw std::invalid_argument("boundary data size does not match the grid");
    }
    if (!g.allFinite()) throw std::invalid_argument("boundary data contains non-finite values");
    if (source.size() != 0 && source.size() != grid_.num_nodes()) {
        throw std::invalid_argument("source field size does not match the grid");
    }
    if (source.size() != 0 && !source.allFinite()) {
        throw std::invalid_argument("source field contains non-finite values");
    }

    const auto& interior = grid_.interior_nodes();
    Eigen::VectorXd rhs = -(coupling_ * g);
    if (source.size() != 0) {
        for (std::size_t r = 0; r < interior.size(); ++r) {
            rhs[static_cast<Eigen::Index>(r)] += source[interior[r]];
        }
    }

    Field u = Field::Zero(grid_.num_nodes());
    for (std::size_t k = 0; k < grid_.boundary_order().size(); ++k) {
        u[grid_.boundary_order()[k]] = g[static_cast<Eigen::Index>(k)];
    }

    SolveStats local;
    const double rhs_inf = rhs.lpNorm<Eigen::Infinity>();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(rhs.size());
    if (rhs_inf > 0) {
        const double target = options_.rtol * rhs_inf;
        if (coercive_) {
            Eigen::ConjugateGradient<Matrix, Eigen::Lower | Eigen::Upper,
                                     Eigen::DiagonalPreconditioner<double>>
                cg;
            cg.compute(interior_);
            // ||r||_2 <= rtol ||b||_inf implies the infinity-norm criterion.
            cg.setTolerance(std::max(target / rhs.norm(), 1e-15));
            int used = 0;
            while (used < options_.maxiter) {
                cg.setMaxIterations(options_.maxiter - used);
                x = cg.solveWithGuess(rhs, x);
                used += static_cast<int>(cg.iterations());
                if ((interior_ * x - rhs).lpNorm<Eigen::Infinity>() <= target) break;
                if (cg.iterations() == 0) break;
            }
            local.iterations = used;
        } else {
            if (direct_->lu.info() != Eigen::Success || !(condition_ <= 1e12)) {
                std::ostringstream msg;
                msg << "operator is numerically singular (condition estimate " << condition_
                    << "): 0 is close to a Dirichlet eigenvalue";
                throw SolverError(msg.str(), std::numeric_limits<double>::infinity(), 0);
            }
            x = direct_->lu.solve(rhs);
            local.direct = true;
        }
        local.residual = (interior_ * x - rhs).lpNorm<Eigen::Infinity>() / rhs_inf;
        if (!x.allFinite() || !(local.residual <= options_.rtol)) {
            std::ostringstream msg;
            msg << "linear solve did not converge: relative residual " << local.residual
                << " after " << local.iterations
                << " iterations (0 may be close to a Dirichlet eigenvalue)";
            throw SolverError(msg.str(), local.residual, local.iterations);
        }
    }
    for (std::size_t r = 0; r < interior.size(); ++r) {
        u[interior[r]] = x[static_cast<Eigen::Index>(r)];
    }
    if (stats) *stats = local;
    return u;
}

Field solve_dirichlet(const DiscreteOperator& op, const BoundaryValues& g, SolveStats* stats) {
    return op.solve(g, Field(), stats);
}

Field solve_poisson(const Grid2D& grid, const Field& rhs, const BoundaryValues& g,
                    SolverOptions options) {
    if (rhs.size() != grid.num_nodes()) throw std::invalid_argument("rhs size does not match the grid");
    // Only interior entries enter the equation.
    for (int node : grid.interior_nodes()) {
        if (!std::isfinite(rhs[node])) throw std::invalid_argument("Poisson rhs contains non-finite values");
    }
    static thread_local std::unique_ptr<DiscreteOperator> cached;
    if (!cached || cached->grid().n() != grid.n() || cached->options().rtol != options.rtol ||
        (options.maxiter > 0 && cached->options().maxiter != options.maxiter)) {
        cached = std::make_unique<DiscreteOperator>(
            assemble(grid, CoefficientField::identity(grid), options));
    }
    // Laplace(u) = H  <=>  -Laplace(u) = -H.
    Field source = Field::Zero(grid.num_nodes());
    for (int node : grid.interior_nodes()) source[node] = -rhs[node];
    return cached->solve(g, source);
}

GradientField gradient(const Grid2D& grid, const Field& f) {
    const int n = grid.n();
    const double inv2h = 0.5 / grid.h();
    GradientField g(grid.num_nodes(), 2);
    auto at = [&](int i, int j) { return f[grid.index(i, j)]; };
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            double dx, dy;
            if (i == 0) {
                dx = (-3 * at(0, j) + 4 * at(1, j) - at(2, j)) * inv2h;
            } else if (i == n - 1) {
                dx = (3 * at(n - 1, j) - 4 * at(n - 2, j) + at(n - 3, j)) * inv2h;
            } else {
                dx = (at(i + 1, j) - at(i - 1, j)) * inv2h;
            }
            if (j == 0) {
                dy = (-3 * at(i, 0) + 4 * at(i, 1) - at(i, 2)) * inv2h;
            } else if (j == n - 1) {
                dy = (3 * at(i, n - 1) - 4 * at(i, n - 2) + at(i, n - 3)) * inv2h;
            } else {
                dy = (at(i, j + 1) - at(i, j - 1)) * inv2h;
            }
            g(grid.index(i, j), 0) = dx;
            g(grid.index(i, j), 1) = dy;
        }
    }
    return g;
}

Field laplacian(const Grid2D& grid, const Field& f) {
    const double inv_h2 = 1 / (grid.h() * grid.h());
    Field out = Field::Constant(grid.num_nodes(), std::numeric_limits<double>::quiet_NaN());
    for (int node : grid.interior_nodes()) {
        const int i = grid.ix(node), j = grid.iy(node);
        out[node] = (f[grid.index(i + 1, j)] + f[grid.index(i - 1, j)] + f[grid.index(i, j + 1)] +
                     f[grid.index(i, j - 1)] - 4 * f[node]) *
                    inv_h2;
    }
    return out;
}

Norms norms(const Grid2D& grid, const Field& f, const SubdomainMask& mask) {
    if (mask.empty()) throw std::invalid_argument("norms: empty mask");
    const GradientField g = gradient(grid, f);
    const double w = grid.h() * grid.h();
    double sum_f = 0, sum_g = 0, linf = 0;
    for (int node : mask.nodes) {
        sum_f += f[node] * f[node];
        sum_g += g.row(node).squaredNorm();
        linf = std::max(linf, std::abs(f[node]));
    }
    Norms out;
    out.l2 = std::sqrt(w * sum_f);
    out.h1 = std::sqrt(w * (sum_f + sum_g));
    out.linf = linf;
    return out;
}

BoundaryValues boundary_trace(const Grid2D& grid, const Field& f) {
    const auto& order = grid.boundary_order();
    BoundaryValues g(static_cast<Eigen::Index>(order.size()));
    for (std::size_t k = 0; k < order.size(); ++k) g[static_cast<Eigen::Index>(k)] = f[order[k]];
    return g;
}

} // namespace randbc
