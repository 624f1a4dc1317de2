#include "randbc/runge.hpp"

#include "randbc/errors.hpp"
#include "randbc/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace randbc {

Field Dictionary::synthesize(const BoundaryFunction& bf) const {
    if (bf.coeffs.size() != z.cols()) {
        throw std::invalid_argument("synthesize: truncation order does not match the dictionary");
    }
    return z * bf.coeffs;
}

Dictionary build_dictionary(const DiscreteOperator& op, const RandomBoundaryModel& model, int threads) {
    const Grid2D& grid = op.grid();
    const Eigen::MatrixXd modes = model.basis().sample(grid);
    Dictionary dict{grid, Eigen::MatrixXd(grid.num_nodes(), model.size()), model, 0};
    std::vector<double> residuals(static_cast<std::size_t>(model.size()), 0);
    parallel_for(static_cast<std::size_t>(model.size()), threads, [&](std::size_t k) {
        SolveStats stats;
        const BoundaryValues g = modes.row(static_cast<Eigen::Index>(k)).transpose();
        dict.z.col(static_cast<Eigen::Index>(k)) = solve_dirichlet(op, g, &stats);
        residuals[k] = stats.residual;
    });
    for (double r : residuals) dict.max_residual = std::max(dict.max_residual, r);
    return dict;
}

namespace {

double local_laplace_residual(const Grid2D& grid, const Field& h, const SubdomainMask& disk) {
    const Field lap = laplacian(grid, h);
    const GradientField g = gradient(grid, h);
    double worst = 0, scale = 0;
    for (int node : disk.nodes) {
        worst = std::max(worst, std::abs(lap[node]));
        scale = std::max({scale, std::abs(h[node]), g.row(node).norm()});
    }
    return scale > 0 ? worst / scale : worst;
}

} // namespace

LocalTarget make_target(const Grid2D& grid, const SubdomainMask& disk, const TargetSpec& spec,
                        const Dictionary* dict) {
    if (disk.kind != MaskKind::disk || disk.empty()) {
        throw std::invalid_argument("make_target: target domain must be a non-empty disk");
    }
    LocalTarget target;
    target.disk = disk;
    switch (spec.kind) {
    case TargetKind::dictionary_member: {
        if (!dict) throw std::invalid_argument("make_target: dictionary_member needs a dictionary");
        if (spec.member < 1 || spec.member > dict->size()) {
            throw std::invalid_argument("make_target: dictionary member out of range");
        }
        target.h = dict->member(spec.member);
        target.residual = dict->max_residual;
        break;
    }
    case TargetKind::fundamental_solution: {
        const Point p = spec.pole;
        if (!(p.x() > 0 && p.x() < 1 && p.y() > 0 && p.y() < 1)) {
            throw std::invalid_argument("make_target: pole must lie inside the unit square");
        }
        const double gap = (p - disk.center).norm() - disk.radius;
        if (!(gap > 0)) throw std::invalid_argument("make_target: pole lies inside the closed disk");
        if (gap <= 2 * grid.h()) {
            throw std::invalid_argument("make_target: pole within two mesh widths of the disk");
        }
        target.h = sample_field(grid, [&](const Point& x) {
            const double r = (x - p).norm();
            return r < 0.5 * grid.h() ? 0.0 : -std::log(r) / (2 * std::numbers::pi);
        });
        target.residual = local_laplace_residual(grid, target.h, disk);
        break;
    }
    case TargetKind::harmonic_poly: {
        if (spec.degree < 0 || spec.degree > 4) {
            throw std::invalid_argument("make_target: harmonic polynomial degree must be in 0..4");
        }
        target.h = sample_field(grid, [&](const Point& x) {
            const std::complex<double> z = std::pow(std::complex<double>(x.x(), x.y()), spec.degree);
            return spec.imaginary ? z.imag() : z.real();
        });
        target.residual = local_laplace_residual(grid, target.h, disk);
        break;
    }
    }
    if (spec.kind != TargetKind::dictionary_member && target.residual > 100 * grid.h() * grid.h()) {
        throw DomainError("make_target: local residual " + std::to_string(target.residual) +
                          " exceeds 100 h^2");
    }
    target.h1_norm = norms(grid, target.h, disk).h1;
    if (!(target.h1_norm > 0)) throw std::invalid_argument("make_target: target vanishes on the disk");
    return target;
}

RungeResult approximate(const LocalTarget& target, const Dictionary& dict, double lambda, int modes) {
    if (!(lambda >= 0)) throw std::invalid_argument("approximate: lambda must be >= 0");
    const int K = modes > 0 ? modes : dict.size();
    if (K > dict.size()) throw std::invalid_argument("approximate: more modes than dictionary members");
    if (target.h.size() != dict.z.rows()) {
        throw std::invalid_argument("approximate: target and dictionary live on different grids");
    }

    const auto& nodes = target.disk.nodes;
    const auto m = static_cast<Eigen::Index>(nodes.size());
    Eigen::MatrixXd zd(m, K);
    Eigen::VectorXd hd(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const int node = nodes[static_cast<std::size_t>(r)];
        zd.row(r) = dict.z.row(node).head(K);
        hd[r] = target.h[node];
    }
    const double weight = dict.grid.h() * dict.grid.h();

    const Eigen::MatrixXd gram = weight * zd.transpose() * zd;
    const Eigen::VectorXd rhs = weight * zd.transpose() * hd;
    const Eigen::VectorXd inv_sigma2 = dict.model.sigmas().head(K).array().square().inverse();

    Eigen::MatrixXd system = gram;
    system.diagonal() += lambda * inv_sigma2;

    RungeResult out;
    out.lambda = lambda;
    out.eigen_floor = 1e-14 * gram.trace();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(system);
    const Eigen::VectorXd& values = eig.eigenvalues();
    if (lambda == 0 && values.minCoeff() <= out.eigen_floor) {
        throw DomainError("approximate: Gram matrix is numerically singular at lambda = 0; use lambda > 0");
    }
    Eigen::VectorXd proj = eig.eigenvectors().transpose() * rhs;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (values[i] <= out.eigen_floor) {
            proj[i] = 0;
            ++out.floored_modes;
        } else {
            proj[i] /= values[i];
        }
    }
    out.c = eig.eigenvectors() * proj;

    const Eigen::VectorXd residual = zd * out.c - hd;
    out.eps_achieved = std::sqrt(weight * residual.squaredNorm()) / target.h1_norm;
    out.boundary_cost = std::sqrt(out.c.cwiseAbs2().dot(inv_sigma2)) / target.h1_norm;
    return out;
}

std::vector<RungeResult> tradeoff_curve(const LocalTarget& target, const Dictionary& dict,
                                        std::span<const double> lambdas, int modes) {
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] > 0)) throw std::invalid_argument("tradeoff_curve: lambdas must be positive");
        if (i > 0 && !(lambdas[i] < lambdas[i - 1])) {
            throw std::invalid_argument("tradeoff_curve: lambdas must be sorted descending");
        }
    }
    std::vector<RungeResult> out;
    out.reserve(lambdas.size());
    for (double lambda : lambdas) out.push_back(approximate(target, dict, lambda, modes));
    return out;
}

} // namespace randbc
