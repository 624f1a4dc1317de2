#include "randbc/inverse.hpp"

#include "randbc/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace randbc {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

} // namespace

QpatData qpat_forward(const Grid2D& grid, const Field& mu, const BoundaryValues& bc, SolverOptions options) {
    if (mu.size() != grid.num_nodes()) throw std::invalid_argument("qpat_forward: mu size does not match the grid");
    if (!mu.allFinite()) throw std::invalid_argument("qpat_forward: mu contains non-finite values");
    if (mu.minCoeff() < 0) throw std::invalid_argument("qpat_forward: absorption must be non-negative");
    const auto coeff = CoefficientField::scalar(grid, Field::Ones(grid.num_nodes()), mu);
    const DiscreteOperator op = assemble(grid, coeff, options);
    QpatData data;
    data.u = solve_dirichlet(op, bc);
    data.H = mu.cwiseProduct(data.u);
    data.boundary_u = bc;
    data.mu_true = mu;
    return data;
}

QpatReconstruction qpat_reconstruct(const Grid2D& grid, const QpatData& data, double tau, SolverOptions options) {
    if (!(tau > 0)) throw std::invalid_argument("qpat_reconstruct: tau must be > 0");
    QpatReconstruction out;
    out.u_rec = solve_poisson(grid, data.H, data.boundary_u, options);
    out.mu_hat = Field::Constant(grid.num_nodes(), kMissing);
    out.valid.assign(static_cast<std::size_t>(grid.num_nodes()), 0);
    for (int node = 0; node < grid.num_nodes(); ++node) {
        const double u = out.u_rec[node];
        if (std::abs(u) >= tau && std::isfinite(data.H[node])) {
            out.mu_hat[node] = data.H[node] / u;
            out.valid[static_cast<std::size_t>(node)] = 1;
            ++out.valid_count;
        }
    }
    return out;
}

QpatStitched qpat_reconstruct_multi(const Grid2D& grid, std::span<const QpatData> datasets, double tau,
                                    const SubdomainMask& omega_prime, SolverOptions options) {
    if (!(tau > 0)) throw std::invalid_argument("qpat_reconstruct_multi: tau must be > 0");
    std::vector<Field> u_rec;
    u_rec.reserve(datasets.size());
    for (const auto& d : datasets) u_rec.push_back(solve_poisson(grid, d.H, d.boundary_u, options));

    QpatStitched out;
    out.mu_hat = Field::Constant(grid.num_nodes(), kMissing);
    out.label.assign(static_cast<std::size_t>(grid.num_nodes()), -1);
    out.valid.assign(static_cast<std::size_t>(grid.num_nodes()), 0);
    for (int node = 0; node < grid.num_nodes(); ++node) {
        int best = -1;
        double best_abs = -1;
        for (std::size_t l = 0; l < u_rec.size(); ++l) {
            const double v = std::abs(u_rec[l][node]);
            if (v > best_abs) {
                best_abs = v;
                best = static_cast<int>(l);
            }
        }
        if (best >= 0 && best_abs >= tau && std::isfinite(datasets[static_cast<std::size_t>(best)].H[node])) {
            out.label[static_cast<std::size_t>(node)] = best;
            out.valid[static_cast<std::size_t>(node)] = 1;
            out.mu_hat[node] = datasets[static_cast<std::size_t>(best)].H[node] / u_rec[static_cast<std::size_t>(best)][node];
        }
    }
    out.complete = !omega_prime.empty();
    for (int node : omega_prime.nodes) {
        if (!out.valid[static_cast<std::size_t>(node)]) {
            out.complete = false;
            break;
        }
    }
    return out;
}

ConductivityData conductivity_forward(const Grid2D& grid, const Field& a, std::span<const BoundaryValues> bcs,
                                      SolverOptions options) {
    if (bcs.size() != 2) throw std::invalid_argument("conductivity_forward: exactly two boundary conditions required");
    if (a.size() != grid.num_nodes()) throw std::invalid_argument("conductivity_forward: a size does not match the grid");
    if (!a.allFinite() || !(a.minCoeff() > 0)) {
        throw std::invalid_argument("conductivity_forward: conductivity must be positive and finite");
    }
    const auto coeff = CoefficientField::scalar(grid, a, Field::Zero(grid.num_nodes()));
    const DiscreteOperator op = assemble(grid, coeff, options);
    ConductivityData data;
    for (const auto& g : bcs) data.u.push_back(solve_dirichlet(op, g));
    data.a_true = a;
    return data;
}

ConductivityReconstruction conductivity_reconstruct(const Grid2D& grid, const ConductivityData& data,
                                                    double tau, const Point& anchor,
                                                    const SubdomainMask& omega_prime) {
    if (!(tau > 0)) throw std::invalid_argument("conductivity_reconstruct: tau must be > 0");
    if (data.u.size() != 2) throw std::invalid_argument("conductivity_reconstruct: two fields required");
    if (omega_prime.empty()) throw std::invalid_argument("conductivity_reconstruct: empty subdomain");
    const int anchor_node = grid.nearest_node(anchor);
    if (!omega_prime.contains(anchor_node)) {
        throw std::invalid_argument("conductivity_reconstruct: anchor must lie inside the subdomain");
    }

    const GradientField g1 = gradient(grid, data.u[0]);
    const GradientField g2 = gradient(grid, data.u[1]);
    const Field l1 = laplacian(grid, data.u[0]);
    const Field l2 = laplacian(grid, data.u[1]);

    ConductivityReconstruction out;
    out.grad_log_a = GradientField::Constant(grid.num_nodes(), 2, kMissing);
    std::vector<char> solvable(static_cast<std::size_t>(grid.num_nodes()), 0);
    int covered = 0;
    for (int node : omega_prime.nodes) {
        if (grid.on_boundary(node)) continue;
        Eigen::Matrix2d jt;
        jt << g1(node, 0), g1(node, 1), g2(node, 0), g2(node, 1);
        const double det = jt.determinant();
        if (!(std::abs(det) >= tau)) continue;
        const Eigen::Vector2d rhs(-l1[node], -l2[node]);
        out.grad_log_a.row(node) = jt.inverse() * rhs;
        solvable[static_cast<std::size_t>(node)] = 1;
        ++covered;
    }
    out.coverage = static_cast<double>(covered) / omega_prime.size();
    out.warning = out.coverage < 0.99;
    if (out.warning) out.message = "Jacobian region covers less than 99% of the subdomain";

    out.log_a = Field::Constant(grid.num_nodes(), kMissing);
    out.region.assign(static_cast<std::size_t>(grid.num_nodes()), 0);
    if (!solvable[static_cast<std::size_t>(anchor_node)]) {
        out.warning = true;
        out.message = "Jacobian vanishes at the anchor; no potential recovered";
        return out;
    }

    // Connected component of the anchor in the solvable set.
    std::vector<int> local(static_cast<std::size_t>(grid.num_nodes()), -1);
    std::vector<int> nodes;
    std::deque<int> queue{anchor_node};
    local[static_cast<std::size_t>(anchor_node)] = 0;
    nodes.push_back(anchor_node);
    const int n = grid.n();
    while (!queue.empty()) {
        const int node = queue.front();
        queue.pop_front();
        const int i = grid.ix(node), j = grid.iy(node);
        const int nbr[4][2] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
        for (const auto& ij : nbr) {
            if (ij[0] < 0 || ij[1] < 0 || ij[0] >= n || ij[1] >= n) continue;
            const int m = grid.index(ij[0], ij[1]);
            if (!solvable[static_cast<std::size_t>(m)] || local[static_cast<std::size_t>(m)] >= 0) continue;
            local[static_cast<std::size_t>(m)] = static_cast<int>(nodes.size());
            nodes.push_back(m);
            queue.push_back(m);
        }
    }

    // Edge-wise least squares: (phi_b - phi_a) ~ h (g_a + g_b)/2 . e_ab, phi(anchor) = 0.
    // Unknowns are the component nodes other than the anchor (local index >= 1).
    const auto unknowns = static_cast<Eigen::Index>(nodes.size()) - 1;
    const double h = grid.h();
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(unknowns);
    for (int a : nodes) {
        const int i = grid.ix(a), j = grid.iy(a);
        const int east = i + 1 < n ? grid.index(i + 1, j) : -1;
        const int north = j + 1 < n ? grid.index(i, j + 1) : -1;
        for (int dir = 0; dir < 2; ++dir) {
            const int b = dir == 0 ? east : north;
            if (b < 0 || local[static_cast<std::size_t>(b)] < 0) continue;
            const double target = 0.5 * h * (out.grad_log_a(a, dir) + out.grad_log_a(b, dir));
            const Eigen::Index ia = local[static_cast<std::size_t>(a)] - 1;
            const Eigen::Index ib = local[static_cast<std::size_t>(b)] - 1;
            if (ia >= 0) {
                trip.emplace_back(ia, ia, 1.0);
                rhs[ia] -= target;
            }
            if (ib >= 0) {
                trip.emplace_back(ib, ib, 1.0);
                rhs[ib] += target;
            }
            if (ia >= 0 && ib >= 0) {
                trip.emplace_back(ia, ib, -1.0);
                trip.emplace_back(ib, ia, -1.0);
            }
        }
    }
    out.log_a[anchor_node] = 0;
    out.region[static_cast<std::size_t>(anchor_node)] = 1;
    if (unknowns > 0) {
        Eigen::SparseMatrix<double> lap(unknowns, unknowns);
        lap.setFromTriplets(trip.begin(), trip.end());
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(lap);
        if (ldlt.info() != Eigen::Success) throw DomainError("conductivity_reconstruct: potential solve failed");
        const Eigen::VectorXd phi = ldlt.solve(rhs);
        for (Eigen::Index k = 0; k < unknowns; ++k) {
            const int node = nodes[static_cast<std::size_t>(k + 1)];
            out.log_a[node] = phi[k];
            out.region[static_cast<std::size_t>(node)] = 1;
        }
    }
    return out;
}

double relative_l2(const Field& estimate, const Field& truth, std::span<const int> nodes) {
    double num = 0, den = 0;
    for (int node : nodes) {
        const double d = estimate[node] - truth[node];
        num += d * d;
        den += truth[node] * truth[node];
    }
    if (den == 0) return std::sqrt(num);
    return std::sqrt(num / den);
}

} // namespace randbc
