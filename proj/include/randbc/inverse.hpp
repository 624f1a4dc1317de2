#pragma once

#include "randbc/elliptic.hpp"
#include "randbc/grid.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace randbc {

/// Internal energy H = mu u for -Laplace(u) + mu u = 0, plus the boundary data.
struct QpatData {
    Field H;
    BoundaryValues boundary_u;
    Field u;                       // forward solution, for diagnostics
    std::optional<Field> mu_true;
};

QpatData qpat_forward(const Grid2D& grid, const Field& mu, const BoundaryValues& bc,
                      SolverOptions options = {});

struct QpatReconstruction {
    Field mu_hat;              // NaN where the division is not trusted
    std::vector<char> valid;   // |u_rec| >= tau
    Field u_rec;
    int valid_count = 0;
};

/// u_rec from Laplace(u) = H with the known boundary data, then mu = H / u_rec
/// wherever |u_rec| >= tau.
QpatReconstruction qpat_reconstruct(const Grid2D& grid, const QpatData& data, double tau,
                                    SolverOptions options = {});

struct QpatStitched {
    Field mu_hat;
    std::vector<int> label;    // measurement used per node, -1 where none qualifies
    std::vector<char> valid;
    bool complete = false;     // every node of omega_prime is valid
};

/// Per node, divides with the measurement of largest |u_rec^l|.
QpatStitched qpat_reconstruct_multi(const Grid2D& grid, std::span<const QpatData> datasets, double tau,
                                    const SubdomainMask& omega_prime, SolverOptions options = {});

struct ConductivityData {
    std::vector<Field> u;
    std::optional<Field> a_true;
};

/// Two solves of -div(a grad u) = 0, one per boundary condition.
ConductivityData conductivity_forward(const Grid2D& grid, const Field& a, std::span<const BoundaryValues> bcs,
                                      SolverOptions options = {});

struct ConductivityReconstruction {
    Field log_a;                // anchored so log_a(anchor) = 0; NaN outside `region`
    GradientField grad_log_a;   // NaN where the Jacobian is below threshold
    std::vector<char> region;   // nodes carrying a recovered value
    double coverage = 0;        // fraction of omega_prime with |det| >= tau
    bool warning = false;       // coverage < 0.99
    std::string message;
};

/// Solves [grad u1 grad u2]^T g = -[Lap u1, Lap u2] for g = grad log a where the
/// Jacobian is at least tau, then integrates g by edge-wise least squares over
/// omega_prime (natural boundary conditions) and shifts to vanish at `anchor`.
/// The conductivity is determined up to a multiplicative constant.
ConductivityReconstruction conductivity_reconstruct(const Grid2D& grid, const ConductivityData& data,
                                                    double tau, const Point& anchor,
                                                    const SubdomainMask& omega_prime);

/// sqrt(sum (a-b)^2 / sum b^2) over the selected nodes.
double relative_l2(const Field& estimate, const Field& truth, std::span<const int> nodes);

} // namespace randbc
