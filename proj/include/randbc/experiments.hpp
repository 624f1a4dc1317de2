#pragma once

#include "randbc/constraints.hpp"
#include "randbc/elliptic.hpp"
#include "randbc/random_boundary.hpp"
#include "randbc/runge.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace randbc {

/// How trial solutions are produced. `spectral` synthesizes u = sum_k a_k z_k
/// from the dictionary (exact by linearity); `direct` runs one Dirichlet solve
/// per boundary function.
enum class SolveMode { spectral, direct };

/// Shared, immutable state for a batch of Monte-Carlo trials.
class Experiment {
public:
    Experiment(const Grid2D& grid, const CoefficientField& coeff, RandomBoundaryModel model,
               SubdomainMask mask, SolverOptions options = {}, int threads = 1);

    const Grid2D& grid() const noexcept { return op_.grid(); }
    const DiscreteOperator& op() const noexcept { return op_; }
    const Dictionary& dictionary() const noexcept { return dict_; }
    const RandomBoundaryModel& model() const noexcept { return dict_.model; }
    const SubdomainMask& mask() const noexcept { return mask_; }

    Field solve(const BoundaryFunction& bf, SolveMode mode) const;

private:
    DiscreteOperator op_;
    Dictionary dict_;
    SubdomainMask mask_;
};

struct TrialOutcome {
    double min_max = 0;       // min over the mask of max_l |zeta^l|
    MaxAbs max;               // pointwise max over measurements
    CoverLabeling labels;     // at the reference threshold

    bool success_at(double tau) const noexcept { return min_max >= tau; }
};

/// Draws n*N boundary functions from `trial_seed` (measurement-major, so the
/// first N' < N measurements coincide with a trial of size N'), solves and
/// aggregates the N constraint fields.
TrialOutcome run_trial(const Experiment& exp, const ConstraintMap& map, int N, std::uint64_t trial_seed,
                       double reference_tau, SolveMode mode = SolveMode::spectral);

/// Boundary data for (measurement l, argument i), bypassing the random model.
using BoundaryInjector = std::function<BoundaryValues(int measurement, int argument)>;

TrialOutcome run_trial(const Experiment& exp, const ConstraintMap& map, int N,
                       const BoundaryInjector& inject, double reference_tau);

/// min_max for every prefix size in `N_values` from one coupled sample sequence.
std::vector<double> nested_min_max(const Experiment& exp, const ConstraintMap& map,
                                   std::span<const int> N_values, std::uint64_t trial_seed,
                                   SolveMode mode = SolveMode::spectral);

struct WilsonInterval {
    double lo = 0, hi = 1;
};

/// 95% Wilson score interval for `successes` out of `trials`.
WilsonInterval wilson_interval(int successes, int trials, double z = 1.959963984540054);

struct SuccessRow {
    int N = 0;
    int successes = 0;
    int M = 0;
    double rate = 0;
    WilsonInterval ci;
};

struct SuccessCurve {
    double tau = 0;
    std::vector<SuccessRow> rows;
    /// min_max per trial (outer) and N value (inner).
    std::vector<std::vector<double>> min_max;
};

/// Lower 5% empirical quantile of `values` (the order statistic at floor(0.05 M)).
double calibrate_tau(std::vector<double> values);

/// M coupled trials per N. A NaN `tau` is calibrated from the largest N.
/// Trial m uses the stream derived from (master_seed, m).
SuccessCurve success_curve(const Experiment& exp, const ConstraintMap& map, std::span<const int> N_values,
                           int M, double tau, std::uint64_t master_seed, int threads = 1);

struct VarianceRow {
    Point x;
    double mc = 0;
    double series = 0;
    double z = 0;
};

/// Monte-Carlo E[zeta(u)(x)^2] against the dictionary series. Arity-1 maps use
/// sum_k sigma_k^2 zeta(z_k)^2; arity-2 maps (K <= 8) use the double sum.
std::vector<VarianceRow> variance_identity_check(const Experiment& exp, const ConstraintMap& map,
                                                 std::span<const Point> points, int M,
                                                 std::uint64_t master_seed, int threads = 1);

struct TailRow {
    double t = 0;
    double survival = 0;
    double bound = 0;  // 2 exp(-c1 t^2) at the fitted c1
};

struct TailReport {
    double c1 = 0;
    bool dominated = false;
    std::vector<TailRow> rows;
};

/// Empirical survival of surrogate_h12_norm over M samples and the largest c1
/// such that 2 exp(-c1 t^2) dominates it on `t_grid` (40 points up to the
/// sample maximum when empty).
TailReport tail_check(const RandomBoundaryModel& model, int M, std::span<const double> t_grid,
                      std::uint64_t master_seed);

struct ConcentrationRow {
    int N = 0;
    double t = 0;
    double probability = 0;  // P(|mean_N X - mu| >= t)
    double bound = 0;        // 2 exp(-C min(N t^2, (t N)^{1/n}))
};

struct ConcentrationReport {
    double mean = 0;                     // series value of E X
    double C = 0;
    bool dominated = false;
    std::vector<ConcentrationRow> rows;
    std::vector<double> quantile90;      // 90% quantile of |mean_N X - mu| per N
};

/// X_l = zeta(u^l)(x)^2 for an arity-1 map; M repetitions per N.
ConcentrationReport concentration_check(const Experiment& exp, const ConstraintMap& map, const Point& x,
                                        std::span<const int> N_values, int M,
                                        std::span<const double> t_values, std::uint64_t master_seed,
                                        int threads = 1);

} // namespace randbc
