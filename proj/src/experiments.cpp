#include "randbc/experiments.hpp"

#include "randbc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace randbc {

Experiment::Experiment(const Grid2D& grid, const CoefficientField& coeff, RandomBoundaryModel model,
                       SubdomainMask mask, SolverOptions options, int threads)
    : op_(assemble(grid, coeff, options)),
      dict_(build_dictionary(op_, model, threads)),
      mask_(std::move(mask)) {
    if (mask_.empty()) throw std::invalid_argument("Experiment: empty subdomain mask");
    if (static_cast<int>(mask_.member.size()) != grid.num_nodes()) {
        throw std::invalid_argument("Experiment: mask does not belong to the grid");
    }
}

Field Experiment::solve(const BoundaryFunction& bf, SolveMode mode) const {
    if (mode == SolveMode::spectral) return dict_.synthesize(bf);
    return solve_dirichlet(op_, evaluate(bf, grid()));
}

namespace {

TrialOutcome aggregate(const Experiment& exp, const ConstraintMap& map, int N,
                       const std::function<Field(int, int)>& solution, double reference_tau) {
    if (N < 1) throw std::invalid_argument("run_trial: N must be >= 1");
    std::vector<ConstraintField> fields;
    fields.reserve(static_cast<std::size_t>(N));
    std::vector<Field> tuple(static_cast<std::size_t>(map.arity()));
    for (int l = 0; l < N; ++l) {
        for (int i = 0; i < map.arity(); ++i) tuple[static_cast<std::size_t>(i)] = solution(l, i);
        fields.push_back(zeta_eval(map, tuple, exp.grid(), exp.mask()));
    }
    TrialOutcome out;
    out.max = max_abs(fields);
    out.min_max = out.max.global_min;
    out.labels = extract_cover(fields, reference_tau);
    return out;
}

std::vector<BoundaryFunction> draw(const Experiment& exp, int count, std::uint64_t seed) {
    Rng rng = derive_stream(seed, 0);
    std::vector<BoundaryFunction> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int c = 0; c < count; ++c) out.push_back(sample(exp.model(), rng));
    return out;
}

} // namespace

TrialOutcome run_trial(const Experiment& exp, const ConstraintMap& map, int N, std::uint64_t trial_seed,
                       double reference_tau, SolveMode mode) {
    if (N < 1) throw std::invalid_argument("run_trial: N must be >= 1");
    const auto samples = draw(exp, N * map.arity(), trial_seed);
    return aggregate(
        exp, map, N,
        [&](int l, int i) { return exp.solve(samples[static_cast<std::size_t>(l * map.arity() + i)], mode); },
        reference_tau);
}

TrialOutcome run_trial(const Experiment& exp, const ConstraintMap& map, int N,
                       const BoundaryInjector& inject, double reference_tau) {
    return aggregate(
        exp, map, N, [&](int l, int i) { return solve_dirichlet(exp.op(), inject(l, i)); }, reference_tau);
}

std::vector<double> nested_min_max(const Experiment& exp, const ConstraintMap& map,
                                   std::span<const int> N_values, std::uint64_t trial_seed, SolveMode mode) {
    if (N_values.empty()) return {};
    for (std::size_t i = 0; i < N_values.size(); ++i) {
        if (N_values[i] < 1 || (i > 0 && N_values[i] <= N_values[i - 1])) {
            throw std::invalid_argument("nested_min_max: N values must be positive and increasing");
        }
    }
    const int n_max = N_values.back();
    const auto samples = draw(exp, n_max * map.arity(), trial_seed);

    std::vector<double> out;
    out.reserve(N_values.size());
    Eigen::VectorXd running = Eigen::VectorXd::Zero(exp.mask().size());
    std::vector<Field> tuple(static_cast<std::size_t>(map.arity()));
    std::size_t next = 0;
    for (int l = 0; l < n_max; ++l) {
        for (int i = 0; i < map.arity(); ++i) {
            tuple[static_cast<std::size_t>(i)] = exp.solve(samples[static_cast<std::size_t>(l * map.arity() + i)], mode);
        }
        running = running.cwiseMax(zeta_eval(map, tuple, exp.grid(), exp.mask()).values.cwiseAbs());
        if (l + 1 == N_values[next]) {
            out.push_back(running.minCoeff());
            ++next;
        }
    }
    return out;
}

WilsonInterval wilson_interval(int successes, int trials, double z) {
    if (trials <= 0) return {0, 1};
    const double n = trials;
    const double p = successes / n;
    const double z2 = z * z;
    const double denom = 1 + z2 / n;
    const double center = (p + z2 / (2 * n)) / denom;
    const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

double calibrate_tau(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("calibrate_tau: no values");
    std::sort(values.begin(), values.end());
    const auto idx = static_cast<std::size_t>(std::floor(0.05 * static_cast<double>(values.size())));
    return values[std::min(idx, values.size() - 1)];
}

SuccessCurve success_curve(const Experiment& exp, const ConstraintMap& map, std::span<const int> N_values,
                           int M, double tau, std::uint64_t master_seed, int threads) {
    if (M < 50) throw std::invalid_argument("success_curve: M must be >= 50, got " + std::to_string(M));
    if (N_values.empty()) throw std::invalid_argument("success_curve: empty N list");

    SuccessCurve curve;
    curve.min_max.resize(static_cast<std::size_t>(M));
    parallel_for(static_cast<std::size_t>(M), threads, [&](std::size_t m) {
        curve.min_max[m] = nested_min_max(exp, map, N_values, trial_seed(master_seed, m));
    });

    if (std::isnan(tau)) {
        std::vector<double> last;
        last.reserve(curve.min_max.size());
        for (const auto& row : curve.min_max) last.push_back(row.back());
        tau = calibrate_tau(std::move(last));
    }
    curve.tau = tau;
    for (std::size_t j = 0; j < N_values.size(); ++j) {
        SuccessRow row;
        row.N = N_values[j];
        row.M = M;
        for (const auto& trial : curve.min_max) row.successes += trial[j] >= tau ? 1 : 0;
        row.rate = static_cast<double>(row.successes) / M;
        row.ci = wilson_interval(row.successes, M);
        curve.rows.push_back(row);
    }
    return curve;
}

namespace {

SubdomainMask probe_mask(const Grid2D& grid, std::span<const Point> points, std::vector<int>& slot) {
    SubdomainMask mask;
    mask.member.assign(static_cast<std::size_t>(grid.num_nodes()), 0);
    std::vector<int> node_of;
    for (const Point& p : points) {
        const int node = grid.nearest_node(p);
        if (grid.on_boundary(node)) throw std::invalid_argument("probe point snaps to a boundary node");
        node_of.push_back(node);
        mask.member[static_cast<std::size_t>(node)] = 1;
    }
    for (int node = 0; node < grid.num_nodes(); ++node) {
        if (mask.member[static_cast<std::size_t>(node)]) mask.nodes.push_back(node);
    }
    slot.clear();
    for (int node : node_of) {
        slot.push_back(static_cast<int>(std::lower_bound(mask.nodes.begin(), mask.nodes.end(), node) -
                                        mask.nodes.begin()));
    }
    return mask;
}

} // namespace

std::vector<VarianceRow> variance_identity_check(const Experiment& exp, const ConstraintMap& map,
                                                 std::span<const Point> points, int M,
                                                 std::uint64_t master_seed, int threads) {
    const int arity = map.arity();
    const Dictionary& dict = exp.dictionary();
    const int K = dict.size();
    if (arity > 2) throw std::invalid_argument("variance_identity_check: maps of arity > 2 are not supported");
    if (arity == 2 && K > 8) {
        throw std::invalid_argument("variance_identity_check: arity-2 series requires K <= 8");
    }
    if (M < 2) throw std::invalid_argument("variance_identity_check: M must be >= 2");

    const Grid2D& grid = exp.grid();
    std::vector<int> slot;
    const SubdomainMask probes = probe_mask(grid, points, slot);

    // zeta of dictionary tuples at the probe nodes.
    std::vector<Field> members;
    std::vector<GradientField> grads;
    for (int k = 1; k <= K; ++k) {
        members.push_back(dict.member(k));
        grads.push_back(gradient(grid, members.back()));
    }
    Eigen::VectorXd series = Eigen::VectorXd::Zero(probes.size());
    const Eigen::VectorXd& sigma = dict.model.sigmas();
    if (arity == 1) {
        for (int k = 0; k < K; ++k) {
            const auto z = zeta_eval(map, std::span(&members[static_cast<std::size_t>(k)], 1),
                                     std::span(&grads[static_cast<std::size_t>(k)], 1), probes);
            series += sigma[k] * sigma[k] * z.values.cwiseAbs2();
        }
    } else {
        for (int k1 = 0; k1 < K; ++k1) {
            for (int k2 = 0; k2 < K; ++k2) {
                const std::vector<Field> f{members[static_cast<std::size_t>(k1)], members[static_cast<std::size_t>(k2)]};
                const std::vector<GradientField> g{grads[static_cast<std::size_t>(k1)], grads[static_cast<std::size_t>(k2)]};
                const auto z = zeta_eval(map, f, g, probes);
                series += sigma[k1] * sigma[k1] * sigma[k2] * sigma[k2] * z.values.cwiseAbs2();
            }
        }
    }

    Eigen::MatrixXd squares(M, probes.size());
    parallel_for(static_cast<std::size_t>(M), threads, [&](std::size_t m) {
        Rng rng = derive_stream(master_seed, m);
        std::vector<Field> tuple;
        for (int i = 0; i < arity; ++i) tuple.push_back(dict.synthesize(sample(dict.model, rng)));
        const auto z = zeta_eval(map, tuple, grid, probes);
        squares.row(static_cast<Eigen::Index>(m)) = z.values.cwiseAbs2().transpose();
    });

    std::vector<VarianceRow> rows;
    for (std::size_t p = 0; p < points.size(); ++p) {
        const Eigen::Index col = slot[p];
        const Eigen::VectorXd x = squares.col(col);
        const double mean = x.mean();
        const double var = (x.array() - mean).square().sum() / (M - 1);
        const double stderr_ = std::sqrt(var / M);
        VarianceRow row;
        row.x = grid.point(probes.nodes[static_cast<std::size_t>(col)]);
        row.mc = mean;
        row.series = series[col];
        const double diff = row.mc - row.series;
        if (stderr_ > 0) {
            row.z = diff / stderr_;
        } else {
            row.z = std::abs(diff) <= 1e-14 * std::max(1.0, std::abs(row.series))
                        ? 0.0
                        : std::copysign(std::numeric_limits<double>::infinity(), diff);
        }
        rows.push_back(row);
    }
    return rows;
}

TailReport tail_check(const RandomBoundaryModel& model, int M, std::span<const double> t_grid,
                      std::uint64_t master_seed) {
    if (M < 1000) throw std::invalid_argument("tail_check: M must be >= 1000, got " + std::to_string(M));
    std::vector<double> values(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) {
        Rng rng = derive_stream(master_seed, static_cast<std::uint64_t>(m));
        values[static_cast<std::size_t>(m)] = surrogate_h12_norm(sample(model, rng));
    }
    std::sort(values.begin(), values.end());

    std::vector<double> ts(t_grid.begin(), t_grid.end());
    if (ts.empty()) {
        const int count = 40;
        for (int i = 0; i < count; ++i) ts.push_back(values.back() * i / (count - 1));
    }

    TailReport report;
    report.c1 = std::numeric_limits<double>::infinity();
    for (double t : ts) {
        const auto above = values.end() - std::lower_bound(values.begin(), values.end(), t);
        const double survival = static_cast<double>(above) / M;
        report.rows.push_back({t, survival, 0});
        if (t > 0 && survival > 0) report.c1 = std::min(report.c1, std::log(2 / survival) / (t * t));
    }
    report.dominated = report.c1 > 0;
    for (auto& row : report.rows) {
        row.bound = std::isinf(report.c1) ? (row.t == 0 ? 2.0 : 0.0) : 2 * std::exp(-report.c1 * row.t * row.t);
        if (row.survival > row.bound * (1 + 1e-12)) report.dominated = false;
    }
    return report;
}

ConcentrationReport concentration_check(const Experiment& exp, const ConstraintMap& map, const Point& x,
                                        std::span<const int> N_values, int M,
                                        std::span<const double> t_values, std::uint64_t master_seed,
                                        int threads) {
    if (map.arity() != 1) throw std::invalid_argument("concentration_check: arity-1 maps only");
    if (M < 2) throw std::invalid_argument("concentration_check: M must be >= 2");
    for (std::size_t i = 0; i < N_values.size(); ++i) {
        if (N_values[i] < 1 || (i > 0 && N_values[i] <= N_values[i - 1])) {
            throw std::invalid_argument("concentration_check: N values must be positive and increasing");
        }
    }
    const Grid2D& grid = exp.grid();
    const Dictionary& dict = exp.dictionary();
    std::vector<int> slot;
    const Point probe[1] = {x};
    const SubdomainMask mask = probe_mask(grid, probe, slot);

    // zeta(u)(x) = sum_k a_k zeta(z_k)(x) by linearity.
    Eigen::VectorXd response(dict.size());
    for (int k = 1; k <= dict.size(); ++k) {
        const Field member = dict.member(k);
        response[k - 1] = zeta_eval(map, std::span(&member, 1), grid, mask).values[0];
    }

    ConcentrationReport report;
    report.mean = response.cwiseProduct(dict.model.sigmas()).squaredNorm();
    if (N_values.empty()) return report;

    const int n_max = N_values.back();
    // deviation[m][j]: |mean of the first N_j draws of repetition m - mu|
    std::vector<std::vector<double>> deviation(static_cast<std::size_t>(M));
    parallel_for(static_cast<std::size_t>(M), threads, [&](std::size_t m) {
        Rng rng = derive_stream(master_seed, m);
        double sum = 0;
        std::size_t next = 0;
        auto& dev = deviation[m];
        for (int l = 1; l <= n_max; ++l) {
            const double zeta = response.dot(sample(dict.model, rng).coeffs);
            sum += zeta * zeta;
            if (l == N_values[next]) {
                dev.push_back(std::abs(sum / l - report.mean));
                ++next;
            }
        }
    });

    report.C = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < N_values.size(); ++j) {
        std::vector<double> dev;
        dev.reserve(static_cast<std::size_t>(M));
        for (const auto& d : deviation) dev.push_back(d[j]);
        std::sort(dev.begin(), dev.end());
        report.quantile90.push_back(dev[static_cast<std::size_t>(std::floor(0.9 * (M - 1)))]);
        const double N = N_values[j];
        for (double t : t_values) {
            const auto above = dev.end() - std::lower_bound(dev.begin(), dev.end(), t);
            const double p = static_cast<double>(above) / M;
            report.rows.push_back({N_values[j], t, p, 0});
            const double shape = std::min(N * t * t, t * N);
            if (t > 0 && p > 0) report.C = std::min(report.C, std::log(2 / p) / shape);
        }
    }
    report.dominated = report.C > 0;
    for (auto& row : report.rows) {
        const double shape = std::min(row.N * row.t * row.t, row.t * row.N);
        row.bound = std::isinf(report.C) ? (shape == 0 ? 2.0 : 0.0) : 2 * std::exp(-report.C * shape);
        if (row.probability > row.bound * (1 + 1e-12)) report.dominated = false;
    }
    return report;
}

} // namespace randbc
