#pragma once

#include "randbc/elliptic.hpp"
#include "randbc/grid.hpp"

#include <Eigen/Core>

#include <span>
#include <string_view>
#include <vector>

namespace randbc {

enum class ConstraintKind { nodal, critical, jacobian, augmented };

ConstraintKind parse_constraint(std::string_view name);
std::string_view to_string(ConstraintKind kind);

/// Pointwise multilinear map of n solutions:
///   nodal      u
///   critical   direction . grad u
///   jacobian   det[grad u1, grad u2]
///   augmented  det[[u1, u2, u3], [grad u1, grad u2, grad u3]]
struct ConstraintMap {
    ConstraintKind kind = ConstraintKind::nodal;
    Point direction{1, 0};

    int arity() const noexcept;
};

/// Values of a constraint map on the nodes of a mask, in `mask.nodes` order.
struct ConstraintField {
    Eigen::VectorXd values;
    const SubdomainMask* mask = nullptr;
};

ConstraintField zeta_eval(const ConstraintMap& map, std::span<const Field> fields, const Grid2D& grid,
                          const SubdomainMask& mask);

/// Same as zeta_eval with precomputed gradients, for callers evaluating many tuples.
ConstraintField zeta_eval(const ConstraintMap& map, std::span<const Field> fields,
                          std::span<const GradientField> gradients, const SubdomainMask& mask);

struct MaxAbs {
    Eigen::VectorXd values;  // max_l |zeta^l| per mask node
    double global_min = 0;   // min over the mask of `values`
};

MaxAbs max_abs(std::span<const ConstraintField> fields);

/// Per-node index (0-based) of the measurement attaining max_l |zeta^l|;
/// ties go to the smallest index.
struct CoverLabeling {
    std::vector<int> label;
    double threshold = 0;
    bool complete = false;
    int uncovered = 0;
};

CoverLabeling extract_cover(std::span<const ConstraintField> fields, double tau);

/// Minimum over the mask of the map applied to its canonical witnesses
/// (1; x1; (x1, x2); (1, x1, x2)).
double witness_check(const ConstraintMap& map, const Grid2D& grid, const SubdomainMask& mask);

/// Discrete C^{0,1/2} seminorm: max over node pairs of |f(x)-f(y)| / |x-y|^{1/2}.
double holder_seminorm(const ConstraintField& field, const Grid2D& grid);

} // namespace randbc
