#include "randbc/constraints.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace randbc {

ConstraintKind parse_constraint(std::string_view name) {
    if (name == "nodal") return ConstraintKind::nodal;
    if (name == "critical") return ConstraintKind::critical;
    if (name == "jacobian") return ConstraintKind::jacobian;
    if (name == "augmented") return ConstraintKind::augmented;
    throw std::invalid_argument("unknown constraint '" + std::string(name) +
                                "' (expected nodal, critical, jacobian or augmented)");
}

std::string_view to_string(ConstraintKind kind) {
    switch (kind) {
    case ConstraintKind::nodal: return "nodal";
    case ConstraintKind::critical: return "critical";
    case ConstraintKind::jacobian: return "jacobian";
    case ConstraintKind::augmented: return "augmented";
    }
    return "?";
}

int ConstraintMap::arity() const noexcept {
    switch (kind) {
    case ConstraintKind::nodal:
    case ConstraintKind::critical: return 1;
    case ConstraintKind::jacobian: return 2;
    case ConstraintKind::augmented: return 3;
    }
    return 0;
}

namespace {

using Column = std::array<double, 3>;  // (u, d_x u, d_y u)

// Determinant with columns sorted into a canonical order first, so that swapping
// two arguments flips the sign bit-exactly; repeated columns give exactly 0.
double augmented_det(std::array<Column, 3> c) {
    bool odd = false;
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i + 1 < 3; ++i) {
            if (c[i + 1] < c[i]) {
                std::swap(c[i], c[i + 1]);
                odd = !odd;
            }
        }
    }
    if (c[0] == c[1] || c[1] == c[2]) return 0;
    // Cofactor expansion along the value row.
    const double m1 = c[1][1] * c[2][2] - c[2][1] * c[1][2];
    const double m2 = c[0][1] * c[2][2] - c[2][1] * c[0][2];
    const double m3 = c[0][1] * c[1][2] - c[1][1] * c[0][2];
    const double det = c[0][0] * m1 - c[1][0] * m2 + c[2][0] * m3;
    return odd ? -det : det;
}

} // namespace

ConstraintField zeta_eval(const ConstraintMap& map, std::span<const Field> fields, const Grid2D& grid,
                          const SubdomainMask& mask) {
    std::vector<GradientField> grads;
    if (map.kind != ConstraintKind::nodal) {
        grads.reserve(fields.size());
        for (const Field& f : fields) grads.push_back(gradient(grid, f));
    }
    return zeta_eval(map, fields, grads, mask);
}

ConstraintField zeta_eval(const ConstraintMap& map, std::span<const Field> fields,
                          std::span<const GradientField> gradients, const SubdomainMask& mask) {
    if (static_cast<int>(fields.size()) != map.arity()) {
        throw std::invalid_argument("zeta_eval: " + std::string(to_string(map.kind)) + " takes " +
                                    std::to_string(map.arity()) + " fields, got " +
                                    std::to_string(fields.size()));
    }
    if (map.kind != ConstraintKind::nodal && gradients.size() != fields.size()) {
        throw std::invalid_argument("zeta_eval: one gradient per field required");
    }
    for (const Field& f : fields) {
        if (f.size() != static_cast<Eigen::Index>(mask.member.size())) {
            throw std::invalid_argument("zeta_eval: fields are not on the mask's grid");
        }
    }

    ConstraintField out{Eigen::VectorXd(mask.size()), &mask};
    for (int m = 0; m < mask.size(); ++m) {
        const int node = mask.nodes[static_cast<std::size_t>(m)];
        double v = 0;
        switch (map.kind) {
        case ConstraintKind::nodal: v = fields[0][node]; break;
        case ConstraintKind::critical:
            v = map.direction.x() * gradients[0](node, 0) + map.direction.y() * gradients[0](node, 1);
            break;
        case ConstraintKind::jacobian:
            v = gradients[0](node, 0) * gradients[1](node, 1) - gradients[1](node, 0) * gradients[0](node, 1);
            break;
        case ConstraintKind::augmented: {
            std::array<Column, 3> cols;
            for (std::size_t i = 0; i < 3; ++i) {
                cols[i] = {fields[i][node], gradients[i](node, 0), gradients[i](node, 1)};
            }
            v = augmented_det(cols);
            break;
        }
        }
        out.values[m] = v;
    }
    return out;
}

MaxAbs max_abs(std::span<const ConstraintField> fields) {
    if (fields.empty()) throw std::invalid_argument("max_abs: no constraint fields");
    const Eigen::Index size = fields.front().values.size();
    MaxAbs out{Eigen::VectorXd::Zero(size), 0};
    for (const auto& f : fields) {
        if (f.values.size() != size || f.mask != fields.front().mask) {
            throw std::invalid_argument("max_abs: fields must share a mask");
        }
        out.values = out.values.cwiseMax(f.values.cwiseAbs());
    }
    out.global_min = size > 0 ? out.values.minCoeff() : 0;
    return out;
}

CoverLabeling extract_cover(std::span<const ConstraintField> fields, double tau) {
    if (!(tau > 0)) throw std::invalid_argument("extract_cover: threshold must be > 0");
    if (fields.empty()) throw std::invalid_argument("extract_cover: no constraint fields");
    const Eigen::Index size = fields.front().values.size();
    CoverLabeling out;
    out.threshold = tau;
    out.label.assign(static_cast<std::size_t>(size), 0);
    for (Eigen::Index m = 0; m < size; ++m) {
        double best = -1;
        for (std::size_t l = 0; l < fields.size(); ++l) {
            const double v = std::abs(fields[l].values[m]);
            if (v > best) {
                best = v;
                out.label[static_cast<std::size_t>(m)] = static_cast<int>(l);
            }
        }
        if (!(best >= tau)) ++out.uncovered;
    }
    out.complete = out.uncovered == 0;
    return out;
}

double witness_check(const ConstraintMap& map, const Grid2D& grid, const SubdomainMask& mask) {
    const Field one = Field::Ones(grid.num_nodes());
    const Field x1 = sample_field(grid, [](const Point& p) { return p.x(); });
    const Field x2 = sample_field(grid, [](const Point& p) { return p.y(); });
    std::vector<Field> tuple;
    switch (map.kind) {
    case ConstraintKind::nodal: tuple = {one}; break;
    case ConstraintKind::critical: tuple = {x1}; break;
    case ConstraintKind::jacobian: tuple = {x1, x2}; break;
    case ConstraintKind::augmented: tuple = {one, x1, x2}; break;
    }
    return zeta_eval(map, tuple, grid, mask).values.minCoeff();
}

double holder_seminorm(const ConstraintField& field, const Grid2D& grid) {
    if (!field.mask) throw std::invalid_argument("holder_seminorm: field has no mask");
    const auto& nodes = field.mask->nodes;
    double best = 0;
    for (std::size_t a = 0; a < nodes.size(); ++a) {
        const Point pa = grid.point(nodes[a]);
        for (std::size_t b = a + 1; b < nodes.size(); ++b) {
            const double dist = (grid.point(nodes[b]) - pa).norm();
            const double diff = std::abs(field.values[static_cast<Eigen::Index>(a)] -
                                         field.values[static_cast<Eigen::Index>(b)]);
            best = std::max(best, diff / std::sqrt(dist));
        }
    }
    return best;
}

} // namespace randbc
