#include "randbc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace randbc {

Grid2D::Grid2D(int n) : n_(n), h_(0) {
    if (n < 8) {
        std::ostringstream msg;
        msg << "grid.n must be >= 8, got " << n;
        throw std::invalid_argument(msg.str());
    }
    h_ = 1.0 / (n - 1);

    boundary_.reserve(static_cast<std::size_t>(num_boundary()));
    for (int i = 0; i < n - 1; ++i) boundary_.push_back(index(i, 0));
    for (int j = 0; j < n - 1; ++j) boundary_.push_back(index(n - 1, j));
    for (int i = n - 1; i > 0; --i) boundary_.push_back(index(i, n - 1));
    for (int j = n - 1; j > 0; --j) boundary_.push_back(index(0, j));

    interior_of_.assign(static_cast<std::size_t>(num_nodes()), -1);
    interior_.reserve(static_cast<std::size_t>(num_interior()));
    for (int j = 1; j < n - 1; ++j) {
        for (int i = 1; i < n - 1; ++i) {
            interior_of_[static_cast<std::size_t>(index(i, j))] = static_cast<int>(interior_.size());
            interior_.push_back(index(i, j));
        }
    }
}

int Grid2D::nearest_node(const Point& p) const {
    auto snap = [this](double v) {
        const long k = std::lround(v / h_);
        return static_cast<int>(std::clamp<long>(k, 0, n_ - 1));
    };
    return index(snap(p.x()), snap(p.y()));
}

Grid2D build_grid(int n) { return Grid2D(n); }

namespace {

SubdomainMask finish(SubdomainMask mask) {
    for (std::size_t k = 0; k < mask.member.size(); ++k) {
        if (mask.member[k]) mask.nodes.push_back(static_cast<int>(k));
    }
    return mask;
}

} // namespace

SubdomainMask rect_mask(const Grid2D& grid, const Point& lo, const Point& hi) {
    if (!(lo.x() > 0 && lo.y() > 0 && hi.x() < 1 && hi.y() < 1)) {
        throw std::invalid_argument("rect_mask: box must lie strictly inside the unit square");
    }
    if (!(lo.x() < hi.x() && lo.y() < hi.y())) {
        throw std::invalid_argument("rect_mask: degenerate box (lo >= hi)");
    }
    // Nodes within a few ulps of a box face count as inside.
    const double slack = 64 * std::numeric_limits<double>::epsilon();
    SubdomainMask mask;
    mask.kind = MaskKind::rectangle;
    mask.lo = lo;
    mask.hi = hi;
    mask.member.assign(static_cast<std::size_t>(grid.num_nodes()), 0);
    for (int node = 0; node < grid.num_nodes(); ++node) {
        const Point p = grid.point(node);
        const bool in = p.x() >= lo.x() - slack && p.x() <= hi.x() + slack &&
                        p.y() >= lo.y() - slack && p.y() <= hi.y() + slack;
        mask.member[static_cast<std::size_t>(node)] = in;
    }
    return finish(std::move(mask));
}

SubdomainMask disk_mask(const Grid2D& grid, const Point& center, double radius) {
    if (radius < 4 * grid.h()) {
        throw std::invalid_argument("disk_mask: radius must be at least 4h");
    }
    const double clearance = std::min({center.x(), center.y(), 1 - center.x(), 1 - center.y()});
    if (!(clearance > radius)) {
        throw std::invalid_argument("disk_mask: disk must lie compactly inside the unit square");
    }
    SubdomainMask mask;
    mask.kind = MaskKind::disk;
    mask.center = center;
    mask.radius = radius;
    mask.member.assign(static_cast<std::size_t>(grid.num_nodes()), 0);
    for (int node = 0; node < grid.num_nodes(); ++node) {
        mask.member[static_cast<std::size_t>(node)] = (grid.point(node) - center).norm() <= radius;
    }
    return finish(std::move(mask));
}

SubdomainMask full_mask(const Grid2D& grid) {
    SubdomainMask mask;
    mask.kind = MaskKind::rectangle;
    mask.member.assign(static_cast<std::size_t>(grid.num_nodes()), 1);
    return finish(std::move(mask));
}

} // namespace randbc
