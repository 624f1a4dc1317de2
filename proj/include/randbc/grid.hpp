#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace randbc {

using Point = Eigen::Vector2d;

/// Uniform node lattice over the unit square.
///
/// Nodes are indexed row-major, `index = j * n + i`, with `i` the x index and
/// `j` the y index. The boundary is traversed counterclockwise from (0,0), so
/// the k-th boundary node sits at arclength `k * h`.
class Grid2D {
public:
    explicit Grid2D(int n);

    int n() const noexcept { return n_; }
    double h() const noexcept { return h_; }
    int num_nodes() const noexcept { return n_ * n_; }
    int num_interior() const noexcept { return (n_ - 2) * (n_ - 2); }
    int num_boundary() const noexcept { return 4 * (n_ - 1); }
    static constexpr double perimeter() noexcept { return 4.0; }

    int index(int i, int j) const noexcept { return j * n_ + i; }
    int ix(int node) const noexcept { return node % n_; }
    int iy(int node) const noexcept { return node / n_; }

    double x(int i) const noexcept { return i == n_ - 1 ? 1.0 : i * h_; }
    Point point(int node) const noexcept { return {x(ix(node)), x(iy(node))}; }

    bool on_boundary(int node) const noexcept {
        const int i = ix(node), j = iy(node);
        return i == 0 || j == 0 || i == n_ - 1 || j == n_ - 1;
    }

    /// Boundary nodes in counterclockwise order starting at (0,0).
    const std::vector<int>& boundary_order() const noexcept { return boundary_; }
    /// Arclength of the k-th boundary node, in [0, 4).
    double arclength(int k) const noexcept { return k * h_; }

    /// Position of a node in the interior numbering, or -1 on the boundary.
    int interior_index(int node) const noexcept { return interior_of_[node]; }
    const std::vector<int>& interior_nodes() const noexcept { return interior_; }

    /// Node nearest to `p`; ties resolve toward lower indices.
    int nearest_node(const Point& p) const;

private:
    int n_;
    double h_;
    std::vector<int> boundary_;
    std::vector<int> interior_;
    std::vector<int> interior_of_;
};

Grid2D build_grid(int n);

enum class MaskKind { rectangle, disk };

/// Node membership for a subdomain of the unit square.
struct SubdomainMask {
    MaskKind kind = MaskKind::rectangle;
    std::vector<char> member;   // one flag per grid node
    std::vector<int> nodes;     // member node indices, ascending
    Point lo{0, 0}, hi{1, 1};   // rectangle corners
    Point center{0, 0};         // disk parameters
    double radius = 0;

    bool contains(int node) const { return member[static_cast<std::size_t>(node)] != 0; }
    int size() const noexcept { return static_cast<int>(nodes.size()); }
    bool empty() const noexcept { return nodes.empty(); }
};

SubdomainMask rect_mask(const Grid2D& grid, const Point& lo, const Point& hi);
SubdomainMask disk_mask(const Grid2D& grid, const Point& center, double radius);

/// Every node of the closed square. Used for whole-domain norms.
SubdomainMask full_mask(const Grid2D& grid);

} // namespace randbc
