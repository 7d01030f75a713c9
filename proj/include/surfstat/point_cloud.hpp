#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "surfstat/boundary.hpp"
#include "surfstat/types.hpp"

namespace surfstat {

enum class PointFlag : std::uint8_t { interior, boundary };

struct PointCloud {
    std::vector<Vec3> positions;
    std::vector<PointFlag> flags;
    /// Canonical model string of the source surface, empty when unknown.
    std::string source_model;
    /// Rule used for the flags, in BoundaryRule text form.
    std::string boundary_rule = "none";

    std::size_t size() const { return positions.size(); }
    bool is_boundary(std::size_t i) const { return flags[i] == PointFlag::boundary; }
    std::size_t boundary_count() const;
};

/// Static 3-d tree supporting exact k-nearest and radius queries.
/// Results are sorted by (distance, index).
class KdTree {
public:
    struct Hit {
        std::size_t index;
        double distance;
    };

    explicit KdTree(const std::vector<Vec3>& points);

    std::vector<Hit> nearest(const Vec3& query, std::size_t k) const;
    /// All points with distance ≤ radius.
    std::vector<Hit> within(const Vec3& query, double radius) const;
    std::size_t size() const { return points_.size(); }

private:
    struct Node {
        std::uint32_t begin, end;
        std::int32_t left = -1, right = -1;
        std::uint8_t axis = 0;
        double split = 0;
        Vec3 lo, hi;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    template <class Visit>
    void search(const Vec3& q, double& bound2, Visit&& visit) const;

    std::vector<Vec3> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

struct Neighborhood {
    std::size_t center = 0;
    std::vector<std::size_t> indices;  // sorted by distance, center first
    std::vector<double> distances;
    double support = 0;                // ε
};

/// dim V_m = (m+1)(m+2)/2 for bivariate polynomials of degree m.
constexpr int bivariate_dimension(int degree) { return (degree + 1) * (degree + 2) / 2; }
/// Default neighbor threshold 2·dim V_m.
constexpr int default_min_count(int degree) { return 2 * bivariate_dimension(degree); }
inline constexpr double default_inflation = 1.2;

/// ε = inflation × distance to the min_count-th nearest point (the center
/// counts as the first); returns every point with distance ≤ ε.
/// Throws insufficient-points when the cloud has fewer than min_count points.
Neighborhood neighborhood_for(const PointCloud& cloud, const KdTree& index, std::size_t center, int min_count,
                              double inflation = default_inflation);

struct FillDistance {
    double median_spacing = 0;  // median nearest-neighbor distance
    double h_bar = 0;           // 1/√n
};

FillDistance measure_fill_distance(const PointCloud& cloud);
/// Nearest-neighbor distance of every point.
std::vector<double> nearest_spacings(const std::vector<Vec3>& points);

/// Flags every point with |s| < w. Throws empty-boundary if a non-trivial
/// rule flags nothing.
void label_boundary(PointCloud& cloud, const BoundaryRule& rule);

void write_cloud(std::ostream& out, const PointCloud& cloud);
PointCloud read_cloud(std::istream& in);
void write_cloud_file(const std::string& path, const PointCloud& cloud);
PointCloud read_cloud_file(const std::string& path);

}  // namespace surfstat
