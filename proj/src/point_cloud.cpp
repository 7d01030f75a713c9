#include "surfstat/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>

#include "surfstat/error.hpp"

namespace surfstat {

std::size_t PointCloud::boundary_count() const {
    return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), PointFlag::boundary));
}

// ---------------------------------------------------------------------------
// KdTree

namespace {
constexpr std::uint32_t leaf_size = 12;

double box_distance2(const Vec3& q, const Vec3& lo, const Vec3& hi) {
    double d2 = 0;
    for (int a = 0; a < 3; ++a) {
        const double e = q[a] < lo[a] ? lo[a] - q[a] : (q[a] > hi[a] ? q[a] - hi[a] : 0.0);
        d2 += e * e;
    }
    return d2;
}

bool hit_less(const KdTree::Hit& x, const KdTree::Hit& y) {
    return x.distance < y.distance || (x.distance == y.distance && x.index < y.index);
}
}  // namespace

KdTree::KdTree(const std::vector<Vec3>& points) : points_(points), order_(points.size()) {
    std::iota(order_.begin(), order_.end(), 0u);
    if (!points_.empty()) {
        nodes_.reserve(2 * points_.size() / leaf_size + 2);
        build(0, static_cast<std::uint32_t>(points_.size()));
    }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({});
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (auto i = begin; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    Node node;
    node.begin = begin;
    node.end = end;
    node.lo = lo;
    node.hi = hi;
    if (end - begin > leaf_size) {
        Eigen::Index axis;
        (hi - lo).maxCoeff(&axis);
        node.axis = static_cast<std::uint8_t>(axis);
        const auto mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](std::uint32_t a, std::uint32_t b) {
                             const double pa = points_[a][axis], pb = points_[b][axis];
                             return pa < pb || (pa == pb && a < b);
                         });
        node.split = points_[order_[mid]][axis];
        node.left = build(begin, mid);
        node.right = build(mid, end);
    }
    nodes_[id] = node;
    return id;
}

template <class Visit>
void KdTree::search(const Vec3& q, double& bound2, Visit&& visit) const {
    if (nodes_.empty()) return;
    std::int32_t stack[128];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& node = nodes_[stack[--top]];
        if (box_distance2(q, node.lo, node.hi) > bound2) continue;
        if (node.left < 0) {
            for (auto i = node.begin; i < node.end; ++i) {
                const auto idx = order_[i];
                const double d2 = (points_[idx] - q).squaredNorm();
                if (d2 <= bound2) visit(idx, d2);
            }
            continue;
        }
        // Push the far child first so the near one is explored first.
        const bool go_left = q[node.axis] < node.split;
        stack[top++] = go_left ? node.right : node.left;
        stack[top++] = go_left ? node.left : node.right;
    }
}

std::vector<KdTree::Hit> KdTree::nearest(const Vec3& query, std::size_t k) const {
    k = std::min(k, points_.size());
    if (k == 0) return {};
    // Max-heap on (squared distance, index) holding the k best candidates.
    using Entry = std::pair<double, std::uint32_t>;
    std::priority_queue<Entry> heap;
    double bound2 = std::numeric_limits<double>::infinity();
    search(query, bound2, [&](std::uint32_t idx, double d2) {
        if (heap.size() < k) {
            heap.emplace(d2, idx);
        } else if (Entry(d2, idx) < heap.top()) {
            heap.pop();
            heap.emplace(d2, idx);
        } else {
            return;
        }
        if (heap.size() == k) bound2 = heap.top().first;
    });
    std::vector<Hit> out;
    out.reserve(heap.size());
    while (!heap.empty()) {
        out.push_back({heap.top().second, std::sqrt(heap.top().first)});
        heap.pop();
    }
    std::sort(out.begin(), out.end(), hit_less);
    return out;
}

std::vector<KdTree::Hit> KdTree::within(const Vec3& query, double radius) const {
    std::vector<Hit> out;
    double bound2 = radius * radius;
    search(query, bound2, [&](std::uint32_t idx, double d2) {
        const double d = std::sqrt(d2);
        if (d <= radius) out.push_back({idx, d});
    });
    std::sort(out.begin(), out.end(), hit_less);
    return out;
}

// ---------------------------------------------------------------------------

Neighborhood neighborhood_for(const PointCloud& cloud, const KdTree& index, std::size_t center, int min_count,
                              double inflation) {
    if (min_count < 1) throw Error(ErrorCode::invalid_argument, "min_count must be positive");
    if (cloud.size() < static_cast<std::size_t>(min_count)) {
        throw Error(ErrorCode::insufficient_points,
                    "cloud has " + std::to_string(cloud.size()) + " points, need " + std::to_string(min_count),
                    center);
    }
    const Vec3& x = cloud.positions[center];
    const auto knn = index.nearest(x, static_cast<std::size_t>(min_count));
    Neighborhood nb;
    nb.center = center;
    nb.support = inflation * knn.back().distance;
    const auto hits = index.within(x, nb.support);
    nb.indices.reserve(hits.size());
    nb.distances.reserve(hits.size());
    // The center is at distance zero; place it first even if a duplicate ties it.
    nb.indices.push_back(center);
    nb.distances.push_back(0.0);
    for (const auto& h : hits) {
        if (h.index == center) continue;
        nb.indices.push_back(h.index);
        nb.distances.push_back(h.distance);
    }
    return nb;
}

std::vector<double> nearest_spacings(const std::vector<Vec3>& points) {
    std::vector<double> out(points.size(), 0.0);
    if (points.size() < 2) return out;
    const KdTree tree(points);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(points.size()); ++i) {
        const auto hits = tree.nearest(points[i], 2);
        out[i] = hits[0].index == static_cast<std::size_t>(i) ? hits[1].distance : hits[0].distance;
    }
    return out;
}

FillDistance measure_fill_distance(const PointCloud& cloud) {
    if (cloud.size() < 2) throw Error(ErrorCode::insufficient_points, "fill distance needs two points");
    auto d = nearest_spacings(cloud.positions);
    const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    double median = *mid;
    if (d.size() % 2 == 0) median = 0.5 * (median + *std::max_element(d.begin(), mid));
    return {median, 1.0 / std::sqrt(static_cast<double>(cloud.size()))};
}

void label_boundary(PointCloud& cloud, const BoundaryRule& rule) {
    cloud.flags.assign(cloud.size(), PointFlag::interior);
    cloud.boundary_rule = rule.to_string();
    if (rule.is_none()) return;
    std::size_t count = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (rule.is_boundary(cloud.positions[i])) {
            cloud.flags[i] = PointFlag::boundary;
            ++count;
        }
    }
    if (count == 0) throw Error(ErrorCode::empty_boundary, "rule '" + rule.to_string() + "' flags no point");
}

// ---------------------------------------------------------------------------
// Text format:
//   # surface=<model> boundary=<rule> columns=x,y,z,flag
//   x,y,z,interior|boundary

void write_cloud(std::ostream& out, const PointCloud& cloud) {
    out << "# surface=" << (cloud.source_model.empty() ? "unknown" : cloud.source_model)
        << " boundary=" << cloud.boundary_rule << " columns=x,y,z,flag\n";
    char buf[128];
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.positions[i];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,", p.x(), p.y(), p.z());
        out << buf << (cloud.is_boundary(i) ? "boundary" : "interior") << '\n';
    }
}

PointCloud read_cloud(std::istream& in) {
    PointCloud cloud;
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
        throw Error(ErrorCode::parse_error, "point cloud must start with a '# ' header line");
    }
    std::istringstream header(line.substr(2));
    for (std::string field; header >> field;) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
        if (key == "surface") cloud.source_model = value == "unknown" ? "" : value;
        if (key == "boundary") cloud.boundary_rule = value;
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const char* s = line.c_str();
        char* end = nullptr;
        Vec3 p;
        for (int a = 0; a < 3; ++a) {
            p[a] = std::strtod(s, &end);
            if (end == s || *end != ',') {
                throw Error(ErrorCode::parse_error, "malformed row at line " + std::to_string(line_no));
            }
            s = end + 1;
        }
        const std::string flag(s);
        if (flag == "interior") {
            cloud.flags.push_back(PointFlag::interior);
        } else if (flag == "boundary") {
            cloud.flags.push_back(PointFlag::boundary);
        } else {
            throw Error(ErrorCode::parse_error, "bad flag '" + flag + "' at line " + std::to_string(line_no));
        }
        cloud.positions.push_back(p);
    }
    return cloud;
}

void write_cloud_file(const std::string& path, const PointCloud& cloud) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io_error, "cannot open '" + path + "' for writing");
    write_cloud(out, cloud);
    if (!out) throw Error(ErrorCode::io_error, "write failed for '" + path + "'");
}

PointCloud read_cloud_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path + "'");
    return read_cloud(in);
}

}  // namespace surfstat
