#include "surfstat/boundary.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

#include "surfstat/error.hpp"
#include "surfstat/format.hpp"

namespace surfstat {

namespace {

std::string num(double v) { return format_double(v); }

double parse_number(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::parse_error, "bad number '" + s + "' in boundary rule '" + context + "'");
}

}  // namespace

BoundaryRule BoundaryRule::parse(const std::string& text) {
    if (text.empty() || text == "none") return none();
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
    auto arg = [&](std::size_t i) { return parse_number(parts[i], text); };
    BoundaryRule rule;
    if (parts[0] == "z" && parts.size() == 3) {
        rule = height(arg(1), arg(2));
    } else if (parts[0] == "rim" && parts.size() == 3) {
        rule = rim(arg(1), arg(2));
    } else if (parts[0] == "wedge" && parts.size() == 4) {
        rule = wedge(arg(1), arg(2), arg(3));
    } else {
        throw Error(ErrorCode::parse_error, "unknown boundary rule '" + text + "'");
    }
    if (!(rule.half_width > 0)) throw Error(ErrorCode::parse_error, "boundary half-width must be positive");
    return rule;
}

std::string BoundaryRule::to_string() const {
    switch (kind) {
    case Kind::none: return "none";
    case Kind::height: return "z:" + num(a) + ":" + num(half_width);
    case Kind::rim: return "rim:" + num(a) + ":" + num(half_width);
    case Kind::wedge: return "wedge:" + num(a) + ":" + num(b) + ":" + num(half_width);
    }
    return "none";
}

double BoundaryRule::signed_value(const Vec3& x) const {
    switch (kind) {
    case Kind::none: return std::numeric_limits<double>::infinity();
    case Kind::height: return x.z() - a;
    case Kind::rim: return a - std::hypot(x.x(), x.y());
    case Kind::wedge: {
        const double s_lo = -std::sin(a) * x.x() + std::cos(a) * x.y();
        const double s_hi = std::sin(b) * x.x() - std::cos(b) * x.y();
        return (b - a > M_PI) ? std::max(s_lo, s_hi) : std::min(s_lo, s_hi);
    }
    }
    return 0;
}

Vec3 BoundaryRule::gradient(const Vec3& x) const {
    switch (kind) {
    case Kind::none: return Vec3::Zero();
    case Kind::height: return Vec3::UnitZ();
    case Kind::rim: {
        const double rho = std::hypot(x.x(), x.y());
        return rho > 0 ? Vec3(-x.x() / rho, -x.y() / rho, 0) : Vec3::Zero();
    }
    case Kind::wedge: {
        const double s_lo = -std::sin(a) * x.x() + std::cos(a) * x.y();
        const double s_hi = std::sin(b) * x.x() - std::cos(b) * x.y();
        const bool low = (b - a > M_PI) ? s_lo >= s_hi : s_lo <= s_hi;
        return low ? Vec3(-std::sin(a), std::cos(a), 0) : Vec3(std::sin(b), -std::cos(b), 0);
    }
    }
    return Vec3::Zero();
}

bool BoundaryRule::is_boundary(const Vec3& x) const {
    return kind != Kind::none && std::abs(signed_value(x)) < half_width;
}

bool BoundaryRule::absorbs(const Vec3& x) const { return kind != Kind::none && signed_value(x) < half_width; }

}  // namespace surfstat
