#pragma once

#include <string>

#include "surfstat/types.hpp"

namespace surfstat {

/// Band rule that marks points near a boundary curve. The rule carries a
/// signed scalar s(x) that is positive inside the retained domain, and a
/// half-width w. A point is a boundary node when |s| < w; a moving particle
/// is absorbed once s < w.
///
/// Text forms:
///   none
///   z:<c>:<w>                   s = z − c
///   rim:<R>:<w>                 s = R − √(x² + y²)
///   wedge:<u_min>:<u_max>:<w>   distance to the azimuthal cut planes about the z axis
struct BoundaryRule {
    enum class Kind { none, height, rim, wedge };

    Kind kind = Kind::none;
    double a = 0;  // height c, rim radius R, or u_min
    double b = 0;  // u_max for wedges
    double half_width = 0;

    static BoundaryRule none() { return {}; }
    static BoundaryRule height(double c, double w) { return {Kind::height, c, 0, w}; }
    static BoundaryRule rim(double R, double w) { return {Kind::rim, R, 0, w}; }
    static BoundaryRule wedge(double u_min, double u_max, double w) { return {Kind::wedge, u_min, u_max, w}; }

    static BoundaryRule parse(const std::string& text);
    std::string to_string() const;

    double signed_value(const Vec3& x) const;
    /// Gradient of signed_value, one-sided at the wedge's switching plane.
    Vec3 gradient(const Vec3& x) const;
    bool is_boundary(const Vec3& x) const;
    bool absorbs(const Vec3& x) const;
    bool is_none() const { return kind == Kind::none; }
};

}  // namespace surfstat
