#pragma once

// Geometry fixtures shared by the unit and acceptance suites.

#include <cmath>
#include <numbers>
#include <vector>

#include "dvtscan/geomath.hpp"
#include "dvtscan/pathfit.hpp"

namespace dvtscan::testing {

/// Circular arc over the top of a cylinder whose axis is y: radius r, centred
/// on the z axis, spanning `sweep` radians, sampled every `step` metres.
/// Normals point toward the centre (into the surface).
struct ArcFixture {
    double radius{0.1};
    double sweep{2.0 * std::numbers::pi / 3.0};
    Vec3 center{0.5, 0.0, 0.0};

    [[nodiscard]] double phi(double s) const { return -sweep / 2.0 + s * sweep; }
    [[nodiscard]] double length() const { return radius * sweep; }

    [[nodiscard]] Vec3 point(double s) const {
        const double p = phi(s);
        return center + radius * Vec3(std::sin(p), 0.0, std::cos(p));
    }
    [[nodiscard]] Vec3 normal(double s) const {
        const double p = phi(s);
        return -Vec3(std::sin(p), 0.0, std::cos(p));
    }
    [[nodiscard]] Vec3 tangent(double s) const {
        const double p = phi(s);
        return Vec3(std::cos(p), 0.0, -std::sin(p));
    }
    [[nodiscard]] UnitQuaternion frame(double s) const {
        const Vec3 n = normal(s);
        const Vec3 y = n.cross(tangent(s)).normalized();
        Mat3 r;
        r.col(0) = y.cross(n);
        r.col(1) = y;
        r.col(2) = n;
        return UnitQuaternion::from_rotation(r);
    }

    /// Samples at the given arc-length fractions.
    [[nodiscard]] WaypointSet sample(const std::vector<double>& fractions) const {
        WaypointSet w;
        for (double s : fractions) {
            w.points.push_back(point(s));
            w.normals.push_back(normal(s));
        }
        return w;
    }

    [[nodiscard]] WaypointSet sample_every(double step) const {
        std::vector<double> fr;
        const double len = length();
        for (double d = 0.0; d < len - 1e-12; d += step) {
            fr.push_back(d / len);
        }
        fr.push_back(1.0);
        return sample(fr);
    }
};

}  // namespace dvtscan::testing
