#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "../errors.hpp"
#include "../geomath.hpp"
#include "../planner.hpp"

namespace dvtscan::sim {

/// Regular grid sampled field with bilinear interpolation; queries clamp to the grid.
struct GridField {
    double x0{0.0};
    double y0{0.0};
    double spacing{1e-3};
    int nx{0};
    int ny{0};
    std::vector<double> values;  // row-major in y: values[j * nx + i]

    template <typename Fn>
    static GridField sample(double x0, double y0, double spacing, int nx, int ny, const Fn& fn) {
        GridField g{x0, y0, spacing, nx, ny, {}};
        g.values.resize(static_cast<std::size_t>(nx) * ny);
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                g.values[static_cast<std::size_t>(j) * nx + i] = fn(x0 + i * spacing, y0 + j * spacing);
            }
        }
        return g;
    }

    [[nodiscard]] double x1() const { return x0 + (nx - 1) * spacing; }
    [[nodiscard]] double y1() const { return y0 + (ny - 1) * spacing; }
    [[nodiscard]] bool contains(double x, double y) const { return x >= x0 && x <= x1() && y >= y0 && y <= y1(); }

    [[nodiscard]] double at(double x, double y) const {
        const double fx = std::clamp((x - x0) / spacing, 0.0, static_cast<double>(nx - 1));
        const double fy = std::clamp((y - y0) / spacing, 0.0, static_cast<double>(ny - 1));
        const int i = std::min(static_cast<int>(fx), nx - 2);
        const int j = std::min(static_cast<int>(fy), ny - 2);
        const double tx = fx - i;
        const double ty = fy - j;
        const auto v = [&](int a, int b) { return values[static_cast<std::size_t>(b) * nx + a]; };
        return (1 - ty) * ((1 - tx) * v(i, j) + tx * v(i + 1, j)) + ty * ((1 - tx) * v(i, j + 1) + tx * v(i + 1, j + 1));
    }

    /// Central difference over one grid spacing: continuous even though the
    /// bilinear surface has kinks at cell edges.
    [[nodiscard]] Eigen::Vector2d gradient(double x, double y) const {
        const double h = spacing / 2.0;
        return {(at(x + h, y) - at(x - h, y)) / (2 * h), (at(x, y + h) - at(x, y - h)) / (2 * h)};
    }
};

struct VesselSegmentProps {
    double s_a{0.0};
    double s_b{1.0};
    double rest_radius{0.003};
    double f_close{8.0};
    double residual_ratio{0.0};

    [[nodiscard]] double rest_area_mm2() const { return std::numbers::pi * std::pow(rest_radius * 1e3, 2); }
};

/// Lumen cross-section under axial load f: A0 max(residual, 1 - f / f_close), mm^2.
inline double lumen_area(double f, const VesselSegmentProps& seg) {
    if (f < 0.0) {
        throw InvalidArgument("lumen_area needs f >= 0");
    }
    return seg.rest_area_mm2() * std::max(seg.residual_ratio, 1.0 - f / seg.f_close);
}

/// Geometry and material parameters of the synthetic arm phantom.
///
/// The phantom runs along base y; x is lateral. The surface is a ridge with two
/// longitudinal bumps, and the vessel meanders laterally at a fixed depth.
struct PhantomSpec {
    double center_x{0.50};
    double center_y{0.0};
    double length{0.40};
    double width{0.12};
    double base_height{0.10};
    double ridge_height{0.03};
    double bump_amplitude{0.008};
    double k_min{1500.0};
    double k_max{3000.0};
    double k_periods{1.5};
    double grid_spacing{1e-3};
    double slab_thickness{0.05};
    double vessel_depth{0.012};
    double vessel_radius{0.003};
    double vessel_meander{0.003};
    double vessel_offset{0.0};  // lateral offset of the vessel from the ridge
    double thrombus_start{1.0 / 3.0};
    double thrombus_end{2.0 / 3.0};
    double thrombus_residual{0.4};
    double f_close{8.0};

    void validate() const {
        if (!(length > 0.0) || !(width > 0.0) || !(grid_spacing > 0.0) || !(slab_thickness > 0.0)) {
            throw ConfigError("phantom dimensions must be positive");
        }
        if (!(k_min > 0.0) || k_max < k_min) {
            throw ConfigError("phantom stiffness needs 0 < k_min <= k_max");
        }
        if (!(vessel_depth > vessel_radius) || !(vessel_radius > 0.0)) {
            throw ConfigError("vessel must lie strictly below the surface (depth > radius > 0)");
        }
        if (!(f_close > 0.0) || thrombus_residual < 0.0 || thrombus_residual >= 1.0) {
            throw ConfigError("vessel segment parameters out of range");
        }
        if (!(0.0 <= thrombus_start && thrombus_start <= thrombus_end && thrombus_end <= 1.0)) {
            throw ConfigError("thrombus span must lie within [0, 1]");
        }
    }

    /// Flat, uniformly stiff block: handy for unit tests.
    static PhantomSpec flat(double k_e) {
        PhantomSpec p;
        p.ridge_height = 0.0;
        p.bump_amplitude = 0.0;
        p.k_min = p.k_max = k_e;
        p.vessel_meander = 0.0;
        return p;
    }
};

struct Phantom {
    PhantomSpec spec;
    GridField height;
    GridField stiffness;
    std::vector<Vec3> vessel;        // centerline polyline
    std::vector<double> vessel_s;    // normalized arc length per vertex
    std::vector<VesselSegmentProps> segments;

    explicit Phantom(const PhantomSpec& sp = {}) : spec(sp) {
        spec.validate();
        const double gx0 = sp.center_x - sp.width / 2.0;
        const double gy0 = sp.center_y - sp.length / 2.0;
        const int nx = static_cast<int>(std::lround(sp.width / sp.grid_spacing)) + 1;
        const int ny = static_cast<int>(std::lround(sp.length / sp.grid_spacing)) + 1;
        height = GridField::sample(gx0, gy0, sp.grid_spacing, nx, ny, [&](double x, double y) { return surface(x, y); });
        stiffness = GridField::sample(gx0, gy0, sp.grid_spacing, nx, ny, [&](double, double y) {
            const double u = (y - gy0) / sp.length;
            return sp.k_min + (sp.k_max - sp.k_min) * 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * sp.k_periods * u));
        });

        for (int j = 0; j < ny; ++j) {
            const double y = gy0 + j * sp.grid_spacing;
            const double u = (y - gy0) / sp.length;
            const double x = sp.center_x + sp.vessel_offset + sp.vessel_meander * std::sin(2.0 * std::numbers::pi * u);
            vessel.emplace_back(x, y, height.at(x, y) - sp.vessel_depth);
        }
        const ArcLengthProfile arc = accumulate_arclength(vessel);
        vessel_s = arc.s;

        segments.push_back({0.0, sp.thrombus_start, sp.vessel_radius, sp.f_close, 0.0});
        segments.push_back({sp.thrombus_start, sp.thrombus_end, sp.vessel_radius, sp.f_close, sp.thrombus_residual});
        segments.push_back({sp.thrombus_end, 1.0, sp.vessel_radius, sp.f_close, 0.0});
    }

    /// Analytic surface before gridding.
    [[nodiscard]] double surface(double x, double y) const {
        const double w = (x - spec.center_x) / (spec.width / 2.0);
        const double u = (y - (spec.center_y - spec.length / 2.0)) / spec.length;
        const double bump = std::sin(2.0 * std::numbers::pi * u);
        return spec.base_height + spec.ridge_height * (1.0 - w * w) + spec.bump_amplitude * bump * bump;
    }

    [[nodiscard]] double g(double x, double y) const { return height.at(x, y); }
    [[nodiscard]] double k_e(double x, double y) const { return stiffness.at(x, y); }

    /// Outward unit surface normal.
    [[nodiscard]] Vec3 outward_normal(double x, double y) const {
        const Eigen::Vector2d grad = height.gradient(x, y);
        return Vec3(-grad.x(), -grad.y(), 1.0).normalized();
    }

    /// Index of the vessel vertex closest to x in the horizontal plane.
    [[nodiscard]] std::size_t nearest_vessel_vertex(const Vec3& x) const {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < vessel.size(); ++i) {
            const double d = (vessel[i] - x).head<2>().squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return best;
    }

    [[nodiscard]] const VesselSegmentProps& segment_at(double s) const {
        for (const auto& seg : segments) {
            if (s >= seg.s_a && s < seg.s_b) {
                return seg;
            }
        }
        return segments.back();
    }

    /// Segment beneath a probe tip position.
    [[nodiscard]] const VesselSegmentProps& segment_under(const Vec3& tip) const {
        return segment_at(vessel_s[nearest_vessel_vertex(tip)]);
    }

    /// Grid samples of the surface with inward normals (the scanner's point cloud).
    [[nodiscard]] SurfaceCloud surface_cloud(double spacing = 1e-3, double margin = 0.0) const {
        SurfaceCloud c;
        const int nx = static_cast<int>(std::floor((spec.width - 2 * margin) / spacing + 1e-9)) + 1;
        const int ny = static_cast<int>(std::floor((spec.length - 2 * margin) / spacing + 1e-9)) + 1;
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                const double x = height.x0 + margin + i * spacing;
                const double y = height.y0 + margin + j * spacing;
                c.points.emplace_back(x, y, g(x, y));
                c.normals.push_back(-outward_normal(x, y));
            }
        }
        return c;
    }
};

inline constexpr double max_penetration = 0.025;

struct ContactState {
    Wrench wrench_p;          // force on the probe, in {P}
    Vec3 force_b{Vec3::Zero()};  // same force in {B}
    double penetration{0.0};     // along the surface normal, m
    double k_e{0.0};
    Vec3 normal_out{Vec3::UnitZ()};
};

/// Unilateral spring contact at the probe tip: f = k_e * delta along the outward normal.
inline ContactState contact_state(const Pose& probe, const Phantom& ph) {
    ContactState c;
    const Vec3& tip = probe.position;
    if (!tip.allFinite()) {
        throw InvalidArgument("contact query with non-finite probe pose");
    }
    if (!ph.height.contains(tip.x(), tip.y())) {
        return c;
    }
    const double dz = ph.g(tip.x(), tip.y()) - tip.z();
    if (dz <= 0.0) {
        return c;
    }
    c.normal_out = ph.outward_normal(tip.x(), tip.y());
    c.penetration = dz * c.normal_out.z();
    if (c.penetration > max_penetration) {
        throw PlantFaultError("probe penetration " + std::to_string(c.penetration * 1e3) + " mm exceeds " +
                              std::to_string(max_penetration * 1e3) + " mm");
    }
    c.k_e = ph.k_e(tip.x(), tip.y());
    c.force_b = c.k_e * c.penetration * c.normal_out;
    c.wrench_p.force = probe.rotation().transpose() * c.force_b;
    return c;
}

inline Wrench contact_force(const Pose& probe, const Phantom& ph) { return contact_state(probe, ph).wrench_p; }

}  // namespace dvtscan::sim
