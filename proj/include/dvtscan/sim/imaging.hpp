#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include "../planner.hpp"
#include "phantom.hpp"

namespace dvtscan::sim {

/// Where the image plane cuts the vessel, in probe coordinates, plus the
/// lumen ellipse the frame would show.
struct LumenSection {
    double y{0.0};         // lateral centre, m
    double depth{0.0};     // image depth of the centre after slab compression, m
    double semi_y{0.0};    // lateral semi-axis, m
    double semi_z{0.0};    // axial semi-axis, m
    Vec3 vessel_point{Vec3::Zero()};  // undeformed crossing point in {B}
};

struct UsFrame {
    BinaryImage mask;  // empty unless requested
    std::optional<PixelCoord> centroid;
    std::optional<Vec3> centroid_world;
    std::optional<LumenSection> section;
};

/// Analytic plane/tube intersection. Tissue between the probe and the vessel is
/// a uniformly compressed slab, so image depth is d0 (1 - delta / H).
inline std::optional<LumenSection> lumen_section(const Pose& probe, const Phantom& ph, double f, double penetration) {
    const Mat3 r = probe.rotation();
    const Vec3& tip = probe.position;
    std::optional<LumenSection> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < ph.vessel.size(); ++i) {
        const Vec3 a = r.transpose() * (ph.vessel[i] - tip);
        const Vec3 b = r.transpose() * (ph.vessel[i + 1] - tip);
        if ((a.x() > 0.0) == (b.x() > 0.0)) {
            continue;
        }
        const double t = a.x() / (a.x() - b.x());
        const Vec3 c = a + t * (b - a);
        const double d = c.tail<2>().norm();
        if (d < best_d) {
            best_d = d;
            const double s = ph.vessel_s[i] + t * (ph.vessel_s[i + 1] - ph.vessel_s[i]);
            const VesselSegmentProps& seg = ph.segment_at(s);
            LumenSection sec;
            sec.y = c.y();
            const double d0 = c.z() + penetration;
            sec.depth = d0 * (1.0 - penetration / ph.spec.slab_thickness);
            sec.semi_y = seg.rest_radius;
            sec.semi_z = seg.rest_radius * lumen_area(std::max(f, 0.0), seg) / seg.rest_area_mm2();
            sec.vessel_point = ph.vessel[i] + t * (ph.vessel[i + 1] - ph.vessel[i]);
            best = sec;
        }
    }
    return best;
}

/// Synthetic segmentation: rasterize the lumen ellipse and take its centroid.
inline UsFrame virtual_us_frame(const Pose& probe, const Phantom& ph, const UsFrameGeometry& g, double f,
                                double penetration, bool keep_mask = false) {
    UsFrame out;
    if (keep_mask) {
        out.mask = BinaryImage(g.width, g.height);
    }
    out.section = lumen_section(probe, ph, f, penetration);
    if (!out.section || out.section->semi_z <= 0.0) {
        return out;
    }
    const LumenSection& sec = *out.section;
    const double mc = g.metres_per_col();
    const double mr = g.metres_per_row();
    const double cc = (sec.y + g.footprint / 2.0) / mc;
    const double cr = sec.depth / mr;
    const int c0 = std::max(0, static_cast<int>(std::floor(cc - sec.semi_y / mc)) - 1);
    const int c1 = std::min(g.width - 1, static_cast<int>(std::ceil(cc + sec.semi_y / mc)) + 1);
    const int r0 = std::max(0, static_cast<int>(std::floor(cr - sec.semi_z / mr)) - 1);
    const int r1 = std::min(g.height - 1, static_cast<int>(std::ceil(cr + sec.semi_z / mr)) + 1);
    if (c0 > c1 || r0 > r1) {
        return out;
    }
    // Rasterize into the bounding box only; the component search runs there too.
    BinaryImage roi(c1 - c0 + 1, r1 - r0 + 1);
    for (int r = r0; r <= r1; ++r) {
        const double dz = (r * mr - sec.depth) / sec.semi_z;
        for (int c = c0; c <= c1; ++c) {
            const double dy = (c * mc - g.footprint / 2.0 - sec.y) / sec.semi_y;
            if (dy * dy + dz * dz <= 1.0) {
                roi.set(c - c0, r - r0);
                if (keep_mask) {
                    out.mask.set(c, r);
                }
            }
        }
    }
    const auto local = vessel_centroid(roi);
    if (!local) {
        return out;
    }
    out.centroid = PixelCoord{local->col + c0, local->row + r0};
    out.centroid_world = pixel_to_world(*out.centroid, probe.transform(), g);
    return out;
}

/// Horizontal image-centre deviation in mm.
inline double centroid_deviation_mm(const PixelCoord& px, const UsFrameGeometry& g) {
    return std::abs(px.col - g.width / 2.0) * g.metres_per_col() * 1e3;
}

}  // namespace dvtscan::sim
