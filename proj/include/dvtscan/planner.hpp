#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "geomath.hpp"
#include "pathfit.hpp"

namespace dvtscan {

/// Surface samples of the phantom in {B}. Normals follow the waypoint
/// convention and point into the surface.
struct SurfaceCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;

    [[nodiscard]] std::size_t size() const { return points.size(); }

    void validate() const {
        if (points.empty()) {
            throw InvalidArgument("surface cloud is empty");
        }
        if (points.size() != normals.size()) {
            throw InvalidArgument("surface cloud point and normal counts differ");
        }
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (!points[i].allFinite() || !normals[i].allFinite() || std::abs(normals[i].norm() - 1.0) > 1e-6) {
                throw InvalidArgument("surface cloud entry " + std::to_string(i) + " is invalid");
            }
        }
    }
};

struct VesselCenterline {
    std::vector<Vec3> points;
    std::vector<long> source_frame_ids;

    [[nodiscard]] std::size_t size() const { return points.size(); }
};

/// Linear-probe image geometry.
struct UsFrameGeometry {
    double footprint{0.0375};  // L_p, m
    double depth{0.040};       // D_img, m
    int width{640};
    int height{480};

    void validate() const {
        if (!(footprint > 0.0) || !(depth > 0.0) || width <= 0 || height <= 0) {
            throw InvalidArgument("image geometry must be positive");
        }
    }

    /// ^P_I T acting on (row, col, 0, 1): lateral pixels map to y_P, rows to depth z_P.
    [[nodiscard]] Mat4 image_to_probe() const {
        Mat4 t = Mat4::Zero();
        t(1, 1) = footprint / width;
        t(1, 3) = -footprint / 2.0;
        t(2, 0) = depth / height;
        t(3, 3) = 1.0;
        return t;
    }

    [[nodiscard]] double metres_per_col() const { return footprint / width; }
    [[nodiscard]] double metres_per_row() const { return depth / height; }
};

struct PixelCoord {
    double col{0.0};
    double row{0.0};
};

/// Image pixel to {B}. The probe transform is ^B_P T (flange and probe
/// calibration already composed).
inline Vec3 pixel_to_world(const PixelCoord& px, const FrameTransform& t_bp, const UsFrameGeometry& g) {
    const Eigen::Vector4d in(px.row, px.col, 0.0, 1.0);
    const Eigen::Vector4d p = g.image_to_probe() * in;
    return t_bp.apply(p.head<3>());
}

/// Inverse of pixel_to_world for points on the image plane. Returns the pixel
/// and the signed out-of-plane distance x_P.
inline std::pair<PixelCoord, double> world_to_pixel(const Vec3& x, const FrameTransform& t_bp,
                                                    const UsFrameGeometry& g) {
    const Vec3 p = t_bp.inverse().apply(x);
    PixelCoord px;
    px.col = (p.y() + g.footprint / 2.0) / g.metres_per_col();
    px.row = p.z() / g.metres_per_row();
    return {px, p.x()};
}

/// Row-major binary mask.
struct BinaryImage {
    int width{0};
    int height{0};
    std::vector<std::uint8_t> data;

    BinaryImage() = default;
    BinaryImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}

    [[nodiscard]] bool at(int col, int row) const { return data[static_cast<std::size_t>(row) * width + col] != 0; }
    void set(int col, int row, bool v = true) { data[static_cast<std::size_t>(row) * width + col] = v ? 1 : 0; }
    [[nodiscard]] std::size_t count() const { return static_cast<std::size_t>(std::count(data.begin(), data.end(), 1)); }
};

/// Centroid of the largest 4-connected component; equal sizes keep the first
/// component in raster order.
inline std::optional<PixelCoord> vessel_centroid(const BinaryImage& mask) {
    std::vector<int> label(mask.data.size(), -1);
    std::vector<int> stack;
    std::size_t best_size = 0;
    double best_col = 0.0;
    double best_row = 0.0;
    int next = 0;
    for (int r = 0; r < mask.height; ++r) {
        for (int c = 0; c < mask.width; ++c) {
            const int idx = r * mask.width + c;
            if (!mask.data[idx] || label[idx] >= 0) {
                continue;
            }
            std::size_t n = 0;
            double sc = 0.0;
            double sr = 0.0;
            label[idx] = next;
            stack.push_back(idx);
            while (!stack.empty()) {
                const int cur = stack.back();
                stack.pop_back();
                const int cr = cur / mask.width;
                const int cc = cur % mask.width;
                ++n;
                sc += cc;
                sr += cr;
                const int nb[4][2] = {{cc - 1, cr}, {cc + 1, cr}, {cc, cr - 1}, {cc, cr + 1}};
                for (const auto& q : nb) {
                    if (q[0] < 0 || q[0] >= mask.width || q[1] < 0 || q[1] >= mask.height) {
                        continue;
                    }
                    const int j = q[1] * mask.width + q[0];
                    if (mask.data[j] && label[j] < 0) {
                        label[j] = next;
                        stack.push_back(j);
                    }
                }
            }
            if (n > best_size) {
                best_size = n;
                best_col = sc / static_cast<double>(n);
                best_row = sr / static_cast<double>(n);
            }
            ++next;
        }
    }
    if (best_size == 0) {
        return std::nullopt;
    }
    return PixelCoord{best_col, best_row};
}

/// Detections of one image frame, already mapped to {B}.
struct FrameDetections {
    long frame_id{0};
    std::vector<Vec3> candidates;
};

inline constexpr double max_chain_gap = 0.020;

/// Greedy nearest-neighbour chaining from a seed frame. seed_index < 0 picks
/// the first frame with a detection. Frames without detections are skipped.
inline VesselCenterline chain_centroids(const std::vector<FrameDetections>& frames, int seed_index = -1) {
    VesselCenterline out;
    std::size_t start = 0;
    if (seed_index >= 0) {
        start = static_cast<std::size_t>(seed_index);
        if (start >= frames.size() || frames[start].candidates.empty()) {
            throw InvalidArgument("seed frame " + std::to_string(seed_index) + " has no detection");
        }
    } else {
        while (start < frames.size() && frames[start].candidates.empty()) {
            ++start;
        }
        if (start == frames.size()) {
            return out;
        }
    }
    out.points.push_back(frames[start].candidates.front());
    out.source_frame_ids.push_back(frames[start].frame_id);
    for (std::size_t f = start + 1; f < frames.size(); ++f) {
        const auto& cand = frames[f].candidates;
        if (cand.empty()) {
            continue;
        }
        const Vec3& prev = out.points.back();
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < cand.size(); ++k) {
            const double d = (cand[k] - prev).norm();
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        if (best_d > max_chain_gap) {
            throw TrackLostError(frames[f].frame_id, best_d);
        }
        out.points.push_back(cand[best]);
        out.source_frame_ids.push_back(frames[f].frame_id);
    }
    return out;
}

/// Horizontal distance used by the surface projection: |N_v (a - b)|^2.
inline double horizontal_distance2(const Mat3& n_v, const Vec3& a, const Vec3& b) {
    return (n_v * (a - b)).squaredNorm();
}

struct SurfaceProjection {
    WaypointSet waypoints;
    std::vector<std::size_t> indices;
    std::vector<double> residuals;  // horizontal distance, m
    bool gap_warning{false};        // some residual exceeded max_projection_gap
};

inline constexpr double max_projection_gap = 0.010;

/// Uniform bucket grid over the cloud's horizontal coordinates.
class HorizontalGrid {
public:
    HorizontalGrid(const SurfaceCloud& cloud, const Vec3& n_zb, double cell)
        : cloud_(cloud), n_v_(Mat3::Identity() - n_zb * n_zb.transpose()), cell_(cell) {
        const Vec3 helper = std::abs(n_zb.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
        u_ = n_zb.cross(helper).normalized();
        v_ = n_zb.cross(u_);
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const auto c = cell_index(cloud.points[i]);
            if (i == 0) {
                lo_ = hi_ = c;
            }
            lo_ = {std::min(lo_.first, c.first), std::min(lo_.second, c.second)};
            hi_ = {std::max(hi_.first, c.first), std::max(hi_.second, c.second)};
            buckets_[key(c)].push_back(i);
        }
    }

    [[nodiscard]] const Mat3& projector() const { return n_v_; }

    /// Exact argmin of horizontal_distance2 with ties to the lowest index.
    [[nodiscard]] std::pair<std::size_t, double> nearest(const Vec3& x) const {
        const auto c = cell_index(x);
        std::size_t best = std::numeric_limits<std::size_t>::max();
        double best_d = std::numeric_limits<double>::infinity();
        const long max_ring = std::max({std::abs(c.first - lo_.first), std::abs(c.first - hi_.first),
                                        std::abs(c.second - lo_.second), std::abs(c.second - hi_.second)});
        for (long ring = 0; ring <= max_ring; ++ring) {
            // Every point in this ring lies at least (ring - 1) cells away.
            if (ring >= 2 && std::pow((ring - 1) * cell_, 2) > best_d * (1.0 + 1e-9) + 1e-18) {
                break;
            }
            for (long du = -ring; du <= ring; ++du) {
                for (long dv = -ring; dv <= ring; ++dv) {
                    if (std::max(std::abs(du), std::abs(dv)) != ring) {
                        continue;
                    }
                    const auto it = buckets_.find(key({c.first + du, c.second + dv}));
                    if (it == buckets_.end()) {
                        continue;
                    }
                    for (std::size_t i : it->second) {
                        const double d = horizontal_distance2(n_v_, x, cloud_.points[i]);
                        if (d < best_d || (d == best_d && i < best)) {
                            best_d = d;
                            best = i;
                        }
                    }
                }
            }
        }
        return {best, best_d};
    }

private:
    [[nodiscard]] std::pair<long, long> cell_index(const Vec3& x) const {
        return {static_cast<long>(std::floor(x.dot(u_) / cell_)), static_cast<long>(std::floor(x.dot(v_) / cell_))};
    }
    static std::int64_t key(std::pair<long, long> c) {
        return (static_cast<std::int64_t>(c.first) << 32) ^ (static_cast<std::int64_t>(c.second) & 0xffffffff);
    }

    const SurfaceCloud& cloud_;
    Mat3 n_v_;
    double cell_;
    Vec3 u_;
    Vec3 v_;
    std::unordered_map<std::int64_t, std::vector<std::size_t>> buckets_;
    std::pair<long, long> lo_{0, 0};
    std::pair<long, long> hi_{0, 0};
};

/// Vertical projection of each centerline point onto the nearest cloud point
/// in the horizontal plane, paired with that point's normal.
inline SurfaceProjection project_to_surface(const VesselCenterline& cl, const SurfaceCloud& cloud,
                                            const Vec3& n_zb = Vec3::UnitZ(), double cell = 0.004) {
    cloud.validate();
    if (std::abs(n_zb.norm() - 1.0) > 1e-9) {
        throw InvalidArgument("projection axis must be a unit vector");
    }
    const HorizontalGrid grid(cloud, n_zb, cell);
    SurfaceProjection out;
    for (const Vec3& p : cl.points) {
        const auto [i, d2] = grid.nearest(p);
        out.waypoints.points.push_back(cloud.points[i]);
        out.waypoints.normals.push_back(cloud.normals[i]);
        out.indices.push_back(i);
        out.residuals.push_back(std::sqrt(d2));
        out.gap_warning = out.gap_warning || std::sqrt(d2) > max_projection_gap;
    }
    return out;
}

/// Per-slice lateral centroid of the cloud between start and end, shifted by
/// lateral_bias. Waypoint height and normal come from the nearest cloud samples.
inline WaypointSet coarse_path(const SurfaceCloud& cloud, const Vec3& start, const Vec3& end, double lateral_bias,
                               double spacing = 0.002, const Vec3& n_zb = Vec3::UnitZ()) {
    cloud.validate();
    if (!(spacing > 0.0) || spacing > 0.005) {
        throw InvalidArgument("coarse path spacing must lie in (0, 5] mm");
    }
    const Mat3 n_v = Mat3::Identity() - n_zb * n_zb.transpose();
    const Vec3 axis_raw = n_v * (end - start);
    const double length = axis_raw.norm();
    if (length < 10.0 * spacing) {
        throw InvalidArgument("coarse path start and end are too close");
    }
    const Vec3 axis = axis_raw / length;
    // Lateral direction fixed by the axis line, not its orientation, so a reversed
    // request yields the same geometry.
    const int dom = [&] {
        int k = 0;
        axis.cwiseAbs().maxCoeff(&k);
        return k;
    }();
    const Vec3 canon = axis[dom] >= 0.0 ? axis : Vec3(-axis);
    const Vec3 lateral = n_zb.cross(canon).normalized();

    const std::size_t n_slices = static_cast<std::size_t>(std::ceil(length / spacing - 1e-9)) + 1;
    std::vector<std::vector<std::size_t>> slices(n_slices);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const double t = (cloud.points[i] - start).dot(axis) / length * static_cast<double>(n_slices - 1);
        const long k = std::lround(t);
        if (k >= 0 && k < static_cast<long>(n_slices) && std::abs(t - static_cast<double>(k)) * length /
                                                                  static_cast<double>(n_slices - 1) <=
                                                              spacing / 2.0) {
            slices[static_cast<std::size_t>(k)].push_back(i);
        }
    }

    WaypointSet w;
    for (std::size_t k = 0; k < n_slices; ++k) {
        const auto& idx = slices[k];
        if (idx.empty()) {
            throw SparseCloudError(k);
        }
        const double frac = static_cast<double>(k) / static_cast<double>(n_slices - 1);
        const Vec3 base = start + frac * (end - start);
        double centroid = 0.0;
        for (std::size_t i : idx) {
            centroid += (cloud.points[i] - base).dot(lateral);
        }
        centroid /= static_cast<double>(idx.size());
        const Vec3 target = n_v * base + (centroid + lateral_bias) * lateral;

        // Inverse-distance blend of the four horizontally nearest samples.
        std::vector<std::pair<double, std::size_t>> near;
        near.reserve(idx.size());
        for (std::size_t i : idx) {
            near.emplace_back(horizontal_distance2(n_v, cloud.points[i], target), i);
        }
        const std::size_t m = std::min<std::size_t>(4, near.size());
        std::partial_sort(near.begin(), near.begin() + static_cast<long>(m), near.end());
        double wsum = 0.0;
        double height = 0.0;
        Vec3 normal = Vec3::Zero();
        for (std::size_t j = 0; j < m; ++j) {
            const double wt = 1.0 / (near[j].first + 1e-10);
            wsum += wt;
            height += wt * cloud.points[near[j].second].dot(n_zb);
            normal += wt * cloud.normals[near[j].second];
        }
        w.points.push_back(target + (height / wsum) * n_zb);
        w.normals.push_back(normal.normalized());
    }
    return w;
}

/// One image tick of a sweep: path coordinate, probe pose and the vessel
/// centroid in {B} when one was detected.
struct SweepSample {
    long frame_id{0};
    double s{0.0};
    Pose pose;
    std::optional<Vec3> centroid;
    std::optional<PixelCoord> pixel;
};

struct OptimizeOptions {
    double bin_length{0.003};  // centroids are averaged over this much path before projection
    double delta_p{1e-3};
    int seed_index{-1};
    Vec3 n_zb{Vec3::UnitZ()};
    FitOptions fit{};
};

struct OptimizeResult {
    FittedPath path;
    VesselCenterline centerline;
    SurfaceProjection projection;
};

/// Chain the sweep's centroids, project them onto the surface and refit.
inline OptimizeResult optimize_path_detailed(const FittedPath& initial, const std::vector<SweepSample>& sweep,
                                             const SurfaceCloud& cloud, const OptimizeOptions& opt = {}) {
    (void)initial;  // the sweep already carries the poses sampled along it
    std::vector<FrameDetections> frames;
    frames.reserve(sweep.size());
    for (const auto& smp : sweep) {
        FrameDetections f;
        f.frame_id = smp.frame_id;
        if (smp.centroid) {
            f.candidates.push_back(*smp.centroid);
        }
        frames.push_back(std::move(f));
    }
    OptimizeResult out;
    out.centerline = chain_centroids(frames, opt.seed_index);
    if (out.centerline.size() < 10) {
        throw InsufficientObservationsError(out.centerline.size());
    }

    // Average runs of centroids so image-rate jitter does not reach the fit.
    const Mat3 n_v = Mat3::Identity() - opt.n_zb * opt.n_zb.transpose();
    VesselCenterline binned;
    Vec3 acc = Vec3::Zero();
    std::size_t count = 0;
    double run = 0.0;
    for (std::size_t i = 0; i < out.centerline.size(); ++i) {
        if (i > 0) {
            run += (n_v * (out.centerline.points[i] - out.centerline.points[i - 1])).norm();
        }
        acc += out.centerline.points[i];
        ++count;
        if (run >= opt.bin_length || i + 1 == out.centerline.size()) {
            binned.points.push_back(acc / static_cast<double>(count));
            binned.source_frame_ids.push_back(out.centerline.source_frame_ids[i]);
            acc.setZero();
            count = 0;
            run = 0.0;
        }
    }

    out.projection = project_to_surface(binned, cloud, opt.n_zb);
    WaypointSet w;
    for (std::size_t i = 0; i < out.projection.waypoints.size(); ++i) {
        const Vec3& p = out.projection.waypoints.points[i];
        if (!w.points.empty() && (p - w.points.back()).norm() < 1e-9) {
            continue;
        }
        w.points.push_back(p);
        w.normals.push_back(out.projection.waypoints.normals[i]);
    }
    if (w.size() < 2) {
        throw InsufficientObservationsError(w.size());
    }
    out.path = fit_scan_path(w, opt.delta_p, opt.fit);
    return out;
}

inline FittedPath optimize_path(const FittedPath& initial, const std::vector<SweepSample>& sweep,
                                const SurfaceCloud& cloud, const OptimizeOptions& opt = {}) {
    return optimize_path_detailed(initial, sweep, cloud, opt).path;
}

}  // namespace dvtscan
