#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "geomath.hpp"

namespace dvtscan {

/// Ordered scan waypoints with per-point probe-axis normals.
///
/// Normals point into the scanned surface: they become the probe's z axis.
struct WaypointSet {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    std::string frame_id{"base"};

    [[nodiscard]] std::size_t size() const { return points.size(); }

    void validate() const {
        if (points.size() != normals.size()) {
            throw InvalidArgument("waypoint and normal counts differ");
        }
        if (points.size() < 2) {
            throw InvalidArgument("a waypoint set needs at least two entries");
        }
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (!points[i].allFinite() || !normals[i].allFinite()) {
                throw InvalidArgument("non-finite waypoint " + std::to_string(i));
            }
            if (std::abs(normals[i].norm() - 1.0) > 1e-6) {
                throw InvalidArgument("normal " + std::to_string(i) + " is not unit length");
            }
            if (i > 0 && (points[i] - points[i - 1]).norm() < 1e-12) {
                throw DegenerateSegmentError(i - 1);
            }
        }
    }
};

struct ArcLengthProfile {
    std::vector<double> s;  // normalized, s.front() == 0, s.back() == 1
    double s_N{0.0};        // total length, m
};

/// Normalized accumulated arc length over a polyline (Euclidean increments).
inline ArcLengthProfile accumulate_arclength(std::span<const Vec3> points) {
    if (points.size() < 2) {
        throw InvalidArgument("arc length needs at least two points");
    }
    std::vector<double> cum(points.size(), 0.0);
    for (std::size_t k = 1; k < points.size(); ++k) {
        const double d = (points[k] - points[k - 1]).norm();
        if (d < 1e-12) {
            throw DegenerateSegmentError(k - 1);
        }
        cum[k] = cum[k - 1] + d;
    }
    ArcLengthProfile out;
    out.s_N = cum.back();
    out.s.resize(cum.size());
    for (std::size_t k = 0; k < cum.size(); ++k) {
        out.s[k] = cum[k] / out.s_N;
    }
    out.s.back() = 1.0;
    return out;
}

/// Inserts linearly interpolated points (normals on the great circle) so no gap exceeds delta_p.
inline WaypointSet densify_waypoints(const WaypointSet& w, double delta_p) {
    if (!(delta_p > 0.0)) {
        throw InvalidArgument("densification threshold must be positive");
    }
    WaypointSet out;
    out.frame_id = w.frame_id;
    if (w.points.empty()) {
        return out;
    }
    out.points.push_back(w.points.front());
    out.normals.push_back(w.normals.front().normalized());
    for (std::size_t i = 0; i + 1 < w.points.size(); ++i) {
        const Vec3& a = w.points[i];
        const Vec3& b = w.points[i + 1];
        const double gap = (b - a).norm();
        if (gap > delta_p) {
            // Small slack so an exact multiple of delta_p is not split once more.
            const auto n = static_cast<std::size_t>(std::ceil(gap / delta_p - 1e-9));
            const Vec3 na = w.normals[i].normalized();
            const Vec3 nb = w.normals[i + 1].normalized();
            for (std::size_t j = 1; j < n; ++j) {
                const double t = static_cast<double>(j) / static_cast<double>(n);
                out.points.push_back(a + t * (b - a));
                out.normals.push_back(slerp_direction(na, nb, t));
            }
        }
        out.points.push_back(b);
        out.normals.push_back(w.normals[i + 1].normalized());
    }
    return out;
}

/// Truncated Gaussian kernels, evenly spaced on [0, 1].
///
/// psi_i(s) = exp(-h (s - c_i)^2 / sigma^2) for |s - c_i| <= theta * sigma, zero beyond,
/// with sigma = 1 / (K - 1).
class TGFBasis {
public:
    TGFBasis() : TGFBasis(41) {}

    explicit TGFBasis(std::size_t count, double h = 3.0, double theta = 3.5)
        : count_(count), h_(h), theta_(theta) {
        if (count < 2) {
            throw InvalidArgument("TGF basis needs at least two kernels");
        }
        if (!(h > 0.0) || !(theta > 0.0)) {
            throw InvalidArgument("TGF shape and truncation must be positive");
        }
        sigma_ = 1.0 / static_cast<double>(count - 1);
    }

    [[nodiscard]] std::size_t size() const { return count_; }
    [[nodiscard]] double h() const { return h_; }
    [[nodiscard]] double theta() const { return theta_; }
    [[nodiscard]] double width_sigma() const { return sigma_; }
    [[nodiscard]] double center(std::size_t i) const { return static_cast<double>(i) * sigma_; }

    [[nodiscard]] double activation(std::size_t i, double s) const {
        const double d = s - center(i);
        if (std::abs(d) > theta_ * sigma_) {
            return 0.0;
        }
        return std::exp(-h_ * d * d / (sigma_ * sigma_));
    }

    /// Index range [first, last] of kernels whose support may contain s.
    [[nodiscard]] std::pair<std::size_t, std::size_t> support_range(double s) const {
        const double lo = std::floor((s - theta_ * sigma_) / sigma_);
        const double hi = std::ceil((s + theta_ * sigma_) / sigma_);
        const auto first = static_cast<std::size_t>(std::max(0.0, lo));
        const auto last = static_cast<std::size_t>(
            std::clamp(hi, 0.0, static_cast<double>(count_ - 1)));
        return {std::min(first, count_ - 1), last};
    }

    /// Normalized nonlinear term u(s, w) / M(s): sum psi_i w_i / sum psi_i.
    template <typename Weights>
    [[nodiscard]] double blend(const Weights& w, double s) const {
        const auto [first, last] = support_range(s);
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = first; i <= last; ++i) {
            const double psi = activation(i, s);
            num += psi * w(static_cast<Eigen::Index>(i));
            den += psi;
        }
        return den > 0.0 ? num / den : 0.0;
    }

private:
    std::size_t count_;
    double h_;
    double theta_;
    double sigma_{};
};

/// M(s) = s (1 - exp(-a (1 - s))): vanishes at both ends of the path.
inline double modulation(double s, double a) { return s * (1.0 - std::exp(-a * (1.0 - s))); }

/// Per-kernel locally weighted regression of X - ((1-s) X0 + s Xg) onto w_i M(s).
inline Eigen::VectorXd fit_curve_1d(std::span<const double> s, std::span<const double> x,
                                    const TGFBasis& basis, double modulation_a) {
    if (s.size() != x.size()) {
        throw InvalidArgument("fit_curve_1d: sample and target lengths differ");
    }
    if (2 * s.size() < basis.size()) {
        throw InvalidArgument("fit_curve_1d: need at least K/2 samples");
    }
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (!(s[k] >= 0.0 && s[k] <= 1.0) || (k > 0 && !(s[k] > s[k - 1]))) {
            throw InvalidArgument("fit_curve_1d: s must be strictly increasing in [0, 1]");
        }
    }
    const double x0 = x.front();
    const double xg = x.back();
    Eigen::VectorXd num = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
    Eigen::VectorXd den = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double m = modulation(s[k], modulation_a);
        const double r = x[k] - ((1.0 - s[k]) * x0 + s[k] * xg);
        const auto [first, last] = basis.support_range(s[k]);
        for (std::size_t i = first; i <= last; ++i) {
            const double psi = basis.activation(i, s[k]);
            num(static_cast<Eigen::Index>(i)) += psi * m * r;
            den(static_cast<Eigen::Index>(i)) += psi * m * m;
        }
    }
    Eigen::VectorXd w(static_cast<Eigen::Index>(basis.size()));
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (!(den(i) > 1e-300)) {
            throw UnderdeterminedKernelError(static_cast<std::size_t>(i));
        }
        w(i) = num(i) / den(i);
    }
    return w;
}

struct PathSample {
    Pose pose;
    bool clamped{false};  // s was outside [0, 1]
};

/// Learned 6D scan path parameterized by normalized arc length s in [0, 1].
struct FittedPath {
    Eigen::Matrix<double, 3, Eigen::Dynamic> pos_weights;
    Eigen::Matrix<double, 3, Eigen::Dynamic> ort_weights;
    Vec3 x0{Vec3::Zero()};
    Vec3 xg{Vec3::Zero()};
    Vec3 e_q0{Vec3::Zero()};
    Vec3 e_qg{Vec3::Zero()};
    UnitQuaternion q_goal{};
    double s_N{0.0};
    double modulation_a{25.0};
    TGFBasis basis_p{41};
    TGFBasis basis_q{81};

    [[nodiscard]] Vec3 position(double s) const {
        const double m = modulation(s, modulation_a);
        Vec3 out = (1.0 - s) * x0 + s * xg;
        if (m != 0.0) {
            for (int a = 0; a < 3; ++a) {
                out[a] += m * basis_p.blend(pos_weights.row(a).transpose(), s);
            }
        }
        return out;
    }

    /// Goal-relative orientation deviation e_Q(s).
    [[nodiscard]] Vec3 orientation_deviation(double s) const {
        const double m = modulation(s, modulation_a);
        Vec3 e = (1.0 - s) * e_q0 + s * e_qg;
        if (m != 0.0) {
            for (int a = 0; a < 3; ++a) {
                e[a] += m * basis_q.blend(ort_weights.row(a).transpose(), s);
            }
        }
        return e;
    }

    [[nodiscard]] UnitQuaternion orientation(double s) const {
        return quat_exp(orientation_deviation(s) / 2.0).conj() * q_goal;
    }

    [[nodiscard]] PathSample evaluate(double s) const {
        PathSample out;
        if (s < 0.0 || s > 1.0) {
            out.clamped = true;
            s = std::clamp(s, 0.0, 1.0);
        }
        out.pose.position = position(s);
        out.pose.orientation = orientation(s);
        return out;
    }

    [[nodiscard]] Pose pose_at(double s) const { return evaluate(s).pose; }
};

inline PathSample eval_path(const FittedPath& p, double s) { return p.evaluate(s); }

/// Probe frames [n_x | n_y | normal] from the path tangent, one per sample.
///
/// The tangent is a forward difference over delta_s of arc length; the final
/// samples fall back to a backward difference so the step stays inside [0, 1].
template <typename PositionFn>
std::vector<UnitQuaternion> frames_from_path(const PositionFn& position, std::span<const double> s_values,
                                             std::span<const Vec3> normals, double delta_s, double s_N) {
    if (s_values.size() != normals.size()) {
        throw InvalidArgument("frames_from_path: sample and normal counts differ");
    }
    if (!(delta_s > 0.0) || !(s_N > 0.0)) {
        throw InvalidArgument("frames_from_path: delta_s and s_N must be positive");
    }
    const double ds = delta_s / s_N;
    std::vector<UnitQuaternion> out;
    out.reserve(s_values.size());
    for (std::size_t i = 0; i < s_values.size(); ++i) {
        const double s = s_values[i];
        const Vec3 tangent = (s + ds <= 1.0) ? Vec3(position(s + ds) - position(s))
                                             : Vec3(position(s) - position(std::max(0.0, s - ds)));
        const Vec3 n = normals[i].normalized();
        const Vec3 y_raw = n.cross(tangent);
        if (y_raw.norm() < 1e-9 * std::max(tangent.norm(), 1e-300) || tangent.norm() < 1e-15) {
            throw DegenerateFrameError(i);
        }
        const Vec3 y = y_raw.normalized();
        const Vec3 x = y.cross(n).normalized();
        Mat3 r;
        r.col(0) = x;
        r.col(1) = y;
        r.col(2) = n;
        out.push_back(UnitQuaternion::from_rotation(r));
    }
    return out;
}

struct FitOptions {
    std::size_t kernels_position{41};
    std::size_t kernels_orientation{81};
    double h{3.0};
    double theta{3.5};
    double modulation_a{25.0};
    double delta_s{0.0};  // tangent step in m; <= 0 means "use delta_p"
};

/// Densify, parameterize by arc length, fit positions, build frames, fit orientations.
inline FittedPath fit_scan_path(const WaypointSet& w, double delta_p = 1e-3, const FitOptions& opt = {}) {
    w.validate();
    const WaypointSet dense = densify_waypoints(w, delta_p);
    const ArcLengthProfile arc = accumulate_arclength(dense.points);
    const std::size_t n = dense.size();

    FittedPath path;
    path.s_N = arc.s_N;
    path.modulation_a = opt.modulation_a;
    path.basis_p = TGFBasis(opt.kernels_position, opt.h, opt.theta);
    path.basis_q = TGFBasis(opt.kernels_orientation, opt.h, opt.theta);
    path.x0 = dense.points.front();
    path.xg = dense.points.back();

    path.pos_weights.resize(3, static_cast<Eigen::Index>(path.basis_p.size()));
    std::vector<double> axis(n);
    for (int a = 0; a < 3; ++a) {
        for (std::size_t k = 0; k < n; ++k) {
            axis[k] = dense.points[k][a];
        }
        path.pos_weights.row(a) = fit_curve_1d(arc.s, axis, path.basis_p, opt.modulation_a).transpose();
    }

    const double delta_s = opt.delta_s > 0.0 ? opt.delta_s : delta_p;
    const std::vector<UnitQuaternion> frames = frames_from_path(
        [&path](double s) { return path.position(s); }, arc.s, dense.normals, delta_s, arc.s_N);

    // Frames were built on the densified samples, so every orientation gap is
    // already within delta_p and no further slerp insertion is needed.
    path.q_goal = frames.back();
    std::vector<Vec3> e_q(n);
    for (std::size_t k = 0; k < n; ++k) {
        e_q[k] = 2.0 * quat_log(path.q_goal * frames[k].conj());
    }
    path.e_q0 = e_q.front();
    path.e_qg = e_q.back();

    path.ort_weights.resize(3, static_cast<Eigen::Index>(path.basis_q.size()));
    for (int a = 0; a < 3; ++a) {
        for (std::size_t k = 0; k < n; ++k) {
            axis[k] = e_q[k][a];
        }
        path.ort_weights.row(a) = fit_curve_1d(arc.s, axis, path.basis_q, opt.modulation_a).transpose();
    }
    return path;
}

/// RMS distance between the fitted positions and the (densified) input samples.
inline double reconstruction_rms(const FittedPath& path, const WaypointSet& w, double delta_p = 1e-3) {
    const WaypointSet dense = densify_waypoints(w, delta_p);
    const ArcLengthProfile arc = accumulate_arclength(dense.points);
    double acc = 0.0;
    for (std::size_t k = 0; k < dense.size(); ++k) {
        acc += (path.position(arc.s[k]) - dense.points[k]).squaredNorm();
    }
    return std::sqrt(acc / static_cast<double>(dense.size()));
}

}  // namespace dvtscan
