#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "errors.hpp"
#include "geomath.hpp"
#include "pathfit.hpp"

namespace dvtscan {

struct InteractionParams {
    double k_pi{50.0};   // N*s: push force per unit ds/dt
    double k_fi{2.0};    // s: push force per unit df_d/dt
    double d_x{1.0};     // N
    double d_z{1.0};     // N
    double f_ix_lo{-8.0};
    double f_ix_hi{8.0};
    double f_iz_lo{-8.0};
    double f_iz_hi{8.0};
    double f_min{0.0};
    double f_max{15.0};

    static constexpr double system_force_limit = 15.0;

    void validate() const {
        if (!(k_pi > 0.0) || !(k_fi > 0.0)) {
            throw InvalidArgument("interaction admittances must be positive");
        }
        if (d_x < 0.0 || d_z < 0.0) {
            throw InvalidArgument("dead-zones must be non-negative");
        }
        if (!(f_ix_lo < f_ix_hi) || !(f_iz_lo < f_iz_hi) || !(f_min < f_max)) {
            throw InvalidArgument("interaction bounds must satisfy lo < hi");
        }
        if (f_min < 0.0 || f_max > system_force_limit) {
            throw InvalidArgument("desired-force bounds must lie within [0, 15] N");
        }
    }
};

struct VFState {
    double s{0.0};
    double f_d{0.0};
    bool pedal{false};
};

/// Operator force in {P}: fx along the path direction, fz along the probe axis.
struct InteractionForce {
    double fx{0.0};
    double fz{0.0};
};

inline double dead_zone(double f, double d) {
    if (f > d) {
        return f - d;
    }
    if (f < -d) {
        return f + d;
    }
    return 0.0;
}

/// One interaction tick. Pedal released: push along x moves s. Pedal pressed:
/// push along z changes the desired force. Exactly one of (s, f_d) can change.
inline VFState vf_step(const VFState& st, const InteractionForce& fi, const InteractionParams& p, double dt) {
    if (!(dt > 0.0)) {
        throw InvalidArgument("interaction step needs dt > 0");
    }
    VFState out = st;
    if (!st.pedal) {
        const double s_dot = dead_zone(std::clamp(fi.fx, p.f_ix_lo, p.f_ix_hi), p.d_x) / p.k_pi;
        out.s = std::clamp(st.s + s_dot * dt, 0.0, 1.0);
    } else {
        const double fd_dot = dead_zone(std::clamp(fi.fz, p.f_iz_lo, p.f_iz_hi), p.d_z) / p.k_fi;
        out.f_d = std::clamp(st.f_d + fd_dot * dt, p.f_min, p.f_max);
    }
    return out;
}

/// Pose target on the path at the current arc-length coordinate plus the force target.
inline std::pair<Pose, double> fixture_target(const FittedPath& path, const VFState& st) {
    return {path.pose_at(st.s), st.f_d};
}

}  // namespace dvtscan
