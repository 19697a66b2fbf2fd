#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "../controller.hpp"
#include "../pathfit.hpp"
#include "../planner.hpp"
#include "../vfixture.hpp"
#include "imaging.hpp"
#include "phantom.hpp"
#include "robot.hpp"
#include "trace.hpp"

namespace dvtscan::sim {

struct Rates {
    double dt{1e-3};             // control tick, s
    int image_divisor{33};       // ~30 Hz
    int interaction_divisor{20}; // 50 Hz
};

struct SweepSettings {
    double f_d{6.0};
    double speed{0.015};          // m/s along the path
    double approach_height{0.01}; // start this far above the path start, along the probe axis
    double dwell{0.5};            // s between contact establishment and path motion
    double contact_timeout{5.0};
    bool imaging{true};
};

struct PhriSettings {
    double initial_f_d{3.0};
    double dwell{0.5};
};

struct PlannerSettings {
    Vec3 start{0.50, -0.18, 0.0};
    Vec3 end{0.50, 0.18, 0.0};
    double lateral_bias{0.0};
    double spacing{0.002};
    double cloud_spacing{0.001};
    double cloud_margin{0.004};
    double delta_p{1e-3};
};

struct SensorSettings {
    double force_std{0.0};     // N, zero-mean noise on the measured axial force
    double cutoff_hz{10.0};    // first-order low-pass on the force channel; 0 disables
    std::uint64_t seed{0};
};

struct ScenarioConfig {
    PhantomSpec phantom{};
    double probe_length{0.12};
    RobotModel robot{RobotModel::panda_like(0.12)};
    ControllerGains gains{ControllerGains::defaults()};
    ForceLoop force{};
    InteractionParams interaction{};
    UsFrameGeometry image{};
    Rates rates{};
    SweepSettings sweep{};
    PhriSettings phri{};
    PlannerSettings planner{};
    SensorSettings sensor{};
    std::string config_hash{"0000000000000000"};
};

/// Replayed operator input: piecewise-linear forces, pedal held from each row.
struct OperatorProfile {
    struct Row {
        double t{0.0};
        bool pedal{false};
        double fx{0.0};
        double fy{0.0};
        double fz{0.0};
    };
    std::vector<Row> rows;

    void validate() const {
        if (rows.empty()) {
            throw InvalidArgument("operator profile is empty");
        }
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const Row& r = rows[i];
            if (i > 0 && !(r.t > rows[i - 1].t)) {
                throw InvalidArgument("operator profile times must increase strictly (row " + std::to_string(i + 1) + ")");
            }
            if (std::abs(r.fx) > 30.0 || std::abs(r.fy) > 30.0 || std::abs(r.fz) > 30.0) {
                throw InvalidArgument("operator profile force beyond 30 N (row " + std::to_string(i + 1) + ")");
            }
        }
    }

    [[nodiscard]] double duration() const { return rows.back().t; }

    [[nodiscard]] Row at(double t) const {
        if (t <= rows.front().t) {
            Row r = rows.front();
            r.t = t;
            return r;
        }
        if (t >= rows.back().t) {
            Row r = rows.back();
            r.t = t;
            return r;
        }
        std::size_t i = 0;
        while (rows[i + 1].t <= t) {
            ++i;
        }
        const Row& a = rows[i];
        const Row& b = rows[i + 1];
        const double u = (t - a.t) / (b.t - a.t);
        return {t, a.pedal, a.fx + u * (b.fx - a.fx), a.fy + u * (b.fy - a.fy), a.fz + u * (b.fz - a.fz)};
    }
};

/// Robot, phantom, force loop and HFMC advanced together one control tick at a time.
class Plant {
public:
    Plant(const ScenarioConfig& cfg, const Phantom& ph, const FittedPath& path)
        : cfg_(cfg), ph_(ph), path_(path), loop_(cfg.force), rng_(cfg.sensor.seed) {
        cfg.robot.validate();
        cfg.force.landing.validate();
        cfg.image.validate();
        if (!(cfg.rates.dt > 0.0) || cfg.rates.image_divisor <= 0 || cfg.rates.interaction_divisor <= 0) {
            throw ConfigError("rates must be positive");
        }
    }

    /// Place the probe above the path start, pointing along the start normal.
    void initialize(double approach_height) {
        Pose start = path_.pose_at(0.0);
        start.position -= approach_height * start.z_axis();
        const Vec7 q = solve_ik(cfg_.robot, start, downward_seed(start.position));
        state_ = make_state(cfg_.robot, q);
        target_.q_posture = q;
        target_.x_d = path_.pose_at(0.0).position;
        target_.q_d = start.orientation;
        target_.anchor(state_);
        loop_.landing.alpha = 0.0;
    }

    struct TickInput {
        double s{0.0};
        double f_d{0.0};
        Vec3 operator_force_p{Vec3::Zero()};
        bool pedal{false};
        bool image{false};
    };

    struct TickOutput {
        TraceRecord record;
        ContactState contact;
        std::optional<UsFrame> frame;
    };

    TickOutput tick(const TickInput& in) {
        TickOutput out;
        const Pose& pose = state_.ee_pose;
        const FrameTransform t_bp = pose.transform();
        out.contact = contact_state(pose, ph_);
        const Wrench load_p{-out.contact.wrench_p.force, Vec3::Zero()};
        const double f_true = measured_axial_force(load_p, t_bp.twist(), pose.z_axis());
        double f = f_true;
        if (cfg_.sensor.force_std > 0.0) {
            f += noise_(rng_) * cfg_.sensor.force_std;
        }
        if (cfg_.sensor.cutoff_hz > 0.0) {
            const double tau = 1.0 / (2.0 * std::numbers::pi * cfg_.sensor.cutoff_hz);
            filtered_ += cfg_.rates.dt / (tau + cfg_.rates.dt) * (f - filtered_);
            f = filtered_;
        }

        const Pose target = path_.pose_at(in.s);
        TraceRecord& rec = out.record;
        rec.t = static_cast<double>(ticks_) * cfg_.rates.dt;
        rec.q = state_.q;
        rec.pose = pose;
        rec.f = f;
        rec.f_d = in.f_d;
        rec.e_f = f - in.f_d;
        rec.s = in.s;
        rec.pedal = in.pedal;
        const Mat3 rt = target.rotation();
        rec.lateral_deviation = std::abs((pose.position - target.position).dot(rt.col(1))) * 1e3;
        rec.lumen_area = lumen_area(std::max(f_true, 0.0), ph_.segment_under(pose.position));
        if (in.image) {
            out.frame = virtual_us_frame(pose, ph_, cfg_.image, std::max(f_true, 0.0), out.contact.penetration);
            if (out.frame->centroid) {
                rec.centroid_deviation = centroid_deviation_mm(*out.frame->centroid, cfg_.image);
            }
        }

        const double v_f = loop_.step(f, in.f_d, cfg_.rates.dt);
        rec.alpha = loop_.landing.alpha;
        target_.f_d = in.f_d;
        target_.x_d = target.position;
        target_.q_d = target.orientation;
        const Vec7 tau = hfmc_torque(state_, target_, v_f, cfg_.gains, cfg_.rates.dt);

        Wrench ext;
        ext.force = out.contact.force_b + pose.rotation() * in.operator_force_p;
        const StepResult step = robot_step(cfg_.robot, state_, tau, ext, cfg_.rates.dt, ticks_);
        state_ = step.state;
        saturated_ = saturated_ || step.saturated;
        ++ticks_;
        return out;
    }

    [[nodiscard]] long ticks() const { return ticks_; }
    [[nodiscard]] double time() const { return static_cast<double>(ticks_) * cfg_.rates.dt; }
    [[nodiscard]] const RobotState& state() const { return state_; }
    [[nodiscard]] bool saturated() const { return saturated_; }

private:
    const ScenarioConfig& cfg_;
    const Phantom& ph_;
    const FittedPath& path_;
    ForceLoop loop_;
    RobotState state_{};
    ForceTrackingTarget target_{};
    long ticks_{0};
    bool saturated_{false};
    double filtered_{0.0};
    std::mt19937_64 rng_;
    std::normal_distribution<double> noise_{0.0, 1.0};
};

struct SweepResult {
    std::vector<TraceRecord> trace;
    std::vector<SweepSample> samples;
    double t_contact{std::nan("")};
};

/// Soft approach, dwell, then constant-speed traversal of the path at fixed f_d.
inline SweepResult run_sweep(const ScenarioConfig& cfg, const Phantom& ph, const FittedPath& path) {
    const SweepSettings& sw = cfg.sweep;
    if (!(sw.speed > 0.0) || sw.f_d < 0.0 || sw.f_d > InteractionParams::system_force_limit) {
        throw ConfigError("sweep needs speed > 0 and 0 <= f_d <= 15 N");
    }
    Plant plant(cfg, ph, path);
    plant.initialize(sw.approach_height);

    SweepResult out;
    double s = 0.0;
    long frame_id = 0;
    const double ds = sw.speed / path.s_N * cfg.rates.dt;
    const long max_ticks = static_cast<long>((sw.contact_timeout + sw.dwell + path.s_N / sw.speed + 5.0) / cfg.rates.dt);
    while (true) {
        Plant::TickInput in;
        in.s = s;
        in.f_d = sw.f_d;
        in.image = sw.imaging && plant.ticks() % cfg.rates.image_divisor == 0;
        const auto tick = plant.tick(in);
        out.trace.push_back(tick.record);
        if (tick.frame) {
            SweepSample smp;
            smp.frame_id = frame_id++;
            smp.s = s;
            smp.pose = tick.record.pose;
            smp.centroid = tick.frame->centroid_world;
            smp.pixel = tick.frame->centroid;
            out.samples.push_back(smp);
        }
        if (std::isnan(out.t_contact) && tick.record.alpha >= 0.5) {
            out.t_contact = tick.record.t;
        }
        if (std::isnan(out.t_contact)) {
            if (tick.record.t > sw.contact_timeout) {
                throw ScenarioError("contact not established within " + std::to_string(sw.contact_timeout) + " s");
            }
            continue;
        }
        if (s >= 1.0) {
            break;
        }
        if (tick.record.t >= out.t_contact + sw.dwell) {
            s = std::min(1.0, s + ds);
        }
        if (plant.ticks() > max_ticks) {
            throw ScenarioError("sweep did not finish in time");
        }
    }
    return out;
}

struct PhriResult {
    std::vector<TraceRecord> trace;
    double t_contact{std::nan("")};
    double t_profile_start{std::nan("")};
};

/// Operator-driven session: 50 Hz fixture updates, 1 kHz force/motion control.
inline PhriResult run_phri(const ScenarioConfig& cfg, const Phantom& ph, const FittedPath& path,
                           const OperatorProfile& profile) {
    profile.validate();
    cfg.interaction.validate();
    Plant plant(cfg, ph, path);
    plant.initialize(cfg.sweep.approach_height);

    PhriResult out;
    VFState vf{0.0, std::clamp(cfg.phri.initial_f_d, cfg.interaction.f_min, cfg.interaction.f_max), false};
    const double dt_i = cfg.rates.dt * cfg.rates.interaction_divisor;
    OperatorProfile::Row op{};
    while (true) {
        const double t = plant.time();
        const bool running = !std::isnan(out.t_profile_start);
        if (running) {
            const double tp = t - out.t_profile_start;
            if (tp > profile.duration()) {
                break;
            }
            op = profile.at(tp);
            if (plant.ticks() % cfg.rates.interaction_divisor == 0) {
                vf.pedal = op.pedal;
                vf = vf_step(vf, {op.fx, op.fz}, cfg.interaction, dt_i);
            }
        }
        Plant::TickInput in;
        in.s = vf.s;
        in.f_d = vf.f_d;
        in.pedal = running && vf.pedal;
        in.operator_force_p = running ? Vec3(op.fx, op.fy, op.fz) : Vec3::Zero();
        const auto tick = plant.tick(in);
        out.trace.push_back(tick.record);
        if (std::isnan(out.t_contact) && tick.record.alpha >= 0.5) {
            out.t_contact = tick.record.t;
        }
        if (std::isnan(out.t_contact) && tick.record.t > cfg.sweep.contact_timeout) {
            throw ScenarioError("contact not established within " + std::to_string(cfg.sweep.contact_timeout) + " s");
        }
        if (!running && !std::isnan(out.t_contact) && plant.time() >= out.t_contact + cfg.phri.dwell) {
            // Align the profile clock with the interaction ticks.
            while (plant.ticks() % cfg.rates.interaction_divisor != 0) {
                Plant::TickInput hold = in;
                hold.pedal = false;
                out.trace.push_back(plant.tick(hold).record);
            }
            out.t_profile_start = plant.time();
        }
    }
    return out;
}

}  // namespace dvtscan::sim
