#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "pathfit.hpp"
#include "planner.hpp"
#include "sim/scenario.hpp"
#include "sim/trace.hpp"

namespace dvtscan::io {

using nlohmann::json;

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError(path, 0, "cannot open file");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InvalidArgument("cannot write " + path);
    }
    out << text;
    if (!out) {
        throw InvalidArgument("write failed for " + path);
    }
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v == 0.0 ? 0.0 : v);
    return buf;
}

// ---------------------------------------------------------------------------
// Point/normal text files: "px py pz nx ny nz" per line, '#' comments.
// A "# frame_id: <name>" comment names the frame the points live in.

struct PointNormalRows {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    std::string frame_id{"base"};
};

inline PointNormalRows parse_point_normals(std::istream& in, const std::string& name) {
    PointNormalRows out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) {
            continue;
        }
        if (line[first] == '#') {
            const auto key = line.find("frame_id:");
            if (key != std::string::npos) {
                std::istringstream v(line.substr(key + 9));
                v >> out.frame_id;
            }
            continue;
        }
        std::istringstream ls(line);
        double v[6];
        for (double& x : v) {
            if (!(ls >> x)) {
                throw ParseError(name, lineno, "expected six numbers 'px py pz nx ny nz'");
            }
        }
        std::string extra;
        if (ls >> extra) {
            throw ParseError(name, lineno, "unexpected trailing field '" + extra + "'");
        }
        const Vec3 n(v[3], v[4], v[5]);
        if (!(n.norm() > 0.0) || !Vec3(v[0], v[1], v[2]).allFinite() || !n.allFinite()) {
            throw ParseError(name, lineno, "non-finite point or zero normal");
        }
        out.points.emplace_back(v[0], v[1], v[2]);
        out.normals.push_back(n.normalized());
    }
    return out;
}

inline std::string format_point_normals(const std::vector<Vec3>& points, const std::vector<Vec3>& normals,
                                        const std::string& frame_id) {
    std::string out = "# frame_id: " + frame_id + "\n# px py pz nx ny nz\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Vec3& p = points[i];
        const Vec3& n = normals[i];
        out += fmt(p.x()) + ' ' + fmt(p.y()) + ' ' + fmt(p.z()) + ' ' + fmt(n.x()) + ' ' + fmt(n.y()) + ' ' +
               fmt(n.z()) + '\n';
    }
    return out;
}

inline WaypointSet read_waypoints(const std::string& path) {
    std::istringstream in(read_text(path));
    PointNormalRows rows = parse_point_normals(in, path);
    WaypointSet w{std::move(rows.points), std::move(rows.normals), rows.frame_id};
    if (w.size() < 2) {
        throw ParseError(path, 0, "a waypoint file needs at least two rows");
    }
    return w;
}

inline void write_waypoints(const std::string& path, const WaypointSet& w) {
    write_text(path, format_point_normals(w.points, w.normals, w.frame_id));
}

inline SurfaceCloud read_cloud(const std::string& path) {
    std::istringstream in(read_text(path));
    PointNormalRows rows = parse_point_normals(in, path);
    SurfaceCloud c{std::move(rows.points), std::move(rows.normals)};
    if (c.points.empty()) {
        throw ParseError(path, 0, "point cloud is empty");
    }
    return c;
}

inline void write_cloud(const std::string& path, const SurfaceCloud& c) {
    write_text(path, format_point_normals(c.points, c.normals, "base"));
}

// ---------------------------------------------------------------------------
// FittedPath as JSON.

inline json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

template <typename Row>
json row_json(const Row& r) {
    json a = json::array();
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        a.push_back(r(i));
    }
    return a;
}

inline json path_to_json(const FittedPath& p) {
    json j;
    j["format"] = "dvtscan-path-1";
    j["s_N"] = p.s_N;
    j["modulation_a"] = p.modulation_a;
    j["x0"] = vec_json(p.x0);
    j["xg"] = vec_json(p.xg);
    j["e_q0"] = vec_json(p.e_q0);
    j["e_qg"] = vec_json(p.e_qg);
    const Eigen::Vector4d q = p.q_goal.coeffs();
    j["q_goal"] = json::array({q(0), q(1), q(2), q(3)});
    j["basis_p"] = {{"K", p.basis_p.size()}, {"h", p.basis_p.h()}, {"theta", p.basis_p.theta()}};
    j["basis_q"] = {{"K", p.basis_q.size()}, {"h", p.basis_q.h()}, {"theta", p.basis_q.theta()}};
    j["pos_weights"] = json::array();
    j["ort_weights"] = json::array();
    for (int a = 0; a < 3; ++a) {
        j["pos_weights"].push_back(row_json(p.pos_weights.row(a)));
        j["ort_weights"].push_back(row_json(p.ort_weights.row(a)));
    }
    return j;
}

namespace detail {

inline Vec3 vec_from(const json& j, const std::string& key) {
    const json& a = j.at(key);
    if (!a.is_array() || a.size() != 3) {
        throw SchemaError("'" + key + "' must be a 3-element array");
    }
    return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

inline TGFBasis basis_from(const json& j) {
    return TGFBasis(j.at("K").get<std::size_t>(), j.at("h").get<double>(), j.at("theta").get<double>());
}

inline Eigen::Matrix<double, 3, Eigen::Dynamic> weights_from(const json& j, std::size_t k, const std::string& key) {
    const json& rows = j.at(key);
    if (!rows.is_array() || rows.size() != 3) {
        throw SchemaError("'" + key + "' must hold three rows");
    }
    Eigen::Matrix<double, 3, Eigen::Dynamic> w(3, static_cast<Eigen::Index>(k));
    for (int a = 0; a < 3; ++a) {
        if (rows[a].size() != k) {
            throw SchemaError("'" + key + "' row length does not match the basis size");
        }
        for (std::size_t i = 0; i < k; ++i) {
            w(a, static_cast<Eigen::Index>(i)) = rows[a][i].get<double>();
        }
    }
    return w;
}

}  // namespace detail

inline FittedPath path_from_json(const json& j) {
    try {
        if (j.value("format", "") != "dvtscan-path-1") {
            throw SchemaError("not a dvtscan path document");
        }
        FittedPath p;
        p.s_N = j.at("s_N").get<double>();
        p.modulation_a = j.at("modulation_a").get<double>();
        p.x0 = detail::vec_from(j, "x0");
        p.xg = detail::vec_from(j, "xg");
        p.e_q0 = detail::vec_from(j, "e_q0");
        p.e_qg = detail::vec_from(j, "e_qg");
        const json& q = j.at("q_goal");
        if (!q.is_array() || q.size() != 4) {
            throw SchemaError("'q_goal' must be a 4-element array");
        }
        p.q_goal = UnitQuaternion(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
        p.basis_p = detail::basis_from(j.at("basis_p"));
        p.basis_q = detail::basis_from(j.at("basis_q"));
        p.pos_weights = detail::weights_from(j, p.basis_p.size(), "pos_weights");
        p.ort_weights = detail::weights_from(j, p.basis_q.size(), "ort_weights");
        if (!(p.s_N > 0.0)) {
            throw SchemaError("path length s_N must be positive");
        }
        return p;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("path document: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw SchemaError(std::string("path document: ") + e.what());
    }
}

inline json parse_json(const std::string& text, const std::string& name) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // nlohmann reports a byte offset; turn it into a line number.
        const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
        const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n'));
        throw ParseError(name, line, "invalid JSON");
    }
}

inline FittedPath read_path(const std::string& path) { return path_from_json(parse_json(read_text(path), path)); }

inline void write_path(const std::string& path, const FittedPath& p) { write_text(path, path_to_json(p).dump(1) + "\n"); }

// ---------------------------------------------------------------------------
// Scenario configuration.
//
// Every section except "phantom" may be omitted and takes its defaults.
// Unknown keys are rejected so typos fail loudly.

namespace detail {

class Reader {
public:
    Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) {
            throw ConfigError(where_ + " must be an object");
        }
    }

    void num(const char* key, double& v) {
        seen_.push_back(key);
        if (const auto it = j_.find(key); it != j_.end()) {
            if (!it->is_number()) {
                throw ConfigError(where_ + "." + key + " must be a number");
            }
            v = it->get<double>();
        }
    }

    void integer(const char* key, int& v) {
        seen_.push_back(key);
        if (const auto it = j_.find(key); it != j_.end()) {
            if (!it->is_number_integer()) {
                throw ConfigError(where_ + "." + key + " must be an integer");
            }
            v = it->get<int>();
        }
    }

    void u64(const char* key, std::uint64_t& v) {
        seen_.push_back(key);
        if (const auto it = j_.find(key); it != j_.end()) {
            if (!it->is_number_unsigned()) {
                throw ConfigError(where_ + "." + key + " must be a non-negative integer");
            }
            v = it->get<std::uint64_t>();
        }
    }

    void boolean(const char* key, bool& v) {
        seen_.push_back(key);
        if (const auto it = j_.find(key); it != j_.end()) {
            if (!it->is_boolean()) {
                throw ConfigError(where_ + "." + key + " must be true or false");
            }
            v = it->get<bool>();
        }
    }

    template <typename Vec>
    void vec(const char* key, Vec& v) {
        seen_.push_back(key);
        if (const auto it = j_.find(key); it != j_.end()) {
            if (!it->is_array() || it->size() != static_cast<std::size_t>(v.size())) {
                throw ConfigError(where_ + "." + key + " must be an array of " + std::to_string(v.size()) + " numbers");
            }
            for (Eigen::Index i = 0; i < v.size(); ++i) {
                if (!(*it)[i].is_number()) {
                    throw ConfigError(where_ + "." + key + " must hold numbers");
                }
                v(i) = (*it)[i].get<double>();
            }
        }
    }

    void str(const char* key, std::string& v) {
        seen_.push_back(key);
        if (const auto it = j_.find(key); it != j_.end()) {
            if (!it->is_string()) {
                throw ConfigError(where_ + "." + key + " must be a string");
            }
            v = it->get<std::string>();
        }
    }

    void finish() const {
        for (const auto& [k, _] : j_.items()) {
            if (std::find(seen_.begin(), seen_.end(), k) == seen_.end()) {
                throw ConfigError("unknown key " + where_ + "." + k);
            }
        }
    }

private:
    const json& j_;
    std::string where_;
    std::vector<std::string> seen_;
};

}  // namespace detail

inline std::string force_law_name(ForceLawKind k) { return k == ForceLawKind::proposed ? "proposed" : "fundamental"; }

/// Fully resolved configuration document; the config hash is taken over its dump.
inline json config_to_json(const sim::ScenarioConfig& c) {
    const auto v7 = [](const Vec7& v) { return row_json(v); };
    const auto v6 = [](const Vec6& v) { return row_json(v); };
    json j;
    const sim::PhantomSpec& p = c.phantom;
    j["phantom"] = {{"center_x", p.center_x},
                    {"center_y", p.center_y},
                    {"length", p.length},
                    {"width", p.width},
                    {"base_height", p.base_height},
                    {"ridge_height", p.ridge_height},
                    {"bump_amplitude", p.bump_amplitude},
                    {"k_min", p.k_min},
                    {"k_max", p.k_max},
                    {"k_periods", p.k_periods},
                    {"grid_spacing", p.grid_spacing},
                    {"slab_thickness", p.slab_thickness},
                    {"vessel_depth", p.vessel_depth},
                    {"vessel_radius", p.vessel_radius},
                    {"vessel_meander", p.vessel_meander},
                    {"vessel_offset", p.vessel_offset},
                    {"thrombus_start", p.thrombus_start},
                    {"thrombus_end", p.thrombus_end},
                    {"thrombus_residual", p.thrombus_residual},
                    {"f_close", p.f_close}};
    j["robot"] = {{"probe_length", c.probe_length},
                  {"inertia", v7(c.robot.inertia)},
                  {"q_min", v7(c.robot.q_min)},
                  {"q_max", v7(c.robot.q_max)},
                  {"tau_max", v7(c.robot.tau_max)}};
    j["gains"] = {{"kp_c", v6(c.gains.kp_c)}, {"kp_q", v7(c.gains.kp_q)}, {"damping_ratio", c.gains.damping_ratio}};
    j["force"] = {{"law", force_law_name(c.force.kind)},
                  {"k_c", c.force.law.k_c},
                  {"k_s", c.force.law.k_s},
                  {"k_mf", c.force.law.k_mf},
                  {"k_f", c.force.law.k_f},
                  {"baseline_gain", c.force.baseline_gain},
                  {"f_lo", c.force.landing.f_lo},
                  {"f_hi", c.force.landing.f_hi},
                  {"k_alpha", c.force.landing.k_alpha},
                  {"v0", c.force.landing.v0}};
    const InteractionParams& ip = c.interaction;
    j["interaction"] = {{"k_pi", ip.k_pi},       {"k_fi", ip.k_fi},       {"d_x", ip.d_x},   {"d_z", ip.d_z},
                        {"f_ix_lo", ip.f_ix_lo}, {"f_ix_hi", ip.f_ix_hi}, {"f_iz_lo", ip.f_iz_lo},
                        {"f_iz_hi", ip.f_iz_hi}, {"f_min", ip.f_min},     {"f_max", ip.f_max}};
    j["image"] = {{"footprint", c.image.footprint},
                  {"depth", c.image.depth},
                  {"width", c.image.width},
                  {"height", c.image.height}};
    j["rates"] = {{"dt", c.rates.dt},
                  {"image_divisor", c.rates.image_divisor},
                  {"interaction_divisor", c.rates.interaction_divisor}};
    j["sweep"] = {{"f_d", c.sweep.f_d},
                  {"speed", c.sweep.speed},
                  {"approach_height", c.sweep.approach_height},
                  {"dwell", c.sweep.dwell},
                  {"contact_timeout", c.sweep.contact_timeout},
                  {"imaging", c.sweep.imaging}};
    j["phri"] = {{"initial_f_d", c.phri.initial_f_d}, {"dwell", c.phri.dwell}};
    j["planner"] = {{"start", vec_json(c.planner.start)},
                    {"end", vec_json(c.planner.end)},
                    {"lateral_bias", c.planner.lateral_bias},
                    {"spacing", c.planner.spacing},
                    {"cloud_spacing", c.planner.cloud_spacing},
                    {"cloud_margin", c.planner.cloud_margin},
                    {"delta_p", c.planner.delta_p}};
    j["sensor"] = {{"force_std", c.sensor.force_std}, {"cutoff_hz", c.sensor.cutoff_hz}, {"seed", c.sensor.seed}};
    return j;
}

inline std::string config_hash(const sim::ScenarioConfig& c) {
    return sim::hex64(sim::fnv1a(config_to_json(c).dump()));
}

inline sim::ScenarioConfig config_from_json(const json& root) {
    using detail::Reader;
    if (!root.is_object()) {
        throw ConfigError("scenario config must be a JSON object");
    }
    if (!root.contains("phantom")) {
        throw ConfigError("scenario config is missing the 'phantom' section");
    }
    sim::ScenarioConfig c;
    const auto section = [&](const char* name) -> const json* {
        const auto it = root.find(name);
        return it == root.end() ? nullptr : &*it;
    };
    static const char* known[] = {"phantom", "robot", "gains", "force",   "interaction", "image",
                                  "rates",   "sweep", "phri",  "planner", "sensor"};
    for (const auto& [k, v] : root.items()) {
        if (std::none_of(std::begin(known), std::end(known), [&](const char* n) { return k == n; })) {
            throw ConfigError("unknown section config." + k);
        }
        if (!v.is_object()) {
            throw ConfigError("config." + k + " must be an object");
        }
    }
    {
        Reader r(*section("phantom"), "phantom");
        sim::PhantomSpec& p = c.phantom;
        r.num("center_x", p.center_x);
        r.num("center_y", p.center_y);
        r.num("length", p.length);
        r.num("width", p.width);
        r.num("base_height", p.base_height);
        r.num("ridge_height", p.ridge_height);
        r.num("bump_amplitude", p.bump_amplitude);
        r.num("k_min", p.k_min);
        r.num("k_max", p.k_max);
        r.num("k_periods", p.k_periods);
        r.num("grid_spacing", p.grid_spacing);
        r.num("slab_thickness", p.slab_thickness);
        r.num("vessel_depth", p.vessel_depth);
        r.num("vessel_radius", p.vessel_radius);
        r.num("vessel_meander", p.vessel_meander);
        r.num("vessel_offset", p.vessel_offset);
        r.num("thrombus_start", p.thrombus_start);
        r.num("thrombus_end", p.thrombus_end);
        r.num("thrombus_residual", p.thrombus_residual);
        r.num("f_close", p.f_close);
        r.finish();
        p.validate();
    }
    if (const json* s = section("robot")) {
        Reader r(*s, "robot");
        r.num("probe_length", c.probe_length);
        if (!(c.probe_length > 0.0)) {
            throw ConfigError("robot.probe_length must be positive");
        }
        c.robot = sim::RobotModel::panda_like(c.probe_length);
        r.vec("inertia", c.robot.inertia);
        r.vec("q_min", c.robot.q_min);
        r.vec("q_max", c.robot.q_max);
        r.vec("tau_max", c.robot.tau_max);
        r.finish();
        c.robot.validate();
    }
    if (const json* s = section("gains")) {
        Reader r(*s, "gains");
        Vec6 kp = c.gains.kp_c;
        Vec7 kq = c.gains.kp_q;
        double ratio = c.gains.damping_ratio;
        r.vec("kp_c", kp);
        r.vec("kp_q", kq);
        r.num("damping_ratio", ratio);
        r.finish();
        try {
            c.gains = ControllerGains::from_stiffness(kp, kq, ratio);
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
    }
    if (const json* s = section("force")) {
        Reader r(*s, "force");
        std::string law = force_law_name(c.force.kind);
        double k_c = c.force.law.k_c;
        double k_s = c.force.law.k_s;
        double k_mf = c.force.law.k_mf;
        double k_f = c.force.law.k_f;
        r.str("law", law);
        r.num("k_c", k_c);
        r.num("k_s", k_s);
        r.num("k_mf", k_mf);
        r.num("k_f", k_f);
        r.num("baseline_gain", c.force.baseline_gain);
        r.num("f_lo", c.force.landing.f_lo);
        r.num("f_hi", c.force.landing.f_hi);
        r.num("k_alpha", c.force.landing.k_alpha);
        r.num("v0", c.force.landing.v0);
        r.finish();
        if (law == "proposed") {
            c.force.kind = ForceLawKind::proposed;
        } else if (law == "fundamental") {
            c.force.kind = ForceLawKind::fundamental;
        } else {
            throw ConfigError("force.law must be 'proposed' or 'fundamental'");
        }
        if (!(c.force.baseline_gain > 0.0)) {
            throw ConfigError("force.baseline_gain must be positive");
        }
        try {
            c.force.law = ForceLawParams::make(k_c, k_s, k_mf, k_f);
            c.force.landing.validate();
        } catch (const Error& e) {
            throw ConfigError(std::string("force: ") + e.what());
        }
    }
    if (const json* s = section("interaction")) {
        Reader r(*s, "interaction");
        InteractionParams& ip = c.interaction;
        r.num("k_pi", ip.k_pi);
        r.num("k_fi", ip.k_fi);
        r.num("d_x", ip.d_x);
        r.num("d_z", ip.d_z);
        r.num("f_ix_lo", ip.f_ix_lo);
        r.num("f_ix_hi", ip.f_ix_hi);
        r.num("f_iz_lo", ip.f_iz_lo);
        r.num("f_iz_hi", ip.f_iz_hi);
        r.num("f_min", ip.f_min);
        r.num("f_max", ip.f_max);
        r.finish();
        try {
            ip.validate();
        } catch (const Error& e) {
            throw ConfigError(std::string("interaction: ") + e.what());
        }
    }
    if (const json* s = section("image")) {
        Reader r(*s, "image");
        r.num("footprint", c.image.footprint);
        r.num("depth", c.image.depth);
        r.integer("width", c.image.width);
        r.integer("height", c.image.height);
        r.finish();
        try {
            c.image.validate();
        } catch (const Error& e) {
            throw ConfigError(std::string("image: ") + e.what());
        }
    }
    if (const json* s = section("rates")) {
        Reader r(*s, "rates");
        r.num("dt", c.rates.dt);
        r.integer("image_divisor", c.rates.image_divisor);
        r.integer("interaction_divisor", c.rates.interaction_divisor);
        r.finish();
        if (!(c.rates.dt > 0.0) || c.rates.image_divisor <= 0 || c.rates.interaction_divisor <= 0) {
            throw ConfigError("rates must be positive");
        }
    }
    if (const json* s = section("sweep")) {
        Reader r(*s, "sweep");
        r.num("f_d", c.sweep.f_d);
        r.num("speed", c.sweep.speed);
        r.num("approach_height", c.sweep.approach_height);
        r.num("dwell", c.sweep.dwell);
        r.num("contact_timeout", c.sweep.contact_timeout);
        r.boolean("imaging", c.sweep.imaging);
        r.finish();
    }
    if (const json* s = section("phri")) {
        Reader r(*s, "phri");
        r.num("initial_f_d", c.phri.initial_f_d);
        r.num("dwell", c.phri.dwell);
        r.finish();
    }
    if (const json* s = section("planner")) {
        Reader r(*s, "planner");
        r.vec("start", c.planner.start);
        r.vec("end", c.planner.end);
        r.num("lateral_bias", c.planner.lateral_bias);
        r.num("spacing", c.planner.spacing);
        r.num("cloud_spacing", c.planner.cloud_spacing);
        r.num("cloud_margin", c.planner.cloud_margin);
        r.num("delta_p", c.planner.delta_p);
        r.finish();
        if (!(c.planner.spacing > 0.0) || !(c.planner.cloud_spacing > 0.0) || !(c.planner.delta_p > 0.0)) {
            throw ConfigError("planner spacings must be positive");
        }
    }
    if (const json* s = section("sensor")) {
        Reader r(*s, "sensor");
        r.num("force_std", c.sensor.force_std);
        r.num("cutoff_hz", c.sensor.cutoff_hz);
        r.u64("seed", c.sensor.seed);
        r.finish();
        if (c.sensor.force_std < 0.0 || c.sensor.cutoff_hz < 0.0) {
            throw ConfigError("sensor noise and cutoff must be non-negative");
        }
    }
    c.config_hash = config_hash(c);
    return c;
}

inline sim::ScenarioConfig read_config(const std::string& path) {
    const std::string text = read_text(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
        const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n'));
        throw ConfigError(path + ": line " + std::to_string(line) + ": invalid JSON");
    }
    return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Operator profile CSV: header "t,pedal,fx,fy,fz".

inline sim::OperatorProfile parse_profile(std::istream& in, const std::string& name) {
    sim::OperatorProfile prof;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line[0] == '#') {
            continue;
        }
        if (!header) {
            if (line != "t,pedal,fx,fy,fz") {
                throw ParseError(name, lineno, "expected header 't,pedal,fx,fy,fz'");
            }
            header = true;
            continue;
        }
        std::vector<std::string> f;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            f.push_back(cell);
        }
        if (f.size() != 5) {
            throw ParseError(name, lineno, "expected 5 fields");
        }
        sim::OperatorProfile::Row r;
        try {
            std::size_t used = 0;
            const auto num = [&](const std::string& s) {
                const double v = std::stod(s, &used);
                if (used != s.size()) {
                    throw std::invalid_argument(s);
                }
                return v;
            };
            r.t = num(f[0]);
            if (f[1] != "0" && f[1] != "1") {
                throw std::invalid_argument(f[1]);
            }
            r.pedal = f[1] == "1";
            r.fx = num(f[2]);
            r.fy = num(f[3]);
            r.fz = num(f[4]);
        } catch (const std::exception&) {
            throw ParseError(name, lineno, "bad field in profile row");
        }
        if (!prof.rows.empty() && !(r.t > prof.rows.back().t)) {
            throw ParseError(name, lineno, "time must increase strictly");
        }
        prof.rows.push_back(r);
    }
    if (prof.rows.empty()) {
        throw ParseError(name, lineno, "profile has no rows");
    }
    try {
        prof.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(name, 0, e.what());
    }
    return prof;
}

inline sim::OperatorProfile read_profile(const std::string& path) {
    std::istringstream in(read_text(path));
    return parse_profile(in, path);
}

inline std::string format_profile(const sim::OperatorProfile& p) {
    std::string out = "t,pedal,fx,fy,fz\n";
    for (const auto& r : p.rows) {
        out += fmt(r.t) + ',' + (r.pedal ? "1" : "0") + ',' + fmt(r.fx) + ',' + fmt(r.fy) + ',' + fmt(r.fz) + '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sweep record CSV: frame_id, s, pose, centroid (empty when not detected).

inline std::string format_sweep_record(const std::vector<SweepSample>& samples) {
    std::string out = "frame_id,s,px,py,pz,qw,qx,qy,qz,cx,cy,cz\n";
    for (const auto& smp : samples) {
        const Eigen::Vector4d q = smp.pose.orientation.coeffs();
        out += std::to_string(smp.frame_id) + ',' + fmt(smp.s);
        for (double v : {smp.pose.position.x(), smp.pose.position.y(), smp.pose.position.z(), q(0), q(1), q(2), q(3)}) {
            out += ',' + fmt(v);
        }
        if (smp.centroid) {
            out += ',' + fmt(smp.centroid->x()) + ',' + fmt(smp.centroid->y()) + ',' + fmt(smp.centroid->z());
        } else {
            out += ",,,";
        }
        out += '\n';
    }
    return out;
}

inline std::vector<SweepSample> parse_sweep_record(std::istream& in, const std::string& name) {
    std::vector<SweepSample> out;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line[0] == '#') {
            continue;
        }
        if (!header) {
            if (line != "frame_id,s,px,py,pz,qw,qx,qy,qz,cx,cy,cz") {
                throw ParseError(name, lineno, "unexpected sweep record header");
            }
            header = true;
            continue;
        }
        std::vector<std::string> f;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            f.push_back(cell);
        }
        if (line.back() == ',') {
            f.emplace_back();
        }
        if (f.size() != 12) {
            throw ParseError(name, lineno, "expected 12 fields");
        }
        SweepSample smp;
        try {
            smp.frame_id = std::stol(f[0]);
            std::vector<double> v;
            for (std::size_t i = 1; i < 9; ++i) {
                v.push_back(std::stod(f[i]));
            }
            smp.s = v[0];
            smp.pose.position = Vec3(v[1], v[2], v[3]);
            smp.pose.orientation = UnitQuaternion(v[4], v[5], v[6], v[7]);
            const bool empty = f[9].empty() && f[10].empty() && f[11].empty();
            if (!empty) {
                smp.centroid = Vec3(std::stod(f[9]), std::stod(f[10]), std::stod(f[11]));
            }
        } catch (const std::exception&) {
            throw ParseError(name, lineno, "bad field in sweep record");
        }
        out.push_back(smp);
    }
    if (!header) {
        throw SchemaError(name + ": sweep record has no header");
    }
    return out;
}

inline std::vector<SweepSample> read_sweep_record(const std::string& path) {
    std::istringstream in(read_text(path));
    return parse_sweep_record(in, path);
}

}  // namespace dvtscan::io
