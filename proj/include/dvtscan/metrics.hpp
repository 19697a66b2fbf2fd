#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "sim/trace.hpp"

namespace dvtscan {

struct MetricsOptions {
    double settle_band{0.3};      // N
    double settle_hold{0.2};      // s
    double landing_window{0.5};   // s after contact over which overshoot is taken
};

struct CompressionEpisode {
    double t_start{0.0};
    double t_end{0.0};
    double s{0.0};               // arc-length coordinate at episode start
    double lumen_min{0.0};       // mm^2
    double f_max{0.0};           // N
};

struct MeanStd {
    double mean{std::nan("")};
    double std{std::nan("")};
    double max{std::nan("")};
    std::size_t n{0};
};

inline MeanStd mean_std(const std::vector<double>& v) {
    MeanStd m;
    m.n = v.size();
    if (v.empty()) {
        return m;
    }
    double sum = 0.0;
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) {
        sum += x;
        mx = std::max(mx, x);
    }
    m.mean = sum / static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) {
        acc += (x - m.mean) * (x - m.mean);
    }
    m.std = std::sqrt(acc / static_cast<double>(v.size()));
    m.max = mx;
    return m;
}

/// Headline statistics of one run. NaN marks a quantity the trace could not support
/// (no contact, never settled, no image detections).
struct MetricsReport {
    std::string run_id;
    std::string config_hash;
    double t_contact{std::nan("")};
    double settling_time{std::nan("")};
    double overshoot{std::nan("")};
    double mean_abs_ef{std::nan("")};
    double std_abs_ef{std::nan("")};
    double max_abs_ef{std::nan("")};
    double deviation_mean{std::nan("")};
    double deviation_std{std::nan("")};
    double deviation_max{std::nan("")};
    std::size_t deviation_frames{0};
    double lateral_rms{std::nan("")};
    std::vector<CompressionEpisode> episodes;

    [[nodiscard]] bool settled() const { return !std::isnan(settling_time); }
};

inline const std::vector<std::string>& required_metric_columns() {
    static const std::vector<std::string> cols{"t",      "e_f",  "alpha", "s", "lateral_deviation",
                                               "centroid_deviation", "lumen_area", "pedal", "f"};
    return cols;
}

/// Pure function of the trace table.
inline MetricsReport compute_metrics(const sim::TraceTable& tr, const MetricsOptions& opt = {}) {
    std::string missing;
    for (const auto& c : required_metric_columns()) {
        if (!tr.has(c)) {
            missing += (missing.empty() ? "" : ", ") + c;
        }
    }
    if (!missing.empty()) {
        throw SchemaError("trace is missing required columns: " + missing);
    }
    MetricsReport m;
    m.run_id = tr.run_id;
    m.config_hash = tr.config_hash;
    const auto& t = tr.col("t");
    const auto& ef = tr.col("e_f");
    const auto& alpha = tr.col("alpha");
    const auto& s = tr.col("s");
    const auto& lat = tr.col("lateral_deviation");
    const auto& dev = tr.col("centroid_deviation");
    const auto& lumen = tr.col("lumen_area");
    const auto& pedal = tr.col("pedal");
    const auto& f = tr.col("f");
    const std::size_t n = t.size();

    std::size_t ic = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] >= 0.5) {
            ic = i;
            break;
        }
    }
    if (ic == n) {
        return m;
    }
    m.t_contact = t[ic];

    double peak = 0.0;
    for (std::size_t i = ic; i < n && t[i] <= m.t_contact + opt.landing_window; ++i) {
        peak = std::max(peak, ef[i]);
    }
    m.overshoot = peak;

    // First instant after contact from which the error stays inside the band for the hold time.
    std::size_t is = n;
    std::size_t run = n;
    for (std::size_t i = ic; i < n; ++i) {
        if (std::abs(ef[i]) < opt.settle_band) {
            if (run == n) {
                run = i;
            }
            if (t[i] - t[run] >= opt.settle_hold - 1e-12) {
                is = run;
                break;
            }
        } else {
            run = n;
        }
    }
    if (is == n) {
        return m;
    }
    m.settling_time = t[is] - m.t_contact;

    std::vector<double> abs_ef;
    std::vector<double> devs;
    double lat2 = 0.0;
    std::size_t nlat = 0;
    for (std::size_t i = is; i < n; ++i) {
        abs_ef.push_back(std::abs(ef[i]));
        if (!std::isnan(dev[i])) {
            devs.push_back(dev[i]);
        }
        if (!std::isnan(lat[i])) {
            lat2 += lat[i] * lat[i];
            ++nlat;
        }
    }
    const MeanStd e = mean_std(abs_ef);
    m.mean_abs_ef = e.mean;
    m.std_abs_ef = e.std;
    m.max_abs_ef = e.max;
    const MeanStd d = mean_std(devs);
    m.deviation_mean = d.mean;
    m.deviation_std = d.std;
    m.deviation_max = d.max;
    m.deviation_frames = d.n;
    if (nlat > 0) {
        m.lateral_rms = std::sqrt(lat2 / static_cast<double>(nlat));
    }

    // Compression episodes: maximal runs with the pedal pressed.
    for (std::size_t i = 0; i < n;) {
        if (pedal[i] < 0.5) {
            ++i;
            continue;
        }
        CompressionEpisode ep;
        ep.t_start = t[i];
        ep.s = s[i];
        ep.lumen_min = std::numeric_limits<double>::infinity();
        ep.f_max = -std::numeric_limits<double>::infinity();
        while (i < n && pedal[i] >= 0.5) {
            if (!std::isnan(lumen[i])) {
                ep.lumen_min = std::min(ep.lumen_min, lumen[i]);
            }
            ep.f_max = std::max(ep.f_max, f[i]);
            ep.t_end = t[i];
            ++i;
        }
        if (std::isinf(ep.lumen_min)) {
            ep.lumen_min = std::nan("");
        }
        m.episodes.push_back(ep);
    }
    return m;
}

inline nlohmann::json metrics_to_json(const MetricsReport& m) {
    const auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
    nlohmann::json j;
    j["run_id"] = m.run_id;
    j["config_hash"] = m.config_hash;
    j["t_contact"] = num(m.t_contact);
    j["settling_time"] = num(m.settling_time);
    j["overshoot"] = num(m.overshoot);
    j["mean_abs_ef"] = num(m.mean_abs_ef);
    j["std_abs_ef"] = num(m.std_abs_ef);
    j["max_abs_ef"] = num(m.max_abs_ef);
    j["deviation_mean"] = num(m.deviation_mean);
    j["deviation_std"] = num(m.deviation_std);
    j["deviation_max"] = num(m.deviation_max);
    j["deviation_frames"] = m.deviation_frames;
    j["lateral_rms"] = num(m.lateral_rms);
    j["episodes"] = nlohmann::json::array();
    for (const auto& e : m.episodes) {
        j["episodes"].push_back({{"t_start", e.t_start},
                                 {"t_end", e.t_end},
                                 {"s", e.s},
                                 {"lumen_min", num(e.lumen_min)},
                                 {"f_max", e.f_max}});
    }
    return j;
}

/// Human-readable summary, MEAN +/- STD convention.
inline std::string format_metrics(const MetricsReport& m) {
    char buf[256];
    std::string out;
    const auto line = [&](const char* fmt, auto... args) {
        std::snprintf(buf, sizeof(buf), fmt, args...);
        out += buf;
    };
    line("run %s  config %s\n", m.run_id.c_str(), m.config_hash.c_str());
    line("contact at        %.4f s\n", m.t_contact);
    line("settling time     %.4f s\n", m.settling_time);
    line("landing overshoot %.4f N\n", m.overshoot);
    line("|e_f|             %.4f +/- %.4f N (max %.4f)\n", m.mean_abs_ef, m.std_abs_ef, m.max_abs_ef);
    line("centroid dev.     %.3f +/- %.3f mm (max %.3f, %zu frames)\n", m.deviation_mean, m.deviation_std,
         m.deviation_max, m.deviation_frames);
    line("lateral RMS       %.4f mm\n", m.lateral_rms);
    line("episodes          %zu\n", m.episodes.size());
    for (std::size_t i = 0; i < m.episodes.size(); ++i) {
        const auto& e = m.episodes[i];
        line("  %zu: t %.2f-%.2f s, s %.3f, f_max %.2f N, lumen min %.3f mm^2\n", i + 1, e.t_start, e.t_end, e.s,
             e.f_max, e.lumen_min);
    }
    return out;
}

}  // namespace dvtscan
