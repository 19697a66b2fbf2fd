#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "../errors.hpp"
#include "../geomath.hpp"

namespace dvtscan::sim {

/// One control tick. Deviation and lumen columns are NaN when not observed.
struct TraceRecord {
    double t{0.0};
    Vec7 q{Vec7::Zero()};
    Pose pose;
    double f{0.0};
    double f_d{0.0};
    double e_f{0.0};
    double alpha{0.0};
    double s{0.0};
    double lateral_deviation{std::nan("")};   // mm
    double centroid_deviation{std::nan("")};  // mm, image ticks with a detection only
    double lumen_area{std::nan("")};          // mm^2
    bool pedal{false};
};

inline const std::vector<std::string>& trace_columns() {
    static const std::vector<std::string> cols{
        "t",     "q1",    "q2",    "q3",    "q4", "q5",    "q6", "q7",  "px",    "py",
        "pz",    "qw",    "qx",    "qy",    "qz", "f",     "f_d", "e_f", "alpha", "s",
        "lateral_deviation", "centroid_deviation", "lumen_area", "pedal"};
    return cols;
}

inline void append_number(std::string& out, double v) {
    if (std::isnan(v)) {
        return;  // empty field
    }
    char buf[32];
    const int n = std::snprintf(buf, sizeof(buf), "%.6g", v == 0.0 ? 0.0 : v);
    out.append(buf, static_cast<std::size_t>(n));
}

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string trace_to_csv(const std::vector<TraceRecord>& rows, const std::string& run_id,
                                const std::string& config_hash) {
    std::string out = "# run_id=" + run_id + " config_hash=" + config_hash + "\n";
    const auto& cols = trace_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        out += cols[i];
        out += i + 1 < cols.size() ? ',' : '\n';
    }
    out.reserve(out.size() + rows.size() * 220);
    for (const auto& r : rows) {
        const Eigen::Vector4d qc = r.pose.orientation.coeffs();
        const double vals[] = {r.t,     r.q(0), r.q(1), r.q(2), r.q(3), r.q(4), r.q(5), r.q(6),
                               r.pose.position.x(), r.pose.position.y(), r.pose.position.z(),
                               qc(0),   qc(1),  qc(2),  qc(3),  r.f,    r.f_d,  r.e_f,
                               r.alpha, r.s,    r.lateral_deviation, r.centroid_deviation, r.lumen_area};
        for (double v : vals) {
            append_number(out, v);
            out += ',';
        }
        out += r.pedal ? '1' : '0';
        out += '\n';
    }
    return out;
}

/// Column-oriented trace as read back from CSV.
struct TraceTable {
    std::string run_id;
    std::string config_hash;
    std::map<std::string, std::vector<double>> columns;

    [[nodiscard]] std::size_t rows() const { return columns.empty() ? 0 : columns.begin()->second.size(); }
    [[nodiscard]] bool has(const std::string& c) const { return columns.count(c) != 0; }
    [[nodiscard]] const std::vector<double>& col(const std::string& c) const {
        const auto it = columns.find(c);
        if (it == columns.end()) {
            throw SchemaError("trace is missing column '" + c + "'");
        }
        return it->second;
    }
};

inline TraceTable parse_trace_csv(std::istream& in, const std::string& name = "trace") {
    TraceTable t;
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (line[0] == '#') {
            std::istringstream meta(line.substr(1));
            std::string kv;
            while (meta >> kv) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) {
                    continue;
                }
                if (kv.substr(0, eq) == "run_id") {
                    t.run_id = kv.substr(eq + 1);
                } else if (kv.substr(0, eq) == "config_hash") {
                    t.config_hash = kv.substr(eq + 1);
                }
            }
            continue;
        }
        std::vector<std::string> fields;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) {
            fields.push_back(cell);
        }
        if (line.back() == ',') {
            fields.emplace_back();
        }
        if (header.empty()) {
            header = fields;
            for (const auto& h : header) {
                t.columns[h];
            }
            continue;
        }
        if (fields.size() != header.size()) {
            throw ParseError(name, lineno,
                             "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
        }
        for (std::size_t i = 0; i < fields.size(); ++i) {
            double v = std::nan("");
            if (!fields[i].empty()) {
                try {
                    std::size_t used = 0;
                    v = std::stod(fields[i], &used);
                    if (used != fields[i].size()) {
                        throw std::invalid_argument("trailing characters");
                    }
                } catch (const std::exception&) {
                    throw ParseError(name, lineno, "bad number '" + fields[i] + "' in column " + header[i]);
                }
            }
            t.columns[header[i]].push_back(v);
        }
    }
    if (header.empty()) {
        throw SchemaError(name + ": trace has no header row");
    }
    return t;
}

inline TraceTable read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(path, 0, "cannot open file");
    }
    return parse_trace_csv(in, path);
}

/// Convert in-memory records to the table form used by the metrics code.
inline TraceTable trace_table(const std::vector<TraceRecord>& rows) {
    std::istringstream in(trace_to_csv(rows, "mem", "0"));
    return parse_trace_csv(in);
}

}  // namespace dvtscan::sim
