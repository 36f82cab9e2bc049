#pragma once

#include "gbo/cli/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

namespace gbo::cli {

inline constexpr int schema_version = 1;

struct Metric {
    std::string name;
    double value = 0;
    std::string unit;  // "1" for dimensionless
};

// Long-format table: one (series, x, y) triple per row.
struct TableRow {
    std::string series;
    double x = 0;
    double y = 0;
};

struct Table {
    std::string x_name = "x";
    std::string y_name = "y";
    std::vector<TableRow> rows;
};

struct ResultRecord {
    int schema = schema_version;
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<Metric> metrics;
    Table table;
    // Run time is kept out of the deterministic payload; emit_results writes it to a sidecar.
    double wall_seconds = 0;

    void add(std::string name, double value, std::string unit) {
        metrics.push_back({std::move(name), value, std::move(unit)});
    }
    void row(std::string series, double x, double y) { table.rows.push_back({std::move(series), x, y}); }

    const Metric* find(const std::string& name) const {
        for (const auto& m : metrics)
            if (m.name == name) return &m;
        return nullptr;
    }
    double metric(const std::string& name) const {
        const Metric* m = find(name);
        require(m != nullptr, "record has no metric '" + name + "'");
        return m->value;
    }
};

enum class Format { Csv, Jsonl };

namespace detail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// JSON has no NaN or infinity; they are written as null. Negative zero needs a fraction part or
// parsers read it back as the integer 0.
inline std::string json_num(double v) {
    if (!std::isfinite(v)) return "null";
    if (v == 0 && std::signbit(v)) return "-0.0";
    return num(v);
}

inline std::string json_str(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", c);
                out += buf;
            } else {
                out += c;
            }
        }
    }
    return out + "\"";
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

inline std::string echo_line(const ResultRecord& rec) {
    std::string s = "# gbo-lab schema " + std::to_string(rec.schema);
    for (const auto& [k, v] : rec.config) s += " " + k + "=" + v;
    return s;
}

} // namespace detail

// metrics: name,value,unit
inline void write_metrics_csv(const ResultRecord& rec, std::ostream& os) {
    os << detail::echo_line(rec) << "\n" << "name,value,unit\n";
    for (const auto& m : rec.metrics)
        os << detail::csv_field(m.name) << "," << detail::num(m.value) << "," << detail::csv_field(m.unit) << "\n";
}

// table: series,<x_name>,<y_name>; an empty table leaves the two header lines only.
inline void write_table_csv(const ResultRecord& rec, std::ostream& os) {
    os << detail::echo_line(rec) << "\n"
       << "series," << detail::csv_field(rec.table.x_name) << "," << detail::csv_field(rec.table.y_name) << "\n";
    for (const auto& r : rec.table.rows)
        os << detail::csv_field(r.series) << "," << detail::num(r.x) << "," << detail::num(r.y) << "\n";
}

// One JSON object per line: a header with the config echo, then metrics, then table rows.
inline void write_jsonl(const ResultRecord& rec, std::ostream& os) {
    os << "{\"type\":\"header\",\"schema\":" << rec.schema << ",\"config\":{";
    for (std::size_t i = 0; i < rec.config.size(); ++i)
        os << (i ? "," : "") << detail::json_str(rec.config[i].first) << ":" << detail::json_str(rec.config[i].second);
    os << "},\"x_name\":" << detail::json_str(rec.table.x_name) << ",\"y_name\":" << detail::json_str(rec.table.y_name)
       << "}\n";
    for (const auto& m : rec.metrics)
        os << "{\"type\":\"metric\",\"name\":" << detail::json_str(m.name) << ",\"value\":" << detail::json_num(m.value)
           << ",\"unit\":" << detail::json_str(m.unit) << "}\n";
    for (const auto& r : rec.table.rows)
        os << "{\"type\":\"row\",\"series\":" << detail::json_str(r.series) << ",\"x\":" << detail::json_num(r.x)
           << ",\"y\":" << detail::json_num(r.y) << "}\n";
}

// Files written under dir, named after the experiment id:
//   csv   -> <id>_metrics.csv, <id>_table.csv
//   jsonl -> <id>.jsonl
// plus <id>.wall holding the run time in seconds (not part of the reproducible output).
inline std::vector<std::filesystem::path> emit_results(const ResultRecord& rec, const std::string& id,
                                                       const std::filesystem::path& dir, Format fmt) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
    std::vector<fs::path> written;
    auto open = [&](const fs::path& p, auto&& body) {
        std::ofstream os(p, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + p.string() + " for writing");
        body(os);
        os.flush();
        if (!os) throw std::runtime_error("write failed: " + p.string());
        written.push_back(p);
    };
    if (fmt == Format::Csv) {
        open(dir / (id + "_metrics.csv"), [&](std::ostream& os) { write_metrics_csv(rec, os); });
        open(dir / (id + "_table.csv"), [&](std::ostream& os) { write_table_csv(rec, os); });
    } else {
        open(dir / (id + ".jsonl"), [&](std::ostream& os) { write_jsonl(rec, os); });
    }
    open(dir / (id + ".wall"), [&](std::ostream& os) { os << detail::num(rec.wall_seconds) << "\n"; });
    return written;
}

} // namespace gbo::cli
