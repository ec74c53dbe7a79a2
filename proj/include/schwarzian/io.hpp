#pragma once

// Diagram JSON input and CSV output.  The file schema:
//   { "geometry": "circle" | "interval",
//     "sigma": number,              // > 0
//     "T": number, "a": number,     // interval only (defaults 1, 0)
//     "chords": [ { "s": ..., "t": ..., "l": ... }, ... ],
//     "insertions": [ r1, r2, ... ] // optional, stress insertion points }

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "correlator.hpp"
#include "stress.hpp"

namespace schw {

struct DiagramFile {
    CorrelatorSpec spec;
    std::vector<double> insertions;
};

inline DiagramFile parse_diagram_json(const nlohmann::json& j) {
    DiagramFile out;
    std::string geom = j.at("geometry").get<std::string>();
    if (geom == "circle")
        out.spec.geometry = Geometry::Circle;
    else if (geom == "interval")
        out.spec.geometry = Geometry::Interval;
    else
        throw std::invalid_argument("geometry must be \"circle\" or \"interval\"");
    out.spec.sigma = j.at("sigma").get<double>();
    if (!(out.spec.sigma > 0.0)) throw std::invalid_argument("sigma must be positive");

    std::vector<Chord> chords;
    if (j.contains("chords"))
        for (const auto& c : j.at("chords"))
            chords.push_back({c.at("s").get<double>(), c.at("t").get<double>(), c.at("l").get<int>()});
    if (out.spec.geometry == Geometry::Interval) {
        out.spec.interval.T = j.value("T", 1.0);
        out.spec.interval.a = j.value("a", 0.0);
        if (!(out.spec.interval.T > 0.0)) throw std::invalid_argument("T must be positive");
        out.spec.interval.chords = chords;
    } else {
        if (j.contains("T") || j.contains("a"))
            throw std::invalid_argument("T and a apply to interval diagrams only");
        out.spec.circle.chords = chords;
    }
    if (j.contains("insertions")) {
        if (out.spec.geometry != Geometry::Circle)
            throw std::invalid_argument("insertions require a circle diagram");
        out.insertions = j.at("insertions").get<std::vector<double>>();
    }
    return out;
}

inline DiagramFile load_diagram(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open input file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("parse error in " + path + ": " + e.what());
    }
    return parse_diagram_json(j);
}

/// FNV-1a over the canonical rendering of the diagram; ties every CSV row to
/// its input.
inline std::string diagram_hash(const DiagramFile& d) {
    std::ostringstream os;
    os.precision(17);
    os << (d.spec.geometry == Geometry::Circle ? "circle" : "interval") << '|' << d.spec.sigma;
    if (d.spec.geometry == Geometry::Interval) os << '|' << d.spec.interval.T << '|' << d.spec.interval.a;
    const auto& ch =
        d.spec.geometry == Geometry::Circle ? d.spec.circle.chords : d.spec.interval.chords;
    for (const auto& c : ch) os << '|' << c.s << ',' << c.t << ',' << c.l;
    for (double r : d.insertions) os << "|r" << r;
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : os.str()) {
        h ^= std::uint64_t(static_cast<unsigned char>(c));
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// CSV with schema `subcommand,label,value,error,extra`; 17 significant
/// digits so rows round-trip bit-exactly.
class CsvWriter {
  public:
    explicit CsvWriter(std::ostream& os) : os_(os) { os_ << "subcommand,label,value,error,extra\n"; }

    void row(const std::string& sub, const std::string& label, double value, double error,
             const std::string& extra) {
        os_ << sub << ',' << label << ',' << num(value) << ',' << num(error) << ',' << extra << '\n';
    }

    static std::string num(double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

  private:
    std::ostream& os_;
};

} // namespace schw
