#pragma once

// Chord diagrams on the circle and on an interval, non-interlacement checks,
// and the face decomposition (arc lengths, nesting forest, chord adjacency)
// that drives every exact correlator formula.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace schw {

// Endpoint-coincidence tolerance.  Positions closer than this are treated as
// a shared endpoint; the formulas are continuous in endpoints but the
// combinatorics are not, so the cutoff is fixed once.
inline constexpr double position_tol = 1e-12;

struct Chord {
    double s = 0.0;
    double t = 0.0;
    int l = 1; // observable power, >= 1
};

struct CircleDiagram {
    std::vector<Chord> chords;
};

struct IntervalDiagram {
    double T = 1.0;
    double a = 0.0; // endpoint datum of the underlying bridge measure
    std::vector<Chord> chords;
};

enum class Geometry { Circle, Interval };

/// Faces of a non-interlaced diagram.  faces[m].parent gives the nesting
/// forest (-1 at the root); chord j separates faces chord_adjacency[j].
/// Face 0 is the face containing the basepoint (circle) or the unbounded
/// face (interval); face j+1 is the face directly inside chord j.
struct FaceDecomposition {
    struct Face {
        double tau = 0.0;
        int parent = -1;
    };
    std::vector<Face> faces;
    std::vector<std::pair<int, int>> chord_adjacency; // (outer face, inner face)
    int root_face = 0;
};

namespace detail {

inline double frac(double x) {
    double f = x - std::floor(x);
    return (f >= 1.0) ? 0.0 : f;
}

// Position of u relative to the arc (0, d): -1 on a shared endpoint,
// 0 strictly inside, 1 strictly outside.
inline int arc_region(double u, double d) {
    if (u < position_tol || u > 1.0 - position_tol || std::abs(u - d) < position_tol) return -1;
    return u < d ? 0 : 1;
}

inline void validate_chord_circle(const Chord& c, std::size_t j) {
    double d = frac(c.t - c.s);
    if (d < position_tol || d > 1.0 - position_tol)
        throw std::invalid_argument("chord " + std::to_string(j) + ": s = t on the circle");
    if (c.l < 1)
        throw std::invalid_argument("chord " + std::to_string(j) +
                                    ": power must be >= 1 (drop l = 0 chords before evaluating)");
}

inline void validate_chord_interval(const Chord& c, std::size_t j, double T) {
    if (c.s < -position_tol || c.t > T + position_tol || c.t - c.s < position_tol)
        throw std::invalid_argument("chord " + std::to_string(j) +
                                    ": needs 0 <= s < t <= T on the interval");
    if (c.l < 1)
        throw std::invalid_argument("chord " + std::to_string(j) +
                                    ": power must be >= 1 (drop l = 0 chords before evaluating)");
}

} // namespace detail

/// True iff no two chords' endpoint pairs alternate around the circle
/// (interval: every pair is nested or disjoint).  Shared endpoints do not
/// count as intersections.  Throws on malformed chords.
inline bool check_non_interlaced(const std::vector<Chord>& chords, Geometry geom, double T = 1.0) {
    using namespace detail;
    if (geom == Geometry::Circle) {
        for (std::size_t j = 0; j < chords.size(); ++j) validate_chord_circle(chords[j], j);
        for (std::size_t i = 0; i < chords.size(); ++i) {
            double d = frac(chords[i].t - chords[i].s);
            for (std::size_t j = i + 1; j < chords.size(); ++j) {
                int ru = arc_region(frac(chords[j].s - chords[i].s), d);
                int rv = arc_region(frac(chords[j].t - chords[i].s), d);
                if (ru >= 0 && rv >= 0 && ru != rv) return false;
            }
        }
        return true;
    }
    for (std::size_t j = 0; j < chords.size(); ++j) validate_chord_interval(chords[j], j, T);
    for (std::size_t i = 0; i < chords.size(); ++i)
        for (std::size_t j = i + 1; j < chords.size(); ++j) {
            const Chord &a = chords[i], &b = chords[j];
            bool disjoint = a.t <= b.s + position_tol || b.t <= a.s + position_tol;
            bool a_in_b = b.s <= a.s + position_tol && a.t <= b.t + position_tol;
            bool b_in_a = a.s <= b.s + position_tol && b.t <= a.t + position_tol;
            if (!(disjoint || a_in_b || b_in_a)) return false;
        }
    return true;
}

/// Unbounded face 0 plus one face per chord.  Requires a laminar family
/// (nested or disjoint, ties at endpoints allowed); rejects otherwise,
/// naming an offending pair.
inline FaceDecomposition decompose_interval(const IntervalDiagram& d) {
    using namespace detail;
    const auto& ch = d.chords;
    for (std::size_t j = 0; j < ch.size(); ++j) validate_chord_interval(ch[j], j, d.T);
    for (std::size_t i = 0; i < ch.size(); ++i)
        for (std::size_t j = i + 1; j < ch.size(); ++j) {
            const Chord &a = ch[i], &b = ch[j];
            bool ok = a.t <= b.s + position_tol || b.t <= a.s + position_tol ||
                      (b.s <= a.s + position_tol && a.t <= b.t + position_tol) ||
                      (a.s <= b.s + position_tol && b.t <= a.t + position_tol);
            if (!ok)
                throw std::invalid_argument("interlaced chords " + std::to_string(i) + " and " +
                                            std::to_string(j));
        }

    const int n = int(ch.size());
    FaceDecomposition fd;
    fd.faces.assign(n + 1, {});
    fd.faces[0].tau = d.T;
    fd.faces[0].parent = -1;
    fd.chord_adjacency.resize(n);

    // Sweep left to right; equal left endpoints nest by right endpoint, the
    // longer span is the parent.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        if (std::abs(ch[i].s - ch[j].s) > position_tol) return ch[i].s < ch[j].s;
        if (std::abs(ch[i].t - ch[j].t) > position_tol) return ch[i].t > ch[j].t;
        return i < j;
    });
    std::vector<int> stack;
    for (int idx : order) {
        while (!stack.empty() && ch[stack.back()].t <= ch[idx].s + position_tol) stack.pop_back();
        int parent_face = stack.empty() ? 0 : stack.back() + 1;
        fd.faces[idx + 1].parent = parent_face;
        fd.faces[idx + 1].tau = ch[idx].t - ch[idx].s;
        fd.chord_adjacency[idx] = {parent_face, idx + 1};
        // children carve their span out of the parent face
        fd.faces[parent_face].tau -= ch[idx].t - ch[idx].s;
        stack.push_back(idx);
    }
    for (auto& f : fd.faces) {
        if (f.tau < -1e-9 * std::max(1.0, d.T)) throw std::logic_error("negative face length");
        if (f.tau < 0.0) f.tau = 0.0;
    }
    fd.root_face = 0;
    return fd;
}

namespace detail {

// Basepoint for cutting the circle: midpoint of the widest gap between
// endpoints, never equal to an endpoint.
inline double circle_basepoint(const std::vector<Chord>& chords) {
    std::vector<double> pts;
    for (const auto& c : chords) {
        pts.push_back(frac(c.s));
        pts.push_back(frac(c.t));
    }
    if (pts.empty()) return 0.0;
    std::sort(pts.begin(), pts.end());
    double best_gap = 1.0 - pts.back() + pts.front(), best_at = frac(pts.back() + best_gap / 2.0);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        double g = pts[i + 1] - pts[i];
        if (g > best_gap) {
            best_gap = g;
            best_at = pts[i] + g / 2.0;
        }
    }
    if (best_gap < 4.0 * position_tol)
        throw std::invalid_argument("no endpoint-free arc to place the basepoint on");
    return best_at;
}

// Rotate so the cut sits at 0 and map each chord to the endpoint interval
// not containing the cut.
inline IntervalDiagram cut_at(const CircleDiagram& d, double cut) {
    IntervalDiagram out;
    out.T = 1.0;
    out.a = 0.0;
    out.chords.reserve(d.chords.size());
    for (const auto& c : d.chords) {
        double u = frac(c.s - cut), v = frac(c.t - cut);
        out.chords.push_back({std::min(u, v), std::max(u, v), c.l});
    }
    return out;
}

} // namespace detail

/// Faces of a non-interlaced circle diagram, computed by cutting at a
/// basepoint away from all endpoints and reducing to the interval case.
/// Face 0 is the face whose boundary arc contains the basepoint.
inline FaceDecomposition decompose_circle(const CircleDiagram& d) {
    if (!check_non_interlaced(d.chords, Geometry::Circle)) {
        // locate a pair for the error message
        for (std::size_t i = 0; i < d.chords.size(); ++i)
            for (std::size_t j = i + 1; j < d.chords.size(); ++j)
                if (!check_non_interlaced({d.chords[i], d.chords[j]}, Geometry::Circle))
                    throw std::invalid_argument("interlaced chords " + std::to_string(i) + " and " +
                                                std::to_string(j));
        throw std::invalid_argument("interlaced diagram");
    }
    return decompose_interval(detail::cut_at(d, detail::circle_basepoint(d.chords)));
}

/// Face whose boundary arc contains the point p (circle position).  Rejects
/// points that sit on a chord endpoint.
inline int face_of_point(const CircleDiagram& d, double p) {
    using namespace detail;
    double cut = circle_basepoint(d.chords);
    double u = frac(p - cut);
    int best = -1;
    double best_span = 2.0;
    for (std::size_t j = 0; j < d.chords.size(); ++j) {
        double a = frac(d.chords[j].s - cut), b = frac(d.chords[j].t - cut);
        if (a > b) std::swap(a, b);
        if (std::abs(u - a) < position_tol || std::abs(u - b) < position_tol)
            throw std::invalid_argument("point coincides with a chord endpoint");
        if (a < u && u < b && b - a < best_span) {
            best_span = b - a;
            best = int(j);
        }
    }
    return best < 0 ? 0 : best + 1;
}

/// Cut the circle on an arc of face m: the result is an interval diagram on
/// [0,1] with a = 0 whose unbounded face is the image of face m; all bounded
/// face lengths are preserved.
inline IntervalDiagram cut_circle_at(const CircleDiagram& d, int face) {
    using namespace detail;
    if (d.chords.empty()) {
        if (face != 0) throw std::invalid_argument("empty diagram has a single face 0");
        return IntervalDiagram{1.0, 0.0, {}};
    }
    std::vector<double> pts;
    for (const auto& c : d.chords) {
        pts.push_back(frac(c.s));
        pts.push_back(frac(c.t));
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](double a, double b) { return std::abs(a - b) < position_tol; }),
              pts.end());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double lo = pts[i];
        double hi = (i + 1 < pts.size()) ? pts[i + 1] : pts[0] + 1.0;
        if (hi - lo < 4.0 * position_tol) continue;
        double mid = frac(0.5 * (lo + hi));
        if (face_of_point(d, mid) == face) return cut_at(d, mid);
    }
    throw std::invalid_argument("face " + std::to_string(face) + " has no boundary arc of positive length");
}

/// Rigid rotation of all endpoints (used by the invariance tests).
inline CircleDiagram rotate_circle(const CircleDiagram& d, double x) {
    CircleDiagram out = d;
    for (auto& c : out.chords) {
        c.s = detail::frac(c.s + x);
        c.t = detail::frac(c.t + x);
    }
    return out;
}

} // namespace schw
