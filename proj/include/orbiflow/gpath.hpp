#pragma once

// Paths on the quotient: alternating words of sampled curves in the torus and
// group arrows joining their endpoints, with line integrals of 1-forms.

#include <optional>
#include <vector>

#include "orbiflow/core.hpp"
#include "orbiflow/fields.hpp"
#include "orbiflow/geometry.hpp"

namespace orbiflow {

// Piecewise-linear curve; nodes live in [0,1)^n, consecutive nodes are read
// through their minimal torus displacement (sup-norm < 0.5).
struct Segment {
  std::vector<Vec> nodes;

  const Vec& start() const { return nodes.front(); }
  const Vec& end() const { return nodes.back(); }
  bool constant(double tol = 1e-12) const {
    for (const auto& p : nodes)
      if (torus_dist(p, nodes.front()) > tol) return false;
    return true;
  }
};

inline Segment make_segment(const Vec& from, const Vec& to_lift, int nodes = 513) {
  // `to_lift` is a lift of the target relative to `from` (may leave [0,1)^n);
  // nodes are wrapped back into the torus.
  Segment s;
  s.nodes.reserve(nodes);
  for (int k = 0; k < nodes; ++k) {
    double t = static_cast<double>(k) / (nodes - 1);
    Vec p(from.n);
    for (int i = 0; i < from.n; ++i) p[i] = from[i] + t * (to_lift[i] - from[i]);
    s.nodes.push_back(wrap01(p));
  }
  return s;
}

inline Segment constant_segment(const Vec& at) {
  Segment s;
  s.nodes = {wrap01(at), wrap01(at)};
  return s;
}

// Alternating word: segments[0], arrows[0], segments[1], ..., segments[m].
// An optional closing arrow maps the last endpoint back onto the first start
// (making the word a loop on the quotient).
struct GPath {
  std::vector<Segment> segments;
  std::vector<GroupElement> arrows;  // arrows[j] : segments[j].end() -> segments[j+1].start()
  std::optional<GroupElement> closing_arrow;

  const Vec& start() const { return segments.front().start(); }
  const Vec& end() const { return segments.back().end(); }

  void validate() const {
    if (segments.empty()) throw Error("empty path word");
    for (const auto& s : segments)
      if (s.nodes.size() < 2) throw Error("segment needs at least two nodes");
    if (arrows.size() + 1 != segments.size())
      throw Error("malformed word: arrow/segment count mismatch");
    for (std::size_t j = 0; j < arrows.size(); ++j) {
      Vec mapped = arrows[j].apply_mod1(segments[j].end());
      if (torus_dist(mapped, segments[j + 1].start()) > 1e-9)
        throw Error("malformed word: arrow endpoint mismatch");
    }
    if (closing_arrow) {
      Vec mapped = closing_arrow->apply_mod1(end());
      if (torus_dist(mapped, start()) > 1e-9)
        throw Error("malformed word: closing arrow does not return to start");
    }
  }

  bool is_loop() const {
    if (closing_arrow) return true;
    return torus_dist(start(), end()) < 1e-9;
  }
};

namespace detail {

// Simpson rule over one straight node pair, reading the minimal displacement.
inline double integrate_pair(const BasicOneForm& form, const Vec& a, const Vec& b) {
  Vec d(a.n);
  for (int i = 0; i < a.n; ++i) {
    double diff = b[i] - a[i];
    diff -= std::round(diff);
    if (std::fabs(diff) >= 0.5) throw Error("segment step exceeds half the torus");
    d[i] = diff;
  }
  Vec mid(a.n);
  for (int i = 0; i < a.n; ++i) mid[i] = wrap01(a[i] + 0.5 * d[i]);
  double fa = dot(form(a), d);
  double fm = dot(form(mid), d);
  double fb = dot(form(wrap01(a + d)), d);
  return (fa + 4.0 * fm + fb) / 6.0;
}

inline double straight_form_integral(const BasicOneForm& form, const Vec& from,
                                     const Vec& to_lift, int nodes = 17) {
  Segment seg = make_segment(from, to_lift, nodes);
  KahanSum s;
  for (std::size_t k = 0; k + 1 < seg.nodes.size(); ++k)
    s.add(integrate_pair(form, seg.nodes[k], seg.nodes[k + 1]));
  return s.value();
}

}  // namespace detail

// Line integral of an invariant 1-form over a path word; arrows contribute
// nothing (the form is invariant).
inline double gpath_integral(const GPath& path, const BasicOneForm& form) {
  path.validate();
  KahanSum total;
  for (const auto& seg : path.segments)
    for (std::size_t k = 0; k + 1 < seg.nodes.size(); ++k)
      total.add(detail::integrate_pair(form, seg.nodes[k], seg.nodes[k + 1]));
  return total.value();
}

// Pairing of a class with a loop: the integral of the representative. For
// closed forms this depends only on the class and the loop's homotopy class.
inline double period_pairing(const CohomologyClass& cls, const GPath& loop) {
  if (!loop.is_loop()) throw Error("period_pairing: path is not a loop");
  return gpath_integral(loop, cls.representative());
}

// Short connecting path between delta-close quotient points: one straight
// segment to the nearest lift of q, closed by the matching arrow. Stays in a
// ball of radius d(p,q) around p.
inline GPath connecting_path(const QuotientPresentation& pres, const Vec& p, const Vec& q,
                             int nodes = 65) {
  auto [g, k] = pres.closest_lift(wrap01(p), wrap01(q));
  Vec target(p.n);
  Vec gq = g.apply(wrap01(q));
  for (int i = 0; i < p.n; ++i) target[i] = gq[i] + k[i];
  GPath path;
  path.segments.push_back(make_segment(wrap01(p), target, nodes));
  path.segments.push_back(constant_segment(wrap01(q)));
  path.arrows.push_back(g.inverse());
  path.validate();
  return path;
}

// --- combinatorial equivalence moves (used by tests) ----------------------

inline GPath resample_segments(const GPath& path, int factor) {
  GPath out = path;
  for (auto& seg : out.segments) {
    std::vector<Vec> dense;
    for (std::size_t k = 0; k + 1 < seg.nodes.size(); ++k) {
      const Vec& a = seg.nodes[k];
      const Vec& b = seg.nodes[k + 1];
      Vec d(a.n);
      for (int i = 0; i < a.n; ++i) {
        double diff = b[i] - a[i];
        diff -= std::round(diff);
        d[i] = diff;
      }
      for (int s = 0; s < factor; ++s) {
        double t = static_cast<double>(s) / factor;
        dense.push_back(wrap01(a + t * d));
      }
    }
    dense.push_back(seg.nodes.back());
    seg.nodes = dense;
  }
  return out;
}

// Split one segment into two joined by an identity arrow.
inline GPath split_segment(const GPath& path, std::size_t seg_index) {
  GPath out;
  for (std::size_t j = 0; j < path.segments.size(); ++j) {
    const auto& seg = path.segments[j];
    if (j == seg_index && seg.nodes.size() >= 3) {
      std::size_t mid = seg.nodes.size() / 2;
      Segment a, b;
      a.nodes.assign(seg.nodes.begin(), seg.nodes.begin() + mid + 1);
      b.nodes.assign(seg.nodes.begin() + mid, seg.nodes.end());
      out.segments.push_back(a);
      out.arrows.push_back(identity_element(seg.nodes.front().n));
      out.segments.push_back(b);
    } else {
      out.segments.push_back(seg);
    }
    if (j < path.arrows.size()) out.arrows.push_back(path.arrows[j]);
  }
  out.closing_arrow = path.closing_arrow;
  return out;
}

// Drop identity arrows (merging adjacent segments) and constant segments
// adjacent to arrows, folding the word down.
inline GPath simplify_word(const GPath& path) {
  GPath out;
  out.segments.push_back(path.segments[0]);
  for (std::size_t j = 0; j < path.arrows.size(); ++j) {
    const auto& g = path.arrows[j];
    const auto& next = path.segments[j + 1];
    if (g.is_identity()) {
      auto& cur = out.segments.back();
      if (next.constant()) continue;  // multiplication equivalence
      cur.nodes.insert(cur.nodes.end(), next.nodes.begin() + 1, next.nodes.end());
      continue;  // concatenation equivalence
    }
    if (out.segments.back().constant() && !out.arrows.empty()) {
      // constant segment between arrows: compose the arrows
      out.segments.pop_back();
      GroupElement prev = out.arrows.back();
      out.arrows.pop_back();
      out.arrows.push_back(g.compose(prev));
      out.segments.push_back(next);
      continue;
    }
    out.arrows.push_back(g);
    out.segments.push_back(next);
  }
  out.closing_arrow = path.closing_arrow;
  return out;
}

}  // namespace orbiflow
