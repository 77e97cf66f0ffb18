#pragma once

// Discrete Lyapunov functions from the condensation order of the transition
// graph, group averaging, and a continuous interpolant with flat cores on the
// target boxes (so the differential vanishes there pointwise).

#include <map>
#include <vector>

#include "orbiflow/core.hpp"
#include "orbiflow/graph.hpp"

namespace orbiflow {

struct DiscreteLyapunov {
  std::vector<double> values;  // per orbit-box, in [0,1]
  int smoothing_passes = 0;
  double edge_gap = 0;  // guaranteed decrease along condensation edges
  std::string provenance;
};

// Average a point function over the group; idempotent, output invariant.
inline std::function<double(const Vec&)> group_average(
    const QuotientPresentation& pres, std::function<double(const Vec&)> f) {
  const auto* p = &pres;
  return [p, f = std::move(f)](const Vec& x) {
    double s = 0;
    for (const auto& g : p->group()) s += f(g.apply_mod1(x));
    return s / static_cast<double>(p->group_order());
  };
}

// Condensation longest-path order: sources get value 1, deepest components 0,
// strictly decreasing along every condensation edge; optional neighbor
// smoothing that rolls back any pass violating half the original gap.
inline DiscreteLyapunov conley_function(const TransitionGraph& g,
                                        const std::vector<int>& target_boxes,
                                        int smoothing_passes = 2) {
  auto scc = scc_decompose(g);
  int n = g.node_count();
  int ncomp = static_cast<int>(scc.members.size());

  // condensation edges and longest-path depth (components come out of the
  // decomposition in reverse topological order: edges go high id -> low id)
  std::vector<int> depth(ncomp, 0);
  for (int c = ncomp - 1; c >= 0; --c)
    for (int v : scc.members[c])
      for (const auto& e : g.out(v)) {
        int tc = scc.comp_of[e.to];
        if (tc != c) depth[tc] = std::max(depth[tc], depth[c] + 1);
      }
  int max_depth = 0;
  for (int c = 0; c < ncomp; ++c) max_depth = std::max(max_depth, depth[c]);
  double gap = max_depth > 0 ? 1.0 / max_depth : 0.0;

  DiscreteLyapunov out;
  out.values.assign(n, 0.0);
  out.edge_gap = gap;
  out.provenance = "condensation longest-path depth, normalized";
  for (int v = 0; v < n; ++v)
    out.values[v] = max_depth > 0 ? 1.0 - static_cast<double>(depth[scc.comp_of[v]]) / max_depth
                                  : 0.0;

  std::vector<char> frozen(n, 0);
  for (int v : target_boxes) frozen[v] = 1;
  for (int v = 0; v < n; ++v)
    if (scc.recurrent_node[v]) frozen[v] = 1;  // recurrent values stay put

  auto decrease_ok = [&](const std::vector<double>& vals) {
    for (int v = 0; v < n; ++v)
      for (const auto& e : g.out(v)) {
        if (scc.comp_of[e.to] == scc.comp_of[v]) continue;
        if (vals[v] - vals[e.to] < gap / 2 - 1e-12) return false;
      }
    return true;
  };

  const auto& cv = g.cover();
  // per-box clamps that keep every condensation edge decreasing by >= 3g/4
  // against the previous values; the global recheck then guards the pass
  std::vector<std::vector<int>> in_edges(n);
  for (int v = 0; v < n; ++v)
    for (const auto& e : g.out(v))
      if (scc.comp_of[e.to] != scc.comp_of[v]) in_edges[e.to].push_back(v);
  for (int pass = 0; pass < smoothing_passes; ++pass) {
    std::vector<double> next = out.values;
    for (int v = 0; v < n; ++v) {
      if (frozen[v]) continue;
      double sum = 0;
      int k = 0;
      for (long cell : cv.cells_of_orbit(v))
        for (long nb : cv.moore_neighbors(cell)) {
          sum += out.values[cv.orbit_of_cell(nb)];
          ++k;
        }
      if (k == 0) continue;
      double proposal = 0.5 * out.values[v] + 0.5 * sum / k;
      double lo = -1e300, hi = 1e300;
      for (int u : in_edges[v]) hi = std::min(hi, out.values[u] - 0.75 * gap);
      for (const auto& e : g.out(v))
        if (scc.comp_of[e.to] != scc.comp_of[v])
          lo = std::max(lo, out.values[e.to] + 0.75 * gap);
      if (lo <= hi) next[v] = std::min(std::max(proposal, lo), hi);
    }
    if (!decrease_ok(next)) break;  // roll the pass back
    out.values = std::move(next);
    out.smoothing_passes = pass + 1;
  }
  return out;
}

// Continuous interpolant of per-box values: multilinear over box centers,
// flattened in a small core around the centers of the given boxes so the
// finite-difference gradient vanishes there.
class BoxInterpolant {
 public:
  BoxInterpolant(const BoxCover& cover, std::vector<double> values,
                 std::vector<int> flat_boxes = {})
      : cover_(&cover), values_(std::move(values)) {
    flat_cells_.clear();
    for (int o : flat_boxes)
      for (long c : cover.cells_of_orbit(o)) flat_cells_[c] = values_[o];
  }

  double operator()(const Vec& x) const {
    double base = multilinear(x);
    if (flat_cells_.empty()) return base;
    long cell = cover_->cell_of_point(x);
    auto it = flat_cells_.find(cell);
    if (it == flat_cells_.end()) return base;
    double w = cover_->width();
    double d = torus_dist(x, cover_->cell_center(cell));
    double r0 = 0.15 * w, r1 = 0.45 * w;
    if (d <= r0) return it->second;
    if (d >= r1) return base;
    double t = (d - r0) / (r1 - r0);
    double s = t * t * (3 - 2 * t);
    return it->second + s * (base - it->second);
  }

  Vec gradient(const Vec& x, double h = 1e-6) const {
    Vec g(x.n);
    for (int i = 0; i < x.n; ++i) {
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      g[i] = ((*this)(wrap01(xp)) - (*this)(wrap01(xm))) / (2 * h);
    }
    return g;
  }

 private:
  const BoxCover* cover_;
  std::vector<double> values_;
  std::map<long, double> flat_cells_;

  double multilinear(const Vec& x) const {
    int n = cover_->dim();
    int res = cover_->resolution();
    std::array<long, kMaxDim> base{};
    std::array<double, kMaxDim> frac{};
    for (int i = 0; i < n; ++i) {
      double u = wrap01(x[i]) * res - 0.5;
      double fl = std::floor(u);
      base[i] = static_cast<long>(fl);
      frac[i] = u - fl;
    }
    double acc = 0;
    for (int corner = 0; corner < (1 << n); ++corner) {
      double w = 1;
      long cell = 0;
      for (int i = n - 1; i >= 0; --i) {
        int bit = (corner >> i) & 1;
        w *= bit ? frac[i] : 1 - frac[i];
        long coord = ((base[i] + bit) % res + res) % res;
        cell = cell * res + coord;
      }
      acc += w * values_[cover_->orbit_of_cell(cell)];
    }
    return acc;
  }
};

}  // namespace orbiflow
