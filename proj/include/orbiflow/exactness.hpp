#pragma once

// Local exactness over a box region: integrate a closed invariant form along
// spanning-tree paths of the region's cell graph, check that every
// independent loop has vanishing period, and return an invariant potential.

#include <map>
#include <optional>
#include <vector>

#include "orbiflow/boxes.hpp"
#include "orbiflow/core.hpp"
#include "orbiflow/fields.hpp"
#include "orbiflow/gpath.hpp"

namespace orbiflow {

struct RegionPotential {
  const BoxCover* cover = nullptr;
  const QuotientPresentation* pres = nullptr;
  std::map<long, double> cell_value;  // per torus cell in the region
  std::function<void(const double*, double*)> form_eval;

  bool contains(const Vec& x) const {
    return cell_value.count(cover->cell_of_point(x)) > 0;
  }

  // Potential at a point: cell value plus the straight-segment integral from
  // the cell center, then averaged over the group.
  double operator()(const Vec& x) const {
    const auto& group = pres->group();
    double sum = 0;
    for (const auto& g : group) sum += raw_value(g.apply_mod1(x));
    return sum / static_cast<double>(group.size());
  }

  double raw_value(const Vec& x) const {
    long cell = cover->cell_of_point(x);
    auto it = cell_value.find(cell);
    if (it == cell_value.end()) throw Error("potential evaluated outside its region");
    Vec ctr = cover->cell_center(cell);
    // short straight segment center -> x
    Vec to_lift(x.n);
    for (int i = 0; i < x.n; ++i) to_lift[i] = ctr[i] + wrapped_offset(x[i], ctr[i]);
    Segment seg = make_segment(ctr, to_lift, 9);
    double acc = it->second;
    for (std::size_t k = 0; k + 1 < seg.nodes.size(); ++k) {
      Vec a = seg.nodes[k], b = seg.nodes[k + 1];
      Vec d(a.n);
      for (int i = 0; i < a.n; ++i) {
        double diff = b[i] - a[i];
        diff -= std::round(diff);
        d[i] = diff;
      }
      Vec mid = wrap01(a + 0.5 * d);
      double fa[kMaxDim], fm[kMaxDim], fb[kMaxDim];
      form_eval(a.c.data(), fa);
      form_eval(mid.c.data(), fm);
      Vec bw = wrap01(a + d);
      form_eval(bw.c.data(), fb);
      double sa = 0, sm = 0, sb = 0;
      for (int i = 0; i < a.n; ++i) {
        sa += fa[i] * d[i];
        sm += fm[i] * d[i];
        sb += fb[i] * d[i];
      }
      acc += (sa + 4 * sm + sb) / 6.0;
    }
    return acc;
  }

  Vec gradient(const Vec& x, double h = 1e-5) const {
    Vec g(x.n);
    for (int i = 0; i < x.n; ++i) {
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      g[i] = ((*this)(wrap01(xp)) - (*this)(wrap01(xm))) / (2 * h);
    }
    return g;
  }
};

struct ExactnessResult {
  std::optional<RegionPotential> potential;
  // when absent: one loop with nonvanishing period
  double violating_period = 0;
  std::vector<long> violating_loop_cells;
};

// `region` is a union of orbit-boxes, closed under the group by construction.
inline ExactnessResult exactness_on_region(const BoxCover& cover, const BasicOneForm& form,
                                           const std::vector<int>& region_orbits,
                                           double period_tol = 1e-6) {
  ExactnessResult out;
  const auto& pres = cover.presentation();
  // collect torus cells of the region
  std::vector<long> cells;
  std::map<long, int> cell_index;
  for (int o : region_orbits)
    for (long c : cover.cells_of_orbit(o))
      if (!cell_index.count(c)) {
        cell_index[c] = static_cast<int>(cells.size());
        cells.push_back(c);
      }
  if (cells.empty()) throw Error("exactness_on_region: empty region");

  auto edge_integral = [&](long cu, long cv) {
    Vec a = cover.cell_center(cu), b = cover.cell_center(cv);
    Vec to_lift(a.n);
    for (int i = 0; i < a.n; ++i) to_lift[i] = a[i] + wrapped_offset(b[i], a[i]);
    return detail::straight_form_integral(form, a, to_lift, 17);
  };

  // spanning forest over face adjacency
  std::map<long, double> value;
  std::map<long, long> parent;
  std::vector<std::pair<long, long>> cross_edges;
  for (long root : cells) {
    if (value.count(root)) continue;
    value[root] = 0;
    parent[root] = -1;
    std::vector<long> queue{root};
    std::size_t qi = 0;
    while (qi < queue.size()) {
      long u = queue[qi++];
      for (long v : cover.face_neighbors(u)) {
        if (!cell_index.count(v)) continue;
        if (value.count(v)) {
          if (v != parent[u] && u < v) cross_edges.push_back({u, v});
          continue;
        }
        value[v] = value[u] + edge_integral(u, v);
        parent[v] = u;
        queue.push_back(v);
      }
    }
  }

  auto tree_path = [&](long c) {
    std::vector<long> path;
    while (c >= 0) {
      path.push_back(c);
      c = parent[c];
    }
    return path;  // c .. root
  };

  // independent loops: tree path + cross edge
  for (auto [u, v] : cross_edges) {
    double period = value[u] + edge_integral(u, v) - value[v];
    if (std::fabs(period) > period_tol) {
      out.violating_period = period;
      auto pu = tree_path(u), pv = tree_path(v);
      out.violating_loop_cells = pu;
      out.violating_loop_cells.insert(out.violating_loop_cells.end(), pv.rbegin(), pv.rend());
      return out;
    }
  }

  RegionPotential pot;
  pot.cover = &cover;
  pot.pres = &pres;
  const BasicOneForm* fp = &form;
  pot.form_eval = [fp](const double* x, double* outv) { fp->eval_into(x, outv); };

  // group-average the per-cell constants so the potential is invariant
  std::map<long, double> averaged;
  for (long c : cells) {
    double sum = 0;
    int k = 0;
    for (const auto& g : pres.group()) {
      long gc = cover.cell_image(g, c);
      auto it = value.find(gc);
      if (it != value.end()) {
        sum += it->second;
        ++k;
      }
    }
    averaged[c] = sum / std::max(1, k);
  }
  // averaging is only valid if it kept df = omega; verify on tree edges
  for (long c : cells) {
    long p = parent[c];
    if (p < 0) continue;
    double lhs = averaged[c] - averaged[p];
    double rhs = value[c] - value[p];
    if (std::fabs(lhs - rhs) > period_tol) {
      out.violating_period = lhs - rhs;
      out.violating_loop_cells = {p, c};
      return out;
    }
  }
  pot.cell_value = std::move(averaged);
  out.potential = std::move(pot);
  return out;
}

}  // namespace orbiflow
