#pragma once

// The weighted transition graph over an orbit-box cover: construction from
// flow samples, strongly connected components, the chain-recurrent set, the
// split into class-trivial and class-nontrivial recurrence, box-scale
// invariant measures, and asymptotic pairings.
//
// Edge weights are line integrals of the class representative along a path
// anchored at box centers (center -> sample -> flow -> target center), so the
// weight of any graph cycle is a genuine loop integral of the representative.

#include <cstdio>
#include <cstring>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <vector>

#include "orbiflow/boxes.hpp"
#include "orbiflow/core.hpp"
#include "orbiflow/fields.hpp"
#include "orbiflow/flow.hpp"
#include "orbiflow/geometry.hpp"

namespace orbiflow {

struct GraphParams {
  int resolution = 64;
  double T_edge = 1.0;
  double delta = -1;  // default: half a box width
  double step = 2e-3;
  int samples_per_axis = 4;
  uint64_t seed = 1;
  double w_tol = 1e-3;  // zero-cycle tolerance
};

struct GraphEdge {
  int to = 0;
  double weight = 0;
  int count = 0;  // samples whose image lands in this box (Ulam counts)
};

class TransitionGraph {
 public:
  TransitionGraph(BoxCover cover, GraphParams params, Vec periods, bool integral)
      : cover_(std::move(cover)), params_(params), periods_(periods), integral_(integral) {
    edges_.resize(cover_.orbit_count());
  }

  const BoxCover& cover() const { return cover_; }
  const GraphParams& params() const { return params_; }
  const Vec& periods() const { return periods_; }
  bool integral_class() const { return integral_; }
  int node_count() const { return cover_.orbit_count(); }
  const std::vector<GraphEdge>& out(int node) const { return edges_[node]; }
  const std::vector<std::vector<GraphEdge>>& edges() const { return edges_; }
  std::vector<std::vector<GraphEdge>>& mutable_edges() { return edges_; }
  long edge_count() const {
    long m = 0;
    for (const auto& e : edges_) m += static_cast<long>(e.size());
    return m;
  }

 private:
  BoxCover cover_;
  GraphParams params_;
  Vec periods_;
  bool integral_;
  std::vector<std::vector<GraphEdge>> edges_;
};

// Build the transition graph: integrate the per-box sample pattern for time
// T_edge, connect each box to the box containing every image point and to
// every box whose center lies within delta of it.
inline TransitionGraph build_graph(const EquivariantVectorField& field,
                                   const CohomologyClass& cls, GraphParams params) {
  const auto& pres = field.presentation();
  BoxCover cover(pres, params.resolution);
  double w = cover.width();
  if (params.delta <= 0) params.delta = 0.5 * w;
  if (params.delta < 0.49 * w)
    throw Error("delta below half a box width: discretization error not absorbed");
  auto scale = cls.compute_scale();
  if (params.delta > scale.second + 1e-12)
    throw Error("scale violation: delta too large for the class");

  TransitionGraph graph(cover, params, cls.period_vector(), cls.integral());
  const BoxCover& cv = graph.cover();
  const auto& form = cls.representative();
  int n = pres.dim();
  int ring = static_cast<int>(std::ceil(params.delta * params.resolution)) + 1;

  std::vector<std::vector<GraphEdge>> rows(cv.orbit_count());
  parallel_for(cv.orbit_count(), [&](std::size_t o) {
    Vec anchor = cv.orbit_center(static_cast<int>(o));
    auto samples = cv.sample_points(static_cast<int>(o), params.samples_per_axis);
    std::vector<GraphEdge>& row = rows[o];
    for (const auto& s : samples) {
      Vec to_lift(n);
      for (int i = 0; i < n; ++i) to_lift[i] = anchor[i] + wrapped_offset(s[i], anchor[i]);
      double corr_src = detail::straight_form_integral(form, anchor, to_lift, 9);
      FlowSample fs = integrate_with_form(field, &form, s, params.T_edge, params.step);
      Vec y = fs.end_lifted;
      Vec yw = wrap01(y);
      long containing = cv.cell_of_point(yw);
      // candidate targets: cells in a ring around the image point
      auto yco = cv.cell_coords(containing);
      std::array<int, kMaxDim> off{};
      std::function<void(int)> visit = [&](int axis) {
        if (axis == n) {
          long cell = 0;
          for (int i = n - 1; i >= 0; --i) {
            long v = (yco[i] + off[i] + 8L * params.resolution) % params.resolution;
            cell = cell * params.resolution + v;
          }
          Vec ctr = cv.cell_center(cell);
          bool is_containing = cell == containing;
          double dist = torus_dist(yw, ctr);
          if (!is_containing && dist >= params.delta) return;
          Vec ctr_lift(n);
          for (int i = 0; i < n; ++i) ctr_lift[i] = yw[i] + wrapped_offset(ctr[i], yw[i]);
          double corr_tgt = detail::straight_form_integral(form, yw, ctr_lift, 9);
          double weight = corr_src + fs.form_integral + corr_tgt;
          int tgt = cv.orbit_of_cell(cell);
          bool found = false;
          for (auto& e : row)
            if (e.to == tgt) {
              e.count += is_containing ? 1 : 0;
              found = true;
              break;
            }
          if (!found) row.push_back(GraphEdge{tgt, weight, is_containing ? 1 : 0});
          return;
        }
        for (off[axis] = -ring; off[axis] <= ring; ++off[axis]) visit(axis + 1);
      };
      visit(0);
    }
    std::sort(row.begin(), row.end(),
              [](const GraphEdge& a, const GraphEdge& b) { return a.to < b.to; });
  });
  graph.mutable_edges() = std::move(rows);
  return graph;
}

// --- strongly connected components ----------------------------------------

using EdgeList = std::vector<std::vector<GraphEdge>>;

struct SccDecomposition {
  std::vector<int> comp_of;            // node -> component id (reverse topological)
  std::vector<std::vector<int>> members;
  std::vector<char> recurrent_node;    // in a nontrivial SCC or carrying a self-loop
};

inline SccDecomposition scc_decompose(const EdgeList& edges) {
  int n = static_cast<int>(edges.size());
  SccDecomposition out;
  out.comp_of.assign(n, -1);
  std::vector<int> index(n, -1), low(n, 0), stack;
  std::vector<char> on_stack(n, 0);
  int next_index = 0;
  // iterative Tarjan
  struct Frame {
    int v;
    std::size_t ei;
  };
  for (int root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    std::vector<Frame> call;
    call.push_back({root, 0});
    while (!call.empty()) {
      auto& fr = call.back();
      int v = fr.v;
      if (fr.ei == 0) {
        index[v] = low[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = 1;
      }
      bool descended = false;
      while (fr.ei < edges[v].size()) {
        int to = edges[v][fr.ei].to;
        ++fr.ei;
        if (index[to] < 0) {
          call.push_back({to, 0});
          descended = true;
          break;
        }
        if (on_stack[to]) low[v] = std::min(low[v], index[to]);
      }
      if (descended) continue;
      if (low[v] == index[v]) {
        std::vector<int> comp;
        for (;;) {
          int w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          out.comp_of[w] = static_cast<int>(out.members.size());
          comp.push_back(w);
          if (w == v) break;
        }
        out.members.push_back(std::move(comp));
      }
      call.pop_back();
      if (!call.empty()) {
        int parent = call.back().v;
        low[parent] = std::min(low[parent], low[v]);
      }
    }
  }
  out.recurrent_node.assign(n, 0);
  for (const auto& comp : out.members)
    if (comp.size() > 1)
      for (int v : comp) out.recurrent_node[v] = 1;
  for (int v = 0; v < n; ++v)
    for (const auto& e : edges[v])
      if (e.to == v) out.recurrent_node[v] = 1;
  return out;
}

inline SccDecomposition scc_decompose(const TransitionGraph& g) {
  return scc_decompose(g.edges());
}

// Chain-recurrent boxes: nodes on some directed cycle.
inline std::vector<int> chain_recurrent_set(const TransitionGraph& g) {
  auto scc = scc_decompose(g);
  std::vector<int> out;
  for (int v = 0; v < g.node_count(); ++v)
    if (scc.recurrent_node[v]) out.push_back(v);
  return out;
}

// --- class-relative recurrence ---------------------------------------------

struct RecurrenceReport {
  std::vector<int> R_boxes, Rxi_boxes, Cxi_boxes;
  bool cxi_closed = true;
  bool condition_b_holds = true;
  bool has_cxi_cycles = false;
  double min_cycle_pairing = 0;  // most negative detected cycle pairing in Cxi
  double max_cycle_pairing = 0;  // least negative / most positive
  double lambda_estimate = 0;    // slowest per-time decay rate over Cxi cycles
  std::vector<std::string> warnings;
};

namespace detail {

struct LocalGraph {
  std::vector<int> nodes;              // global ids
  std::vector<int> local_of;           // global -> local (or -1)
  std::vector<std::vector<std::pair<int, double>>> adj;  // local edges with reduced weights
};

// Reduce SCC edge weights by a breadth-first potential: cycle sums are
// preserved, tree edges become exactly zero, and for integral classes the
// reduced weights snap to integers.
inline LocalGraph reduced_subgraph(const EdgeList& g, const std::vector<int>& nodes,
                                   double w_tol, bool integral,
                                   std::vector<std::string>* warnings) {
  LocalGraph lg;
  lg.nodes = nodes;
  lg.local_of.assign(g.size(), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) lg.local_of[nodes[i]] = static_cast<int>(i);
  int m = static_cast<int>(nodes.size());
  lg.adj.resize(m);

  // BFS potentials along any spanning arborescence
  std::vector<double> phi(m, 0);
  std::vector<char> seen(m, 0);
  std::deque<int> queue;
  queue.push_back(0);
  seen[0] = 1;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    int gu = nodes[u];
    for (const auto& e : g[gu]) {
      int lv = lg.local_of[e.to];
      if (lv < 0 || seen[lv]) continue;
      seen[lv] = 1;
      phi[lv] = phi[u] + e.weight;
      queue.push_back(lv);
    }
  }
  double worst_snap = 0;
  for (int u = 0; u < m; ++u) {
    int gu = nodes[u];
    for (const auto& e : g[gu]) {
      int lv = lg.local_of[e.to];
      if (lv < 0) continue;
      double rho = phi[u] + e.weight - phi[lv];
      if (std::fabs(rho) <= w_tol) {
        rho = 0;
      } else if (integral) {
        double r = std::round(rho);
        worst_snap = std::max(worst_snap, std::fabs(rho - r));
        if (std::fabs(rho - r) <= 0.2)
          rho = r;
      }
      lg.adj[u].push_back({lv, rho});
    }
  }
  if (integral && worst_snap > 0.05 && warnings)
    warnings->push_back("cycle weights deviate from integers by up to " +
                        std::to_string(worst_snap) + "; resolution may be too coarse");
  return lg;
}

// Nodes on a zero-weight cycle of a subgraph without positive cycles
// (pass negate=true when there are no negative cycles instead). Longest-walk
// potentials converge, every zero cycle is made of tight edges, and every
// tight cycle has weight zero, so the zero-cycle nodes are exactly the nodes
// on cycles of the tight subgraph.
inline std::vector<char> zero_cycle_nodes(const LocalGraph& lg, bool negate) {
  int m = static_cast<int>(lg.nodes.size());
  // longest-walk potentials from a virtual source (all zeros)
  std::vector<double> p(m, 0.0);
  std::vector<char> in_queue(m, 1);
  std::deque<int> queue;
  for (int v = 0; v < m; ++v) queue.push_back(v);
  long guard = 0, cap = 64L * m * m + 100000;
  while (!queue.empty() && guard++ < cap) {
    int u = queue.front();
    queue.pop_front();
    in_queue[u] = 0;
    for (const auto& [to, w0] : lg.adj[u]) {
      double w = negate ? -w0 : w0;
      if (p[u] + w > p[to] + 1e-12) {
        p[to] = p[u] + w;
        if (!in_queue[to]) {
          in_queue[to] = 1;
          queue.push_back(to);
        }
      }
    }
  }
  // Tarjan on the tight subgraph
  std::vector<int> index(m, -1), low(m, 0), stack;
  std::vector<char> on_stack(m, 0), out(m, 0);
  std::vector<std::vector<int>> comps;
  int next_index = 0;
  struct Frame {
    int v;
    std::size_t ei;
  };
  std::vector<std::vector<int>> zadj(m);
  for (int v = 0; v < m; ++v)
    for (const auto& [to, w0] : lg.adj[v]) {
      double w = negate ? -w0 : w0;
      if (std::fabs(p[v] + w - p[to]) <= 1e-9) zadj[v].push_back(to);
    }
  for (int root = 0; root < m; ++root) {
    if (index[root] >= 0) continue;
    std::vector<Frame> call{{root, 0}};
    while (!call.empty()) {
      auto& fr = call.back();
      int v = fr.v;
      if (fr.ei == 0) {
        index[v] = low[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = 1;
      }
      bool descended = false;
      while (fr.ei < zadj[v].size()) {
        int to = zadj[v][fr.ei];
        ++fr.ei;
        if (index[to] < 0) {
          call.push_back({to, 0});
          descended = true;
          break;
        }
        if (on_stack[to]) low[v] = std::min(low[v], index[to]);
      }
      if (descended) continue;
      if (low[v] == index[v]) {
        std::vector<int> comp;
        for (;;) {
          int w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp.push_back(w);
          if (w == v) break;
        }
        comps.push_back(std::move(comp));
      }
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
    }
  }
  for (const auto& comp : comps)
    if (comp.size() > 1)
      for (int v : comp) out[v] = 1;
  for (int v = 0; v < m; ++v)
    for (int to : zadj[v])
      if (to == v) out[v] = 1;
  return out;
}

struct CycleWitness {
  bool found = false;
  double weight = 0;
  int length = 0;
};

// Queue-based Bellman-Ford negative-cycle detection on reduced weights
// (negate them to detect positive cycles). Returns one witness cycle.
inline CycleWitness detect_negative_cycle(const LocalGraph& lg, bool negate) {
  int m = static_cast<int>(lg.nodes.size());
  std::vector<double> dist(m, 0);
  std::vector<int> parent(m, -1), parent_edge(m, -1), cnt(m, 0);
  std::vector<char> in_queue(m, 1);
  std::deque<int> queue;
  for (int v = 0; v < m; ++v) queue.push_back(v);
  long relaxations = 0;
  long cap = 200L * m + 200L * static_cast<long>(lg.adj.size()) + 100000;
  CycleWitness wit;
  auto extract = [&](int v) {
    // walk parents m steps to land on the cycle, then collect it
    int x = v;
    for (int k = 0; k < m; ++k)
      if (parent[x] >= 0) x = parent[x];
    std::vector<int> cyc;
    std::vector<char> mark(m, 0);
    int y = x;
    while (!mark[y]) {
      mark[y] = 1;
      cyc.push_back(y);
      y = parent[y];
      if (y < 0) return;  // disconnected parent chain; give up on the witness
    }
    // y is on the cycle; trim the tail
    std::size_t start = 0;
    while (start < cyc.size() && cyc[start] != y) ++start;
    double total = 0;
    int len = 0;
    for (std::size_t i = start; i < cyc.size(); ++i) {
      int node = cyc[i];
      int prev = parent[node];
      // find the extremal edge prev -> node in relaxation direction
      bool first = true;
      double chosen = 0;
      for (const auto& [to, w] : lg.adj[prev])
        if (to == node) {
          double rw = negate ? -w : w;
          if (first || rw < chosen) chosen = rw;
          first = false;
        }
      if (!first) {
        total += negate ? -chosen : chosen;  // accumulate the true weight
        ++len;
      }
    }
    wit.weight = total;
    wit.length = len;
  };
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    in_queue[u] = 0;
    for (const auto& [to, w0] : lg.adj[u]) {
      double w = negate ? -w0 : w0;
      if (dist[u] + w < dist[to] - 1e-12) {
        dist[to] = dist[u] + w;
        parent[to] = u;
        parent_edge[to] = 0;
        if (++cnt[to] > m) {
          wit.found = true;
          extract(to);
          return wit;
        }
        if (!in_queue[to]) {
          in_queue[to] = 1;
          queue.push_back(to);
        }
        if (++relaxations > cap) {
          wit.found = true;  // conservatively treat as cycle-present
          extract(to);
          return wit;
        }
      }
    }
  }
  return wit;
}

// Minimum-|weight| cycle in a subgraph whose cycles all have one strict sign:
// Dijkstra on |reduced weight| from each node, seeded by its outgoing edges.
struct ExtremalCycles {
  bool any = false;
  double min_abs = 0, max_abs = 0;
  double min_rate = 0;  // min over found cycles of |weight| / length
};

inline ExtremalCycles same_sign_cycle_bounds(const LocalGraph& lg, int dijkstra_cap = 2048) {
  int m = static_cast<int>(lg.nodes.size());
  ExtremalCycles out;
  auto consider = [&](double wabs, int len) {
    if (wabs <= 0) return;
    double rate = wabs / std::max(1, len);
    if (!out.any) {
      out.any = true;
      out.min_abs = out.max_abs = wabs;
      out.min_rate = rate;
    } else {
      out.min_abs = std::min(out.min_abs, wabs);
      out.max_abs = std::max(out.max_abs, wabs);
      out.min_rate = std::min(out.min_rate, rate);
    }
  };
  for (int v = 0; v < m; ++v)
    for (const auto& [to, w] : lg.adj[v])
      if (to == v && w != 0) consider(std::fabs(w), 1);
  if (m > dijkstra_cap) return out;  // self-loop bounds only on very large parts
  // Dijkstra with |w| edge costs, tracking hop counts
  for (int src = 0; src < m; ++src) {
    std::vector<double> dist(m, std::numeric_limits<double>::infinity());
    std::vector<int> hops(m, 0);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    dist[src] = 0;
    pq.push({0, src});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[u] + 1e-15) continue;
      for (const auto& [to, w] : lg.adj[u]) {
        double nd = d + std::fabs(w);
        if (to == src) {
          if (nd > 0) consider(nd, hops[u] + 1);
          continue;
        }
        if (nd < dist[to] - 1e-15) {
          dist[to] = nd;
          hops[to] = hops[u] + 1;
          pq.push({nd, to});
        }
      }
    }
  }
  return out;
}

}  // namespace detail

// Zero-pairing-cycle classification over an arbitrary weighted digraph:
// a node is class-trivial when some closed walk through it has total weight
// zero (within tolerance; exact for integer weights). Detection: a component
// with no nonzero cycles is entirely trivial; integer components carrying
// cycles of both signs combine them to exact zero through every node; in the
// remaining cases zero cycles are exactly the cycles of zero-reduced-weight
// edges.
struct ZeroCycleClassification {
  std::vector<char> in_R, in_Rxi, in_Cxi;
  std::vector<std::string> warnings;
  SccDecomposition scc;
};

inline ZeroCycleClassification classify_zero_cycles(const EdgeList& edges, double w_tol,
                                                    bool integral) {
  ZeroCycleClassification out;
  out.scc = scc_decompose(edges);
  auto& scc = out.scc;
  int n = static_cast<int>(edges.size());
  out.in_R.assign(n, 0);
  out.in_Rxi.assign(n, 0);
  out.in_Cxi.assign(n, 0);
  for (int v = 0; v < n; ++v) out.in_R[v] = scc.recurrent_node[v];

  for (const auto& comp : scc.members) {
    bool any_recurrent = false;
    for (int v : comp)
      if (out.in_R[v]) any_recurrent = true;
    if (!any_recurrent) continue;
    if (comp.size() == 1) {
      // singleton: classify by its self-loop weights; integer loops of both
      // signs combine to exact zero
      int v = comp[0];
      bool zero_loop = false, any_loop = false, pos_loop = false, neg_loop = false;
      for (const auto& e : edges[v])
        if (e.to == v) {
          any_loop = true;
          double w = e.weight;
          if (integral) {
            double r = std::round(w);
            if (std::fabs(w - r) <= 0.2) w = r;
          }
          if (std::fabs(w) <= w_tol)
            zero_loop = true;
          else if (w > 0)
            pos_loop = true;
          else
            neg_loop = true;
        }
      if (!any_loop) continue;
      bool trivial = zero_loop || (integral && pos_loop && neg_loop);
      (trivial ? out.in_Rxi : out.in_Cxi)[v] = 1;
      continue;
    }
    auto lg = detail::reduced_subgraph(edges, comp, w_tol, integral, &out.warnings);
    auto neg = detail::detect_negative_cycle(lg, false);
    auto pos = detail::detect_negative_cycle(lg, true);
    if (!neg.found && !pos.found) {
      for (int v : comp) out.in_Rxi[v] = 1;  // every cycle pairs to zero
      continue;
    }
    if (neg.found && pos.found && integral) {
      // integer cycle pairings of both signs combine to exact zero through
      // every node of the component
      for (int v : comp) out.in_Rxi[v] = 1;
      continue;
    }
    auto zr = detail::zero_cycle_nodes(lg, /*negate=*/pos.found);
    for (std::size_t i = 0; i < comp.size(); ++i)
      (zr[i] ? out.in_Rxi : out.in_Cxi)[comp[i]] = 1;
  }
  return out;
}

// Split the chain-recurrent boxes into the class-trivial part (on a cycle of
// zero pairing) and its complement, then evaluate the uniform negative-cycle
// bound over the complement.
inline RecurrenceReport xi_recurrent_split(const TransitionGraph& g) {
  RecurrenceReport rep;
  double w_tol = g.params().w_tol;
  bool integral = g.integral_class();
  int n = g.node_count();
  auto cls = classify_zero_cycles(g.edges(), w_tol, integral);
  const auto& scc = cls.scc;
  const auto& in_Rxi = cls.in_Rxi;
  const auto& in_c0 = cls.in_Cxi;
  rep.warnings = cls.warnings;

  for (int v = 0; v < n; ++v) {
    if (cls.in_R[v]) rep.R_boxes.push_back(v);
    if (in_Rxi[v]) rep.Rxi_boxes.push_back(v);
    if (in_c0[v]) rep.Cxi_boxes.push_back(v);
  }

  // closedness: does the box neighborhood of the complement reach the
  // class-trivial part?
  if (!rep.Cxi_boxes.empty() && !rep.Rxi_boxes.empty()) {
    auto nbhd = g.cover().orbit_neighborhood(rep.Cxi_boxes, 1);
    for (int o : nbhd)
      if (in_Rxi[o]) {
        rep.cxi_closed = false;
        break;
      }
  }

  // cycle-pairing bounds over the complement
  if (!rep.Cxi_boxes.empty()) {
    std::vector<char> in_c(n, 0);
    for (int v : rep.Cxi_boxes) in_c[v] = 1;
    // induced subgraph components
    bool any_pos = false;
    double max_pair = -std::numeric_limits<double>::infinity();
    double min_pair = std::numeric_limits<double>::infinity();
    double lambda = std::numeric_limits<double>::infinity();
    EdgeList induced(n);
    for (int v = 0; v < n; ++v) {
      if (!in_c[v]) continue;
      for (const auto& e : g.out(v))
        if (in_c[e.to]) induced[v].push_back(e);
    }
    for (const auto& comp : scc.members) {
      std::vector<int> sub;
      for (int v : comp)
        if (in_c[v]) sub.push_back(v);
      if (sub.empty()) continue;
      auto lg = detail::reduced_subgraph(induced, sub, w_tol, integral, nullptr);
      bool has_any_edge = false;
      for (const auto& a : lg.adj)
        if (!a.empty()) has_any_edge = true;
      if (!has_any_edge) continue;
      auto pos = detail::detect_negative_cycle(lg, true);
      if (pos.found) {
        any_pos = true;
        rep.has_cxi_cycles = true;
        if (pos.length > 0) {
          max_pair = std::max(max_pair, pos.weight);
          min_pair = std::min(min_pair, pos.weight);
        } else {
          max_pair = std::max(max_pair, w_tol);  // witness weight unavailable
        }
        continue;
      }
      auto ext = detail::same_sign_cycle_bounds(lg);
      if (ext.any) {
        rep.has_cxi_cycles = true;
        max_pair = std::max(max_pair, -ext.min_abs);
        min_pair = std::min(min_pair, -ext.max_abs);
        lambda = std::min(lambda, ext.min_rate / g.params().T_edge);
      }
    }
    if (rep.has_cxi_cycles) {
      rep.max_cycle_pairing = max_pair;
      rep.min_cycle_pairing = min_pair;
      rep.condition_b_holds = !any_pos && max_pair <= -1.0 + w_tol;
      rep.lambda_estimate = std::isfinite(lambda) ? lambda : 0.0;
    } else {
      rep.condition_b_holds = true;
    }
  }
  return rep;
}

// --- box-scale invariant measures ------------------------------------------

struct BoxMeasure {
  std::vector<double> weight;  // per orbit-box, sums to 1
};

// Stationary distribution of the row-stochastic sample-count matrix, by
// power iteration. With `restrict_to` the chain is restricted to the given
// node set and rows renormalized (leaking mass dropped); rows that lose all
// targets become absorbing.
inline BoxMeasure ulam_measure(const TransitionGraph& g,
                               const std::vector<int>* restrict_to = nullptr,
                               double tol = 1e-10, int max_iter = 100000) {
  int n = g.node_count();
  std::vector<char> in(n, restrict_to == nullptr);
  if (restrict_to)
    for (int v : *restrict_to) in[v] = 1;
  struct Row {
    std::vector<std::pair<int, double>> probs;
  };
  std::vector<Row> rows(n);
  for (int v = 0; v < n; ++v) {
    if (!in[v]) continue;
    double total = 0;
    for (const auto& e : g.out(v))
      if (e.count > 0 && in[e.to]) total += e.count;
    if (total == 0) {
      rows[v].probs.push_back({v, 1.0});
      continue;
    }
    for (const auto& e : g.out(v))
      if (e.count > 0 && in[e.to]) rows[v].probs.push_back({e.to, e.count / total});
  }
  std::vector<double> x(n, 0), y(n, 0);
  int support = 0;
  for (int v = 0; v < n; ++v)
    if (in[v]) ++support;
  if (support == 0) throw Error("ulam_measure: empty support");
  for (int v = 0; v < n; ++v)
    if (in[v]) x[v] = 1.0 / support;
  for (int it = 0; it < max_iter; ++it) {
    std::fill(y.begin(), y.end(), 0.0);
    for (int v = 0; v < n; ++v) {
      if (x[v] == 0) continue;
      for (const auto& [to, p] : rows[v].probs) y[to] += x[v] * p;
    }
    double res = 0;
    for (int v = 0; v < n; ++v) res = std::max(res, std::fabs(y[v] - x[v]));
    x.swap(y);
    if (res < tol) {
      BoxMeasure m;
      m.weight = std::move(x);
      return m;
    }
  }
  throw Error("ulam_measure: power iteration did not converge");
}

// <class, asymptotic cycle> for a box measure: the measure-weighted average
// of the contraction over box samples.
inline double asymptotic_pairing(const TransitionGraph& g, const BoxMeasure& mu,
                                 const EquivariantVectorField& field,
                                 const BasicOneForm& form) {
  auto f = contraction(field, form);
  const auto& cv = g.cover();
  KahanSum total;
  for (int o = 0; o < g.node_count(); ++o) {
    if (mu.weight[o] == 0) continue;
    auto pts = cv.sample_points(o, g.params().samples_per_axis);
    KahanSum box;
    for (const auto& p : pts) box.add(f(p));
    total.add(mu.weight[o] * box.value() / static_cast<double>(pts.size()));
  }
  return total.value();
}

// --- cache container ---------------------------------------------------------

inline void write_graph_cache(const TransitionGraph& g, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw Error("cannot open cache file for writing: " + path);
  auto put = [&](const void* p, std::size_t sz) { std::fwrite(p, 1, sz, f); };
  put("OFLG", 4);
  uint32_t version = 1;
  put(&version, 4);
  int32_t dim = g.cover().dim(), res = g.params().resolution;
  put(&dim, 4);
  put(&res, 4);
  double t_edge = g.params().T_edge, delta = g.params().delta, step = g.params().step;
  put(&t_edge, 8);
  put(&delta, 8);
  put(&step, 8);
  int32_t samples = g.params().samples_per_axis;
  put(&samples, 4);
  uint64_t seed = g.params().seed;
  put(&seed, 8);
  double wt = g.params().w_tol;
  put(&wt, 8);
  int32_t nodes = g.node_count();
  put(&nodes, 4);
  uint8_t integral = g.integral_class() ? 1 : 0;
  put(&integral, 1);
  for (int i = 0; i < dim; ++i) {
    double p = g.periods()[i];
    put(&p, 8);
  }
  for (int v = 0; v < nodes; ++v) {
    int64_t rep = g.cover().rep_cell(v);
    put(&rep, 8);
    int32_t deg = static_cast<int32_t>(g.out(v).size());
    put(&deg, 4);
    for (const auto& e : g.out(v)) {
      int32_t to = e.to, count = e.count;
      put(&to, 4);
      put(&e.weight, 8);
      put(&count, 4);
    }
  }
  std::fclose(f);
}

inline TransitionGraph read_graph_cache(const QuotientPresentation& pres,
                                        const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw Error("cannot open cache file: " + path);
  auto get = [&](void* p, std::size_t sz) {
    if (std::fread(p, 1, sz, f) != sz) {
      std::fclose(f);
      throw Error("truncated cache file: " + path);
    }
  };
  char magic[4];
  get(magic, 4);
  if (std::memcmp(magic, "OFLG", 4) != 0) {
    std::fclose(f);
    throw Error("bad cache magic");
  }
  uint32_t version;
  get(&version, 4);
  if (version != 1) {
    std::fclose(f);
    throw Error("unsupported cache version");
  }
  int32_t dim, res;
  get(&dim, 4);
  get(&res, 4);
  if (dim != pres.dim()) {
    std::fclose(f);
    throw Error("cache dimension mismatch");
  }
  GraphParams params;
  params.resolution = res;
  get(&params.T_edge, 8);
  get(&params.delta, 8);
  get(&params.step, 8);
  int32_t samples;
  get(&samples, 4);
  params.samples_per_axis = samples;
  get(&params.seed, 8);
  get(&params.w_tol, 8);
  int32_t nodes;
  get(&nodes, 4);
  uint8_t integral;
  get(&integral, 1);
  Vec periods(dim);
  for (int i = 0; i < dim; ++i) get(&periods.c[i], 8);
  BoxCover cover(pres, res);
  if (cover.orbit_count() != nodes) {
    std::fclose(f);
    throw Error("cache node count mismatch");
  }
  TransitionGraph g(std::move(cover), params, periods, integral != 0);
  for (int v = 0; v < nodes; ++v) {
    int64_t rep;
    get(&rep, 8);
    int32_t deg;
    get(&deg, 4);
    std::vector<GraphEdge> row(deg);
    for (auto& e : row) {
      int32_t to, count;
      get(&to, 4);
      get(&e.weight, 8);
      get(&count, 4);
      e.to = to;
      e.count = count;
    }
    g.mutable_edges()[v] = std::move(row);
  }
  std::fclose(f);
  return g;
}

}  // namespace orbiflow
