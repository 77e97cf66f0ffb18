#pragma once

// Box discretization of the quotient: axis-aligned torus cells merged into
// group orbits, with deterministic per-box sample patterns.

#include <algorithm>
#include <vector>

#include "orbiflow/core.hpp"
#include "orbiflow/geometry.hpp"

namespace orbiflow {

class BoxCover {
 public:
  BoxCover(const QuotientPresentation& pres, int resolution)
      : pres_(&pres), res_(resolution) {
    if (resolution < 2 || (resolution & (resolution - 1)) != 0)
      throw Error("resolution must be a power of two");
    // every group element must map cells to cells
    for (const auto& g : pres.group())
      for (int i = 0; i < pres.dim(); ++i) {
        Rat scaled = g.shift[i] * Rat(resolution);
        if (scaled.denominator() != 1)
          throw Error("group shifts are not aligned with the box grid");
      }
    build_orbits();
  }

  const QuotientPresentation& presentation() const { return *pres_; }
  int resolution() const { return res_; }
  int dim() const { return pres_->dim(); }
  double width() const { return 1.0 / res_; }
  double diameter() const { return std::sqrt(static_cast<double>(dim())) / res_; }
  long cell_count() const { return cells_; }
  int orbit_count() const { return static_cast<int>(rep_cell_.size()); }

  long cell_of_point(const Vec& x) const {
    long idx = 0;
    for (int i = dim() - 1; i >= 0; --i) {
      long k = static_cast<long>(std::floor(wrap01(x[i]) * res_));
      if (k >= res_) k = res_ - 1;
      idx = idx * res_ + k;
    }
    return idx;
  }

  int orbit_of_point(const Vec& x) const { return orbit_of_cell_[cell_of_point(x)]; }
  int orbit_of_cell(long cell) const { return orbit_of_cell_[cell]; }
  long rep_cell(int orbit) const { return rep_cell_[orbit]; }
  int orbit_size(int orbit) const { return orbit_size_[orbit]; }

  std::array<long, kMaxDim> cell_coords(long cell) const {
    std::array<long, kMaxDim> c{};
    for (int i = 0; i < dim(); ++i) {
      c[i] = cell % res_;
      cell /= res_;
    }
    return c;
  }

  Vec cell_center(long cell) const {
    auto co = cell_coords(cell);
    Vec x(dim());
    for (int i = 0; i < dim(); ++i) x[i] = (co[i] + 0.5) / res_;
    return x;
  }

  Vec orbit_center(int orbit) const { return cell_center(rep_cell_[orbit]); }

  std::vector<long> cells_of_orbit(int orbit) const {
    std::vector<long> out;
    long rep = rep_cell_[orbit];
    for (const auto& g : pres_->group()) {
      long img = cell_image(g, rep);
      if (std::find(out.begin(), out.end(), img) == out.end()) out.push_back(img);
    }
    return out;
  }

  // Image of a cell under a group element (signed-permutation linear part
  // plus grid-aligned shift), exact in integer arithmetic.
  long cell_image(const GroupElement& g, long cell) const {
    auto co = cell_coords(cell);
    std::array<long, kMaxDim> out{};
    for (int i = 0; i < dim(); ++i) {
      long acc = 0;
      for (int j = 0; j < dim(); ++j) {
        long a = g.linear.at(i, j);
        if (a == 0) continue;
        // orthogonal integer matrices are signed permutations, so a = +-1;
        // -x maps the cell [c,c+1)/res to [-c-1,-c)/res up to boundary
        acc += a > 0 ? co[j] : -(co[j] + 1);
      }
      long shift_cells = (g.shift[i] * Rat(res_)).numerator();
      long v = acc + shift_cells;
      v %= res_;
      if (v < 0) v += res_;
      out[i] = v;
    }
    long idx = 0;
    for (int i = dim() - 1; i >= 0; --i) idx = idx * res_ + out[i];
    return idx;
  }

  // Deterministic sample points in the representative cell of an orbit:
  // the center plus a k-per-axis sublattice. The same offsets are used in
  // every box, so translation-invariant flows give symmetric transitions.
  std::vector<Vec> sample_points(int orbit, int per_axis) const {
    auto co = cell_coords(rep_cell_[orbit]);
    Vec lower(dim());
    for (int i = 0; i < dim(); ++i) lower[i] = static_cast<double>(co[i]) / res_;
    std::vector<Vec> pts;
    Vec center(dim());
    for (int i = 0; i < dim(); ++i) center[i] = lower[i] + 0.5 / res_;
    pts.push_back(center);
    if (per_axis <= 0) return pts;
    std::array<int, kMaxDim> idx{};
    std::function<void(int)> rec = [&](int d) {
      if (d == dim()) {
        Vec x(dim());
        bool is_center = true;
        for (int i = 0; i < dim(); ++i) {
          double frac = (idx[i] + 0.5) / per_axis;
          x[i] = lower[i] + frac / res_;
          if (std::fabs(frac - 0.5) > 1e-12) is_center = false;
        }
        if (!is_center) pts.push_back(x);
        return;
      }
      for (idx[d] = 0; idx[d] < per_axis; ++idx[d]) rec(d + 1);
    };
    rec(0);
    return pts;
  }

  // Orbit-box neighborhoods (Moore adjacency on cells, merged to orbits).
  std::vector<int> orbit_neighborhood(const std::vector<int>& orbits, int layers = 1) const {
    std::vector<char> in(orbit_count(), 0);
    for (int o : orbits) in[o] = 1;
    std::vector<char> cur = in;
    for (int l = 0; l < layers; ++l) {
      std::vector<char> next = cur;
      for (int o = 0; o < orbit_count(); ++o) {
        if (!cur[o]) continue;
        for (long cell : cells_of_orbit(o))
          for (long nb : moore_neighbors(cell)) next[orbit_of_cell_[nb]] = 1;
      }
      cur.swap(next);
    }
    std::vector<int> out;
    for (int o = 0; o < orbit_count(); ++o)
      if (cur[o]) out.push_back(o);
    return out;
  }

  std::vector<long> moore_neighbors(long cell) const {
    auto co = cell_coords(cell);
    std::vector<long> out;
    std::array<int, kMaxDim> d{};
    std::function<void(int)> rec = [&](int axis) {
      if (axis == dim()) {
        bool self = true;
        for (int i = 0; i < dim(); ++i)
          if (d[i] != 0) self = false;
        if (self) return;
        long idx = 0;
        for (int i = dim() - 1; i >= 0; --i) {
          long v = (co[i] + d[i] + res_) % res_;
          idx = idx * res_ + v;
        }
        out.push_back(idx);
        return;
      }
      for (d[axis] = -1; d[axis] <= 1; ++d[axis]) rec(axis + 1);
    };
    rec(0);
    return out;
  }

  std::vector<long> face_neighbors(long cell) const {
    auto co = cell_coords(cell);
    std::vector<long> out;
    for (int i = 0; i < dim(); ++i)
      for (int s : {-1, 1}) {
        auto c2 = co;
        c2[i] = (c2[i] + s + res_) % res_;
        long idx = 0;
        for (int j = dim() - 1; j >= 0; --j) idx = idx * res_ + c2[j];
        out.push_back(idx);
      }
    return out;
  }

 private:
  const QuotientPresentation* pres_;
  int res_;
  long cells_ = 0;
  std::vector<int> orbit_of_cell_;
  std::vector<long> rep_cell_;
  std::vector<int> orbit_size_;

  void build_orbits() {
    cells_ = 1;
    for (int i = 0; i < dim(); ++i) cells_ *= res_;
    orbit_of_cell_.assign(cells_, -1);
    for (long c = 0; c < cells_; ++c) {
      if (orbit_of_cell_[c] >= 0) continue;
      int id = static_cast<int>(rep_cell_.size());
      std::vector<long> members;
      for (const auto& g : pres_->group()) {
        long img = cell_image(g, c);
        if (std::find(members.begin(), members.end(), img) == members.end())
          members.push_back(img);
      }
      long rep = *std::min_element(members.begin(), members.end());
      rep_cell_.push_back(rep);
      orbit_size_.push_back(static_cast<int>(members.size()));
      for (long m : members) orbit_of_cell_[m] = id;
    }
  }
};

}  // namespace orbiflow
