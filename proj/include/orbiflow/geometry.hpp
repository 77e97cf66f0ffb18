#pragma once

// Flat-torus quotient geometry: the finite isometry group, orbits, the
// quotient distance, the singular locus, and the injectivity radius.
//
// Group arithmetic is exact: integer linear parts, rational shifts reduced
// mod 1. Geometric queries work in doubles with tolerance 1e-9.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include <boost/rational.hpp>

#include "orbiflow/core.hpp"

namespace orbiflow {

using Rat = boost::rational<long long>;

inline Rat rat_mod1(Rat r) {
  long long q = r.numerator() / r.denominator();
  Rat m = r - Rat(q);
  if (m < Rat(0)) m += Rat(1);
  return m;
}

inline double to_double(const Rat& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

inline std::string rat_str(const Rat& r) {
  std::ostringstream os;
  os << r.numerator() << "/" << r.denominator();
  return os.str();
}

inline Rat parse_rat(const std::string& s) {
  auto slash = s.find('/');
  long long num = std::stoll(s.substr(0, slash));
  long long den = slash == std::string::npos ? 1 : std::stoll(s.substr(slash + 1));
  if (den == 0) throw Error("rational with zero denominator: " + s);
  return Rat(num, den);
}

// Small integer matrix, row-major, dimension <= kMaxDim.
struct IMat {
  std::array<long long, kMaxDim * kMaxDim> a{};
  int n = 0;

  static IMat identity(int n) {
    IMat m;
    m.n = n;
    for (int i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
  }
  long long& at(int i, int j) { return a[i * kMaxDim + j]; }
  long long at(int i, int j) const { return a[i * kMaxDim + j]; }

  friend IMat operator*(const IMat& x, const IMat& y) {
    IMat r;
    r.n = x.n;
    for (int i = 0; i < x.n; ++i)
      for (int j = 0; j < x.n; ++j) {
        long long s = 0;
        for (int k = 0; k < x.n; ++k) s += x.at(i, k) * y.at(k, j);
        r.at(i, j) = s;
      }
    return r;
  }
  bool operator==(const IMat& o) const {
    if (n != o.n) return false;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (at(i, j) != o.at(i, j)) return false;
    return true;
  }
  bool is_identity() const { return *this == identity(n); }

  long long det() const {
    if (n == 1) return at(0, 0);
    if (n == 2) return at(0, 0) * at(1, 1) - at(0, 1) * at(1, 0);
    long long d = 0;
    for (int j = 0; j < 3; ++j) {
      long long m = at(1, (j + 1) % 3) * at(2, (j + 2) % 3) -
                    at(1, (j + 2) % 3) * at(2, (j + 1) % 3);
      d += at(0, j) * m;
    }
    return d;
  }

  // Inverse of a unimodular matrix (det = +-1) via the adjugate.
  IMat inverse() const {
    long long d = det();
    if (d != 1 && d != -1) throw Error("matrix is not invertible over the integers");
    IMat inv;
    inv.n = n;
    if (n == 1) {
      inv.at(0, 0) = d;
      return inv;
    }
    if (n == 2) {
      inv.at(0, 0) = d * at(1, 1);
      inv.at(0, 1) = -d * at(0, 1);
      inv.at(1, 0) = -d * at(1, 0);
      inv.at(1, 1) = d * at(0, 0);
      return inv;
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        int r0 = (i + 1) % 3, r1 = (i + 2) % 3;
        int c0 = (j + 1) % 3, c1 = (j + 2) % 3;
        long long cof = at(r0, c0) * at(r1, c1) - at(r0, c1) * at(r1, c0);
        inv.at(j, i) = d * cof;  // adjugate transpose; d = 1/det
      }
    return inv;
  }

  bool is_orthogonal() const {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        long long s = 0;
        for (int k = 0; k < n; ++k) s += at(k, i) * at(k, j);
        if (s != (i == j ? 1 : 0)) return false;
      }
    return true;
  }
};

using RVec = std::array<Rat, kMaxDim>;

// One affine isometry x -> linear*x + shift (mod 1).
struct GroupElement {
  IMat linear;
  RVec shift{};

  int dim() const { return linear.n; }

  Vec apply(const Vec& x) const {
    Vec y(x.n);
    for (int i = 0; i < x.n; ++i) {
      double s = to_double(shift[i]);
      for (int j = 0; j < x.n; ++j) s += static_cast<double>(linear.at(i, j)) * x[j];
      y[i] = s;
    }
    return y;
  }
  Vec apply_mod1(const Vec& x) const { return wrap01(apply(x)); }

  // Apply only the linear part (for tangent vectors / lifted displacements).
  Vec apply_linear(const Vec& v) const {
    Vec y(v.n);
    for (int i = 0; i < v.n; ++i) {
      double s = 0;
      for (int j = 0; j < v.n; ++j) s += static_cast<double>(linear.at(i, j)) * v[j];
      y[i] = s;
    }
    return y;
  }

  GroupElement compose(const GroupElement& o) const {
    // this after o: x -> this.linear*(o.linear*x + o.shift) + this.shift
    GroupElement g;
    g.linear = linear * o.linear;
    for (int i = 0; i < dim(); ++i) {
      Rat s = shift[i];
      for (int j = 0; j < dim(); ++j) s += Rat(linear.at(i, j)) * o.shift[j];
      g.shift[i] = rat_mod1(s);
    }
    return g;
  }

  GroupElement inverse() const {
    GroupElement g;
    g.linear = linear.inverse();
    for (int i = 0; i < dim(); ++i) {
      Rat s(0);
      for (int j = 0; j < dim(); ++j) s -= Rat(g.linear.at(i, j)) * shift[j];
      g.shift[i] = rat_mod1(s);
    }
    return g;
  }

  bool operator==(const GroupElement& o) const {
    if (!(linear == o.linear)) return false;
    for (int i = 0; i < dim(); ++i)
      if (rat_mod1(shift[i]) != rat_mod1(o.shift[i])) return false;
    return true;
  }
  bool is_identity() const {
    if (!linear.is_identity()) return false;
    for (int i = 0; i < dim(); ++i)
      if (rat_mod1(shift[i]) != Rat(0)) return false;
    return true;
  }
};

inline GroupElement identity_element(int dim) {
  GroupElement g;
  g.linear = IMat::identity(dim);
  return g;
}

struct OrbifoldPoint {
  Vec rep;
  int isotropy_order = 1;
};

// The torus T^n together with a finite affine isometry group.
class QuotientPresentation {
 public:
  QuotientPresentation(int dim, std::vector<GroupElement> group)
      : dim_(dim), group_(std::move(group)) {
    validate();
    cutoff_value_ = 1.0 / static_cast<double>(group_.size());
  }

  static QuotientPresentation torus(int dim) {
    return QuotientPresentation(dim, {identity_element(dim)});
  }

  // T^2 / {+-id}: the standard four-cone-point quotient.
  static QuotientPresentation pillowcase() {
    GroupElement flip;
    flip.linear = IMat::identity(2);
    flip.linear.at(0, 0) = -1;
    flip.linear.at(1, 1) = -1;
    return QuotientPresentation(2, {identity_element(2), flip});
  }

  int dim() const { return dim_; }
  const std::vector<GroupElement>& group() const { return group_; }
  int group_order() const { return static_cast<int>(group_.size()); }
  double cutoff_value() const { return cutoff_value_; }
  bool trivial() const { return group_.size() == 1; }

  std::vector<Vec> orbit(const Vec& p) const {
    std::vector<Vec> out;
    for (const auto& g : group_) {
      Vec q = g.apply_mod1(p);
      bool dup = false;
      for (const auto& r : out)
        if (torus_dist(q, r) < 1e-9) {
          dup = true;
          break;
        }
      if (!dup) out.push_back(q);
    }
    return out;
  }

  // Lexicographically smallest orbit member after rounding to 12 decimals.
  Vec canonical_rep(const Vec& p) const {
    auto members = orbit(p);
    auto key = [](const Vec& v) {
      std::array<double, kMaxDim> k{};
      for (int i = 0; i < v.n; ++i) k[i] = std::round(v[i] * 1e12) / 1e12;
      return k;
    };
    Vec best = members[0];
    auto bk = key(best);
    for (std::size_t i = 1; i < members.size(); ++i) {
      auto kk = key(members[i]);
      if (kk < bk) {
        bk = kk;
        best = members[i];
      }
    }
    return best;
  }

  int isotropy_order(const Vec& p) const {
    int k = 0;
    for (const auto& g : group_)
      if (torus_dist(g.apply_mod1(p), wrap01(p)) < 1e-9) ++k;
    return k;
  }

  OrbifoldPoint point(const Vec& p) const {
    OrbifoldPoint op;
    op.rep = canonical_rep(wrap01(p));
    op.isotropy_order = isotropy_order(op.rep);
    return op;
  }

  // Geodesic distance on the quotient: min over group elements and lattice
  // shifts of the flat distance between lifts. Inputs are wrapped to [0,1)^n,
  // where per-axis shifts in {-1,0,1} are exhaustive.
  double quotient_distance(const Vec& p, const Vec& q) const {
    if (p.n != q.n || p.n != dim_) throw Error("quotient_distance: dimension mismatch");
    Vec pw = wrap01(p);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& g : group_) {
      Vec gq = g.apply_mod1(q);
      double s = 0;
      for (int i = 0; i < dim_; ++i) {
        double d = std::fabs(pw[i] - gq[i]);
        d = std::min(d, 1.0 - d);
        s += d * d;
      }
      best = std::min(best, s);
    }
    return std::sqrt(best);
  }

  // Minimizing (group element, lattice shift) pair: gamma*q + k closest to p
  // in the lift. Used to close chains with a short geodesic segment.
  std::pair<GroupElement, Vec> closest_lift(const Vec& p, const Vec& q) const {
    double best = std::numeric_limits<double>::infinity();
    GroupElement bg = group_[0];
    Vec bk(dim_);
    for (const auto& g : group_) {
      Vec gq = g.apply(q);
      Vec k(dim_);
      double s = 0;
      for (int i = 0; i < dim_; ++i) {
        double diff = p[i] - gq[i];
        double kk = std::round(diff);
        k[i] = kk;
        double d = diff - kk;
        s += d * d;
      }
      if (s < best) {
        best = s;
        bg = g;
        bk = k;
      }
    }
    return {bg, bk};
  }

  // All orbits of points fixed by a non-identity element, found by solving
  // (I - linear) x = shift (mod 1) exactly. Positive-dimensional fixed sets
  // are reported through one representative with `isolated` false.
  struct SingularStratum {
    OrbifoldPoint point;
    bool isolated = true;
  };

  std::vector<SingularStratum> singular_strata() const {
    std::vector<SingularStratum> out;
    auto push = [&](const Vec& x, bool isolated) {
      Vec rep = canonical_rep(x);
      for (auto& s : out)
        if (torus_dist(s.point.rep, rep) < 1e-9) return;
      SingularStratum st;
      st.point.rep = rep;
      st.point.isotropy_order = isotropy_order(rep);
      st.isolated = isolated;
      out.push_back(st);
    };
    for (const auto& g : group_) {
      if (g.is_identity()) continue;
      IMat m;  // linear - I
      m.n = dim_;
      for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j)
          m.at(i, j) = g.linear.at(i, j) - (i == j ? 1 : 0);
      RVec b;
      for (int i = 0; i < dim_; ++i) b[i] = -g.shift[i];
      for (const auto& sol : solve_mod1(m, b)) push(sol.first, sol.second);
    }
    std::sort(out.begin(), out.end(), [](const SingularStratum& a, const SingularStratum& b) {
      for (int i = 0; i < a.point.rep.n; ++i) {
        if (a.point.rep[i] < b.point.rep[i] - 1e-12) return true;
        if (a.point.rep[i] > b.point.rep[i] + 1e-12) return false;
      }
      return false;
    });
    return out;
  }

  std::vector<OrbifoldPoint> singular_locus() const {
    std::vector<OrbifoldPoint> pts;
    for (const auto& s : singular_strata()) pts.push_back(s.point);
    return pts;
  }

  // Half the smallest of: the torus systole, pairwise distances between
  // distinct singular orbits, and displacements of fixed-point-free elements.
  // On flat quotients every metric ball of this radius lifts isometrically.
  double injectivity_radius() const {
    double m = 1.0;  // unit-lattice systole
    auto sing = singular_locus();
    for (std::size_t i = 0; i < sing.size(); ++i)
      for (std::size_t j = i + 1; j < sing.size(); ++j)
        m = std::min(m, quotient_distance(sing[i].rep, sing[j].rep));
    for (const auto& g : group_) {
      if (g.is_identity()) continue;
      if (has_fixed_point(g)) continue;
      m = std::min(m, min_displacement(g));
    }
    return 0.5 * m;
  }

 private:
  int dim_;
  std::vector<GroupElement> group_;
  double cutoff_value_;

  void validate() const {
    if (dim_ < 1 || dim_ > kMaxDim) throw Error("presentation dimension out of range");
    if (group_.empty()) throw Error("group must contain the identity");
    bool has_id = false;
    for (const auto& g : group_) {
      if (g.dim() != dim_) throw Error("group element dimension mismatch");
      long long d = g.linear.det();
      if (d != 1 && d != -1) throw Error("linear part is not invertible over the integers");
      if (!g.linear.is_orthogonal())
        throw Error("linear part is not an isometry of the flat torus");
      if (g.is_identity()) has_id = true;
      // finite order
      GroupElement p = g;
      int order = 1;
      while (!p.is_identity()) {
        p = p.compose(g);
        if (++order > 512) throw Error("group element order exceeds bound");
      }
    }
    if (!has_id) throw Error("group must contain the identity");
    auto find = [&](const GroupElement& g) {
      for (const auto& h : group_)
        if (h == g) return true;
      return false;
    };
    for (const auto& g : group_) {
      if (!find(g.inverse())) throw Error("group is not inverse-closed");
      for (const auto& h : group_)
        if (!find(g.compose(h))) throw Error("group is not closed under composition");
    }
  }

  bool has_fixed_point(const GroupElement& g) const {
    IMat m;
    m.n = dim_;
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) m.at(i, j) = g.linear.at(i, j) - (i == j ? 1 : 0);
    RVec b;
    for (int i = 0; i < dim_; ++i) b[i] = -g.shift[i];
    return !solve_mod1(m, b).empty();
  }

  // min over x, k of |g(x) - x - k|; grid search with local refinement.
  double min_displacement(const GroupElement& g) const {
    int grid = 24;
    double best = std::numeric_limits<double>::infinity();
    Vec bx(dim_);
    std::array<int, kMaxDim> idx{};
    std::function<void(int)> rec = [&](int d) {
      if (d == dim_) {
        Vec x(dim_);
        for (int i = 0; i < dim_; ++i) x[i] = static_cast<double>(idx[i]) / grid;
        double val = torus_dist(g.apply_mod1(x), x);
        if (val < best) {
          best = val;
          bx = x;
        }
        return;
      }
      for (idx[d] = 0; idx[d] < grid; ++idx[d]) rec(d + 1);
    };
    rec(0);
    double h = 1.0 / grid;
    for (int it = 0; it < 40; ++it) {
      bool improved = false;
      for (int i = 0; i < dim_; ++i)
        for (double s : {-h, h}) {
          Vec x = bx;
          x[i] = wrap01(x[i] + s);
          double val = torus_dist(g.apply_mod1(x), x);
          if (val < best) {
            best = val;
            bx = x;
            improved = true;
          }
        }
      if (!improved) h *= 0.5;
      if (h < 1e-12) break;
    }
    return best;
  }

  // Solve m x = b (mod Z^n) exactly via integer Smith reduction.
  // Returns (solution, isolated) pairs; at most one representative per free
  // direction.
  std::vector<std::pair<Vec, bool>> solve_mod1(IMat m, RVec b) const {
    int n = dim_;
    // U m V = D with U, V unimodular; track V and U*b.
    IMat V = IMat::identity(n);
    RVec t = b;
    auto row_swap = [&](int i, int j) {
      for (int k = 0; k < n; ++k) std::swap(m.at(i, k), m.at(j, k));
      std::swap(t[i], t[j]);
    };
    auto row_add = [&](int i, int j, long long c) {  // row i += c * row j
      for (int k = 0; k < n; ++k) m.at(i, k) += c * m.at(j, k);
      t[i] += Rat(c) * t[j];
    };
    auto col_swap = [&](int i, int j) {
      for (int k = 0; k < n; ++k) {
        std::swap(m.at(k, i), m.at(k, j));
        std::swap(V.at(k, i), V.at(k, j));
      }
    };
    auto col_add = [&](int i, int j, long long c) {  // col i += c * col j
      for (int k = 0; k < n; ++k) {
        m.at(k, i) += c * m.at(k, j);
        V.at(k, i) += c * V.at(k, j);
      }
    };
    for (int p = 0; p < n; ++p) {
      // move a nonzero pivot of minimal magnitude to (p,p)
      for (;;) {
        int pi = -1, pj = -1;
        long long pm = 0;
        for (int i = p; i < n; ++i)
          for (int j = p; j < n; ++j)
            if (m.at(i, j) != 0 && (pm == 0 || std::llabs(m.at(i, j)) < pm)) {
              pm = std::llabs(m.at(i, j));
              pi = i;
              pj = j;
            }
        if (pi < 0) break;  // remaining block is zero
        if (pi != p) row_swap(pi, p);
        if (pj != p) col_swap(pj, p);
        bool clean = true;
        for (int i = p + 1; i < n; ++i)
          if (m.at(i, p) != 0) {
            row_add(i, p, -(m.at(i, p) / m.at(p, p)));
            if (m.at(i, p) != 0) clean = false;
          }
        for (int j = p + 1; j < n; ++j)
          if (m.at(p, j) != 0) {
            col_add(j, p, -(m.at(p, j) / m.at(p, p)));
            if (m.at(p, j) != 0) clean = false;
          }
        if (clean) break;
      }
    }
    // Diagonal system: d_i * y_i = t_i (mod 1), x = V y.
    std::vector<std::pair<Vec, bool>> out;
    std::vector<std::vector<Rat>> choices(n);
    bool isolated = true;
    for (int i = 0; i < n; ++i) {
      long long d = m.at(i, i);
      if (d == 0) {
        if (rat_mod1(t[i]) != Rat(0)) return {};  // inconsistent: no fixed points
        choices[i] = {Rat(0)};
        isolated = false;  // free direction: fixed set is positive-dimensional
      } else {
        long long ad = std::llabs(d);
        for (long long k = 0; k < ad; ++k)
          choices[i].push_back(rat_mod1((t[i] + Rat(d < 0 ? -k : k)) / Rat(d)));
      }
    }
    std::array<std::size_t, kMaxDim> pick{};
    std::function<void(int)> rec = [&](int d) {
      if (out.size() > 4096) return;
      if (d == n) {
        Vec x(n);
        for (int i = 0; i < n; ++i) {
          Rat xi(0);
          for (int j = 0; j < n; ++j) xi += Rat(V.at(i, j)) * choices[j][pick[j]];
          x[i] = to_double(rat_mod1(xi));
        }
        out.emplace_back(x, isolated);
        return;
      }
      for (pick[d] = 0; pick[d] < choices[d].size(); ++pick[d]) rec(d + 1);
    };
    rec(0);
    return out;
  }
};

}  // namespace orbiflow
