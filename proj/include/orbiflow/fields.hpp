#pragma once

// Coefficient functions for vector fields and 1-forms, given as combinator
// expressions over a small prefix grammar:
//
//   expr ::= (const c)
//          | (sinx i [phase])        sin(2*pi*(x_i - phase))
//          | (cosx i [phase])        cos(2*pi*(x_i - phase))
//          | (bumpx i center radius) smooth compactly supported bump in x_i
//          | (bump c1 ... cn radius) radial bump around a point (torus metric)
//          | (scale k expr)
//          | (sum expr expr ...)
//          | (prod expr expr ...)
//
// Expressions parse to a tree (kept for serialization) and compile to a flat
// postfix program evaluated with a small value stack.

#include <cctype>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "orbiflow/core.hpp"
#include "orbiflow/geometry.hpp"

namespace orbiflow {

// C^infinity bump: 1 at u=0, 0 for |u|>=1.
inline double bump_profile(double u) {
  double u2 = u * u;
  if (u2 >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - u2));
}

inline double wrapped_offset(double x, double c) {
  double d = wrap01(x) - wrap01(c);
  if (d > 0.5) d -= 1.0;
  if (d < -0.5) d += 1.0;
  return d;
}

namespace expr {

enum class Kind { Const, SinX, CosX, BumpX, Bump, Scale, Sum, Prod };

struct Node {
  Kind kind;
  int axis = 0;
  double a = 0;        // const value / phase / scale factor / radius for Bump
  double b = 0;        // radius for BumpX
  Vec center;          // Bump center
  std::vector<std::shared_ptr<Node>> kids;
};

using NodePtr = std::shared_ptr<Node>;

struct Op {
  Kind kind;
  int axis = 0;
  double a = 0, b = 0;
  Vec center;
};

// Flat postfix program.
class Program {
 public:
  void push(const Op& op) { ops_.push_back(op); }

  double eval(const double* x) const {
    double st[32];
    int top = -1;
    for (const auto& op : ops_) {
      switch (op.kind) {
        case Kind::Const:
          st[++top] = op.a;
          break;
        case Kind::SinX:
          st[++top] = std::sin(kTwoPi * (x[op.axis] - op.a));
          break;
        case Kind::CosX:
          st[++top] = std::cos(kTwoPi * (x[op.axis] - op.a));
          break;
        case Kind::BumpX: {
          double u = wrapped_offset(x[op.axis], op.a) / op.b;
          st[++top] = bump_profile(u);
          break;
        }
        case Kind::Bump: {
          double s = 0;
          for (int i = 0; i < op.center.n; ++i) {
            double d = wrapped_offset(x[i], op.center[i]);
            s += d * d;
          }
          st[++top] = bump_profile(std::sqrt(s) / op.a);
          break;
        }
        case Kind::Scale:
          st[top] *= op.a;
          break;
        case Kind::Sum:
          st[top - 1] += st[top];
          --top;
          break;
        case Kind::Prod:
          st[top - 1] *= st[top];
          --top;
          break;
      }
    }
    return st[0];
  }

  bool empty() const { return ops_.empty(); }

 private:
  std::vector<Op> ops_;
};

// --- parsing -------------------------------------------------------------

inline std::vector<std::string> tokenize(const std::string& s) {
  std::vector<std::string> toks;
  std::string cur;
  for (char ch : s) {
    if (ch == '(' || ch == ')') {
      if (!cur.empty()) {
        toks.push_back(cur);
        cur.clear();
      }
      toks.push_back(std::string(1, ch));
    } else if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) {
        toks.push_back(cur);
        cur.clear();
      }
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) toks.push_back(cur);
  return toks;
}

inline NodePtr parse_node(const std::vector<std::string>& toks, std::size_t& i);

inline double parse_num(const std::string& t) {
  std::size_t pos = 0;
  double v = std::stod(t, &pos);
  if (pos != t.size()) throw Error("bad number in expression: " + t);
  return v;
}

inline NodePtr parse_node(const std::vector<std::string>& toks, std::size_t& i) {
  if (i >= toks.size()) throw Error("unexpected end of expression");
  if (toks[i] != "(") throw Error("expected '(' in expression, got " + toks[i]);
  ++i;
  if (i >= toks.size()) throw Error("unexpected end of expression");
  std::string head = toks[i++];
  auto node = std::make_shared<Node>();
  auto expect_close = [&] {
    if (i >= toks.size() || toks[i] != ")") throw Error("expected ')' after " + head);
    ++i;
  };
  if (head == "const") {
    node->kind = Kind::Const;
    node->a = parse_num(toks[i++]);
    expect_close();
  } else if (head == "sinx" || head == "cosx") {
    node->kind = head == "sinx" ? Kind::SinX : Kind::CosX;
    node->axis = static_cast<int>(parse_num(toks[i++]));
    if (i < toks.size() && toks[i] != ")") node->a = parse_num(toks[i++]);
    expect_close();
  } else if (head == "bumpx") {
    node->kind = Kind::BumpX;
    node->axis = static_cast<int>(parse_num(toks[i++]));
    node->a = parse_num(toks[i++]);
    node->b = parse_num(toks[i++]);
    if (node->b <= 0) throw Error("bump radius must be positive");
    expect_close();
  } else if (head == "bump") {
    node->kind = Kind::Bump;
    std::vector<double> args;
    while (i < toks.size() && toks[i] != ")") args.push_back(parse_num(toks[i++]));
    if (args.size() < 2) throw Error("(bump ...) needs center coordinates and a radius");
    node->center.n = static_cast<int>(args.size()) - 1;
    if (node->center.n > kMaxDim) throw Error("bump center dimension too large");
    for (int k = 0; k < node->center.n; ++k) node->center[k] = args[k];
    node->a = args.back();
    if (node->a <= 0) throw Error("bump radius must be positive");
    expect_close();
  } else if (head == "scale") {
    node->kind = Kind::Scale;
    node->a = parse_num(toks[i++]);
    node->kids.push_back(parse_node(toks, i));
    expect_close();
  } else if (head == "sum" || head == "prod") {
    node->kind = head == "sum" ? Kind::Sum : Kind::Prod;
    while (i < toks.size() && toks[i] == "(") node->kids.push_back(parse_node(toks, i));
    if (node->kids.size() < 2) throw Error("(" + head + " ...) needs at least two operands");
    expect_close();
  } else {
    throw Error("unknown combinator: " + head);
  }
  return node;
}

inline NodePtr parse(const std::string& src) {
  auto toks = tokenize(src);
  std::size_t i = 0;
  auto n = parse_node(toks, i);
  if (i != toks.size()) throw Error("trailing tokens in expression");
  return n;
}

inline void compile_node(const NodePtr& n, Program& prog) {
  switch (n->kind) {
    case Kind::Const:
    case Kind::SinX:
    case Kind::CosX:
    case Kind::BumpX:
    case Kind::Bump: {
      Op op;
      op.kind = n->kind;
      op.axis = n->axis;
      op.a = n->a;
      op.b = n->b;
      op.center = n->center;
      prog.push(op);
      break;
    }
    case Kind::Scale: {
      compile_node(n->kids[0], prog);
      Op op;
      op.kind = Kind::Scale;
      op.a = n->a;
      prog.push(op);
      break;
    }
    case Kind::Sum:
    case Kind::Prod: {
      compile_node(n->kids[0], prog);
      for (std::size_t k = 1; k < n->kids.size(); ++k) {
        compile_node(n->kids[k], prog);
        Op op;
        op.kind = n->kind;
        prog.push(op);
      }
      break;
    }
  }
}

inline std::string num_str(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string to_string(const NodePtr& n) {
  std::ostringstream os;
  switch (n->kind) {
    case Kind::Const:
      os << "(const " << num_str(n->a) << ")";
      break;
    case Kind::SinX:
    case Kind::CosX:
      os << (n->kind == Kind::SinX ? "(sinx " : "(cosx ") << n->axis;
      if (n->a != 0) os << " " << num_str(n->a);
      os << ")";
      break;
    case Kind::BumpX:
      os << "(bumpx " << n->axis << " " << num_str(n->a) << " " << num_str(n->b) << ")";
      break;
    case Kind::Bump:
      os << "(bump";
      for (int i = 0; i < n->center.n; ++i) os << " " << num_str(n->center[i]);
      os << " " << num_str(n->a) << ")";
      break;
    case Kind::Scale:
      os << "(scale " << num_str(n->a) << " " << to_string(n->kids[0]) << ")";
      break;
    case Kind::Sum:
    case Kind::Prod:
      os << (n->kind == Kind::Sum ? "(sum" : "(prod");
      for (const auto& k : n->kids) os << " " << to_string(k);
      os << ")";
      break;
  }
  return os.str();
}

}  // namespace expr

// One scalar coefficient function built from an expression string.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const std::string& src) : src_(src) {
    expr::compile_node(expr::parse(src), prog_);
  }
  static ScalarField zero() { return ScalarField("(const 0)"); }

  double operator()(const Vec& x) const { return prog_.eval(x.c.data()); }
  double eval_raw(const double* x) const { return prog_.eval(x); }
  const std::string& source() const { return src_; }
  bool is_zero_literal() const { return src_ == "(const 0)"; }

 private:
  std::string src_;
  expr::Program prog_;
};

struct ValidationWitness {
  Vec point;
  double residual = 0;
  std::string what;
};

namespace detail {

// Deterministic validation grid: 32 points per axis, offset so that sample
// points avoid cell boundaries of dyadic box covers.
inline std::vector<Vec> validation_grid(int dim, int per_axis = 32) {
  std::vector<Vec> pts;
  std::array<int, kMaxDim> idx{};
  std::function<void(int)> rec = [&](int d) {
    if (d == dim) {
      Vec x(dim);
      for (int i = 0; i < dim; ++i)
        x[i] = (idx[i] + 0.437251) / static_cast<double>(per_axis);
      pts.push_back(x);
      return;
    }
    for (idx[d] = 0; idx[d] < per_axis; ++idx[d]) rec(d + 1);
  };
  rec(0);
  return pts;
}

}  // namespace detail

// A vector field on the torus, equivariant for the group action:
// v(g x) = (linear part of g) v(x).
class EquivariantVectorField {
 public:
  EquivariantVectorField() = default;
  EquivariantVectorField(const QuotientPresentation& pres,
                         std::vector<std::string> component_sources,
                         std::string description = "")
      : pres_(&pres), description_(std::move(description)) {
    if (static_cast<int>(component_sources.size()) != pres.dim())
      throw Error("vector field component count does not match dimension");
    for (const auto& s : component_sources) comps_.emplace_back(s);
    validate();
    estimate_lipschitz();
  }

  int dim() const { return pres_->dim(); }
  const QuotientPresentation& presentation() const { return *pres_; }
  const std::string& description() const { return description_; }
  double lipschitz() const { return lipschitz_; }
  std::vector<std::string> sources() const {
    std::vector<std::string> out;
    for (const auto& c : comps_) out.push_back(c.source());
    return out;
  }

  Vec operator()(const Vec& x) const {
    Vec v(dim());
    for (int i = 0; i < dim(); ++i) v[i] = comps_[i].eval_raw(x.c.data());
    return v;
  }
  void eval_into(const double* x, double* out) const {
    for (std::size_t i = 0; i < comps_.size(); ++i) out[i] = comps_[i].eval_raw(x);
  }

 private:
  const QuotientPresentation* pres_ = nullptr;
  std::vector<ScalarField> comps_;
  std::string description_;
  double lipschitz_ = 0;

  void validate() const {
    for (const auto& x : detail::validation_grid(dim())) {
      Vec vx = (*this)(x);
      for (const auto& g : pres_->group()) {
        Vec lhs = (*this)(g.apply_mod1(x));
        Vec rhs = g.apply_linear(vx);
        if (norm(lhs - rhs) > 1e-9) {
          std::ostringstream os;
          os << "vector field is not equivariant at (";
          for (int i = 0; i < x.n; ++i) os << (i ? "," : "") << x[i];
          os << "), residual " << norm(lhs - rhs);
          throw Error(os.str());
        }
      }
    }
  }

  void estimate_lipschitz() {
    double h = 1e-5, m = 0;
    for (const auto& x : detail::validation_grid(dim(), 16)) {
      double fro = 0;
      for (int j = 0; j < dim(); ++j) {
        Vec xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        Vec d = (*this)(xp) - (*this)(xm);
        for (int i = 0; i < dim(); ++i) fro += (d[i] / (2 * h)) * (d[i] / (2 * h));
      }
      m = std::max(m, std::sqrt(fro));
    }
    lipschitz_ = m;
  }
};

// An invariant ("basic") 1-form: coeffs(g x) * (linear of g) = coeffs(x).
// Closedness is validated by central finite differences unless the form is
// flagged closed by construction (gradients, constant forms).
class BasicOneForm {
 public:
  BasicOneForm() = default;
  BasicOneForm(const QuotientPresentation& pres, std::vector<std::string> component_sources,
               bool closed_by_construction = false)
      : pres_(&pres), closed_flag_(closed_by_construction) {
    if (static_cast<int>(component_sources.size()) != pres.dim())
      throw Error("1-form component count does not match dimension");
    for (const auto& s : component_sources) comps_.emplace_back(s);
    validate_invariance();
    if (!closed_flag_) validate_closedness();
  }

  // Build from raw evaluators (used for numerically assembled forms, e.g.
  // gradients of interpolants); invariance is still checked.
  BasicOneForm(const QuotientPresentation& pres,
               std::function<void(const double*, double*)> eval, bool closed_by_construction,
               std::string tag)
      : pres_(&pres), raw_(std::move(eval)), closed_flag_(closed_by_construction), tag_(tag) {
    validate_invariance();
    if (!closed_flag_) validate_closedness();
  }

  int dim() const { return pres_->dim(); }
  const QuotientPresentation& presentation() const { return *pres_; }
  bool closed_by_construction() const { return closed_flag_; }
  bool has_sources() const { return !comps_.empty(); }
  std::vector<std::string> sources() const {
    std::vector<std::string> out;
    for (const auto& c : comps_) out.push_back(c.source());
    return out;
  }
  const std::string& tag() const { return tag_; }

  Vec operator()(const Vec& x) const {
    Vec w(dim());
    eval_into(x.c.data(), w.c.data());
    return w;
  }
  void eval_into(const double* x, double* out) const {
    if (raw_) {
      raw_(x, out);
      return;
    }
    for (std::size_t i = 0; i < comps_.size(); ++i) out[i] = comps_[i].eval_raw(x);
  }

  static BasicOneForm zero(const QuotientPresentation& pres) {
    std::vector<std::string> z(pres.dim(), "(const 0)");
    return BasicOneForm(pres, z, true);
  }

 private:
  const QuotientPresentation* pres_ = nullptr;
  std::vector<ScalarField> comps_;
  std::function<void(const double*, double*)> raw_;
  bool closed_flag_ = false;
  std::string tag_;

  void validate_invariance() const {
    for (const auto& x : detail::validation_grid(dim())) {
      Vec wx = (*this)(x);
      for (const auto& g : pres_->group()) {
        Vec wg = (*this)(g.apply_mod1(x));
        // row vector times matrix: (wg * A)_j = sum_i wg_i A_ij
        Vec lhs(dim());
        for (int j = 0; j < dim(); ++j) {
          double s = 0;
          for (int i = 0; i < dim(); ++i)
            s += wg[i] * static_cast<double>(g.linear.at(i, j));
          lhs[j] = s;
        }
        if (norm(lhs - wx) > 1e-9) throw Error("1-form is not invariant under the group");
      }
    }
  }

  void validate_closedness() const {
    const double h = 1e-4;
    for (const auto& x : detail::validation_grid(dim())) {
      for (int i = 0; i < dim(); ++i)
        for (int j = i + 1; j < dim(); ++j) {
          // d_i w_j - d_j w_i by central differences
          Vec xp = x, xm = x;
          xp[i] += h;
          xm[i] -= h;
          double dwj = ((*this)(xp)[j] - (*this)(xm)[j]) / (2 * h);
          xp = x;
          xm = x;
          xp[j] += h;
          xm[j] -= h;
          double dwi = ((*this)(xp)[i] - (*this)(xm)[i]) / (2 * h);
          if (std::fabs(dwj - dwi) > 1e-6) {
            std::ostringstream os;
            os << "1-form is not closed: mixed-partial residual " << (dwj - dwi)
               << " in axes (" << i << "," << j << ")";
            throw Error(os.str());
          }
        }
    }
  }
};

// Pointwise pairing of a field and a form; invariant, so it descends to the
// quotient.
inline std::function<double(const Vec&)> contraction(const EquivariantVectorField& field,
                                                     const BasicOneForm& form) {
  if (field.dim() != form.dim()) throw Error("contraction: dimension mismatch");
  const auto* f = &field;
  const auto* w = &form;
  return [f, w](const Vec& x) {
    double vbuf[kMaxDim], wbuf[kMaxDim];
    f->eval_into(x.c.data(), vbuf);
    w->eval_into(x.c.data(), wbuf);
    double s = 0;
    for (int i = 0; i < x.n; ++i) s += vbuf[i] * wbuf[i];
    return s;
  };
}

// Cohomology class data: a representative form plus its periods over the n
// standard torus loops (computed on the covering torus).
class CohomologyClass {
 public:
  CohomologyClass() = default;
  explicit CohomologyClass(BasicOneForm rep) : rep_(std::move(rep)) {
    compute_periods();
  }

  const BasicOneForm& representative() const { return rep_; }
  const QuotientPresentation& presentation() const { return rep_.presentation(); }
  const Vec& period_vector() const { return periods_; }
  bool integral() const { return integral_; }
  bool zero_class() const {
    for (int i = 0; i < periods_.n; ++i)
      if (std::fabs(periods_[i]) > 1e-9) return false;
    return true;
  }

  // Scale for the class: radii (epsilon, delta) such that every 2*epsilon
  // ball lifts to a contractible ball (so the class restricts to zero on it)
  // and delta-close points are joined by a short path inside an epsilon ball.
  std::pair<double, double> compute_scale() const {
    double eps = presentation().injectivity_radius() / 4.0;
    return {eps, eps};
  }

 private:
  BasicOneForm rep_;
  Vec periods_;
  bool integral_ = false;

  void compute_periods() {
    int n = rep_.dim();
    periods_ = Vec(n);
    const int quad = 4096;
    // generic basepoint keeps the loop off symmetric zero sets
    Vec base(n);
    for (int i = 0; i < n; ++i) base[i] = 0.3718281828 + 0.1 * i;
    for (int axis = 0; axis < n; ++axis) {
      KahanSum s;
      for (int k = 0; k < quad; ++k) {
        Vec x = base;
        x[axis] = base[axis] + (k + 0.5) / quad;
        s.add(rep_(wrap01(x))[axis] / quad);
      }
      periods_[axis] = s.value();
    }
    integral_ = true;
    for (int i = 0; i < n; ++i)
      if (std::fabs(periods_[i] - std::round(periods_[i])) > 1e-6) integral_ = false;
  }
};

}  // namespace orbiflow
