#pragma once

// Verification of the defining conditions of a Lyapunov 1-form on a candidate
// pair (form, invariant set), and the constructive assembly
// omega2 = omega1 - d h1 + a dL from a recurrence report.

#include <memory>
#include <optional>
#include <vector>

#include "orbiflow/conley.hpp"
#include "orbiflow/core.hpp"
#include "orbiflow/exactness.hpp"
#include "orbiflow/fields.hpp"
#include "orbiflow/graph.hpp"

namespace orbiflow {

struct VerifyTolerances {
  double sign_margin = 1e-6;  // strict negativity margin away from U
  double vanish_tol = 1e-5;   // gradient / coefficient vanishing on Y
  double period_tol = 1e-6;   // loop periods for local exactness
  int samples_per_axis = 2;
};

struct ConditionCheck {
  std::string name;
  bool passed = false;
  double margin = 0;  // worst margin in the check's own units
  Vec witness;
  std::string note;
};

struct VerifyReport {
  std::vector<ConditionCheck> checks;
  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

// Check the two defining conditions plus the section-vanishing variant:
//  (1) iota_v omega < -margin off U and < 0 off Y,
//  (2) omega|_U = df with |df| small on Y,
//  (2') |omega| small on Y.
// Y samples are the centers of the Y boxes plus any explicit points supplied.
inline VerifyReport verify_lyapunov(const EquivariantVectorField& field,
                                    const BasicOneForm& form, const BoxCover& cover,
                                    const std::vector<int>& Y_boxes,
                                    const std::vector<int>& U_boxes,
                                    const std::vector<Vec>& extra_Y_points = {},
                                    VerifyTolerances tol = {}) {
  VerifyReport rep;
  auto f = contraction(field, form);
  std::vector<char> in_Y(cover.orbit_count(), 0), in_U(cover.orbit_count(), 0);
  for (int o : Y_boxes) in_Y[o] = 1;
  for (int o : U_boxes) in_U[o] = 1;

  // (1) sign condition on a dense sample grid
  {
    ConditionCheck c;
    c.name = "negative_contraction";
    double worst_outside_U = -std::numeric_limits<double>::infinity();
    double worst_outside_Y = -std::numeric_limits<double>::infinity();
    Vec witness;
    bool have_witness = false;
    std::vector<double> box_worst(cover.orbit_count(),
                                  -std::numeric_limits<double>::infinity());
    std::vector<Vec> box_witness(cover.orbit_count());
    parallel_for(cover.orbit_count(), [&](std::size_t o) {
      if (in_Y[o]) return;
      double w = -std::numeric_limits<double>::infinity();
      Vec wpt;
      for (const auto& p : cover.sample_points(static_cast<int>(o), tol.samples_per_axis)) {
        double s = f(p);
        if (s > w) {
          w = s;
          wpt = p;
        }
      }
      box_worst[o] = w;
      box_witness[o] = wpt;
    });
    for (int o = 0; o < cover.orbit_count(); ++o) {
      if (in_Y[o]) continue;
      double s = box_worst[o];
      if (!in_U[o] && s > worst_outside_U) {
        worst_outside_U = s;
        witness = box_witness[o];
        have_witness = true;
      }
      worst_outside_Y = std::max(worst_outside_Y, s);
      if (in_U[o] && s >= 0 && !have_witness) witness = box_witness[o];
    }
    bool outside_ok = !std::isfinite(worst_outside_U) || worst_outside_U < -tol.sign_margin;
    bool ring_ok = !std::isfinite(worst_outside_Y) || worst_outside_Y < 0;
    c.passed = outside_ok && ring_ok;
    c.margin = std::isfinite(worst_outside_U) ? -worst_outside_U : 0;
    if (have_witness) c.witness = witness;
    if (!c.passed) c.note = "contraction fails strict negativity";
    rep.checks.push_back(c);
  }

  // Y sample points: explicit samples of the invariant set when given,
  // otherwise the centers of the Y boxes
  std::vector<Vec> y_samples = extra_Y_points;
  if (y_samples.empty())
    for (int o : Y_boxes)
      for (long cell : cover.cells_of_orbit(o)) y_samples.push_back(cover.cell_center(cell));

  // (2) local exactness with flat differential on Y
  {
    ConditionCheck c;
    c.name = "local_exactness";
    if (U_boxes.empty()) {
      c.passed = Y_boxes.empty() && extra_Y_points.empty();
      c.note = c.passed ? "empty neighborhood" : "Y given without a neighborhood";
    } else {
      auto ex = exactness_on_region(cover, form, U_boxes, tol.period_tol);
      if (!ex.potential) {
        c.passed = false;
        c.margin = ex.violating_period;
        c.note = "nonvanishing loop period in the neighborhood";
      } else {
        double worst = 0;
        Vec witness;
        for (const auto& p : y_samples) {
          if (!ex.potential->contains(p)) continue;
          double gn = norm(ex.potential->gradient(p));
          if (gn > worst) {
            worst = gn;
            witness = p;
          }
        }
        c.passed = worst < tol.vanish_tol;
        c.margin = worst;
        c.witness = witness;
        if (!c.passed) c.note = "potential gradient does not vanish on Y";
      }
    }
    rep.checks.push_back(c);
  }

  // (2') the form vanishes on Y as a section
  {
    ConditionCheck c;
    c.name = "section_vanishes_on_Y";
    double worst = 0;
    Vec witness;
    for (const auto& p : y_samples) {
      double nn = norm(form(p));
      if (nn > worst) {
        worst = nn;
        witness = p;
      }
    }
    c.passed = worst < tol.vanish_tol;
    c.margin = worst;
    c.witness = witness;
    if (!c.passed) c.note = "coefficients do not vanish on Y";
    rep.checks.push_back(c);
  }
  return rep;
}

// --- construction -----------------------------------------------------------

struct ConstructionOptions {
  bool override_condition_b = false;
  int fatten_layers = 2;
  int smoothing_passes = 2;
  double sign_margin = 1e-6;
  VerifyTolerances verify_tol{};
};

struct LyapunovCertificate {
  bool success = false;
  std::string refusal_code;    // CXI_NOT_CLOSED, CONDITION_B_FAILS, EXACTNESS_FAIL,
                               // NEIGHBORHOODS_OVERLAP, SIGN_CORRECTION_INFEASIBLE,
                               // A0_UNBOUNDED
  std::string refusal_detail;
  std::vector<int> W1, W2;
  double a0 = 0, a_used = 0;
  VerifyReport checks;
  std::shared_ptr<BasicOneForm> omega2;
  std::shared_ptr<DiscreteLyapunov> level;
  std::function<BasicOneForm(double)> omega2_with_a;  // rebuild with another slope factor
};

namespace detail {

// Group-symmetrized Gaussian basis for the sign-correcting potential.
struct CorrectionBasis {
  const QuotientPresentation* pres;
  std::vector<Vec> centers;
  double sigma = 0;

  double value(int j, const Vec& x) const {
    double s = 0;
    for (const auto& g : pres->group()) {
      Vec gx = g.apply_mod1(x);
      double d2 = 0;
      for (int i = 0; i < x.n; ++i) {
        double d = wrapped_offset(gx[i], centers[j][i]);
        d2 += d * d;
      }
      s += std::exp(-0.5 * d2 / (sigma * sigma));
    }
    return s / pres->group_order();
  }

  Vec grad(int j, const Vec& x) const {
    // d/dx of value via the chain rule through each group image
    Vec out(x.n);
    for (const auto& g : pres->group()) {
      Vec gx = g.apply_mod1(x);
      double d2 = 0;
      Vec dv(x.n);
      for (int i = 0; i < x.n; ++i) {
        double d = wrapped_offset(gx[i], centers[j][i]);
        dv[i] = d;
        d2 += d * d;
      }
      double e = std::exp(-0.5 * d2 / (sigma * sigma)) / (sigma * sigma);
      // gradient w.r.t. x: linear part of g transposed applied to -e*dv
      for (int i = 0; i < x.n; ++i) {
        double acc = 0;
        for (int k = 0; k < x.n; ++k)
          acc += static_cast<double>(g.linear.at(k, i)) * (-e * dv[k]);
        out[i] += acc;
      }
    }
    return (1.0 / pres->group_order()) * out;
  }
};

inline std::vector<double> solve_normal_equations(std::vector<std::vector<double>> a,
                                                  std::vector<double> b) {
  int k = static_cast<int>(b.size());
  for (int i = 0; i < k; ++i) a[i][i] += 1e-9;  // ridge
  for (int col = 0; col < k; ++col) {
    int piv = col;
    for (int rr = col + 1; rr < k; ++rr)
      if (std::fabs(a[rr][col]) > std::fabs(a[piv][col])) piv = rr;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    if (std::fabs(a[col][col]) < 1e-14) continue;
    for (int rr = 0; rr < k; ++rr) {
      if (rr == col) continue;
      double fac = a[rr][col] / a[col][col];
      for (int cc = col; cc < k; ++cc) a[rr][cc] -= fac * a[col][cc];
      b[rr] -= fac * b[col];
    }
  }
  std::vector<double> x(k, 0);
  for (int i = 0; i < k; ++i)
    if (std::fabs(a[i][i]) > 1e-14) x[i] = b[i] / a[i][i];
  return x;
}

}  // namespace detail

inline LyapunovCertificate construct_lyapunov_form(const EquivariantVectorField& field,
                                                   const CohomologyClass& cls,
                                                   const RecurrenceReport& report,
                                                   const TransitionGraph& graph,
                                                   ConstructionOptions opts = {}) {
  LyapunovCertificate cert;
  const auto& cover = graph.cover();
  const auto& pres = field.presentation();
  int n = pres.dim();

  if (!report.cxi_closed) {
    cert.refusal_code = "CXI_NOT_CLOSED";
    cert.refusal_detail = "the complement of the class-trivial recurrent set is not closed";
    return cert;
  }
  if (!report.condition_b_holds && !opts.override_condition_b) {
    cert.refusal_code = "CONDITION_B_FAILS";
    std::ostringstream os;
    os << "cycle pairings over the complement violate the uniform bound"
       << " (max " << report.max_cycle_pairing << ")";
    cert.refusal_detail = os.str();
    return cert;
  }

  // neighborhoods
  std::vector<int> W2, W1;
  for (int layers = opts.fatten_layers; layers >= 1; --layers) {
    W2 = report.Rxi_boxes.empty() ? std::vector<int>{}
                                  : cover.orbit_neighborhood(report.Rxi_boxes, layers);
    W1 = report.Cxi_boxes.empty() ? std::vector<int>{}
                                  : cover.orbit_neighborhood(report.Cxi_boxes, layers);
    std::vector<char> in2(cover.orbit_count(), 0);
    for (int o : W2) in2[o] = 1;
    bool overlap = false;
    for (int o : W1)
      if (in2[o]) overlap = true;
    if (!overlap) break;
    if (layers == 1) {
      cert.refusal_code = "NEIGHBORHOODS_OVERLAP";
      cert.refusal_detail = "fattened neighborhoods of the two recurrent parts intersect";
      return cert;
    }
  }
  cert.W1 = W1;
  cert.W2 = W2;

  const auto& omega = cls.representative();

  // local exactness around the class-trivial part
  std::shared_ptr<RegionPotential> pot;
  if (!W2.empty()) {
    auto ex = exactness_on_region(cover, omega, W2, opts.verify_tol.period_tol);
    if (!ex.potential) {
      cert.refusal_code = "EXACTNESS_FAIL";
      std::ostringstream os;
      os << "the class does not vanish near the class-trivial recurrent set"
         << " (loop period " << ex.violating_period << ")";
      cert.refusal_detail = os.str();
      return cert;
    }
    pot = std::make_shared<RegionPotential>(std::move(*ex.potential));
  }

  // sign correction on W1
  auto base_contraction = contraction(field, omega);
  std::shared_ptr<detail::CorrectionBasis> basis;
  std::shared_ptr<std::vector<double>> coeffs;
  {
    std::vector<Vec> pts;
    for (int o : W1)
      for (const auto& p : cover.sample_points(o, opts.verify_tol.samples_per_axis))
        pts.push_back(p);
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& p : pts) worst = std::max(worst, base_contraction(p));
    if (!pts.empty() && worst >= -opts.sign_margin) {
      // least-squares potential making iota_v(omega + dh) negative on W1
      basis = std::make_shared<detail::CorrectionBasis>();
      basis->pres = &pres;
      basis->sigma = 0.1875;
      int per_axis = 8;
      std::array<int, kMaxDim> idx{};
      std::function<void(int)> rec = [&](int d) {
        if (d == n) {
          Vec c(n);
          for (int i = 0; i < n; ++i) c[i] = (idx[i] + 0.5) / per_axis;
          basis->centers.push_back(c);
          return;
        }
        for (idx[d] = 0; idx[d] < per_axis; ++idx[d]) rec(d + 1);
      };
      rec(0);
      int k = static_cast<int>(basis->centers.size());
      double scale = 0;
      for (const auto& p : pts) scale += std::fabs(base_contraction(p));
      scale = std::max(scale / pts.size(), 10 * opts.sign_margin);
      std::vector<std::vector<double>> ata(k, std::vector<double>(k, 0));
      std::vector<double> atb(k, 0);
      for (const auto& p : pts) {
        Vec v = field(p);
        std::vector<double> row(k);
        for (int j = 0; j < k; ++j) row[j] = dot(basis->grad(j, p), v);
        double target = std::min(base_contraction(p), -2 * scale) - base_contraction(p);
        for (int i = 0; i < k; ++i) {
          atb[i] += row[i] * target;
          for (int j = 0; j < k; ++j) ata[i][j] += row[i] * row[j];
        }
      }
      coeffs = std::make_shared<std::vector<double>>(
          detail::solve_normal_equations(std::move(ata), std::move(atb)));
      double corrected_worst = -std::numeric_limits<double>::infinity();
      Vec witness;
      for (const auto& p : pts) {
        Vec v = field(p);
        double s = base_contraction(p);
        for (int j = 0; j < k; ++j) s += (*coeffs)[j] * dot(basis->grad(j, p), v);
        if (s > corrected_worst) {
          corrected_worst = s;
          witness = p;
        }
      }
      if (corrected_worst >= 0) {
        cert.refusal_code = "SIGN_CORRECTION_INFEASIBLE";
        std::ostringstream os;
        os << "no potential correction makes the contraction negative on the complement"
           << " (worst " << corrected_worst << " at (";
        for (int i = 0; i < n; ++i) os << (i ? "," : "") << witness[i];
        os << "))";
        cert.refusal_detail = os.str();
        return cert;
      }
    }
  }

  // Conley function and neighborhood cutoff
  auto level = std::make_shared<DiscreteLyapunov>(
      conley_function(graph, report.Rxi_boxes, opts.smoothing_passes));
  auto interp = std::make_shared<BoxInterpolant>(cover, level->values, report.Rxi_boxes);

  std::shared_ptr<BoxInterpolant> chi;
  if (!W2.empty()) {
    std::vector<double> chi_vals(cover.orbit_count(), 0.0);
    auto inner = cover.orbit_neighborhood(report.Rxi_boxes, 1);
    for (int o : inner) chi_vals[o] = 1.0;
    chi = std::make_shared<BoxInterpolant>(cover, chi_vals);
  }

  // pieces of omega2 = omega + dh_ls - d(chi * h1) + a dL
  auto omega1_eval = [&pres, &omega, basis, coeffs](const double* x, double* out) {
    omega.eval_into(x, out);
    if (basis && coeffs) {
      Vec xp(pres.dim());
      for (int i = 0; i < pres.dim(); ++i) xp[i] = x[i];
      for (std::size_t j = 0; j < coeffs->size(); ++j) {
        if ((*coeffs)[j] == 0) continue;
        Vec g = basis->grad(static_cast<int>(j), xp);
        for (int i = 0; i < pres.dim(); ++i) out[i] += (*coeffs)[j] * g[i];
      }
    }
  };

  auto h1_term = [chi, pot, n](const Vec& x) -> double {
    if (!chi || !pot) return 0.0;
    double c = (*chi)(x);
    if (c <= 0) return 0.0;
    return c * (*pot)(x);
  };

  double a0 = 1.0;
  {
    std::vector<char> excluded(cover.orbit_count(), 0);
    for (int o : W1) excluded[o] = 1;
    for (int o : W2) excluded[o] = 1;
    double worst_ratio = 0;
    bool unbounded = false;
    Vec witness;
    for (int o = 0; o < cover.orbit_count(); ++o) {
      if (excluded[o]) continue;
      for (const auto& p : cover.sample_points(o, opts.verify_tol.samples_per_axis)) {
        Vec v = field(p);
        double w1buf[kMaxDim];
        omega1_eval(p.c.data(), w1buf);
        double num = 0;
        for (int i = 0; i < n; ++i) num += w1buf[i] * v[i];
        // subtract d(chi h1) contribution by finite differences
        if (chi && pot) {
          const double h = 1e-5;
          for (int i = 0; i < n; ++i) {
            Vec xp = p, xm = p;
            xp[i] += h;
            xm[i] -= h;
            num -= v[i] * (h1_term(wrap01(xp)) - h1_term(wrap01(xm))) / (2 * h);
          }
        }
        double vl = dot(interp->gradient(p), v);
        if (vl >= -1e-12) {
          if (std::fabs(num) > 1e-9) {
            unbounded = true;
            witness = p;
          }
          continue;
        }
        worst_ratio = std::max(worst_ratio, std::fabs(num) / (-vl));
      }
    }
    if (unbounded) {
      cert.refusal_code = "A0_UNBOUNDED";
      std::ostringstream os;
      os << "the level function does not decrease at (";
      for (int i = 0; i < n; ++i) os << (i ? "," : "") << witness[i];
      os << ") where the corrected form is nonzero";
      cert.refusal_detail = os.str();
      return cert;
    }
    a0 = 1.0 + worst_ratio;
  }

  auto make_omega2 = [&pres, omega1_eval, h1_term, interp, chi, pot, n](double a) {
    auto eval = [omega1_eval, h1_term, interp, chi, pot, a, n](const double* x, double* out) {
      omega1_eval(x, out);
      Vec xp(n);
      for (int i = 0; i < n; ++i) xp[i] = x[i];
      const double h = 1e-5;
      for (int i = 0; i < n; ++i) {
        Vec q = xp, r = xp;
        q[i] += h;
        r[i] -= h;
        double dl = ((*interp)(wrap01(q)) - (*interp)(wrap01(r))) / (2 * h);
        out[i] += a * dl;
        if (chi && pot) out[i] -= (h1_term(wrap01(q)) - h1_term(wrap01(r))) / (2 * h);
      }
    };
    return BasicOneForm(pres, eval, true, "constructed_lyapunov_form");
  };

  cert.a0 = a0;
  cert.a_used = std::max(a0, 1.0) + 0.1;
  cert.level = level;
  cert.omega2_with_a = make_omega2;
  cert.omega2 = std::make_shared<BasicOneForm>(make_omega2(cert.a_used));
  cert.checks = verify_lyapunov(field, *cert.omega2, cover, report.Rxi_boxes, W2, {},
                                opts.verify_tol);
  cert.success = cert.checks.all_passed();
  if (!cert.success) {
    cert.refusal_code = "VERIFICATION_FAILED";
    cert.refusal_detail = "constructed form failed its own verification";
  }
  return cert;
}

}  // namespace orbiflow
