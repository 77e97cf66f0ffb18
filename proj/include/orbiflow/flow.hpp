#pragma once

// Trajectory integration with winding tracking, time averages of 1-forms
// along orbits, and detection of almost-closed orbits with their pairing.

#include <optional>
#include <vector>

#include "orbiflow/core.hpp"
#include "orbiflow/fields.hpp"
#include "orbiflow/geometry.hpp"
#include "orbiflow/gpath.hpp"

namespace orbiflow {

// Sampled orbit in lifted (unwrapped) coordinates, so the displacement and
// winding are readable from the endpoints.
struct Trajectory {
  Vec start;
  double step = 1e-3;
  double total_time = 0;
  std::vector<Vec> states;  // lifted; states[k] at time k*step

  Vec endpoint_lifted() const { return states.back(); }
  Vec endpoint_torus() const { return wrap01(states.back()); }
  Vec displacement() const { return states.back() - states.front(); }
};

namespace detail {

// One classical 4th-order step; evaluates the field on wrapped coordinates,
// advances the lift.
inline void rk4_step(const EquivariantVectorField& field, double* x, int n, double h) {
  double k1[kMaxDim], k2[kMaxDim], k3[kMaxDim], k4[kMaxDim], tmp[kMaxDim];
  auto wrap_eval = [&](const double* p, double* out) {
    double w[kMaxDim];
    for (int i = 0; i < n; ++i) w[i] = wrap01(p[i]);
    field.eval_into(w, out);
  };
  wrap_eval(x, k1);
  for (int i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
  wrap_eval(tmp, k2);
  for (int i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
  wrap_eval(tmp, k3);
  for (int i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
  wrap_eval(tmp, k4);
  for (int i = 0; i < n; ++i) x[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
}

inline void check_step_bound(const Vec& before, const Vec& after, double step) {
  if (sup_norm(after - before) >= 0.5)
    throw Error("step adaption failure: velocity exceeds 0.5/step (winding aliasing)");
}

}  // namespace detail

inline Trajectory integrate(const EquivariantVectorField& field, const Vec& x0, double time,
                            double step = 1e-3) {
  if (time < 0) throw Error("integrate: negative time");
  int n = field.dim();
  Trajectory tr;
  tr.start = wrap01(x0);
  tr.step = step;
  tr.total_time = time;
  std::size_t steps = static_cast<std::size_t>(std::ceil(time / step - 1e-12));
  tr.states.reserve(steps + 1);
  Vec x = tr.start;
  tr.states.push_back(x);
  double t = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    double h = std::min(step, time - t);
    Vec before = x;
    detail::rk4_step(field, x.c.data(), n, h);
    detail::check_step_bound(before, x, h);
    t += h;
    tr.states.push_back(x);
  }
  return tr;
}

// Endpoint plus the accumulated line integral of `form` along the orbit,
// without storing intermediate states. Trapezoid in time on the contraction.
struct FlowSample {
  Vec end_lifted;
  double form_integral = 0;
};

inline FlowSample integrate_with_form(const EquivariantVectorField& field,
                                      const BasicOneForm* form, const Vec& x0, double time,
                                      double step) {
  int n = field.dim();
  Vec x = wrap01(x0);
  KahanSum acc;
  double prev_f = 0;
  bool have_prev = false;
  double vbuf[kMaxDim], wbuf[kMaxDim], wr[kMaxDim];
  auto contraction_at = [&](const double* lift) {
    for (int i = 0; i < n; ++i) wr[i] = wrap01(lift[i]);
    field.eval_into(wr, vbuf);
    form->eval_into(wr, wbuf);
    double s = 0;
    for (int i = 0; i < n; ++i) s += vbuf[i] * wbuf[i];
    return s;
  };
  if (form) {
    prev_f = contraction_at(x.c.data());
    have_prev = true;
  }
  double t = 0;
  while (t < time - 1e-12) {
    double h = std::min(step, time - t);
    Vec before = x;
    detail::rk4_step(field, x.c.data(), n, h);
    detail::check_step_bound(before, x, h);
    t += h;
    if (form) {
      double f = contraction_at(x.c.data());
      acc.add(0.5 * (prev_f + f) * h);
      prev_f = f;
    }
  }
  (void)have_prev;
  FlowSample out;
  out.end_lifted = x;
  out.form_integral = acc.value();
  return out;
}

// Time average (1/T) * integral of iota_v(form) along the orbit from x0.
inline double birkhoff_average(const EquivariantVectorField& field, const BasicOneForm& form,
                               const Vec& x0, double horizon, double step = 1e-3) {
  if (horizon <= 0) throw Error("birkhoff_average: horizon must be positive");
  auto s = integrate_with_form(field, &form, x0, horizon, step);
  return s.form_integral / horizon;
}

// An almost-closed orbit: after time tau the orbit returns delta-close to its
// start in the quotient. The closing correction is the straight segment to
// the nearest lift, so the pairing is a genuine loop integral.
struct DeltaTCycle {
  OrbifoldPoint base;
  double tau = 0;
  GroupElement closing_group_element;  // arrow mapping the matched lift back to base
  double closing_gap = 0;
  double pairing = 0;
  std::optional<Vec> integer_class;  // total winding (trivial group only)
};

inline std::optional<DeltaTCycle> detect_cycle(const EquivariantVectorField& field,
                                               const CohomologyClass& cls, const Vec& x0,
                                               double delta, double min_time, double horizon,
                                               double step = 1e-3) {
  auto [eps, scale_delta] = cls.compute_scale();
  if (delta > scale_delta + 1e-12)
    throw Error("detect_cycle: delta exceeds the scale of the class");
  if (horizon < min_time) throw Error("detect_cycle: horizon below minimal time");
  const auto& pres = field.presentation();
  const auto& form = cls.representative();
  int n = field.dim();

  Vec start = wrap01(x0);
  Vec x = start;
  KahanSum acc;
  double vbuf[kMaxDim], wbuf[kMaxDim], wr[kMaxDim];
  auto contraction_at = [&](const double* lift) {
    for (int i = 0; i < n; ++i) wr[i] = wrap01(lift[i]);
    field.eval_into(wr, vbuf);
    form.eval_into(wr, wbuf);
    double s = 0;
    for (int i = 0; i < n; ++i) s += vbuf[i] * wbuf[i];
    return s;
  };
  double prev_f = contraction_at(x.c.data());
  double t = 0;
  while (t < horizon - 1e-12) {
    double h = std::min(step, horizon - t);
    Vec before = x;
    detail::rk4_step(field, x.c.data(), n, h);
    detail::check_step_bound(before, x, h);
    t += h;
    double f = contraction_at(x.c.data());
    acc.add(0.5 * (prev_f + f) * h);
    prev_f = f;
    if (t <= min_time) continue;
    double gap = pres.quotient_distance(wrap01(x), start);
    if (gap < delta) {
      // match the endpoint to the nearest lift g*start + k
      auto [g, k] = pres.closest_lift(x, start);
      Vec target(n);
      Vec gs = g.apply(start);
      for (int i = 0; i < n; ++i) target[i] = gs[i] + k[i];
      // correction integral along the straight segment x -> target
      double corr = 0;
      {
        Vec from = wrap01(x);
        Vec to_lift(n);
        for (int i = 0; i < n; ++i) to_lift[i] = from[i] + (target[i] - x[i]);
        Segment seg = make_segment(from, to_lift, 65);
        KahanSum cs;
        for (std::size_t q = 0; q + 1 < seg.nodes.size(); ++q)
          cs.add(detail::integrate_pair(form, seg.nodes[q], seg.nodes[q + 1]));
        corr = cs.value();
      }
      DeltaTCycle cyc;
      cyc.base = pres.point(start);
      cyc.tau = t;
      cyc.closing_group_element = g.inverse();
      cyc.closing_gap = gap;
      cyc.pairing = acc.value() + corr;
      if (pres.trivial()) {
        Vec cl(n);
        for (int i = 0; i < n; ++i) cl[i] = std::round(x[i] + (target[i] - x[i]) - start[i]);
        cyc.integer_class = cl;
      }
      return cyc;
    }
  }
  return std::nullopt;
}

inline std::string trajectory_csv(const Trajectory& tr) {
  std::ostringstream os;
  os << "t";
  for (int i = 0; i < tr.start.n; ++i) os << ",lift" << i;
  for (int i = 0; i < tr.start.n; ++i) os << ",torus" << i;
  os << "\n";
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    os << round12(k * tr.step);
    for (int i = 0; i < tr.start.n; ++i) os << "," << round12(tr.states[k][i]);
    Vec w = wrap01(tr.states[k]);
    for (int i = 0; i < tr.start.n; ++i) os << "," << round12(w[i]);
    os << "\n";
  }
  return os.str();
}

}  // namespace orbiflow
