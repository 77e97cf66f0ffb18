#pragma once

// Built-in flow/class instances and the scenario configuration format.
//
// Config files are line-based with [presentation], [field], [form], [params],
// [expected] sections; coefficient functions use the combinator grammar from
// fields.hpp; group shifts are exact rationals "p/q".

#include <map>
#include <memory>
#include <sstream>
#include <vector>

#include "orbiflow/fields.hpp"
#include "orbiflow/geometry.hpp"
#include "orbiflow/graph.hpp"

namespace orbiflow {

struct ScenarioExpectations {
  std::string r_description, rxi_description, cxi_description;
  bool cxi_closed = true;
  bool condition_b = true;
  bool lyapunov_exists = true;
};

struct Scenario {
  std::string name;
  std::string title;
  std::shared_ptr<QuotientPresentation> presentation;
  std::shared_ptr<EquivariantVectorField> field;
  std::shared_ptr<CohomologyClass> cls;
  ScenarioExpectations expected;
  GraphParams params;
  std::map<std::string, Vec> named_points;  // rest points, seeds
  std::function<std::vector<Vec>(int)> y_points;  // samples of the invariant set

  void validate_consistency() const {
    if (expected.lyapunov_exists && !expected.cxi_closed)
      throw Error("inconsistent expectations: existence requires a closed complement");
  }
};

// --- config text ------------------------------------------------------------

namespace cfg {

struct Section {
  std::vector<std::pair<std::string, std::string>> entries;
  std::string get(const std::string& key, const std::string& fallback = "") const {
    for (const auto& [k, v] : entries)
      if (k == key) return v;
    return fallback;
  }
  std::vector<std::string> all(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries)
      if (k == key) out.push_back(v);
    return out;
  }
};

inline std::map<std::string, Section> parse_sections(const std::string& text) {
  std::map<std::string, Section> out;
  std::istringstream in(text);
  std::string line, current;
  while (std::getline(in, line)) {
    auto h = line.find('#');
    if (h != std::string::npos) line = line.substr(0, h);
    auto ltrim = line.find_first_not_of(" \t\r");
    if (ltrim == std::string::npos) continue;
    auto rtrim = line.find_last_not_of(" \t\r");
    line = line.substr(ltrim, rtrim - ltrim + 1);
    if (line.front() == '[' && line.back() == ']') {
      current = line.substr(1, line.size() - 2);
      out[current];
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("config line without '=': " + line);
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t");
      auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    if (current.empty()) throw Error("config entry outside any section: " + line);
    out[current].entries.push_back({trim(key), trim(val)});
  }
  return out;
}

inline GroupElement parse_element(const std::string& spec, int dim) {
  auto bar = spec.find('|');
  if (bar == std::string::npos) throw Error("group element needs 'matrix | shift': " + spec);
  std::istringstream ms(spec.substr(0, bar));
  GroupElement g;
  g.linear.n = dim;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      if (!(ms >> g.linear.at(i, j))) throw Error("bad matrix in group element: " + spec);
  std::istringstream ss(spec.substr(bar + 1));
  for (int i = 0; i < dim; ++i) {
    std::string tok;
    if (!(ss >> tok)) throw Error("bad shift in group element: " + spec);
    g.shift[i] = rat_mod1(parse_rat(tok));
  }
  return g;
}

inline std::string element_str(const GroupElement& g) {
  std::ostringstream os;
  for (int i = 0; i < g.dim(); ++i)
    for (int j = 0; j < g.dim(); ++j) os << g.linear.at(i, j) << " ";
  os << "|";
  for (int i = 0; i < g.dim(); ++i) os << " " << rat_str(rat_mod1(g.shift[i]));
  return os.str();
}

inline bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw Error("expected boolean, got: " + s);
}

}  // namespace cfg

inline Scenario load_scenario(const std::string& text, const std::string& name = "config") {
  auto sections = cfg::parse_sections(text);
  if (!sections.count("presentation") || !sections.count("field") || !sections.count("form"))
    throw Error("config needs [presentation], [field], [form] sections");
  const auto& sp = sections["presentation"];
  int dim = std::stoi(sp.get("dim", "2"));
  std::vector<GroupElement> group;
  for (const auto& e : sp.all("element")) group.push_back(cfg::parse_element(e, dim));
  if (group.empty()) group.push_back(identity_element(dim));

  Scenario sc;
  sc.name = name;
  sc.presentation = std::make_shared<QuotientPresentation>(dim, group);
  const auto& sf = sections["field"];
  sc.field = std::make_shared<EquivariantVectorField>(*sc.presentation, sf.all("component"),
                                                      sf.get("description"));
  const auto& sw = sections["form"];
  BasicOneForm rep(*sc.presentation, sw.all("component"));
  sc.cls = std::make_shared<CohomologyClass>(std::move(rep));
  if (sections.count("params")) {
    const auto& pp = sections["params"];
    sc.params.resolution = std::stoi(pp.get("resolution", "64"));
    sc.params.T_edge = std::stod(pp.get("T", "1.0"));
    if (!pp.get("delta").empty()) sc.params.delta = std::stod(pp.get("delta"));
    sc.params.step = std::stod(pp.get("step", "0.002"));
    sc.params.samples_per_axis = std::stoi(pp.get("samples", "4"));
    sc.params.seed = std::stoull(pp.get("seed", "1"));
    sc.params.w_tol = std::stod(pp.get("w_tol", "0.001"));
  }
  if (sections.count("expected")) {
    const auto& se = sections["expected"];
    sc.expected.cxi_closed = cfg::parse_bool(se.get("cxi_closed", "true"));
    sc.expected.condition_b = cfg::parse_bool(se.get("condition_b", "true"));
    sc.expected.lyapunov_exists = cfg::parse_bool(se.get("lyapunov_exists", "true"));
    sc.expected.r_description = se.get("r");
    sc.expected.rxi_description = se.get("rxi");
    sc.expected.cxi_description = se.get("cxi");
  }
  sc.title = sections.count("meta") ? sections["meta"].get("title") : name;
  sc.validate_consistency();
  return sc;
}

inline std::string serialize_scenario(const Scenario& sc) {
  std::ostringstream os;
  os << "[meta]\ntitle = " << sc.title << "\n\n[presentation]\ndim = "
     << sc.presentation->dim() << "\n";
  for (const auto& g : sc.presentation->group())
    os << "element = " << cfg::element_str(g) << "\n";
  os << "\n[field]\n";
  if (!sc.field->description().empty()) os << "description = " << sc.field->description() << "\n";
  for (const auto& s : sc.field->sources()) os << "component = " << s << "\n";
  os << "\n[form]\n";
  for (const auto& s : sc.cls->representative().sources()) os << "component = " << s << "\n";
  char buf[64];
  os << "\n[params]\nresolution = " << sc.params.resolution;
  std::snprintf(buf, sizeof buf, "%.17g", sc.params.T_edge);
  os << "\nT = " << buf;
  if (sc.params.delta > 0) {
    std::snprintf(buf, sizeof buf, "%.17g", sc.params.delta);
    os << "\ndelta = " << buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", sc.params.step);
  os << "\nstep = " << buf << "\nsamples = " << sc.params.samples_per_axis
     << "\nseed = " << sc.params.seed;
  std::snprintf(buf, sizeof buf, "%.17g", sc.params.w_tol);
  os << "\nw_tol = " << buf << "\n";
  os << "\n[expected]\ncxi_closed = " << (sc.expected.cxi_closed ? "true" : "false")
     << "\ncondition_b = " << (sc.expected.condition_b ? "true" : "false")
     << "\nlyapunov_exists = " << (sc.expected.lyapunov_exists ? "true" : "false") << "\n";
  if (!sc.expected.r_description.empty()) os << "r = " << sc.expected.r_description << "\n";
  if (!sc.expected.rxi_description.empty())
    os << "rxi = " << sc.expected.rxi_description << "\n";
  if (!sc.expected.cxi_description.empty())
    os << "cxi = " << sc.expected.cxi_description << "\n";
  return os.str();
}

// --- built-in registry -------------------------------------------------------

namespace builtin_detail {

// slope scaling giving linearization rate 1.2 at the circle-field zeros
inline constexpr const char* kRate = "0.19098593171027443";

inline std::string scenario_text(const std::string& name) {
  if (name == "pillowcase-rational") {
    // quotient by -id; field h*(1,2) and form -h*(dx+dy) with h = sin(2pi(x+y));
    // the pairing h*(f1*a+f2*b) = -0.6 h^2 is negative off the zero circles
    return R"(
[meta]
title = rotation quotient, rational slope, decaying pairing

[presentation]
dim = 2
element = 1 0 0 1 | 0/1 0/1
element = -1 0 0 -1 | 0/1 0/1

[field]
description = odd speed factor times constant rational slope (1,2)
component = (scale 0.2 (sum (prod (sinx 0) (cosx 1)) (prod (cosx 0) (sinx 1))))
component = (scale 0.4 (sum (prod (sinx 0) (cosx 1)) (prod (cosx 0) (sinx 1))))

[form]
component = (scale -1 (sum (prod (sinx 0) (cosx 1)) (prod (cosx 0) (sinx 1))))
component = (scale -1 (sum (prod (sinx 0) (cosx 1)) (prod (cosx 0) (sinx 1))))

[params]
resolution = 128
T = 1.0
step = 0.002
samples = 4
seed = 1

[expected]
cxi_closed = true
condition_b = true
lyapunov_exists = true
r = boxes meeting the two circles x+y=0 and x+y=1/2
rxi = equal to R (the representative is exact)
cxi = empty
)";
  }
  if (name == "pillowcase-nonclosed") {
    // vertical flow resting on one circle; the class pairs -1 with every
    // moving vertical loop, so only the rest circle is class-trivial and its
    // complement accumulates onto it. Realized on the torus with trivial
    // group: the two-element quotient carries no nonzero class.
    return R"(
[meta]
title = vertical flow with a rest circle; complement not closed

[presentation]
dim = 2

[field]
description = (0, sin^2(pi x)) resting on the circle x=0
component = (const 0)
component = (sum (const 0.5) (scale -0.5 (cosx 0)))

[form]
component = (const 0)
component = (const -1)

[params]
resolution = 128
T = 1.0
step = 0.002
samples = 4
seed = 1

[expected]
cxi_closed = false
condition_b = true
lyapunov_exists = false
r = all boxes
rxi = boxes on and near the rest circle x=0
cxi = the moving vertical circles
)";
  }
  if (name == "torus-irrational-null") {
    // dense linear flow with golden-ratio slope; the class annihilates the
    // flow direction, cycle pairings of both signs accumulate near zero but
    // never vanish
    return R"(
[meta]
title = irrational slope, class annihilating the mean drift

[presentation]
dim = 2

[field]
description = positive speed factor times slope (1, golden)
component = (sum (const 1) (scale 0.3 (sum (prod (cosx 0) (cosx 1)) (scale -1 (prod (sinx 0) (sinx 1))))))
component = (scale 1.6180339887498949 (sum (const 1) (scale 0.3 (sum (prod (cosx 0) (cosx 1)) (scale -1 (prod (sinx 0) (sinx 1)))))))

[form]
component = (const -1.6180339887498949)
component = (const 1)

[params]
resolution = 128
T = 1.0
step = 0.002
samples = 4
seed = 1

[expected]
cxi_closed = true
condition_b = false
lyapunov_exists = false
r = all boxes
rxi = empty
cxi = all recurrent boxes
)";
  }
  if (name == "product-construction") {
    // circle attractor-repeller times circle, coupled through disjoint bumps:
    // two rest points over the attractor, a rotating circle over the repeller
    return R"(
[meta]
title = product of a circle attractor-repeller with a rotation

[presentation]
dim = 2

[field]
description = w1(t1) d/dt1 + (f1(t1) w1(t2) + f2(t1)) d/dt2
component = (scale 0.19098593171027443 (cosx 0 0.00390625))
component = (sum (prod (bumpx 0 0.25390625 0.15) (scale 0.19098593171027443 (cosx 1 0.00390625))) (bumpx 0 0.75390625 0.15))

[form]
component = (const 0)
component = (sum (const -1) (scale 0.31415926535897931 (cosx 1)))

[params]
resolution = 128
T = 1.0
step = 0.002
samples = 4
seed = 1

[expected]
cxi_closed = true
condition_b = true
lyapunov_exists = true
r = two rest boxes over the attractor plus the rotating circle over the repeller
rxi = the two rest boxes near (0.25,0.25) and (0.25,0.75)
cxi = the circle t1=0.75
)";
  }
  if (name == "gradient-torus") {
    // gradient descent with four hyperbolic critical points and zero class
    return R"(
[meta]
title = gradient flow, zero class

[presentation]
dim = 2

[field]
description = negative gradient of a product of shifted cosines
component = (scale 0.19098593171027443 (sinx 0 0.2))
component = (scale 0.19098593171027443 (sinx 1 0.3))

[form]
component = (const 0)
component = (const 0)

[params]
resolution = 128
T = 1.0
step = 0.002
samples = 4
seed = 1

[expected]
cxi_closed = true
condition_b = true
lyapunov_exists = true
r = the four critical boxes
rxi = equal to R
cxi = empty
)";
  }
  if (name == "linear-minimal") {
    // constant slope (1,2); every orbit closes with pairing +1 against [dx]
    return R"(
[meta]
title = minimal linear flow, positive pairing control

[presentation]
dim = 2

[field]
description = constant vector field (1,2)
component = (const 1)
component = (const 2)

[form]
component = (const 1)
component = (const 0)

[params]
resolution = 64
T = 1.0
step = 0.002
samples = 4
seed = 1

[expected]
cxi_closed = true
condition_b = false
lyapunov_exists = false
r = all boxes
rxi = empty
cxi = all boxes
)";
  }
  if (name == "circle-attractor") {
    // one-dimensional factor of the product construction
    return R"(
[meta]
title = circle flow with one attractor and one repeller

[presentation]
dim = 1

[field]
description = cos-type circle field, zeros near 1/4 and 3/4
component = (scale 0.19098593171027443 (cosx 0 0.001953125))

[form]
component = (const 0)

[params]
resolution = 256
T = 1.0
step = 0.002
samples = 8
seed = 1

[expected]
cxi_closed = true
condition_b = true
lyapunov_exists = true
r = the two rest boxes
rxi = equal to R
cxi = empty
)";
  }
  throw Error("unknown scenario: " + name);
}

}  // namespace builtin_detail

inline std::vector<std::string> builtin_names() {
  return {"pillowcase-rational", "pillowcase-nonclosed", "torus-irrational-null",
          "product-construction", "gradient-torus", "linear-minimal", "circle-attractor"};
}

inline Scenario builtin(const std::string& name) {
  Scenario sc = load_scenario(builtin_detail::scenario_text(name), name);
  if (name == "pillowcase-rational") {
    sc.y_points = [](int k) {
      std::vector<Vec> pts;
      for (int i = 0; i < k; ++i) {
        double t = (i + 0.5) / k;
        pts.push_back(Vec{wrap01(t), wrap01(-t)});
        pts.push_back(Vec{wrap01(t), wrap01(0.5 - t)});
      }
      return pts;
    };
  } else if (name == "pillowcase-nonclosed") {
    sc.named_points["cxi_seed"] = Vec{0.25, 0.0};
    sc.y_points = [](int k) {
      std::vector<Vec> pts;
      for (int i = 0; i < k; ++i) pts.push_back(Vec{0.0, (i + 0.5) / k});
      return pts;
    };
  } else if (name == "product-construction") {
    double za = 0.25390625, zr = 0.75390625;
    sc.named_points["sink"] = Vec{za, za};
    sc.named_points["saddle"] = Vec{za, zr};
    sc.named_points["cxi_seed"] = Vec{zr, 0.0};
    sc.y_points = [za, zr](int) {
      return std::vector<Vec>{Vec{za, za}, Vec{za, zr}};
    };
  } else if (name == "gradient-torus") {
    sc.named_points["source"] = Vec{0.2, 0.3};
    sc.named_points["saddle_a"] = Vec{0.2, 0.8};
    sc.named_points["saddle_b"] = Vec{0.7, 0.3};
    sc.named_points["sink"] = Vec{0.7, 0.8};
    sc.y_points = [](int) {
      return std::vector<Vec>{Vec{0.2, 0.3}, Vec{0.2, 0.8}, Vec{0.7, 0.3}, Vec{0.7, 0.8}};
    };
  } else if (name == "circle-attractor") {
    sc.named_points["attractor"] = Vec{0.251953125};
    sc.named_points["repeller"] = Vec{0.751953125};
    sc.y_points = [](int) {
      return std::vector<Vec>{Vec{0.251953125}, Vec{0.751953125}};
    };
  }
  return sc;
}

}  // namespace orbiflow
