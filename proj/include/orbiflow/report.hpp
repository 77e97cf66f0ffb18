#pragma once

// Report serialization: JSON documents with fixed 12-digit float formatting
// (identical runs produce identical bytes), SVG box overlays and level-set
// renderings for two-dimensional quotients, and the run manifest.

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "orbiflow/conley.hpp"
#include "orbiflow/graph.hpp"
#include "orbiflow/lyapunov.hpp"
#include "orbiflow/scenarios.hpp"

namespace orbiflow {

using Json = nlohmann::ordered_json;

inline Json json_num(double x) { return Json(round12(x)); }

inline Json json_vec(const Vec& v) {
  Json a = Json::array();
  for (int i = 0; i < v.n; ++i) a.push_back(round12(v[i]));
  return a;
}

inline Json params_json(const GraphParams& p) {
  Json j;
  j["resolution"] = p.resolution;
  j["T_edge"] = json_num(p.T_edge);
  j["delta"] = json_num(p.delta);
  j["step"] = json_num(p.step);
  j["samples_per_axis"] = p.samples_per_axis;
  j["seed"] = p.seed;
  j["w_tol"] = json_num(p.w_tol);
  return j;
}

inline Json recurrence_report_json(const Scenario& sc, const TransitionGraph& g,
                                   const RecurrenceReport& rep) {
  Json j;
  j["report_version"] = 1;
  j["kind"] = "recurrence";
  j["scenario"] = sc.name;
  j["params"] = params_json(g.params());
  j["nodes"] = g.node_count();
  j["edges"] = g.edge_count();
  j["R_count"] = rep.R_boxes.size();
  j["Rxi_count"] = rep.Rxi_boxes.size();
  j["Cxi_count"] = rep.Cxi_boxes.size();
  j["R_boxes"] = rep.R_boxes;
  j["Rxi_boxes"] = rep.Rxi_boxes;
  j["Cxi_boxes"] = rep.Cxi_boxes;
  j["cxi_closed"] = rep.cxi_closed;
  j["condition_b_holds"] = rep.condition_b_holds;
  j["has_cxi_cycles"] = rep.has_cxi_cycles;
  if (rep.has_cxi_cycles) {
    j["min_cycle_pairing"] = json_num(rep.min_cycle_pairing);
    j["max_cycle_pairing"] = json_num(rep.max_cycle_pairing);
    j["lambda_estimate"] = json_num(rep.lambda_estimate);
  }
  j["warnings"] = rep.warnings;
  return j;
}

inline Json verify_report_json(const VerifyReport& rep) {
  Json arr = Json::array();
  for (const auto& c : rep.checks) {
    Json e;
    e["name"] = c.name;
    e["passed"] = c.passed;
    e["margin"] = json_num(c.margin);
    e["witness"] = json_vec(c.witness);
    if (!c.note.empty()) e["note"] = c.note;
    arr.push_back(e);
  }
  Json j;
  j["all_passed"] = rep.all_passed();
  j["checks"] = arr;
  return j;
}

inline Json certificate_json(const Scenario& sc, const LyapunovCertificate& cert,
                             const GraphParams& params) {
  Json j;
  j["report_version"] = 1;
  j["kind"] = "lyapunov_certificate";
  j["scenario"] = sc.name;
  j["params"] = params_json(params);
  j["success"] = cert.success;
  if (!cert.refusal_code.empty()) {
    j["refusal_code"] = cert.refusal_code;
    j["refusal_detail"] = cert.refusal_detail;
  }
  j["W1_count"] = cert.W1.size();
  j["W2_count"] = cert.W2.size();
  j["W1"] = cert.W1;
  j["W2"] = cert.W2;
  if (cert.success || cert.refusal_code == "VERIFICATION_FAILED") {
    j["a0"] = json_num(cert.a0);
    j["a_used"] = json_num(cert.a_used);
    j["checks"] = verify_report_json(cert.checks);
    if (cert.level) {
      Json tbl = Json::array();
      for (double v : cert.level->values) tbl.push_back(round12(v));
      j["level_values"] = tbl;
      j["level_edge_gap"] = json_num(cert.level->edge_gap);
      j["level_smoothing_passes"] = cert.level->smoothing_passes;
    }
  }
  return j;
}

inline std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << content;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// --- SVG -------------------------------------------------------------------

// Box-set overlay for 2d quotients: recurrent boxes shaded, the class split
// colored, drawn on the unit square (every cell of each orbit is filled).
inline std::string box_overlay_svg(const BoxCover& cover, const RecurrenceReport& rep) {
  if (cover.dim() != 2) throw Error("svg overlay only for 2d");
  int res = cover.resolution();
  double px = 512.0 / res;
  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='512' height='512' "
        "viewBox='0 0 512 512'>\n<rect width='512' height='512' fill='#ffffff'/>\n";
  auto fill_boxes = [&](const std::vector<int>& orbits, const char* color) {
    for (int o : orbits)
      for (long cell : cover.cells_of_orbit(o)) {
        auto co = cover.cell_coords(cell);
        double x = co[0] * px, y = 512.0 - (co[1] + 1) * px;
        os << "<rect x='" << x << "' y='" << y << "' width='" << px << "' height='" << px
           << "' fill='" << color << "'/>\n";
      }
  };
  fill_boxes(rep.R_boxes, "#dddddd");
  fill_boxes(rep.Rxi_boxes, "#4caf50");
  fill_boxes(rep.Cxi_boxes, "#e53935");
  os << "</svg>\n";
  return os.str();
}

// Grayscale rendering of a per-box function with optional outlined box sets.
inline std::string level_svg(const BoxCover& cover, const std::vector<double>& values,
                             const std::vector<int>& outline_a,
                             const std::vector<int>& outline_b) {
  if (cover.dim() != 2) throw Error("svg rendering only for 2d");
  int res = cover.resolution();
  double px = 512.0 / res;
  double lo = 1e300, hi = -1e300;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= lo) hi = lo + 1;
  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='512' height='512' "
        "viewBox='0 0 512 512'>\n";
  for (int o = 0; o < cover.orbit_count(); ++o) {
    int shade = static_cast<int>(255 * (values[o] - lo) / (hi - lo));
    for (long cell : cover.cells_of_orbit(o)) {
      auto co = cover.cell_coords(cell);
      double x = co[0] * px, y = 512.0 - (co[1] + 1) * px;
      os << "<rect x='" << x << "' y='" << y << "' width='" << px << "' height='" << px
         << "' fill='rgb(" << shade << "," << shade << "," << shade << ")'/>\n";
    }
  }
  auto outline = [&](const std::vector<int>& orbits, const char* color) {
    for (int o : orbits)
      for (long cell : cover.cells_of_orbit(o)) {
        auto co = cover.cell_coords(cell);
        double x = co[0] * px, y = 512.0 - (co[1] + 1) * px;
        os << "<rect x='" << x << "' y='" << y << "' width='" << px << "' height='" << px
           << "' fill='none' stroke='" << color << "' stroke-width='1'/>\n";
      }
  };
  outline(outline_a, "#e53935");
  outline(outline_b, "#4caf50");
  os << "</svg>\n";
  return os.str();
}

// --- manifest ----------------------------------------------------------------

struct RunManifest {
  std::string scenario;
  std::string command;
  GraphParams params;
  std::vector<std::pair<std::string, std::string>> artifacts;  // (path, fnv1a hash)

  void add_artifact(const std::string& path, const std::string& content) {
    artifacts.push_back({path, fnv1a_hex(content)});
  }

  Json to_json() const {
    Json j;
    j["manifest_version"] = 1;
    j["command"] = command;
    j["scenario"] = scenario;
    j["params"] = params_json(params);
    Json arts = Json::array();
    for (const auto& [p, h] : artifacts) {
      Json e;
      e["path"] = p;
      e["fnv1a"] = h;
      arts.push_back(e);
    }
    j["artifacts"] = arts;
    return j;
  }
};

}  // namespace orbiflow
