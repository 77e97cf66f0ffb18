#pragma once

// Command implementations shared by the command-line tool and the tests.
// Each run writes its artifacts under an output directory and returns the
// process exit code:
//   0 success (and, with check_expected, all expected flags matched)
//   2 unknown scenario / bad arguments
//   3 validation or construction input errors
//   4 construction refusal (without check_expected)
//   5 expected flags did not match computed flags

#include <filesystem>
#include <optional>
#include <string>

#include "orbiflow/flow.hpp"
#include "orbiflow/report.hpp"

namespace orbiflow {

struct CliOptions {
  std::string scenario_name;
  std::string config_path;
  std::optional<int> resolution;
  std::optional<double> T_edge;
  std::optional<double> delta;
  std::optional<double> step;
  std::optional<int> samples;
  std::optional<uint64_t> seed;
  std::string out_dir = "out";
  bool check_expected = false;
};

inline Scenario resolve_scenario(const CliOptions& opt) {
  Scenario sc = opt.config_path.empty()
                    ? builtin(opt.scenario_name)
                    : load_scenario(read_text_file(opt.config_path),
                                    opt.scenario_name.empty() ? "config" : opt.scenario_name);
  if (opt.resolution) sc.params.resolution = *opt.resolution;
  if (opt.T_edge) sc.params.T_edge = *opt.T_edge;
  if (opt.delta) sc.params.delta = *opt.delta;
  if (opt.step) sc.params.step = *opt.step;
  if (opt.samples) sc.params.samples_per_axis = *opt.samples;
  if (opt.seed) sc.params.seed = *opt.seed;
  return sc;
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
}

struct RecurrenceRun {
  TransitionGraph graph;
  RecurrenceReport report;
  Json report_json;
};

inline RecurrenceRun run_recurrence_pipeline(const Scenario& sc) {
  TransitionGraph graph = build_graph(*sc.field, *sc.cls, sc.params);
  RecurrenceReport rep = xi_recurrent_split(graph);
  Json j = recurrence_report_json(sc, graph, rep);
  return RecurrenceRun{std::move(graph), std::move(rep), std::move(j)};
}

inline int cmd_recurrence(const CliOptions& opt, std::ostream& log) {
  Scenario sc = resolve_scenario(opt);
  ensure_dir(opt.out_dir);
  RunManifest manifest;
  manifest.command = "recurrence";
  manifest.scenario = sc.name;
  auto run = run_recurrence_pipeline(sc);
  manifest.params = run.graph.params();

  std::string report_text = dump_json(run.report_json);
  std::string report_path = opt.out_dir + "/recurrence.json";
  write_text_file(report_path, report_text);
  manifest.add_artifact(report_path, report_text);
  if (sc.presentation->dim() == 2) {
    std::string svg = box_overlay_svg(run.graph.cover(), run.report);
    write_text_file(opt.out_dir + "/boxes.svg", svg);
    manifest.add_artifact(opt.out_dir + "/boxes.svg", svg);
  }
  std::string cache_path = opt.out_dir + "/graph.oflg";
  write_graph_cache(run.graph, cache_path);
  Json sidecar = params_json(run.graph.params());
  sidecar["scenario"] = sc.name;
  write_text_file(cache_path + ".json", dump_json(sidecar));
  write_text_file(opt.out_dir + "/manifest.json", dump_json(manifest.to_json()));

  log << "R: " << run.report.R_boxes.size() << " boxes, class-trivial: "
      << run.report.Rxi_boxes.size() << ", complement: " << run.report.Cxi_boxes.size()
      << "\ncomplement closed: " << (run.report.cxi_closed ? "yes" : "no")
      << ", cycle bound holds: " << (run.report.condition_b_holds ? "yes" : "no") << "\n";

  if (opt.check_expected) {
    bool ok = run.report.cxi_closed == sc.expected.cxi_closed &&
              run.report.condition_b_holds == sc.expected.condition_b;
    if (!ok) {
      log << "expected flags do not match\n";
      return 5;
    }
  }
  return 0;
}

struct MeasureSpec {
  enum class Kind { Ulam, UlamCxi, Trajectory } kind = Kind::Ulam;
  Vec seed;
  double horizon = 50.0;
};

inline MeasureSpec parse_measure_spec(const std::string& text, const Scenario& sc) {
  MeasureSpec m;
  if (text.empty() || text == "ulam") {
    m.kind = MeasureSpec::Kind::Ulam;
  } else if (text == "ulam-cxi") {
    m.kind = MeasureSpec::Kind::UlamCxi;
  } else if (text.rfind("trajectory:", 0) == 0) {
    m.kind = MeasureSpec::Kind::Trajectory;
    std::string rest = text.substr(11);
    std::replace(rest.begin(), rest.end(), ',', ' ');
    std::istringstream is(rest);
    m.seed = Vec(sc.presentation->dim());
    for (int i = 0; i < m.seed.n; ++i)
      if (!(is >> m.seed[i])) throw Error("bad trajectory measure spec: " + text);
    double T;
    if (is >> T) m.horizon = T;
  } else {
    throw Error("unknown measure spec: " + text);
  }
  return m;
}

inline int cmd_asymptotic(const CliOptions& opt, const std::string& measure_spec,
                          std::ostream& log) {
  Scenario sc = resolve_scenario(opt);
  ensure_dir(opt.out_dir);
  MeasureSpec spec = parse_measure_spec(measure_spec, sc);
  auto run = run_recurrence_pipeline(sc);
  const auto& form = sc.cls->representative();

  BoxMeasure mu;
  std::string measure_name;
  if (spec.kind == MeasureSpec::Kind::UlamCxi) {
    if (run.report.Cxi_boxes.empty()) throw Error("measure spec ulam-cxi: complement empty");
    mu = ulam_measure(run.graph, &run.report.Cxi_boxes);
    measure_name = "ulam-cxi";
  } else {
    mu = ulam_measure(run.graph);
    measure_name = "ulam";
  }
  double ulam_pair = asymptotic_pairing(run.graph, mu, *sc.field, form);

  Vec seed = spec.seed;
  if (spec.kind != MeasureSpec::Kind::Trajectory) {
    auto it = sc.named_points.find("cxi_seed");
    seed = it != sc.named_points.end() ? it->second : Vec(sc.presentation->dim());
    if (it == sc.named_points.end())
      for (int i = 0; i < seed.n; ++i) seed[i] = 0.1 + 0.2 * i;
  }
  double birkhoff = birkhoff_average(*sc.field, form, seed, spec.horizon, sc.params.step);

  Json j;
  j["report_version"] = 1;
  j["kind"] = "asymptotic";
  j["scenario"] = sc.name;
  j["params"] = params_json(run.graph.params());
  j["measure"] = measure_name.empty() ? "trajectory" : measure_name;
  j["ulam_pairing"] = json_num(ulam_pair);
  j["birkhoff_seed"] = json_vec(seed);
  j["birkhoff_horizon"] = json_num(spec.horizon);
  j["birkhoff_pairing"] = json_num(birkhoff);
  j["difference"] = json_num(ulam_pair - birkhoff);
  std::string text = dump_json(j);
  write_text_file(opt.out_dir + "/asymptotic.json", text);
  RunManifest manifest;
  manifest.command = "asymptotic";
  manifest.scenario = sc.name;
  manifest.params = run.graph.params();
  manifest.add_artifact(opt.out_dir + "/asymptotic.json", text);
  write_text_file(opt.out_dir + "/manifest.json", dump_json(manifest.to_json()));
  log << "ulam pairing: " << ulam_pair << ", birkhoff pairing: " << birkhoff << "\n";
  return 0;
}

inline int cmd_lyapunov(const CliOptions& opt, std::ostream& log,
                        bool override_condition_b = false) {
  Scenario sc = resolve_scenario(opt);
  ensure_dir(opt.out_dir);
  auto run = run_recurrence_pipeline(sc);
  ConstructionOptions copts;
  copts.override_condition_b = override_condition_b;
  LyapunovCertificate cert =
      construct_lyapunov_form(*sc.field, *sc.cls, run.report, run.graph, copts);

  Json j = certificate_json(sc, cert, run.graph.params());
  std::string text = dump_json(j);
  write_text_file(opt.out_dir + "/certificate.json", text);
  RunManifest manifest;
  manifest.command = "lyapunov";
  manifest.scenario = sc.name;
  manifest.params = run.graph.params();
  manifest.add_artifact(opt.out_dir + "/certificate.json", text);
  if (sc.presentation->dim() == 2 && cert.level) {
    std::string svg = level_svg(run.graph.cover(), cert.level->values, cert.W1, cert.W2);
    write_text_file(opt.out_dir + "/level.svg", svg);
    manifest.add_artifact(opt.out_dir + "/level.svg", svg);
  }
  write_text_file(opt.out_dir + "/manifest.json", dump_json(manifest.to_json()));

  if (cert.success)
    log << "certificate constructed: a0=" << cert.a0 << " a_used=" << cert.a_used << "\n";
  else
    log << "construction refused: " << cert.refusal_code << " (" << cert.refusal_detail
        << ")\n";

  if (opt.check_expected)
    return cert.success == sc.expected.lyapunov_exists ? 0 : 5;
  return cert.success ? 0 : 4;
}

inline int cmd_verify(const CliOptions& opt, const std::string& form_file,
                      const std::string& y_spec, std::ostream& log) {
  Scenario sc = resolve_scenario(opt);
  ensure_dir(opt.out_dir);
  // candidate form: [form] section with component entries, or the scenario's
  // own representative when no file is given
  BasicOneForm candidate = sc.cls->representative();
  if (!form_file.empty()) {
    auto sections = cfg::parse_sections(read_text_file(form_file));
    if (!sections.count("form")) throw Error("form file needs a [form] section");
    candidate = BasicOneForm(*sc.presentation, sections["form"].all("component"));
  }
  BoxCover cover(*sc.presentation, sc.params.resolution);

  std::vector<int> Y_boxes, U_boxes;
  std::vector<Vec> y_points;
  if (y_spec == "auto") {
    TransitionGraph graph = build_graph(*sc.field, *sc.cls, sc.params);
    auto rep = xi_recurrent_split(graph);
    Y_boxes = rep.Rxi_boxes;
    U_boxes = cover.orbit_neighborhood(Y_boxes, 2);
  } else if (y_spec == "zeros") {
    if (!sc.y_points) throw Error("scenario has no invariant-set sampler");
    y_points = sc.y_points(4 * sc.params.resolution);
    std::vector<char> seen(cover.orbit_count(), 0);
    for (const auto& p : y_points) {
      int o = cover.orbit_of_point(p);
      if (!seen[o]) {
        seen[o] = 1;
        Y_boxes.push_back(o);
      }
    }
    U_boxes = cover.orbit_neighborhood(Y_boxes, 2);
  } else if (y_spec == "none" || y_spec.empty()) {
    // empty invariant set: only the sign condition is in force
  } else {
    throw Error("unknown Y spec: " + y_spec + " (use auto|zeros|none)");
  }

  VerifyReport rep = verify_lyapunov(*sc.field, candidate, cover, Y_boxes, U_boxes, y_points);
  Json j;
  j["report_version"] = 1;
  j["kind"] = "verify";
  j["scenario"] = sc.name;
  j["resolution"] = sc.params.resolution;
  j["y_spec"] = y_spec;
  j["result"] = verify_report_json(rep);
  std::string text = dump_json(j);
  write_text_file(opt.out_dir + "/verify.json", text);
  log << (rep.all_passed() ? "all checks passed\n" : "checks failed\n");
  return rep.all_passed() ? 0 : 4;
}

inline int cmd_scenarios(const std::string& sub, const std::string& name, std::ostream& log) {
  if (sub == "list") {
    for (const auto& n : builtin_names()) log << n << "\n";
    return 0;
  }
  if (sub == "show") {
    log << serialize_scenario(builtin(name));
    return 0;
  }
  log << "usage: scenarios list | scenarios show <name>\n";
  return 2;
}

}  // namespace orbiflow
