// Command-line driver: synthesis pipeline, simulation, verification, local
// refinement, the annealing baseline, model export, and topology enumeration.
// Exit codes: 0 success, 1 usage/schema error, 2 limit hit or check failed,
// 3 proven infeasible.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "linkforge/bb.hpp"
#include "linkforge/io/json.hpp"
#include "linkforge/io/svg.hpp"
#include "linkforge/jansen.hpp"
#include "linkforge/kin.hpp"
#include "linkforge/micp/build.hpp"
#include "linkforge/micp/mps.hpp"
#include "linkforge/refine.hpp"
#include "linkforge/sa.hpp"
#include "linkforge/topology.hpp"

using namespace linkforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitLimit = 2;
constexpr int kExitInfeasible = 3;

io::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return io::json::parse(in);  // parse_error carries byte position diagnostics
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

ProblemSpec load_problem(const std::string& path) {
  ProblemSpec spec = io::parse_problem(load_json(path));
  const std::vector<std::string> bad = validate_spec(spec);
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "invalid problem file " << path << ":";
    for (const std::string& b : bad) msg << "\n  - " << b;
    throw io::SchemaError(msg.str());
  }
  return spec;
}

std::uint64_t effective_seed(std::uint64_t file_seed) {
  if (const char* env = std::getenv("LINKFORGE_SEED"))
    return std::strtoull(env, nullptr, 10);
  return file_seed;
}

int log_level = 1;  // 0 quiet, 1 info, 2 debug

void info(const std::string& line) {
  if (log_level >= 1) std::cerr << line << "\n";
}

void add_log_level_flag(CLI::App* cmd) {
  cmd->add_option_function<std::string>(
         "--log-level",
         [](const std::string& v) {
           log_level = v == "quiet" ? 0 : v == "debug" ? 2 : 1;
         },
         "quiet | info | debug")
      ->check(CLI::IsMember({"quiet", "info", "debug"}));
}

void maybe_write_svg(const std::string& path, const io::DesignDoc& doc,
                     const std::vector<Vec2>& target) {
  if (path.empty()) return;
  write_text(path, io::render_svg(doc.design, doc.trajectory, target));
  info("wrote " + path);
}

// ---------------------------------------------------------------------------

int cmd_synth(const std::string& problem_path, const std::string& output,
              const std::string& svg_path, const std::string& log_path,
              bool no_refine, int workers) {
  ProblemSpec spec = load_problem(problem_path);
  spec.seed = effective_seed(spec.seed);

  const Normalization norm = fit_normalization(spec.target, spec.workspace);
  if (!norm.identity()) {
    info("normalizing target into the solver box");
    for (Vec2& p : spec.target) p = norm.apply(p);
  }

  info("building model");
  auto [model, layout] = micp::build_model(spec);
  bb::BbParams params;
  params.mip_gap = spec.mip_gap;
  params.time_limit_s = spec.time_limit_s;
  params.seed = spec.seed;
  params.workers = workers;
  if (log_level >= 2) params.debug = &std::cerr;

  info("solving");
  const bb::BbResult res = bb::solve_micp(model, params);
  if (!log_path.empty()) {
    std::ofstream log(log_path);
    bb::write_convergence_csv(log, res.log);
    info("wrote " + log_path);
  }

  if (res.status == bb::BbStatus::Infeasible) {
    std::cerr << "infeasible: no mechanism satisfies the constraints\n";
    return kExitInfeasible;
  }
  if (!res.incumbent) {
    std::cerr << "limit reached before any feasible design was found\n";
    return kExitLimit;
  }

  io::DesignDoc doc;
  auto [design, traj] = bb::extract_design(res.incumbent->x, layout, spec);
  doc.design = design;
  doc.trajectory = traj;
  doc.objective = res.incumbent->objective;
  doc.lower_bound = res.lower_bound;
  doc.gap = res.gap;
  doc.nodes_explored = res.nodes_explored;
  doc.normalization = norm;
  info("incumbent found after " +
       std::to_string(res.incumbent->found_at_seconds) + "s");
  doc.status = res.status == bb::BbStatus::Optimal ? "optimal" : "limit";

  if (!no_refine) {
    info("refining");
    const refine::RefineResult rr = refine::refine(design, traj, spec);
    doc.design = rr.design;
    doc.trajectory = rr.trajectory;
    doc.objective = rr.report.objective_after;
    doc.refined = rr.report.converged;
    if (!rr.report.converged)
      std::cerr << "warning: refinement did not converge (residual "
                << rr.report.eq_residual_after << ")\n";
    const VerifyReport v = verify_design(doc.design, spec);
    info(std::string("verify: ") + (v.pass ? "pass" : "FAIL"));
  }

  if (!output.empty()) {
    write_text(output, io::design_to_json(doc).dump(2) + "\n");
    info("wrote " + output);
  }
  maybe_write_svg(svg_path, doc, spec.target);
  info("objective " + std::to_string(doc.objective) + ", bound " +
       std::to_string(doc.lower_bound) + ", nodes " +
       std::to_string(doc.nodes_explored));
  return res.status == bb::BbStatus::Optimal ? kExitOk : kExitLimit;
}

int cmd_simulate(const std::string& design_path, int steps,
                 const std::string& output, const std::string& svg_path) {
  io::DesignDoc doc = io::parse_design(load_json(design_path));
  doc.trajectory = simulate_cycle(doc.design, steps);
  if (!output.empty()) {
    std::ostringstream csv;
    csv << "step,node,x,y\n";
    const Topology& t = doc.design.topology;
    for (int d = 1; d <= steps; ++d)
      for (int i = 1; i <= t.node_count; ++i)
        if (t.used[i])
          csv << d << ',' << i << ',' << doc.trajectory.at(d, i).x << ','
              << doc.trajectory.at(d, i).y << '\n';
    write_text(output, csv.str());
    info("wrote " + output);
  }
  maybe_write_svg(svg_path, doc, {});
  return kExitOk;
}

int cmd_verify(const std::string& design_path, const std::string& problem_path) {
  const io::DesignDoc doc = io::parse_design(load_json(design_path));
  ProblemSpec spec;
  if (!problem_path.empty()) {
    spec = load_problem(problem_path);
  } else if (doc.trajectory.timesteps > 0) {
    spec.timesteps = doc.trajectory.timesteps;
  }

  const VerifyReport r = verify_design(doc.design, spec);
  std::cout << "simulated: " << (r.simulated ? "yes" : "no") << "\n";
  if (!r.failure.empty()) std::cout << "failure: " << r.failure << "\n";
  std::cout << "max_equidist_residual: " << r.max_equidist_residual << "\n"
            << "min_angle: " << r.min_angle << "\n"
            << "min_rod_length: " << r.min_rod_length << "\n"
            << "max_containment_violation: " << r.max_containment_violation << "\n"
            << "max_workspace_violation: " << r.max_workspace_violation << "\n";

  bool pass = r.pass;
  if (!doc.refined && doc.trajectory.timesteps > 0) {
    // Unrefined solver output: score the stored trajectory and allow the
    // piecewise-linear grid slack instead of exact rod constancy.
    const VerifyReport tr = verify_trajectory(doc.design, doc.trajectory, spec);
    const double chord = spec.workspace * spec.workspace /
                         ((spec.resolution - 1.0) * (spec.resolution - 1.0));
    pass = tr.min_angle >= spec.min_angle - 1e-9 &&
           tr.max_equidist_residual <= chord &&
           tr.max_workspace_violation <= 1e-9;
    std::cout << "unrefined trajectory residual: " << tr.max_equidist_residual
              << " (allowed " << chord << ")\n";
  }
  std::cout << "pass: " << (pass ? "yes" : "no") << "\n";
  return pass ? kExitOk : kExitLimit;
}

int cmd_refine(const std::string& design_path, const std::string& problem_path,
               const std::string& output, const std::string& svg_path) {
  io::DesignDoc doc = io::parse_design(load_json(design_path));
  const ProblemSpec spec = load_problem(problem_path);
  Trajectory traj = doc.trajectory.timesteps == spec.timesteps
                        ? doc.trajectory
                        : simulate_cycle(doc.design, spec.timesteps);

  const refine::RefineResult rr = refine::refine(doc.design, traj, spec);
  info("objective " + std::to_string(rr.report.objective_before) + " -> " +
       std::to_string(rr.report.objective_after) + ", residual " +
       std::to_string(rr.report.eq_residual_after));
  doc.design = rr.design;
  doc.trajectory = rr.trajectory;
  doc.objective = rr.report.objective_after;
  doc.refined = rr.report.converged;
  if (!output.empty()) {
    write_text(output, io::design_to_json(doc).dump(2) + "\n");
    info("wrote " + output);
  }
  maybe_write_svg(svg_path, doc, spec.target);
  return rr.report.converged ? kExitOk : kExitLimit;
}

int cmd_sa(const std::string& problem_path, const std::string& output,
           const std::string& trace_path, const std::string& svg_path,
           long iterations) {
  const ProblemSpec spec = load_problem(problem_path);
  sa::SaConfig cfg;
  cfg.iterations = iterations;
  cfg.seed = effective_seed(spec.seed);
  const sa::SaResult res = sa::sa_search(spec, cfg);
  info("best objective " + std::to_string(res.best_objective));

  if (!trace_path.empty()) {
    std::ofstream out(trace_path);
    sa::write_trace_csv(out, res.trace);
    info("wrote " + trace_path);
  }
  io::DesignDoc doc;
  doc.design = res.best;
  doc.trajectory = simulate_cycle(res.best, spec.timesteps);
  doc.objective = res.best_objective;
  doc.status = "heuristic";
  doc.refined = false;
  if (!output.empty()) {
    write_text(output, io::design_to_json(doc).dump(2) + "\n");
    info("wrote " + output);
  }
  maybe_write_svg(svg_path, doc, spec.target);
  return kExitOk;
}

int cmd_export(const std::string& problem_path, const std::string& output,
               bool log_sos) {
  const ProblemSpec spec = load_problem(problem_path);
  auto [model, layout] = micp::build_model(spec);
  (void)layout;
  const std::string text = micp::export_model(model, log_sos);
  if (output.empty())
    std::cout << text;
  else {
    write_text(output, text);
    info("wrote " + output);
  }
  return kExitOk;
}

int cmd_enumerate(int k, bool list) {
  const std::vector<Topology> topos = enumerate_topologies(k);
  std::cout << topos.size() << "\n";
  if (list)
    for (const Topology& t : topos) {
      std::ostringstream line;
      for (int i = 1; i <= k; ++i) {
        if (!t.used[i]) { line << "n" << i << ":-- "; continue; }
        line << "n" << i << (t.fixed[i] ? ":F" : ":M");
        if (t.has_parents(i))
          line << "(" << t.parents[i].first << "," << t.parents[i].second << ")";
        line << " ";
      }
      std::cout << line.str() << "\n";
    }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"planar linkage synthesis toolkit"};
  app.require_subcommand(1);

  std::string problem_path, design_path, output, svg_path, trace_path, log_path;
  bool no_refine = false, list_flag = false, log_sos = false;
  int steps = 64, workers = 1, k = 3;
  long iterations = 1'000'000;

  CLI::App* synth = app.add_subcommand("synth", "run the full synthesis pipeline");
  synth->add_option("problem", problem_path, "problem JSON file")->required();
  synth->add_option("--output", output, "design JSON output path");
  synth->add_option("--svg", svg_path, "SVG render output path");
  synth->add_option("--log", log_path, "convergence log CSV path");
  synth->add_flag("--no-refine", no_refine, "skip the local refinement stage");
  synth->add_option("--workers", workers, "parallel node evaluation width");
  add_log_level_flag(synth);

  CLI::App* simulate = app.add_subcommand("simulate", "sweep one motor cycle");
  simulate->add_option("design", design_path, "design JSON file")->required();
  simulate->add_option("--steps", steps, "number of samples over the cycle");
  simulate->add_option("--output", output, "trajectory CSV output path");
  simulate->add_option("--svg", svg_path, "SVG render output path");
  add_log_level_flag(simulate);

  CLI::App* verify = app.add_subcommand("verify", "check a design against thresholds");
  verify->add_option("design", design_path, "design JSON file")->required();
  verify->add_option("--problem", problem_path, "problem JSON with thresholds");
  add_log_level_flag(verify);

  CLI::App* refine_cmd = app.add_subcommand("refine", "polish a design to exact feasibility");
  refine_cmd->add_option("design", design_path, "design JSON file")->required();
  refine_cmd->add_option("--problem", problem_path, "problem JSON file")->required();
  refine_cmd->add_option("--output", output, "design JSON output path");
  refine_cmd->add_option("--svg", svg_path, "SVG render output path");
  add_log_level_flag(refine_cmd);

  CLI::App* sa_cmd = app.add_subcommand("sa", "annealing baseline search");
  sa_cmd->add_option("problem", problem_path, "problem JSON file")->required();
  sa_cmd->add_option("--output", output, "design JSON output path");
  sa_cmd->add_option("--trace", trace_path, "best-so-far trace CSV path");
  sa_cmd->add_option("--svg", svg_path, "SVG render output path");
  sa_cmd->add_option("--iterations", iterations, "chain length");
  add_log_level_flag(sa_cmd);

  CLI::App* exp = app.add_subcommand("export", "write the model in MPS-style text");
  exp->add_option("problem", problem_path, "problem JSON file")->required();
  exp->add_option("--output", output, "output path (default stdout)");
  exp->add_flag("--log-sos", log_sos, "encode SOS sets with binaries");
  add_log_level_flag(exp);

  CLI::App* enumerate = app.add_subcommand("enumerate", "count valid topologies");
  enumerate->add_option("--k", k, "node budget (3..6)")->required();
  enumerate->add_flag("--list", list_flag, "print each topology");
  add_log_level_flag(enumerate);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed())
      return cmd_synth(problem_path, output, svg_path, log_path, no_refine, workers);
    if (simulate->parsed())
      return cmd_simulate(design_path, steps, output, svg_path);
    if (verify->parsed()) return cmd_verify(design_path, problem_path);
    if (refine_cmd->parsed())
      return cmd_refine(design_path, problem_path, output, svg_path);
    if (sa_cmd->parsed())
      return cmd_sa(problem_path, output, trace_path, svg_path, iterations);
    if (exp->parsed()) return cmd_export(problem_path, output, log_sos);
    if (enumerate->parsed()) return cmd_enumerate(k, list_flag);
  } catch (const io::json::parse_error& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const io::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
