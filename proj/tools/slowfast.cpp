#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "slowfast/averaging.hpp"
#include "slowfast/config.hpp"
#include "slowfast/errors.hpp"
#include "slowfast/experiments.hpp"
#include "slowfast/flow.hpp"
#include "slowfast/graphproc.hpp"
#include "slowfast/io.hpp"
#include "slowfast/levelsets.hpp"
#include "slowfast/parallel.hpp"
#include "slowfast/stats.hpp"
#include "slowfast/torus.hpp"

namespace fs = std::filesystem;
using namespace slowfast;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  std::string out = "out";
  int runs = 0;
  std::vector<double> eps, delta;
  unsigned threads = 0;
  std::string cache;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;
};

void add_common(CLI::App* app, Common& c, bool config_required = true) {
  auto* opt = app->add_option("--config", c.config, "configuration file");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  c.seed_opt = app->add_option("--seed", c.seed, "master seed");
  c.out_opt = app->add_option("--out", c.out, "output directory");
  app->add_option("--runs", c.runs, "number of runs (overrides config)");
  app->add_option("--eps", c.eps, "comma-separated epsilon list")->delimiter(',');
  app->add_option("--delta", c.delta, "comma-separated delta list")->delimiter(',');
  app->add_option("--threads", c.threads, "worker threads (0: all cores)");
  app->add_option("--cache", c.cache, "coefficient cache directory");
}

Json system_json(const std::string& path) {
  Json j = read_json_file(path);
  return j.contains("system") && j["system"].is_object() ? j["system"] : j;
}

// ----- simulate

struct SimulateArgs {
  std::string mode = "slow";
  double t_end = 1.0;
  double h = 0.02;
  std::size_t every = 10;
  std::vector<double> x;
};

int cmd_simulate(const Common& c, const SimulateArgs& a) {
  SurfaceSystem sys = system_from_json(system_json(c.config));
  if (!c.eps.empty()) sys.epsilon = c.eps.front();
  if (!c.delta.empty()) sys.delta = c.delta.front();
  Vec3 x = sys.x0;
  if (!a.x.empty()) {
    if (a.x.size() != 3) throw Error(ErrorKind::Config, "--x needs three components");
    x = project_to_level(sys.F, sys.z, Vec3(a.x[0], a.x[1], a.x[2]));
  }
  IntegratorConfig ic;
  ic.h = a.h;
  ic.seed = c.seed;
  ic.record_every = a.every;
  Trajectory tr;
  if (a.mode == "unperturbed") {
    tr = integrate_unperturbed(sys, x, a.t_end, ic);
  } else {
    const ReebGraph graph = build_reeb_graph(sys);
    const auto saddles = graph.saddles();
    const double gs = saddles.empty() ? -1e300 : graph.vertex(saddles.front()).g;
    const StepMonitor mon = well_entry_monitor(sys, graph, gs);
    tr = a.mode == "sde" ? integrate_sde(sys, x, a.t_end, ic, mon) : integrate_slow(sys, x, a.t_end, ic, mon);
  }
  fs::create_directories(c.out);
  JsonlWriter out(fs::path(c.out) / "trajectory.jsonl");
  std::size_t ev = 0;
  for (const auto& s : tr.samples) {
    Json r = {{"t", s.t}, {"x", to_json(s.x)}, {"g", s.g}, {"events", Json::array()}};
    while (ev < tr.events.size() && tr.events[ev].t <= s.t) r["events"].push_back(tr.events[ev++].label());
    out.write(r);
  }
  std::printf("%zu steps, %zu samples, final t=%.6g g=%.6g", tr.steps, tr.samples.size(), tr.final_time,
              sys.G.value(tr.final_state));
  for (const auto& e : tr.events) std::printf(" [%s at %.6g]", e.label().c_str(), e.t);
  std::printf("\n");
  return 0;
}

// ----- coeffs

int cmd_coeffs(const Common& c) {
  const SurfaceSystem sys = system_from_json(system_json(c.config));
  const ReebGraph graph = build_reeb_graph(sys);
  TableOptions to;
  to.cache_dir = c.cache;
  to.threads = c.threads;
  const CoefficientTable table = tabulate(sys, graph, to);
  fs::create_directories(c.out);
  CsvWriter edges(fs::path(c.out) / "edge_coefficients.csv",
                  {"edge", "g", "T", "A", "A1", "A2", "B", "drift", "noise_drift", "diffusion"});
  for (const auto& [k, et] : table.edges)
    for (const auto& r : et.rows)
      edges.row({static_cast<long long>(k), r.g, r.T, r.A, r.A1, r.A2, r.B, et.drift_at(r.g), et.noise_drift_at(r.g),
                 et.diffusion_at(r.g)});
  CsvWriter vertices(fs::path(c.out) / "graph.csv", {"kind", "id", "type", "g", "lower", "upper"});
  for (const auto& v : graph.vertices)
    vertices.row({std::string("vertex"), static_cast<long long>(v.id), std::string(to_string(v.type)), v.g, 0LL, 0LL});
  for (const auto& e : graph.edges)
    vertices.row({std::string("edge"), static_cast<long long>(e.id), std::string("edge"), e.g_hi,
                  static_cast<long long>(e.lower), static_cast<long long>(e.upper)});
  if (!graph.saddles().empty()) {
    const SaddleData sd = branching_probabilities(sys, graph);
    CsvWriter s(fs::path(c.out) / "saddle.csv",
                {"edge", "role", "beta", "q", "drift_limit", "flux_line", "flux_surface", "p", "p_surface"});
    auto get = [](const std::map<int, double>& m, int k) { return m.count(k) ? m.at(k) : 0.0; };
    for (const auto& [k, b] : sd.beta)
      s.row({static_cast<long long>(k), std::string(k == sd.upper_edge ? "upper" : "lower"), b, get(sd.q, k),
             get(sd.drift_limit, k), get(sd.flux_line, k), get(sd.flux_surface, k), get(sd.p, k),
             get(sd.p_surface, k)});
    std::printf("saddle g=%.6g additivity=%.3g route discrepancy=%.3g symmetric=%d\n", sd.g_saddle,
                sd.additivity_error, sd.route_discrepancy, sd.symmetric);
    for (const auto& [k, b] : sd.beta)
      std::printf("  edge %d beta=%.6f q=%.6f p=%.6f\n", k, b, get(sd.q, k), get(sd.p, k));
  }
  std::printf("wrote %s\n", c.out.c_str());
  return 0;
}

// ----- graphsim

struct GraphsimArgs {
  double vertex_h = 1e-2;
  double t_end = 10.0;
  int start_edge = 0;
  double start_g = 0.0;
  bool has_start_g = false;
  bool reflect = false;
  std::size_t every = 100;
};

int cmd_graphsim(const Common& c, GraphsimArgs a) {
  const SurfaceSystem sys = system_from_json(system_json(c.config));
  const ReebGraph graph = build_reeb_graph(sys);
  const SaddleData sd = branching_probabilities(sys, graph);
  TableOptions to;
  to.cache_dir = c.cache;
  to.threads = c.threads;
  const CoefficientTable table = tabulate(sys, graph, to);
  const double delta = c.delta.empty() ? (sys.delta > 0 ? sys.delta : 0.2) : c.delta.front();
  const int runs = c.runs > 0 ? c.runs : 100;
  GraphCoordinate start = classify_point(sys, graph, sys.x0);
  if (a.start_edge != 0) start.edge = a.start_edge;
  if (a.has_start_g) start.g = a.start_g;
  GraphDiffusionConfig gc;
  gc.vertex_h = a.vertex_h;
  gc.record_every = a.every;
  gc.boundary = a.reflect ? BoundaryPolicy::Reflect : BoundaryPolicy::Absorb;
  std::vector<GraphPath> paths(static_cast<std::size_t>(runs));
  parallel_for(
      paths.size(),
      [&](std::size_t i) {
        Rng rng(c.seed, i);
        paths[i] = simulate_graph_diffusion(table, graph, sd, delta, start, a.t_end, gc, rng);
      },
      c.threads);
  fs::create_directories(c.out);
  CsvWriter samples(fs::path(c.out) / "paths.csv", {"run", "t", "edge", "g"});
  CsvWriter finals(fs::path(c.out) / "final.csv", {"run", "t", "edge", "g", "absorbed", "branches"});
  std::map<int, int> counts;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (const auto& s : paths[i].samples)
      samples.row({static_cast<long long>(i), s.t, static_cast<long long>(s.edge), s.g});
    const auto& f = paths[i].final();
    finals.row({static_cast<long long>(i), f.t, static_cast<long long>(f.edge), f.g,
                static_cast<long long>(paths[i].absorbed), static_cast<long long>(paths[i].branches.size())});
    ++counts[paths[i].absorbed ? -1 : f.edge];
  }
  std::printf("delta=%.4g runs=%d t_end=%.4g\n", delta, runs, a.t_end);
  for (const auto& [k, n] : counts) {
    const Proportion p = proportion(n, runs);
    std::printf("  %s %d: %.4f +- %.4f\n", k < 0 ? "absorbed" : "edge", k, p.phat, p.se);
  }
  return 0;
}

// ----- metastable

int cmd_metastable(const Common& c) {
  const SurfaceSystem sys = system_from_json(system_json(c.config));
  const ReebGraph graph = build_reeb_graph(sys);
  const SaddleData sd = branching_probabilities(sys, graph);
  const MetastableReport m = metastable_thresholds(sys, graph, sd);
  Json j;
  for (const auto& [k, l] : m.lambda)
    j["lambda"][std::to_string(k)] = {{"value", l}, {"refined", m.lambda_refined.at(k)},
                                      {"relative_change", m.relative_change.at(k)}};
  j["shallow_edge"] = m.shallow_edge;
  j["deep_edge"] = m.deep_edge;
  j["upper_edge"] = m.upper_edge;
  j["tie"] = m.tie;
  for (const auto& [k, p] : m.p) j["p"][std::to_string(k)] = p;
  j["printed_cases"] = m.printed_cases;
  const double ls = m.lambda.at(m.shallow_edge), ld = m.lambda.at(m.deep_edge);
  Json table = Json::array();
  std::ostringstream text;
  text << "thresholds: shallow edge " << m.shallow_edge << " lambda=" << ls << ", deep edge " << m.deep_edge
       << " lambda=" << ld << (m.tie ? " (tie)" : "") << "\n";
  for (int start : {m.shallow_edge, m.deep_edge, m.upper_edge})
    for (double lam : {0.5 * ls, 0.5 * (ls + ld), 1.5 * ld}) {
      const MetastableOutcome o = m.decide(start, lam);
      Json row = {{"start_edge", start}, {"lambda", lam}, {"rule", o.rule}};
      for (const auto& [k, v] : o.distribution) row["distribution"][std::to_string(k)] = v;
      table.push_back(row);
      text << "  start " << start << " lambda=" << lam << ": " << o.rule << "\n";
    }
  j["decisions"] = table;
  for (const auto& s : m.printed_cases) text << "  printed: " << s << "\n";
  fs::create_directories(c.out);
  write_text(fs::path(c.out) / "metastable.json", j.dump(2) + "\n");
  write_text(fs::path(c.out) / "metastable.txt", text.str());
  std::cout << text.str();
  return 0;
}

// ----- torus

struct TorusArgs {
  double t_end = 0.0;
  double h = 0.02;
  double entry_depth = 0.25;
};

int cmd_torus(const std::string& action, const Common& c, const TorusArgs& a) {
  TorusSystem t = torus_from_json(c.config.empty() ? Json::object() : system_json(c.config));
  if (!c.eps.empty()) t.epsilon = c.eps.front();
  if (!c.delta.empty()) t.delta = c.delta.front();
  const auto wells = prepare_wells(t);
  fs::create_directories(c.out);
  if (action == "invariant-check") {
    const InvariantCheck ic = invariant_measure_check(t, wells, a.t_end > 0 ? a.t_end : 2e4);
    CsvWriter csv(fs::path(c.out) / "invariant_bins.csv", {"bin", "observed", "expected"});
    for (std::size_t i = 0; i < ic.observed.size(); ++i)
      csv.row({static_cast<long long>(i), ic.observed[i], ic.expected[i]});
    std::printf("chi2=%.4g dof=%d p=%.4g samples=%zu max|F-z|=%.3g\n", ic.chi2, ic.dof, ic.p_value, ic.samples,
                ic.max_F_error);
    return 0;
  }
  const RootedGraph g = torus_rates(t, wells);
  if (action == "rates") {
    CsvWriter csv(fs::path(c.out) / "rates.csv",
                  {"edge", "name", "maximum", "h_extremum", "psi_bar", "s", "r", "beta", "well_measure"});
    for (const auto& e : g.edges)
      csv.row({static_cast<long long>(e.k), e.name, static_cast<long long>(e.maximum), e.h_extremum, e.psi_bar,
               static_cast<long long>(e.s), e.r, e.beta, e.well_measure});
    std::printf("lambda(M)=%.8g lambda(E)=%.8g refinement=%.3g holding rate=%.6g\n", g.lambda_M, g.lambda_E,
                g.relative_change, g.holding_rate());
    for (const auto& e : g.edges)
      std::printf("  %s: psi_bar=%.6g s=%d r=%.6g beta=%.6g\n", e.name.c_str(), e.psi_bar, e.s, e.r, e.beta);
    return 0;
  }
  const int runs = c.runs > 0 ? c.runs : 100;
  if (action == "limit-sim") {
    CsvWriter csv(fs::path(c.out) / "limit.csv", {"run", "holding_time", "edge"});
    std::vector<double> hold;
    for (int i = 0; i < runs; ++i) {
      Rng rng(c.seed, static_cast<std::uint64_t>(i));
      const GraphPath p = simulate_torus_limit(g, {0, 0.0}, a.t_end > 0 ? a.t_end : 1e6, rng, 1e-3, a.entry_depth);
      const double th = p.branches.empty() ? -1.0 : p.branches.front().t;
      csv.row({static_cast<long long>(i), th, static_cast<long long>(p.branches.empty() ? 0 : p.branches.front().to_edge)});
      if (th >= 0) hold.push_back(th);
    }
    const KsResult ks = ks_exponential(hold, g.holding_rate());
    std::printf("runs=%d mean holding=%.5g (1/rate=%.5g) KS D=%.4g p=%.4g\n", runs, mean_ci(hold).mean,
                1.0 / g.holding_rate(), ks.d, ks.p_value);
    return 0;
  }
  if (action == "sde-sim") {
    std::vector<TorusSdeResult> res(static_cast<std::size_t>(runs));
    parallel_for(
        res.size(),
        [&](std::size_t i) {
          TorusSdeOptions so;
          so.integrator.h = a.h;
          so.integrator.seed = c.seed;
          so.integrator.stream = i;
          so.integrator.record_every = 0;
          so.entry_depth = a.entry_depth;
          res[i] = simulate_torus_sde(t, wells, t.x0, a.t_end > 0 ? a.t_end : 50.0, so);
        },
        c.threads);
    CsvWriter csv(fs::path(c.out) / "sde.csv", {"run", "well", "entry_time", "steps"});
    std::map<int, int> counts;
    std::vector<double> times;
    for (std::size_t i = 0; i < res.size(); ++i) {
      csv.row({static_cast<long long>(i), static_cast<long long>(res[i].well), res[i].entry_time,
               static_cast<long long>(res[i].trajectory.steps)});
      ++counts[res[i].well];
      if (res[i].well != 0) times.push_back(res[i].entry_time);
    }
    std::printf("runs=%d mean entry time=%.5g\n", runs, mean_ci(times).mean);
    for (const auto& [k, n] : counts) std::printf("  well %d: %d\n", k, n);
    return 0;
  }
  throw Error(ErrorKind::Config, "unknown torus action '" + action + "'");
}

// ----- experiment

int cmd_experiment(const std::string& kind, const Common& c) {
  ExperimentConfig cfg = load_experiment_config(c.config);
  if (!kind.empty()) {
    if (!cfg.kind.empty() && cfg.kind != kind)
      throw Error(ErrorKind::Config, "config is for '" + cfg.kind + "', not '" + kind + "'");
    cfg.kind = kind;
  }
  if (c.seed_opt->count() > 0) cfg.seed = c.seed;
  if (c.runs > 0) cfg.n_runs = c.runs;
  if (!c.eps.empty()) cfg.eps = c.eps;
  if (!c.delta.empty()) cfg.delta = c.delta;
  if (c.threads > 0) cfg.threads = c.threads;
  if (!c.cache.empty()) cfg.cache_dir = c.cache;
  if (c.out_opt->count() > 0 || cfg.out_dir.empty()) cfg.out_dir = c.out_opt->count() > 0 ? c.out : "out/" + cfg.kind;
  const StatReport rep = run_experiment(cfg);
  std::cout << rep.text();
  return rep.pass() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slowfast: averaging, graph diffusions and metastability for fast-slow flows on level surfaces"};
  app.require_subcommand(1);

  Common sim_c, coeffs_c, graph_c, meta_c, torus_c, exp_c;
  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "integrate one trajectory, stream samples as JSON lines");
  add_common(simulate, sim_c);
  simulate->add_option("--mode", sim.mode, "unperturbed | slow | sde")
      ->check(CLI::IsMember({"unperturbed", "slow", "sde"}));
  simulate->add_option("--t-end", sim.t_end, "end time (fast time for unperturbed, slow otherwise)");
  simulate->add_option("--step", sim.h, "fast-time step");
  simulate->add_option("--every", sim.every, "keep every n-th sample");
  simulate->add_option("--x", sim.x, "start point x1,x2,x3 (projected to the surface)")->delimiter(',');

  auto* coeffs = app.add_subcommand("coeffs", "tabulate edge coefficients and saddle data as CSV");
  add_common(coeffs, coeffs_c);

  GraphsimArgs gs;
  auto* graphsim = app.add_subcommand("graphsim", "simulate the diffusion on the graph");
  add_common(graphsim, graph_c);
  graphsim->add_option("--vertex-h", gs.vertex_h, "vertex neighbourhood size");
  graphsim->add_option("--t-end", gs.t_end, "horizon");
  graphsim->add_option("--start-edge", gs.start_edge, "start edge (default: edge of x0)");
  auto* sg = graphsim->add_option("--start-g", gs.start_g, "start level (default: G(x0))");
  graphsim->add_flag("--reflect", gs.reflect, "reflect at the boundary vertex instead of absorbing");
  graphsim->add_option("--every", gs.every, "record every n-th step");

  auto* metastable = app.add_subcommand("metastable", "thresholds and decision table");
  add_common(metastable, meta_c);

  TorusArgs ta;
  std::string torus_action;
  auto* torus = app.add_subcommand("torus", "torus level surface with an ergodic class");
  add_common(torus, torus_c, false);
  torus->add_option("action", torus_action, "invariant-check | rates | limit-sim | sde-sim")
      ->required()
      ->check(CLI::IsMember({"invariant-check", "rates", "limit-sim", "sde-sim"}));
  torus->add_option("--t-end", ta.t_end, "horizon");
  torus->add_option("--step", ta.h, "fast-time step for sde-sim");
  torus->add_option("--entry-depth", ta.entry_depth, "well depth fraction that counts as entry");

  std::string kind;
  auto* experiment = app.add_subcommand("experiment", "run a Monte Carlo experiment and write a report");
  add_common(experiment, exp_c);
  std::vector<std::string> kinds = experiment_kinds();
  experiment->add_option("kind", kind, "experiment kind")->check(CLI::IsMember(kinds));

  CLI11_PARSE(app, argc, argv);
  gs.has_start_g = sg->count() > 0;

  try {
    if (*simulate) return cmd_simulate(sim_c, sim);
    if (*coeffs) return cmd_coeffs(coeffs_c);
    if (*graphsim) return cmd_graphsim(graph_c, gs);
    if (*metastable) return cmd_metastable(meta_c);
    if (*torus) return cmd_torus(torus_action, torus_c, ta);
    if (*experiment) return cmd_experiment(kind, exp_c);
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", to_string(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
