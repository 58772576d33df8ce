#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>

#include "slowfast/errors.hpp"
#include "slowfast/experiments.hpp"

using namespace slowfast;
namespace fs = std::filesystem;

namespace {

std::string config_path(const std::string& rel) { return std::string(SLOWFAST_CONFIG_DIR) + "/" + rel; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("experiments") {
  TEST_CASE("every shipped experiment config parses and names a known kind") {
    const auto kinds = experiment_kinds();
    int seen = 0;
    for (const auto& entry : fs::directory_iterator(config_path("experiments"))) {
      if (entry.path().extension() != ".json") continue;
      const ExperimentConfig cfg = load_experiment_config(entry.path().string());
      CHECK(std::find(kinds.begin(), kinds.end(), cfg.kind) != kinds.end());
      CHECK(cfg.system.is_object());
      CHECK(cfg.n_runs > 0);
      ++seen;
    }
    CHECK(seen >= 10);
  }

  TEST_CASE("relative system paths and tolerance overrides") {
    const Json j = Json::parse(R"({"kind": "identities", "system": "systems/canonical-asymmetric.json",
                                   "seed": 5, "eps": [1e-3, 1e-4], "tolerances": {"nsigma": 4}})");
    const ExperimentConfig cfg = experiment_config_from_json(j, SLOWFAST_CONFIG_DIR);
    CHECK(cfg.seed == 5);
    CHECK(cfg.eps.size() == 2);
    CHECK(cfg.tol.nsigma == doctest::Approx(4.0));
    CHECK(cfg.tol.averaging_sup == doctest::Approx(Tolerances{}.averaging_sup));
    CHECK(cfg.system.value("preset", "") == "canonical-sphere");
    const Tolerances back = tolerances_from_json(to_json(cfg.tol));
    CHECK(back.nsigma == doctest::Approx(4.0));
    CHECK_THROWS_AS(experiment_config_from_json(Json::parse(R"({"kind": "nope", "system": {}})")), Error);
    CHECK_THROWS_AS(tolerances_from_json(Json::parse(R"({"nsigmaa": 3})")), Error);
  }

  TEST_CASE("identity suite passes and writes its outputs") {
    ExperimentConfig cfg = load_experiment_config(config_path("experiments/identities.json"));
    cfg.params["points"] = 200;
    cfg.params["trajectories"] = 20;
    cfg.params["steps"] = 200;
    const fs::path dir = fs::temp_directory_path() / "slowfast-unit-identities";
    fs::remove_all(dir);
    cfg.out_dir = dir.string();
    const StatReport r = run_experiment(cfg);
    CHECK(r.pass());
    REQUIRE(r.find("velocity_identity") != nullptr);
    CHECK(r.find("velocity_identity")->pass);
    for (const char* f : {"report.json", "report.txt", "cells.csv", "runs.jsonl"}) CHECK(fs::exists(dir / f));
    const Json report = Json::parse(slurp(dir / "report.json"));
    CHECK(report.at("cells").size() == r.cells.size());
    CHECK(report.at("pass").get<bool>());
    const std::string csv = slurp(dir / "cells.csv");
    CHECK(csv.find("velocity_identity") != std::string::npos);
    fs::remove_all(dir);
  }

  TEST_CASE("ungated cells do not affect the verdict") {
    StatReport r;
    StatCell info;
    info.name = "diagnostic";
    info.gated = false;
    info.pass = false;
    r.add(info);
    CHECK(r.pass());
    StatCell gate;
    gate.name = "gate";
    gate.pass = false;
    r.add(gate);
    CHECK_FALSE(r.pass());
    CHECK(r.text().find("FAIL") != std::string::npos);
  }

  TEST_CASE("well entry monitor classifies the first well") {
    const SurfaceSystem sys = canonical_sphere_system(0.1);
    const ReebGraph g = build_reeb_graph(sys);
    const double gs = g.vertex(g.saddles().front()).g;
    const StepMonitor m = well_entry_monitor(sys, g, gs);
    const Vec3 deep = edge_seed(sys, g, 1, gs - 0.05);
    const MonitorAction a = m(0.1, deep, sys.G(deep));
    CHECK(a.stop);
    REQUIRE(a.event);
    CHECK(a.event->kind == EventKind::EnteredWell);
    CHECK(a.event->edge == 1);
    const Vec3 above = edge_seed(sys, g, 2, gs + 0.2);
    CHECK_FALSE(m(0.1, above, sys.G(above)).stop);
  }
}
