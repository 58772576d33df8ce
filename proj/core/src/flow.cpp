#include "slowfast/flow.hpp"

#include <cmath>

#include "slowfast/errors.hpp"

namespace slowfast {

std::string TrajectoryEvent::label() const {
  switch (kind) {
    case EventKind::EnteredWell: return "entered-well-" + std::to_string(edge);
    case EventKind::HitBoundary: return "hit-boundary-P";
    case EventKind::Stopped: return "stopped";
  }
  return "stopped";
}

std::optional<TrajectoryEvent> Trajectory::first(EventKind kind) const {
  for (const auto& e : events)
    if (e.kind == kind) return e;
  return std::nullopt;
}

Dynamics unperturbed_dynamics(const SurfaceSystem& sys, bool reversed) {
  Dynamics d;
  d.F = sys.F;
  d.z = sys.z;
  const double sign = reversed ? -1.0 : 1.0;
  d.fast = [F = sys.F, G = sys.G, sign](const Vec3& x) { return (sign * F.gradient(x).cross(G.gradient(x))).eval(); };
  d.observable = [G = sys.G](const Vec3& x) { return G.value(x); };
  d.epsilon = 1.0;
  return d;
}

Dynamics slow_dynamics(const SurfaceSystem& sys) {
  Dynamics d = unperturbed_dynamics(sys);
  d.slow = [sys](const Vec3& x) { return perturbation_velocity(sys, x); };
  d.epsilon = sys.epsilon;
  return d;
}

Dynamics sde_dynamics(const SurfaceSystem& sys) {
  Dynamics d = slow_dynamics(sys);
  if (!sys.noise) throw Error(ErrorKind::Config, "SDE integration needs a noise map");
  d.noise = sys.noise;
  d.delta = sys.delta;
  return d;
}

namespace {

Vec3 drift(const Dynamics& d, const Vec3& x) {
  Vec3 v = d.fast(x) / d.epsilon;
  if (d.slow) v += d.slow(x);
  return v;
}

Vec3 project(const Dynamics& d, const Vec3& x, double tol, int max_iterations, double* defect) {
  if (defect) *defect = std::max(*defect, std::abs(d.F.value(x) - d.z));
  return project_to_level(d.F, d.z, x, tol, max_iterations);
}

}  // namespace

Vec3 step(const Dynamics& dyn, const Vec3& x, double dt, Method method, Rng* rng, double tolF,
          int max_iterations, double* defect) {
  Vec3 y;
  if (method == Method::Rk4Projected) {
    const Vec3 k1 = drift(dyn, x);
    const Vec3 k2 = drift(dyn, x + 0.5 * dt * k1);
    const Vec3 k3 = drift(dyn, x + 0.5 * dt * k2);
    const Vec3 k4 = drift(dyn, x + dt * k3);
    y = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  } else {
    const Vec3 f0 = drift(dyn, x);
    if (dyn.delta > 0.0 && dyn.noise && rng) {
      const double sq = std::sqrt(dt);
      const Vec3 dW(rng->normal() * sq, rng->normal() * sq, rng->normal() * sq);
      const Vec3 n0 = dyn.delta * (dyn.noise->sigma(x) * dW);
      const Vec3 xp = x + dt * f0 + n0;
      const Vec3 n1 = dyn.delta * (dyn.noise->sigma(xp) * dW);
      y = x + 0.5 * dt * (f0 + drift(dyn, xp)) + 0.5 * (n0 + n1);
    } else {
      const Vec3 xp = x + dt * f0;
      y = x + 0.5 * dt * (f0 + drift(dyn, xp));
    }
  }
  return project(dyn, y, tolF, max_iterations, defect);
}

Trajectory integrate(const Dynamics& dyn, const Vec3& x_start, double t_end, double dt,
                     const IntegratorConfig& cfg, const StepMonitor& monitor) {
  if (!(dt > 0.0) || !(cfg.tolF > 0.0)) throw Error(ErrorKind::Config, "step and tolF must be positive");
  if (cfg.min_period > 0.0 && cfg.h > cfg.min_period / 50.0)
    throw Error(ErrorKind::StepResolution, "h=" + std::to_string(cfg.h) + " exceeds 1/50 of the shortest period " +
                                                std::to_string(cfg.min_period));
  if (std::abs(dyn.F.value(x_start) - dyn.z) > std::max(cfg.tolF, 1e-9))
    throw Error(ErrorKind::Config, "start point is not on the level surface");

  Rng rng(cfg.seed, cfg.stream);
  Trajectory tr;
  Vec3 x = x_start;
  double t = 0.0;
  auto g_of = [&](const Vec3& y) { return dyn.observable ? dyn.observable(y) : 0.0; };
  tr.samples.push_back({t, x, g_of(x)});
  const auto n_steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  bool stopped = false;
  for (std::size_t i = 1; i <= n_steps; ++i) {
    const double h = std::min(dt, t_end - t);
    x = step(dyn, x, h, cfg.method, &rng, cfg.tolF, cfg.max_projection_iterations, &tr.max_unprojected_defect);
    t = (i == n_steps) ? t_end : static_cast<double>(i) * dt;
    ++tr.steps;
    double g = 0.0;
    bool have_g = false;
    if (monitor) {
      g = g_of(x);
      have_g = true;
      MonitorAction a = monitor(t, x, g);
      if (a.event) {
        a.event->t = t;
        tr.events.push_back(*a.event);
      }
      stopped = a.stop;
    }
    if (stopped || i == n_steps || (cfg.record_every > 0 && i % cfg.record_every == 0)) {
      if (!have_g) g = g_of(x);
      tr.samples.push_back({t, x, g});
    }
    if (stopped) break;
  }
  if (stopped) tr.events.push_back({t, EventKind::Stopped, 0});
  tr.final_state = x;
  tr.final_time = t;
  return tr;
}

Trajectory integrate_unperturbed(const SurfaceSystem& sys, const Vec3& x_start, double t_end,
                                 const IntegratorConfig& cfg, bool reversed) {
  return integrate(unperturbed_dynamics(sys, reversed), x_start, t_end, cfg.h, cfg);
}

Trajectory integrate_slow(const SurfaceSystem& sys, const Vec3& x_start, double t_end_slow,
                          const IntegratorConfig& cfg, const StepMonitor& monitor) {
  return integrate(slow_dynamics(sys), x_start, t_end_slow, cfg.h * sys.epsilon, cfg, monitor);
}

Trajectory integrate_sde(const SurfaceSystem& sys, const Vec3& x_start, double t_end_slow,
                         const IntegratorConfig& cfg, const StepMonitor& monitor) {
  IntegratorConfig c = cfg;
  c.method = Method::HeunStratonovich;
  return integrate(sde_dynamics(sys), x_start, t_end_slow, cfg.h * sys.epsilon, c, monitor);
}

double surface_distance(const SmoothField& F, double z, const Vec3& a, const Vec3& b, int segments) {
  double len = 0.0;
  Vec3 prev = a;
  for (int i = 1; i <= segments; ++i) {
    const double s = static_cast<double>(i) / segments;
    const Vec3 p = (i == segments) ? b : project_to_level(F, z, ((1.0 - s) * a + s * b).eval(), 1e-13);
    len += (p - prev).norm();
    prev = p;
  }
  return len;
}

namespace {

// intersection of the line c + u + s n with F = z, s near 0
std::optional<Vec3> lift_along_normal(const SmoothField& F, double z, const Vec3& base, const Vec3& n) {
  double s = 0.0;
  for (int it = 0; it < 50; ++it) {
    const Vec3 p = base + s * n;
    const double r = F.value(p) - z;
    if (std::abs(r) < 1e-13) return p;
    const double d = F.gradient(p).dot(n);
    if (std::abs(d) < 1e-14) return std::nullopt;
    s -= r / d;
  }
  const Vec3 p = base + s * n;
  if (std::abs(F.value(p) - z) < 1e-11) return p;
  return std::nullopt;
}

}  // namespace

Vec3 sample_uniform_neighborhood(const SurfaceSystem& sys, const Vec3& center, double radius, Rng& rng) {
  if (radius <= 0.0) return center;
  const Vec3 n0 = sys.F.gradient(center).normalized();
  const auto [e1, e2] = tangent_basis(n0);
  // the tangent disk must cover the geodesic ball
  const double disk = radius * 1.05;
  double cos_min = 1.0;
  for (int r = 1; r <= 8; ++r)
    for (int k = 0; k < 32; ++k) {
      const double a = 2.0 * M_PI * k / 32.0;
      const double rr = disk * r / 8.0;
      auto p = lift_along_normal(sys.F, sys.z, center + rr * (std::cos(a) * e1 + std::sin(a) * e2), n0);
      if (!p) throw Error(ErrorKind::RejectionOverflow, "neighborhood radius too large for a graph chart");
      cos_min = std::min(cos_min, std::abs(sys.F.gradient(*p).normalized().dot(n0)));
    }
  cos_min *= 0.98;
  const long max_tries = 10'000'000;
  for (long tries = 1; tries <= max_tries; ++tries) {
    const double u = disk * std::sqrt(rng.uniform());
    const double a = 2.0 * M_PI * rng.uniform();
    auto p = lift_along_normal(sys.F, sys.z, center + u * (std::cos(a) * e1 + std::sin(a) * e2), n0);
    if (!p) continue;
    const double c = std::abs(sys.F.gradient(*p).normalized().dot(n0));
    if (rng.uniform() * c > cos_min) continue;
    if (surface_distance(sys.F, sys.z, center, *p) >= radius) continue;
    return project_to_level(sys.F, sys.z, *p, 1e-13);
  }
  throw Error(ErrorKind::RejectionOverflow, "acceptance rate below 1e-4");
}

}  // namespace slowfast
