#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "slowfast/geometry.hpp"
#include "slowfast/rng.hpp"

namespace slowfast {

// Pointwise model consumed by the integrators:
// x' = (1/epsilon) fast(x) + slow(x) + delta sigma(x) o dW, constrained to F = z.
struct Dynamics {
  SmoothField F;
  double z = 0.0;
  std::function<Vec3(const Vec3&)> fast;
  std::function<Vec3(const Vec3&)> slow;
  std::optional<NoiseMap> noise;
  std::function<double(const Vec3&)> observable;
  double epsilon = 1.0;
  double delta = 0.0;
};

Dynamics unperturbed_dynamics(const SurfaceSystem& sys, bool reversed = false);
Dynamics slow_dynamics(const SurfaceSystem& sys);
Dynamics sde_dynamics(const SurfaceSystem& sys);

enum class Method { Rk4Projected, HeunStratonovich };

struct IntegratorConfig {
  double h = 1e-2;  // fast-time step
  Method method = Method::Rk4Projected;
  double tolF = 1e-9;
  int max_projection_iterations = 50;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  // 0 keeps only the first and last sample
  std::size_t record_every = 1;
  // shortest fast period of the flow; when > 0, h must not exceed min_period / 50
  double min_period = 0.0;
};

enum class EventKind { EnteredWell, HitBoundary, Stopped };

struct TrajectoryEvent {
  double t = 0.0;
  EventKind kind = EventKind::Stopped;
  int edge = 0;
  std::string label() const;
};

struct TrajectorySample {
  double t;
  Vec3 x;
  double g;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  std::vector<TrajectoryEvent> events;
  Vec3 final_state = Vec3::Zero();
  double final_time = 0.0;
  std::size_t steps = 0;
  // largest |F - z| before projection
  double max_unprojected_defect = 0.0;
  std::optional<TrajectoryEvent> first(EventKind kind) const;
};

struct MonitorAction {
  std::optional<TrajectoryEvent> event;
  bool stop = false;
};
using StepMonitor = std::function<MonitorAction(double t, const Vec3& x, double g)>;

// Generic driver; time is measured in the units of `dt` (slow units when
// epsilon != 1). Noise is used only by HeunStratonovich with delta > 0.
Trajectory integrate(const Dynamics& dyn, const Vec3& x_start, double t_end, double dt,
                     const IntegratorConfig& cfg, const StepMonitor& monitor = {});

Trajectory integrate_unperturbed(const SurfaceSystem& sys, const Vec3& x_start, double t_end,
                                 const IntegratorConfig& cfg, bool reversed = false);
// slow time; dt = h * epsilon
Trajectory integrate_slow(const SurfaceSystem& sys, const Vec3& x_start, double t_end_slow,
                          const IntegratorConfig& cfg, const StepMonitor& monitor = {});
Trajectory integrate_sde(const SurfaceSystem& sys, const Vec3& x_start, double t_end_slow,
                         const IntegratorConfig& cfg, const StepMonitor& monitor = {});

// One step of the chosen scheme followed by projection; exposed for tests and benchmarks.
Vec3 step(const Dynamics& dyn, const Vec3& x, double dt, Method method, Rng* rng, double tolF,
          int max_iterations, double* defect = nullptr);

Vec3 sample_uniform_neighborhood(const SurfaceSystem& sys, const Vec3& center, double radius, Rng& rng);
// length of the normal-section path between two nearby surface points
double surface_distance(const SmoothField& F, double z, const Vec3& a, const Vec3& b, int segments = 32);

}  // namespace slowfast
