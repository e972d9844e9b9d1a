#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "deme/decoration_sources.hpp"
#include "deme/error.hpp"
#include "deme/util.hpp"

namespace deme::hvac {

// std::mt19937_64 is fully specified by the standard; doubles are built from
// the top 53 bits directly so no implementation-defined distribution is involved.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

 private:
  std::mt19937_64 engine_;
};

struct HvacConfig {
  int steps_per_episode = 96;
  double minutes_per_step = 15.0;
  double outdoor_mean = 30.0;
  double outdoor_amplitude = 6.0;
  double outdoor_phase = -std::numbers::pi / 2.0;  // coldest at step 0
  std::array<double, 4> occupancy_probs{0.4, 0.3, 0.2, 0.1};
  double power_min_kw = 0.0;
  double power_max_kw = 5.0;
  double anomaly_power_threshold = 0.8;
  double setpoint = 24.0;
  double alpha = 0.05;  // outdoor coupling, per step
  double beta = 0.3;    // occupant gain, degC per person per step
  double gamma = 0.4;   // cooling effect, degC per kW per step
  double noise_half_width = 0.1;
  double initial_indoor_temp = 28.0;
  std::uint64_t seed = 42;

  double hours_per_step() const { return minutes_per_step / 60.0; }

  // Throws ConfigError naming the first broken invariant.
  void validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::ConfigError, what); };
    if (steps_per_episode < 1) fail("steps_per_episode must be >= 1");
    if (!(minutes_per_step > 0.0)) fail("minutes_per_step must be > 0");
    double sum = 0.0;
    for (double p : occupancy_probs) {
      if (!(p >= 0.0)) fail("occupancy_probs entries must be >= 0");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-12) fail("occupancy_probs must sum to 1");
    if (power_min_kw != 0.0) fail("power range lower bound must be 0");
    if (!(power_max_kw > power_min_kw)) fail("power range upper bound must exceed the lower bound");
    if (!(anomaly_power_threshold > 0.0)) fail("anomaly_power_threshold must be > 0");
    if (!(noise_half_width >= 0.0)) fail("noise_half_width must be >= 0");
    for (double v : {outdoor_mean, outdoor_amplitude, outdoor_phase, setpoint, alpha, beta, gamma, initial_indoor_temp})
      if (!std::isfinite(v)) fail("non-finite simulation parameter");
  }
};

struct SimState {
  int step_index = 0;
  double indoor_temp = 0.0;
  double outdoor_temp = 0.0;
  int occupancy = 0;

  friend bool operator==(const SimState&, const SimState&) = default;
};

// What a controller may see at step t. `previous` is the environment snapshot
// recorded at step t-1 (indoor_temp, outdoor_temp, power_kw) and
// `delayed_delta` its difference to the sensor reading at the start of step t.
// Neither carries occupancy of step t.
struct ControllerView {
  double indoor_temp = 0.0;
  double outdoor_temp = 0.0;
  int step_index = 0;
  std::optional<EnvSnapshot> previous;
  std::optional<EnvDelta> delayed_delta;
};

struct ControlDecision {
  double action = 0.0;
  bool n_intervention = false;
};

using Controller = std::function<ControlDecision(const ControllerView&)>;

struct TraceRecord {
  int step_index = 0;
  SimState state;
  double action = 0.0;
  double power_kw = 0.0;
  double energy_kwh = 0.0;
  bool env_anomaly = false;
  bool n_intervention = false;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct EpisodeTrace {
  std::vector<TraceRecord> records;

  friend bool operator==(const EpisodeTrace&, const EpisodeTrace&) = default;
};

class EpisodeError : public Error {
 public:
  EpisodeError(const std::string& what, EpisodeTrace partial)
      : Error(ErrorCode::ControllerError, what), partial_(std::move(partial)) {}

  const EpisodeTrace& partial_trace() const noexcept { return partial_; }

 private:
  EpisodeTrace partial_;
};

inline double outdoor_temp(const HvacConfig& config, int step_index) {
  const double n = config.steps_per_episode;
  const double phase = 2.0 * std::numbers::pi * (static_cast<double>(step_index) / n) + config.outdoor_phase;
  return config.outdoor_mean + config.outdoor_amplitude * std::sin(phase);
}

// Inverse CDF over the occupancy distribution.
inline int occupancy_from_uniform(double u, const std::array<double, 4>& probs) {
  double cdf = 0.0;
  for (int k = 0; k < 3; ++k) {
    cdf += probs[k];
    if (u < cdf) return k;
  }
  return 3;
}

inline int sample_occupancy(Rng& rng, const std::array<double, 4>& probs) {
  return occupancy_from_uniform(rng.uniform01(), probs);
}

inline double clamp_action(double a) {
  if (std::isnan(a)) return -1.0;
  return std::clamp(a, -1.0, 1.0);
}

inline double action_to_power(const HvacConfig& config, double action) {
  const double a = clamp_action(action);
  return config.power_min_kw + (a + 1.0) / 2.0 * (config.power_max_kw - config.power_min_kw);
}

inline double power_to_action(const HvacConfig& config, double power_kw) {
  return 2.0 * (power_kw - config.power_min_kw) / (config.power_max_kw - config.power_min_kw) - 1.0;
}

// Deterministic part of the indoor update (noise excluded).
inline double dynamics_mean(const HvacConfig& config, double indoor, double outdoor, int occupancy, double power_kw) {
  return indoor + config.alpha * (outdoor - indoor) + config.beta * occupancy - config.gamma * power_kw;
}

// T' = T + alpha (T_out - T) + beta Occ - gamma P + eps, eps ~ U(-h, h).
// Exactly one uniform draw per call, whatever h is.
inline double step_dynamics(const HvacConfig& config, const SimState& state, double power_kw, Rng& rng) {
  const double eps = rng.uniform(-config.noise_half_width, config.noise_half_width);
  return dynamics_mean(config, state.indoor_temp, state.outdoor_temp, state.occupancy, power_kw) + eps;
}

inline double energy_of_step(double power_kw, double hours_per_step = 0.25) { return power_kw * hours_per_step; }

inline bool is_env_anomaly(int occupancy, double power_kw, double threshold) {
  return occupancy == 0 && power_kw > threshold;
}

inline EnvSnapshot sensor_snapshot(double indoor, double outdoor) {
  EnvSnapshot s;
  s.set("indoor_temp", indoor, "degC").set("outdoor_temp", outdoor, "degC");
  return s;
}

// The controller's view of step t, built from sensor readings and the
// snapshot of step t-1. state.occupancy is deliberately not read.
inline ControllerView make_view(const SimState& state, const std::optional<EnvSnapshot>& previous) {
  ControllerView view{state.indoor_temp, state.outdoor_temp, state.step_index, previous, std::nullopt};
  if (previous) view.delayed_delta = env_delta(*previous, sensor_snapshot(state.indoor_temp, state.outdoor_temp));
  return view;
}

using RecordObserver = std::function<void(const TraceRecord&)>;

// One simulated day. Per step: draw occupancy, query the controller, apply
// power, log, then advance the dynamics (one noise draw). Same
// (config, controller, seed) gives the same trace.
inline EpisodeTrace run_episode(const HvacConfig& config, const Controller& controller, std::uint64_t seed,
                                const RecordObserver& observer = {}) {
  config.validate();
  Rng rng(seed);
  EpisodeTrace trace;
  trace.records.reserve(static_cast<std::size_t>(config.steps_per_episode));
  const double hours = config.hours_per_step();

  double indoor = config.initial_indoor_temp;
  std::optional<EnvSnapshot> previous;
  for (int t = 0; t < config.steps_per_episode; ++t) {
    SimState state{t, indoor, outdoor_temp(config, t), sample_occupancy(rng, config.occupancy_probs)};

    const ControllerView view = make_view(state, previous);

    ControlDecision decision;
    try {
      decision = controller(view);
    } catch (const std::exception& e) {
      throw EpisodeError("controller failed at step " + std::to_string(t) + ": " + e.what(), trace);
    }

    TraceRecord rec;
    rec.step_index = t;
    rec.state = state;
    rec.action = decision.action;
    rec.power_kw = action_to_power(config, decision.action);
    rec.energy_kwh = energy_of_step(rec.power_kw, hours);
    rec.env_anomaly = is_env_anomaly(state.occupancy, rec.power_kw, config.anomaly_power_threshold);
    rec.n_intervention = decision.n_intervention;
    trace.records.push_back(rec);
    if (observer) observer(rec);

    EnvSnapshot snap = sensor_snapshot(state.indoor_temp, state.outdoor_temp);
    snap.set("power_kw", rec.power_kw, "kW");
    previous = std::move(snap);
    indoor = step_dynamics(config, state, rec.power_kw, rng);
  }
  return trace;
}

inline constexpr const char* kTraceCsvHeader =
    "step,indoor_temp,outdoor_temp,occupancy,action,power_kw,energy_kwh,env_anomaly,n_intervention";

inline void write_trace_csv(const EpisodeTrace& trace, std::ostream& out) {
  out << kTraceCsvHeader << '\n';
  for (const auto& r : trace.records) {
    out << r.step_index << ',' << util::fixed(r.state.indoor_temp) << ',' << util::fixed(r.state.outdoor_temp) << ','
        << r.state.occupancy << ',' << util::fixed(r.action) << ',' << util::fixed(r.power_kw) << ','
        << util::fixed(r.energy_kwh) << ',' << (r.env_anomaly ? 1 : 0) << ',' << (r.n_intervention ? 1 : 0) << '\n';
  }
}

inline void write_trace_csv(const EpisodeTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  write_trace_csv(trace, out);
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

}  // namespace deme::hvac
