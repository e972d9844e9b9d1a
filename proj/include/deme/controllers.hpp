#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "deme/error.hpp"
#include "deme/hvac_sim.hpp"
#include "deme/method_path.hpp"

namespace deme::hvac {

struct ControllerParams {
  double delta_ref = 8.0;        // degC of error that saturates the baseline action
  double n_threshold = 0.8;      // kW; N only looks at proposals above this
  double power_cap = 0.5;        // kW applied when N predicts an anomaly
  int fire_estimate_level = 1;   // N fires when estimated occupancy <= this
};

struct Verdict {
  bool anomaly_predicted = false;
  std::optional<double> power_cap;
  std::optional<int> estimated_occupancy;
};

// B: proportional on the setpoint error. Reads temperature only.
inline double baseline_action(const ControllerView& view, double setpoint, double delta_ref) {
  return clamp_action((view.indoor_temp - setpoint) / delta_ref);
}

// Recovers the occupancy of step t-1 from the observed temperature change by
// inverting the thermal model: Occ = (dT - alpha (T_out - T) + gamma P) / beta.
inline std::optional<int> estimate_previous_occupancy(const ControllerView& view, const HvacConfig& model) {
  if (!view.previous || !view.delayed_delta || model.beta == 0.0) return std::nullopt;
  auto d_indoor = view.delayed_delta->get("indoor_temp");
  auto t_prev = view.previous->get("indoor_temp");
  auto out_prev = view.previous->get("outdoor_temp");
  auto p_prev = view.previous->get("power_kw");
  if (!d_indoor || !t_prev || !out_prev || !p_prev) return std::nullopt;
  const double residual = *d_indoor - model.alpha * (*out_prev - *t_prev) + model.gamma * *p_prev;
  const double est = std::round(residual / model.beta);
  return std::clamp(static_cast<int>(est), 0, 3);
}

inline Verdict verify_step_n(const ControllerView& view, double proposed_power, const HvacConfig& model,
                             const ControllerParams& params) {
  if (!(params.n_threshold > 0.0)) throw Error(ErrorCode::PreconditionViolated, "N threshold must be > 0");
  Verdict v;
  v.estimated_occupancy = estimate_previous_occupancy(view, model);
  if (v.estimated_occupancy && *v.estimated_occupancy <= params.fire_estimate_level &&
      proposed_power > params.n_threshold) {
    v.anomaly_predicted = true;
    v.power_cap = params.power_cap;
  }
  return v;
}

// B': keep the proposal, or lower it to the cap when N predicted an anomaly.
inline double refined_action(const HvacConfig& config, double proposal, const Verdict& verdict) {
  if (!verdict.anomaly_predicted || !verdict.power_cap) return proposal;
  if (action_to_power(config, proposal) <= *verdict.power_cap) return proposal;
  return power_to_action(config, *verdict.power_cap);
}

inline MethodPath baseline_controller_path() {
  MethodPath p;
  p.steps.push_back({"B", "B", "derive the cooling action from indoor temperature and time", Origin::Original});
  p.steps.push_back({"R", "R", "apply the action to the HVAC unit", Origin::Original});
  return p;
}

inline Step verification_step() {
  return {"N", "N", "check for no person but high power using the environment delta; cap power when predicted",
          Origin::Inserted};
}

// Executes a controller method path step by step. Steps are dispatched on
// label: N verifies, B proposes (refining when N has run), R emits.
class PathController {
 public:
  PathController(MethodPath path, HvacConfig model, ControllerParams params)
      : path_(std::move(path)), model_(std::move(model)), params_(params) {
    if (!is_valid(path_)) throw Error(ErrorCode::PreconditionViolated, "controller path does not validate");
  }

  ControlDecision operator()(const ControllerView& view) const {
    std::optional<double> proposal;
    std::optional<Verdict> verdict;
    std::optional<double> action;
    std::optional<ControlDecision> out;
    auto propose = [&] {
      if (!proposal) proposal = baseline_action(view, model_.setpoint, params_.delta_ref);
      return *proposal;
    };
    for (const auto& step : path_.steps) {
      if (step.label == "N") {
        verdict = verify_step_n(view, action_to_power(model_, propose()), model_, params_);
      } else if (step.label == "B") {
        action = verdict ? refined_action(model_, propose(), *verdict) : propose();
      } else if (step.label == "R") {
        if (!action) throw Error(ErrorCode::ControllerError, "R reached before any action was computed");
        out = ControlDecision{*action, verdict && verdict->anomaly_predicted};
      } else {
        throw Error(ErrorCode::ControllerError, "no handler for controller step '" + step.label + "'");
      }
    }
    if (!out) throw Error(ErrorCode::ControllerError, "controller path emitted nothing");
    return *out;
  }

  const MethodPath& path() const noexcept { return path_; }
  const ControllerParams& params() const noexcept { return params_; }

 private:
  MethodPath path_;
  HvacConfig model_;
  ControllerParams params_;
};

// I -> B -> R
inline PathController build_baseline_controller(const HvacConfig& model, const ControllerParams& params) {
  return PathController(baseline_controller_path(), model, params);
}

// {I, I'} -> N -> B' -> R', built by inserting N in front of the baseline path.
inline PathController build_decorated_controller(const HvacConfig& model, const ControllerParams& params) {
  return PathController(insert_step(baseline_controller_path(), 0, verification_step()), model, params);
}

inline ControllerParams inert(ControllerParams params) {
  params.n_threshold = std::numeric_limits<double>::infinity();
  return params;
}

}  // namespace deme::hvac
