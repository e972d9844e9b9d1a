#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "deme/controllers.hpp"
#include "deme/csv.hpp"
#include "deme/error.hpp"
#include "deme/hvac_sim.hpp"
#include "deme/util.hpp"

namespace deme::hvac {

// ---------------------------------------------------------------------------
// Post-pass metrics over a logged trace
// ---------------------------------------------------------------------------

// Mean |T - T*| over occupied steps; nullopt when no step is occupied.
inline std::optional<double> err_occ(const EpisodeTrace& trace, double setpoint) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : trace.records) {
    if (r.state.occupancy > 0) {
      sum += std::fabs(r.state.indoor_temp - setpoint);
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

inline double total_energy(const EpisodeTrace& trace) {
  double sum = 0.0;
  for (const auto& r : trace.records) sum += r.energy_kwh;
  return sum;
}

inline double wasted_energy(const EpisodeTrace& trace) {
  double sum = 0.0;
  for (const auto& r : trace.records)
    if (r.state.occupancy == 0) sum += r.energy_kwh;
  return sum;
}

inline double occupied_energy(const EpisodeTrace& trace) {
  double sum = 0.0;
  for (const auto& r : trace.records)
    if (r.state.occupancy > 0) sum += r.energy_kwh;
  return sum;
}

inline int count_env_anomalies(const EpisodeTrace& trace, double threshold) {
  if (!(threshold > 0.0)) throw Error(ErrorCode::PreconditionViolated, "anomaly threshold must be > 0");
  int n = 0;
  for (const auto& r : trace.records)
    if (r.state.occupancy == 0 && r.power_kw > threshold) ++n;
  return n;
}

inline int count_n_interventions(const EpisodeTrace& trace) {
  int n = 0;
  for (const auto& r : trace.records)
    if (r.n_intervention) ++n;
  return n;
}

struct EpisodeMetrics {
  int episode = 0;
  std::optional<double> err_occ;
  double e_total = 0.0;
  double e_waste = 0.0;
  int env_anom = 0;
  int n_anom = 0;

  friend bool operator==(const EpisodeMetrics&, const EpisodeMetrics&) = default;
};

inline EpisodeMetrics metrics_of(const EpisodeTrace& trace, double setpoint, double threshold, int episode = 0) {
  return {episode, err_occ(trace, setpoint), total_energy(trace), wasted_energy(trace),
          count_env_anomalies(trace, threshold), count_n_interventions(trace)};
}

// Incremental version fed record by record during simulation. Sums are taken
// in step order, the same order the post-pass functions use.
class StreamingMetrics {
 public:
  StreamingMetrics(double setpoint, double threshold) : setpoint_(setpoint), threshold_(threshold) {}

  void add(const TraceRecord& r) {
    e_total_ += r.energy_kwh;
    if (r.state.occupancy == 0) {
      e_waste_ += r.energy_kwh;
      if (r.power_kw > threshold_) ++env_anom_;
    } else {
      err_sum_ += std::fabs(r.state.indoor_temp - setpoint_);
      ++occupied_;
    }
    if (r.n_intervention) ++n_anom_;
  }

  EpisodeMetrics result(int episode = 0) const {
    EpisodeMetrics m;
    m.episode = episode;
    if (occupied_ > 0) m.err_occ = err_sum_ / static_cast<double>(occupied_);
    m.e_total = e_total_;
    m.e_waste = e_waste_;
    m.env_anom = env_anom_;
    m.n_anom = n_anom_;
    return m;
  }

 private:
  double setpoint_;
  double threshold_;
  double err_sum_ = 0.0;
  std::size_t occupied_ = 0;
  double e_total_ = 0.0;
  double e_waste_ = 0.0;
  int env_anom_ = 0;
  int n_anom_ = 0;
};

// Score used when feeding HVAC outcomes to the learned-method store:
// J = -(E_waste + lambda * EnvAnom), lambda in kWh per anomaly.
inline double hvac_score(const EpisodeMetrics& m, double lambda = 1.0) {
  return -(m.e_waste + lambda * static_cast<double>(m.env_anom));
}

// ---------------------------------------------------------------------------
// Paired B-vs-D experiment
// ---------------------------------------------------------------------------

struct MeanMetrics {
  std::optional<double> err_occ;
  double e_total = 0.0;
  double e_waste = 0.0;
  double env_anom = 0.0;
  double n_anom = 0.0;
};

inline MeanMetrics mean_of(const std::vector<EpisodeMetrics>& rows) {
  MeanMetrics m;
  if (rows.empty()) return m;
  double err = 0.0;
  std::size_t err_n = 0;
  for (const auto& r : rows) {
    if (r.err_occ) {
      err += *r.err_occ;
      ++err_n;
    }
    m.e_total += r.e_total;
    m.e_waste += r.e_waste;
    m.env_anom += r.env_anom;
    m.n_anom += r.n_anom;
  }
  const double n = static_cast<double>(rows.size());
  if (err_n > 0) m.err_occ = err / static_cast<double>(err_n);
  m.e_total /= n;
  m.e_waste /= n;
  m.env_anom /= n;
  m.n_anom /= n;
  return m;
}

struct ExperimentReport {
  HvacConfig config;
  ControllerParams params;
  std::uint64_t seed = 0;
  std::vector<EpisodeMetrics> baseline;
  std::vector<EpisodeMetrics> decorated;

  MeanMetrics mean_baseline() const { return mean_of(baseline); }
  MeanMetrics mean_decorated() const { return mean_of(decorated); }
};

struct EpisodePair {
  EpisodeTrace baseline;
  EpisodeTrace decorated;
  EpisodeMetrics baseline_metrics;
  EpisodeMetrics decorated_metrics;
};

// Runs B and D on the same seed so both see identical occupancy and noise.
inline EpisodePair run_episode_pair(const HvacConfig& config, const ControllerParams& params, int episode) {
  const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(episode);
  const auto b = build_baseline_controller(config, params);
  const auto d = build_decorated_controller(config, params);
  EpisodePair out;
  StreamingMetrics sb(config.setpoint, config.anomaly_power_threshold);
  StreamingMetrics sd(config.setpoint, config.anomaly_power_threshold);
  try {
    out.baseline = run_episode(config, b, seed, [&](const TraceRecord& r) { sb.add(r); });
    out.decorated = run_episode(config, d, seed, [&](const TraceRecord& r) { sd.add(r); });
  } catch (const EpisodeError& e) {
    throw EpisodeError("episode " + std::to_string(episode) + ": " + e.what(), e.partial_trace());
  }
  out.baseline_metrics = sb.result(episode);
  out.decorated_metrics = sd.result(episode);
  return out;
}

// Episodes are numbered from 1 in the report; seeds are config.seed + index
// with index starting at 0.
inline ExperimentReport run_experiment(const HvacConfig& config, const ControllerParams& params, int episodes,
                                       unsigned jobs = 1) {
  if (episodes < 1) throw Error(ErrorCode::PreconditionViolated, "episodes must be >= 1");
  config.validate();
  ExperimentReport report{config, params, config.seed, {}, {}};
  std::vector<EpisodePair> pairs(static_cast<std::size_t>(episodes));
  auto run_one = [&](int i) { pairs[static_cast<std::size_t>(i)] = run_episode_pair(config, params, i); };

  if (jobs <= 1) {
    for (int i = 0; i < episodes; ++i) run_one(i);
  } else {
    std::vector<std::future<void>> pending;
    for (int i = 0; i < episodes; ++i) {
      pending.push_back(std::async(std::launch::async, run_one, i));
      if (pending.size() >= jobs) {
        for (auto& f : pending) f.get();
        pending.clear();
      }
    }
    for (auto& f : pending) f.get();
  }

  for (int i = 0; i < episodes; ++i) {
    auto& p = pairs[static_cast<std::size_t>(i)];
    p.baseline_metrics.episode = i + 1;
    p.decorated_metrics.episode = i + 1;
    report.baseline.push_back(p.baseline_metrics);
    report.decorated.push_back(p.decorated_metrics);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report CSV
// ---------------------------------------------------------------------------

inline constexpr const char* kReportCsvHeader =
    "ep,err_occ_b,err_occ_d,e_b,e_d,e_waste_b,e_waste_d,env_anom_b,env_anom_d,n_anom_d";

namespace detail {
inline std::string opt_cell(const std::optional<double>& v) { return v ? util::fixed(*v) : std::string(); }
}  // namespace detail

inline void write_report_csv(const ExperimentReport& report, std::ostream& out) {
  out << kReportCsvHeader << '\n';
  const std::size_t n = std::min(report.baseline.size(), report.decorated.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& b = report.baseline[i];
    const auto& d = report.decorated[i];
    out << b.episode << ',' << detail::opt_cell(b.err_occ) << ',' << detail::opt_cell(d.err_occ) << ','
        << util::fixed(b.e_total) << ',' << util::fixed(d.e_total) << ',' << util::fixed(b.e_waste) << ','
        << util::fixed(d.e_waste) << ',' << b.env_anom << ',' << d.env_anom << ',' << d.n_anom << '\n';
  }
  const auto mb = report.mean_baseline();
  const auto md = report.mean_decorated();
  out << "mean," << detail::opt_cell(mb.err_occ) << ',' << detail::opt_cell(md.err_occ) << ','
      << util::fixed(mb.e_total) << ',' << util::fixed(md.e_total) << ',' << util::fixed(mb.e_waste) << ','
      << util::fixed(md.e_waste) << ',' << util::fixed(mb.env_anom) << ',' << util::fixed(md.env_anom) << ','
      << util::fixed(md.n_anom) << '\n';
}

inline void write_report_csv(const ExperimentReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  write_report_csv(report, out);
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

inline std::vector<CsvRow> parse_report_csv(std::string_view text) {
  auto rows = parse_numeric_csv(text, kReportCsvHeader);
  for (const auto& r : rows)
    if (r.cells.size() != 9) throw Error(ErrorCode::FormatError, "report row '" + r.label + "' needs 10 cells");
  return rows;
}

}  // namespace deme::hvac
