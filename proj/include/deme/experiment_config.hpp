#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "deme/controllers.hpp"
#include "deme/error.hpp"
#include "deme/hvac_sim.hpp"
#include "deme/util.hpp"

namespace deme::config {

// Values of the flat TOML subset we accept: numbers, booleans, basic
// strings and one-line numeric arrays under [section] headers.
using Value = std::variant<double, bool, std::string, std::vector<double>>;

struct Document {
  std::map<std::string, Value> values;  // "section.key" -> value

  bool contains(const std::string& key) const { return values.contains(key); }
};

namespace detail {

[[noreturn]] inline void fail(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ConfigError, "line " + std::to_string(line) + ": " + what);
}

inline std::string strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (c == '#' && !in_string) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

inline double parse_number(std::string_view raw, std::size_t line) {
  std::string s;
  for (char c : util::trim(raw))
    if (c != '_') s += c;
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan" || s == "+nan" || s == "-nan") fail(line, "nan is not a usable parameter");
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) fail(line, "bad number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    fail(line, "bad value '" + s + "'");
  }
}

inline std::string parse_string(std::string_view raw, std::size_t line) {
  if (raw.size() < 2 || raw.back() != '"') fail(line, "unterminated string");
  std::string out;
  for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
    char c = raw[i];
    if (c == '\\' && i + 2 < raw.size()) {
      char n = raw[++i];
      switch (n) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(line, std::string("unsupported escape \\") + n);
      }
    } else {
      out += c;
    }
  }
  return out;
}

inline Value parse_value(std::string_view raw, std::size_t line) {
  raw = util::trim(raw);
  if (raw.empty()) fail(line, "missing value");
  if (raw == "true") return true;
  if (raw == "false") return false;
  if (raw.front() == '"') return parse_string(raw, line);
  if (raw.front() == '[') {
    if (raw.back() != ']') fail(line, "unterminated array");
    std::vector<double> out;
    auto inner = raw.substr(1, raw.size() - 2);
    std::size_t start = 0;
    while (start <= inner.size()) {
      auto comma = inner.find(',', start);
      auto item = util::trim(inner.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (!item.empty()) out.push_back(parse_number(item, line));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return out;
  }
  return parse_number(raw, line);
}

}  // namespace detail

inline Document parse(std::string_view text) {
  Document doc;
  std::string section;
  std::size_t line_no = 0;
  for (const auto& raw_line : util::split_lines(text)) {
    ++line_no;
    auto stripped = detail::strip_comment(raw_line);
    auto line = util::trim(stripped);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') detail::fail(line_no, "bad section header");
      section = std::string(util::trim(line.substr(1, line.size() - 2)));
      if (section.empty()) detail::fail(line_no, "empty section name");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) detail::fail(line_no, "expected key = value");
    auto key = std::string(util::trim(line.substr(0, eq)));
    if (key.empty()) detail::fail(line_no, "empty key");
    auto full = section.empty() ? key : section + "." + key;
    if (doc.values.contains(full)) detail::fail(line_no, "duplicate key '" + full + "'");
    doc.values[full] = detail::parse_value(line.substr(eq + 1), line_no);
  }
  return doc;
}

struct PromptEvalSettings {
  int rounds = 20;
  std::filesystem::path fixtures;  // empty: caller's default
  std::string chat_url = "https://api.deepseek.com/chat/completions";
  std::string chat_model = "deepseek-chat";
  std::string embed_url;
  std::string embed_model;
  double temperature = 0.0;
  std::chrono::seconds timeout{30};
};

struct ExperimentConfig {
  hvac::HvacConfig hvac;
  hvac::ControllerParams controller;
  int episodes = 20;
  PromptEvalSettings prompt_eval;
};

namespace detail {

class Reader {
 public:
  explicit Reader(const Document& doc) : doc_(doc) {}

  void number(const std::string& key, double& out) {
    if (auto* v = find<double>(key)) out = *v;
  }
  void integer(const std::string& key, int& out) {
    if (auto* v = find<double>(key)) out = to_int(key, *v);
  }
  void seed(const std::string& key, std::uint64_t& out) {
    if (auto* v = find<double>(key)) {
      if (*v < 0 || *v != std::floor(*v) || *v > 9007199254740992.0)
        throw Error(ErrorCode::ConfigError, "'" + key + "' must be a non-negative integer");
      out = static_cast<std::uint64_t>(*v);
    }
  }
  void text(const std::string& key, std::string& out) {
    if (auto* v = find<std::string>(key)) out = *v;
  }
  void probs(const std::string& key, std::array<double, 4>& out) {
    if (auto* v = find<std::vector<double>>(key)) {
      if (v->size() != 4) throw Error(ErrorCode::ConfigError, "'" + key + "' needs exactly 4 entries");
      std::copy(v->begin(), v->end(), out.begin());
    }
  }

  // Keys in the document that no reader asked for.
  std::vector<std::string> unknown() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : doc_.values)
      if (!seen_.contains(k)) out.push_back(k);
    return out;
  }

 private:
  template <typename T>
  const T* find(const std::string& key) {
    seen_.insert(key);
    auto it = doc_.values.find(key);
    if (it == doc_.values.end()) return nullptr;
    const T* v = std::get_if<T>(&it->second);
    if (v == nullptr) throw Error(ErrorCode::ConfigError, "'" + key + "' has the wrong type");
    return v;
  }

  static int to_int(const std::string& key, double v) {
    if (v != std::floor(v) || std::fabs(v) > 1e9) throw Error(ErrorCode::ConfigError, "'" + key + "' must be an integer");
    return static_cast<int>(v);
  }

  const Document& doc_;
  std::set<std::string> seen_;
};

}  // namespace detail

// Builds an experiment config from a parsed document. Missing keys keep their
// defaults; unknown keys are rejected.
inline ExperimentConfig from_document(const Document& doc) {
  ExperimentConfig cfg;
  detail::Reader r(doc);
  auto& h = cfg.hvac;
  r.integer("simulation.steps_per_episode", h.steps_per_episode);
  r.number("simulation.minutes_per_step", h.minutes_per_step);
  r.number("simulation.outdoor_mean", h.outdoor_mean);
  r.number("simulation.outdoor_amplitude", h.outdoor_amplitude);
  r.number("simulation.outdoor_phase", h.outdoor_phase);
  r.probs("simulation.occupancy_probs", h.occupancy_probs);
  r.number("simulation.power_min_kw", h.power_min_kw);
  r.number("simulation.power_max_kw", h.power_max_kw);
  r.number("simulation.anomaly_power_threshold", h.anomaly_power_threshold);
  r.number("simulation.setpoint", h.setpoint);
  r.number("simulation.alpha", h.alpha);
  r.number("simulation.beta", h.beta);
  r.number("simulation.gamma", h.gamma);
  r.number("simulation.noise_half_width", h.noise_half_width);
  r.number("simulation.initial_indoor_temp", h.initial_indoor_temp);

  auto& c = cfg.controller;
  r.number("controller.delta_ref", c.delta_ref);
  r.number("controller.n_threshold", c.n_threshold);
  r.number("controller.power_cap", c.power_cap);
  r.integer("controller.fire_estimate_level", c.fire_estimate_level);

  r.integer("experiment.episodes", cfg.episodes);
  r.seed("experiment.seed", h.seed);

  auto& p = cfg.prompt_eval;
  r.integer("prompt_eval.rounds", p.rounds);
  std::string fixtures;
  r.text("prompt_eval.fixtures", fixtures);
  if (!fixtures.empty()) p.fixtures = fixtures;
  r.text("prompt_eval.chat_url", p.chat_url);
  r.text("prompt_eval.chat_model", p.chat_model);
  r.text("prompt_eval.embed_url", p.embed_url);
  r.text("prompt_eval.embed_model", p.embed_model);
  r.number("prompt_eval.temperature", p.temperature);
  int timeout = static_cast<int>(p.timeout.count());
  r.integer("prompt_eval.timeout_s", timeout);
  p.timeout = std::chrono::seconds(timeout);

  if (auto unknown = r.unknown(); !unknown.empty())
    throw Error(ErrorCode::ConfigError, "unknown config key '" + unknown.front() + "'");
  if (!(c.delta_ref > 0.0)) throw Error(ErrorCode::ConfigError, "controller.delta_ref must be > 0");
  if (!(c.n_threshold > 0.0)) throw Error(ErrorCode::ConfigError, "controller.n_threshold must be > 0");
  if (!(c.power_cap >= 0.0)) throw Error(ErrorCode::ConfigError, "controller.power_cap must be >= 0");
  if (timeout < 1) throw Error(ErrorCode::ConfigError, "prompt_eval.timeout_s must be >= 1");
  h.validate();
  return cfg;
}

// Relative fixture paths resolve against the config file's directory.
inline ExperimentConfig load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  auto cfg = from_document(parse(buf.str()));
  if (!cfg.prompt_eval.fixtures.empty() && cfg.prompt_eval.fixtures.is_relative())
    cfg.prompt_eval.fixtures = path.parent_path() / cfg.prompt_eval.fixtures;
  return cfg;
}

}  // namespace deme::config
