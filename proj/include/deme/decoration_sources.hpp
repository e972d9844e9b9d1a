#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "deme/decoration.hpp"
#include "deme/error.hpp"
#include "deme/method_path.hpp"
#include "deme/util.hpp"

namespace deme {

// ---------------------------------------------------------------------------
// Hidden goals
// ---------------------------------------------------------------------------

struct GoalEntry {
  std::string tag;
  std::string body;

  friend bool operator==(const GoalEntry&, const GoalEntry&) = default;
};

// Registry of implicit requirements keyed by a predicate tag. Readers may run
// concurrently; add() takes the lock exclusively.
class GoalRegistry {
 public:
  GoalRegistry() = default;
  GoalRegistry(std::initializer_list<GoalEntry> entries) {
    for (const auto& e : entries) add(e.tag, e.body);
  }
  GoalRegistry(const GoalRegistry& other) : goals_(other.snapshot()) {}
  GoalRegistry& operator=(const GoalRegistry& other) {
    if (this != &other) {
      auto copy = other.snapshot();
      std::unique_lock lock(mutex_);
      goals_ = std::move(copy);
    }
    return *this;
  }

  // Throws DuplicateId when the tag (case-insensitive) is already registered.
  void add(std::string tag, std::string body) {
    std::unique_lock lock(mutex_);
    auto key = util::to_lower(tag);
    for (const auto& g : goals_)
      if (util::to_lower(g.tag) == key) throw Error(ErrorCode::DuplicateId, "goal tag '" + tag + "' already registered");
    goals_.push_back({std::move(tag), std::move(body)});
  }

  std::vector<GoalEntry> snapshot() const {
    std::shared_lock lock(mutex_);
    return goals_;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return goals_.size();
  }

 private:
  mutable std::shared_mutex mutex_;
  std::vector<GoalEntry> goals_;
};

// g_goal: one Goal decoration per entry whose tag occurs in the input
// (case-insensitive substring match).
inline std::vector<Decoration> derive_goal_decoration(std::string_view input, const GoalRegistry& registry) {
  std::vector<Decoration> out;
  const auto haystack = util::to_lower(input);
  for (const auto& g : registry.snapshot()) {
    if (g.tag.empty()) continue;
    if (haystack.find(util::to_lower(g.tag)) != std::string::npos)
      out.push_back({DecorationKind::Goal, "goal:" + g.tag, g.body, 0});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Learned methods
// ---------------------------------------------------------------------------

struct LearnedEntry {
  std::string context_key;
  MethodPath method;
  double score = 0.0;
  std::uint64_t recorded_at = 0;

  friend bool operator==(const LearnedEntry&, const LearnedEntry&) = default;
};

// History of recorded methods with a best pointer per context key. The best
// pointer only moves on a strict score improvement.
class LearnedMethodStore {
 public:
  LearnedMethodStore() = default;
  LearnedMethodStore(const LearnedMethodStore& other) {
    std::shared_lock lock(other.mutex_);
    entries_ = other.entries_;
    best_ = other.best_;
    clock_ = other.clock_;
  }
  LearnedMethodStore& operator=(const LearnedMethodStore& other) {
    if (this != &other) {
      LearnedMethodStore copy(other);
      std::unique_lock lock(mutex_);
      entries_ = std::move(copy.entries_);
      best_ = std::move(copy.best_);
      clock_ = copy.clock_;
    }
    return *this;
  }

  // Returns true when the best entry for the key changed.
  bool record(const std::string& context_key, MethodPath method, double score) {
    if (!std::isfinite(score)) throw Error(ErrorCode::PreconditionViolated, "score must be finite");
    std::unique_lock lock(mutex_);
    return record_locked({context_key, std::move(method), score, ++clock_});
  }

  std::optional<LearnedEntry> best(const std::string& context_key) const {
    std::shared_lock lock(mutex_);
    auto it = best_.find(context_key);
    if (it == best_.end()) return std::nullopt;
    return entries_[it->second];
  }

  std::vector<LearnedEntry> entries() const {
    std::shared_lock lock(mutex_);
    return entries_;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }

  // Rebuilds a store from persisted entries, replaying them in order.
  static LearnedMethodStore from_entries(std::vector<LearnedEntry> entries) {
    LearnedMethodStore store;
    for (auto& e : entries) {
      store.clock_ = std::max(store.clock_, e.recorded_at);
      store.record_locked(std::move(e));
    }
    return store;
  }

  friend bool operator==(const LearnedMethodStore& a, const LearnedMethodStore& b) {
    return a.entries() == b.entries();
  }

 private:
  bool record_locked(LearnedEntry entry) {
    entries_.push_back(std::move(entry));
    const auto& added = entries_.back();
    auto it = best_.find(added.context_key);
    if (it == best_.end() || added.score > entries_[it->second].score) {
      best_[added.context_key] = entries_.size() - 1;
      return true;
    }
    return false;
  }

  mutable std::shared_mutex mutex_;
  std::vector<LearnedEntry> entries_;
  std::map<std::string, std::size_t> best_;
  std::uint64_t clock_ = 0;
};

struct RecordResult {
  LearnedMethodStore store;
  bool accepted = false;
};

// Value-style variant of LearnedMethodStore::record.
inline RecordResult record_better_method(const LearnedMethodStore& store, const std::string& context_key,
                                         MethodPath method, double score) {
  RecordResult out{store, false};
  out.accepted = out.store.record(context_key, std::move(method), score);
  return out;
}

inline std::optional<Decoration> retrieve_learned(const LearnedMethodStore& store, const std::string& context_key) {
  auto best = store.best(context_key);
  if (!best) return std::nullopt;
  return Decoration{DecorationKind::Learned, context_key, to_text(best->method), best->recorded_at};
}

inline nlohmann::json to_json(const LearnedMethodStore& store) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : store.entries())
    entries.push_back({{"context_key", e.context_key},
                       {"score", e.score},
                       {"recorded_at", e.recorded_at},
                       {"method", to_json(e.method)}});
  return {{"entries", std::move(entries)}};
}

inline LearnedMethodStore store_from_json(const nlohmann::json& j) {
  std::vector<LearnedEntry> entries;
  try {
    for (const auto& e : j.at("entries")) {
      double score = e.at("score").get<double>();
      if (!std::isfinite(score)) throw Error(ErrorCode::FormatError, "non-finite score in store");
      entries.push_back({e.at("context_key").get<std::string>(), method_path_from_json(e.at("method")), score,
                         e.at("recorded_at").get<std::uint64_t>()});
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::FormatError, std::string("bad store document: ") + ex.what());
  }
  return LearnedMethodStore::from_entries(std::move(entries));
}

inline void save_store(const LearnedMethodStore& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out << to_json(store).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

inline LearnedMethodStore load_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  auto j = nlohmann::json::parse(buf.str(), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::FormatError, "'" + path.string() + "' is not valid JSON");
  return store_from_json(j);
}

// ---------------------------------------------------------------------------
// Environmental feedback
// ---------------------------------------------------------------------------

struct Quantity {
  double value = 0.0;
  std::string unit;

  friend bool operator==(const Quantity&, const Quantity&) = default;
};

struct EnvSnapshot {
  std::map<std::string, Quantity> fields;

  EnvSnapshot& set(std::string name, double value, std::string unit) {
    if (name.empty()) throw Error(ErrorCode::PreconditionViolated, "snapshot field name is empty");
    fields[std::move(name)] = {value, std::move(unit)};
    return *this;
  }

  std::optional<double> get(const std::string& name) const {
    auto it = fields.find(name);
    if (it == fields.end()) return std::nullopt;
    return it->second.value;
  }

  friend bool operator==(const EnvSnapshot&, const EnvSnapshot&) = default;
};

struct EnvDelta {
  std::map<std::string, Quantity> changes;  // after - before, unit of the shared field
  std::vector<std::string> added;           // only in `after`
  std::vector<std::string> removed;         // only in `before`

  std::optional<double> get(const std::string& name) const {
    auto it = changes.find(name);
    if (it == changes.end()) return std::nullopt;
    return it->second.value;
  }

  friend bool operator==(const EnvDelta&, const EnvDelta&) = default;
};

// Delta E = E_after - E_before over shared names.
inline EnvDelta env_delta(const EnvSnapshot& before, const EnvSnapshot& after) {
  EnvDelta out;
  for (const auto& [name, b] : before.fields) {
    auto it = after.fields.find(name);
    if (it == after.fields.end()) {
      out.removed.push_back(name);
      continue;
    }
    if (it->second.unit != b.unit)
      throw Error(ErrorCode::UnitMismatch, "field '" + name + "' has unit '" + b.unit + "' before and '" +
                                               it->second.unit + "' after");
    out.changes[name] = {it->second.value - b.value, b.unit};
  }
  for (const auto& [name, a] : after.fields)
    if (!before.fields.contains(name)) out.added.push_back(name);
  return out;
}

// Per-name magnitude thresholds; names without an entry use `fallback`.
struct ImpactThresholds {
  std::map<std::string, double> per_name;
  double fallback = 0.0;

  double for_name(const std::string& name) const {
    auto it = per_name.find(name);
    return it == per_name.end() ? fallback : it->second;
  }
};

// Names whose |delta| exceeds their threshold, in name order.
inline std::vector<std::string> impact_set(const EnvDelta& delta, const ImpactThresholds& thresholds) {
  std::vector<std::string> names;
  for (const auto& [name, q] : delta.changes)
    if (std::fabs(q.value) > thresholds.for_name(name)) names.push_back(name);
  return names;
}

inline std::optional<Decoration> extract_impact(const EnvDelta& delta, const ImpactThresholds& thresholds = {}) {
  auto names = impact_set(delta, thresholds);
  if (names.empty()) return std::nullopt;
  std::string body;
  for (const auto& name : names) {
    const auto& q = delta.changes.at(name);
    if (!body.empty()) body += "; ";
    body += name + " changed by " + util::compact(q.value);
    if (!q.unit.empty()) body += " " + q.unit;
  }
  return Decoration{DecorationKind::Environment, "env-delta", std::move(body), 0};
}

// D = {goal, learned, env}: fixed kind order, duplicates dropped.
inline std::vector<Decoration> combine(const std::vector<Decoration>& goals, const std::vector<Decoration>& learned,
                                       const std::vector<Decoration>& env) {
  std::vector<Decoration> out;
  auto push = [&](const std::vector<Decoration>& part) {
    for (const auto& d : part)
      if (std::none_of(out.begin(), out.end(), [&](const Decoration& e) { return e.same_as(d); })) out.push_back(d);
  };
  push(goals);
  push(learned);
  push(env);
  return out;
}

// Re-combines an already mixed list by partitioning on kind first.
inline std::vector<Decoration> combine(const std::vector<Decoration>& mixed) {
  std::vector<Decoration> g, l, e;
  for (const auto& d : mixed) {
    switch (d.kind) {
      case DecorationKind::Goal: g.push_back(d); break;
      case DecorationKind::Learned: l.push_back(d); break;
      case DecorationKind::Environment: e.push_back(d); break;
    }
  }
  return combine(g, l, e);
}

}  // namespace deme
