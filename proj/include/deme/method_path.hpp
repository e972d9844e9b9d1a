#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "deme/decoration.hpp"
#include "deme/error.hpp"

namespace deme {

enum class Origin { Original, Rewritten, Inserted };

constexpr std::string_view to_string(Origin origin) noexcept {
  switch (origin) {
    case Origin::Original: return "original";
    case Origin::Rewritten: return "rewritten";
    case Origin::Inserted: return "inserted";
  }
  return "unknown";
}

inline Origin origin_from_string(std::string_view s) {
  if (s == "original") return Origin::Original;
  if (s == "rewritten") return Origin::Rewritten;
  if (s == "inserted") return Origin::Inserted;
  throw Error(ErrorCode::FormatError, "unknown step origin '" + std::string(s) + "'");
}

struct Step {
  std::string id;
  std::string label;
  std::string body;
  Origin origin = Origin::Original;

  friend bool operator==(const Step&, const Step&) = default;
};

// Ordered sequence of task-execution steps. Values are immutable in
// practice: every operator below returns a new path.
struct MethodPath {
  std::vector<Step> steps;
  std::string input_digest;

  std::size_t size() const noexcept { return steps.size(); }
  bool empty() const noexcept { return steps.empty(); }

  friend bool operator==(const MethodPath&, const MethodPath&) = default;
};

// (I, D): base input plus ordered decorations.
struct DecoratedInput {
  std::string base;
  std::vector<Decoration> decorations;

  friend bool operator==(const DecoratedInput&, const DecoratedInput&) = default;
};

// Pure (step, decoration) -> step. An empty returned body is a failure.
using StepRewriter = std::function<Step(const Step&, const Decoration&)>;

inline Step identity_rewriter(const Step& step, const Decoration&) { return step; }

// Rewriter that appends the decoration body as an extra clause on the step.
inline Step appending_rewriter(const Step& step, const Decoration& d) {
  Step out = step;
  if (!d.body.empty()) out.body += "; " + d.body;
  return out;
}

namespace detail {

inline Step rewrite_checked(const StepRewriter& rewriter, const Step& step, const Decoration& d) {
  Step out = rewriter ? rewriter(step, d) : step;
  if (out.body.empty())
    throw Error(ErrorCode::RewriteFailed, "rewriter returned an empty body for step '" + step.id + "'");
  out.origin = Origin::Rewritten;
  return out;
}

}  // namespace detail

// Pre-decoration: (I, D) + d -> (I, D ++ [d]). Duplicates are not re-appended.
inline DecoratedInput apply_pre(const DecoratedInput& input, const Decoration& d) {
  DecoratedInput out = input;
  bool present = std::any_of(out.decorations.begin(), out.decorations.end(),
                             [&](const Decoration& e) { return e.same_as(d); });
  if (!present) out.decorations.push_back(d);
  return out;
}

// Post-decoration: refine the final step of an already generated method.
inline MethodPath apply_post(const MethodPath& method, const Decoration& d,
                             const StepRewriter& rewriter = identity_rewriter) {
  if (method.empty()) throw Error(ErrorCode::PreconditionViolated, "apply_post on an empty path");
  MethodPath out = method;
  out.steps.back() = detail::rewrite_checked(rewriter, method.steps.back(), d);
  return out;
}

// Intermediate-step modification. The decorated step and every step after it
// are rewritten; steps before `index` are untouched.
inline MethodPath modify_step(const MethodPath& method, std::size_t index, const Decoration& d,
                              const StepRewriter& rewriter = identity_rewriter) {
  if (index >= method.size())
    throw Error(ErrorCode::IndexOutOfRange,
                "step index " + std::to_string(index) + " on a path of length " + std::to_string(method.size()));
  MethodPath out = method;
  for (std::size_t i = index; i < out.size(); ++i) out.steps[i] = detail::rewrite_checked(rewriter, method.steps[i], d);
  return out;
}

// Step insertion. `new_step` lands at `index` (0 = before everything) marked
// Inserted; every pre-existing step at or after `index` is marked Rewritten.
inline MethodPath insert_step(const MethodPath& method, std::size_t index, Step new_step) {
  if (index > method.size())
    throw Error(ErrorCode::IndexOutOfRange,
                "insert index " + std::to_string(index) + " on a path of length " + std::to_string(method.size()));
  for (const auto& s : method.steps)
    if (s.id == new_step.id) throw Error(ErrorCode::DuplicateId, "step id '" + new_step.id + "' already present");
  MethodPath out;
  out.input_digest = method.input_digest;
  out.steps.reserve(method.size() + 1);
  for (std::size_t i = 0; i < index; ++i) out.steps.push_back(method.steps[i]);
  new_step.origin = Origin::Inserted;
  out.steps.push_back(std::move(new_step));
  for (std::size_t i = index; i < method.size(); ++i) {
    Step s = method.steps[i];
    s.origin = Origin::Rewritten;
    out.steps.push_back(std::move(s));
  }
  return out;
}

enum class ViolationKind { EmptyPath, DuplicateId, EmptyBody };

constexpr std::string_view to_string(ViolationKind kind) noexcept {
  switch (kind) {
    case ViolationKind::EmptyPath: return "EmptyPath";
    case ViolationKind::DuplicateId: return "DuplicateId";
    case ViolationKind::EmptyBody: return "EmptyBody";
  }
  return "Unknown";
}

struct Violation {
  ViolationKind kind;
  std::size_t step_index = 0;
  std::string detail;
};

// Empty result means the path is well formed.
inline std::vector<Violation> validate(const MethodPath& method) {
  std::vector<Violation> out;
  if (method.empty()) {
    out.push_back({ViolationKind::EmptyPath, 0, "path has no steps"});
    return out;
  }
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < method.size(); ++i) {
    const Step& s = method.steps[i];
    if (!seen.insert(s.id).second) out.push_back({ViolationKind::DuplicateId, i, "duplicate id '" + s.id + "'"});
    if (s.body.empty()) out.push_back({ViolationKind::EmptyBody, i, "step '" + s.id + "' has an empty body"});
  }
  return out;
}

inline bool is_valid(const MethodPath& method) { return validate(method).empty(); }

// One line per step: "<index>. [<origin>] <label>: <body>", 1-based.
inline std::string to_text(const MethodPath& method) {
  std::ostringstream os;
  for (std::size_t i = 0; i < method.size(); ++i) {
    const Step& s = method.steps[i];
    os << (i + 1) << ". [" << to_string(s.origin) << "] " << s.label << ": " << s.body << '\n';
  }
  return os.str();
}

inline nlohmann::json to_json(const MethodPath& method) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : method.steps)
    steps.push_back({{"id", s.id}, {"label", s.label}, {"body", s.body}, {"origin", to_string(s.origin)}});
  nlohmann::json j = {{"steps", std::move(steps)}};
  if (!method.input_digest.empty()) j["input_digest"] = method.input_digest;
  return j;
}

inline MethodPath method_path_from_json(const nlohmann::json& j) {
  try {
    MethodPath out;
    for (const auto& s : j.at("steps"))
      out.steps.push_back({s.at("id").get<std::string>(), s.at("label").get<std::string>(),
                           s.at("body").get<std::string>(), origin_from_string(s.at("origin").get<std::string>())});
    if (j.contains("input_digest")) out.input_digest = j.at("input_digest").get<std::string>();
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad method path document: ") + e.what());
  }
}

}  // namespace deme
