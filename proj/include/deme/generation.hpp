#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "deme/decoration.hpp"
#include "deme/error.hpp"
#include "deme/method_path.hpp"
#include "deme/util.hpp"

namespace deme {

// f_LLM. Implementations must be safe for concurrent generate() calls.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string generate(std::string_view prompt) = 0;
  virtual std::string name() const = 0;
};

inline std::string_view kind_label(DecorationKind kind) noexcept {
  switch (kind) {
    case DecorationKind::Goal: return "Goal";
    case DecorationKind::Learned: return "Learned method";
    case DecorationKind::Environment: return "Environment feedback";
  }
  return "Note";
}

// Base text, then one "<Kind>: <body>" line per decoration in list order.
inline std::string render_prompt(const DecoratedInput& input) {
  if (input.base.empty()) throw Error(ErrorCode::PreconditionViolated, "prompt base is empty");
  std::string out = input.base;
  for (const auto& d : input.decorations) {
    out += '\n';
    out += kind_label(d.kind);
    out += ": ";
    out += d.body;
  }
  return out;
}

// Splits a free-text response into steps. Lines matching `^\s*\d+[.)]\s+`
// open a new step and following lines continue it; text before the first
// numbered line is dropped. A response without numbered lines is one step.
inline std::vector<std::string> split_numbered_steps(std::string_view response) {
  static const std::regex numbered(R"(^\s*\d+[.)]\s+)");
  std::vector<std::string> bodies;
  bool any_numbered = false;
  for (const auto& line : util::split_lines(response)) {
    std::smatch m;
    if (std::regex_search(line, m, numbered)) {
      any_numbered = true;
      bodies.emplace_back(util::trim(line.substr(m.length(0))));
    } else if (any_numbered) {
      auto rest = util::trim(line);
      if (!rest.empty()) {
        if (!bodies.back().empty()) bodies.back() += ' ';
        bodies.back() += rest;
      }
    }
  }
  if (!any_numbered) {
    auto whole = util::trim(response);
    if (!whole.empty()) bodies.emplace_back(whole);
  }
  std::erase_if(bodies, [](const std::string& b) { return b.empty(); });
  return bodies;
}

inline MethodPath steps_to_path(const std::vector<std::string>& bodies, std::string digest) {
  MethodPath path;
  path.input_digest = std::move(digest);
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    auto n = std::to_string(i + 1);
    path.steps.push_back({"step-" + n, "M" + n, bodies[i], Origin::Original});
  }
  return path;
}

using StepSplitter = std::vector<std::string> (*)(std::string_view);

// Single invocation: I' -> (M1 -> ... -> Mk).
inline MethodPath generate_method(Generator& gen, const DecoratedInput& input,
                                  StepSplitter splitter = &split_numbered_steps) {
  const auto prompt = render_prompt(input);
  std::string response;
  try {
    response = gen.generate(prompt);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::GeneratorError, gen.name() + ": " + e.what());
  }
  auto bodies = splitter(response);
  if (bodies.empty()) throw Error(ErrorCode::EmptyMethod, gen.name() + " returned no steps");
  return steps_to_path(bodies, util::fingerprint(prompt));
}

inline std::string stepwise_prompt(const std::string& rendered, const std::vector<std::string>& so_far) {
  std::string p = rendered;
  if (!so_far.empty()) {
    p += "\nSteps so far:";
    for (std::size_t i = 0; i < so_far.size(); ++i) p += "\n" + std::to_string(i + 1) + ". " + so_far[i];
  }
  p += "\nGive step " + std::to_string(so_far.size() + 1) + " only.";
  return p;
}

// Multiple invocations: I' -> M1 -> M2 -> ..., each prompt carrying the
// steps produced before it. Only the first parsed step of each response is kept.
inline MethodPath generate_stepwise(Generator& gen, const DecoratedInput& input, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::PreconditionViolated, "generate_stepwise needs k >= 1");
  const auto rendered = render_prompt(input);
  std::vector<std::string> bodies;
  for (std::size_t i = 0; i < k; ++i) {
    std::string response;
    try {
      response = gen.generate(stepwise_prompt(rendered, bodies));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::GeneratorError, "step " + std::to_string(i + 1) + ": " + e.what());
    }
    auto parsed = split_numbered_steps(response);
    if (parsed.empty()) throw Error(ErrorCode::EmptyMethod, "step " + std::to_string(i + 1) + " came back empty");
    bodies.push_back(parsed.front());
  }
  return steps_to_path(bodies, util::fingerprint(rendered));
}

// Scripted offline generator keyed by prompt fingerprint (util::fingerprint).
// Unscripted prompts get "1. Respond to: <first line of prompt>".
class MockGenerator final : public Generator {
 public:
  MockGenerator() = default;
  explicit MockGenerator(std::map<std::string, std::string> script) : script_(std::move(script)) {}

  static std::string key_for(std::string_view prompt) { return util::fingerprint(prompt); }

  void script(std::string_view prompt, std::string response) {
    std::lock_guard lock(mutex_);
    script_[key_for(prompt)] = std::move(response);
  }

  std::string generate(std::string_view prompt) override {
    std::lock_guard lock(mutex_);
    prompts_.emplace_back(prompt);
    auto it = script_.find(key_for(prompt));
    if (it != script_.end()) return it->second;
    auto first = util::split_lines(prompt).front();
    return "1. Respond to: " + std::string(util::trim(first));
  }

  std::string name() const override { return "mock"; }

  // Every prompt seen so far, in call order.
  std::vector<std::string> prompts() const {
    std::lock_guard lock(mutex_);
    return prompts_;
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::string> script_;
  std::vector<std::string> prompts_;
};

}  // namespace deme
