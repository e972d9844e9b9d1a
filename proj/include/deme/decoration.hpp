#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <tuple>

namespace deme {

enum class DecorationKind { Goal, Learned, Environment };

constexpr std::string_view to_string(DecorationKind kind) noexcept {
  switch (kind) {
    case DecorationKind::Goal: return "goal";
    case DecorationKind::Learned: return "learned";
    case DecorationKind::Environment: return "environment";
  }
  return "unknown";
}

// A typed unit of auxiliary input. Two decorations are the same decoration
// when kind, source id and body agree; created_at is metadata only.
struct Decoration {
  DecorationKind kind = DecorationKind::Goal;
  std::string source_id;
  std::string body;
  std::uint64_t created_at = 0;

  bool same_as(const Decoration& other) const noexcept {
    return std::tie(kind, source_id, body) == std::tie(other.kind, other.source_id, other.body);
  }

  friend bool operator==(const Decoration&, const Decoration&) = default;
};

}  // namespace deme
