#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deme/error.hpp"
#include "deme/util.hpp"

namespace deme {

using Embedding = std::vector<double>;

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual Embedding embed(std::string_view text) = 0;
  virtual std::string name() const = 0;
};

// Lowercased alphanumeric word tokens.
inline std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

// Bag of words: unigram counts hashed (FNV-1a) into a fixed number of buckets.
class HashingEmbedder final : public Embedder {
 public:
  static constexpr std::size_t kDefaultBuckets = 1024;

  explicit HashingEmbedder(std::size_t buckets = kDefaultBuckets) : buckets_(buckets) {}

  static std::size_t bucket_of(std::string_view word, std::size_t buckets) {
    return static_cast<std::size_t>(util::fnv1a64(word) % buckets);
  }

  Embedding embed(std::string_view text) override {
    if (util::trim(text).empty()) throw Error(ErrorCode::PreconditionViolated, "cannot embed empty text");
    Embedding v(buckets_, 0.0);
    for (const auto& w : tokenize_words(text)) v[bucket_of(w, buckets_)] += 1.0;
    return v;
  }

  std::string name() const override { return "hashing-bow-" + std::to_string(buckets_); }

  std::size_t dimensions() const noexcept { return buckets_; }

 private:
  std::size_t buckets_;
};

inline double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw Error(ErrorCode::DimensionMismatch,
                "vectors have dimensions " + std::to_string(u.size()) + " and " + std::to_string(v.size()));
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw Error(ErrorCode::ZeroVector, "cosine similarity of a zero vector");
  double c = dot / (std::sqrt(uu) * std::sqrt(vv));
  // rounding can push |c| a hair past 1
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return c;
}

}  // namespace deme
