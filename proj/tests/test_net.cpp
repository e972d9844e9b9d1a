#include <gtest/gtest.h>

#include <cstdlib>

#include "deme/net.hpp"

namespace deme::net {
namespace {

TEST(ChatRequest, Shape) {
  auto j = build_chat_request("m", "hello", 0.0);
  EXPECT_EQ(j.at("model"), "m");
  EXPECT_EQ(j.at("temperature"), 0.0);
  ASSERT_EQ(j.at("messages").size(), 1u);
  EXPECT_EQ(j.at("messages")[0].at("role"), "user");
  EXPECT_EQ(j.at("messages")[0].at("content"), "hello");
}

TEST(ChatResponse, Parse) {
  EXPECT_EQ(parse_chat_response(R"({"choices":[{"message":{"role":"assistant","content":"1. go"}}]})"), "1. go");
  EXPECT_THROW(parse_chat_response("not json"), Error);
  EXPECT_THROW(parse_chat_response(R"({"choices":[]})"), Error);
  try {
    parse_chat_response(R"({"error":{"message":"bad key"}})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GeneratorError);
  }
}

TEST(EmbeddingResponse, Parse) {
  auto v = parse_embedding_response(R"({"data":[{"embedding":[0.5,-1,2]}]})");
  EXPECT_EQ(v, (Embedding{0.5, -1, 2}));
  try {
    parse_embedding_response(R"({"data":[]})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmbedderError);
  }
  EXPECT_EQ(build_embedding_request("e", "txt").at("input"), "txt");
}

TEST(Url, Split) {
  auto s = split_url("https://api.example.com:8443/v1/chat/completions");
  EXPECT_EQ(s.origin, "https://api.example.com:8443");
  EXPECT_EQ(s.path, "/v1/chat/completions");
  EXPECT_EQ(split_url("http://host").path, "/");
  EXPECT_THROW(split_url("host/path"), Error);
}

TEST(Endpoint, DefaultTimeout) { EXPECT_EQ(Endpoint{}.timeout.count(), 30); }

// The gate is closed by default and remote clients refuse before connecting.
TEST(OfflineGate, RemoteClientsRefuse) {
  set_network_allowed(false);
  RemoteGenerator gen({"http://127.0.0.1:9/v1/chat/completions", "m", "k"});
  try {
    gen.generate("hello");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NetworkDisabled);
  }
  RemoteEmbedder emb({"http://127.0.0.1:9/v1/embeddings", "m", "k"});
  try {
    emb.embed("hello");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NetworkDisabled);
  }
}

TEST(ApiKey, FromEnvironment) {
  ::setenv(kApiKeyVariable, "secret", 1);
  EXPECT_EQ(api_key_from_env(), "secret");
  ::unsetenv(kApiKeyVariable);
  EXPECT_FALSE(api_key_from_env());
}

}  // namespace
}  // namespace deme::net
