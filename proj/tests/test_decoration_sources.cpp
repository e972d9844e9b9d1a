#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include "deme/decoration_sources.hpp"
#include "test_support.hpp"

namespace deme {
namespace {

namespace fs = std::filesystem;

fs::path temp_file(const std::string& name) {
  auto dir = fs::temp_directory_path() / "deme_tests";
  fs::create_directories(dir);
  return dir / name;
}

MethodPath one_step(const std::string& body) {
  MethodPath p;
  p.steps.push_back({"s1", "M1", body, Origin::Original});
  return p;
}

TEST(GoalDecoration, MatchesTagCaseInsensitively) {
  GoalRegistry reg{{"brake", "use the backup brake or do not operate"}};
  auto out = derive_goal_decoration("The Brake is broken", reg);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].kind, DecorationKind::Goal);
  EXPECT_EQ(out[0].body, "use the backup brake or do not operate");
}

TEST(GoalDecoration, NoMatchAndEmptyRegistry) {
  GoalRegistry reg{{"brake", "use the backup brake or do not operate"}};
  EXPECT_TRUE(derive_goal_decoration("adjust thermostat", reg).empty());
  EXPECT_TRUE(derive_goal_decoration("brake is broken", GoalRegistry{}).empty());
}

TEST(GoalDecoration, DuplicateTagRejected) {
  GoalRegistry reg{{"brake", "a"}};
  EXPECT_THROW(reg.add("BRAKE", "b"), Error);
}

TEST(LearnedStore, FirstEntryIsBest) {
  LearnedMethodStore store;
  EXPECT_TRUE(store.record("k", one_step("a"), 0.5));
  ASSERT_TRUE(store.best("k"));
  EXPECT_EQ(store.best("k")->method, one_step("a"));
}

TEST(LearnedStore, StrictImprovementOnly) {
  LearnedMethodStore store;
  store.record("k", one_step("a"), 0.7);
  EXPECT_FALSE(store.record("k", one_step("b"), 0.7));
  EXPECT_EQ(store.best("k")->method.steps[0].body, "a");
  EXPECT_TRUE(store.record("k", one_step("c"), 0.9));
  EXPECT_EQ(store.best("k")->method.steps[0].body, "c");
  EXPECT_EQ(store.size(), 3u);
}

TEST(LearnedStore, ValueStyleRecordLeavesInputAlone) {
  LearnedMethodStore store;
  auto r = record_better_method(store, "k", one_step("a"), 0.5);
  EXPECT_TRUE(r.accepted);
  EXPECT_EQ(store.size(), 0u);
  EXPECT_EQ(r.store.size(), 1u);
}

TEST(LearnedStore, NonFiniteScoreRejected) {
  LearnedMethodStore store;
  EXPECT_THROW(store.record("k", one_step("a"), std::nan("")), Error);
}

TEST(RetrieveLearned, AbsentKey) { EXPECT_FALSE(retrieve_learned(LearnedMethodStore{}, "k")); }

TEST(RetrieveLearned, BodyIsSerializedBest) {
  LearnedMethodStore store;
  store.record("k", one_step("slow down early"), 0.4);
  auto d = retrieve_learned(store, "k");
  ASSERT_TRUE(d);
  EXPECT_EQ(d->kind, DecorationKind::Learned);
  EXPECT_NE(d->body.find(to_text(one_step("slow down early"))), std::string::npos);

  store.record("k", one_step("use the backup brake"), 0.9);
  EXPECT_NE(retrieve_learned(store, "k")->body.find("use the backup brake"), std::string::npos);
}

// Best pointer versus a brute-force strict argmax over the recorded history.
TEST(LearnedStore, BestLawRandomized) {
  testing::Gen g(7);
  for (int trial = 0; trial < 200; ++trial) {
    LearnedMethodStore store;
    std::map<std::string, std::vector<std::pair<double, std::string>>> history;
    int n = g.integer(1, 40);
    for (int i = 0; i < n; ++i) {
      auto key = "k" + std::to_string(g.integer(0, 3));
      double score = std::round(g.real(0, 10)) / 2.0;  // coarse, so ties happen
      auto body = "m" + std::to_string(i);
      bool accepted = store.record(key, one_step(body), score);
      auto& h = history[key];
      bool expect = h.empty() || score > std::max_element(h.begin(), h.end())->first;
      EXPECT_EQ(accepted, expect);
      h.emplace_back(score, body);
    }
    for (const auto& [key, h] : history) {
      // earliest entry achieving the max
      auto best = h.front();
      for (const auto& e : h)
        if (e.first > best.first) best = e;
      auto got = store.best(key);
      ASSERT_TRUE(got);
      EXPECT_EQ(got->score, best.first);
      EXPECT_EQ(got->method.steps[0].body, best.second);
    }
  }
}

TEST(StoreFile, EmptyRoundTrip) {
  auto path = temp_file("empty_store.json");
  save_store(LearnedMethodStore{}, path);
  EXPECT_EQ(load_store(path).size(), 0u);
}

TEST(StoreFile, RoundTripRandomStores) {
  testing::Gen g(99);
  auto path = temp_file("store.json");
  for (int trial = 0; trial < 30; ++trial) {
    LearnedMethodStore store;
    int n = g.integer(0, 8);
    for (int i = 0; i < n; ++i) store.record("k" + std::to_string(g.integer(0, 2)), g.path(1, 4), g.real(-5, 5));
    save_store(store, path);
    auto loaded = load_store(path);
    EXPECT_EQ(loaded, store);
    for (int k = 0; k < 3; ++k) {
      auto key = "k" + std::to_string(k);
      EXPECT_EQ(loaded.best(key), store.best(key));
    }
  }
}

TEST(StoreFile, SchemaFields) {
  LearnedMethodStore store;
  store.record("ctx", one_step("a"), 0.25);
  auto j = to_json(store);
  const auto& e = j.at("entries").at(0);
  EXPECT_EQ(e.at("context_key"), "ctx");
  EXPECT_EQ(e.at("score"), 0.25);
  EXPECT_EQ(e.at("recorded_at"), 1);
  EXPECT_EQ(e.at("method").at("steps").at(0).at("body"), "a");
}

TEST(StoreFile, TruncatedIsFormatError) {
  LearnedMethodStore store;
  store.record("k", one_step("a"), 1.0);
  auto path = temp_file("trunc.json");
  save_store(store, path);
  auto size = fs::file_size(path);
  fs::resize_file(path, size / 2);
  try {
    load_store(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FormatError);
  }
}

TEST(StoreFile, MissingFileIsIoError) {
  try {
    load_store(temp_file("does_not_exist.json"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}

TEST(LearnedStore, ConcurrentReadersAndWriter) {
  LearnedMethodStore store;
  std::thread writer([&] {
    for (int i = 0; i < 500; ++i) store.record("k", one_step("m" + std::to_string(i)), i);
  });
  std::vector<std::thread> readers;
  for (int r = 0; r < 4; ++r)
    readers.emplace_back([&] {
      double last = -1;
      for (int i = 0; i < 500; ++i)
        if (auto b = store.best("k")) {
          EXPECT_GE(b->score, last);
          last = b->score;
        }
    });
  writer.join();
  for (auto& t : readers) t.join();
  EXPECT_EQ(store.best("k")->score, 499);
}

TEST(EnvDeltaTest, ZeroAndArithmetic) {
  EnvSnapshot a;
  a.set("T", 28, "degC").set("occupancy", 2, "persons");
  auto z = env_delta(a, a);
  EXPECT_TRUE(z.added.empty());
  EXPECT_TRUE(z.removed.empty());
  for (const auto& [_, q] : z.changes) EXPECT_EQ(q.value, 0.0);

  EnvSnapshot b;
  b.set("T", 27.5, "degC").set("power", 1, "kW");
  auto d = env_delta(a, b);
  EXPECT_DOUBLE_EQ(*d.get("T"), -0.5);
  EXPECT_EQ(d.added, std::vector<std::string>{"power"});
  EXPECT_EQ(d.removed, std::vector<std::string>{"occupancy"});
}

TEST(EnvDeltaTest, UnitMismatch) {
  EnvSnapshot a, b;
  a.set("T", 1, "degC");
  b.set("T", 1, "K");
  try {
    env_delta(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnitMismatch);
  }
}

TEST(EnvDeltaTest, AntisymmetryAndNames) {
  testing::Gen g(5);
  for (int trial = 0; trial < 500; ++trial) {
    auto a = g.snapshot(), b = g.snapshot();
    auto ab = env_delta(a, b), ba = env_delta(b, a);
    for (const auto& [name, q] : ab.changes) EXPECT_EQ(q.value, -ba.changes.at(name).value);
    EXPECT_EQ(ab.added, ba.removed);
    for (const auto& [name, _] : ab.changes) EXPECT_TRUE(a.fields.contains(name) || b.fields.contains(name));
  }
}

TEST(ExtractImpact, Cases) {
  EnvSnapshot a, b;
  a.set("occupancy", 2, "persons").set("T", 28, "degC");
  b.set("occupancy", 0, "persons").set("T", 28, "degC");
  EXPECT_FALSE(extract_impact(env_delta(a, a)));

  ImpactThresholds thr{{{"occupancy", 0.5}}, 0.0};
  auto d = extract_impact(env_delta(a, b), thr);
  ASSERT_TRUE(d);
  EXPECT_EQ(d->kind, DecorationKind::Environment);
  EXPECT_NE(d->body.find("occupancy changed by -2"), std::string::npos);

  EnvSnapshot c;
  c.set("T", 28.05, "degC");
  EnvSnapshot t0;
  t0.set("T", 28.0, "degC");
  EXPECT_FALSE(extract_impact(env_delta(t0, c), ImpactThresholds{{{"T", 0.1}}, 0.0}));
}

TEST(ExtractImpact, ThresholdMonotonicity) {
  testing::Gen g(17);
  for (int trial = 0; trial < 300; ++trial) {
    auto delta = env_delta(g.snapshot(6), g.snapshot(6));
    double lo = g.real(0, 30), hi = lo + g.real(0, 30);
    auto small = impact_set(delta, {{}, lo});
    auto big = impact_set(delta, {{}, hi});
    for (const auto& n : big) EXPECT_NE(std::find(small.begin(), small.end(), n), small.end());
  }
}

TEST(Combine, OrderAndDedup) {
  Decoration g{DecorationKind::Goal, "g", "goal", 0};
  Decoration l{DecorationKind::Learned, "l", "learned", 0};
  Decoration e{DecorationKind::Environment, "e", "env", 0};
  EXPECT_EQ(combine({g}, {l}, {e}), (std::vector<Decoration>{g, l, e}));
  EXPECT_TRUE(combine({}, {}, {}).empty());
  EXPECT_EQ(combine({g, g}, {}, {}), std::vector<Decoration>{g});
  EXPECT_EQ(combine(std::vector<Decoration>{e, l, g}), (std::vector<Decoration>{g, l, e}));
}

TEST(Combine, Idempotent) {
  testing::Gen gen(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Decoration> g, l, e;
    for (int i = gen.integer(0, 4); i > 0; --i) g.push_back(gen.decoration());
    for (int i = gen.integer(0, 4); i > 0; --i) l.push_back(gen.decoration());
    for (int i = gen.integer(0, 4); i > 0; --i) e.push_back(gen.decoration());
    auto once = combine(g, l, e);
    EXPECT_EQ(combine(once), combine(combine(once)));
    EXPECT_EQ(combine(combine(once)), combine(once));
  }
}

}  // namespace
}  // namespace deme
