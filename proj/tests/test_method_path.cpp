#include <gtest/gtest.h>

#include <algorithm>

#include "deme/method_path.hpp"
#include "test_support.hpp"

namespace deme {
namespace {

using testing::ids_of;

MethodPath make_path(std::initializer_list<const char*> labels) {
  MethodPath p;
  for (const char* l : labels) p.steps.push_back({l, l, std::string("do ") + l, Origin::Original});
  return p;
}

const Decoration kGoal{DecorationKind::Goal, "g1", "respect the safety goal", 0};
const Decoration kLearned{DecorationKind::Learned, "l1", "use the backup brake", 0};

TEST(ApplyPre, AppendsToEmptyList) {
  DecoratedInput in{"cool room", {}};
  auto out = apply_pre(in, kGoal);
  EXPECT_EQ(out.base, "cool room");
  ASSERT_EQ(out.decorations.size(), 1u);
  EXPECT_EQ(out.decorations[0], kGoal);
}

TEST(ApplyPre, DropsDuplicate) {
  auto once = apply_pre({"cool room", {}}, kGoal);
  auto twice = apply_pre(once, kGoal);
  EXPECT_EQ(twice, once);
  // created_at is metadata, not identity
  Decoration later = kGoal;
  later.created_at = 99;
  EXPECT_EQ(apply_pre(once, later).decorations.size(), 1u);
}

TEST(ApplyPre, PreservesOrder) {
  auto out = apply_pre(apply_pre({"cool room", {}}, kGoal), kLearned);
  ASSERT_EQ(out.decorations.size(), 2u);
  EXPECT_EQ(out.decorations[0], kGoal);
  EXPECT_EQ(out.decorations[1], kLearned);
}

TEST(ApplyPost, IdentityKeepsBodies) {
  auto p = make_path({"M1", "M2"});
  auto out = apply_post(p, kGoal);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out.steps[0], p.steps[0]);
  EXPECT_EQ(out.steps[1].body, p.steps[1].body);
}

TEST(ApplyPost, RewritesOnlyLastStep) {
  auto p = make_path({"M1", "M2"});
  Decoration d{DecorationKind::Learned, "x", "verify threshold", 0};
  auto out = apply_post(p, d, appending_rewriter);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out.steps[0], p.steps[0]);
  EXPECT_EQ(out.steps[1].origin, Origin::Rewritten);
  EXPECT_NE(out.steps[1].body.find("verify threshold"), std::string::npos);
}

TEST(ApplyPost, SingleStepPath) {
  auto out = apply_post(make_path({"M1"}), kGoal, appending_rewriter);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.steps[0].origin, Origin::Rewritten);
}

TEST(ApplyPost, EmptyBodyIsRewriteFailed) {
  auto blank = [](const Step& s, const Decoration&) {
    Step o = s;
    o.body.clear();
    return o;
  };
  try {
    apply_post(make_path({"M1"}), kGoal, blank);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RewriteFailed);
  }
}

TEST(ModifyStep, DecoratingFirstStepPrimesEverything) {
  auto p = make_path({"Ma", "Mb", "Mc", "Md"});
  auto out = modify_step(p, 0, kLearned, appending_rewriter);
  ASSERT_EQ(out.size(), 4u);
  for (const auto& s : out.steps) EXPECT_EQ(s.origin, Origin::Rewritten);
  EXPECT_EQ(ids_of(out), ids_of(p));
}

TEST(ModifyStep, IdentityOnLastIndex) {
  auto p = make_path({"Ma", "Mb"});
  auto out = modify_step(p, 1, kGoal);
  EXPECT_EQ(out.steps[0], p.steps[0]);
  EXPECT_EQ(out.steps[1].body, p.steps[1].body);
  EXPECT_EQ(out.steps[1].origin, Origin::Rewritten);
}

TEST(ModifyStep, OutOfRange) {
  try {
    modify_step(make_path({"Ma", "Mb"}), 5, kGoal);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndexOutOfRange);
  }
}

TEST(InsertStep, AtFrontPrimesDownstream) {
  auto out = insert_step(make_path({"Ma", "Mb"}), 0, {"N", "N", "verify", Origin::Original});
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(ids_of(out), (std::vector<std::string>{"N", "Ma", "Mb"}));
  EXPECT_EQ(out.steps[0].origin, Origin::Inserted);
  EXPECT_EQ(out.steps[1].origin, Origin::Rewritten);
  EXPECT_EQ(out.steps[2].origin, Origin::Rewritten);
}

TEST(InsertStep, IntoEmptyPath) {
  auto out = insert_step(MethodPath{}, 0, {"N", "N", "verify", Origin::Original});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(is_valid(out));
}

TEST(InsertStep, AtEndLeavesPrefixUntouched) {
  auto p = make_path({"Ma"});
  auto out = insert_step(p, 1, {"N", "N", "verify", Origin::Original});
  EXPECT_EQ(ids_of(out), (std::vector<std::string>{"Ma", "N"}));
  EXPECT_EQ(out.steps[0], p.steps[0]);
}

TEST(InsertStep, Errors) {
  auto p = make_path({"Ma"});
  try {
    insert_step(p, 2, {"N", "N", "x", Origin::Original});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndexOutOfRange);
  }
  try {
    insert_step(p, 0, {"Ma", "N", "x", Origin::Original});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateId);
  }
}

TEST(Validate, Cases) {
  EXPECT_TRUE(validate(make_path({"a", "b", "c"})).empty());

  auto dup = make_path({"a", "b"});
  dup.steps[1].id = "a";
  auto v = validate(dup);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, ViolationKind::DuplicateId);

  auto empty = validate(MethodPath{});
  ASSERT_EQ(empty.size(), 1u);
  EXPECT_EQ(empty[0].kind, ViolationKind::EmptyPath);

  auto blank = make_path({"a"});
  blank.steps[0].body.clear();
  ASSERT_EQ(validate(blank).size(), 1u);
  EXPECT_EQ(validate(blank)[0].kind, ViolationKind::EmptyBody);
}

TEST(Serialization, TextForm) {
  auto p = insert_step(make_path({"Ma"}), 0, {"N", "N", "verify", Origin::Original});
  EXPECT_EQ(to_text(p), "1. [inserted] N: verify\n2. [rewritten] Ma: do Ma\n");
}

TEST(Serialization, JsonGolden) {
  auto p = make_path({"Ma"});
  EXPECT_EQ(to_json(p).dump(), R"({"steps":[{"body":"do Ma","id":"Ma","label":"Ma","origin":"original"}]})");
}

TEST(Serialization, JsonRoundTripProperty) {
  testing::Gen g(11);
  for (int i = 0; i < 100; ++i) {
    auto p = g.path(0, 6);
    if (g.coin()) p = insert_step(p, static_cast<std::size_t>(g.integer(0, static_cast<int>(p.size()))),
                                  {"new", "N", g.sentence(), Origin::Original});
    p.input_digest = g.coin() ? "abc" : "";
    EXPECT_EQ(method_path_from_json(nlohmann::json::parse(to_json(p).dump())), p);
  }
}

TEST(Serialization, BadOriginIsFormatError) {
  auto j = nlohmann::json::parse(R"({"steps":[{"id":"a","label":"a","body":"b","origin":"weird"}]})");
  try {
    method_path_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FormatError);
  }
}

// Operator laws over random paths.
TEST(OperatorLaws, RandomPaths) {
  testing::Gen g(2024);
  for (int trial = 0; trial < 500; ++trial) {
    auto p = g.path(1, 10);
    auto d = g.decoration();
    const auto n = p.size();

    auto idx = static_cast<std::size_t>(g.integer(0, static_cast<int>(n)));
    Step fresh{"fresh", "N", g.sentence(), Origin::Original};
    auto ins = insert_step(p, idx, fresh);
    ASSERT_EQ(ins.size(), n + 1);
    auto ids = ids_of(ins);
    ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(idx));
    EXPECT_EQ(ids, ids_of(p));
    EXPECT_TRUE(is_valid(ins));

    auto post = apply_post(p, d, appending_rewriter);
    for (std::size_t i = 0; i + 1 < n; ++i) EXPECT_EQ(post.steps[i].body, p.steps[i].body);

    auto at = static_cast<std::size_t>(g.integer(0, static_cast<int>(n) - 1));
    auto mod = modify_step(p, at, d, appending_rewriter);
    for (std::size_t i = 0; i < at; ++i) EXPECT_EQ(mod.steps[i], p.steps[i]);
    for (std::size_t i = at; i < n; ++i) EXPECT_EQ(mod.steps[i].origin, Origin::Rewritten);

    // operators never mutate their input
    EXPECT_TRUE(std::all_of(p.steps.begin(), p.steps.end(), [](const Step& s) { return s.origin == Origin::Original; }));
  }
}

}  // namespace
}  // namespace deme
