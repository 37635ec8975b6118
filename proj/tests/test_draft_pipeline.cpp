#include <set>

#include <gtest/gtest.h>

#include "popforge/pipeline.hpp"
#include "support.hpp"

using namespace popforge;
using popforge::testing::make_harness;
using popforge::testing::sample_profile;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no exception";
    return ErrorCode::Io;
}

PopText sized(std::size_t catch_len, std::size_t exp_len) {
    return PopText::initial("pop-1", std::string(catch_len, 'c'), std::string(exp_len, 'e'), 0);
}

}  // namespace

TEST(LengthPolicy, Examples) {
    const LengthPolicy defaults;
    EXPECT_TRUE(validate_lengths(sized(10, 50), defaults).empty());
    const auto w = validate_lengths(sized(25, 50), defaults);
    ASSERT_EQ(w.size(), 1u);
    EXPECT_EQ(w[0].field, LengthWarning::Field::Catchphrase);
    EXPECT_DOUBLE_EQ(w[0].upper, 15.0);
    EXPECT_TRUE(validate_lengths(sized(15, 25), defaults).empty());
    EXPECT_EQ(validate_lengths(sized(4, 76), defaults).size(), 2u);

    LengthPolicy wide{10, 50, 1.0};
    for (std::size_t n = 1; n <= 20; ++n) {
        EXPECT_TRUE(validate_lengths(sized(n, 50), wide).empty()) << n;
    }
}

TEST(LengthPolicy, CountsScalarsNotBytes) {
    std::string ten_kana;
    for (int i = 0; i < 10; ++i) ten_kana += "\xE3\x81\x82";
    const auto pop = PopText::initial("pop-1", ten_kana, std::string(50, 'e'), 0);
    EXPECT_TRUE(validate_lengths(pop, LengthPolicy{}).empty());
}

TEST(LengthPolicy, Validate) {
    EXPECT_ANY_THROW((LengthPolicy{0, 50, 0.5}.validate()));
    EXPECT_ANY_THROW((LengthPolicy{10, 50, 1.5}.validate()));
    EXPECT_NO_THROW((LengthPolicy{10, 50, 0.0}.validate()));
}

TEST(DraftPipeline, GenerateDraftCarriesVersion) {
    auto h = make_harness();
    DraftPipeline dg(h.ctx);
    const auto profile = RefinedProfile(sample_profile()).appended("q-1", "Q?", "R.", Answer::No);
    const auto d = dg.generate_draft(profile, "pop-1");
    EXPECT_EQ(d.kind(), PopText::Kind::Initial);
    EXPECT_EQ(d.profile_version(), 1);
    EXPECT_EQ(dg.generate_draft(profile, "pop-1"), d);
}

TEST(DraftPipeline, RephraseTree) {
    auto h = make_harness();
    DraftPipeline dg(h.ctx);
    const RefinedProfile profile(sample_profile());
    PopForest forest;
    forest.add(dg.generate_draft(profile, "pop-1"));
    IdSequence ids("pop", 2);

    const auto first = dg.rephrase_all(forest, "pop-1", profile, ids);
    ASSERT_EQ(first.size(), 6u);
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_EQ(first[i].motive(), kAllMotives[i]);
        EXPECT_EQ(first[i].parent_id(), "pop-1");
        forest.add(first[i]);
    }
    EXPECT_EQ(ids.peek(), 8);

    const auto second = dg.rephrase_all(forest, "pop-3", profile, ids);
    for (const auto& p : second) {
        EXPECT_EQ(p.parent_id(), "pop-3");
        forest.add(p);
    }
    EXPECT_EQ(forest.size(), 13u);
    EXPECT_EQ(forest.children("pop-1").size(), 6u);
    EXPECT_EQ(forest.children("pop-3").size(), 6u);
    EXPECT_EQ(forest.path_to("pop-9").size(), 3u);
    EXPECT_TRUE(forest.is_well_formed());

    const auto prompts = h.provider->requests();
    const auto& last = prompts.back().prompt;
    EXPECT_NE(last.find("Rephrase this into a sentence focusing on the combination."), std::string::npos);
    EXPECT_EQ(last.rfind(forest.at("pop-3").catchphrase() + "\n", 0), 0u);
}

TEST(DraftPipeline, UnknownSource) {
    auto h = make_harness();
    DraftPipeline dg(h.ctx);
    PopForest forest;
    IdSequence ids("pop");
    EXPECT_EQ(code_of([&] { dg.rephrase_all(forest, "pop-9", RefinedProfile(sample_profile()), ids); }),
              ErrorCode::UnknownSource);
    EXPECT_EQ(ids.peek(), 1);
}

TEST(DraftPipeline, FanOutIsAtomic) {
    auto h = make_harness();
    DraftPipeline dg(h.ctx);
    const RefinedProfile profile(sample_profile());
    PopForest forest;
    forest.add(dg.generate_draft(profile, "pop-1"));
    int rephrase_calls = 0;
    h.provider->set_handler([&](const llm::CompletionRequest& r) -> std::optional<std::string> {
        if (r.template_id == llm::TemplateId::SrRephrase && ++rephrase_calls == 4) {
            fail(ErrorCode::AuthFailure, "key revoked");
        }
        return std::nullopt;
    });
    IdSequence ids("pop", 2);
    EXPECT_EQ(code_of([&] { dg.rephrase_all(forest, "pop-1", profile, ids); }), ErrorCode::AuthFailure);
    EXPECT_EQ(ids.peek(), 2);
    EXPECT_EQ(forest.size(), 1u);
}

TEST(ApplyUserEdit, Behaviour) {
    const auto src = PopText::rephrased("pop-5", "c", "e", "pop-1", PurchaseMotive::OthersApproval, 2);
    const auto e = apply_user_edit(src, "c", "e", "pop-8");
    EXPECT_TRUE(e.edited_by_user());
    EXPECT_EQ(e.parent_id(), "pop-5");
    EXPECT_FALSE(e.motive().has_value());
    EXPECT_EQ(e.profile_version(), 2);
    EXPECT_EQ(code_of([&] { apply_user_edit(src, "", "e", "pop-9"); }), ErrorCode::EmptyText);
}

TEST(PopForest, RejectsDanglingAndDuplicate) {
    PopForest f;
    f.add(PopText::initial("pop-1", "c", "e", 0));
    EXPECT_ANY_THROW(f.add(PopText::initial("pop-1", "c", "e", 0)));
    EXPECT_ANY_THROW(f.add(PopText::edited("pop-2", "c", "e", "pop-7", 0)));
    EXPECT_EQ(code_of([&] { f.at("pop-7"); }), ErrorCode::UnknownPop);
}
