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

}  // namespace

TEST(ProfileBuilder, FirstQuestionFromEmptyHistory) {
    auto h = make_harness();
    ProfileBuilder pb(h.ctx);
    const auto q = pb.generate_question(RefinedProfile(sample_profile()), "q-1");
    EXPECT_EQ(q.question_id, "q-1");
    EXPECT_FALSE(q.question.empty());
    EXPECT_FALSE(q.rationale.empty());
    const auto prompt = h.provider->requests().at(0).prompt;
    EXPECT_NE(prompt.find("The answers so far are as follows.\n\n\nAnswer in exactly"),
              std::string::npos);
}

TEST(ProfileBuilder, PromptListsHistoryInOrder) {
    auto h = make_harness();
    ProfileBuilder pb(h.ctx);
    RefinedProfile p(sample_profile());
    std::optional<PendingQuestion> pending;
    for (int i = 1; i <= 3; ++i) {
        pending = pb.generate_question(p, "q-" + std::to_string(i));
        p = pb.apply_answer(p, pending, pending->question_id, i == 2 ? Answer::No : Answer::Yes);
    }
    pb.generate_question(p, "q-4");
    const auto prompt = h.provider->requests().back().prompt;
    std::size_t last = 0;
    for (const auto& e : p.history()) {
        const auto at = prompt.find(e.question());
        ASSERT_NE(at, std::string::npos);
        EXPECT_GE(at, last);
        last = at;
    }
    EXPECT_NE(prompt.find("2. Question: " + std::string(p.history()[1].question()) +
                          "\n   Reason: " + p.history()[1].rationale() + "\n   Answer: No"),
              std::string::npos);
}

TEST(ProfileBuilder, ApplyAnswerIsPure) {
    auto h = make_harness();
    ProfileBuilder pb(h.ctx);
    const RefinedProfile p(sample_profile());
    const PendingQuestion q{"q-1", "Do you commute?", "Use case."};
    const auto next = pb.apply_answer(p, q, "q-1", Answer::Yes);
    EXPECT_EQ(p.version(), 0);
    EXPECT_EQ(next.version(), 1);
    EXPECT_EQ(next.history()[0].answer(), Answer::Yes);
}

TEST(ProfileBuilder, AnswerErrors) {
    auto h = make_harness();
    ProfileBuilder pb(h.ctx);
    const RefinedProfile p(sample_profile());
    const PendingQuestion q{"q-2", "Q?", "R."};
    EXPECT_EQ(code_of([&] { pb.apply_answer(p, std::nullopt, "q-1", Answer::Yes); }),
              ErrorCode::NoPendingQuestion);
    EXPECT_EQ(code_of([&] { pb.apply_answer(p, q, "q-1", Answer::Yes); }), ErrorCode::UnknownQuestion);
}

TEST(ProfileBuilder, RoundLimit) {
    PipelineConfig config;
    config.max_rounds = 10;
    auto h = make_harness(1, config);
    ProfileBuilder pb(h.ctx);
    RefinedProfile p(sample_profile());
    for (int i = 1; i <= 10; ++i) {
        auto q = pb.generate_question(p, "q-" + std::to_string(i));
        p = pb.apply_answer(p, q, q.question_id, Answer::Yes);
    }
    EXPECT_EQ(p.version(), 10);
    const auto calls = h.provider->call_count();
    EXPECT_EQ(code_of([&] { pb.generate_question(p, "q-11"); }), ErrorCode::RoundLimitReached);
    EXPECT_EQ(h.provider->call_count(), calls);
}

TEST(ProfileBuilder, ParseFailureSurfacesAfterRetries) {
    auto h = make_harness();
    h.provider->set_handler([](const llm::CompletionRequest&) { return std::optional<std::string>("??"); });
    ProfileBuilder pb(h.ctx);
    EXPECT_EQ(code_of([&] { pb.generate_question(RefinedProfile(sample_profile()), "q-1"); }),
              ErrorCode::ParseFailure);
    EXPECT_EQ(h.provider->call_count(), 4u);
}
