#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "popforge/config.hpp"
#include "popforge/script.hpp"
#include "support.hpp"

using namespace popforge;
namespace pt = popforge::testing;
using nlohmann::json;
using popforge::testing::corpus_dir;
using popforge::testing::data_path;
using popforge::testing::mock_context;

TEST(Config, ResolvesRelativePaths) {
    const json j = {{"provider", {{"provider_kind", "mock"}, {"corpus_path", "corpus"}, {"seed", 7}}},
                    {"pipeline", {{"max_rounds", 4}, {"length_policy", {{"catchphrase_target", 12}}}}},
                    {"templates_dir", "prompts"},
                    {"data_dir", "/var/lib/popforge"}};
    const auto c = AppConfig::from_json(j, "/etc/popforge");
    EXPECT_EQ(c.provider.corpus_path, "/etc/popforge/corpus");
    EXPECT_EQ(c.provider.seed, 7u);
    EXPECT_EQ(c.pipeline.max_rounds, 4);
    EXPECT_EQ(c.pipeline.length_policy.catchphrase_target, 12);
    EXPECT_EQ(c.pipeline.length_policy.explanation_target, 50);
    EXPECT_EQ(c.templates_dir, std::filesystem::path("/etc/popforge/prompts"));
    EXPECT_EQ(c.data_dir, std::filesystem::path("/var/lib/popforge"));
}

TEST(Config, RemotePresetDefaults) {
    const json j = {{"provider", {{"provider_kind", "remote_api"}, {"endpoint", "https://api.openai.com/v1"}}}};
    const auto c = AppConfig::from_json(j);
    EXPECT_EQ(c.provider.kind, llm::ProviderConfig::Kind::RemoteApi);
    EXPECT_EQ(c.provider.model_id, "gpt-4o-mini");
    EXPECT_EQ(c.provider.api_key_env, "POPFORGE_API_KEY");
    EXPECT_EQ(c.provider.max_retries, 3);
}

TEST(Config, RejectsInvalid) {
    EXPECT_ANY_THROW(AppConfig::from_json({{"provider", {{"provider_kind", "remote_api"}, {"endpoint", ""}}}}));
    EXPECT_ANY_THROW(AppConfig::from_json({{"provider", {{"provider_kind", "mock"}, {"corpus_path", "c"}}}}));
    EXPECT_ANY_THROW(AppConfig::from_json({{"provider", {{"provider_kind", "carrier-pigeon"}}}}));
    EXPECT_ANY_THROW(AppConfig::from_json(
        {{"provider", {{"provider_kind", "mock"}, {"corpus_path", "c"}, {"seed", 1}}},
         {"pipeline", {{"length_policy", {{"tolerance_ratio", 2.0}}}}}}));
}

TEST(Config, MotiveLabelsAndEnvDataDir) {
    const json j = {{"provider", {{"provider_kind", "mock"}, {"corpus_path", corpus_dir()}, {"seed", 1}}},
                    {"pipeline", {{"motive_labels", {{"Fashionability", "trendiness"}}}}},
                    {"data_dir", "/tmp/from-config"}};
    const auto c = AppConfig::from_json(j);
    EXPECT_EQ(c.pipeline.motive_labels[PurchaseMotive::Fashionability], "trendiness");
    EXPECT_EQ(c.pipeline.motive_labels[PurchaseMotive::Combination], "combination");
    ::setenv("POPFORGE_DATA_DIR", "/tmp/from-env", 1);
    EXPECT_EQ(resolve_data_dir(c), std::filesystem::path("/tmp/from-env"));
    ::unsetenv("POPFORGE_DATA_DIR");
    EXPECT_EQ(resolve_data_dir(c), std::filesystem::path("/tmp/from-config"));

    const auto ctx = make_context(c);
    DraftPipeline dg(ctx);
    const auto prompt = dg.render_rephrase_prompt(PopText::initial("pop-1", "c", "e", 0),
                                                  PurchaseMotive::Fashionability,
                                                  RefinedProfile(pt::sample_profile()));
    EXPECT_NE(prompt.find("focusing on the trendiness."), std::string::npos);
}

TEST(Script, DemoScriptRuns) {
    std::ifstream in(data_path("demo_script.json"));
    const auto script = json::parse(in);
    SessionService svc(mock_context(7));
    const auto outcome = run_script(svc, script);
    EXPECT_EQ(outcome.steps_run, 6u);
    const auto s = svc.get(outcome.session_id);
    EXPECT_EQ(s->state(), SessionState::Finalized);
    EXPECT_EQ(s->profile.version(), 3);
    EXPECT_EQ(s->rounds.size(), 2u);
    EXPECT_EQ(s->rounds[1].source_pop_id, select_best(s->rounds[0].round));
}

TEST(Script, PopReferences) {
    SessionService svc(mock_context(1));
    const auto id = svc.create_session(pt::sample_profile());
    const auto r = svc.rephrase_from(id, "pop-1");
    const auto s = svc.get(id);
    EXPECT_EQ(resolve_pop_ref(*s, "current_draft"), "pop-1");
    EXPECT_EQ(resolve_pop_ref(*s, "last"), "pop-7");
    EXPECT_EQ(resolve_pop_ref(*s, "best"), select_best(r.round));
    EXPECT_EQ(resolve_pop_ref(*s, json{{"round", -1}, {"index", 2}}), "pop-4");
    EXPECT_EQ(resolve_pop_ref(*s, "pop-3"), "pop-3");
    EXPECT_ANY_THROW(resolve_pop_ref(*s, "pop-30"));
    EXPECT_ANY_THROW(resolve_pop_ref(*s, json{{"round", 3}, {"index", 0}}));
    EXPECT_ANY_THROW(run_script(svc, json{{"profile", json::object()}}));
    EXPECT_ANY_THROW(run_script(svc, json{{"profile", pt::sample_profile()},
                                          {"steps", {{{"op", "dance"}}}}}));
}
