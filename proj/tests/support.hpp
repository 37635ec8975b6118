#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "popforge/llm/gateway.hpp"
#include "popforge/pipeline.hpp"
#include "popforge/session.hpp"

namespace popforge::testing {

inline const char* corpus_dir() { return POPFORGE_CORPUS_DIR; }
inline std::string data_path(const std::string& name) {
    return std::string(POPFORGE_TEST_DATA) + "/" + name;
}

/// Answers from a handler; falls back to the mock corpus when the handler
/// returns nothing.
class ScriptedProvider final : public llm::Provider {
public:
    using Handler = std::function<std::optional<std::string>(const llm::CompletionRequest&)>;

    explicit ScriptedProvider(std::uint64_t seed = 1) : mock_(corpus_dir(), seed) {}

    std::string complete(const llm::CompletionRequest& request) override {
        Handler handler;
        {
            std::lock_guard lock(mu_);
            requests_.push_back(request);
            if (!queue_.empty()) {
                auto next = std::move(queue_.front());
                queue_.pop_front();
                handler = [next](const llm::CompletionRequest&) { return next(); };
            } else {
                handler = handler_;
            }
        }
        if (handler) {
            if (auto r = handler(request)) return *r;
        }
        return mock_.complete(request);
    }

    /// One-shot responses consumed in order before the handler.
    void push(std::function<std::optional<std::string>()> step) {
        std::lock_guard lock(mu_);
        queue_.push_back(std::move(step));
    }
    void push_text(std::string text) {
        push([text] { return std::optional<std::string>(text); });
    }
    void push_error(ErrorCode code) {
        push([code]() -> std::optional<std::string> { fail(code, "injected"); });
    }
    void set_handler(Handler h) {
        std::lock_guard lock(mu_);
        handler_ = std::move(h);
    }
    std::vector<llm::CompletionRequest> requests() const {
        std::lock_guard lock(mu_);
        return requests_;
    }
    std::size_t call_count() const {
        std::lock_guard lock(mu_);
        return requests_.size();
    }

private:
    llm::MockProvider mock_;
    mutable std::mutex mu_;
    std::deque<std::function<std::optional<std::string>()>> queue_;
    Handler handler_;
    std::vector<llm::CompletionRequest> requests_;
};

struct Harness {
    std::shared_ptr<ScriptedProvider> provider;
    std::shared_ptr<llm::Gateway> gateway;
    StageContext ctx;
};

inline Harness make_harness(std::uint64_t seed = 1, PipelineConfig config = {}) {
    Harness h;
    h.provider = std::make_shared<ScriptedProvider>(seed);
    auto pc = llm::ProviderConfig::mock(corpus_dir(), seed);
    h.gateway = std::make_shared<llm::Gateway>(pc, h.provider);
    h.gateway->set_sleeper([](std::chrono::milliseconds) {});
    h.ctx = StageContext{h.gateway, std::make_shared<const llm::TemplateSet>(llm::TemplateSet::defaults()),
                         std::move(config)};
    return h;
}

inline StageContext mock_context(std::uint64_t seed) {
    auto gateway = llm::Gateway::from_config(llm::ProviderConfig::mock(corpus_dir(), seed));
    return StageContext{gateway, std::make_shared<const llm::TemplateSet>(llm::TemplateSet::defaults()),
                        PipelineConfig{}};
}

inline UserProvidedProfile sample_profile() {
    return UserProvidedProfile(Gender::Female, "women in their 20s",
                               "High-waisted wide pants with a center crease, in beige and navy");
}

inline Persona sample_persona(int age, int version = 0) {
    return Persona(age, "Office worker", "Single", "Commutes by train",
                   {"Comfortable", "Wrinkle resistant", "Easy care"},
                   {"Slim look", "Good price", "Soft fabric"}, version);
}

inline PersonaSet sample_personas(int version = 0) {
    return {sample_persona(24, version), sample_persona(37, version), sample_persona(52, version)};
}

/// Six rephrased pops under "pop-1", ids pop-2..pop-7.
inline std::vector<PopText> sample_round_pops() {
    std::vector<PopText> pops;
    for (std::size_t i = 0; i < kAllMotives.size(); ++i) {
        pops.push_back(PopText::rephrased("pop-" + std::to_string(i + 2), "Catch " + std::to_string(i),
                                          "Explanation " + std::to_string(i), "pop-1",
                                          kAllMotives[i], 0));
    }
    return pops;
}

/// A round whose rating for (persona p, pop q) is ratings[p][q].
inline EvaluationRound make_round(const std::array<std::array<int, 6>, 3>& ratings,
                                  std::string round_id = "round-1") {
    std::vector<std::string> ids;
    for (std::size_t q = 0; q < 6; ++q) ids.push_back("pop-" + std::to_string(q + 2));
    std::vector<PersonaEvaluation> evals;
    for (int p = 0; p < 3; ++p) {
        for (std::size_t q = 0; q < 6; ++q) {
            evals.emplace_back(p, ids[q], ratings[static_cast<std::size_t>(p)][q], "reason");
        }
    }
    return EvaluationRound(std::move(round_id), sample_personas(), ids, evals);
}

}  // namespace popforge::testing
