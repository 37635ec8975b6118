#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "popforge/llm/templates.hpp"

namespace popforge::llm {

inline constexpr const char* kDefaultModel = "gpt-4o-mini";
inline constexpr const char* kDefaultApiKeyEnv = "POPFORGE_API_KEY";

/// Optional overrides; unset fields are omitted so the provider applies its
/// own defaults.
struct SamplingParams {
    std::optional<double> temperature;
    std::optional<double> top_p;

    friend bool operator==(const SamplingParams&, const SamplingParams&) = default;
};

struct CompletionRequest {
    std::string prompt;
    std::string model_id;
    SamplingParams sampling;
    /// Routing tag; the mock uses it to pick the fixture file.
    std::optional<TemplateId> template_id;
};

struct ProviderConfig {
    enum class Kind { RemoteApi, Mock };

    Kind kind = Kind::Mock;
    std::string endpoint;  // e.g. https://api.openai.com/v1
    std::string model_id = kDefaultModel;
    std::string api_key_env = kDefaultApiKeyEnv;
    int max_retries = 3;
    std::chrono::seconds timeout{60};
    std::filesystem::path corpus_path;  // mock only
    std::optional<std::uint64_t> seed;  // mock only
    SamplingParams sampling;
    /// First backoff delay; doubles per retry.
    std::chrono::milliseconds backoff_base{500};

    /// Throws Validation when a required field for the kind is missing.
    void validate() const;

    /// Preset matching the original deployment: OpenAI, gpt-4o-mini, provider defaults.
    static ProviderConfig openai_preset();
    static ProviderConfig mock(std::filesystem::path corpus, std::uint64_t seed);

    static ProviderConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// One chat-completion backend. Implementations throw Error with Transport,
/// Timeout (both retriable) or AuthFailure.
class Provider {
public:
    virtual ~Provider() = default;
    virtual std::string complete(const CompletionRequest& request) = 0;
};

/// Deterministic offline provider. The corpus is a directory holding one
/// `<template_id>.txt` file per template; entries are separated by lines
/// consisting of `---`. The returned entry is a pure function of
/// (SHA-256 of the prompt, seed, corpus).
class MockProvider final : public Provider {
public:
    MockProvider(const std::filesystem::path& corpus, std::uint64_t seed);

    std::string complete(const CompletionRequest& request) override;

    std::size_t entry_count(TemplateId id) const;

private:
    std::map<TemplateId, std::vector<std::string>> entries_;
    std::uint64_t seed_;
};

/// OpenAI-compatible `/chat/completions` adapter.
class RemoteProvider final : public Provider {
public:
    explicit RemoteProvider(ProviderConfig config);

    std::string complete(const CompletionRequest& request) override;

    static nlohmann::json request_body(const CompletionRequest& request);
    /// Extracts choices[0].message.content; throws Transport on schema mismatch.
    static std::string response_text(const nlohmann::json& body);

private:
    ProviderConfig config_;
};

/// Splits a corpus file into entries (trimmed, empties dropped).
std::vector<std::string> split_corpus_entries(std::string_view text);

/// First 8 bytes of SHA-256(text), big-endian.
std::uint64_t prompt_hash(std::string_view text);

/// Shared entry point for all modules: validates, retries retriable
/// failures with exponential backoff, and optionally records every exchange.
class Gateway {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    struct Exchange {
        CompletionRequest request;
        std::string response;
    };
    using Observer = std::function<void(const Exchange&)>;

    Gateway(ProviderConfig config, std::shared_ptr<Provider> provider);

    /// Builds the provider the config names.
    static std::shared_ptr<Gateway> from_config(const ProviderConfig& config);

    std::string complete(CompletionRequest request) const;

    /// Renders a template and completes it with the configured model.
    std::string complete(TemplateId id, std::string prompt) const;

    const ProviderConfig& config() const noexcept { return config_; }

    void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }
    void set_observer(Observer observer) { observer_ = std::move(observer); }

private:
    ProviderConfig config_;
    std::shared_ptr<Provider> provider_;
    Sleeper sleeper_;
    Observer observer_;
};

}  // namespace popforge::llm
