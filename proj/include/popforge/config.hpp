#pragma once

#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "popforge/llm/gateway.hpp"
#include "popforge/pipeline.hpp"

namespace popforge {

/// Service configuration, read from a JSON file:
///
///   {
///     "provider": { "provider_kind": "mock", "corpus_path": "corpus", "seed": 7 },
///     "pipeline": { "max_rounds": 10, "parse_retries": 3,
///                   "length_policy": { "catchphrase_target": 10, ... },
///                   "motive_labels": { "Fashionability": "...", ... } },
///     "templates_dir": "prompts/ja",
///     "data_dir": "/var/lib/popforge"
///   }
///
/// Relative paths resolve against the config file's directory.
struct AppConfig {
    llm::ProviderConfig provider;
    PipelineConfig pipeline;
    std::optional<std::filesystem::path> templates_dir;
    std::optional<std::filesystem::path> data_dir;

    static AppConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static AppConfig load(const std::filesystem::path& path);
};

/// Wires gateway, templates and pipeline config together.
StageContext make_context(const AppConfig& config);

/// POPFORGE_DATA_DIR when set, else the config value.
std::optional<std::filesystem::path> resolve_data_dir(const AppConfig& config);

}  // namespace popforge
