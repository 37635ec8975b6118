#include "popforge/config.hpp"

#include <cstdlib>
#include <fstream>

namespace popforge {

namespace {

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return base / p;
}

}  // namespace

AppConfig AppConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    require(j.is_object(), "config must be a JSON object");
    AppConfig c;
    nlohmann::json provider = j.value("provider", nlohmann::json::object());
    if (provider.contains("corpus_path")) {
        provider["corpus_path"] =
            resolve(provider["corpus_path"].get<std::string>(), base_dir).string();
    }
    c.provider = llm::ProviderConfig::from_json(provider);
    c.pipeline = PipelineConfig::from_json(j.value("pipeline", nlohmann::json::object()));
    if (j.contains("templates_dir")) {
        c.templates_dir = resolve(j.at("templates_dir").get<std::string>(), base_dir);
    }
    if (j.contains("data_dir")) c.data_dir = resolve(j.at("data_dir").get<std::string>(), base_dir);
    return c;
}

AppConfig AppConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open config '" + path.string() + "'");
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) fail(ErrorCode::Validation, "config '" + path.string() + "' is not JSON");
    return from_json(j, path.parent_path());
}

StageContext make_context(const AppConfig& config) {
    auto templates = std::make_shared<llm::TemplateSet>(llm::TemplateSet::defaults());
    if (config.templates_dir) templates->load_overrides(*config.templates_dir);
    return {llm::Gateway::from_config(config.provider), std::move(templates), config.pipeline};
}

std::optional<std::filesystem::path> resolve_data_dir(const AppConfig& config) {
    if (const char* env = std::getenv("POPFORGE_DATA_DIR"); env != nullptr && *env != '\0') {
        return std::filesystem::path(env);
    }
    return config.data_dir;
}

}  // namespace popforge
