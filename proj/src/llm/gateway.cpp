#include "popforge/llm/gateway.hpp"

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <openssl/evp.h>

namespace popforge::llm {

using nlohmann::json;

// ---------------------------------------------------------------------------
// ProviderConfig
// ---------------------------------------------------------------------------

void ProviderConfig::validate() const {
    require(max_retries >= 0, "max_retries must be >= 0");
    require(timeout.count() > 0, "timeout must be positive");
    require(!model_id.empty(), "model_id must not be empty");
    if (kind == Kind::RemoteApi) {
        require(!endpoint.empty(), "remote_api provider requires an endpoint");
        require(!api_key_env.empty(), "remote_api provider requires api_key_env");
    } else {
        require(!corpus_path.empty(), "mock provider requires a fixture corpus path");
        require(seed.has_value(), "mock provider requires a seed");
    }
}

ProviderConfig ProviderConfig::openai_preset() {
    ProviderConfig c;
    c.kind = Kind::RemoteApi;
    c.endpoint = "https://api.openai.com/v1";
    c.model_id = kDefaultModel;
    return c;
}

ProviderConfig ProviderConfig::mock(std::filesystem::path corpus, std::uint64_t seed) {
    ProviderConfig c;
    c.kind = Kind::Mock;
    c.model_id = "mock";
    c.corpus_path = std::move(corpus);
    c.seed = seed;
    c.backoff_base = std::chrono::milliseconds{0};
    return c;
}

ProviderConfig ProviderConfig::from_json(const json& j) {
    ProviderConfig c;
    try {
        const auto kind = j.value("provider_kind", std::string("mock"));
        if (kind == "remote_api") {
            c = openai_preset();
        } else if (kind == "mock") {
            c.kind = Kind::Mock;
            c.model_id = "mock";
        } else {
            fail(ErrorCode::Validation, "provider_kind must be remote_api or mock");
        }
        c.endpoint = j.value("endpoint", c.endpoint);
        c.model_id = j.value("model_id", c.model_id);
        c.api_key_env = j.value("api_key_env", c.api_key_env);
        c.max_retries = j.value("max_retries", c.max_retries);
        c.timeout = std::chrono::seconds(j.value("timeout", c.timeout.count()));
        c.backoff_base =
            std::chrono::milliseconds(j.value("backoff_base_ms", c.backoff_base.count()));
        if (j.contains("corpus_path")) c.corpus_path = j.at("corpus_path").get<std::string>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("temperature")) c.sampling.temperature = j.at("temperature").get<double>();
        if (j.contains("top_p")) c.sampling.top_p = j.at("top_p").get<double>();
    } catch (const json::exception& e) {
        fail(ErrorCode::Validation, std::string("bad provider config: ") + e.what());
    }
    c.validate();
    return c;
}

json ProviderConfig::to_json() const {
    json j{{"provider_kind", kind == Kind::RemoteApi ? "remote_api" : "mock"},
           {"model_id", model_id},
           {"api_key_env", api_key_env},
           {"max_retries", max_retries},
           {"timeout", timeout.count()},
           {"backoff_base_ms", backoff_base.count()}};
    if (!endpoint.empty()) j["endpoint"] = endpoint;
    if (!corpus_path.empty()) j["corpus_path"] = corpus_path.string();
    if (seed) j["seed"] = *seed;
    if (sampling.temperature) j["temperature"] = *sampling.temperature;
    if (sampling.top_p) j["top_p"] = *sampling.top_p;
    return j;
}

// ---------------------------------------------------------------------------
// Mock
// ---------------------------------------------------------------------------

std::vector<std::string> split_corpus_entries(std::string_view text) {
    std::vector<std::string> entries;
    std::string current;
    std::istringstream in{std::string(text)};
    std::string line;
    auto flush = [&] {
        auto entry = trim(current);
        if (!entry.empty()) entries.push_back(std::move(entry));
        current.clear();
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line) == "---") {
            flush();
        } else {
            current += line;
            current += '\n';
        }
    }
    flush();
    return entries;
}

std::uint64_t prompt_hash(std::string_view text) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        fail(ErrorCode::Io, "SHA-256 failed");
    }
    std::uint64_t h = 0;
    for (int i = 0; i < 8; ++i) h = (h << 8) | digest[i];
    return h;
}

MockProvider::MockProvider(const std::filesystem::path& corpus, std::uint64_t seed) : seed_(seed) {
    for (auto id : kAllTemplates) {
        const auto path = corpus / (std::string(to_string(id)) + ".txt");
        std::ifstream in(path, std::ios::binary);
        if (!in) continue;
        std::ostringstream ss;
        ss << in.rdbuf();
        auto entries = split_corpus_entries(ss.str());
        if (!entries.empty()) entries_.emplace(id, std::move(entries));
    }
    if (entries_.empty()) {
        fail(ErrorCode::Validation, "mock corpus '" + corpus.string() + "' has no fixture files");
    }
}

std::string MockProvider::complete(const CompletionRequest& request) {
    if (!request.template_id) {
        fail(ErrorCode::Transport, "mock provider needs a template_id routing tag");
    }
    auto it = entries_.find(*request.template_id);
    if (it == entries_.end()) {
        fail(ErrorCode::Transport,
             "mock corpus has no entries for " + std::string(to_string(*request.template_id)));
    }
    std::mt19937_64 engine(prompt_hash(request.prompt) ^ seed_);
    return it->second[engine() % it->second.size()];
}

std::size_t MockProvider::entry_count(TemplateId id) const {
    auto it = entries_.find(id);
    return it == entries_.end() ? 0 : it->second.size();
}

// ---------------------------------------------------------------------------
// Remote
// ---------------------------------------------------------------------------

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // no trailing slash
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    require(scheme_end != std::string::npos, "endpoint must be an absolute URL");
    const auto path_start = url.find('/', scheme_end + 3);
    SplitUrl out;
    out.origin = url.substr(0, path_start);
    out.path = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
    return out;
}

}  // namespace

RemoteProvider::RemoteProvider(ProviderConfig config) : config_(std::move(config)) {
    config_.validate();
    require(config_.kind == ProviderConfig::Kind::RemoteApi, "RemoteProvider needs remote_api");
}

json RemoteProvider::request_body(const CompletionRequest& request) {
    json body{{"model", request.model_id},
              {"messages", json::array({json{{"role", "user"}, {"content", request.prompt}}})}};
    if (request.sampling.temperature) body["temperature"] = *request.sampling.temperature;
    if (request.sampling.top_p) body["top_p"] = *request.sampling.top_p;
    return body;
}

std::string RemoteProvider::response_text(const json& body) {
    try {
        return body.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        fail(ErrorCode::Transport, std::string("unexpected completion response: ") + e.what());
    }
}

std::string RemoteProvider::complete(const CompletionRequest& request) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
        fail(ErrorCode::AuthFailure, "environment variable " + config_.api_key_env + " is not set");
    }

    const auto url = split_url(config_.endpoint);
    httplib::Client client(url.origin);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    client.set_bearer_token_auth(key);

    auto result = client.Post(url.path + "/chat/completions", request_body(request).dump(),
                              "application/json");
    if (!result) {
        const auto err = result.error();
        const auto code = (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
                              ? ErrorCode::Timeout
                              : ErrorCode::Transport;
        fail(code, "chat completion request failed: " + httplib::to_string(err));
    }
    if (result->status == 401 || result->status == 403) {
        fail(ErrorCode::AuthFailure, "provider rejected credentials (HTTP " +
                                         std::to_string(result->status) + ")");
    }
    if (result->status == 408) fail(ErrorCode::Timeout, "provider timed out (HTTP 408)");
    if (result->status != 200) {
        fail(ErrorCode::Transport, "provider returned HTTP " + std::to_string(result->status));
    }
    json body = json::parse(result->body, nullptr, false);
    if (body.is_discarded()) fail(ErrorCode::Transport, "provider returned malformed JSON");
    return response_text(body);
}

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

Gateway::Gateway(ProviderConfig config, std::shared_ptr<Provider> provider)
    : config_(std::move(config)),
      provider_(std::move(provider)),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
    config_.validate();
    require(provider_ != nullptr, "gateway needs a provider");
}

std::shared_ptr<Gateway> Gateway::from_config(const ProviderConfig& config) {
    config.validate();
    std::shared_ptr<Provider> provider;
    if (config.kind == ProviderConfig::Kind::Mock) {
        provider = std::make_shared<MockProvider>(config.corpus_path, *config.seed);
    } else {
        provider = std::make_shared<RemoteProvider>(config);
    }
    return std::make_shared<Gateway>(config, std::move(provider));
}

std::string Gateway::complete(CompletionRequest request) const {
    require(!trim(request.prompt).empty(), "completion prompt must not be empty");
    if (request.model_id.empty()) request.model_id = config_.model_id;
    if (!request.sampling.temperature) request.sampling.temperature = config_.sampling.temperature;
    if (!request.sampling.top_p) request.sampling.top_p = config_.sampling.top_p;

    auto delay = config_.backoff_base;
    for (int attempt = 0;; ++attempt) {
        try {
            auto response = provider_->complete(request);
            if (observer_) observer_({request, response});
            return response;
        } catch (const Error& e) {
            const bool retriable =
                e.code() == ErrorCode::Transport || e.code() == ErrorCode::Timeout;
            if (!retriable || attempt >= config_.max_retries) throw;
        }
        sleeper_(delay);
        delay *= 2;
    }
}

std::string Gateway::complete(TemplateId id, std::string prompt) const {
    CompletionRequest request;
    request.prompt = std::move(prompt);
    request.model_id = config_.model_id;
    request.template_id = id;
    return complete(std::move(request));
}

}  // namespace popforge::llm
