// popforge: session service, scripted sessions, and export.

#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "popforge/config.hpp"
#include "popforge/http_api.hpp"
#include "popforge/script.hpp"
#include "popforge/session.hpp"

#ifndef POPFORGE_DEFAULT_CORPUS
#define POPFORGE_DEFAULT_CORPUS "corpus"
#endif

namespace {

popforge::HttpApi* g_api = nullptr;

void on_signal(int) {
    if (g_api != nullptr) g_api->stop();
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) popforge::fail(popforge::ErrorCode::Io, "cannot open '" + path + "'");
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) popforge::fail(popforge::ErrorCode::Validation, "'" + path + "' is not JSON");
    return j;
}

int report(const popforge::Error& e) {
    std::cerr << "popforge: " << popforge::to_string(e.code()) << ": " << e.what() << "\n";
    return e.code() == popforge::ErrorCode::Validation ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"POP text creation support service"};
    app.require_subcommand(1);

    std::string config_path;
    int port = 8080;
    std::string host = "127.0.0.1";
    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    serve->add_option("--config", config_path, "JSON config file")->required();
    serve->add_option("--port", port, "Listen port");
    serve->add_option("--host", host, "Listen address");

    auto* session = app.add_subcommand("session", "Scripted sessions");
    session->require_subcommand(1);
    std::string script_path;
    std::optional<std::uint64_t> seed;
    std::string corpus = POPFORGE_DEFAULT_CORPUS;
    std::string run_config;
    auto* run = session->add_subcommand("run", "Drive a scripted session against the mock provider");
    run->add_option("--script", script_path, "JSON session script")->required();
    run->add_option("--seed", seed, "Mock seed (overrides script and config)");
    run->add_option("--corpus", corpus, "Mock fixture corpus directory");
    run->add_option("--config", run_config, "Optional JSON config (provider must be mock)");

    std::string export_id;
    std::string data_dir;
    auto* exp = app.add_subcommand("export", "Print the provenance export of a finalized session");
    exp->add_option("session_id", export_id, "Session id")->required();
    exp->add_option("--data-dir", data_dir, "Event-log directory (default: $POPFORGE_DATA_DIR)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve) {
            auto config = popforge::AppConfig::load(config_path);
            popforge::SessionService service(popforge::make_context(config),
                                             popforge::resolve_data_dir(config));
            service.recover();
            popforge::HttpApi api(service);
            g_api = &api;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "popforge: listening on " << host << ":" << port << "\n";
            if (!api.listen(host, port)) {
                std::cerr << "popforge: cannot listen on " << host << ":" << port << "\n";
                return 1;
            }
            return 0;
        }

        if (*run) {
            const auto script = read_json(script_path);
            popforge::AppConfig config;
            if (!run_config.empty()) {
                config = popforge::AppConfig::load(run_config);
            } else {
                config.provider = popforge::llm::ProviderConfig::mock(
                    script.value("corpus", corpus), script.value("seed", std::uint64_t{1}));
            }
            if (seed) config.provider.seed = *seed;
            if (config.provider.kind != popforge::llm::ProviderConfig::Kind::Mock) {
                std::cerr << "popforge: session run only drives the mock provider\n";
                return 2;
            }
            popforge::SessionService service(popforge::make_context(config),
                                             popforge::resolve_data_dir(config));
            service.recover();
            const auto outcome = popforge::run_script(service, script);
            const auto snapshot = service.get(outcome.session_id);
            if (snapshot->state() == popforge::SessionState::Finalized) {
                std::cout << popforge::export_provenance(*snapshot).dump(2) << "\n";
            } else {
                std::cout << popforge::session_view(*snapshot, config.pipeline.length_policy).dump(2)
                          << "\n";
            }
            return 0;
        }

        if (*exp) {
            std::filesystem::path dir = data_dir;
            if (dir.empty()) {
                const char* env = std::getenv("POPFORGE_DATA_DIR");
                if (env == nullptr || *env == '\0') {
                    std::cerr << "popforge: set POPFORGE_DATA_DIR or pass --data-dir\n";
                    return 2;
                }
                dir = env;
            }
            popforge::EventStore store(dir);
            std::cout << popforge::export_provenance(store.load(export_id)).dump(2) << "\n";
            return 0;
        }
    } catch (const popforge::Error& e) {
        return report(e);
    }
    return 0;
}
