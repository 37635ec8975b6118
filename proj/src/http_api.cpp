#include "popforge/http_api.hpp"

#include <httplib.h>

namespace popforge {

using nlohmann::json;

int http_status(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::WrongState:
        case ErrorCode::NoPendingQuestion:
        case ErrorCode::RoundLimitReached:
        case ErrorCode::NoRounds:
            return 409;
        case ErrorCode::UnknownSession:
        case ErrorCode::UnknownQuestion:
        case ErrorCode::UnknownSource:
        case ErrorCode::UnknownPop:
            return 404;
        case ErrorCode::Transport:
        case ErrorCode::AuthFailure:
        case ErrorCode::Timeout:
        case ErrorCode::ParseFailure:
            return 502;
        case ErrorCode::Io:
        case ErrorCode::UnknownTemplate:
        case ErrorCode::MissingSlot:
        case ErrorCode::ExtraSlot:
            return 500;
        case ErrorCode::Validation:
        case ErrorCode::EmptyText:
        case ErrorCode::CardinalityViolation:
        case ErrorCode::SchemaError:
            return 422;
    }
    return 500;
}

json error_body(const Error& e) {
    return {{"error", std::string(to_string(e.code()))}, {"message", e.what()}};
}

namespace {

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    auto j = json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        fail(ErrorCode::Validation, "request body must be a JSON object");
    }
    return j;
}

std::string string_field(const json& body, const char* key) {
    if (!body.contains(key) || !body.at(key).is_string()) {
        fail(ErrorCode::Validation, std::string("field '") + key + "' must be a string");
    }
    return body.at(key).get<std::string>();
}

void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
}

json pop_list(std::span<const PopText> pops) {
    json arr = json::array();
    for (const auto& p : pops) arr.push_back(p);
    return arr;
}

}  // namespace

struct HttpApi::Impl {
    SessionService& service;
    httplib::Server server;

    explicit Impl(SessionService& s) : service(s) { routes(); }

    template <typename Handler>
    auto guarded(Handler handler) {
        return [this, handler](const httplib::Request& req, httplib::Response& res) {
            try {
                handler(req, res);
            } catch (const Error& e) {
                send(res, http_status(e.code()), error_body(e));
            } catch (const json::exception& e) {
                send(res, 422, {{"error", "Validation"}, {"message", e.what()}});
            } catch (const std::exception& e) {
                send(res, 500, {{"error", "Internal"}, {"message", e.what()}});
            }
        };
    }

    json snapshot(const std::string& id) const {
        return session_view(*service.get(id), service.context().config.length_policy);
    }

    void routes() {
        server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req);
            const auto base = body.get<UserProvidedProfile>();
            const auto id = service.create_session(base);
            send(res, 201, {{"session_id", id}, {"session", snapshot(id)}});
        }));

        server.Get(R"(/sessions/([^/]+))",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       send(res, 200, snapshot(req.matches[1]));
                   }));

        server.Post(R"(/sessions/([^/]+)/question)",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto q = service.ask_next(req.matches[1]);
                        send(res, 200,
                             {{"question_id", q.question_id},
                              {"question", q.question},
                              {"rationale", q.rationale}});
                    }));

        server.Post(R"(/sessions/([^/]+)/answer)",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto body = parse_body(req);
                        const std::string id = req.matches[1];
                        service.answer(id, string_field(body, "question_id"),
                                       parse_answer(string_field(body, "answer")));
                        send(res, 200, snapshot(id));
                    }));

        server.Post(R"(/sessions/([^/]+)/rephrase)",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto body = parse_body(req);
                        const auto result =
                            service.rephrase_from(req.matches[1], string_field(body, "source_pop_id"));
                        json pairs = json::array();
                        for (const auto& score : result.aggregate.scores) {
                            pairs.push_back({{"pop_id", score.pop_id},
                                             {"mean", score.mean},
                                             {"ratings", score.ratings}});
                        }
                        send(res, 200,
                             {{"pops", pop_list(result.pops)},
                              {"round", result.round},
                              {"scores", std::move(pairs)},
                              {"best_pop_id", select_best(result.round)}});
                    }));

        server.Post(R"(/sessions/([^/]+)/edit)",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto body = parse_body(req);
                        const auto pop_id = service.edit_pop(
                            req.matches[1], string_field(body, "source_pop_id"),
                            string_field(body, "catchphrase"), string_field(body, "explanation"));
                        send(res, 201, {{"pop_id", pop_id}});
                    }));

        server.Post(R"(/sessions/([^/]+)/finalize)",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto body = parse_body(req);
                        const auto mode = string_field(body, "mode");
                        Selection selection;
                        if (mode == "auto") {
                            selection = Selection::automatic();
                        } else if (mode == "manual") {
                            selection = Selection::manual(string_field(body, "pop_id"));
                        } else {
                            fail(ErrorCode::Validation, "mode must be 'manual' or 'auto'");
                        }
                        const auto pop = service.finalize(req.matches[1], selection);
                        send(res, 200, {{"final_pop", pop}, {"mode", mode}});
                    }));

        server.Get(R"(/sessions/([^/]+)/export)",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       send(res, 200, service.export_session(req.matches[1]));
                   }));
    }
};

HttpApi::HttpApi(SessionService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpApi::~HttpApi() { stop(); }

bool HttpApi::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int HttpApi::bind_to_any_port(const std::string& host) {
    return impl_->server.bind_to_any_port(host);
}

bool HttpApi::listen_after_bind() { return impl_->server.listen_after_bind(); }

void HttpApi::wait_until_ready() const { impl_->server.wait_until_ready(); }

void HttpApi::stop() {
    if (impl_) impl_->server.stop();
}

}  // namespace popforge
