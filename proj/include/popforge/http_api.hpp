#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "popforge/session.hpp"

namespace popforge {

/// HTTP status for a library error: 409 state conflicts, 404 unknown ids,
/// 422 validation, 502 gateway failures.
int http_status(ErrorCode code) noexcept;

nlohmann::json error_body(const Error& e);

/// JSON-over-HTTP front end for a SessionService.
///
///   POST /sessions                       {target_gender, target_age_range, product_description}
///   GET  /sessions/{id}
///   POST /sessions/{id}/question
///   POST /sessions/{id}/answer           {question_id, answer}
///   POST /sessions/{id}/rephrase         {source_pop_id}
///   POST /sessions/{id}/edit             {source_pop_id, catchphrase, explanation}
///   POST /sessions/{id}/finalize         {mode: "manual"|"auto", pop_id?}
///   GET  /sessions/{id}/export
class HttpApi {
public:
    explicit HttpApi(SessionService& service);
    ~HttpApi();
    HttpApi(const HttpApi&) = delete;
    HttpApi& operator=(const HttpApi&) = delete;

    /// Blocks until stop().
    bool listen(const std::string& host, int port);
    /// Binds an ephemeral port and returns it; follow with listen_after_bind().
    int bind_to_any_port(const std::string& host);
    bool listen_after_bind();
    void wait_until_ready() const;
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace popforge
