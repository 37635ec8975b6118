#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "popforge/session.hpp"

namespace popforge {

/// Drives one session from a JSON script:
///
///   {
///     "profile": { "target_gender": "female", "target_age_range": "women in their 20s",
///                  "product_description": "wide pants with a center crease" },
///     "steps": [
///       { "op": "qa", "answer": "Yes" },              // ask_next + answer
///       { "op": "ask" }, { "op": "answer", "answer": "No" },
///       { "op": "rephrase", "source": "current_draft" },
///       { "op": "rephrase", "source": { "round": -1, "index": 2 } },
///       { "op": "edit", "source": "best", "catchphrase": "...", "explanation": "..." },
///       { "op": "finalize", "mode": "auto" }
///     ]
///   }
///
/// A pop reference is a pop id, "current_draft", "best" (best pop of the
/// latest round), "last" (newest node), or {"round": r, "index": i} with a
/// negative r counting from the latest round.
struct ScriptOutcome {
    std::string session_id;
    std::size_t steps_run = 0;
};

ScriptOutcome run_script(SessionService& service, const nlohmann::json& script);

/// Resolves a pop reference against a snapshot; throws UnknownPop.
std::string resolve_pop_ref(const Session& session, const nlohmann::json& ref);

}  // namespace popforge
