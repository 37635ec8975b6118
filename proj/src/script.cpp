#include "popforge/script.hpp"

namespace popforge {

using nlohmann::json;

std::string resolve_pop_ref(const Session& session, const json& ref) {
    if (ref.is_string()) {
        const auto name = ref.get<std::string>();
        if (name == "current_draft") return session.current_draft_id;
        if (name == "last") return session.forest.nodes().back().pop_id();
        if (name == "best") {
            if (session.rounds.empty()) fail(ErrorCode::NoRounds, "'best' needs a round");
            return select_best(session.rounds.back().round);
        }
        session.forest.at(name);
        return name;
    }
    if (ref.is_object() && ref.contains("round") && ref.contains("index")) {
        const auto count = static_cast<int>(session.rounds.size());
        int r = ref.at("round").get<int>();
        if (r < 0) r += count;
        const int i = ref.at("index").get<int>();
        if (r < 0 || r >= count) fail(ErrorCode::UnknownPop, "round reference out of range");
        const auto pops = session.rounds[static_cast<std::size_t>(r)].round.pop_ids();
        if (i < 0 || i >= static_cast<int>(pops.size())) {
            fail(ErrorCode::UnknownPop, "pop index out of range");
        }
        return pops[static_cast<std::size_t>(i)];
    }
    fail(ErrorCode::Validation, "unrecognised pop reference " + ref.dump());
}

ScriptOutcome run_script(SessionService& service, const json& script) {
    require(script.is_object() && script.contains("profile"), "script needs a profile");
    ScriptOutcome outcome;
    try {
        outcome.session_id = service.create_session(script.at("profile").get<UserProvidedProfile>());
    } catch (const json::exception& e) {
        fail(ErrorCode::Validation, std::string("bad script profile: ") + e.what());
    }
    const auto& id = outcome.session_id;

    for (const auto& step : script.value("steps", json::array())) {
        const auto op = step.at("op").get<std::string>();
        if (op == "ask") {
            service.ask_next(id);
        } else if (op == "answer" || op == "qa") {
            if (op == "qa") service.ask_next(id);
            const auto snapshot = service.get(id);
            if (!snapshot->pending) fail(ErrorCode::NoPendingQuestion, "script answers without a question");
            service.answer(id, snapshot->pending->question_id,
                           parse_answer(step.value("answer", std::string("Yes"))));
        } else if (op == "rephrase") {
            service.rephrase_from(id, resolve_pop_ref(*service.get(id),
                                                      step.value("source", json("current_draft"))));
        } else if (op == "edit") {
            service.edit_pop(id, resolve_pop_ref(*service.get(id), step.at("source")),
                             step.at("catchphrase").get<std::string>(),
                             step.at("explanation").get<std::string>());
        } else if (op == "finalize") {
            const auto mode = step.value("mode", std::string("auto"));
            if (mode == "auto") {
                service.finalize(id, Selection::automatic());
            } else {
                service.finalize(id, Selection::manual(resolve_pop_ref(*service.get(id), step.at("pop"))));
            }
        } else {
            fail(ErrorCode::Validation, "unknown script op '" + op + "'");
        }
        ++outcome.steps_run;
    }
    return outcome;
}

}  // namespace popforge
