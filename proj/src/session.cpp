#include "popforge/session.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace popforge {

using nlohmann::json;

std::string_view to_string(SessionState s) noexcept {
    switch (s) {
        case SessionState::Profiling: return "Profiling";
        case SessionState::PendingAnswer: return "PendingAnswer";
        case SessionState::Generated: return "Generated";
        case SessionState::Finalized: return "Finalized";
    }
    return "Profiling";
}

std::string_view to_string(SelectionMode m) noexcept {
    return m == SelectionMode::Auto ? "auto" : "manual";
}

namespace {

SelectionMode parse_mode(std::string_view s) {
    if (s == "auto") return SelectionMode::Auto;
    if (s == "manual") return SelectionMode::Manual;
    fail(ErrorCode::Validation, "selection mode must be 'manual' or 'auto'");
}

[[noreturn]] void wrong_state(const Session& s, std::string_view action) {
    fail(ErrorCode::WrongState, std::string(action) + " is not allowed in state " +
                                    std::string(to_string(s.state())));
}

}  // namespace

SessionState Session::state() const noexcept {
    if (final_selection) return SessionState::Finalized;
    if (pending) return SessionState::PendingAnswer;
    if (!rounds.empty()) return SessionState::Generated;
    return SessionState::Profiling;
}

std::string Session::next_question_id() const {
    return "q-" + std::to_string(profile.history().size() + (pending ? 1 : 0) + 1);
}

// ---------------------------------------------------------------------------
// Event application
// ---------------------------------------------------------------------------

Session start_session(const event::Created& created) {
    require(!created.session_id.empty(), "session id must not be empty");
    require(created.initial_pop.kind() == PopText::Kind::Initial, "first pop must be an initial draft");
    require(created.initial_pop.profile_version() == 0, "first draft must be at profile version 0");
    require(created.personas[0].persona_set_version() == 0, "first persona set must be version 0");
    Session s{created.session_id, RefinedProfile(created.base), std::nullopt, {}, {}, {}, {}, {}, 1};
    s.forest.add(created.initial_pop);
    s.current_draft_id = created.initial_pop.pop_id();
    s.persona_sets.push_back(created.personas);
    return s;
}

namespace {

struct Applier {
    const Session& before;

    Session operator()(const event::Created&) const {
        fail(ErrorCode::WrongState, "session already created");
    }

    Session operator()(const event::QuestionAsked& e) const {
        const auto state = before.state();
        if (state != SessionState::Profiling && state != SessionState::Generated) {
            wrong_state(before, "asking a question");
        }
        require(e.question.question_id == before.next_question_id(), "unexpected question id");
        Session s = before;
        s.pending = e.question;
        return s;
    }

    Session operator()(const event::Answered& e) const {
        if (before.state() != SessionState::PendingAnswer) wrong_state(before, "answering");
        if (before.pending->question_id != e.question_id) {
            fail(ErrorCode::UnknownQuestion, "question '" + e.question_id + "' is not pending");
        }
        Session s = before;
        s.profile = before.profile.appended(before.pending->question_id, before.pending->question,
                                            before.pending->rationale, e.answer);
        s.pending.reset();
        require(e.draft.kind() == PopText::Kind::Initial, "regenerated draft must be initial");
        require(e.draft.profile_version() == s.profile.version(), "draft version mismatch");
        require(e.draft.pop_id() == before.next_pop_id(), "unexpected pop id");
        require(e.personas[0].persona_set_version() == s.profile.version(),
                "persona set version mismatch");
        s.forest.add(e.draft);
        s.current_draft_id = e.draft.pop_id();
        s.persona_sets.push_back(e.personas);
        return s;
    }

    Session operator()(const event::Rephrased& e) const {
        if (before.state() == SessionState::Finalized) wrong_state(before, "rephrasing");
        if (!before.forest.contains(e.source_pop_id)) {
            fail(ErrorCode::UnknownSource, "unknown source pop '" + e.source_pop_id + "'");
        }
        require(e.pops.size() == kAllMotives.size(), "a rephrase round adds exactly 6 pops");
        Session s = before;
        for (std::size_t i = 0; i < e.pops.size(); ++i) {
            const auto& p = e.pops[i];
            require(p.parent_id() == e.source_pop_id, "rephrased pop must hang off the source");
            require(p.motive() == kAllMotives[i], "rephrased pops must follow motive order");
            require(p.pop_id() == s.next_pop_id(), "unexpected pop id");
            s.forest.add(p);
        }
        require(e.round.round_id() == before.next_round_id(), "unexpected round id");
        require(e.round.personas() == before.current_personas(),
                "round must use the current persona set");
        for (std::size_t i = 0; i < e.pops.size(); ++i) {
            require(e.round.pop_ids()[i] == e.pops[i].pop_id(), "round must cover the new pops");
        }
        s.rounds.push_back({e.source_pop_id, e.round});
        return s;
    }

    Session operator()(const event::Edited& e) const {
        if (before.state() == SessionState::Finalized) wrong_state(before, "editing");
        require(e.pop.kind() == PopText::Kind::Edit, "edit event must carry an edit node");
        if (!before.forest.contains(*e.pop.parent_id())) {
            fail(ErrorCode::UnknownSource, "unknown source pop '" + *e.pop.parent_id() + "'");
        }
        require(e.pop.pop_id() == before.next_pop_id(), "unexpected pop id");
        Session s = before;
        s.forest.add(e.pop);
        return s;
    }

    Session operator()(const event::Finalized& e) const {
        if (before.state() == SessionState::Finalized) wrong_state(before, "finalizing");
        if (!before.forest.contains(e.pop_id)) {
            fail(ErrorCode::UnknownPop, "unknown pop '" + e.pop_id + "'");
        }
        if (e.mode == SelectionMode::Auto) {
            if (before.rounds.empty()) fail(ErrorCode::NoRounds, "no evaluation round to select from");
            require(select_best(before.rounds.back().round) == e.pop_id,
                    "auto selection must match the latest round's best pop");
        }
        Session s = before;
        s.final_selection = FinalSelection{e.mode, e.pop_id};
        return s;
    }
};

}  // namespace

Session apply_event(const Session& session, const Event& e) {
    Session next = std::visit(Applier{session}, e);
    next.event_count = session.event_count + 1;
    return next;
}

Session replay(std::span<const Event> events) {
    require(!events.empty(), "event log is empty");
    const auto* created = std::get_if<event::Created>(&events.front());
    require(created != nullptr, "event log must start with a created event");
    Session s = start_session(*created);
    for (const auto& e : events.subspan(1)) s = apply_event(s, e);
    return s;
}

std::vector<std::string> check_invariants(const Session& s) {
    std::vector<std::string> problems;
    auto check = [&](bool ok, const char* what) {
        if (!ok) problems.emplace_back(what);
    };

    check(!s.session_id.empty(), "session id empty");
    check(s.forest.is_well_formed(), "pop forest is not a well-formed forest");
    check(s.forest.contains(s.current_draft_id), "current draft missing");
    check(s.persona_sets.size() == static_cast<std::size_t>(s.profile.version()) + 1,
          "one persona set per profile version expected");
    for (std::size_t v = 0; v < s.persona_sets.size(); ++v) {
        for (const auto& p : s.persona_sets[v]) {
            check(p.persona_set_version() == static_cast<int>(v), "persona set version mismatch");
        }
    }
    const auto history = s.profile.history();
    for (std::size_t i = 0; i < history.size(); ++i) {
        check(history[i].sequence() == static_cast<int>(i), "history sequence gap");
    }
    check(s.state() != SessionState::PendingAnswer || s.pending.has_value(),
          "PendingAnswer without a pending question");
    check(s.state() != SessionState::Profiling || !s.pending.has_value(),
          "Profiling with a pending question");
    for (const auto& node : s.forest.nodes()) {
        check(node.profile_version() <= s.profile.version(), "pop from a future profile version");
    }
    for (const auto& r : s.rounds) {
        check(s.forest.contains(r.source_pop_id), "round source missing");
        check(r.round.evaluations().size() == kEvaluationsPerRound, "round without 18 evaluations");
        std::set<PurchaseMotive> motives;
        for (const auto& id : r.round.pop_ids()) {
            const auto* pop = s.forest.find(id);
            check(pop != nullptr, "round references a missing pop");
            if (pop == nullptr) continue;
            check(pop->parent_id() == r.source_pop_id, "round pop not a child of its source");
            if (pop->motive()) motives.insert(*pop->motive());
        }
        check(motives.size() == kAllMotives.size(), "round does not cover all 6 motives");
        const auto v = static_cast<std::size_t>(r.round.persona_set_version());
        check(v < s.persona_sets.size() && s.persona_sets[v] == r.round.personas(),
              "round references a persona set not in the session");
    }
    if (s.final_selection) {
        check(s.forest.contains(s.final_selection->pop_id), "final selection missing");
    }
    return problems;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

json pending_json(const PendingQuestion& q) {
    return {{"question_id", q.question_id}, {"question", q.question}, {"rationale", q.rationale}};
}

PendingQuestion pending_from(const json& j) {
    return {j.at("question_id").get<std::string>(), j.at("question").get<std::string>(),
            j.at("rationale").get<std::string>()};
}

json pops_json(std::span<const PopText> pops) {
    json arr = json::array();
    for (const auto& p : pops) arr.push_back(p);
    return arr;
}

std::vector<PopText> pops_from(const json& arr) {
    std::vector<PopText> out;
    for (const auto& p : arr) out.push_back(p.get<PopText>());
    return out;
}

template <typename T>
T get_or_fail(const json& j) {
    try {
        return j.get<T>();
    } catch (const json::exception& e) {
        fail(ErrorCode::Validation, std::string("malformed record: ") + e.what());
    }
}

}  // namespace

json event_to_json(const Event& e) {
    return std::visit(
        [](const auto& ev) -> json {
            using T = std::decay_t<decltype(ev)>;
            if constexpr (std::is_same_v<T, event::Created>) {
                return {{"type", "created"},
                        {"session_id", ev.session_id},
                        {"base", ev.base},
                        {"initial_pop", ev.initial_pop},
                        {"personas", ev.personas}};
            } else if constexpr (std::is_same_v<T, event::QuestionAsked>) {
                return {{"type", "question_asked"}, {"question", pending_json(ev.question)}};
            } else if constexpr (std::is_same_v<T, event::Answered>) {
                return {{"type", "answered"},
                        {"question_id", ev.question_id},
                        {"answer", ev.answer},
                        {"draft", ev.draft},
                        {"personas", ev.personas}};
            } else if constexpr (std::is_same_v<T, event::Rephrased>) {
                return {{"type", "rephrased"},
                        {"source_pop_id", ev.source_pop_id},
                        {"pops", pops_json(ev.pops)},
                        {"round", ev.round}};
            } else if constexpr (std::is_same_v<T, event::Edited>) {
                return {{"type", "edited"}, {"pop", ev.pop}};
            } else {
                return {{"type", "finalized"},
                        {"mode", std::string(to_string(ev.mode))},
                        {"pop_id", ev.pop_id}};
            }
        },
        e);
}

Event event_from_json(const json& j) {
    try {
        const auto type = j.at("type").get<std::string>();
        if (type == "created") {
            return event::Created{j.at("session_id").get<std::string>(),
                                  j.at("base").get<UserProvidedProfile>(),
                                  j.at("initial_pop").get<PopText>(),
                                  j.at("personas").get<PersonaSet>()};
        }
        if (type == "question_asked") return event::QuestionAsked{pending_from(j.at("question"))};
        if (type == "answered") {
            return event::Answered{j.at("question_id").get<std::string>(),
                                   j.at("answer").get<Answer>(), j.at("draft").get<PopText>(),
                                   j.at("personas").get<PersonaSet>()};
        }
        if (type == "rephrased") {
            return event::Rephrased{j.at("source_pop_id").get<std::string>(),
                                    pops_from(j.at("pops")), j.at("round").get<EvaluationRound>()};
        }
        if (type == "edited") return event::Edited{j.at("pop").get<PopText>()};
        if (type == "finalized") {
            return event::Finalized{parse_mode(j.at("mode").get<std::string>()),
                                    j.at("pop_id").get<std::string>()};
        }
        fail(ErrorCode::Validation, "unknown event type '" + type + "'");
    } catch (const json::exception& e) {
        fail(ErrorCode::Validation, std::string("malformed event: ") + e.what());
    }
}

json session_to_json(const Session& s) {
    json persona_sets = json::array();
    for (const auto& set : s.persona_sets) persona_sets.push_back(set);
    json rounds = json::array();
    for (const auto& r : s.rounds) {
        rounds.push_back({{"source_pop_id", r.source_pop_id}, {"round", r.round}});
    }
    json j{{"session_id", s.session_id},
           {"profile", s.profile},
           {"pending_question", s.pending ? pending_json(*s.pending) : json(nullptr)},
           {"pops", pops_json(s.forest.nodes())},
           {"current_draft_id", s.current_draft_id},
           {"persona_sets", std::move(persona_sets)},
           {"rounds", std::move(rounds)},
           {"event_count", s.event_count}};
    j["final_selection"] = s.final_selection
                               ? json{{"mode", std::string(to_string(s.final_selection->mode))},
                                      {"pop_id", s.final_selection->pop_id}}
                               : json(nullptr);
    return j;
}

Session session_from_json(const json& j) {
    try {
        Session s{j.at("session_id").get<std::string>(),
                  j.at("profile").get<RefinedProfile>(),
                  std::nullopt, {}, j.at("current_draft_id").get<std::string>(), {}, {}, {},
                  j.at("event_count").get<std::size_t>()};
        if (!j.at("pending_question").is_null()) s.pending = pending_from(j.at("pending_question"));
        for (auto& p : pops_from(j.at("pops"))) s.forest.add(std::move(p));
        for (const auto& set : j.at("persona_sets")) s.persona_sets.push_back(set.get<PersonaSet>());
        for (const auto& r : j.at("rounds")) {
            s.rounds.push_back({r.at("source_pop_id").get<std::string>(),
                                r.at("round").get<EvaluationRound>()});
        }
        if (!j.at("final_selection").is_null()) {
            const auto& f = j.at("final_selection");
            s.final_selection = FinalSelection{parse_mode(f.at("mode").get<std::string>()),
                                               f.at("pop_id").get<std::string>()};
        }
        return s;
    } catch (const json::exception& e) {
        fail(ErrorCode::Validation, std::string("malformed session snapshot: ") + e.what());
    }
}

json session_view(const Session& s, const LengthPolicy& policy) {
    json j = session_to_json(s);
    j["state"] = std::string(to_string(s.state()));
    j["version"] = s.profile.version();
    j["current_personas"] = s.current_personas();
    json warnings = json::object();
    for (const auto& p : s.forest.nodes()) {
        json list = json::array();
        for (const auto& w : validate_lengths(p, policy)) list.push_back(w.message());
        if (!list.empty()) warnings[p.pop_id()] = std::move(list);
    }
    j["length_warnings"] = std::move(warnings);
    for (auto& r : j["rounds"]) {
        const auto round = r.at("round").get<EvaluationRound>();
        json means = json::object();
        for (const auto& score : aggregate(round).scores) means[score.pop_id] = score.mean;
        r["means"] = std::move(means);
        r["best_pop_id"] = select_best(round);
    }
    return j;
}

json export_provenance(const Session& s) {
    if (!s.final_selection) wrong_state(s, "export");
    const auto& final_pop = s.forest.at(s.final_selection->pop_id);

    json path = json::array();
    std::set<std::string> on_path;
    for (const auto* node : s.forest.path_to(final_pop.pop_id())) {
        path.push_back(*node);
        on_path.insert(node->pop_id());
    }

    json evaluations = json::array();
    for (const auto& r : s.rounds) {
        const auto agg = aggregate(r.round);
        for (const auto& score : agg.scores) {
            if (!on_path.contains(score.pop_id)) continue;
            json cells = json::array();
            for (const auto& e : r.round.evaluations()) {
                if (e.pop_id() == score.pop_id) cells.push_back(e);
            }
            evaluations.push_back({{"round_id", r.round.round_id()},
                                   {"source_pop_id", r.source_pop_id},
                                   {"persona_set_version", r.round.persona_set_version()},
                                   {"personas", r.round.personas()},
                                   {"pop_id", score.pop_id},
                                   {"ratings", score.ratings},
                                   {"mean", score.mean},
                                   {"cells", std::move(cells)},
                                   {"round_best_pop_id", select_best(r.round)}});
        }
    }

    return {{"session_id", s.session_id},
            {"selection_mode", std::string(to_string(s.final_selection->mode))},
            {"final_pop", final_pop},
            {"profile", s.profile},
            {"tree_path", std::move(path)},
            {"evaluations", std::move(evaluations)}};
}

// ---------------------------------------------------------------------------
// EventStore
// ---------------------------------------------------------------------------

EventStore::EventStore(std::filesystem::path dir, std::size_t snapshot_interval)
    : dir_(std::move(dir)), snapshot_interval_(snapshot_interval) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) fail(ErrorCode::Io, "cannot create data dir '" + dir_.string() + "': " + ec.message());
}

std::filesystem::path EventStore::log_path(const std::string& session_id) const {
    return dir_ / (session_id + ".events.jsonl");
}

std::filesystem::path EventStore::snapshot_path(const std::string& session_id) const {
    return dir_ / (session_id + ".snapshot.json");
}

void EventStore::append(const std::string& session_id, const Event& e, const Session& after) {
    {
        std::ofstream out(log_path(session_id), std::ios::app | std::ios::binary);
        out << event_to_json(e).dump() << '\n';
        out.flush();
        if (!out) fail(ErrorCode::Io, "cannot append to event log for " + session_id);
    }
    if (snapshot_interval_ > 0 && after.event_count % snapshot_interval_ == 0) {
        const auto tmp = snapshot_path(session_id).string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
            out << session_to_json(after).dump();
            if (!out) return;
        }
        std::error_code ec;
        std::filesystem::rename(tmp, snapshot_path(session_id), ec);
    }
}

std::vector<Event> EventStore::load_events(const std::string& session_id) const {
    std::ifstream in(log_path(session_id), std::ios::binary);
    if (!in) fail(ErrorCode::UnknownSession, "no event log for session '" + session_id + "'");
    std::vector<Event> events;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            if (in.peek() == std::char_traits<char>::eof()) break;
            fail(ErrorCode::Io, "corrupt event log line " + std::to_string(line_no));
        }
        events.push_back(event_from_json(j));
    }
    return events;
}

bool EventStore::repair(const std::string& session_id) const {
    const auto path = log_path(session_id);
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::string line;
    std::uintmax_t good = 0;
    std::uintmax_t offset = 0;
    bool torn = false;
    bool corrupt = false;
    while (std::getline(in, line)) {
        offset += line.size() + (in.eof() ? 0 : 1);
        if (trim(line).empty()) {
            if (!torn) good = offset;
        } else if (!json::parse(line, nullptr, false).is_discarded()) {
            if (torn) corrupt = true;
            good = offset;
        } else {
            torn = true;
        }
    }
    in.close();
    if (!torn || corrupt) return false;
    std::filesystem::resize_file(path, good);
    return true;
}

Session EventStore::load(const std::string& session_id) const {
    const auto events = load_events(session_id);
    std::ifstream snap(snapshot_path(session_id), std::ios::binary);
    if (snap) {
        auto j = json::parse(snap, nullptr, false);
        if (!j.is_discarded()) {
            Session s = session_from_json(j);
            if (s.event_count <= events.size()) {
                for (std::size_t i = s.event_count; i < events.size(); ++i) s = apply_event(s, events[i]);
                return s;
            }
        }
    }
    return replay(events);
}

std::vector<std::string> EventStore::session_ids() const {
    std::vector<std::string> ids;
    constexpr std::string_view suffix = ".events.jsonl";
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        const auto name = entry.path().filename().string();
        if (name.size() > suffix.size() && name.ends_with(suffix)) {
            ids.push_back(name.substr(0, name.size() - suffix.size()));
        }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

// ---------------------------------------------------------------------------
// SessionService
// ---------------------------------------------------------------------------

std::shared_ptr<const Session> SessionService::Slot::load() const {
    std::lock_guard lock(pointer);
    return current;
}

void SessionService::Slot::publish(std::shared_ptr<const Session> next) {
    std::lock_guard lock(pointer);
    current = std::move(next);
}

SessionService::SessionService(StageContext ctx, std::optional<std::filesystem::path> data_dir)
    : ctx_(std::move(ctx)),
      profile_builder_(ctx_),
      drafts_(ctx_),
      evaluator_(ctx_) {
    require(ctx_.gateway && ctx_.templates, "session service needs a gateway and templates");
    if (data_dir) store_.emplace(*data_dir);
}

void SessionService::recover() {
    if (!store_) return;
    std::unique_lock lock(sessions_mu_);
    for (const auto& id : store_->session_ids()) {
        store_->repair(id);
        auto slot = std::make_shared<Slot>();
        slot->current = std::make_shared<const Session>(store_->load(id));
        sessions_[id] = std::move(slot);
        if (id.rfind("sess-", 0) == 0) {
            try {
                next_session_number_ = std::max(next_session_number_, std::stoi(id.substr(5)) + 1);
            } catch (const std::exception&) {
            }
        }
    }
}

std::shared_ptr<SessionService::Slot> SessionService::slot(const std::string& session_id) const {
    std::shared_lock lock(sessions_mu_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) fail(ErrorCode::UnknownSession, "unknown session '" + session_id + "'");
    return it->second;
}

std::shared_ptr<const Session> SessionService::get(const std::string& session_id) const {
    return slot(session_id)->load();
}

std::vector<std::string> SessionService::session_ids() const {
    std::shared_lock lock(sessions_mu_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : sessions_) ids.push_back(id);
    return ids;
}

template <typename MakeEvent>
std::shared_ptr<const Session> SessionService::mutate(const std::string& session_id,
                                                      MakeEvent&& make_event) {
    auto s = slot(session_id);
    std::lock_guard writer(s->writer);
    const auto before = s->load();
    Event e = make_event(*before);
    auto after = std::make_shared<const Session>(apply_event(*before, e));
    if (store_) store_->append(session_id, e, *after);
    s->publish(after);
    return after;
}

std::string SessionService::create_session(const UserProvidedProfile& base) {
    const RefinedProfile profile(base);
    auto draft = drafts_.generate_draft(profile, "pop-1");
    auto personas = evaluator_.generate_personas(profile);

    std::unique_lock lock(sessions_mu_);
    std::string id;
    do {
        id = "sess-" + std::to_string(next_session_number_++);
    } while (sessions_.contains(id) ||
             (store_ && std::filesystem::exists(store_->log_path(id))));
    lock.unlock();

    event::Created created{id, base, std::move(draft), std::move(personas)};
    auto session = std::make_shared<const Session>(start_session(created));
    if (store_) store_->append(id, created, *session);

    auto slot = std::make_shared<Slot>();
    slot->current = std::move(session);
    lock.lock();
    sessions_.emplace(id, std::move(slot));
    return id;
}

PendingQuestion SessionService::ask_next(const std::string& session_id) {
    auto after = mutate(session_id, [&](const Session& s) -> Event {
        const auto state = s.state();
        if (state != SessionState::Profiling && state != SessionState::Generated) {
            wrong_state(s, "ask_next");
        }
        return event::QuestionAsked{
            profile_builder_.generate_question(s.profile, s.next_question_id())};
    });
    return *after->pending;
}

std::shared_ptr<const Session> SessionService::answer(const std::string& session_id,
                                                      const std::string& question_id,
                                                      Answer answer) {
    return mutate(session_id, [&](const Session& s) -> Event {
        if (s.state() != SessionState::PendingAnswer) wrong_state(s, "answer");
        auto profile = profile_builder_.apply_answer(s.profile, s.pending, question_id, answer);
        auto draft = drafts_.generate_draft(profile, s.next_pop_id());
        auto personas = evaluator_.generate_personas(profile);
        return event::Answered{question_id, answer, std::move(draft), std::move(personas)};
    });
}

RephraseResult SessionService::rephrase_from(const std::string& session_id,
                                             const std::string& source_pop_id) {
    auto after = mutate(session_id, [&](const Session& s) -> Event {
        if (s.state() == SessionState::Finalized) wrong_state(s, "rephrase");
        if (!s.forest.contains(source_pop_id)) {
            fail(ErrorCode::UnknownSource, "unknown source pop '" + source_pop_id + "'");
        }
        IdSequence ids("pop", static_cast<int>(s.forest.size()) + 1);
        auto pops = drafts_.rephrase_all(s.forest, source_pop_id, s.profile, ids);
        const auto& personas = s.current_personas();
        auto round = evaluator_.evaluate_round(personas, pops, s.next_round_id());
        return event::Rephrased{source_pop_id, std::move(pops), std::move(round)};
    });
    const auto& record = after->rounds.back();
    RephraseResult result{{}, record.round, aggregate(record.round)};
    for (const auto& id : record.round.pop_ids()) result.pops.push_back(after->forest.at(id));
    return result;
}

std::string SessionService::edit_pop(const std::string& session_id,
                                     const std::string& source_pop_id, std::string catchphrase,
                                     std::string explanation) {
    auto after = mutate(session_id, [&](const Session& s) -> Event {
        if (s.state() == SessionState::Finalized) wrong_state(s, "edit");
        const auto* source = s.forest.find(source_pop_id);
        if (source == nullptr) {
            fail(ErrorCode::UnknownSource, "unknown source pop '" + source_pop_id + "'");
        }
        return event::Edited{
            apply_user_edit(*source, std::move(catchphrase), std::move(explanation),
                            s.next_pop_id())};
    });
    return after->forest.nodes().back().pop_id();
}

PopText SessionService::finalize(const std::string& session_id, const Selection& selection) {
    auto after = mutate(session_id, [&](const Session& s) -> Event {
        if (s.state() == SessionState::Finalized) wrong_state(s, "finalize");
        if (selection.mode == SelectionMode::Auto) {
            if (s.rounds.empty()) fail(ErrorCode::NoRounds, "no evaluation round to select from");
            return event::Finalized{SelectionMode::Auto, select_best(s.rounds.back().round)};
        }
        if (!s.forest.contains(selection.pop_id)) {
            fail(ErrorCode::UnknownPop, "unknown pop '" + selection.pop_id + "'");
        }
        return event::Finalized{SelectionMode::Manual, selection.pop_id};
    });
    return after->forest.at(after->final_selection->pop_id);
}

json SessionService::export_session(const std::string& session_id) const {
    return export_provenance(*get(session_id));
}

}  // namespace popforge
