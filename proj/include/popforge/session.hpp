#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "popforge/pipeline.hpp"

namespace popforge {

enum class SessionState { Profiling, PendingAnswer, Generated, Finalized };

std::string_view to_string(SessionState s) noexcept;

enum class SelectionMode { Manual, Auto };

std::string_view to_string(SelectionMode m) noexcept;

struct RoundRecord {
    std::string source_pop_id;
    EvaluationRound round;

    friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct FinalSelection {
    SelectionMode mode;
    std::string pop_id;

    friend bool operator==(const FinalSelection&, const FinalSelection&) = default;
};

/// Immutable snapshot of one session. Only apply_event() produces new snapshots.
struct Session {
    std::string session_id;
    RefinedProfile profile;
    std::optional<PendingQuestion> pending;
    PopForest forest;
    std::string current_draft_id;        // latest initial draft
    std::vector<PersonaSet> persona_sets;  // archived, last is current
    std::vector<RoundRecord> rounds;
    std::optional<FinalSelection> final_selection;
    std::size_t event_count = 0;

    SessionState state() const noexcept;
    const PersonaSet& current_personas() const { return persona_sets.back(); }

    std::string next_pop_id() const { return "pop-" + std::to_string(forest.size() + 1); }
    std::string next_question_id() const;
    std::string next_round_id() const { return "round-" + std::to_string(rounds.size() + 1); }

    friend bool operator==(const Session&, const Session&) = default;
};

// ---------------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------------

namespace event {

struct Created {
    std::string session_id;
    UserProvidedProfile base;
    PopText initial_pop;
    PersonaSet personas;
};

struct QuestionAsked {
    PendingQuestion question;
};

struct Answered {
    std::string question_id;
    Answer answer;
    PopText draft;
    PersonaSet personas;
};

struct Rephrased {
    std::string source_pop_id;
    std::vector<PopText> pops;
    EvaluationRound round;
};

struct Edited {
    PopText pop;
};

struct Finalized {
    SelectionMode mode;
    std::string pop_id;
};

}  // namespace event

using Event = std::variant<event::Created, event::QuestionAsked, event::Answered,
                           event::Rephrased, event::Edited, event::Finalized>;

nlohmann::json event_to_json(const Event& e);
Event event_from_json(const nlohmann::json& j);

/// Starts a session from its Created event.
Session start_session(const event::Created& created);

/// Applies one event to a snapshot, checking that the transition is legal.
/// Throws WrongState / Validation on an illegal event.
Session apply_event(const Session& session, const Event& e);

/// Rebuilds a session from its full event log.
Session replay(std::span<const Event> events);

/// Returns every violated session invariant (empty when healthy).
std::vector<std::string> check_invariants(const Session& s);

nlohmann::json session_to_json(const Session& s);
Session session_from_json(const nlohmann::json& j);

/// Persisted form plus derived fields clients need (state, per-round means
/// and best pick, length warnings).
nlohmann::json session_view(const Session& s, const LengthPolicy& policy);

/// Final POP text plus provenance: profile history, root-to-final tree path,
/// and every evaluation of a pop on that path. Throws WrongState unless
/// finalized.
nlohmann::json export_provenance(const Session& s);

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

/// One append-only JSON-lines event log per session, plus a periodic
/// snapshot so recovery does not replay from the beginning.
class EventStore {
public:
    explicit EventStore(std::filesystem::path dir, std::size_t snapshot_interval = 16);

    void append(const std::string& session_id, const Event& e, const Session& after);
    std::vector<Event> load_events(const std::string& session_id) const;
    /// Snapshot (if any) plus the events after it.
    Session load(const std::string& session_id) const;
    /// Truncates a torn final line left by a crash. Returns true if it cut.
    bool repair(const std::string& session_id) const;
    std::vector<std::string> session_ids() const;

    std::filesystem::path log_path(const std::string& session_id) const;
    std::filesystem::path snapshot_path(const std::string& session_id) const;

private:
    std::filesystem::path dir_;
    std::size_t snapshot_interval_;
};

// ---------------------------------------------------------------------------
// Service
// ---------------------------------------------------------------------------

struct RephraseResult {
    std::vector<PopText> pops;
    EvaluationRound round;
    RoundAggregate aggregate;
};

struct Selection {
    SelectionMode mode = SelectionMode::Auto;
    std::string pop_id;  // manual only

    static Selection automatic() { return {SelectionMode::Auto, {}}; }
    static Selection manual(std::string pop_id) { return {SelectionMode::Manual, std::move(pop_id)}; }
};

class SessionService {
public:
    /// Without a data directory sessions live in memory only.
    SessionService(StageContext ctx, std::optional<std::filesystem::path> data_dir = std::nullopt);

    /// Loads every session found in the data directory.
    void recover();

    std::string create_session(const UserProvidedProfile& base);
    std::shared_ptr<const Session> get(const std::string& session_id) const;
    std::vector<std::string> session_ids() const;

    PendingQuestion ask_next(const std::string& session_id);
    std::shared_ptr<const Session> answer(const std::string& session_id,
                                          const std::string& question_id, Answer answer);
    RephraseResult rephrase_from(const std::string& session_id, const std::string& source_pop_id);
    std::string edit_pop(const std::string& session_id, const std::string& source_pop_id,
                         std::string catchphrase, std::string explanation);
    PopText finalize(const std::string& session_id, const Selection& selection);
    nlohmann::json export_session(const std::string& session_id) const;

    const StageContext& context() const noexcept { return ctx_; }
    const std::optional<EventStore>& store() const noexcept { return store_; }

private:
    struct Slot {
        std::mutex writer;  // serializes mutations, held across LLM calls
        mutable std::mutex pointer;  // guards `current` swaps only
        std::shared_ptr<const Session> current;

        std::shared_ptr<const Session> load() const;
        void publish(std::shared_ptr<const Session> next);
    };

    std::shared_ptr<Slot> slot(const std::string& session_id) const;

    /// Runs `make_event` under the session's writer lock, applies and
    /// persists the event, then publishes the new snapshot. Any exception
    /// leaves the session untouched.
    template <typename MakeEvent>
    std::shared_ptr<const Session> mutate(const std::string& session_id, MakeEvent&& make_event);

    StageContext ctx_;
    ProfileBuilder profile_builder_;
    DraftPipeline drafts_;
    PersonaEvaluator evaluator_;
    std::optional<EventStore> store_;

    mutable std::shared_mutex sessions_mu_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
    int next_session_number_ = 1;
};

}  // namespace popforge
