#pragma once

// The four generation stages: profile builder (questions and answers), draft
// generator and style rephraser (the rephrase forest), and persona evaluator.

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "popforge/domain.hpp"
#include "popforge/llm/gateway.hpp"
#include "popforge/llm/structured.hpp"
#include "popforge/llm/templates.hpp"

namespace popforge {

/// Counter-backed id source: "pop-1", "pop-2", ...
class IdSequence {
public:
    explicit IdSequence(std::string prefix, int next = 1) : prefix_(std::move(prefix)), next_(next) {}

    std::string next() { return prefix_ + "-" + std::to_string(next_++); }
    int peek() const noexcept { return next_; }

private:
    std::string prefix_;
    int next_;
};

struct LengthPolicy {
    int catchphrase_target = 10;
    int explanation_target = 50;
    double tolerance_ratio = 0.5;

    void validate() const;
};

struct PipelineConfig {
    int max_rounds = 10;
    int parse_retries = 3;
    LengthPolicy length_policy;
    llm::MotiveLabels motive_labels;

    static PipelineConfig from_json(const nlohmann::json& j);
};

/// Everything a stage needs to talk to the model.
struct StageContext {
    std::shared_ptr<const llm::Gateway> gateway;
    std::shared_ptr<const llm::TemplateSet> templates;
    PipelineConfig config;
};

// ---------------------------------------------------------------------------
// Profile builder
// ---------------------------------------------------------------------------

struct PendingQuestion {
    std::string question_id;
    std::string question;
    std::string rationale;

    friend bool operator==(const PendingQuestion&, const PendingQuestion&) = default;
};

class ProfileBuilder {
public:
    explicit ProfileBuilder(StageContext ctx) : ctx_(std::move(ctx)) {}

    /// Throws RoundLimitReached once the profile has max_rounds answers.
    PendingQuestion generate_question(const RefinedProfile& profile, std::string question_id) const;

    /// Pure: returns the extended profile, leaves `profile` untouched.
    RefinedProfile apply_answer(const RefinedProfile& profile,
                                const std::optional<PendingQuestion>& pending,
                                std::string_view question_id, Answer answer) const;

    std::string render_prompt(const RefinedProfile& profile) const;

private:
    StageContext ctx_;
};

// ---------------------------------------------------------------------------
// Draft generator + style rephraser
// ---------------------------------------------------------------------------

/// Append-only forest of drafts in insertion order.
class PopForest {
public:
    bool contains(std::string_view pop_id) const;
    const PopText& at(std::string_view pop_id) const;  // UnknownPop
    const PopText* find(std::string_view pop_id) const;

    /// Throws Validation on duplicate ids or a missing parent.
    void add(PopText pop);

    std::span<const PopText> nodes() const noexcept { return nodes_; }
    std::size_t size() const noexcept { return nodes_.size(); }

    std::vector<const PopText*> children(std::string_view pop_id) const;
    /// Root-to-node chain.
    std::vector<const PopText*> path_to(std::string_view pop_id) const;

    /// Every parent exists and precedes its child, so no cycles are possible.
    bool is_well_formed() const;

    friend bool operator==(const PopForest&, const PopForest&) = default;

private:
    std::vector<PopText> nodes_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

struct LengthWarning {
    enum class Field { Catchphrase, Explanation };
    Field field;
    std::size_t length;
    double lower;
    double upper;

    std::string message() const;
};

/// Advisory only: flags fields outside target +/- target*tolerance_ratio,
/// counting Unicode scalar values.
std::vector<LengthWarning> validate_lengths(const PopText& pop, const LengthPolicy& policy);

class DraftPipeline {
public:
    explicit DraftPipeline(StageContext ctx) : ctx_(std::move(ctx)) {}

    PopText generate_draft(const RefinedProfile& profile, std::string pop_id) const;

    PopText rephrase(const PopForest& forest, std::string_view source_id, PurchaseMotive motive,
                     const RefinedProfile& profile, std::string pop_id) const;

    /// Six children in motive enumeration order, or an exception and no ids
    /// consumed from `ids`.
    std::vector<PopText> rephrase_all(const PopForest& forest, std::string_view source_id,
                                      const RefinedProfile& profile, IdSequence& ids) const;

    std::string render_draft_prompt(const RefinedProfile& profile) const;
    std::string render_rephrase_prompt(const PopText& source, PurchaseMotive motive,
                                       const RefinedProfile& profile) const;

private:
    StageContext ctx_;
};

/// New edit node under `source`. Throws EmptyText.
PopText apply_user_edit(const PopText& source, std::string new_catchphrase,
                        std::string new_explanation, std::string pop_id);

// ---------------------------------------------------------------------------
// Persona evaluator
// ---------------------------------------------------------------------------

struct PopScore {
    std::string pop_id;
    std::array<int, kPersonasPerRound> ratings{};
    int sum = 0;
    double mean = 0.0;

    friend bool operator==(const PopScore&, const PopScore&) = default;
};

/// Per-pop scores in the round's pop order.
struct RoundAggregate {
    std::vector<PopScore> scores;

    const PopScore& at(std::string_view pop_id) const;
    std::map<std::string, double> means() const;
};

class PersonaEvaluator {
public:
    explicit PersonaEvaluator(StageContext ctx) : ctx_(std::move(ctx)) {}

    PersonaSet generate_personas(const RefinedProfile& profile) const;

    /// One grid call (with re-prompts); if it keeps failing to parse, falls
    /// back to one call per persona. Throws CardinalityViolation unless given
    /// 3 same-version personas and 6 non-initial pops.
    EvaluationRound evaluate_round(std::span<const Persona> personas, std::span<const PopText> pops,
                                   std::string round_id) const;

    std::string render_persona_prompt(const RefinedProfile& profile) const;
    std::string render_evaluation_prompt(std::span<const Persona> personas,
                                         std::span<const PopText> pops) const;

private:
    StageContext ctx_;
};

RoundAggregate aggregate(const EvaluationRound& round);

/// Highest mean rating; ties go to the earliest pop in the round's list.
std::string select_best(const EvaluationRound& round);

}  // namespace popforge
