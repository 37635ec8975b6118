#pragma once

// Shared value types. Every type validates its invariants on construction,
// so a value that exists is a valid value. All types are immutable.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "popforge/error.hpp"

namespace popforge {

// ---------------------------------------------------------------------------
// Enumerations
// ---------------------------------------------------------------------------

enum class Gender { Female, Male, Any };

enum class Answer { Yes, No };

enum class PurchaseMotive {
    AppearanceSuitability,
    Fashionability,
    PracticalityEconomy,
    QualityTraditionReliability,
    OthersApproval,
    Combination,
};

inline constexpr std::array<PurchaseMotive, 6> kAllMotives{
    PurchaseMotive::AppearanceSuitability,       PurchaseMotive::Fashionability,
    PurchaseMotive::PracticalityEconomy,         PurchaseMotive::QualityTraditionReliability,
    PurchaseMotive::OthersApproval,              PurchaseMotive::Combination,
};

enum class MethodCondition { NoSupport, AnalysisOnly, DraftEdit, AllManual, AllAuto };

inline constexpr std::array<MethodCondition, 5> kAllMethods{
    MethodCondition::NoSupport, MethodCondition::AnalysisOnly, MethodCondition::DraftEdit,
    MethodCondition::AllManual, MethodCondition::AllAuto,
};

enum class Winner { A, B };

std::string_view to_string(Gender g) noexcept;
std::string_view to_string(Answer a) noexcept;
std::string_view to_string(PurchaseMotive m) noexcept;
std::string_view to_string(MethodCondition m) noexcept;
std::string_view to_string(Winner w) noexcept;

// Parsers throw Error(Validation) on unknown labels.
Gender parse_gender(std::string_view s);
Answer parse_answer(std::string_view s);
PurchaseMotive parse_motive(std::string_view s);
MethodCondition parse_method(std::string_view s);
Winner parse_winner(std::string_view s);

/// Default human-readable motive names used when filling prompt slots.
std::string_view default_motive_label(PurchaseMotive m) noexcept;

inline std::size_t motive_index(PurchaseMotive m) noexcept { return static_cast<std::size_t>(m); }

// ---------------------------------------------------------------------------
// Profile
// ---------------------------------------------------------------------------

class UserProvidedProfile {
public:
    UserProvidedProfile(Gender target_gender, std::string target_age_range,
                        std::string product_description);

    Gender target_gender() const noexcept { return target_gender_; }
    const std::string& target_age_range() const noexcept { return target_age_range_; }
    const std::string& product_description() const noexcept { return product_description_; }

    /// "women in their 20s" style label used to fill the target slot.
    std::string target_label() const;

    friend bool operator==(const UserProvidedProfile&, const UserProvidedProfile&) = default;

private:
    Gender target_gender_;
    std::string target_age_range_;
    std::string product_description_;
};

class QAExchange {
public:
    QAExchange(std::string question_id, std::string question, std::string rationale,
               Answer answer, int sequence);

    const std::string& question_id() const noexcept { return question_id_; }
    const std::string& question() const noexcept { return question_; }
    const std::string& rationale() const noexcept { return rationale_; }
    Answer answer() const noexcept { return answer_; }
    int sequence() const noexcept { return sequence_; }

    friend bool operator==(const QAExchange&, const QAExchange&) = default;

private:
    std::string question_id_;
    std::string question_;
    std::string rationale_;
    Answer answer_;
    int sequence_;
};

/// Base profile plus an append-only Q&A history. version() == history size.
class RefinedProfile {
public:
    explicit RefinedProfile(UserProvidedProfile base);
    RefinedProfile(UserProvidedProfile base, std::vector<QAExchange> history);

    const UserProvidedProfile& base() const noexcept { return base_; }
    std::span<const QAExchange> history() const noexcept { return history_; }
    int version() const noexcept { return static_cast<int>(history_.size()); }

    /// Returns a new profile with one more exchange; *this is unchanged.
    RefinedProfile appended(std::string question_id, std::string question, std::string rationale,
                            Answer answer) const;

    friend bool operator==(const RefinedProfile&, const RefinedProfile&) = default;

private:
    UserProvidedProfile base_;
    std::vector<QAExchange> history_;
};

// ---------------------------------------------------------------------------
// Drafts
// ---------------------------------------------------------------------------

class PopText {
public:
    enum class Kind { Initial, Rephrase, Edit };

    PopText(std::string pop_id, std::string catchphrase, std::string explanation,
            std::optional<std::string> parent_id, std::optional<PurchaseMotive> motive,
            int profile_version, bool edited_by_user);

    static PopText initial(std::string pop_id, std::string catchphrase, std::string explanation,
                           int profile_version);
    static PopText rephrased(std::string pop_id, std::string catchphrase, std::string explanation,
                             std::string parent_id, PurchaseMotive motive, int profile_version);
    static PopText edited(std::string pop_id, std::string catchphrase, std::string explanation,
                          std::string parent_id, int profile_version);

    const std::string& pop_id() const noexcept { return pop_id_; }
    const std::string& catchphrase() const noexcept { return catchphrase_; }
    const std::string& explanation() const noexcept { return explanation_; }
    const std::optional<std::string>& parent_id() const noexcept { return parent_id_; }
    const std::optional<PurchaseMotive>& motive() const noexcept { return motive_; }
    int profile_version() const noexcept { return profile_version_; }
    bool edited_by_user() const noexcept { return edited_by_user_; }

    Kind kind() const noexcept;

    friend bool operator==(const PopText&, const PopText&) = default;

private:
    std::string pop_id_;
    std::string catchphrase_;
    std::string explanation_;
    std::optional<std::string> parent_id_;
    std::optional<PurchaseMotive> motive_;
    int profile_version_;
    bool edited_by_user_;
};

// ---------------------------------------------------------------------------
// Personas and evaluations
// ---------------------------------------------------------------------------

using Triple = std::array<std::string, 3>;

class Persona {
public:
    Persona(int age, std::string occupation, std::string family_structure, std::string lifestyle,
            Triple clothing_needs, Triple attractive_points, int persona_set_version);

    int age() const noexcept { return age_; }
    const std::string& occupation() const noexcept { return occupation_; }
    const std::string& family_structure() const noexcept { return family_structure_; }
    const std::string& lifestyle() const noexcept { return lifestyle_; }
    const Triple& clothing_needs() const noexcept { return clothing_needs_; }
    const Triple& attractive_points() const noexcept { return attractive_points_; }
    int persona_set_version() const noexcept { return persona_set_version_; }

    Persona with_set_version(int version) const;

    friend bool operator==(const Persona&, const Persona&) = default;

private:
    int age_;
    std::string occupation_;
    std::string family_structure_;
    std::string lifestyle_;
    Triple clothing_needs_;
    Triple attractive_points_;
    int persona_set_version_;
};

using PersonaSet = std::array<Persona, 3>;

class PersonaEvaluation {
public:
    PersonaEvaluation(int persona_index, std::string pop_id, int rating, std::string reason);

    int persona_index() const noexcept { return persona_index_; }
    const std::string& pop_id() const noexcept { return pop_id_; }
    int rating() const noexcept { return rating_; }
    const std::string& reason() const noexcept { return reason_; }

    friend bool operator==(const PersonaEvaluation&, const PersonaEvaluation&) = default;

private:
    int persona_index_;
    std::string pop_id_;
    int rating_;
    std::string reason_;
};

inline constexpr std::size_t kPersonasPerRound = 3;
inline constexpr std::size_t kPopsPerRound = 6;
inline constexpr std::size_t kEvaluationsPerRound = kPersonasPerRound * kPopsPerRound;

class EvaluationRound {
public:
    /// Throws CardinalityViolation unless the evaluations cover the 3x6 grid
    /// exactly once.
    EvaluationRound(std::string round_id, PersonaSet personas, std::vector<std::string> pop_ids,
                    std::vector<PersonaEvaluation> evaluations);

    const std::string& round_id() const noexcept { return round_id_; }
    const PersonaSet& personas() const noexcept { return personas_; }
    std::span<const std::string> pop_ids() const noexcept { return pop_ids_; }
    std::span<const PersonaEvaluation> evaluations() const noexcept { return evaluations_; }
    int persona_set_version() const noexcept { return personas_[0].persona_set_version(); }

    /// Rating for (persona, pop position); the grid is complete by construction.
    int rating(std::size_t persona_index, std::size_t pop_position) const;

    friend bool operator==(const EvaluationRound&, const EvaluationRound&) = default;

private:
    std::string round_id_;
    PersonaSet personas_;
    std::vector<std::string> pop_ids_;
    std::vector<PersonaEvaluation> evaluations_;
};

// ---------------------------------------------------------------------------
// Pairwise judgments (offline evaluation)
// ---------------------------------------------------------------------------

class PairwiseJudgment {
public:
    PairwiseJudgment(std::string evaluator_id, std::string item_id, MethodCondition method_a,
                     MethodCondition method_b, Winner winner, int magnitude);

    const std::string& evaluator_id() const noexcept { return evaluator_id_; }
    const std::string& item_id() const noexcept { return item_id_; }
    MethodCondition method_a() const noexcept { return method_a_; }
    MethodCondition method_b() const noexcept { return method_b_; }
    Winner winner() const noexcept { return winner_; }
    int magnitude() const noexcept { return magnitude_; }

    friend bool operator==(const PairwiseJudgment&, const PairwiseJudgment&) = default;

private:
    std::string evaluator_id_;
    std::string item_id_;
    MethodCondition method_a_;
    MethodCondition method_b_;
    Winner winner_;
    int magnitude_;
};

// ---------------------------------------------------------------------------
// Text helpers
// ---------------------------------------------------------------------------

/// Number of Unicode scalar values in a UTF-8 string. Throws Validation on
/// malformed input.
std::size_t count_scalars(std::string_view utf8);

std::string trim(std::string_view s);

}  // namespace popforge

// ---------------------------------------------------------------------------
// JSON (snake_case field names). Decoding re-validates every invariant.
// ---------------------------------------------------------------------------

namespace nlohmann {

#define POPFORGE_JSON_SERIALIZER(Type)              \
    template <>                                     \
    struct adl_serializer<Type> {                   \
        static Type from_json(const json& j);       \
        static void to_json(json& j, const Type& v); \
    }

POPFORGE_JSON_SERIALIZER(popforge::Gender);
POPFORGE_JSON_SERIALIZER(popforge::Answer);
POPFORGE_JSON_SERIALIZER(popforge::PurchaseMotive);
POPFORGE_JSON_SERIALIZER(popforge::MethodCondition);
POPFORGE_JSON_SERIALIZER(popforge::Winner);
POPFORGE_JSON_SERIALIZER(popforge::UserProvidedProfile);
POPFORGE_JSON_SERIALIZER(popforge::QAExchange);
POPFORGE_JSON_SERIALIZER(popforge::RefinedProfile);
POPFORGE_JSON_SERIALIZER(popforge::PopText);
POPFORGE_JSON_SERIALIZER(popforge::Persona);
POPFORGE_JSON_SERIALIZER(popforge::PersonaSet);
POPFORGE_JSON_SERIALIZER(popforge::PersonaEvaluation);
POPFORGE_JSON_SERIALIZER(popforge::EvaluationRound);
POPFORGE_JSON_SERIALIZER(popforge::PairwiseJudgment);

#undef POPFORGE_JSON_SERIALIZER

}  // namespace nlohmann
