#include "popforge/domain.hpp"

#include <algorithm>
#include <set>
#include <utility>

namespace popforge {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Validation: return "Validation";
        case ErrorCode::UnknownTemplate: return "UnknownTemplate";
        case ErrorCode::MissingSlot: return "MissingSlot";
        case ErrorCode::ExtraSlot: return "ExtraSlot";
        case ErrorCode::Transport: return "Transport";
        case ErrorCode::AuthFailure: return "AuthFailure";
        case ErrorCode::Timeout: return "Timeout";
        case ErrorCode::ParseFailure: return "ParseFailure";
        case ErrorCode::UnknownQuestion: return "UnknownQuestion";
        case ErrorCode::NoPendingQuestion: return "NoPendingQuestion";
        case ErrorCode::RoundLimitReached: return "RoundLimitReached";
        case ErrorCode::UnknownSource: return "UnknownSource";
        case ErrorCode::EmptyText: return "EmptyText";
        case ErrorCode::CardinalityViolation: return "CardinalityViolation";
        case ErrorCode::WrongState: return "WrongState";
        case ErrorCode::UnknownPop: return "UnknownPop";
        case ErrorCode::UnknownSession: return "UnknownSession";
        case ErrorCode::NoRounds: return "NoRounds";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

namespace {

template <typename Enum, std::size_t N>
Enum parse_label(std::string_view s, const std::array<Enum, N>& values, std::string_view what) {
    for (Enum v : values) {
        if (to_string(v) == s) return v;
    }
    fail(ErrorCode::Validation, "unknown " + std::string(what) + " label '" + std::string(s) + "'");
}

bool blank(std::string_view s) { return trim(s).empty(); }

}  // namespace

std::string_view to_string(Gender g) noexcept {
    switch (g) {
        case Gender::Female: return "female";
        case Gender::Male: return "male";
        case Gender::Any: return "any";
    }
    return "any";
}

std::string_view to_string(Answer a) noexcept { return a == Answer::Yes ? "Yes" : "No"; }

std::string_view to_string(PurchaseMotive m) noexcept {
    switch (m) {
        case PurchaseMotive::AppearanceSuitability: return "AppearanceSuitability";
        case PurchaseMotive::Fashionability: return "Fashionability";
        case PurchaseMotive::PracticalityEconomy: return "PracticalityEconomy";
        case PurchaseMotive::QualityTraditionReliability: return "QualityTraditionReliability";
        case PurchaseMotive::OthersApproval: return "OthersApproval";
        case PurchaseMotive::Combination: return "Combination";
    }
    return "Combination";
}

std::string_view to_string(MethodCondition m) noexcept {
    switch (m) {
        case MethodCondition::NoSupport: return "NoSupport";
        case MethodCondition::AnalysisOnly: return "AnalysisOnly";
        case MethodCondition::DraftEdit: return "DraftEdit";
        case MethodCondition::AllManual: return "AllManual";
        case MethodCondition::AllAuto: return "AllAuto";
    }
    return "NoSupport";
}

std::string_view to_string(Winner w) noexcept { return w == Winner::A ? "A" : "B"; }

Gender parse_gender(std::string_view s) {
    return parse_label(s, std::array{Gender::Female, Gender::Male, Gender::Any}, "gender");
}
Answer parse_answer(std::string_view s) {
    return parse_label(s, std::array{Answer::Yes, Answer::No}, "answer");
}
PurchaseMotive parse_motive(std::string_view s) { return parse_label(s, kAllMotives, "motive"); }
MethodCondition parse_method(std::string_view s) { return parse_label(s, kAllMethods, "method"); }
Winner parse_winner(std::string_view s) {
    return parse_label(s, std::array{Winner::A, Winner::B}, "winner");
}

std::string_view default_motive_label(PurchaseMotive m) noexcept {
    switch (m) {
        case PurchaseMotive::AppearanceSuitability: return "appearance preference/suitability";
        case PurchaseMotive::Fashionability: return "fashionability";
        case PurchaseMotive::PracticalityEconomy: return "practicality/economy";
        case PurchaseMotive::QualityTraditionReliability:
            return "quality/traditionality/reliability";
        case PurchaseMotive::OthersApproval: return "gaining others' approval";
        case PurchaseMotive::Combination: return "combination";
    }
    return "combination";
}

// ---------------------------------------------------------------------------

UserProvidedProfile::UserProvidedProfile(Gender target_gender, std::string target_age_range,
                                         std::string product_description)
    : target_gender_(target_gender),
      target_age_range_(std::move(target_age_range)),
      product_description_(std::move(product_description)) {
    require(!blank(product_description_), "product_description must not be empty");
}

std::string UserProvidedProfile::target_label() const {
    if (!trim(target_age_range_).empty()) return target_age_range_;
    switch (target_gender_) {
        case Gender::Female: return "women";
        case Gender::Male: return "men";
        case Gender::Any: return "customers of any gender";
    }
    return {};
}

QAExchange::QAExchange(std::string question_id, std::string question, std::string rationale,
                       Answer answer, int sequence)
    : question_id_(std::move(question_id)),
      question_(std::move(question)),
      rationale_(std::move(rationale)),
      answer_(answer),
      sequence_(sequence) {
    require(!question_id_.empty(), "question_id must not be empty");
    require(!blank(question_), "question must not be empty");
    require(!blank(rationale_), "rationale must not be empty");
    require(sequence_ >= 0, "sequence must be non-negative");
}

RefinedProfile::RefinedProfile(UserProvidedProfile base) : base_(std::move(base)) {}

RefinedProfile::RefinedProfile(UserProvidedProfile base, std::vector<QAExchange> history)
    : base_(std::move(base)), history_(std::move(history)) {
    for (std::size_t i = 0; i < history_.size(); ++i) {
        require(history_[i].sequence() == static_cast<int>(i),
                "history sequence numbers must be consecutive from 0");
    }
}

RefinedProfile RefinedProfile::appended(std::string question_id, std::string question,
                                        std::string rationale, Answer answer) const {
    RefinedProfile next = *this;
    next.history_.emplace_back(std::move(question_id), std::move(question), std::move(rationale),
                               answer, version());
    return next;
}

// ---------------------------------------------------------------------------

PopText::PopText(std::string pop_id, std::string catchphrase, std::string explanation,
                 std::optional<std::string> parent_id, std::optional<PurchaseMotive> motive,
                 int profile_version, bool edited_by_user)
    : pop_id_(std::move(pop_id)),
      catchphrase_(std::move(catchphrase)),
      explanation_(std::move(explanation)),
      parent_id_(std::move(parent_id)),
      motive_(motive),
      profile_version_(profile_version),
      edited_by_user_(edited_by_user) {
    require(!pop_id_.empty(), "pop_id must not be empty");
    if (blank(catchphrase_) || blank(explanation_)) {
        fail(ErrorCode::EmptyText, "catchphrase and explanation must not be empty");
    }
    require(profile_version_ >= 0, "profile_version must be non-negative");
    require(!parent_id_ || !parent_id_->empty(), "parent_id must not be empty when present");
    if (!parent_id_) {
        require(!motive_ && !edited_by_user_, "an initial draft carries no motive and no edit flag");
    } else if (edited_by_user_) {
        require(!motive_, "a user edit carries no motive");
    } else {
        require(motive_.has_value(), "a rephrased draft must carry its motive");
    }
}

PopText PopText::initial(std::string pop_id, std::string catchphrase, std::string explanation,
                         int profile_version) {
    return {std::move(pop_id), std::move(catchphrase), std::move(explanation), std::nullopt,
            std::nullopt, profile_version, false};
}

PopText PopText::rephrased(std::string pop_id, std::string catchphrase, std::string explanation,
                           std::string parent_id, PurchaseMotive motive, int profile_version) {
    return {std::move(pop_id), std::move(catchphrase), std::move(explanation),
            std::move(parent_id), motive, profile_version, false};
}

PopText PopText::edited(std::string pop_id, std::string catchphrase, std::string explanation,
                        std::string parent_id, int profile_version) {
    return {std::move(pop_id), std::move(catchphrase), std::move(explanation),
            std::move(parent_id), std::nullopt, profile_version, true};
}

PopText::Kind PopText::kind() const noexcept {
    if (!parent_id_) return Kind::Initial;
    return edited_by_user_ ? Kind::Edit : Kind::Rephrase;
}

// ---------------------------------------------------------------------------

Persona::Persona(int age, std::string occupation, std::string family_structure,
                 std::string lifestyle, Triple clothing_needs, Triple attractive_points,
                 int persona_set_version)
    : age_(age),
      occupation_(std::move(occupation)),
      family_structure_(std::move(family_structure)),
      lifestyle_(std::move(lifestyle)),
      clothing_needs_(std::move(clothing_needs)),
      attractive_points_(std::move(attractive_points)),
      persona_set_version_(persona_set_version) {
    require(age_ > 0 && age_ < 150, "persona age out of range");
    require(!blank(occupation_), "persona occupation must not be empty");
    require(!blank(family_structure_), "persona family structure must not be empty");
    require(!blank(lifestyle_), "persona lifestyle must not be empty");
    for (const auto& s : clothing_needs_) require(!blank(s), "clothing need must not be empty");
    for (const auto& s : attractive_points_) {
        require(!blank(s), "attractive point must not be empty");
    }
    require(persona_set_version_ >= 0, "persona_set_version must be non-negative");
}

Persona Persona::with_set_version(int version) const {
    return {age_, occupation_, family_structure_, lifestyle_, clothing_needs_, attractive_points_,
            version};
}

PersonaEvaluation::PersonaEvaluation(int persona_index, std::string pop_id, int rating,
                                     std::string reason)
    : persona_index_(persona_index),
      pop_id_(std::move(pop_id)),
      rating_(rating),
      reason_(std::move(reason)) {
    require(persona_index_ >= 0 && persona_index_ < static_cast<int>(kPersonasPerRound),
            "persona_index must be 0..2");
    require(!pop_id_.empty(), "evaluation pop_id must not be empty");
    require(rating_ >= 1 && rating_ <= 10, "rating must be within 1..10");
    require(!blank(reason_), "evaluation reason must not be empty");
}

EvaluationRound::EvaluationRound(std::string round_id, PersonaSet personas,
                                 std::vector<std::string> pop_ids,
                                 std::vector<PersonaEvaluation> evaluations)
    : round_id_(std::move(round_id)),
      personas_(std::move(personas)),
      pop_ids_(std::move(pop_ids)),
      evaluations_(std::move(evaluations)) {
    require(!round_id_.empty(), "round_id must not be empty");
    const int version = personas_[0].persona_set_version();
    for (const auto& p : personas_) {
        if (p.persona_set_version() != version) {
            fail(ErrorCode::CardinalityViolation, "personas of a round must share one set version");
        }
    }
    if (pop_ids_.size() != kPopsPerRound) {
        fail(ErrorCode::CardinalityViolation, "a round holds exactly 6 pops");
    }
    if (std::set<std::string>(pop_ids_.begin(), pop_ids_.end()).size() != kPopsPerRound) {
        fail(ErrorCode::CardinalityViolation, "round pops must be distinct");
    }
    if (evaluations_.size() != kEvaluationsPerRound) {
        fail(ErrorCode::CardinalityViolation, "a round holds exactly 18 evaluations");
    }
    std::set<std::pair<int, std::string>> seen;
    for (const auto& e : evaluations_) {
        if (std::find(pop_ids_.begin(), pop_ids_.end(), e.pop_id()) == pop_ids_.end()) {
            fail(ErrorCode::CardinalityViolation, "evaluation references pop outside the round");
        }
        if (!seen.emplace(e.persona_index(), e.pop_id()).second) {
            fail(ErrorCode::CardinalityViolation, "duplicate (persona, pop) evaluation");
        }
    }
}

int EvaluationRound::rating(std::size_t persona_index, std::size_t pop_position) const {
    const auto& pop_id = pop_ids_.at(pop_position);
    for (const auto& e : evaluations_) {
        if (e.persona_index() == static_cast<int>(persona_index) && e.pop_id() == pop_id) {
            return e.rating();
        }
    }
    fail(ErrorCode::CardinalityViolation, "missing evaluation cell");
}

PairwiseJudgment::PairwiseJudgment(std::string evaluator_id, std::string item_id,
                                   MethodCondition method_a, MethodCondition method_b,
                                   Winner winner, int magnitude)
    : evaluator_id_(std::move(evaluator_id)),
      item_id_(std::move(item_id)),
      method_a_(method_a),
      method_b_(method_b),
      winner_(winner),
      magnitude_(magnitude) {
    require(!evaluator_id_.empty(), "evaluator_id must not be empty");
    require(!item_id_.empty(), "item_id must not be empty");
    require(method_a_ != method_b_, "a judgment compares two different methods");
    require(magnitude_ >= 1 && magnitude_ <= 3, "magnitude must be within 1..3");
}

// ---------------------------------------------------------------------------

std::size_t count_scalars(std::string_view utf8) {
    std::size_t count = 0;
    std::size_t i = 0;
    while (i < utf8.size()) {
        const auto lead = static_cast<unsigned char>(utf8[i]);
        std::size_t len = 0;
        if (lead < 0x80) len = 1;
        else if ((lead & 0xE0) == 0xC0 && lead >= 0xC2) len = 2;
        else if ((lead & 0xF0) == 0xE0) len = 3;
        else if ((lead & 0xF8) == 0xF0 && lead <= 0xF4) len = 4;
        else fail(ErrorCode::Validation, "malformed UTF-8");
        if (i + len > utf8.size()) fail(ErrorCode::Validation, "truncated UTF-8 sequence");
        for (std::size_t k = 1; k < len; ++k) {
            if ((static_cast<unsigned char>(utf8[i + k]) & 0xC0) != 0x80) {
                fail(ErrorCode::Validation, "malformed UTF-8");
            }
        }
        i += len;
        ++count;
    }
    return count;
}

std::string trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n\f\v";
    const auto first = s.find_first_not_of(ws);
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(ws);
    return std::string(s.substr(first, last - first + 1));
}

}  // namespace popforge

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace nlohmann {

using popforge::ErrorCode;

namespace {

template <typename T>
T field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        popforge::fail(ErrorCode::Validation, std::string("missing field '") + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        popforge::fail(ErrorCode::Validation, std::string("bad field '") + key + "': " + e.what());
    }
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return field<T>(j, key);
}

popforge::Triple triple(const json& j, const char* key) {
    auto items = field<std::vector<std::string>>(j, key);
    if (items.size() != 3) {
        popforge::fail(ErrorCode::Validation, std::string(key) + " must hold exactly 3 entries");
    }
    return {items[0], items[1], items[2]};
}

template <typename T>
std::vector<T> list(const json& j, const char* key) {
    const json& arr = field<json>(j, key);
    if (!arr.is_array()) popforge::fail(ErrorCode::Validation, std::string(key) + " must be a list");
    std::vector<T> out;
    out.reserve(arr.size());
    for (const auto& item : arr) out.push_back(item.get<T>());
    return out;
}

std::string label(const json& j) {
    if (!j.is_string()) popforge::fail(ErrorCode::Validation, "expected a string label");
    return j.get<std::string>();
}

}  // namespace

#define POPFORGE_ENUM_JSON(Type, parser)                                                       \
    Type adl_serializer<Type>::from_json(const json& j) { return popforge::parser(label(j)); } \
    void adl_serializer<Type>::to_json(json& j, const Type& v) {                               \
        j = std::string(popforge::to_string(v));                                               \
    }

POPFORGE_ENUM_JSON(popforge::Gender, parse_gender)
POPFORGE_ENUM_JSON(popforge::Answer, parse_answer)
POPFORGE_ENUM_JSON(popforge::PurchaseMotive, parse_motive)
POPFORGE_ENUM_JSON(popforge::MethodCondition, parse_method)
POPFORGE_ENUM_JSON(popforge::Winner, parse_winner)

#undef POPFORGE_ENUM_JSON

popforge::UserProvidedProfile adl_serializer<popforge::UserProvidedProfile>::from_json(
    const json& j) {
    return {field<popforge::Gender>(j, "target_gender"), field<std::string>(j, "target_age_range"),
            field<std::string>(j, "product_description")};
}

void adl_serializer<popforge::UserProvidedProfile>::to_json(
    json& j, const popforge::UserProvidedProfile& v) {
    j = json{{"target_gender", v.target_gender()},
             {"target_age_range", v.target_age_range()},
             {"product_description", v.product_description()}};
}

popforge::QAExchange adl_serializer<popforge::QAExchange>::from_json(const json& j) {
    return {field<std::string>(j, "question_id"), field<std::string>(j, "question"),
            field<std::string>(j, "rationale"), field<popforge::Answer>(j, "answer"),
            field<int>(j, "sequence")};
}

void adl_serializer<popforge::QAExchange>::to_json(json& j, const popforge::QAExchange& v) {
    j = json{{"question_id", v.question_id()}, {"question", v.question()},
             {"rationale", v.rationale()},     {"answer", v.answer()},
             {"sequence", v.sequence()}};
}

popforge::RefinedProfile adl_serializer<popforge::RefinedProfile>::from_json(const json& j) {
    popforge::RefinedProfile profile(field<popforge::UserProvidedProfile>(j, "base"),
                                     list<popforge::QAExchange>(j, "history"));
    if (auto version = optional_field<int>(j, "version"); version && *version != profile.version()) {
        popforge::fail(ErrorCode::Validation, "profile version must equal history length");
    }
    return profile;
}

void adl_serializer<popforge::RefinedProfile>::to_json(json& j,
                                                       const popforge::RefinedProfile& v) {
    json history = json::array();
    for (const auto& e : v.history()) history.push_back(e);
    j = json{{"base", v.base()}, {"history", std::move(history)}, {"version", v.version()}};
}

popforge::PopText adl_serializer<popforge::PopText>::from_json(const json& j) {
    return {field<std::string>(j, "pop_id"),
            field<std::string>(j, "catchphrase"),
            field<std::string>(j, "explanation"),
            optional_field<std::string>(j, "parent_id"),
            optional_field<popforge::PurchaseMotive>(j, "motive"),
            field<int>(j, "profile_version"),
            field<bool>(j, "edited_by_user")};
}

void adl_serializer<popforge::PopText>::to_json(json& j, const popforge::PopText& v) {
    j = json{{"pop_id", v.pop_id()},
             {"catchphrase", v.catchphrase()},
             {"explanation", v.explanation()},
             {"parent_id", v.parent_id() ? json(*v.parent_id()) : json(nullptr)},
             {"motive", v.motive() ? json(*v.motive()) : json(nullptr)},
             {"profile_version", v.profile_version()},
             {"edited_by_user", v.edited_by_user()}};
}

popforge::Persona adl_serializer<popforge::Persona>::from_json(const json& j) {
    return {field<int>(j, "age"),
            field<std::string>(j, "occupation"),
            field<std::string>(j, "family_structure"),
            field<std::string>(j, "lifestyle"),
            triple(j, "clothing_needs"),
            triple(j, "attractive_points"),
            field<int>(j, "persona_set_version")};
}

void adl_serializer<popforge::Persona>::to_json(json& j, const popforge::Persona& v) {
    j = json{{"age", v.age()},
             {"occupation", v.occupation()},
             {"family_structure", v.family_structure()},
             {"lifestyle", v.lifestyle()},
             {"clothing_needs", v.clothing_needs()},
             {"attractive_points", v.attractive_points()},
             {"persona_set_version", v.persona_set_version()}};
}

popforge::PersonaSet adl_serializer<popforge::PersonaSet>::from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) {
        popforge::fail(ErrorCode::Validation, "a persona set holds exactly 3 personas");
    }
    return {j[0].get<popforge::Persona>(), j[1].get<popforge::Persona>(),
            j[2].get<popforge::Persona>()};
}

void adl_serializer<popforge::PersonaSet>::to_json(json& j, const popforge::PersonaSet& v) {
    j = json::array({v[0], v[1], v[2]});
}

popforge::PersonaEvaluation adl_serializer<popforge::PersonaEvaluation>::from_json(
    const json& j) {
    return {field<int>(j, "persona_index"), field<std::string>(j, "pop_id"),
            field<int>(j, "rating"), field<std::string>(j, "reason")};
}

void adl_serializer<popforge::PersonaEvaluation>::to_json(json& j,
                                                          const popforge::PersonaEvaluation& v) {
    j = json{{"persona_index", v.persona_index()},
             {"pop_id", v.pop_id()},
             {"rating", v.rating()},
             {"reason", v.reason()}};
}

popforge::EvaluationRound adl_serializer<popforge::EvaluationRound>::from_json(const json& j) {
    return {field<std::string>(j, "round_id"), field<popforge::PersonaSet>(j, "personas"),
            field<std::vector<std::string>>(j, "pops"),
            list<popforge::PersonaEvaluation>(j, "evaluations")};
}

void adl_serializer<popforge::EvaluationRound>::to_json(json& j,
                                                        const popforge::EvaluationRound& v) {
    json evaluations = json::array();
    for (const auto& e : v.evaluations()) evaluations.push_back(e);
    j = json{{"round_id", v.round_id()},
             {"personas", v.personas()},
             {"pops", std::vector<std::string>(v.pop_ids().begin(), v.pop_ids().end())},
             {"persona_set_version", v.persona_set_version()},
             {"evaluations", std::move(evaluations)}};
}

popforge::PairwiseJudgment adl_serializer<popforge::PairwiseJudgment>::from_json(const json& j) {
    return {field<std::string>(j, "evaluator_id"),
            field<std::string>(j, "item_id"),
            field<popforge::MethodCondition>(j, "method_a"),
            field<popforge::MethodCondition>(j, "method_b"),
            field<popforge::Winner>(j, "winner"),
            field<int>(j, "magnitude")};
}

void adl_serializer<popforge::PairwiseJudgment>::to_json(json& j,
                                                         const popforge::PairwiseJudgment& v) {
    j = json{{"evaluator_id", v.evaluator_id()}, {"item_id", v.item_id()},
             {"method_a", v.method_a()},         {"method_b", v.method_b()},
             {"winner", v.winner()},             {"magnitude", v.magnitude()}};
}

}  // namespace nlohmann
