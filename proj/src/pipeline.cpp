#include "popforge/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace popforge {

using llm::TemplateId;

void LengthPolicy::validate() const {
    require(catchphrase_target >= 1 && explanation_target >= 1, "length targets must be >= 1");
    require(tolerance_ratio >= 0.0 && tolerance_ratio <= 1.0, "tolerance_ratio must be in [0, 1]");
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
    PipelineConfig c;
    try {
        c.max_rounds = j.value("max_rounds", c.max_rounds);
        c.parse_retries = j.value("parse_retries", c.parse_retries);
        if (j.contains("length_policy")) {
            const auto& lp = j.at("length_policy");
            c.length_policy.catchphrase_target =
                lp.value("catchphrase_target", c.length_policy.catchphrase_target);
            c.length_policy.explanation_target =
                lp.value("explanation_target", c.length_policy.explanation_target);
            c.length_policy.tolerance_ratio =
                lp.value("tolerance_ratio", c.length_policy.tolerance_ratio);
        }
        if (j.contains("motive_labels")) {
            const auto& labels = j.at("motive_labels");
            std::array<std::string, 6> out;
            for (auto m : kAllMotives) {
                out[motive_index(m)] =
                    labels.value(std::string(to_string(m)), std::string(default_motive_label(m)));
            }
            c.motive_labels = llm::MotiveLabels(std::move(out));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Validation, std::string("bad pipeline config: ") + e.what());
    }
    require(c.max_rounds >= 0, "max_rounds must be >= 0");
    require(c.parse_retries >= 0, "parse_retries must be >= 0");
    c.length_policy.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Profile builder
// ---------------------------------------------------------------------------

std::string ProfileBuilder::render_prompt(const RefinedProfile& profile) const {
    return ctx_.templates->render(TemplateId::PbQuestion, llm::profile_slots(profile));
}

PendingQuestion ProfileBuilder::generate_question(const RefinedProfile& profile,
                                                  std::string question_id) const {
    if (profile.version() >= ctx_.config.max_rounds) {
        fail(ErrorCode::RoundLimitReached,
             "question limit of " + std::to_string(ctx_.config.max_rounds) + " reached");
    }
    auto parsed = llm::complete_parsed(*ctx_.gateway, TemplateId::PbQuestion,
                                       render_prompt(profile), ctx_.config.parse_retries,
                                       llm::parse_question);
    return {std::move(question_id), std::move(parsed.question), std::move(parsed.rationale)};
}

RefinedProfile ProfileBuilder::apply_answer(const RefinedProfile& profile,
                                            const std::optional<PendingQuestion>& pending,
                                            std::string_view question_id, Answer answer) const {
    if (!pending) fail(ErrorCode::NoPendingQuestion, "no question is waiting for an answer");
    if (pending->question_id != question_id) {
        fail(ErrorCode::UnknownQuestion, "question '" + std::string(question_id) + "' is not pending");
    }
    if (profile.version() >= ctx_.config.max_rounds) {
        fail(ErrorCode::RoundLimitReached, "question limit reached");
    }
    return profile.appended(pending->question_id, pending->question, pending->rationale, answer);
}

// ---------------------------------------------------------------------------
// Forest
// ---------------------------------------------------------------------------

bool PopForest::contains(std::string_view pop_id) const { return index_.contains(pop_id); }

const PopText* PopForest::find(std::string_view pop_id) const {
    auto it = index_.find(pop_id);
    return it == index_.end() ? nullptr : &nodes_[it->second];
}

const PopText& PopForest::at(std::string_view pop_id) const {
    if (const auto* p = find(pop_id)) return *p;
    fail(ErrorCode::UnknownPop, "unknown pop '" + std::string(pop_id) + "'");
}

void PopForest::add(PopText pop) {
    require(!contains(pop.pop_id()), "duplicate pop id '" + pop.pop_id() + "'");
    if (pop.parent_id()) {
        require(contains(*pop.parent_id()), "parent '" + *pop.parent_id() + "' not in forest");
    }
    index_.emplace(pop.pop_id(), nodes_.size());
    nodes_.push_back(std::move(pop));
}

std::vector<const PopText*> PopForest::children(std::string_view pop_id) const {
    std::vector<const PopText*> out;
    for (const auto& n : nodes_) {
        if (n.parent_id() && *n.parent_id() == pop_id) out.push_back(&n);
    }
    return out;
}

std::vector<const PopText*> PopForest::path_to(std::string_view pop_id) const {
    std::vector<const PopText*> path;
    const PopText* node = &at(pop_id);
    while (node != nullptr) {
        path.push_back(node);
        node = node->parent_id() ? find(*node->parent_id()) : nullptr;
        require(path.size() <= nodes_.size(), "cycle in pop forest");
    }
    std::reverse(path.begin(), path.end());
    return path;
}

bool PopForest::is_well_formed() const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        auto it = index_.find(n.pop_id());
        if (it == index_.end() || it->second != i) return false;
        if (n.parent_id()) {
            auto parent = index_.find(*n.parent_id());
            if (parent == index_.end() || parent->second >= i) return false;
        }
    }
    return index_.size() == nodes_.size();
}

// ---------------------------------------------------------------------------
// Lengths
// ---------------------------------------------------------------------------

std::string LengthWarning::message() const {
    std::ostringstream ss;
    ss << (field == Field::Catchphrase ? "catchphrase" : "explanation") << " has " << length
       << " characters; expected between " << lower << " and " << upper;
    return ss.str();
}

std::vector<LengthWarning> validate_lengths(const PopText& pop, const LengthPolicy& policy) {
    std::vector<LengthWarning> warnings;
    auto check = [&](LengthWarning::Field field, const std::string& text, int target) {
        const double slack = target * policy.tolerance_ratio;
        const double lower = target - slack;
        const double upper = target + slack;
        const auto length = count_scalars(text);
        const auto len = static_cast<double>(length);
        if (len < lower || len > upper) warnings.push_back({field, length, lower, upper});
    };
    check(LengthWarning::Field::Catchphrase, pop.catchphrase(), policy.catchphrase_target);
    check(LengthWarning::Field::Explanation, pop.explanation(), policy.explanation_target);
    return warnings;
}

// ---------------------------------------------------------------------------
// Draft pipeline
// ---------------------------------------------------------------------------

std::string DraftPipeline::render_draft_prompt(const RefinedProfile& profile) const {
    return ctx_.templates->render(TemplateId::DgDraft, llm::profile_slots(profile));
}

std::string DraftPipeline::render_rephrase_prompt(const PopText& source, PurchaseMotive motive,
                                                  const RefinedProfile& profile) const {
    auto slots = llm::profile_slots(profile);
    slots.emplace("catchphrase", source.catchphrase());
    slots.emplace("explanation", source.explanation());
    slots.emplace("motive", ctx_.config.motive_labels[motive]);
    return ctx_.templates->render(TemplateId::SrRephrase, slots);
}

PopText DraftPipeline::generate_draft(const RefinedProfile& profile, std::string pop_id) const {
    auto draft = llm::complete_parsed(*ctx_.gateway, TemplateId::DgDraft,
                                      render_draft_prompt(profile), ctx_.config.parse_retries,
                                      llm::parse_draft);
    return PopText::initial(std::move(pop_id), std::move(draft.catchphrase),
                            std::move(draft.explanation), profile.version());
}

PopText DraftPipeline::rephrase(const PopForest& forest, std::string_view source_id,
                                PurchaseMotive motive, const RefinedProfile& profile,
                                std::string pop_id) const {
    const PopText* source = forest.find(source_id);
    if (source == nullptr) {
        fail(ErrorCode::UnknownSource, "unknown source pop '" + std::string(source_id) + "'");
    }
    auto draft = llm::complete_parsed(*ctx_.gateway, TemplateId::SrRephrase,
                                      render_rephrase_prompt(*source, motive, profile),
                                      ctx_.config.parse_retries, llm::parse_draft);
    return PopText::rephrased(std::move(pop_id), std::move(draft.catchphrase),
                              std::move(draft.explanation), source->pop_id(), motive,
                              profile.version());
}

std::vector<PopText> DraftPipeline::rephrase_all(const PopForest& forest,
                                                 std::string_view source_id,
                                                 const RefinedProfile& profile,
                                                 IdSequence& ids) const {
    IdSequence scratch = ids;
    std::vector<PopText> children;
    children.reserve(kAllMotives.size());
    for (auto motive : kAllMotives) {
        children.push_back(rephrase(forest, source_id, motive, profile, scratch.next()));
    }
    ids = scratch;
    return children;
}

PopText apply_user_edit(const PopText& source, std::string new_catchphrase,
                        std::string new_explanation, std::string pop_id) {
    if (trim(new_catchphrase).empty() || trim(new_explanation).empty()) {
        fail(ErrorCode::EmptyText, "edited catchphrase and explanation must not be empty");
    }
    return PopText::edited(std::move(pop_id), std::move(new_catchphrase),
                           std::move(new_explanation), source.pop_id(), source.profile_version());
}

// ---------------------------------------------------------------------------
// Persona evaluator
// ---------------------------------------------------------------------------

std::string PersonaEvaluator::render_persona_prompt(const RefinedProfile& profile) const {
    return ctx_.templates->render(TemplateId::PePersonaGen, llm::profile_slots(profile));
}

std::string PersonaEvaluator::render_evaluation_prompt(std::span<const Persona> personas,
                                                       std::span<const PopText> pops) const {
    return ctx_.templates->render(TemplateId::PeEvaluate,
                                  {{"personas", llm::format_persona_block(personas)},
                                   {"pops", llm::format_pop_block(pops)}});
}

PersonaSet PersonaEvaluator::generate_personas(const RefinedProfile& profile) const {
    const int version = profile.version();
    return llm::complete_parsed(
        *ctx_.gateway, TemplateId::PePersonaGen, render_persona_prompt(profile),
        ctx_.config.parse_retries,
        [version](std::string_view raw) { return llm::parse_personas(raw, version); });
}

EvaluationRound PersonaEvaluator::evaluate_round(std::span<const Persona> personas,
                                                 std::span<const PopText> pops,
                                                 std::string round_id) const {
    if (personas.size() != kPersonasPerRound) {
        fail(ErrorCode::CardinalityViolation, "a round needs exactly 3 personas");
    }
    if (pops.size() != kPopsPerRound) {
        fail(ErrorCode::CardinalityViolation,
             "a round needs exactly 6 pops, got " + std::to_string(pops.size()));
    }
    for (const auto& p : personas) {
        if (p.persona_set_version() != personas[0].persona_set_version()) {
            fail(ErrorCode::CardinalityViolation, "personas must come from one set");
        }
    }
    for (const auto& p : pops) {
        if (p.kind() == PopText::Kind::Initial) {
            fail(ErrorCode::CardinalityViolation, "initial drafts are not evaluated");
        }
    }

    std::vector<llm::GridCell> cells;
    try {
        cells = llm::complete_parsed(
            *ctx_.gateway, TemplateId::PeEvaluate, render_evaluation_prompt(personas, pops),
            ctx_.config.parse_retries, [&](std::string_view raw) {
                return llm::parse_grid(raw, kPersonasPerRound, pops.size());
            });
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ParseFailure) throw;
        cells.clear();
        for (std::size_t i = 0; i < kPersonasPerRound; ++i) {
            auto single = llm::complete_parsed(
                *ctx_.gateway, TemplateId::PeEvaluate,
                render_evaluation_prompt(personas.subspan(i, 1), pops), ctx_.config.parse_retries,
                [&](std::string_view raw) { return llm::parse_grid(raw, 1, pops.size()); });
            for (auto& c : single) {
                c.persona_index = static_cast<int>(i);
                cells.push_back(std::move(c));
            }
        }
    }

    std::vector<PersonaEvaluation> evaluations;
    evaluations.reserve(cells.size());
    for (auto& c : cells) {
        evaluations.emplace_back(c.persona_index, pops[c.pop_position].pop_id(), c.rating,
                                 std::move(c.reason));
    }
    std::vector<std::string> pop_ids;
    for (const auto& p : pops) pop_ids.push_back(p.pop_id());
    return EvaluationRound(std::move(round_id), {personas[0], personas[1], personas[2]},
                           std::move(pop_ids), std::move(evaluations));
}

const PopScore& RoundAggregate::at(std::string_view pop_id) const {
    for (const auto& s : scores) {
        if (s.pop_id == pop_id) return s;
    }
    fail(ErrorCode::UnknownPop, "pop '" + std::string(pop_id) + "' not in round");
}

std::map<std::string, double> RoundAggregate::means() const {
    std::map<std::string, double> out;
    for (const auto& s : scores) out.emplace(s.pop_id, s.mean);
    return out;
}

RoundAggregate aggregate(const EvaluationRound& round) {
    RoundAggregate result;
    const auto pop_ids = round.pop_ids();
    result.scores.reserve(pop_ids.size());
    for (std::size_t pos = 0; pos < pop_ids.size(); ++pos) {
        PopScore score;
        score.pop_id = pop_ids[pos];
        for (std::size_t persona = 0; persona < kPersonasPerRound; ++persona) {
            score.ratings[persona] = round.rating(persona, pos);
            score.sum += score.ratings[persona];
        }
        score.mean = static_cast<double>(score.sum) / static_cast<double>(kPersonasPerRound);
        result.scores.push_back(std::move(score));
    }
    return result;
}

std::string select_best(const EvaluationRound& round) {
    const auto agg = aggregate(round);
    const auto best = std::max_element(
        agg.scores.begin(), agg.scores.end(),
        [](const PopScore& a, const PopScore& b) { return a.sum < b.sum; });
    return best->pop_id;
}

}  // namespace popforge
