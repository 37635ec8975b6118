#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "popforge/domain.hpp"
#include "popforge/llm/gateway.hpp"

namespace popforge::llm {

enum class SchemaId { QuestionWithReason, PopDraft, PersonaTriple, EvaluationGrid };

std::string_view to_string(SchemaId id) noexcept;

struct QuestionWithReason {
    std::string question;
    std::string rationale;
    friend bool operator==(const QuestionWithReason&, const QuestionWithReason&) = default;
};

struct DraftTexts {
    std::string catchphrase;
    std::string explanation;
    friend bool operator==(const DraftTexts&, const DraftTexts&) = default;
};

/// One rating cell; indices are 0-based positions within the prompt.
struct GridCell {
    int persona_index;
    int pop_position;
    int rating;
    std::string reason;
    friend bool operator==(const GridCell&, const GridCell&) = default;
};

using StructuredRecord =
    std::variant<QuestionWithReason, DraftTexts, PersonaSet, std::vector<GridCell>>;

// Parsers are lenient on whitespace, label case, and list markers, strict on
// cardinality and ranges. All throw Error(ParseFailure).

QuestionWithReason parse_question(std::string_view raw);
DraftTexts parse_draft(std::string_view raw);
/// Personas come back with persona_set_version = `version`.
PersonaSet parse_personas(std::string_view raw, int version = 0);
/// Requires every (persona, pop) cell exactly once. A single-persona
/// fallback call passes personas = 1 and expects "Persona 1" lines.
std::vector<GridCell> parse_grid(std::string_view raw, std::size_t personas, std::size_t pops);

/// Generic dispatch; the grid variant expects the full 3x6 round.
StructuredRecord parse_structured(std::string_view raw, SchemaId schema);

// Inverse formatters, used by fixtures and the round-trip property.
std::string format_question(const QuestionWithReason& q);
std::string format_draft(const DraftTexts& d);
std::string format_personas(const PersonaSet& personas);
std::string format_grid(std::span<const GridCell> cells);

/// Re-prompt loop: 1 attempt plus up to `reprompts` corrective retries when
/// `parse` throws ParseFailure. Each retry appends the failure details so
/// the prompt differs from the previous attempt.
template <typename Parse>
auto complete_parsed(const Gateway& gateway, TemplateId id, const std::string& prompt,
                     int reprompts, Parse&& parse) -> decltype(parse(std::string_view{})) {
    std::string current = prompt;
    for (int attempt = 0;; ++attempt) {
        const auto raw = gateway.complete(id, current);
        try {
            return parse(std::string_view(raw));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ParseFailure || attempt >= reprompts) throw;
            current = prompt + "\n\nYour previous answer (attempt " + std::to_string(attempt + 1) +
                      ") could not be used: " + e.what() +
                      "\nFollow the requested output format exactly.";
        }
    }
}

}  // namespace popforge::llm
