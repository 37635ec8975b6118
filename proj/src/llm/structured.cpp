#include "popforge/llm/structured.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <regex>
#include <set>
#include <sstream>

namespace popforge::llm {

std::string_view to_string(SchemaId id) noexcept {
    switch (id) {
        case SchemaId::QuestionWithReason: return "question_with_reason";
        case SchemaId::PopDraft: return "pop_draft";
        case SchemaId::PersonaTriple: return "persona_triple";
        case SchemaId::EvaluationGrid: return "evaluation_grid";
    }
    return "question_with_reason";
}

namespace {

[[noreturn]] void parse_fail(const std::string& what) { fail(ErrorCode::ParseFailure, what); }

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string erase_all(std::string s, std::string_view token) {
    for (auto pos = s.find(token); pos != std::string::npos; pos = s.find(token, pos)) {
        s.erase(pos, token.size());
    }
    return s;
}

struct Line {
    std::string text;  // marker-stripped, trimmed
    bool list_item = false;
};

/// Drops markdown emphasis/heading noise and a leading list marker
/// ("-", "*", "•", "1.", "1)").
Line clean(std::string_view raw) {
    std::string s = trim(erase_all(erase_all(std::string(raw), "**"), "__"));
    while (!s.empty() && s.front() == '#') s.erase(0, 1);
    s = trim(s);
    Line line;
    if (s.rfind("- ", 0) == 0 || s.rfind("* ", 0) == 0) {
        s.erase(0, 2);
        line.list_item = true;
    } else if (s.rfind("\xE2\x80\xA2", 0) == 0) {  // U+2022 bullet
        s.erase(0, 3);
        line.list_item = true;
    } else {
        std::size_t digits = 0;
        while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) ++digits;
        if (digits > 0 && digits + 1 < s.size() && (s[digits] == '.' || s[digits] == ')') &&
            s[digits + 1] == ' ') {
            s.erase(0, digits + 2);
            line.list_item = true;
        }
    }
    line.text = trim(s);
    return line;
}

std::vector<Line> clean_lines(std::string_view raw) {
    std::vector<Line> lines;
    std::istringstream in{std::string(raw)};
    std::string l;
    while (std::getline(in, l)) {
        auto c = clean(l);
        if (!c.text.empty()) lines.push_back(std::move(c));
    }
    return lines;
}

/// Splits "Label: value" when the label (case-insensitive) is one of
/// `labels`. Returns the canonical (first) label matched and the value.
std::optional<std::pair<std::size_t, std::string>> labeled(
    const std::string& text, std::initializer_list<std::initializer_list<std::string_view>> labels) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) return std::nullopt;
    const auto key = lower(trim(std::string_view(text).substr(0, colon)));
    std::size_t index = 0;
    for (const auto& group : labels) {
        for (auto candidate : group) {
            if (key == candidate) return std::pair{index, trim(std::string_view(text).substr(colon + 1))};
        }
        ++index;
    }
    return std::nullopt;
}

/// Collects single-line labeled fields; a label with an empty value takes
/// the next line. Duplicate labels are a failure.
std::vector<std::optional<std::string>> collect_fields(
    const std::vector<Line>& lines,
    std::initializer_list<std::initializer_list<std::string_view>> labels) {
    std::vector<std::optional<std::string>> fields(labels.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto hit = labeled(lines[i].text, labels);
        if (!hit) continue;
        auto& slot = fields[hit->first];
        if (slot) parse_fail("duplicate field '" + std::string(*(labels.begin() + hit->first)->begin()) + "'");
        std::string value = hit->second;
        if (value.empty() && i + 1 < lines.size() && !labeled(lines[i + 1].text, labels)) {
            value = lines[++i].text;
        }
        slot = value;
    }
    return fields;
}

std::string required(const std::optional<std::string>& field, std::string_view name) {
    if (!field || field->empty()) parse_fail("missing field '" + std::string(name) + "'");
    return *field;
}

int parse_int(const std::string& s, std::string_view what) {
    std::smatch m;
    static const std::regex number(R"((\d+))");
    if (!std::regex_search(s, m, number)) parse_fail("no integer in " + std::string(what));
    try {
        return std::stoi(m[1].str());
    } catch (const std::exception&) {
        parse_fail("integer out of range in " + std::string(what));
    }
}

}  // namespace

QuestionWithReason parse_question(std::string_view raw) {
    const auto lines = clean_lines(raw);
    const auto f = collect_fields(lines, {{"question", "question text"},
                                          {"reason", "rationale", "reason for proposing"}});
    return {required(f[0], "question"), required(f[1], "reason")};
}

DraftTexts parse_draft(std::string_view raw) {
    const auto lines = clean_lines(raw);
    const auto f = collect_fields(
        lines, {{"catchphrase", "catch phrase"}, {"explanation", "product explanation"}});
    return {required(f[0], "catchphrase"), required(f[1], "explanation")};
}

// ---------------------------------------------------------------------------
// Personas
// ---------------------------------------------------------------------------

namespace {

const std::regex& persona_header() {
    static const std::regex re(R"(^persona\s*(\d+)\s*[:.)]?\s*(.*)$)", std::regex::icase);
    return re;
}

enum class PersonaField { Age, Occupation, Family, Lifestyle, Needs, Points };

std::optional<std::pair<PersonaField, std::string>> persona_field(const std::string& text) {
    auto hit = labeled(text, {{"age"},
                              {"occupation"},
                              {"family structure", "family"},
                              {"lifestyle", "life style"},
                              {"clothing needs", "3 clothing needs", "needs"},
                              {"attractive points", "points that make the clothing attractive",
                               "3 points that make the clothing attractive"}});
    if (!hit) return std::nullopt;
    return std::pair{static_cast<PersonaField>(hit->first), hit->second};
}

std::vector<std::string> split_inline_list(const std::string& value) {
    std::vector<std::string> items;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ';')) {
        auto t = trim(item);
        if (!t.empty()) items.push_back(std::move(t));
    }
    return items;
}

Persona parse_persona_block(const std::vector<Line>& block, int number, int version) {
    std::optional<std::string> age, occupation, family, lifestyle;
    std::vector<std::string> needs, points;
    std::vector<std::string>* open_list = nullptr;

    auto set_once = [&](std::optional<std::string>& slot, const std::string& v, const char* name) {
        if (slot) parse_fail("persona " + std::to_string(number) + ": duplicate " + name);
        slot = v;
    };

    for (const auto& line : block) {
        auto field = persona_field(line.text);
        if (!field) {
            if (open_list) {
                open_list->push_back(line.text);
                continue;
            }
            parse_fail("persona " + std::to_string(number) + ": unexpected line '" + line.text + "'");
        }
        open_list = nullptr;
        const auto& [kind, value] = *field;
        switch (kind) {
            case PersonaField::Age: set_once(age, value, "age"); break;
            case PersonaField::Occupation: set_once(occupation, value, "occupation"); break;
            case PersonaField::Family: set_once(family, value, "family structure"); break;
            case PersonaField::Lifestyle: set_once(lifestyle, value, "lifestyle"); break;
            case PersonaField::Needs:
            case PersonaField::Points: {
                auto& list = kind == PersonaField::Needs ? needs : points;
                if (!list.empty()) parse_fail("persona " + std::to_string(number) + ": duplicate list");
                list = split_inline_list(value);
                open_list = &list;
                break;
            }
        }
    }

    const auto who = "persona " + std::to_string(number);
    if (needs.size() != 3) {
        parse_fail(who + ": expected 3 clothing needs, got " + std::to_string(needs.size()));
    }
    if (points.size() != 3) {
        parse_fail(who + ": expected 3 attractive points, got " + std::to_string(points.size()));
    }
    try {
        return Persona(parse_int(required(age, "age"), "age"), required(occupation, "occupation"),
                       required(family, "family structure"), required(lifestyle, "lifestyle"),
                       {needs[0], needs[1], needs[2]}, {points[0], points[1], points[2]}, version);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ParseFailure) throw;
        parse_fail(who + ": " + e.what());
    }
}

}  // namespace

PersonaSet parse_personas(std::string_view raw, int version) {
    const auto lines = clean_lines(raw);
    std::vector<std::pair<int, std::vector<Line>>> blocks;
    for (const auto& line : lines) {
        std::smatch m;
        if (std::regex_match(line.text, m, persona_header()) && !persona_field(line.text)) {
            blocks.emplace_back(std::stoi(m[1].str()), std::vector<Line>{});
            // "Persona 1: Age: 34" style headers carry a first field inline.
            if (auto rest = trim(m[2].str()); !rest.empty()) {
                blocks.back().second.push_back(clean(rest));
            }
            continue;
        }
        if (blocks.empty()) continue;  // preamble before the first persona
        blocks.back().second.push_back(line);
    }
    if (blocks.size() != kPersonasPerRound) {
        parse_fail("expected 3 personas, got " + std::to_string(blocks.size()));
    }
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].first != static_cast<int>(i + 1)) parse_fail("personas must be numbered 1..3");
    }
    return {parse_persona_block(blocks[0].second, 1, version),
            parse_persona_block(blocks[1].second, 2, version),
            parse_persona_block(blocks[2].second, 3, version)};
}

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

std::vector<GridCell> parse_grid(std::string_view raw, std::size_t personas, std::size_t pops) {
    static const std::regex row(
        R"(^persona\s*(\d+)\s*[,/|;-]?\s*pop(?:\s*text)?\s*(\d+)\s*[:=-]?\s*(?:rating\s*[:=]?\s*)?(-?\d+)(?:\s*/\s*10)?\s*[;,|-]?\s*(?:reason\s*[:=]\s*)?(.*)$)",
        std::regex::icase);

    std::vector<GridCell> cells;
    std::set<std::pair<int, int>> seen;
    for (const auto& line : clean_lines(raw)) {
        std::smatch m;
        if (!std::regex_match(line.text, m, row)) {
            if (lower(line.text).rfind("persona", 0) == 0) {
                parse_fail("malformed evaluation line '" + line.text + "'");
            }
            continue;
        }
        const int persona = parse_int(m[1].str(), "persona number");
        const int pop = parse_int(m[2].str(), "pop number");
        int rating = 0;
        try {
            rating = std::stoi(m[3].str());
        } catch (const std::exception&) {
            parse_fail("rating out of range in '" + line.text + "'");
        }
        auto reason = trim(m[4].str());
        if (persona < 1 || persona > static_cast<int>(personas)) {
            parse_fail("persona number " + std::to_string(persona) + " out of range");
        }
        if (pop < 1 || pop > static_cast<int>(pops)) {
            parse_fail("pop number " + std::to_string(pop) + " out of range");
        }
        if (rating < 1 || rating > 10) {
            parse_fail("rating " + std::to_string(rating) + " outside 1..10");
        }
        if (reason.empty()) parse_fail("evaluation without a reason: '" + line.text + "'");
        if (!seen.emplace(persona, pop).second) {
            parse_fail("duplicate evaluation for persona " + std::to_string(persona) + ", pop " +
                       std::to_string(pop));
        }
        cells.push_back({persona - 1, pop - 1, rating, std::move(reason)});
    }
    if (cells.size() != personas * pops) {
        parse_fail("expected " + std::to_string(personas * pops) + " evaluations, got " +
                   std::to_string(cells.size()));
    }
    std::sort(cells.begin(), cells.end(), [](const GridCell& a, const GridCell& b) {
        return std::pair(a.persona_index, a.pop_position) < std::pair(b.persona_index, b.pop_position);
    });
    return cells;
}

StructuredRecord parse_structured(std::string_view raw, SchemaId schema) {
    switch (schema) {
        case SchemaId::QuestionWithReason: return parse_question(raw);
        case SchemaId::PopDraft: return parse_draft(raw);
        case SchemaId::PersonaTriple: return parse_personas(raw);
        case SchemaId::EvaluationGrid: return parse_grid(raw, kPersonasPerRound, kPopsPerRound);
    }
    parse_fail("unknown schema");
}

// ---------------------------------------------------------------------------
// Formatters
// ---------------------------------------------------------------------------

std::string format_question(const QuestionWithReason& q) {
    return "Question: " + q.question + "\nReason: " + q.rationale + "\n";
}

std::string format_draft(const DraftTexts& d) {
    return "Catchphrase: " + d.catchphrase + "\nExplanation: " + d.explanation + "\n";
}

std::string format_personas(const PersonaSet& personas) {
    std::string out;
    for (std::size_t i = 0; i < personas.size(); ++i) {
        const auto& p = personas[i];
        if (i > 0) out += "\n";
        out += "Persona " + std::to_string(i + 1) + "\n";
        out += "Age: " + std::to_string(p.age()) + "\n";
        out += "Occupation: " + p.occupation() + "\n";
        out += "Family structure: " + p.family_structure() + "\n";
        out += "Lifestyle: " + p.lifestyle() + "\n";
        out += "Clothing needs:\n";
        for (const auto& n : p.clothing_needs()) out += "- " + n + "\n";
        out += "Attractive points:\n";
        for (const auto& a : p.attractive_points()) out += "- " + a + "\n";
    }
    return out;
}

std::string format_grid(std::span<const GridCell> cells) {
    std::string out;
    for (const auto& c : cells) {
        out += "Persona " + std::to_string(c.persona_index + 1) + ", POP " +
               std::to_string(c.pop_position + 1) + ": Rating " + std::to_string(c.rating) +
               "; Reason: " + c.reason + "\n";
    }
    return out;
}

}  // namespace popforge::llm
