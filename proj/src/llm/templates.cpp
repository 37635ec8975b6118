#include "popforge/llm/templates.hpp"

#include <fstream>
#include <sstream>

namespace popforge::llm {

namespace {

constexpr std::string_view kOpen = "{{";
constexpr std::string_view kClose = "}}";

// Bodies are the figure texts with `{{slot}}` markers in place of the
// bracketed slot descriptions.

constexpr std::string_view kPbQuestion =
    "You are an assistant helping the clerk perform \"proper customer segmentation of "
    "merchandise\".\n"
    "To do this, think of a question.\n"
    "This question asks the clerk, \"Is this product for this type of person?\"\n"
    "Present another question based on the product information and the previous question and "
    "its answer.\n"
    "Output the question text and the reason for proposing the question.\n"
    "The product is for {{target}}.\n"
    "Product explanation: {{product}} The answers so far are as follows.\n"
    "{{history}}";

// Reconstruction: no published prompt exists for the initial draft.
constexpr std::string_view kDgDraft =
    "You are an assistant helping the clerk write a POP text for the product below.\n"
    "Write one POP text consisting of a catchphrase and a product explanation that appeals to the "
    "target customer.\n"
    "The catchphrase should be approximately 10 characters long and the product explanation "
    "should contain approximately 50 characters, counting the number of characters.\n"
    "The product is for {{target}}.\n"
    "Product explanation: {{product}} The answers so far are as follows.\n"
    "{{history}}";

constexpr std::string_view kSrRephrase =
    "{{catchphrase}}\n"
    "{{explanation}}\n"
    "Rephrase this into a sentence focusing on the {{motive}}.\n"
    "The catchphrase should be approximately 10 characters long and the product explanation "
    "should contain approximately 50 characters, counting the number of characters.\n"
    "\n"
    "The slot for the purchase motivation can be one of the following: appearance "
    "preference/suitability, fashionability, practicality/economy, "
    "quality/traditionality/reliability, gaining others' approval, and combination.\n"
    "\n"
    "The product is for {{target}}.\n"
    "Product explanation: {{product}} The answers so far are as follows.\n"
    "{{history}}";

constexpr std::string_view kPePersonaGen =
    "You are an assistant required to create three appropriate personas.\n"
    "You will be asked to evaluate the POP text according to the personas you have created.\n"
    "To do this, the target customers for the product have been narrowed down by means of "
    "questions.\n"
    "Based on this information, create personas (age, occupation (including housewife), family "
    "structure, lifestyle, 3 clothing needs, and 3 points that make the clothing attractive).\n"
    "Output only the personas.\n"
    "This is a product for {{target}}\n"
    "Product explanation: {{product}}\n"
    "The previous answers are:.\n"
    "{{history}}";

constexpr std::string_view kPeEvaluate =
    "You are an assistant who evaluates POP text based on three personas.\n"
    "Please rate each POP text on a 10-point scale based on each persona and provide a single "
    "reason for your rating.\n"
    "Do not output any other sentences.\n"
    "Persona: {{personas}}. POP texts: {{pops}}.";

constexpr std::string_view kPbFooter =
    "Answer in exactly this format:\n"
    "Question: <a question the clerk can answer with Yes or No>\n"
    "Reason: <why you propose this question>";

constexpr std::string_view kDraftFooter =
    "Answer in exactly this format:\n"
    "Catchphrase: <catchphrase>\n"
    "Explanation: <product explanation>";

constexpr std::string_view kPersonaFooter =
    "Answer in exactly this format for Persona 1, Persona 2 and Persona 3:\n"
    "Persona 1\n"
    "Age: <integer>\n"
    "Occupation: <occupation>\n"
    "Family structure: <family structure>\n"
    "Lifestyle: <lifestyle>\n"
    "Clothing needs:\n"
    "- <need>\n- <need>\n- <need>\n"
    "Attractive points:\n"
    "- <point>\n- <point>\n- <point>";

constexpr std::string_view kEvaluateFooter =
    "Answer with one line per persona and POP text, in exactly this format:\n"
    "Persona <n>, POP <m>: Rating <1-10>; Reason: <single reason>";

}  // namespace

std::string_view to_string(TemplateId id) noexcept {
    switch (id) {
        case TemplateId::PbQuestion: return "pb_question";
        case TemplateId::DgDraft: return "dg_draft";
        case TemplateId::SrRephrase: return "sr_rephrase";
        case TemplateId::PePersonaGen: return "pe_persona_gen";
        case TemplateId::PeEvaluate: return "pe_evaluate";
    }
    return "pb_question";
}

TemplateId parse_template_id(std::string_view s) {
    for (auto id : kAllTemplates) {
        if (to_string(id) == s) return id;
    }
    fail(ErrorCode::UnknownTemplate, "unknown template '" + std::string(s) + "'");
}

std::set<std::string, std::less<>> scan_slots(std::string_view text) {
    std::set<std::string, std::less<>> slots;
    std::size_t pos = 0;
    while ((pos = text.find(kOpen, pos)) != std::string_view::npos) {
        const auto end = text.find(kClose, pos + kOpen.size());
        if (end == std::string_view::npos) break;
        slots.emplace(text.substr(pos + kOpen.size(), end - pos - kOpen.size()));
        pos = end + kClose.size();
    }
    return slots;
}

bool has_residual_markers(std::string_view text) {
    const auto open = text.find(kOpen);
    return open != std::string_view::npos && text.find(kClose, open) != std::string_view::npos;
}

PromptTemplate::PromptTemplate(TemplateId id, std::string body, std::string footer)
    : id_(id), body_(std::move(body)), footer_(std::move(footer)), slots_(scan_slots(body_)) {
    require(!trim(body_).empty(), "template body must not be empty");
    require(!has_residual_markers(footer_), "template footer must not contain slots");
}

std::string PromptTemplate::render(const SlotValues& values) const {
    for (const auto& slot : slots_) {
        if (!values.contains(slot)) fail(ErrorCode::MissingSlot, "missing slot '" + slot + "'");
    }
    for (const auto& [name, _] : values) {
        if (!slots_.contains(name)) fail(ErrorCode::ExtraSlot, "unexpected slot '" + name + "'");
    }

    // Single left-to-right pass so slot values are never re-scanned.
    std::string out;
    out.reserve(body_.size() + 256);
    std::size_t pos = 0;
    while (true) {
        const auto open = body_.find(kOpen, pos);
        const auto close =
            open == std::string::npos ? std::string::npos : body_.find(kClose, open + kOpen.size());
        if (close == std::string::npos) {
            out.append(body_, pos, std::string::npos);
            break;
        }
        out.append(body_, pos, open - pos);
        const auto name = std::string_view(body_).substr(open + kOpen.size(),
                                                         close - open - kOpen.size());
        out += values.find(name)->second;
        pos = close + kClose.size();
    }
    if (!footer_.empty()) {
        out += "\n\n";
        out += footer_;
    }
    return out;
}

TemplateSet TemplateSet::defaults() {
    TemplateSet set;
    set.set(PromptTemplate(TemplateId::PbQuestion, std::string(kPbQuestion),
                           std::string(kPbFooter)));
    set.set(PromptTemplate(TemplateId::DgDraft, std::string(kDgDraft), std::string(kDraftFooter)));
    set.set(PromptTemplate(TemplateId::SrRephrase, std::string(kSrRephrase),
                           std::string(kDraftFooter)));
    set.set(PromptTemplate(TemplateId::PePersonaGen, std::string(kPePersonaGen),
                           std::string(kPersonaFooter)));
    set.set(PromptTemplate(TemplateId::PeEvaluate, std::string(kPeEvaluate),
                           std::string(kEvaluateFooter)));
    return set;
}

namespace {

std::optional<std::string> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

void TemplateSet::load_overrides(const std::filesystem::path& dir) {
    for (auto id : kAllTemplates) {
        const auto name = std::string(to_string(id));
        const auto& current = get(id);
        auto body = read_file(dir / (name + ".txt"));
        auto footer = read_file(dir / (name + ".footer.txt"));
        if (!body && !footer) continue;
        PromptTemplate replacement(id, body ? *body : current.body(),
                                   footer ? *footer : current.footer());
        if (replacement.required_slots() != current.required_slots()) {
            fail(ErrorCode::Validation, "template override '" + name + "' changes the slot set");
        }
        set(std::move(replacement));
    }
}

const PromptTemplate& TemplateSet::get(TemplateId id) const {
    auto it = templates_.find(id);
    if (it == templates_.end()) {
        fail(ErrorCode::UnknownTemplate, "template '" + std::string(to_string(id)) + "' not loaded");
    }
    return it->second;
}

void TemplateSet::set(PromptTemplate tmpl) {
    const auto id = tmpl.id();
    templates_.insert_or_assign(id, std::move(tmpl));
}

std::string render_prompt(const TemplateSet& templates, std::string_view template_id,
                          const SlotValues& values) {
    return templates.render(parse_template_id(template_id), values);
}

std::string format_history(std::span<const QAExchange> history) {
    std::string out;
    for (const auto& e : history) {
        out += std::to_string(e.sequence() + 1) + ". Question: " + e.question() + "\n";
        out += "   Reason: " + e.rationale() + "\n";
        out += "   Answer: " + std::string(to_string(e.answer())) + "\n";
    }
    return out;
}

SlotValues profile_slots(const RefinedProfile& profile) {
    return {{"target", profile.base().target_label()},
            {"product", profile.base().product_description()},
            {"history", format_history(profile.history())}};
}

std::string format_persona_block(std::span<const Persona> personas) {
    std::string out;
    for (std::size_t i = 0; i < personas.size(); ++i) {
        const auto& p = personas[i];
        out += "\nPersona " + std::to_string(i + 1) + ": age " + std::to_string(p.age()) +
               "; occupation: " + p.occupation() + "; family structure: " + p.family_structure() +
               "; lifestyle: " + p.lifestyle() + "; clothing needs: " + p.clothing_needs()[0] +
               ", " + p.clothing_needs()[1] + ", " + p.clothing_needs()[2] +
               "; attractive points: " + p.attractive_points()[0] + ", " +
               p.attractive_points()[1] + ", " + p.attractive_points()[2];
    }
    return out;
}

std::string format_pop_block(std::span<const PopText> pops) {
    std::string out;
    for (std::size_t i = 0; i < pops.size(); ++i) {
        out += "\nPOP " + std::to_string(i + 1) + ": Catchphrase: " + pops[i].catchphrase() +
               " / Explanation: " + pops[i].explanation();
    }
    return out;
}

MotiveLabels::MotiveLabels() {
    for (auto m : kAllMotives) labels_[motive_index(m)] = std::string(default_motive_label(m));
}

MotiveLabels::MotiveLabels(std::array<std::string, 6> labels) : labels_(std::move(labels)) {
    for (const auto& l : labels_) require(!trim(l).empty(), "motive label must not be empty");
}

}  // namespace popforge::llm
