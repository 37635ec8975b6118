#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include "popforge/domain.hpp"

namespace popforge::llm {

enum class TemplateId { PbQuestion, DgDraft, SrRephrase, PePersonaGen, PeEvaluate };

inline constexpr std::array<TemplateId, 5> kAllTemplates{
    TemplateId::PbQuestion, TemplateId::DgDraft, TemplateId::SrRephrase, TemplateId::PePersonaGen,
    TemplateId::PeEvaluate,
};

/// "pb_question", "dg_draft", ...
std::string_view to_string(TemplateId id) noexcept;
TemplateId parse_template_id(std::string_view s);  // UnknownTemplate

using SlotValues = std::map<std::string, std::string, std::less<>>;

/// A prompt body with `{{slot}}` markers plus an output-format footer that is
/// appended after substitution. The footer carries no slots.
class PromptTemplate {
public:
    PromptTemplate(TemplateId id, std::string body, std::string footer = {});

    TemplateId id() const noexcept { return id_; }
    const std::string& body() const noexcept { return body_; }
    const std::string& footer() const noexcept { return footer_; }
    const std::set<std::string, std::less<>>& required_slots() const noexcept { return slots_; }

    /// Substitutes every slot verbatim. Throws MissingSlot / ExtraSlot.
    std::string render(const SlotValues& values) const;

private:
    TemplateId id_;
    std::string body_;
    std::string footer_;
    std::set<std::string, std::less<>> slots_;
};

/// Slot names appearing in `text` as `{{name}}`, in order of first use.
std::set<std::string, std::less<>> scan_slots(std::string_view text);

/// True when `text` still contains a `{{...}}` marker.
bool has_residual_markers(std::string_view text);

class TemplateSet {
public:
    /// The built-in English templates.
    static TemplateSet defaults();

    /// Replaces bodies/footers from `<dir>/<template_id>.txt` and
    /// `<dir>/<template_id>.footer.txt` when present. An override body must
    /// use exactly the built-in slot set.
    void load_overrides(const std::filesystem::path& dir);

    const PromptTemplate& get(TemplateId id) const;
    void set(PromptTemplate tmpl);

    std::string render(TemplateId id, const SlotValues& values) const { return get(id).render(values); }

private:
    std::map<TemplateId, PromptTemplate> templates_;
};

/// Looks up by string id; throws UnknownTemplate.
std::string render_prompt(const TemplateSet& templates, std::string_view template_id,
                          const SlotValues& values);

// Slot renderers shared by the pipeline modules.

/// Numbered "question / reason / answer" triples; empty history renders "".
std::string format_history(std::span<const QAExchange> history);

/// Standard target/product/history slots for a profile.
SlotValues profile_slots(const RefinedProfile& profile);

std::string format_persona_block(std::span<const Persona> personas);
std::string format_pop_block(std::span<const PopText> pops);

/// Display strings for purchase motives; identities are fixed, labels are not.
class MotiveLabels {
public:
    MotiveLabels();
    explicit MotiveLabels(std::array<std::string, 6> labels);

    const std::string& operator[](PurchaseMotive m) const { return labels_[motive_index(m)]; }

private:
    std::array<std::string, 6> labels_;
};

}  // namespace popforge::llm
