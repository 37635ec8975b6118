#pragma once

// Offline pairwise-comparison arithmetic: each forced-choice judgment gives
// the winner +magnitude and the loser -magnitude on a -3..+3 scale.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "popforge/domain.hpp"

namespace popforge::eval {

using MethodScore = std::pair<MethodCondition, int>;

/// ((method_a, score_a), (method_b, score_b)); score_a + score_b == 0.
std::pair<MethodScore, MethodScore> score_pair(const PairwiseJudgment& j);

/// Mean expanded score per method; methods without data are absent.
std::map<MethodCondition, double> average_scores(std::span<const PairwiseJudgment> judgments);

/// Fraction of a-vs-b judgments (either orientation) that `a` won. Throws
/// Validation when no such judgment exists.
double preference_fraction(MethodCondition a, MethodCondition b,
                           std::span<const PairwiseJudgment> judgments);

inline constexpr const char* kCsvHeader = "evaluator_id,item_id,method_a,method_b,winner,magnitude";

/// Strict CSV reader. Throws Error(SchemaError) naming the row (1-based file
/// line) and column on any violation, including duplicate
/// (evaluator, item, unordered method pair) rows.
std::vector<PairwiseJudgment> parse_judgments(std::string_view csv);
std::vector<PairwiseJudgment> load_judgments(const std::filesystem::path& path);

std::string format_judgments(std::span<const PairwiseJudgment> judgments);
void save_judgments(std::span<const PairwiseJudgment> judgments, const std::filesystem::path& path);

struct PairStat {
    MethodCondition a;
    MethodCondition b;
    std::size_t comparisons;
    std::size_t a_wins;
    double fraction;  // a_wins / comparisons
};

struct Report {
    std::size_t judgment_count = 0;
    std::map<MethodCondition, double> means;
    std::map<MethodCondition, std::size_t> score_counts;
    std::vector<PairStat> pairs;  // every ordered pair with data
};

Report build_report(std::span<const PairwiseJudgment> judgments);

enum class ReportFormat { Text, Json };

std::string render_report(const Report& report, ReportFormat format);
void emit_report(const Report& report, const std::filesystem::path& path, ReportFormat format);

nlohmann::json report_to_json(const Report& report);

}  // namespace popforge::eval
