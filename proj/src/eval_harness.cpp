#include "popforge/eval_harness.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <tuple>

namespace popforge::eval {

std::pair<MethodScore, MethodScore> score_pair(const PairwiseJudgment& j) {
    const int a = j.winner() == Winner::A ? j.magnitude() : -j.magnitude();
    return {{j.method_a(), a}, {j.method_b(), -a}};
}

std::map<MethodCondition, double> average_scores(std::span<const PairwiseJudgment> judgments) {
    std::map<MethodCondition, std::pair<long long, long long>> totals;  // sum, count
    for (const auto& j : judgments) {
        const auto [first, second] = score_pair(j);
        auto& ta = totals[first.first];
        ta.first += first.second;
        ++ta.second;
        auto& tb = totals[second.first];
        tb.first += second.second;
        ++tb.second;
    }
    std::map<MethodCondition, double> means;
    for (const auto& [method, t] : totals) {
        means.emplace(method, static_cast<double>(t.first) / static_cast<double>(t.second));
    }
    return means;
}

double preference_fraction(MethodCondition a, MethodCondition b,
                           std::span<const PairwiseJudgment> judgments) {
    std::size_t total = 0;
    std::size_t wins = 0;
    for (const auto& j : judgments) {
        if (j.method_a() == a && j.method_b() == b) {
            ++total;
            wins += j.winner() == Winner::A ? 1 : 0;
        } else if (j.method_a() == b && j.method_b() == a) {
            ++total;
            wins += j.winner() == Winner::B ? 1 : 0;
        }
    }
    if (total == 0) {
        fail(ErrorCode::Validation, "no judgments between " + std::string(to_string(a)) + " and " +
                                        std::string(to_string(b)));
    }
    return static_cast<double>(wins) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void schema_error(std::size_t row, std::string_view column, const std::string& what) {
    fail(ErrorCode::SchemaError, "row " + std::to_string(row) + ", column " + std::string(column) +
                                     ": " + what);
}

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

constexpr std::array<std::string_view, 6> kColumns{"evaluator_id", "item_id", "method_a",
                                                   "method_b",     "winner",  "magnitude"};

}  // namespace

std::vector<PairwiseJudgment> parse_judgments(std::string_view csv) {
    std::istringstream in{std::string(csv)};
    std::string line;
    std::size_t row = 0;

    if (!std::getline(in, line)) schema_error(1, "header", "file is empty");
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line != kCsvHeader) schema_error(row, "header", "expected '" + std::string(kCsvHeader) + "'");

    std::vector<PairwiseJudgment> out;
    std::set<std::tuple<std::string, std::string, MethodCondition, MethodCondition>> seen;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_commas(line);
        if (cells.size() != kColumns.size()) {
            schema_error(row, "*", "expected 6 columns, got " + std::to_string(cells.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (cells[c].empty()) schema_error(row, kColumns[c], "empty value");
            if (cells[c].find('"') != std::string::npos) schema_error(row, kColumns[c], "quoting is not allowed");
        }

        auto parse_cell = [&](std::size_t c, auto parser) {
            try {
                return parser(cells[c]);
            } catch (const Error& e) {
                schema_error(row, kColumns[c], e.what());
            }
        };
        const auto method_a = parse_cell(2, [](const std::string& s) { return parse_method(s); });
        const auto method_b = parse_cell(3, [](const std::string& s) { return parse_method(s); });
        const auto winner = parse_cell(4, [](const std::string& s) { return parse_winner(s); });
        const int magnitude = parse_cell(5, [](const std::string& s) {
            if (s.size() != 1 || s[0] < '1' || s[0] > '3') {
                fail(ErrorCode::Validation, "magnitude must be 1, 2 or 3");
            }
            return s[0] - '0';
        });
        if (method_a == method_b) schema_error(row, "method_b", "must differ from method_a");

        const auto lo = std::min(method_a, method_b);
        const auto hi = std::max(method_a, method_b);
        if (!seen.emplace(cells[0], cells[1], lo, hi).second) {
            schema_error(row, "*", "duplicate judgment for this evaluator, item and method pair");
        }
        try {
            out.emplace_back(cells[0], cells[1], method_a, method_b, winner, magnitude);
        } catch (const Error& e) {
            schema_error(row, "*", e.what());
        }
    }
    return out;
}

std::vector<PairwiseJudgment> load_judgments(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_judgments(ss.str());
}

std::string format_judgments(std::span<const PairwiseJudgment> judgments) {
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& j : judgments) {
        out += j.evaluator_id() + "," + j.item_id() + "," + std::string(to_string(j.method_a())) +
               "," + std::string(to_string(j.method_b())) + "," +
               std::string(to_string(j.winner())) + "," + std::to_string(j.magnitude()) + "\n";
    }
    return out;
}

void save_judgments(std::span<const PairwiseJudgment> judgments, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << format_judgments(judgments);
    if (!out) fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

Report build_report(std::span<const PairwiseJudgment> judgments) {
    Report r;
    r.judgment_count = judgments.size();
    r.means = average_scores(judgments);
    for (const auto& j : judgments) {
        ++r.score_counts[j.method_a()];
        ++r.score_counts[j.method_b()];
    }
    for (auto a : kAllMethods) {
        for (auto b : kAllMethods) {
            if (a == b) continue;
            std::size_t n = 0;
            std::size_t wins = 0;
            for (const auto& j : judgments) {
                if (j.method_a() == a && j.method_b() == b) {
                    ++n;
                    wins += j.winner() == Winner::A;
                } else if (j.method_a() == b && j.method_b() == a) {
                    ++n;
                    wins += j.winner() == Winner::B;
                }
            }
            if (n == 0) continue;
            r.pairs.push_back({a, b, n, wins, static_cast<double>(wins) / static_cast<double>(n)});
        }
    }
    return r;
}

nlohmann::json report_to_json(const Report& report) {
    nlohmann::json means = nlohmann::json::object();
    for (const auto& [m, v] : report.means) means[std::string(to_string(m))] = v;
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [m, n] : report.score_counts) counts[std::string(to_string(m))] = n;
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : report.pairs) {
        pairs.push_back({{"a", p.a},
                         {"b", p.b},
                         {"comparisons", p.comparisons},
                         {"a_wins", p.a_wins},
                         {"fraction", p.fraction}});
    }
    return {{"judgments", report.judgment_count},
            {"means", std::move(means)},
            {"score_counts", std::move(counts)},
            {"pairwise", std::move(pairs)}};
}

std::string render_report(const Report& report, ReportFormat format) {
    if (format == ReportFormat::Json) return report_to_json(report).dump(2) + "\n";

    std::ostringstream out;
    out << std::fixed;
    out << "judgments: " << report.judgment_count << "\n\n";
    out << "mean score per method (-3..+3)\n";
    for (const auto& [method, mean] : report.means) {
        out << "  " << std::left << std::setw(14) << to_string(method) << std::right
            << std::setw(8) << std::setprecision(3) << mean << "  (n=" << report.score_counts.at(method)
            << ")\n";
    }
    out << "\npairwise preference (row preferred over column)\n";
    for (const auto& p : report.pairs) {
        out << "  " << std::left << std::setw(14) << to_string(p.a) << " > " << std::setw(14)
            << to_string(p.b) << std::right << std::setw(7) << std::setprecision(1)
            << p.fraction * 100.0 << "%  (" << p.a_wins << "/" << p.comparisons << ")\n";
    }
    return out.str();
}

void emit_report(const Report& report, const std::filesystem::path& path, ReportFormat format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << render_report(report, format);
    if (!out) fail(ErrorCode::Io, "cannot write report '" + path.string() + "'");
}

}  // namespace popforge::eval
