// popforge-eval: pairwise judgment CSV -> per-method means and preference fractions.
// Exit codes: 0 success, 2 schema error, 1 anything else.

#include <iostream>

#include <CLI11.hpp>

#include "popforge/eval_harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Pairwise comparison scoring for POP text creation methods"};
    std::string input;
    std::string report_path;
    std::string format = "text";
    app.add_option("--input", input, "Judgment CSV")->required();
    app.add_option("--report", report_path, "Report output path")->required();
    app.add_option("--format", format, "Report format")->check(CLI::IsMember({"text", "json"}));
    CLI11_PARSE(app, argc, argv);

    using namespace popforge;
    try {
        const auto judgments = eval::load_judgments(input);
        const auto report = eval::build_report(judgments);
        eval::emit_report(report, report_path,
                          format == "json" ? eval::ReportFormat::Json : eval::ReportFormat::Text);
        std::cout << eval::render_report(report, eval::ReportFormat::Text);
        return 0;
    } catch (const Error& e) {
        std::cerr << "popforge-eval: " << e.what() << "\n";
        return e.code() == ErrorCode::SchemaError ? 2 : 1;
    }
}
