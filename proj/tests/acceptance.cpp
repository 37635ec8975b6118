// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "popforge/eval_harness.hpp"
#include "popforge/llm/templates.hpp"
#include "popforge/session.hpp"
#include "support.hpp"

using namespace popforge;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void check(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

int failures = 0;

void run(const std::string& name, double limit_seconds, const std::function<Outcome()>& body) {
    const auto start = Clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out.ok = false;
        out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (limit_seconds > 0 && secs >= limit_seconds) {
        out.check(false, "runtime " + std::to_string(secs) + " s over limit");
    }
    char timing[64];
    std::snprintf(timing, sizeof timing, "%.3f s", secs);
    std::cout << (out.ok ? "PASS " : "FAIL ") << name << " (" << timing << ")";
    if (!out.detail.empty()) std::cout << ": " << out.detail;
    std::cout << std::endl;
    if (!out.ok) ++failures;
}

std::filesystem::path temp_dir(const std::string& tag) {
    auto p = std::filesystem::temp_directory_path() /
             ("popforge_accept_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    return p;
}

std::string run_reference_session(std::uint64_t seed, const std::optional<std::filesystem::path>& dir) {
    SessionService svc(testing::mock_context(seed), dir);
    const auto id = svc.create_session(testing::sample_profile());
    for (int i = 0; i < 3; ++i) {
        const auto q = svc.ask_next(id);
        svc.answer(id, q.question_id, i == 1 ? Answer::No : Answer::Yes);
    }
    svc.rephrase_from(id, svc.get(id)->current_draft_id);
    svc.rephrase_from(id, select_best(svc.get(id)->rounds.back().round));
    svc.finalize(id, Selection::automatic());
    return svc.export_session(id).dump();
}

// ---------------------------------------------------------------------------

Outcome scoring_antisymmetry() {
    Outcome out;
    const auto [wa, wb] = eval::score_pair(PairwiseJudgment(
        "e", "i", MethodCondition::AllManual, MethodCondition::NoSupport, Winner::A, 3));
    out.check(wa.second == 3 && wb.second == -3, "worked example is not (+3, -3)");

    std::mt19937_64 rng(20251017);
    std::uniform_int_distribution<int> method(0, 4);
    std::uniform_int_distribution<int> mag(1, 3);
    for (int n = 0; n < 10000; ++n) {
        const int a = method(rng);
        int b = method(rng);
        while (b == a) b = method(rng);
        const PairwiseJudgment j("e" + std::to_string(n % 7), "i" + std::to_string(n),
                                 kAllMethods[a], kAllMethods[b], rng() % 2 ? Winner::A : Winner::B,
                                 mag(rng));
        const auto [sa, sb] = eval::score_pair(j);
        out.check(sa.second + sb.second == 0, "scores do not sum to 0");
        out.check(std::abs(sa.second) >= 1 && std::abs(sa.second) <= 3, "score outside -3..-1, 1..3");
        out.check(sa.first == j.method_a() && sb.first == j.method_b(), "score attributed to wrong method");
        out.check((sa.second > 0) == (j.winner() == Winner::A), "winner got a negative score");
    }
    out.detail = out.ok ? "10000 judgments" : out.detail;
    return out;
}

Outcome harness_arithmetic() {
    Outcome out;
    const auto path = testing::data_path("judgments_fixture.csv");
    const auto js = eval::load_judgments(path);
    const auto means = eval::average_scores(js);
    const double gap = means.at(MethodCondition::AllManual) - means.at(MethodCondition::NoSupport);

    // independent re-summation straight from the CSV text
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    std::map<std::string, std::pair<long, long>> sums;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        const int s = (f[4] == "A" ? 1 : -1) * std::stoi(f[5]);
        sums[f[2]].first += s;
        ++sums[f[2]].second;
        sums[f[3]].first -= s;
        ++sums[f[3]].second;
    }
    auto oracle = [&](const char* m) {
        return static_cast<double>(sums.at(m).first) / static_cast<double>(sums.at(m).second);
    };
    const double oracle_gap = oracle("AllManual") - oracle("NoSupport");
    out.check(std::abs(gap - oracle_gap) < 1e-12, "harness disagrees with re-summation");
    out.check(std::abs(gap - 2.37) <= 0.005, "gap " + std::to_string(gap) + " not 2.37 +/- 0.005");

    std::vector<PairwiseJudgment> six;
    for (int i = 0; i < 6; ++i) {
        six.emplace_back("e" + std::to_string(i), "item", MethodCondition::AnalysisOnly,
                         MethodCondition::NoSupport, i == 2 ? Winner::B : Winner::A, 1 + i % 3);
    }
    const double pct =
        100.0 * eval::preference_fraction(MethodCondition::AnalysisOnly, MethodCondition::NoSupport, six);
    out.check(std::abs(pct - 83.3) <= 0.05, "preference " + std::to_string(pct) + "% not 83.3");
    const double fixture_pct =
        100.0 * eval::preference_fraction(MethodCondition::AnalysisOnly, MethodCondition::NoSupport, js);
    out.check(std::abs(fixture_pct - 83.3) <= 0.05, "fixture preference not 83.3%");

    if (out.ok) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "gap %.4f, preference %.2f%%", gap, pct);
        out.detail = buf;
    }
    return out;
}

Outcome round_cardinality() {
    Outcome out;
    std::size_t rounds = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        SessionService svc(testing::mock_context(seed));
        const auto id = svc.create_session(testing::sample_profile());
        std::mt19937 rng(static_cast<unsigned>(seed));
        const int questions = static_cast<int>(rng() % 4);
        for (int i = 0; i < questions; ++i) {
            const auto q = svc.ask_next(id);
            svc.answer(id, q.question_id, rng() % 2 ? Answer::Yes : Answer::No);
        }
        svc.rephrase_from(id, svc.get(id)->current_draft_id);
        svc.rephrase_from(id, select_best(svc.get(id)->rounds.back().round));
        const auto last = svc.get(id)->rounds.back().round.pop_ids();
        svc.rephrase_from(id, last[rng() % last.size()]);

        const auto s = svc.get(id);
        for (const auto& r : s->rounds) {
            ++rounds;
            const auto ids = r.round.pop_ids();
            out.check(ids.size() == 6, "round without 6 pops");
            std::set<PurchaseMotive> motives;
            for (const auto& pid : ids) {
                const auto& pop = s->forest.at(pid);
                if (pop.motive()) motives.insert(*pop.motive());
                out.check(pop.parent_id() == r.source_pop_id, "pop not under the round source");
            }
            out.check(motives.size() == 6, "round does not cover all 6 motives");
            out.check(r.round.evaluations().size() == 18, "round without 18 evaluations");
            std::set<std::pair<int, std::string>> cells;
            for (const auto& e : r.round.evaluations()) cells.emplace(e.persona_index(), e.pop_id());
            out.check(cells.size() == 18, "evaluations do not cover the 3x6 grid");
        }
    }
    if (out.ok) out.detail = "100 sessions, " + std::to_string(rounds) + " rounds";
    return out;
}

Outcome determinism() {
    Outcome out;
    const auto dir_a = temp_dir("det_a");
    const auto dir_b = temp_dir("det_b");
    const auto a = run_reference_session(42, dir_a);
    const auto b = run_reference_session(42, dir_b);
    const auto c = run_reference_session(42, std::nullopt);
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
    out.check(a == b && b == c, "exports differ for the same seed");
    if (out.ok) out.detail = std::to_string(a.size()) + " identical bytes";
    return out;
}

Outcome prompt_fidelity() {
    Outcome out;
    auto provider = std::make_shared<testing::ScriptedProvider>(11);
    auto gateway = std::make_shared<llm::Gateway>(llm::ProviderConfig::mock(testing::corpus_dir(), 11),
                                                  provider);
    StageContext ctx{gateway, std::make_shared<const llm::TemplateSet>(llm::TemplateSet::defaults()), {}};
    SessionService svc(ctx);
    const auto id = svc.create_session(testing::sample_profile());
    for (int i = 0; i < 2; ++i) {
        const auto q = svc.ask_next(id);
        svc.answer(id, q.question_id, Answer::Yes);
    }
    svc.rephrase_from(id, svc.get(id)->current_draft_id);

    const std::map<llm::TemplateId, std::string> anchors{
        {llm::TemplateId::PbQuestion, "proper customer segmentation of merchandise"},
        {llm::TemplateId::SrRephrase, "Rephrase this into a sentence focusing on"},
        {llm::TemplateId::PePersonaGen, "create three appropriate personas"},
        {llm::TemplateId::PeEvaluate, "rate each POP text on a 10-point scale"},
    };
    std::map<llm::TemplateId, int> seen;
    for (const auto& r : provider->requests()) {
        out.check(!llm::has_residual_markers(r.prompt), "residual slot marker in a rendered prompt");
        auto it = anchors.find(*r.template_id);
        if (it == anchors.end()) continue;
        ++seen[it->first];
        out.check(r.prompt.find(it->second) != std::string::npos,
                  std::string("missing anchor for ") + std::string(llm::to_string(it->first)));
    }
    for (const auto& [tid, phrase] : anchors) {
        out.check(seen[tid] > 0, "no prompt rendered for " + std::string(llm::to_string(tid)));
    }
    for (auto m : kAllMotives) {
        const std::string expected = "focusing on the " + std::string(default_motive_label(m)) + ".";
        bool found = false;
        for (const auto& r : provider->requests()) found |= r.prompt.find(expected) != std::string::npos;
        out.check(found, "no rephrase prompt for motive " + std::string(to_string(m)));
    }
    if (out.ok) out.detail = std::to_string(provider->call_count()) + " prompts checked";
    return out;
}

Outcome crash_recovery() {
    Outcome out;
    const auto dir = temp_dir("recovery");

    // replay equality at every step of the reference script
    {
        SessionService svc(testing::mock_context(5), dir);
        const auto id = svc.create_session(testing::sample_profile());
        auto verify = [&](const char* step) {
            const auto events = svc.store()->load_events(id);
            out.check(replay(events) == *svc.get(id), std::string("replay differs after ") + step);
            out.check(svc.store()->load(id) == *svc.get(id), std::string("snapshot load differs after ") + step);
        };
        verify("create");
        for (int i = 0; i < 3; ++i) {
            const auto q = svc.ask_next(id);
            verify("ask");
            svc.answer(id, q.question_id, Answer::Yes);
            verify("answer");
        }
        svc.rephrase_from(id, svc.get(id)->current_draft_id);
        verify("rephrase");
        svc.rephrase_from(id, select_best(svc.get(id)->rounds.back().round));
        verify("rephrase");
        svc.edit_pop(id, "pop-6", "Edited", "Edited by hand.");
        verify("edit");
        svc.finalize(id, Selection::automatic());
        verify("finalize");
    }

    // state-machine fuzz with illegal operations and injected faults
    int operations = 0;
    int rejected = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        std::mt19937_64 rng(seed * 7919);
        auto h = testing::make_harness(seed);
        std::bernoulli_distribution fault(0.08);
        h.provider->set_handler([&](const llm::CompletionRequest& r) -> std::optional<std::string> {
            if (!fault(rng)) return std::nullopt;
            switch (rng() % 4) {
                case 0: fail(ErrorCode::AuthFailure, "injected");
                case 1: fail(ErrorCode::Transport, "injected");
                case 2: return std::string("garbage");
                default: return r.prompt.substr(0, 3) + "\nPersona 9, POP 1: Rating 11";
            }
        });
        const auto sdir = dir / ("fuzz-" + std::to_string(seed));
        SessionService svc(h.ctx, sdir);
        std::string id;
        try {
            id = svc.create_session(testing::sample_profile());
        } catch (const Error&) {
            continue;
        }
        int after_final = 0;
        for (int step = 0; step < 30; ++step) {
            const auto before = svc.get(id);
            if (before->state() == SessionState::Finalized && ++after_final > 3) break;
            const auto& forest = before->forest;
            const auto any_pop = [&] {
                if (rng() % 8 == 0) return std::string("pop-999");
                return forest.nodes()[rng() % forest.size()].pop_id();
            };
            ++operations;
            try {
                const auto op = rng() % 24;
                switch (op < 4 ? 0 : op < 8 ? 1 : op < 13 ? 2 : op < 17 ? 3 : op == 17 ? 4 : op == 18 ? 5 : 6) {
                    case 0: svc.ask_next(id); break;
                    case 1:
                        svc.answer(id, before->pending && rng() % 4 ? before->pending->question_id : "q-77",
                                   rng() % 2 ? Answer::Yes : Answer::No);
                        break;
                    case 2: svc.rephrase_from(id, any_pop()); break;
                    case 3: svc.edit_pop(id, any_pop(), rng() % 5 ? "C" : "", "E"); break;
                    case 4: svc.finalize(id, Selection::automatic()); break;
                    case 5: svc.finalize(id, Selection::manual(any_pop())); break;
                    default: {
                        const auto q = svc.ask_next(id);
                        svc.answer(id, q.question_id, Answer::Yes);
                    }
                }
            } catch (const Error&) {
                ++rejected;
                const auto after = svc.get(id);
                if (after->event_count == before->event_count) {
                    out.check(*after == *before, "failed operation changed the session");
                }
            }
            const auto now = svc.get(id);
            const auto problems = check_invariants(*now);
            out.check(problems.empty(), "invariant violated: " + (problems.empty() ? "" : problems[0]));
        }
        const auto live = svc.get(id);
        out.check(replay(svc.store()->load_events(id)) == *live, "fuzz replay differs");
        SessionService recovered(h.ctx, sdir);
        recovered.recover();
        out.check(*recovered.get(id) == *live, "fuzz recovery differs");

        std::ofstream(svc.store()->log_path(id), std::ios::app) << "{\"type\":\"Rephra";
        SessionService torn(h.ctx, sdir);
        torn.recover();
        out.check(*torn.get(id) == *live, "recovery after a torn write differs");
    }
    std::filesystem::remove_all(dir);
    if (out.ok) {
        out.detail = std::to_string(operations) + " fuzz operations, " + std::to_string(rejected) + " rejected";
    }
    return out;
}

Outcome select_best_oracle() {
    Outcome out;
    std::mt19937 rng(1000);
    for (int n = 0; n < 1000; ++n) {
        std::uniform_int_distribution<int> r(n % 2 ? 1 : 6, n % 2 ? 10 : 8);
        std::array<std::array<int, 6>, 3> g{};
        for (auto& row : g) {
            for (auto& v : row) v = r(rng);
        }
        const auto round = testing::make_round(g);
        std::size_t best = 0;
        double best_mean = -1;
        const auto ids = round.pop_ids();
        for (std::size_t q = 0; q < ids.size(); ++q) {
            double sum = 0;
            for (const auto& e : round.evaluations()) {
                if (e.pop_id() == ids[q]) sum += e.rating();
            }
            const double mean = sum / 3.0;
            if (mean > best_mean) {
                best_mean = mean;
                best = q;
            }
        }
        out.check(select_best(round) == ids[best], "mismatch on round " + std::to_string(n));
    }
    if (out.ok) out.detail = "1000 rounds";
    return out;
}

}  // namespace

int main() {
    run("scoring antisymmetry", 1.0, scoring_antisymmetry);
    run("harness arithmetic", 1.0, harness_arithmetic);
    run("round cardinality", 30.0, round_cardinality);
    run("determinism", 10.0, determinism);
    run("prompt fidelity", 0, prompt_fidelity);
    run("crash recovery", 0, crash_recovery);
    run("select_best correctness", 0, select_best_oracle);
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
