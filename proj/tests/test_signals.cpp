#include <gtest/gtest.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <sstream>

#include "support.hpp"
#include "traceconf/error.hpp"
#include "traceconf/io.hpp"
#include "traceconf/signals.hpp"
#include "traceconf/text.hpp"

using namespace traceconf;

namespace {

TraceRecord golden() { return read_corpus(oracle::fixture("golden_trace.jsonl")).records.at(0); }

AnalysisTrace with_steps(std::initializer_list<Polarity> polarities) {
    AnalysisTrace t;
    for (auto p : polarities) t.steps.push_back(Step{t.steps.size(), "s", p});
    return t;
}

AnalysisTrace with_claims(std::initializer_list<Outcome> outcomes) {
    AnalysisTrace t;
    for (auto o : outcomes) t.claim_outcomes.push_back(ClaimOutcome{"c", o});
    return t;
}

std::vector<std::string> words(std::mt19937_64& rng, std::size_t n, std::size_t vocab) {
    std::uniform_int_distribution<std::size_t> pick(0, vocab - 1);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("w" + std::to_string(pick(rng)));
    return out;
}

std::string joined(const std::vector<std::string>& tokens) {
    std::string s;
    for (const auto& t : tokens) s += (s.empty() ? "" : " ") + t;
    return s;
}

}  // namespace

TEST(Sva, GoldenTrace) {
    const auto r = golden();
    EXPECT_NEAR(compute_sva(segment_trace(r.trace_text), r.verdict), 2.0 / 3.0, 1e-12);
}

TEST(Sva, UnanimousAndNeutral) {
    EXPECT_DOUBLE_EQ(compute_sva(with_steps({Polarity::positive, Polarity::positive, Polarity::none}), Verdict::pass),
                     1.0);
    EXPECT_DOUBLE_EQ(compute_sva(with_steps({Polarity::none, Polarity::none}), Verdict::fail), 0.5);
    EXPECT_DOUBLE_EQ(compute_sva(AnalysisTrace{}, Verdict::pass), 0.5);
}

TEST(Sva, ComplementAcrossVerdicts) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        AnalysisTrace t;
        const auto n = 1 + rng() % 12;
        for (std::size_t i = 0; i < n; ++i) t.steps.push_back(Step{i, "s", static_cast<Polarity>(rng() % 3)});
        t.steps.push_back(Step{n, "s", Polarity::negative});  // at least one conclusive step
        EXPECT_NEAR(compute_sva(t, Verdict::pass) + compute_sva(t, Verdict::fail), 1.0, 1e-15);
    }
}

TEST(Sva, PermutationInvariance) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        AnalysisTrace t;
        for (std::size_t i = 0; i < 10; ++i) {
            t.steps.push_back(Step{i, "s", static_cast<Polarity>(rng() % 3)});
            t.claim_outcomes.push_back(ClaimOutcome{"c", static_cast<Outcome>(rng() % 3)});
        }
        auto shuffled = t;
        std::shuffle(shuffled.steps.begin(), shuffled.steps.end(), rng);
        std::shuffle(shuffled.claim_outcomes.begin(), shuffled.claim_outcomes.end(), rng);
        EXPECT_EQ(compute_sva(t, Verdict::pass), compute_sva(shuffled, Verdict::pass));
        EXPECT_EQ(compute_clm(t), compute_clm(shuffled));
    }
}

TEST(Clm, Examples) {
    EXPECT_NEAR(compute_clm(with_claims({Outcome::verified, Outcome::verified, Outcome::fabricated})), 2.0 / 3.0,
                1e-15);
    EXPECT_DOUBLE_EQ(compute_clm(with_claims({Outcome::verified, Outcome::verified, Outcome::fabricated,
                                              Outcome::fabricated})),
                     0.5);
    EXPECT_DOUBLE_EQ(compute_clm(with_claims({Outcome::verified, Outcome::verified, Outcome::verified,
                                              Outcome::verified})),
                     1.0);
    EXPECT_DOUBLE_EQ(compute_clm(with_claims({Outcome::not_found, Outcome::fabricated, Outcome::verified})),
                     2.0 / 3.0);
    EXPECT_DOUBLE_EQ(compute_clm(AnalysisTrace{}), 0.5);
}

TEST(FuzzyMatch, Examples) {
    const EgsConfig cfg;
    const auto exact = fuzzy_match_span(tokenize("quick brown fox"), tokenize("the quick brown fox jumps"), cfg);
    EXPECT_DOUBLE_EQ(exact.best_overlap, 1.0);
    EXPECT_TRUE(exact.matched);
    const auto disjoint = fuzzy_match_span(tokenize("alpha beta"), tokenize("gamma delta epsilon"), cfg);
    EXPECT_DOUBLE_EQ(disjoint.best_overlap, 0.0);
    EXPECT_FALSE(disjoint.matched);
    const auto four_of_five = fuzzy_match_span(tokenize("a b c d e"), tokenize("x a b z d e y"), cfg);
    EXPECT_DOUBLE_EQ(four_of_five.best_overlap, oracle::window_overlap(tokenize("a b c d e"), tokenize("x a b z d e y")));
    EXPECT_DOUBLE_EQ(four_of_five.best_overlap, 0.8);
    EXPECT_TRUE(four_of_five.matched);
    EXPECT_DOUBLE_EQ(fuzzy_match_span(tokenize("a b"), {}, cfg).best_overlap, 0.0);
}

TEST(FuzzyMatch, MultisetNotSet) {
    const EgsConfig cfg;
    EXPECT_DOUBLE_EQ(fuzzy_match_span(tokenize("the the the"), tokenize("the cat sat"), cfg).best_overlap, 1.0 / 3.0);
}

TEST(FuzzyMatch, SpanLongerThanEvidenceUsesWholeEvidence) {
    EXPECT_DOUBLE_EQ(fuzzy_match_span(tokenize("a b c d e"), tokenize("a b c d"), EgsConfig{}).best_overlap, 0.8);
}

TEST(FuzzyMatch, OracleEquivalenceRandom) {
    std::mt19937_64 rng(11);
    const EgsConfig cfg;
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t vocab = 2 + rng() % 30;
        const auto evidence = words(rng, rng() % 201, vocab);
        auto span = words(rng, 1 + rng() % 12, vocab);
        if (!evidence.empty() && rng() % 3 == 0) {  // plant a perturbed copy
            const auto start = rng() % evidence.size();
            for (std::size_t k = 0; k < span.size() && start + k < evidence.size(); ++k)
                if (rng() % 5) span[k] = evidence[start + k];
        }
        const auto got = fuzzy_match_span(span, evidence, cfg);
        const double want = oracle::window_overlap(span, evidence);
        ASSERT_DOUBLE_EQ(got.best_overlap, want) << joined(span) << " | " << joined(evidence);
        ASSERT_EQ(got.matched, want >= 0.8);
    }
}

TEST(Egs, GoldenTrace) {
    const auto r = golden();
    EXPECT_NEAR(compute_egs(segment_trace(r.trace_text), r.evidence, EgsConfig{}), 2.0 / 3.0, 1e-12);
}

TEST(Egs, LengthWeighting) {
    const auto trace = segment_trace("\"one two three four five six\" and \"zebra yak\"");
    EXPECT_DOUBLE_EQ(compute_egs(trace, "x one two three four five six y", EgsConfig{}), 0.75);
    EXPECT_DOUBLE_EQ(compute_egs(segment_trace("no quotes"), "anything", EgsConfig{}), 0.5);
}

TEST(Egs, Monotonicity) {
    const std::string evidence = "alpha beta gamma delta epsilon zeta eta theta";
    std::string trace = "\"alpha beta gamma\" \"omega psi\"";
    const double base = compute_egs(segment_trace(trace), evidence, EgsConfig{});
    ASSERT_GT(base, 0.0);
    ASSERT_LT(base, 1.0);
    EXPECT_GT(compute_egs(segment_trace(trace + " \"delta epsilon\""), evidence, EgsConfig{}), base);
    EXPECT_LT(compute_egs(segment_trace(trace + " \"rho sigma\""), evidence, EgsConfig{}), base);
}

TEST(Egs, EvidenceOutsideMatchedWindowsIrrelevant) {
    const auto trace = segment_trace("Claim 1: \"gamma delta\" -> VERIFIED\nStep 2: fabricated");
    const std::string a = "alpha beta gamma delta epsilon";
    const std::string b = "zzz qqq gamma delta rrr";
    EXPECT_EQ(compute_egs(trace, a, EgsConfig{}), compute_egs(trace, b, EgsConfig{}));
    TraceRecord r{"id", a, "c", "Claim 1: \"gamma delta\" -> VERIFIED\nStep 2: fabricated", Verdict::pass, {}, ""};
    const auto fa = assemble_features(r, {}, EgsConfig{});
    r.evidence = "completely different text";
    const auto fb = assemble_features(r, {}, EgsConfig{});
    EXPECT_EQ(fa.sva, fb.sva);
    EXPECT_EQ(fa.clm, fb.clm);
}

TEST(Surface, CraftedText) {
    const auto trace = segment_trace("However, this is partially unclear. It is not so.");
    const auto c = compute_surface(trace, SurfaceLexicons::defaults());
    EXPECT_EQ(c.hedging_count, 3u);
    EXPECT_EQ(c.negation_count, 1u);
    EXPECT_EQ(c.trace_length, 9u);
    EXPECT_EQ(c.quote_count, 0u);
}

TEST(Surface, EmptyTrace) {
    const auto c = compute_surface(segment_trace(""), SurfaceLexicons::defaults());
    EXPECT_EQ(c.trace_length + c.hedging_count + c.negation_count + c.quote_count, 0u);
}

TEST(Assemble, GoldenVector) {
    const auto f = assemble_features(golden(), {}, EgsConfig{});
    EXPECT_NEAR(f.sva, 2.0 / 3.0, 1e-9);
    EXPECT_NEAR(f.clm, 2.0 / 3.0, 1e-9);
    EXPECT_NEAR(f.egs, 2.0 / 3.0, 1e-9);
    EXPECT_EQ(f.trace_length, 87u);
    EXPECT_EQ(f.hedging_count, 0u);
    EXPECT_EQ(f.negation_count, 5u);
    EXPECT_EQ(f.quote_count, 3u);
}

TEST(Assemble, NegationCountByHand) {
    // Independent count over whitespace-split, lowercased, punctuation-trimmed words.
    const auto text = golden().trace_text;
    std::istringstream in(text);
    std::string w;
    std::size_t count = 0;
    for (; in >> w;) {
        while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.back()))) w.pop_back();
        while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.front()))) w.erase(0, 1);
        for (auto& ch : w) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        if (w == "not" || w == "no" || w == "never" || w == "none" || w == "cannot" || w == "without") ++count;
    }
    EXPECT_EQ(assemble_features(golden(), {}, EgsConfig{}).negation_count, count);
}

TEST(Assemble, EmptyTraceDefaults) {
    TraceRecord r{"id", "evidence", "claim", "", Verdict::pass, {}, ""};
    const auto f = assemble_features(r, {}, EgsConfig{});
    EXPECT_EQ(f.to_array(), (std::array<double, 7>{0.5, 0.5, 0.5, 0, 0, 0, 0}));
}

TEST(Assemble, SevenFiniteEntries) {
    const auto f = assemble_features(golden(), {}, EgsConfig{}).to_array();
    EXPECT_EQ(f.size(), 7u);
    for (double v : f) EXPECT_TRUE(std::isfinite(v));
}

TEST(Config, Validation) {
    EXPECT_THROW(EgsConfig{0.0}.validate(), Error);
    EXPECT_THROW(EgsConfig{1.5}.validate(), Error);
    EXPECT_NO_THROW(EgsConfig{1.0}.validate());
    EXPECT_THROW((AlignmentProvider{ProviderKind::nli_remote, std::nullopt}.validate()), Error);
}

TEST(Lexicons, OverridesApply) {
    const auto lex = Lexicons::from_json(nlohmann::json::parse(R"({"hedging":["perhaps"]})"));
    const auto trace = segment_trace("Perhaps however perhaps.", lex.conclusion);
    EXPECT_EQ(compute_surface(trace, lex.surface).hedging_count, 2u);
    EXPECT_THROW(Lexicons::from_json(nlohmann::json::parse(R"({"hedging":"perhaps"})")), Error);
    EXPECT_THROW(Lexicons::from_json(nlohmann::json::parse(R"({"bogus":[]})")), Error);
}
