#include <gtest/gtest.h>

#include <functional>

#include "traceconf/error.hpp"
#include "traceconf/io.hpp"
#include "traceconf/signals.hpp"
#include "traceconf/synth.hpp"

using namespace traceconf;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no traceconf::Error thrown";
    return ErrorCode::io;
}

std::string corpus_text(const std::vector<TraceRecord>& records) {
    std::string out;
    for (const auto& r : records) out += record_to_json(r).dump() + "\n";
    return out;
}

}  // namespace

TEST(Synth, ValidatesSpec) {
    SynthSpec spec;
    spec.error_rate = 0.0;
    EXPECT_EQ(code_of([&] { spec.validate(); }), ErrorCode::config);
    spec.error_rate = 1.0;
    EXPECT_EQ(code_of([&] { spec.validate(); }), ErrorCode::config);
    spec.error_rate = 0.3;
    spec.profile.egs = 1.5;
    EXPECT_EQ(code_of([&] { spec.validate(); }), ErrorCode::config);
    EXPECT_EQ(code_of([] { named_profile("loud"); }), ErrorCode::config);
}

TEST(Synth, ZeroRecords) {
    SynthSpec spec;
    spec.n = 0;
    EXPECT_TRUE(generate_synthetic(spec).empty());
}

TEST(Synth, DeterministicAndSeedSensitive) {
    SynthSpec spec;
    spec.n = 50;
    spec.profile = named_profile("strong");
    EXPECT_EQ(corpus_text(generate_synthetic(spec)), corpus_text(generate_synthetic(spec)));
    auto other = spec;
    other.seed = 43;
    EXPECT_NE(corpus_text(generate_synthetic(spec)), corpus_text(generate_synthetic(other)));
}

TEST(Synth, PrefixStableAcrossN) {
    SynthSpec small;
    small.n = 10;
    auto large = small;
    large.n = 40;
    const auto a = generate_synthetic(small);
    const auto b = generate_synthetic(large);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].trace_text, b[i].trace_text);
        EXPECT_EQ(a[i].label, b[i].label);
    }
}

TEST(Synth, ErrorRateRespected) {
    SynthSpec spec;
    spec.n = 4000;
    spec.error_rate = 0.25;
    std::size_t errors = 0;
    for (const auto& r : generate_synthetic(spec)) errors += *r.label == 0;
    EXPECT_NEAR(static_cast<double>(errors) / 4000.0, 0.25, 0.02);
}

TEST(Synth, RecordsParseAndExtract) {
    SynthSpec spec;
    spec.n = 30;
    spec.profile = named_profile("moderate");
    const auto corpus = read_corpus(corpus_text(generate_synthetic(spec)));
    ASSERT_EQ(corpus.records.size(), 30u);
    const FeatureExtractor extractor({}, {}, {});
    for (const auto& r : corpus.records) {
        const auto f = extractor.extract(r);
        EXPECT_EQ(segment_trace(r.trace_text).claim_outcomes.size(), 3u);
        EXPECT_GE(f.sva, 0.0);
        EXPECT_LE(f.sva, 1.0);
        EXPECT_GT(f.trace_length, 0u);
    }
}

TEST(Synth, ProfileParsing) {
    const auto p = parse_profile("sva=1,egs=0.5");
    EXPECT_EQ(p.sva, 1.0);
    EXPECT_EQ(p.egs, 0.5);
    EXPECT_EQ(p.clm, 0.0);
    EXPECT_EQ(parse_profile("strong").sva, named_profile("strong").sva);
    EXPECT_EQ(code_of([] { parse_profile("sva=high"); }), ErrorCode::config);
    EXPECT_EQ(code_of([] { parse_profile("colour=1"); }), ErrorCode::config);
    const auto spec_doc = to_json(SynthSpec{});
    EXPECT_EQ(to_json(synth_spec_from_json(nlohmann::json::parse(spec_doc.dump()))).dump(), spec_doc.dump());
}

TEST(Corpus, MetaAndBlankLinesSkipped) {
    const std::string text = meta_line({{"tool", "x"}}) +
                             "\n\n" R"({"id":"a","evidence":"e","claim":"c","trace_text":"t","verdict":"PASS"})" "\n";
    const auto corpus = read_corpus(text);
    ASSERT_EQ(corpus.records.size(), 1u);
    EXPECT_EQ(read_meta(text)["tool"], "x");
}

TEST(Corpus, LenientCollectsBadLines) {
    const std::string text = R"({"id":"a","evidence":"e","claim":"c","trace_text":"t","verdict":"PASS"})" "\n"
                             "garbage\n"
                             R"({"id":"a","evidence":"e","claim":"c","trace_text":"t","verdict":"PASS"})" "\n"
                             R"({"id":"b","evidence":"e","claim":"c","verdict":"PASS"})" "\n"
                             R"({"id":"c","evidence":"e","claim":"c","trace_text":"t","verdict":"FAIL"})" "\n";
    EXPECT_EQ(code_of([&] { read_corpus(text); }), ErrorCode::parse);
    const auto corpus = read_corpus(text, true);
    ASSERT_EQ(corpus.records.size(), 2u);
    ASSERT_EQ(corpus.skipped.size(), 3u);
    EXPECT_EQ(corpus.skipped[0].line, 2u);
    EXPECT_EQ(corpus.skipped[1].line, 3u);
    EXPECT_NE(corpus.skipped[2].message.find("trace_text"), std::string::npos);
}

TEST(Corpus, DuplicateIdsAreSchemaErrors) {
    const std::string line = R"({"id":"a","evidence":"e","claim":"c","trace_text":"t","verdict":"PASS"})";
    EXPECT_EQ(code_of([&] { read_corpus(line + "\n" + line + "\n"); }), ErrorCode::schema);
}

TEST(Features, RoundTrip) {
    FeatureRecord r;
    r.id = "x1";
    r.features = FeatureVector{0.1, 2.0 / 3.0, 1.0, 87, 1, 5, 3};
    r.verdict = Verdict::fail;
    r.label = 0;
    r.dataset_tag = "t";
    const auto line = feature_record_to_json(r).dump();
    const auto back = parse_feature_line(line);
    EXPECT_EQ(feature_record_to_json(back).dump(), line);
    EXPECT_EQ(back.features.to_array(), r.features.to_array());
}

TEST(Features, RejectsOutOfRangeAndDuplicates) {
    EXPECT_EQ(code_of([] {
                  parse_feature_line(
                      R"({"id":"a","sva":1.5,"clm":0,"egs":0,"trace_length":1,"hedging_count":0,"negation_count":0,"quote_count":0,"verdict":"PASS"})");
              }),
              ErrorCode::schema);
    EXPECT_EQ(code_of([] {
                  parse_feature_line(
                      R"({"id":"a","sva":1,"clm":0,"egs":0,"trace_length":-1,"hedging_count":0,"negation_count":0,"quote_count":0,"verdict":"PASS"})");
              }),
              ErrorCode::schema);
    const std::string ok =
        R"({"id":"a","sva":1,"clm":0,"egs":0,"trace_length":1,"hedging_count":0,"negation_count":0,"quote_count":0,"verdict":"PASS"})";
    EXPECT_EQ(code_of([&] { read_features(ok + "\n" + ok + "\n"); }), ErrorCode::schema);
}

TEST(Features, CorpusDetection) {
    EXPECT_TRUE(looks_like_record_corpus(R"({"id":"a","trace_text":"t"})"));
    EXPECT_FALSE(looks_like_record_corpus(R"({"id":"a","sva":1})"));
}

TEST(Numbers, ShortestRoundTrip) {
    for (double v : {0.1, 2.0 / 3.0, 1e-300, 123456789.125, 0.0}) EXPECT_EQ(std::stod(format_number(v)), v);
    EXPECT_EQ(format_number(0.5), "0.5");
}
