#include <gtest/gtest.h>

#include <functional>
#include <sstream>

#include "support.hpp"
#include "traceconf/error.hpp"
#include "traceconf/io.hpp"
#include "traceconf/pipeline.hpp"

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

std::string message_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

RunConfig small_config() {
    RunConfig c;
    c.n = 300;
    c.profile = "strong";
    c.resamples = 100;
    return c;
}

const std::string& features() {
    static const std::string text = [] {
        auto c = small_config();
        c.command = "synth";
        const auto corpus = run_synth(c);
        c.command = "extract";
        return run_extract(corpus, c).features;
    }();
    return text;
}

std::vector<nlohmann::json> jsonl(const std::string& text) {
    std::vector<nlohmann::json> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) out.push_back(nlohmann::json::parse(line));
    return out;
}

}  // namespace

TEST(Pipeline, ExtractEmbedsMetaAndSummary) {
    auto c = small_config();
    c.command = "synth";
    const auto corpus = run_synth(c);
    c.command = "extract";
    const auto out = run_extract(corpus, c);
    EXPECT_TRUE(out.failed_ids.empty());
    EXPECT_EQ(out.summary["records"], 300);
    EXPECT_EQ(out.summary["extracted"], 300);
    const auto rows = jsonl(out.features);
    ASSERT_EQ(rows.size(), 301u);
    EXPECT_TRUE(rows[0].contains("_meta"));
    EXPECT_EQ(rows[0]["_meta"]["config"]["command"], "extract");
    EXPECT_EQ(read_features(out.features).size(), 300u);
}

TEST(Pipeline, TrainAndScoreAreDeterministic) {
    auto c = small_config();
    c.command = "train";
    const auto model = run_train(features(), c);
    EXPECT_EQ(model, run_train(features(), c));
    c.command = "score";
    const auto scored = run_score(model, features(), c);
    EXPECT_EQ(scored, run_score(model, features(), c));
    const auto rows = jsonl(scored);
    ASSERT_EQ(rows.size(), 301u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double p = rows[i]["confidence"];
        EXPECT_GT(p, 0.0);
        EXPECT_LT(p, 1.0);
    }
}

TEST(Pipeline, EvaluateIsByteIdentical) {
    auto c = small_config();
    c.command = "evaluate";
    const auto a = run_evaluate(features(), c);
    EXPECT_EQ(a, run_evaluate(features(), c));
    const auto doc = nlohmann::json::parse(a);
    EXPECT_GT(doc["auroc"].get<double>(), 0.9);
    EXPECT_EQ(doc["n"], 300);
}

TEST(Pipeline, RerunFromEmbeddedConfig) {
    auto c = small_config();
    c.command = "evaluate";
    c.seed = 9;
    c.folds = 4;
    const auto a = run_evaluate(features(), c);
    const auto again = RunConfig::from_json(read_meta(a)["config"]);
    EXPECT_EQ(again.seed, 9u);
    EXPECT_EQ(again.folds, 4u);
    EXPECT_EQ(run_evaluate(features(), again), a);
}

TEST(Pipeline, RouteAccounting) {
    auto c = small_config();
    c.command = "train";
    const auto model = run_train(features(), c);
    c.command = "route";
    c.threshold = 0.6;
    const auto doc = nlohmann::json::parse(run_route(model, features(), c));
    c.command = "score";
    std::size_t flagged = 0, flagged_errors = 0, errors = 0;
    for (const auto& row : jsonl(run_score(model, features(), c))) {
        if (row.contains("_meta")) continue;
        const bool f = row["confidence"].get<double>() < 0.6;
        flagged += f;
        errors += row["label"] == 0;
        flagged_errors += f && row["label"] == 0;
    }
    EXPECT_EQ(doc["threshold_source"], "config");
    EXPECT_EQ(doc["flagged"], flagged);
    EXPECT_EQ(doc["flagged_errors"], flagged_errors);
    EXPECT_EQ(doc["total_errors"], errors);
    EXPECT_EQ(doc["flagged_ids"].size(), flagged);
}

TEST(Pipeline, MissingLabelNamesTheColumn) {
    std::string text = features();
    const auto pos = text.find("\"label\":", text.find('\n'));
    ASSERT_NE(pos, std::string::npos);
    const auto end = text.find_first_of(",}", pos);
    text.replace(pos, end - pos, "\"label\":null");
    auto c = small_config();
    c.command = "evaluate";
    EXPECT_EQ(code_of([&] { run_evaluate(text, c); }), ErrorCode::input);
    EXPECT_NE(message_of([&] { run_evaluate(text, c); }).find("label"), std::string::npos);
}

TEST(Pipeline, AblateListsRequestedSubsets) {
    auto c = small_config();
    c.command = "ablate";
    c.mask = "all,sva_only,surface_only";
    const auto doc = nlohmann::json::parse(run_ablate(features(), c));
    ASSERT_EQ(doc["subsets"].size(), 3u);
    EXPECT_EQ(doc["subsets"][1]["subset"], "sva_only");
}

TEST(Pipeline, TransferMatrixShape) {
    auto c = small_config();
    c.command = "transfer";
    const auto doc = nlohmann::json::parse(run_transfer({{"a", features()}, {"b", features()}}, c));
    ASSERT_EQ(doc["auroc"].size(), 2u);
    ASSERT_EQ(doc["auroc"][0].size(), 2u);
}

TEST(Pipeline, ConfigValidation) {
    RunConfig c;
    c.folds = 1;
    EXPECT_EQ(code_of([&] { validate(c); }), ErrorCode::config);
    c = RunConfig{};
    c.provider = "nli";
    EXPECT_EQ(code_of([&] { validate(c); }), ErrorCode::config);
    EXPECT_EQ(code_of([] { RunConfig::from_json(nlohmann::json::parse(R"({"sede":1})")); }), ErrorCode::config);
    const auto round = RunConfig::from_json(nlohmann::json::parse(small_config().to_json().dump()));
    EXPECT_EQ(round.to_json().dump(), small_config().to_json().dump());
}

TEST(Pipeline, DegenerateLabelsReported) {
    std::string text;
    for (const auto& row : jsonl(features())) {
        if (row.contains("_meta")) continue;
        auto r = row;
        r["label"] = 1;
        text += r.dump() + "\n";
    }
    auto c = small_config();
    c.command = "evaluate";
    const auto code = code_of([&] { run_evaluate(text, c); });
    EXPECT_TRUE(code == ErrorCode::degenerate_labels || code == ErrorCode::stratification);
}

TEST(Pipeline, GoldenFixtureExtractsExactly) {
    RunConfig c;
    c.command = "extract";
    const auto out = run_extract(oracle::fixture("golden_trace.jsonl"), c);
    const auto rows = read_features(out.features);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_NEAR(rows[0].features.sva, 2.0 / 3.0, 1e-12);
    EXPECT_FALSE(rows[0].label.has_value());
}
