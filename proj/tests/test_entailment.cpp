#include <gtest/gtest.h>

#include <functional>

#include "mock_nli.hpp"
#include "support.hpp"
#include "traceconf/entailment.hpp"
#include "traceconf/error.hpp"
#include "traceconf/io.hpp"
#include "traceconf/pipeline.hpp"
#include "traceconf/signals.hpp"

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

std::vector<EntailmentPair> pairs(std::size_t n) {
    std::vector<EntailmentPair> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back({i % 2 ? "figure verified" : "figure fabricated", verdict_hypothesis(Verdict::pass)});
    return out;
}

}  // namespace

TEST(EntailmentWire, RequestShape) {
    const auto body = encode_entailment_request(pairs(2));
    ASSERT_EQ(body["pairs"].size(), 2u);
    EXPECT_EQ(body["pairs"][0]["premise"], "figure fabricated");
    EXPECT_EQ(body["pairs"][0]["hypothesis"], "The claim is supported by the evidence.");
}

TEST(EntailmentWire, DecodeValidAndInvalid) {
    const auto ok = decode_entailment_response(
        R"({"results":[{"label":"ENTAILMENT","probs":[0.8,0.1,0.1]},{"label":"NEUTRAL"}],"model_id":"m","latency_ms":3})", 2);
    ASSERT_EQ(ok.size(), 2u);
    EXPECT_EQ(ok[0].label, Entailment::entailment);
    EXPECT_DOUBLE_EQ(ok[0].probs[0], 0.8);
    EXPECT_EQ(code_of([] { decode_entailment_response("not json", 1); }), ErrorCode::remote_provider);
    EXPECT_EQ(code_of([] { decode_entailment_response(R"({"results":[]})", 1); }), ErrorCode::remote_provider);
    EXPECT_EQ(code_of([] { decode_entailment_response(R"({"results":[{"label":"YES"}]})", 1); }),
              ErrorCode::remote_provider);
    EXPECT_EQ(code_of([] { decode_entailment_response(R"({"results":[{"label":"NEUTRAL","probs":[1]}]})", 1); }),
              ErrorCode::remote_provider);
}

TEST(EntailmentWire, HypothesesDifferOnlyByNegation) {
    EXPECT_EQ(verdict_hypothesis(Verdict::pass), "The claim is supported by the evidence.");
    EXPECT_EQ(verdict_hypothesis(Verdict::fail), "The claim is not supported by the evidence.");
}

TEST(HttpClient, HealthReportsModelId) {
    mock::NliServer server("mock-nli-7");
    HttpEntailmentClient client(server.endpoint());
    EXPECT_EQ(client.model_id(), "mock-nli-7");
}

TEST(HttpClient, BatchesLargeRequests) {
    mock::NliServer server;
    HttpEntailmentClient client(server.endpoint(), 4);
    const auto results = client.classify(pairs(10));
    ASSERT_EQ(results.size(), 10u);
    EXPECT_EQ(server.batch_sizes(), (std::vector<std::size_t>{4, 4, 2}));
    for (std::size_t i = 0; i < 10; ++i)
        EXPECT_EQ(results[i].label, i % 2 ? Entailment::entailment : Entailment::contradiction);
}

TEST(HttpClient, FailuresAreRemoteProviderErrors) {
    mock::NliServer server;
    HttpEntailmentClient client(server.endpoint());
    for (auto mode : {mock::Mode::malformed, mock::Mode::http_error, mock::Mode::short_results, mock::Mode::bad_label}) {
        server.mode = mode;
        EXPECT_EQ(code_of([&] { client.classify(pairs(3)); }), ErrorCode::remote_provider);
    }
    server.mode = mock::Mode::http_error;
    try {
        client.classify(pairs(1));
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("503"), std::string::npos) << e.what();
    }
}

TEST(HttpClient, UnreachableHost) {
    HttpEntailmentClient client(mock::dead_endpoint(), 64, std::chrono::seconds(2));
    EXPECT_EQ(code_of([&] { client.classify(pairs(1)); }), ErrorCode::remote_provider);
    EXPECT_EQ(code_of([&] { client.model_id(); }), ErrorCode::remote_provider);
}

TEST(NliSva, NeutralStepsLeaveDenominator) {
    const std::vector<EntailmentResult> r{{Entailment::entailment, {}},
                                          {Entailment::neutral, {}},
                                          {Entailment::contradiction, {}},
                                          {Entailment::entailment, {}}};
    EXPECT_NEAR(sva_from_entailment(r, Verdict::pass), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(sva_from_entailment(r, Verdict::fail), 1.0 / 3.0, 1e-15);
    EXPECT_EQ(sva_from_entailment({{Entailment::neutral, {}}}, Verdict::pass), 0.5);
}

TEST(NliSva, ThroughMockServer) {
    mock::NliServer server;
    HttpEntailmentClient client(server.endpoint());
    const auto trace = segment_trace("Step 1: the title is verified.\nStep 2: the team is fabricated.\n"
                                     "Step 3: the date is verified.\nStep 4: reading on.");
    EXPECT_NEAR(compute_sva(trace, Verdict::pass, client), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(compute_sva(trace, Verdict::fail, client), 1.0 / 3.0, 1e-15);
    for (const auto& h : server.hypotheses()) EXPECT_EQ(h, verdict_hypothesis(Verdict::pass));
}

TEST(NliExtract, RunExtractUsesProvider) {
    mock::NliServer server("mock-nli-x");
    RunConfig c;
    c.command = "extract";
    c.provider = "nli";
    c.nli_endpoint = server.endpoint();
    const auto out = run_extract(oracle::fixture("golden_trace.jsonl"), c);
    EXPECT_TRUE(out.failed_ids.empty());
    EXPECT_EQ(out.summary["nli_model_id"], "mock-nli-x");
    EXPECT_EQ(read_features(out.features).size(), 1u);
}

TEST(NliExtract, RemoteFailureListsIdsWithoutPartialOutput) {
    RunConfig c;
    c.command = "extract";
    c.provider = "nli";
    c.nli_endpoint = mock::dead_endpoint();
    const auto out = run_extract(oracle::fixture("golden_trace.jsonl"), c);
    EXPECT_TRUE(out.features.empty());
    EXPECT_EQ(out.failed_ids, std::vector<std::string>{"golden-1"});
    EXPECT_FALSE(out.error.empty());
    EXPECT_EQ(code_of([&] { features_from_input(oracle::fixture("golden_trace.jsonl"), c); }),
              ErrorCode::remote_provider);
}
