#pragma once

#include <array>
#include <chrono>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "traceconf/trace.hpp"

namespace traceconf {

enum class Entailment { entailment, contradiction, neutral };

std::string_view to_string(Entailment e);
Entailment parse_entailment(std::string_view text);

struct EntailmentPair {
    std::string premise;
    std::string hypothesis;
};

struct EntailmentResult {
    Entailment label = Entailment::neutral;
    std::array<double, 3> probs{};  // entailment, contradiction, neutral
};

/// Fixed hypothesis templates; they differ only by the negation "not".
std::string verdict_hypothesis(Verdict verdict);

class EntailmentClient {
public:
    virtual ~EntailmentClient() = default;
    virtual std::vector<EntailmentResult> classify(std::span<const EntailmentPair> pairs) = 0;
    virtual std::string model_id() = 0;
};

nlohmann::json encode_entailment_request(std::span<const EntailmentPair> pairs);
/// Throws Error(remote_provider) when the body does not follow the wire
/// contract or carries a different number of results than `expected`.
std::vector<EntailmentResult> decode_entailment_response(std::string_view body, std::size_t expected);

/// Client for the entailment sidecar: POST /v1/entailment, GET /v1/health.
/// Creates a connection per call, so one instance may be shared by threads.
class HttpEntailmentClient : public EntailmentClient {
public:
    explicit HttpEntailmentClient(std::string endpoint, std::size_t max_batch = 64,
                                  std::chrono::seconds timeout = std::chrono::seconds(30));

    std::vector<EntailmentResult> classify(std::span<const EntailmentPair> pairs) override;
    std::string model_id() override;

    const std::string& endpoint() const { return endpoint_; }

private:
    std::string endpoint_;
    std::size_t max_batch_;
    std::chrono::seconds timeout_;
};

}  // namespace traceconf
