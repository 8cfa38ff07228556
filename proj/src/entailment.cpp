#include "traceconf/entailment.hpp"

#include <httplib.h>

#include "traceconf/error.hpp"

namespace traceconf {

std::string_view to_string(Entailment e) {
    switch (e) {
        case Entailment::entailment: return "ENTAILMENT";
        case Entailment::contradiction: return "CONTRADICTION";
        case Entailment::neutral: return "NEUTRAL";
    }
    return "NEUTRAL";
}

Entailment parse_entailment(std::string_view text) {
    if (text == "ENTAILMENT") return Entailment::entailment;
    if (text == "CONTRADICTION") return Entailment::contradiction;
    if (text == "NEUTRAL") return Entailment::neutral;
    throw Error(ErrorCode::remote_provider, "unknown entailment label '" + std::string(text) + "'");
}

std::string verdict_hypothesis(Verdict verdict) {
    return verdict == Verdict::pass ? "The claim is supported by the evidence."
                                    : "The claim is not supported by the evidence.";
}

nlohmann::json encode_entailment_request(std::span<const EntailmentPair> pairs) {
    nlohmann::json body;
    body["pairs"] = nlohmann::json::array();
    for (const auto& p : pairs) body["pairs"].push_back({{"premise", p.premise}, {"hypothesis", p.hypothesis}});
    return body;
}

std::vector<EntailmentResult> decode_entailment_response(std::string_view body, std::size_t expected) {
    std::vector<EntailmentResult> results;
    try {
        const auto doc = nlohmann::json::parse(body);
        const auto& items = doc.at("results");
        if (!items.is_array() || items.size() != expected)
            throw Error(ErrorCode::remote_provider, "entailment response holds " + std::to_string(items.size()) +
                                                        " results for " + std::to_string(expected) + " pairs");
        results.reserve(items.size());
        for (const auto& item : items) {
            EntailmentResult r;
            r.label = parse_entailment(item.at("label").get<std::string>());
            if (const auto it = item.find("probs"); it != item.end()) {
                if (!it->is_array() || it->size() != 3)
                    throw Error(ErrorCode::remote_provider, "entailment probs must hold three values");
                for (std::size_t k = 0; k < 3; ++k) r.probs[k] = (*it)[k].get<double>();
            }
            results.push_back(r);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::remote_provider, std::string("malformed entailment response: ") + e.what());
    }
    return results;
}

HttpEntailmentClient::HttpEntailmentClient(std::string endpoint, std::size_t max_batch, std::chrono::seconds timeout)
    : endpoint_(std::move(endpoint)), max_batch_(max_batch == 0 ? 1 : max_batch), timeout_(timeout) {}

namespace {

httplib::Client connect(const std::string& endpoint, std::chrono::seconds timeout) {
    httplib::Client client(endpoint);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    return client;
}

[[noreturn]] void unreachable(const std::string& endpoint, const httplib::Result& res) {
    if (!res) throw Error(ErrorCode::remote_provider, "entailment provider at " + endpoint + " unreachable: " +
                                                          httplib::to_string(res.error()));
    throw Error(ErrorCode::remote_provider, "entailment provider at " + endpoint + " answered HTTP " +
                                                std::to_string(res->status) + ": " + res->body);
}

}  // namespace

std::vector<EntailmentResult> HttpEntailmentClient::classify(std::span<const EntailmentPair> pairs) {
    std::vector<EntailmentResult> all;
    all.reserve(pairs.size());
    auto client = connect(endpoint_, timeout_);
    for (std::size_t begin = 0; begin < pairs.size(); begin += max_batch_) {
        const auto batch = pairs.subspan(begin, std::min(max_batch_, pairs.size() - begin));
        const auto res = client.Post("/v1/entailment", encode_entailment_request(batch).dump(), "application/json");
        if (!res || res->status != 200) unreachable(endpoint_, res);
        auto results = decode_entailment_response(res->body, batch.size());
        all.insert(all.end(), results.begin(), results.end());
    }
    return all;
}

std::string HttpEntailmentClient::model_id() {
    auto client = connect(endpoint_, timeout_);
    const auto res = client.Get("/v1/health");
    if (!res || res->status != 200) unreachable(endpoint_, res);
    try {
        return nlohmann::json::parse(res->body).at("model_id").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::remote_provider, std::string("malformed health response: ") + e.what());
    }
}

}  // namespace traceconf
