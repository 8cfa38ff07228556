// In-process stand-in for the entailment sidecar, used by the wire-client tests.
#pragma once

#include <atomic>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace mock {

enum class Mode { ok, malformed, http_error, short_results, bad_label };

// Labels a premise by keyword: "verified"/"supported" entail, "fabricated"/"contradicts" contradict.
inline std::string label_for(const std::string& premise) {
    auto has = [&](const char* w) { return premise.find(w) != std::string::npos; };
    if (has("fabricated") || has("contradicts") || has("FABRICATED")) return "CONTRADICTION";
    if (has("verified") || has("supported") || has("VERIFIED")) return "ENTAILMENT";
    return "NEUTRAL";
}

class NliServer {
public:
    explicit NliServer(std::string model = "mock-nli-1") : model_(std::move(model)) {
        server_.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
            res.set_content(nlohmann::json{{"status", "ok"}, {"model_id", model_}}.dump(), "application/json");
        });
        server_.Post("/v1/entailment", [this](const httplib::Request& req, httplib::Response& res) {
            const auto body = nlohmann::json::parse(req.body);
            {
                std::lock_guard lock(mutex_);
                batch_sizes_.push_back(body.at("pairs").size());
                for (const auto& p : body["pairs"]) hypotheses_.push_back(p.at("hypothesis").get<std::string>());
            }
            switch (mode.load()) {
                case Mode::http_error:
                    res.status = 503;
                    res.set_content("overloaded", "text/plain");
                    return;
                case Mode::malformed:
                    res.set_content("{\"results\": [", "application/json");
                    return;
                default:
                    break;
            }
            nlohmann::json out{{"model_id", model_}, {"latency_ms", 1.5}};
            out["results"] = nlohmann::json::array();
            for (const auto& p : body["pairs"]) {
                const auto label = mode.load() == Mode::bad_label ? std::string("MAYBE")
                                                                  : label_for(p.at("premise").get<std::string>());
                const double e = label == "ENTAILMENT" ? 0.9 : 0.05;
                const double c = label == "CONTRADICTION" ? 0.9 : 0.05;
                out["results"].push_back({{"label", label}, {"probs", {e, c, 1.0 - e - c}}});
            }
            if (mode.load() == Mode::short_results && !out["results"].empty()) out["results"].erase(0);
            res.set_content(out.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~NliServer() {
        server_.stop();
        thread_.join();
    }
    NliServer(const NliServer&) = delete;
    NliServer& operator=(const NliServer&) = delete;

    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
    std::vector<std::size_t> batch_sizes() {
        std::lock_guard lock(mutex_);
        return batch_sizes_;
    }
    std::vector<std::string> hypotheses() {
        std::lock_guard lock(mutex_);
        return hypotheses_;
    }

    std::atomic<Mode> mode{Mode::ok};

private:
    std::string model_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    std::mutex mutex_;
    std::vector<std::size_t> batch_sizes_;
    std::vector<std::string> hypotheses_;
};

// Nothing listens on port 1 in the test environment; connections are refused.
inline std::string dead_endpoint() { return "http://127.0.0.1:1"; }

}  // namespace mock
