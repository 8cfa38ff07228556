#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "traceconf/trace.hpp"

namespace traceconf {

/// How strongly each feature separates correct from incorrect verdicts; every
/// effect lies in [0, 1] with 0 meaning no separation.
struct SignalProfile {
    double sva = 0.0;
    double clm = 0.0;
    double egs = 0.0;
    double trace_length = 0.0;
    double hedging = 0.0;
    double negation = 0.0;
    double quotes = 0.0;
};

/// null, strong, sva_only, surface_only, moderate
SignalProfile named_profile(std::string_view name);
/// A profile name, or "feature=effect" pairs joined by ',' (unset effects 0),
/// e.g. "sva=1,egs=0.5".
SignalProfile parse_profile(std::string_view text);
nlohmann::ordered_json to_json(const SignalProfile& profile);

struct SynthSpec {
    std::size_t n = 1000;
    double error_rate = 0.2;
    SignalProfile profile;
    std::uint64_t seed = 42;
    std::string dataset_tag = "synthetic";

    void validate() const;
};

nlohmann::ordered_json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& doc);

/// Templated claim/step/quote traces whose latent correctness is stored as
/// the label of each record.
std::vector<TraceRecord> generate_synthetic(const SynthSpec& spec);

}  // namespace traceconf
