#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "traceconf/entailment.hpp"
#include "traceconf/lexicon.hpp"
#include "traceconf/trace.hpp"

namespace traceconf {

inline constexpr std::size_t kFeatureCount = 7;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "sva", "clm", "egs", "trace_length", "hedging_count", "negation_count", "quote_count"};

/// Neutral value of SVA, CLM and EGS when their denominator is empty.
inline constexpr double kNeutralSignal = 0.5;

struct FeatureVector {
    double sva = kNeutralSignal;
    double clm = kNeutralSignal;
    double egs = kNeutralSignal;
    std::size_t trace_length = 0;
    std::size_t hedging_count = 0;
    std::size_t negation_count = 0;
    std::size_t quote_count = 0;

    std::array<double, kFeatureCount> to_array() const;
    static FeatureVector from_array(const std::array<double, kFeatureCount>& values);
};

enum class ProviderKind { regex, nli_remote };

struct AlignmentProvider {
    ProviderKind kind = ProviderKind::regex;
    std::optional<std::string> endpoint;

    void validate() const;
};

struct EgsConfig {
    double overlap_threshold = 0.8;

    void validate() const;
};

struct SpanMatch {
    bool matched = false;
    double best_overlap = 0.0;
};

struct SurfaceCounts {
    std::size_t trace_length = 0;
    std::size_t hedging_count = 0;
    std::size_t negation_count = 0;
    std::size_t quote_count = 0;
};

double compute_sva(const AnalysisTrace& trace, Verdict verdict);
/// NLI variant: each step is classified against the PASS hypothesis; NEUTRAL
/// steps leave the denominator. Propagates Error(remote_provider).
double compute_sva(const AnalysisTrace& trace, Verdict verdict, EntailmentClient& client);
double sva_from_entailment(const std::vector<EntailmentResult>& results, Verdict verdict);

double compute_clm(const AnalysisTrace& trace);

/// Best multiset overlap of the span against every contiguous evidence window
/// of the span's token length, as a fraction of that length.
SpanMatch fuzzy_match_span(const std::vector<std::string>& span_tokens,
                           const std::vector<std::string>& evidence_tokens,
                           const EgsConfig& config);
SpanMatch fuzzy_match_span(const QuotedSpan& span, std::string_view evidence, const EgsConfig& config);

double compute_egs(const AnalysisTrace& trace, std::string_view evidence, const EgsConfig& config);

SurfaceCounts compute_surface(const AnalysisTrace& trace, const SurfaceLexicons& lexicons);

/// Extraction context shared by every record of a run.
class FeatureExtractor {
public:
    FeatureExtractor(AlignmentProvider provider, EgsConfig egs, Lexicons lexicons,
                     std::shared_ptr<EntailmentClient> client = nullptr);

    FeatureVector extract(const TraceRecord& record) const;

    const AlignmentProvider& provider() const { return provider_; }
    const EgsConfig& egs() const { return egs_; }
    const Lexicons& lexicons() const { return lexicons_; }
    EntailmentClient* client() const { return client_.get(); }

private:
    AlignmentProvider provider_;
    EgsConfig egs_;
    Lexicons lexicons_;
    std::shared_ptr<EntailmentClient> client_;
};

FeatureVector assemble_features(const TraceRecord& record, const AlignmentProvider& provider,
                                const EgsConfig& config, const Lexicons& lexicons = {},
                                EntailmentClient* client = nullptr);

}  // namespace traceconf
