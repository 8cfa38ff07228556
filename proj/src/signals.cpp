#include "traceconf/signals.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "traceconf/error.hpp"
#include "traceconf/text.hpp"

namespace traceconf {

std::array<double, kFeatureCount> FeatureVector::to_array() const {
    return {sva,
            clm,
            egs,
            static_cast<double>(trace_length),
            static_cast<double>(hedging_count),
            static_cast<double>(negation_count),
            static_cast<double>(quote_count)};
}

FeatureVector FeatureVector::from_array(const std::array<double, kFeatureCount>& v) {
    auto count = [](double x) { return static_cast<std::size_t>(std::llround(std::max(0.0, x))); };
    return FeatureVector{v[0], v[1], v[2], count(v[3]), count(v[4]), count(v[5]), count(v[6])};
}

void AlignmentProvider::validate() const {
    if (kind == ProviderKind::nli_remote && (!endpoint || endpoint->empty()))
        throw Error(ErrorCode::config, "the nli provider requires an endpoint");
}

void EgsConfig::validate() const {
    if (!(overlap_threshold > 0.0 && overlap_threshold <= 1.0))
        throw Error(ErrorCode::config, "egs threshold must lie in (0, 1]");
}

// ---------------------------------------------------------------------------
// SVA

double compute_sva(const AnalysisTrace& trace, Verdict verdict) {
    const auto aligned = verdict == Verdict::pass ? Polarity::positive : Polarity::negative;
    std::size_t conclusive = 0;
    std::size_t agreeing = 0;
    for (const auto& step : trace.steps) {
        if (step.conclusion == Polarity::none) continue;
        ++conclusive;
        if (step.conclusion == aligned) ++agreeing;
    }
    if (conclusive == 0) return kNeutralSignal;
    return static_cast<double>(agreeing) / static_cast<double>(conclusive);
}

double sva_from_entailment(const std::vector<EntailmentResult>& results, Verdict verdict) {
    // Against the PASS hypothesis: entailment points to PASS, contradiction to FAIL.
    const auto aligned = verdict == Verdict::pass ? Entailment::entailment : Entailment::contradiction;
    std::size_t decisive = 0;
    std::size_t agreeing = 0;
    for (const auto& r : results) {
        if (r.label == Entailment::neutral) continue;
        ++decisive;
        if (r.label == aligned) ++agreeing;
    }
    if (decisive == 0) return kNeutralSignal;
    return static_cast<double>(agreeing) / static_cast<double>(decisive);
}

double compute_sva(const AnalysisTrace& trace, Verdict verdict, EntailmentClient& client) {
    if (trace.steps.empty()) return kNeutralSignal;
    std::vector<EntailmentPair> pairs;
    pairs.reserve(trace.steps.size());
    const auto hypothesis = verdict_hypothesis(Verdict::pass);
    for (const auto& step : trace.steps) pairs.push_back({step.text, hypothesis});
    const auto results = client.classify(pairs);
    if (results.size() != pairs.size())
        throw Error(ErrorCode::remote_provider, "entailment provider returned a result count that does not match the request");
    return sva_from_entailment(results, verdict);
}

// ---------------------------------------------------------------------------
// CLM

double compute_clm(const AnalysisTrace& trace) {
    if (trace.claim_outcomes.empty()) return kNeutralSignal;
    const auto verified = static_cast<std::size_t>(std::count_if(
        trace.claim_outcomes.begin(), trace.claim_outcomes.end(),
        [](const ClaimOutcome& c) { return c.outcome == Outcome::verified; }));
    const auto total = trace.claim_outcomes.size();
    return static_cast<double>(std::max(verified, total - verified)) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// EGS

SpanMatch fuzzy_match_span(const std::vector<std::string>& span_tokens,
                           const std::vector<std::string>& evidence_tokens, const EgsConfig& config) {
    SpanMatch result;
    const auto length = span_tokens.size();
    if (length == 0 || evidence_tokens.empty()) return result;

    // Span vocabulary -> slot; evidence tokens outside it never overlap.
    std::unordered_map<std::string_view, std::size_t> slot;
    std::vector<std::size_t> wanted;
    for (const auto& t : span_tokens) {
        auto [it, inserted] = slot.emplace(t, wanted.size());
        if (inserted) wanted.push_back(0);
        ++wanted[it->second];
    }
    std::vector<long> evidence_slot(evidence_tokens.size(), -1);
    for (std::size_t i = 0; i < evidence_tokens.size(); ++i)
        if (auto it = slot.find(evidence_tokens[i]); it != slot.end()) evidence_slot[i] = static_cast<long>(it->second);

    const auto window = std::min(length, evidence_tokens.size());
    std::vector<std::size_t> have(wanted.size(), 0);
    std::size_t overlap = 0;
    auto add = [&](std::size_t i) {
        if (evidence_slot[i] < 0) return;
        const auto s = static_cast<std::size_t>(evidence_slot[i]);
        if (have[s] < wanted[s]) ++overlap;
        ++have[s];
    };
    auto remove = [&](std::size_t i) {
        if (evidence_slot[i] < 0) return;
        const auto s = static_cast<std::size_t>(evidence_slot[i]);
        --have[s];
        if (have[s] < wanted[s]) --overlap;
    };

    for (std::size_t i = 0; i < window; ++i) add(i);
    std::size_t best = overlap;
    for (std::size_t i = window; i < evidence_tokens.size() && best < length; ++i) {
        add(i);
        remove(i - window);
        best = std::max(best, overlap);
    }
    result.best_overlap = static_cast<double>(best) / static_cast<double>(length);
    result.matched = result.best_overlap >= config.overlap_threshold;
    return result;
}

SpanMatch fuzzy_match_span(const QuotedSpan& span, std::string_view evidence, const EgsConfig& config) {
    return fuzzy_match_span(tokenize(span.text), tokenize(evidence), config);
}

double compute_egs(const AnalysisTrace& trace, std::string_view evidence, const EgsConfig& config) {
    if (trace.quoted_spans.empty()) return kNeutralSignal;
    const auto evidence_tokens = tokenize(evidence);
    std::size_t matched = 0;
    std::size_t total = 0;
    for (const auto& span : trace.quoted_spans) {
        const auto tokens = tokenize(span.text);
        total += tokens.size();
        if (fuzzy_match_span(tokens, evidence_tokens, config).matched) matched += tokens.size();
    }
    if (total == 0) return kNeutralSignal;
    return static_cast<double>(matched) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// Surface

SurfaceCounts compute_surface(const AnalysisTrace& trace, const SurfaceLexicons& lexicons) {
    SurfaceCounts counts;
    counts.trace_length = trace.word_count;
    counts.hedging_count = lexicons.hedging.count_in(trace.tokens);
    counts.negation_count = lexicons.negation.count_in(trace.tokens);
    counts.quote_count = trace.quoted_spans.size();
    return counts;
}

// ---------------------------------------------------------------------------
// Assembly

FeatureExtractor::FeatureExtractor(AlignmentProvider provider, EgsConfig egs, Lexicons lexicons,
                                   std::shared_ptr<EntailmentClient> client)
    : provider_(std::move(provider)), egs_(egs), lexicons_(std::move(lexicons)), client_(std::move(client)) {
    provider_.validate();
    egs_.validate();
    if (provider_.kind == ProviderKind::nli_remote && !client_)
        client_ = std::make_shared<HttpEntailmentClient>(*provider_.endpoint);
}

FeatureVector FeatureExtractor::extract(const TraceRecord& record) const {
    return assemble_features(record, provider_, egs_, lexicons_, client_.get());
}

FeatureVector assemble_features(const TraceRecord& record, const AlignmentProvider& provider,
                                const EgsConfig& config, const Lexicons& lexicons, EntailmentClient* client) {
    const auto trace = segment_trace(record.trace_text, lexicons.conclusion);
    FeatureVector fv;
    if (provider.kind == ProviderKind::nli_remote) {
        if (client == nullptr) throw Error(ErrorCode::config, "the nli provider requires an entailment client");
        fv.sva = compute_sva(trace, record.verdict, *client);
    } else {
        fv.sva = compute_sva(trace, record.verdict);
    }
    fv.clm = compute_clm(trace);
    fv.egs = compute_egs(trace, record.evidence, config);
    const auto surface = compute_surface(trace, lexicons.surface);
    fv.trace_length = surface.trace_length;
    fv.hedging_count = surface.hedging_count;
    fv.negation_count = surface.negation_count;
    fv.quote_count = surface.quote_count;
    return fv;
}

}  // namespace traceconf
