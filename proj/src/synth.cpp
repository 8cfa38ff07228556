#include "traceconf/synth.hpp"

#include <array>
#include <cmath>
#include <string>

#include "traceconf/error.hpp"
#include "traceconf/random.hpp"
#include "traceconf/text.hpp"

namespace traceconf {

namespace {

// No word below belongs to any default lexicon.
constexpr std::array kEvidenceWords = {
    "pipeline", "quarterly", "ledger",   "river",    "archive",  "budget",   "customer", "platform",
    "migration", "cluster", "harbor",   "invoice",  "lecture",  "museum",   "orchard",  "payroll",
    "reactor",  "sensor",   "station",  "tunnel",   "vendor",   "warehouse", "yield",   "zoning",
    "analyst",  "battery",  "canal",    "deadline", "engine",   "factory",  "garden",   "highway",
    "inventory", "journal", "kitchen",  "library",  "market",   "network",  "office",   "parcel",
    "quarry",   "railway",  "schedule", "terminal", "upgrade",  "village",  "workshop", "annual",
    "bridge",   "contract", "delivery", "export",   "forecast", "grant",    "hospital", "import",
    "the",      "of",       "and",      "in",       "for",      "with",     "2019",     "2023",
};

constexpr std::array kFabricatedWords = {
    "galaxy",  "violin",   "tornado", "emerald", "glacier",  "saxophone", "volcano", "meteor",
    "pyramid", "lagoon",   "falcon",  "crimson", "marathon", "origami",   "jaguar",  "nebula",
    "tundra",  "mosaic",   "sapphire", "comet",  "labyrinth", "tapestry", "walrus",  "zeppelin",
    "quasar",  "obsidian", "kimono",  "tsunami", "pelican",  "cathedral", "gondola", "harpoon",
};

constexpr std::array kDetails = {"date", "figure", "name", "amount", "location", "title", "total", "role"};

// Equal token length in both directions so alignment never moves trace_length.
constexpr std::array<std::array<const char*, 2>, 4> kConclusionWords = {{
    {"supported", "unsupported"},
    {"confirmed", "refuted"},
    {"verified", "fabricated"},
    {"consistent", "inconsistent"},
}};

constexpr const char* kFiller = "The record was reviewed line by line against the source.";
constexpr const char* kHedge = "However, the phrasing here is somewhat unclear.";
constexpr const char* kNegation = "The entry does not list a manager.";

template <std::size_t N>
const char* pick(Rng& rng, const std::array<const char*, N>& words) {
    return words[uniform_index(rng, N)];
}

std::string join(const std::vector<std::string>& tokens, std::size_t begin, std::size_t count) {
    std::string out;
    for (std::size_t i = begin; i < begin + count; ++i) {
        if (!out.empty()) out += ' ';
        out += tokens[i];
    }
    return out;
}

double clamp01(double p) { return std::min(1.0, std::max(0.0, p)); }

struct Generated {
    std::string trace;
    std::string evidence;
};

Generated generate_one(Rng& rng, bool correct, Verdict verdict, const SignalProfile& e) {
    Generated g;

    std::vector<std::string> evidence_tokens(static_cast<std::size_t>(uniform_int(rng, 60, 120)));
    for (auto& t : evidence_tokens) t = pick(rng, kEvidenceWords);
    for (std::size_t i = 0; i < evidence_tokens.size(); ++i) {
        if (i > 0) g.evidence += (i % 12 == 0) ? ". " : " ";
        g.evidence += evidence_tokens[i];
    }
    g.evidence += '.';

    std::vector<std::string> lines;

    // Claims agree with the verdict unless the clm effect makes errors split.
    const double p_claim = correct ? 1.0 : 1.0 - 0.4 * e.clm;
    const double p_grounded = correct ? 0.85 + 0.1 * e.egs : 0.85 - 0.6 * e.egs;
    const double p_drop_quote = correct ? 0.1 : 0.1 + 0.5 * e.quotes;
    // Fixed claim and step counts keep SVA's denominator constant, so no other
    // feature can sharpen it.
    const int claims = 3;
    for (int c = 1; c <= claims; ++c) {
        const bool agrees = bernoulli(rng, clamp01(p_claim));
        const bool positive = (verdict == Verdict::pass) == agrees;
        const char* outcome = positive ? "VERIFIED" : (bernoulli(rng, 0.7) ? "FABRICATED" : "NOT_FOUND");

        const auto length = static_cast<std::size_t>(uniform_int(rng, 4, 8));
        const bool grounded = bernoulli(rng, clamp01(p_grounded));
        const bool quoted = !bernoulli(rng, clamp01(p_drop_quote));
        std::string quote;
        if (grounded) {
            const auto start = uniform_index(rng, evidence_tokens.size() - length + 1);
            quote = join(evidence_tokens, start, length);
        } else {
            for (std::size_t k = 0; k < length; ++k) {
                if (k > 0) quote += ' ';
                quote += pick(rng, kFabricatedWords);
            }
        }
        const std::string body = quoted ? "\"" + quote + "\"" : "the " + std::string(pick(rng, kDetails)) + " entry";
        lines.push_back("Claim " + std::to_string(c) + ": " + body + " -> " + outcome);
    }

    std::vector<std::pair<bool, std::string>> reasoning;  // (numbered step, text)
    const double p_align = correct ? 0.75 + 0.2 * e.sva : 0.75 - 0.45 * e.sva;
    const int steps = 5;
    for (int j = 0; j < steps; ++j) {
        const bool aligned = bernoulli(rng, clamp01(p_align));
        const bool positive = (verdict == Verdict::pass) == aligned;
        const auto& pair = kConclusionWords[uniform_index(rng, kConclusionWords.size())];
        reasoning.emplace_back(true, std::string("the ") + pick(rng, kDetails) + " is " + pair[positive ? 0 : 1] +
                                         " by the evidence.");
    }

    int fillers = uniform_int(rng, 0, 2);
    if (!correct)
        for (int k = 0; k < 3; ++k) fillers += bernoulli(rng, 0.8 * e.trace_length) ? 1 : 0;
    for (int k = 0; k < fillers; ++k) reasoning.emplace_back(false, kFiller);
    if (bernoulli(rng, correct ? 0.2 : 0.2 + 0.6 * e.hedging)) reasoning.emplace_back(false, kHedge);
    if (bernoulli(rng, correct ? 0.2 : 0.2 + 0.6 * e.negation)) reasoning.emplace_back(false, kNegation);
    shuffle(reasoning, rng);

    int step_number = 1;
    for (const auto& [numbered, text] : reasoning)
        lines.push_back(numbered ? "Step " + std::to_string(step_number++) + ": " + text : text);
    lines.push_back(std::string("Final answer: ") + (verdict == Verdict::pass ? "YES" : "NO"));

    for (const auto& l : lines) {
        g.trace += l;
        g.trace += '\n';
    }
    return g;
}

double& effect(SignalProfile& p, std::string_view key) {
    if (key == "sva") return p.sva;
    if (key == "clm") return p.clm;
    if (key == "egs") return p.egs;
    if (key == "trace_length") return p.trace_length;
    if (key == "hedging") return p.hedging;
    if (key == "negation") return p.negation;
    if (key == "quotes") return p.quotes;
    throw Error(ErrorCode::config, "unknown signal profile effect '" + std::string(key) + "'");
}

constexpr std::array<std::string_view, 7> kEffectKeys = {"sva",     "clm",      "egs",   "trace_length",
                                                         "hedging", "negation", "quotes"};

}  // namespace

SignalProfile named_profile(std::string_view name) {
    if (name == "null") return {};
    if (name == "strong") return {1.0, 1.0, 1.0, 0.3, 0.3, 0.3, 0.3};
    if (name == "sva_only") return {1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    if (name == "surface_only") return {0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0};
    if (name == "moderate") return {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
    throw Error(ErrorCode::config, "unknown signal profile '" + std::string(name) + "'");
}

SignalProfile parse_profile(std::string_view text) {
    const auto spec = trim(text);
    if (spec.find('=') == std::string_view::npos) return named_profile(spec);
    SignalProfile profile;
    std::size_t begin = 0;
    while (begin <= spec.size()) {
        auto end = spec.find(',', begin);
        if (end == std::string_view::npos) end = spec.size();
        const auto item = trim(spec.substr(begin, end - begin));
        const auto eq = item.find('=');
        if (eq == std::string_view::npos)
            throw Error(ErrorCode::config, "profile entry '" + std::string(item) + "' is not feature=effect");
        const auto value = std::string(trim(item.substr(eq + 1)));
        try {
            std::size_t used = 0;
            effect(profile, trim(item.substr(0, eq))) = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
        } catch (const std::logic_error&) {
            throw Error(ErrorCode::config, "profile effect '" + value + "' is not a number");
        }
        begin = end + 1;
    }
    return profile;
}

nlohmann::ordered_json to_json(const SignalProfile& profile) {
    nlohmann::ordered_json doc;
    auto copy = profile;
    for (auto key : kEffectKeys) doc[std::string(key)] = effect(copy, key);
    return doc;
}

void SynthSpec::validate() const {
    if (!(error_rate > 0.0 && error_rate < 1.0)) throw Error(ErrorCode::config, "error_rate must lie in (0, 1)");
    auto copy = profile;
    for (auto key : kEffectKeys) {
        const double v = effect(copy, key);
        if (!(v >= 0.0 && v <= 1.0))
            throw Error(ErrorCode::config, "profile effect '" + std::string(key) + "' must lie in [0, 1]");
    }
}

nlohmann::ordered_json to_json(const SynthSpec& spec) {
    nlohmann::ordered_json doc;
    doc["n"] = spec.n;
    doc["error_rate"] = spec.error_rate;
    doc["profile"] = to_json(spec.profile);
    doc["seed"] = spec.seed;
    doc["dataset_tag"] = spec.dataset_tag;
    return doc;
}

SynthSpec synth_spec_from_json(const nlohmann::json& doc) {
    SynthSpec spec;
    try {
        spec.n = doc.value("n", spec.n);
        spec.error_rate = doc.value("error_rate", spec.error_rate);
        spec.seed = doc.value("seed", spec.seed);
        spec.dataset_tag = doc.value("dataset_tag", spec.dataset_tag);
        if (const auto it = doc.find("profile"); it != doc.end()) {
            if (it->is_string()) {
                spec.profile = parse_profile(it->get<std::string>());
            } else {
                for (const auto& [key, value] : it->items()) effect(spec.profile, key) = value.get<double>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::config, std::string("malformed synth spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

std::vector<TraceRecord> generate_synthetic(const SynthSpec& spec) {
    spec.validate();
    const auto width = std::max<std::size_t>(6, std::to_string(spec.n).size());
    std::vector<TraceRecord> records;
    records.reserve(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        Rng rng(derive_seed(spec.seed, i));
        const bool correct = !bernoulli(rng, spec.error_rate);
        const auto verdict = bernoulli(rng, 0.5) ? Verdict::pass : Verdict::fail;
        auto g = generate_one(rng, correct, verdict, spec.profile);

        auto number = std::to_string(i);
        TraceRecord r;
        r.id = "syn-" + std::string(width - number.size(), '0') + number;
        r.evidence = std::move(g.evidence);
        r.claim = "The summary is faithful to the source document.";
        r.trace_text = std::move(g.trace);
        r.verdict = verdict;
        r.label = correct ? 1 : 0;
        r.dataset_tag = spec.dataset_tag;
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace traceconf
