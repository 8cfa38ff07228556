#include "traceconf/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <set>
#include <thread>

#include "traceconf/entailment.hpp"
#include "traceconf/error.hpp"
#include "traceconf/evaluation.hpp"
#include "traceconf/io.hpp"
#include "traceconf/synth.hpp"
#include "traceconf/text.hpp"

namespace traceconf {

// ---------------------------------------------------------------------------
// RunConfig

nlohmann::ordered_json RunConfig::to_json() const {
    nlohmann::ordered_json doc;
    doc["command"] = command;
    doc["inputs"] = inputs;
    doc["output"] = output;
    doc["model"] = model;
    doc["seed"] = seed;
    doc["provider"] = provider;
    doc["nli_endpoint"] = nli_endpoint;
    doc["egs_threshold"] = egs_threshold;
    doc["folds"] = folds;
    doc["resamples"] = resamples;
    doc["bins"] = bins;
    doc["lexicons"] = lexicons;
    doc["lexicon_overrides"] = lexicon_overrides;
    doc["lenient"] = lenient;
    doc["mask"] = mask;
    doc["lambda"] = lambda;
    doc["threshold"] = threshold ? nlohmann::ordered_json(*threshold) : nlohmann::ordered_json(nullptr);
    doc["timestamp"] = timestamp;
    doc["workers"] = workers;
    doc["n"] = n;
    doc["error_rate"] = error_rate;
    doc["profile"] = profile;
    doc["dataset_tag"] = dataset_tag;
    return doc;
}

RunConfig RunConfig::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw Error(ErrorCode::config, "run configuration must be a JSON object");
    RunConfig c;
    try {
        for (const auto& [key, v] : doc.items()) {
            if (key == "command") c.command = v.get<std::string>();
            else if (key == "inputs") c.inputs = v.get<std::vector<std::string>>();
            else if (key == "output") c.output = v.get<std::string>();
            else if (key == "model") c.model = v.get<std::string>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "provider") c.provider = v.get<std::string>();
            else if (key == "nli_endpoint") c.nli_endpoint = v.get<std::string>();
            else if (key == "egs_threshold") c.egs_threshold = v.get<double>();
            else if (key == "folds") c.folds = v.get<std::size_t>();
            else if (key == "resamples") c.resamples = v.get<std::size_t>();
            else if (key == "bins") c.bins = v.get<std::size_t>();
            else if (key == "lexicons") c.lexicons = v.get<std::string>();
            else if (key == "lexicon_overrides") c.lexicon_overrides = v;
            else if (key == "lenient") c.lenient = v.get<bool>();
            else if (key == "mask") c.mask = v.get<std::string>();
            else if (key == "lambda") c.lambda = v.get<double>();
            else if (key == "threshold") c.threshold = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
            else if (key == "timestamp") c.timestamp = v.get<std::string>();
            else if (key == "workers") c.workers = v.get<std::size_t>();
            else if (key == "n") c.n = v.get<std::size_t>();
            else if (key == "error_rate") c.error_rate = v.get<double>();
            else if (key == "profile") c.profile = v.get<std::string>();
            else if (key == "dataset_tag") c.dataset_tag = v.get<std::string>();
            else throw Error(ErrorCode::config, "unknown configuration key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::config, std::string("malformed run configuration: ") + e.what());
    }
    return c;
}

void validate(const RunConfig& c) {
    if (c.provider != "regex" && c.provider != "nli")
        throw Error(ErrorCode::config, "provider must be 'regex' or 'nli', got '" + c.provider + "'");
    if (c.provider == "nli" && c.nli_endpoint.empty())
        throw Error(ErrorCode::config, "the nli provider requires --nli-endpoint");
    if (!(c.egs_threshold > 0.0 && c.egs_threshold <= 1.0))
        throw Error(ErrorCode::config, "egs threshold must lie in (0, 1]");
    if (c.folds < 2) throw Error(ErrorCode::config, "folds must be at least 2");
    if (c.resamples < 1) throw Error(ErrorCode::config, "resamples must be at least 1");
    if (c.bins < 1) throw Error(ErrorCode::config, "bins must be at least 1");
    if (!(c.lambda > 0.0) || !std::isfinite(c.lambda)) throw Error(ErrorCode::config, "lambda must be positive");
    if (c.threshold && !std::isfinite(*c.threshold)) throw Error(ErrorCode::config, "threshold must be finite");
    if (!c.lexicon_overrides.is_object()) throw Error(ErrorCode::config, "lexicon overrides must be a JSON object");
}

ModelFitOptions fit_options(const RunConfig& config) {
    ModelFitOptions options;
    options.lr.lambda = config.lambda;
    options.seed = config.seed;
    options.dataset_tag = config.dataset_tag;
    options.timestamp = config.timestamp;
    return options;
}

namespace {

nlohmann::ordered_json base_meta(const RunConfig& config) {
    nlohmann::ordered_json meta;
    meta["tool"] = "traceconf";
    meta["version"] = kVersion;
    meta["config"] = config.to_json();
    return meta;
}

std::string jsonl(const nlohmann::ordered_json& meta, const std::vector<std::string>& lines) {
    std::string out = meta_line(meta);
    out += '\n';
    for (const auto& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

std::string document(nlohmann::ordered_json meta, const nlohmann::ordered_json& body) {
    nlohmann::ordered_json doc;
    doc[std::string(kMetaKey)] = std::move(meta);
    for (const auto& [key, value] : body.items()) doc[key] = value;
    return doc.dump(2) + "\n";
}

FeatureMask mask_from(const RunConfig& config) {
    return config.mask.empty() ? all_features_mask() : parse_mask(config.mask);
}

std::string corpus_tag(const RunConfig& config, std::span<const FeatureRecord> records) {
    if (!config.dataset_tag.empty()) return config.dataset_tag;
    std::set<std::string> tags;
    for (const auto& r : records)
        if (!r.dataset_tag.empty()) tags.insert(r.dataset_tag);
    std::string joined;
    for (const auto& t : tags) joined += (joined.empty() ? "" : "+") + t;
    return joined;
}

ConfidenceModel load_model(std::string_view model_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(model_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::parse, std::string("malformed model file: ") + e.what());
    }
    return model_from_json(doc);
}

FeatureMask model_mask(const ConfidenceModel& model) {
    FeatureMask mask{"model", {}};
    for (const auto& name : model.feature_names)
        mask.columns.push_back(static_cast<std::size_t>(
            std::find(kFeatureNames.begin(), kFeatureNames.end(), name) - kFeatureNames.begin()));
    return mask;
}

std::vector<double> project(const FeatureMask& mask, const FeatureVector& features) {
    const auto all = features.to_array();
    std::vector<double> row;
    row.reserve(mask.columns.size());
    for (auto c : mask.columns) row.push_back(all[c]);
    return row;
}

// The `_meta` of an input artifact, when it has one, for provenance.
void attach_source(nlohmann::ordered_json& meta, std::string_view key, std::string_view text) {
    const auto source = read_meta(text);
    if (!source.is_null()) meta[std::string(key)] = source;
}

std::size_t worker_count(const RunConfig& config, std::size_t jobs) {
    std::size_t w = config.workers != 0 ? config.workers : std::thread::hardware_concurrency();
    return std::clamp<std::size_t>(w, 1, std::max<std::size_t>(jobs, 1));
}

}  // namespace

// ---------------------------------------------------------------------------
// extract

ExtractOutcome run_extract(std::string_view corpus_text, const RunConfig& config) {
    validate(config);
    const auto corpus = read_corpus(corpus_text, config.lenient);
    const auto lexicons = Lexicons::from_json(config.lexicon_overrides);

    AlignmentProvider provider;
    std::shared_ptr<EntailmentClient> client;
    std::optional<std::string> model_id;
    std::string health_error;
    if (config.provider == "nli") {
        provider = {ProviderKind::nli_remote, config.nli_endpoint};
        client = std::make_shared<HttpEntailmentClient>(config.nli_endpoint);
        try {
            model_id = client->model_id();
        } catch (const Error& e) {
            health_error = e.what();
        }
    }
    const FeatureExtractor extractor(provider, EgsConfig{config.egs_threshold}, lexicons, client);

    const auto n = corpus.records.size();
    std::vector<FeatureVector> features(n);
    std::vector<std::string> remote_errors(n);
    std::vector<std::exception_ptr> failures(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                features[i] = extractor.extract(corpus.records[i]);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::remote_provider)
                    remote_errors[i] = e.what();
                else
                    failures[i] = std::current_exception();
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    const auto workers = worker_count(config, n);
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work);
        for (auto& t : threads) t.join();
    }
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);

    ExtractOutcome outcome;
    for (std::size_t i = 0; i < n; ++i) {
        if (remote_errors[i].empty()) continue;
        outcome.failed_ids.push_back(corpus.records[i].id);
        if (outcome.error.empty()) outcome.error = remote_errors[i];
    }
    if (outcome.error.empty() && !health_error.empty() && n > 0) outcome.error = health_error;

    auto& s = outcome.summary;
    s["records"] = n + corpus.skipped.size();
    s["extracted"] = n - outcome.failed_ids.size();
    s["parse_failures"] = corpus.skipped.size();
    s["skipped"] = nlohmann::ordered_json::array();
    for (const auto& skip : corpus.skipped) s["skipped"].push_back({{"line", skip.line}, {"message", skip.message}});
    s["provider"] = config.provider;
    s["egs_threshold"] = config.egs_threshold;
    if (model_id) s["nli_model_id"] = *model_id;
    s["failed_ids"] = outcome.failed_ids;
    if (!outcome.failed_ids.empty()) return outcome;

    auto meta = base_meta(config);
    meta["lexicons"] = lexicons.to_json();
    if (model_id) meta["nli_model_id"] = *model_id;
    meta["skipped"] = s["skipped"];
    attach_source(meta, "source", corpus_text);

    std::vector<std::string> lines;
    lines.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = corpus.records[i];
        lines.push_back(feature_record_to_json({r.id, features[i], r.verdict, r.label, r.dataset_tag}).dump());
    }
    outcome.features = jsonl(meta, lines);
    return outcome;
}

std::string features_from_input(std::string_view text, const RunConfig& config) {
    if (!looks_like_record_corpus(text)) return std::string(text);
    auto outcome = run_extract(text, config);
    if (!outcome.failed_ids.empty()) {
        std::string ids;
        for (const auto& id : outcome.failed_ids) ids += (ids.empty() ? "" : ", ") + id;
        throw Error(ErrorCode::remote_provider, "extraction failed for records " + ids + ": " + outcome.error);
    }
    return std::move(outcome.features);
}

// ---------------------------------------------------------------------------
// train / score / evaluate / route

std::string run_train(std::string_view input, const RunConfig& config) {
    validate(config);
    const auto text = features_from_input(input, config);
    const auto records = read_features(text);
    const auto data = make_dataset(records, mask_from(config));
    auto options = fit_options(config);
    options.dataset_tag = corpus_tag(config, records);
    const auto model = fit_confidence_model(data, options);

    auto meta = base_meta(config);
    attach_source(meta, "source", text);
    return document(meta, model_to_json(model));
}

std::string run_score(std::string_view model_text, std::string_view input, const RunConfig& config) {
    validate(config);
    const auto model = load_model(model_text);
    const auto mask = model_mask(model);
    const auto text = features_from_input(input, config);
    const auto records = read_features(text);

    auto meta = base_meta(config);
    attach_source(meta, "model_source", model_text);
    attach_source(meta, "source", text);
    std::vector<std::string> lines;
    lines.reserve(records.size());
    for (const auto& r : records) {
        const auto row = project(mask, r.features);
        nlohmann::ordered_json line;
        line["id"] = r.id;
        line["confidence"] = model.score(row);
        line["raw_score"] = model.raw_score(row);
        line["verdict"] = to_string(r.verdict);
        line["label"] = r.label ? nlohmann::ordered_json(*r.label) : nlohmann::ordered_json(nullptr);
        line["dataset_tag"] = r.dataset_tag;
        lines.push_back(line.dump());
    }
    return jsonl(meta, lines);
}

std::string run_evaluate(std::string_view input, const RunConfig& config) {
    validate(config);
    const auto text = features_from_input(input, config);
    const auto records = read_features(text);
    const auto mask = mask_from(config);
    const auto data = make_dataset(records, mask);

    EvaluationOptions options;
    options.folds = config.folds;
    options.resamples = config.resamples;
    options.bins = config.bins;
    options.fit = fit_options(config);
    options.fit.dataset_tag = corpus_tag(config, records);
    const auto report = evaluate_dataset(data, options);

    auto meta = base_meta(config);
    attach_source(meta, "source", text);
    double egs_threshold = config.egs_threshold;
    if (meta.contains("source") && meta["source"].contains("config"))
        egs_threshold = meta["source"]["config"].value("egs_threshold", egs_threshold);

    nlohmann::ordered_json body;
    body["mask"] = mask.name;
    body["egs_threshold"] = egs_threshold;
    const auto report_json = to_json(report, options);
    for (const auto& [key, value] : report_json.items()) body[key] = value;
    return document(meta, body);
}

std::string run_route(std::string_view model_text, std::string_view input, const RunConfig& config) {
    validate(config);
    const auto model = load_model(model_text);
    const auto text = features_from_input(input, config);
    const auto records = read_features(text);
    const auto data = make_dataset(records, model_mask(model));

    std::vector<double> scores(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) scores[i] = model.score(data.x.row(i));
    const double threshold = config.threshold ? *config.threshold : youden_threshold(scores, data.labels);
    const auto report = routing_report(scores, data.labels, threshold);

    nlohmann::ordered_json body;
    body["threshold_source"] = config.threshold ? "config" : "youden";
    const auto report_json = to_json(report);
    for (const auto& [key, value] : report_json.items()) body[key] = value;
    body["flagged_ids"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < data.size(); ++i)
        if (scores[i] < threshold) body["flagged_ids"].push_back(data.ids[i]);

    auto meta = base_meta(config);
    attach_source(meta, "model_source", model_text);
    attach_source(meta, "source", text);
    return document(meta, body);
}

// ---------------------------------------------------------------------------
// ablate / transfer / synth

std::string run_ablate(std::string_view input, const RunConfig& config) {
    validate(config);
    const auto text = features_from_input(input, config);
    const auto records = read_features(text);

    std::vector<FeatureMask> masks;
    if (config.mask.empty()) {
        masks = default_ablation_masks();
    } else {
        std::string_view spec = config.mask;
        std::size_t begin = 0;
        while (begin <= spec.size()) {
            auto end = spec.find(',', begin);
            if (end == std::string_view::npos) end = spec.size();
            masks.push_back(parse_mask(spec.substr(begin, end - begin)));
            begin = end + 1;
        }
    }
    auto options = fit_options(config);
    options.dataset_tag = corpus_tag(config, records);
    const auto rows = ablation_run(records, masks, config.folds, options);

    nlohmann::ordered_json body;
    body["folds"] = config.folds;
    body["seed"] = config.seed;
    body["n"] = records.size();
    body["subsets"] = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
        nlohmann::ordered_json entry;
        entry["subset"] = row.mask.name;
        entry["features"] = row.mask.feature_names();
        entry["auroc"] = row.auroc;
        entry["per_fold_auroc"] = row.per_fold_auroc;
        body["subsets"].push_back(std::move(entry));
    }
    auto meta = base_meta(config);
    attach_source(meta, "source", text);
    return document(meta, body);
}

std::string run_transfer(const std::vector<std::pair<std::string, std::string>>& corpora, const RunConfig& config) {
    validate(config);
    if (corpora.empty()) throw Error(ErrorCode::config, "transfer needs at least one corpus");
    const auto mask = mask_from(config);
    const auto options = fit_options(config);

    std::vector<std::vector<FeatureRecord>> sets;
    auto meta = base_meta(config);
    meta["sources"] = nlohmann::ordered_json::array();
    for (const auto& [name, input] : corpora) {
        const auto text = features_from_input(input, config);
        sets.push_back(read_features(text));
        const auto source = read_meta(text);
        meta["sources"].push_back(source);
    }

    nlohmann::ordered_json body;
    body["mask"] = mask.name;
    body["seed"] = config.seed;
    body["protocol"] = {{"diagonal", "self-fit on one stratified 80/20 split"},
                        {"off_diagonal", "fit on all of the row corpus, score the column corpus"}};
    body["corpora"] = nlohmann::ordered_json::array();
    for (const auto& c : corpora) body["corpora"].push_back(c.first);
    body["auroc"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < sets.size(); ++i) {
        auto train_options = options;
        train_options.dataset_tag = corpora[i].first;
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (std::size_t j = 0; j < sets.size(); ++j)
            row.push_back(i == j ? self_fit_eval(sets[i], mask, train_options)
                                 : transfer_eval(sets[i], sets[j], mask, train_options));
        body["auroc"].push_back(std::move(row));
    }
    return document(meta, body);
}

std::string run_synth(const RunConfig& config) {
    SynthSpec spec;
    spec.n = config.n;
    spec.error_rate = config.error_rate;
    spec.profile = parse_profile(config.profile);
    spec.seed = config.seed;
    if (!config.dataset_tag.empty()) spec.dataset_tag = config.dataset_tag;
    const auto records = generate_synthetic(spec);

    auto meta = base_meta(config);
    meta["synth_spec"] = to_json(spec);
    std::vector<std::string> lines;
    lines.reserve(records.size());
    for (const auto& r : records) lines.push_back(record_to_json(r).dump());
    return jsonl(meta, lines);
}

}  // namespace traceconf
