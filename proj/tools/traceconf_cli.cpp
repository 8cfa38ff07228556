// traceconf command-line front end. Talks to the toolkit only through the C API.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "traceconf/traceconf.h"

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kExitUsage = 2;

struct Failure {
    int exit_code;
    std::string message;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Failure{kExitUsage, "cannot read '" + path + "'"};
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::fwrite(text.data(), 1, text.size(), stdout);
        std::fflush(stdout);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size())))
        throw Failure{kExitUsage, "cannot write '" + path + "'"};
}

// Owns a string returned by the library.
struct Owned {
    char* text = nullptr;
    ~Owned() { tc_string_free(text); }
    std::string str() const { return text ? std::string(text) : std::string(); }
};

void check(tc_status status) {
    if (status != TC_OK)
        throw Failure{tc_status_exit_code(status), std::string(tc_status_name(status)) + " error: " + tc_last_error()};
}

// Flags shared by every subcommand. Values land in `config` only when given
// on the command line or through the environment.
struct Flags {
    std::vector<std::string> inputs;
    std::string output;
    std::string model;
    std::string config_file;
    std::uint64_t seed = 42;
    std::string provider = "regex";
    std::string nli_endpoint;
    double egs_threshold = 0.8;
    std::size_t folds = 5;
    std::size_t resamples = 2000;
    std::size_t bins = 10;
    std::string lexicons;
    bool lenient = false;
    std::string mask;
    double lambda = 0.1;
    double threshold = 0.0;
    std::string timestamp;
    std::size_t workers = 0;
    std::size_t n = 1000;
    double error_rate = 0.2;
    std::string profile = "strong";
    std::string dataset_tag;

    std::vector<std::pair<CLI::Option*, std::string>> options;  // (option, config key)
};

template <typename T>
CLI::Option* add(CLI::App& app, Flags& flags, const std::string& name, T& target, const std::string& key,
                 const std::string& help) {
    auto* opt = app.add_option(name, target, help);
    std::string env = "TRACECONF_" + key;
    for (auto& c : env) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    opt->envname(env);
    flags.options.emplace_back(opt, key);
    return opt;
}

void add_common(CLI::App& app, Flags& f) {
    add(app, f, "--output,-o", f.output, "output", "Output path (default: standard output)");
    app.add_option("--config", f.config_file,
                   "Start from a run configuration: a JSON config object or any artifact carrying _meta");
    add(app, f, "--seed", f.seed, "seed", "Random seed (default 42)");
    add(app, f, "--provider", f.provider, "provider", "SVA alignment provider")
        ->check(CLI::IsMember({"regex", "nli"}));
    add(app, f, "--nli-endpoint", f.nli_endpoint, "nli_endpoint", "Entailment service base URL");
    add(app, f, "--egs-threshold", f.egs_threshold, "egs_threshold", "Quote overlap threshold (default 0.8)");
    add(app, f, "--folds", f.folds, "folds", "Cross-validation folds (default 5)");
    add(app, f, "--resamples", f.resamples, "resamples", "Bootstrap resamples (default 2000)");
    add(app, f, "--bins", f.bins, "bins", "Reliability bins (default 10)");
    add(app, f, "--lexicons", f.lexicons, "lexicons", "JSON file with positive/negative/hedging/negation lists");
    auto* lenient = app.add_flag("--lenient", f.lenient, "Skip malformed corpus lines instead of failing");
    lenient->envname("TRACECONF_LENIENT");
    f.options.emplace_back(lenient, "lenient");
    add(app, f, "--mask", f.mask, "mask", "Feature subset name, or names joined by '+'");
    add(app, f, "--lambda", f.lambda, "lambda", "L2 penalty (default 0.1)");
    add(app, f, "--timestamp", f.timestamp, "timestamp", "Provenance timestamp written into models");
    add(app, f, "--workers", f.workers, "workers", "Extraction threads (0: all cores)");
    add(app, f, "--dataset-tag", f.dataset_tag, "dataset_tag", "Corpus name recorded in artifacts");
}

ordered_json load_config(const std::string& path) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Failure{kExitUsage, "config '" + path + "' is not JSON: " + e.what()};
    }
    if (doc.is_object() && doc.contains("_meta")) doc = doc["_meta"].value("config", ordered_json::object());
    if (!doc.is_object()) throw Failure{kExitUsage, "config '" + path + "' is not a JSON object"};
    return doc;
}

ordered_json effective_config(const std::string& command, Flags& f) {
    ordered_json config = f.config_file.empty() ? ordered_json::object() : load_config(f.config_file);
    config["command"] = command;
    for (const auto& [opt, key] : f.options) {
        if (opt->count() == 0) continue;
        if (key == "output") config[key] = f.output;
        else if (key == "model") config[key] = f.model;
        else if (key == "inputs") config[key] = f.inputs;
        else if (key == "seed") config[key] = f.seed;
        else if (key == "provider") config[key] = f.provider;
        else if (key == "nli_endpoint") config[key] = f.nli_endpoint;
        else if (key == "egs_threshold") config[key] = f.egs_threshold;
        else if (key == "folds") config[key] = f.folds;
        else if (key == "resamples") config[key] = f.resamples;
        else if (key == "bins") config[key] = f.bins;
        else if (key == "lexicons") config[key] = f.lexicons;
        else if (key == "lenient") config[key] = f.lenient;
        else if (key == "mask") config[key] = f.mask;
        else if (key == "lambda") config[key] = f.lambda;
        else if (key == "threshold") config[key] = f.threshold;
        else if (key == "timestamp") config[key] = f.timestamp;
        else if (key == "workers") config[key] = f.workers;
        else if (key == "n") config[key] = f.n;
        else if (key == "error_rate") config[key] = f.error_rate;
        else if (key == "profile") config[key] = f.profile;
        else if (key == "dataset_tag") config[key] = f.dataset_tag;
    }
    // A lexicon file given now replaces any overrides carried by --config.
    if (config.contains("lexicons") && !config["lexicons"].get<std::string>().empty() &&
        (!config.contains("lexicon_overrides") || std::any_of(f.options.begin(), f.options.end(), [](const auto& o) {
             return o.second == "lexicons" && o.first->count() > 0;
         }))) {
        try {
            config["lexicon_overrides"] = ordered_json::parse(read_file(config["lexicons"].get<std::string>()));
        } catch (const nlohmann::json::exception& e) {
            throw Failure{kExitUsage, "lexicon file is not JSON: " + std::string(e.what())};
        }
    }
    return config;
}

std::string string_field(const ordered_json& config, const char* key) {
    return config.contains(key) && config[key].is_string() ? config[key].get<std::string>() : std::string();
}

std::vector<std::string> inputs_of(const ordered_json& config) {
    if (!config.contains("inputs")) return {};
    return config["inputs"].get<std::vector<std::string>>();
}

std::string single_input(const ordered_json& config) {
    const auto inputs = inputs_of(config);
    if (inputs.size() != 1) throw Failure{kExitUsage, "exactly one --input is required"};
    return read_file(inputs.front());
}

struct ModelHandle {
    tc_model* model = nullptr;
    ~ModelHandle() { tc_model_destroy(model); }
};

void load_model(const ordered_json& config, ModelHandle& handle) {
    const auto path = string_field(config, "model");
    if (path.empty()) throw Failure{kExitUsage, "--model is required"};
    check(tc_model_load(read_file(path).c_str(), &handle.model));
}

int run(const ordered_json& config) {
    const auto command = string_field(config, "command");
    const auto json_text = config.dump();
    const auto output = string_field(config, "output");
    Owned out;

    if (command == "extract") {
        Owned summary;
        const auto corpus = single_input(config);
        const auto status = tc_extract_corpus(corpus.c_str(), json_text.c_str(), &out.text, &summary.text);
        // The summary goes to stdout unless stdout carries the features.
        auto& summary_stream = output.empty() || output == "-" ? std::cerr : std::cout;
        if (summary.text != nullptr) summary_stream << summary.str();
        check(status);
    } else if (command == "train") {
        ModelHandle handle;
        check(tc_model_train(single_input(config).c_str(), json_text.c_str(), &handle.model));
        check(tc_model_save(handle.model, &out.text));
    } else if (command == "score") {
        ModelHandle handle;
        load_model(config, handle);
        check(tc_model_score_corpus(handle.model, single_input(config).c_str(), json_text.c_str(), &out.text));
    } else if (command == "evaluate") {
        check(tc_evaluate(single_input(config).c_str(), json_text.c_str(), &out.text));
    } else if (command == "route") {
        ModelHandle handle;
        load_model(config, handle);
        check(tc_route(handle.model, single_input(config).c_str(), json_text.c_str(), &out.text));
    } else if (command == "ablate") {
        check(tc_ablate(single_input(config).c_str(), json_text.c_str(), &out.text));
    } else if (command == "transfer") {
        const auto inputs = inputs_of(config);
        if (inputs.empty()) throw Failure{kExitUsage, "transfer needs one --input per corpus"};
        std::vector<std::string> names;
        std::vector<std::string> texts;
        for (const auto& path : inputs) {
            auto name = std::filesystem::path(path).stem().string();
            if (std::find(names.begin(), names.end(), name) != names.end()) name = path;
            names.push_back(name);
            texts.push_back(read_file(path));
        }
        std::vector<const char*> name_ptrs;
        std::vector<const char*> text_ptrs;
        for (std::size_t i = 0; i < names.size(); ++i) {
            name_ptrs.push_back(names[i].c_str());
            text_ptrs.push_back(texts[i].c_str());
        }
        check(tc_transfer(name_ptrs.data(), text_ptrs.data(), names.size(), json_text.c_str(), &out.text));
    } else if (command == "synth") {
        check(tc_synthesize(json_text.c_str(), &out.text));
    } else {
        throw Failure{kExitUsage, "unknown command '" + command + "'"};
    }
    write_output(output, out.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trace-confidence toolkit: signals, calibrated confidence, routing."};
    app.set_version_flag("--version", std::string(tc_version()));
    app.require_subcommand(1);

    struct Command {
        CLI::App* app;
        Flags flags;
    };
    std::vector<std::unique_ptr<Command>> commands;
    auto make = [&](const std::string& name, const std::string& help) -> Command& {
        auto cmd = std::make_unique<Command>();
        cmd->app = app.add_subcommand(name, help);
        add_common(*cmd->app, cmd->flags);
        commands.push_back(std::move(cmd));
        return *commands.back();
    };
    auto add_inputs = [](Command& c, bool many) {
        auto* opt = add(*c.app, c.flags, "--input,-i", c.flags.inputs, "inputs",
                        many ? "Corpus or feature file (repeat per corpus)" : "Corpus or feature file");
        if (!many) opt->expected(1);
    };
    auto add_model = [](Command& c) { add(*c.app, c.flags, "--model,-m", c.flags.model, "model", "Model file"); };

    add_inputs(make("extract", "Extract the 7 features from a record corpus"), false);
    add_inputs(make("train", "Fit a confidence model"), false);
    auto& score = make("score", "Score records with a model");
    add_inputs(score, false);
    add_model(score);
    add_inputs(make("evaluate", "Cross-validated AUROC, CI, ECE, reliability and routing report"), false);
    auto& route = make("route", "Routing report at a threshold (Youden when not given)");
    add_inputs(route, false);
    add_model(route);
    add(*route.app, route.flags, "--threshold", route.flags.threshold, "threshold", "Flag scores below this value");
    add_inputs(make("ablate", "CV AUROC per feature subset (--mask takes a comma list)"), false);
    add_inputs(make("transfer", "Cross-corpus transfer AUROC matrix"), true);
    auto& synth = make("synth", "Generate a synthetic labelled record corpus");
    add(*synth.app, synth.flags, "--n", synth.flags.n, "n", "Record count (default 1000)");
    add(*synth.app, synth.flags, "--error-rate", synth.flags.error_rate, "error_rate", "Fraction of wrong verdicts");
    add(*synth.app, synth.flags, "--profile", synth.flags.profile, "profile",
        "null, strong, sva_only, surface_only, moderate, or feature=effect pairs");

    std::string rerun_artifact;
    std::string rerun_output;
    auto* rerun = app.add_subcommand("rerun", "Re-run the command recorded in an artifact's _meta");
    rerun->add_option("artifact", rerun_artifact, "Artifact file")->required();
    rerun->add_option("--output,-o", rerun_output, "Output path (default: the recorded one)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (rerun->parsed()) {
            auto config = load_config(rerun_artifact);
            if (!rerun->get_option("--output")->empty()) config["output"] = rerun_output;
            return run(config);
        }
        for (auto& c : commands)
            if (c->app->parsed()) return run(effective_config(c->app->get_name(), c->flags));
    } catch (const Failure& f) {
        std::cerr << "traceconf: " << f.message << "\n";
        return f.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "traceconf: " << e.what() << "\n";
        return 1;
    }
    return kExitUsage;
}
