#pragma once

// Run-level wiring shared by the command-line tool and its tests: layered
// TrainConfig resolution (task defaults, then config file, then flag
// overrides), dataset dispatch across the three source formats, and the
// evaluation CSV layout.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hcgae/config_io.hpp"
#include "hcgae/datasets.hpp"
#include "hcgae/eval.hpp"

namespace hcgae {

// Ordered key/value pairs taken from command-line flags; later entries win.
using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;

// Defaults depend on the task (node runs use the larger batch and learning
// rate), so the task is settled first from the file and overrides, then the
// matching defaults are layered underneath both.
inline TrainConfig resolve_train_config(const std::string& file_text,
                                        const ConfigOverrides& overrides) {
    TrainConfig probe;
    parse_config_text(file_text, probe);
    for (const auto& [key, value] : overrides) apply_config_value(probe, key, value);

    TrainConfig cfg = probe.task == Task::NodeClassification ? TrainConfig::node_defaults()
                                                             : TrainConfig::graph_defaults();
    parse_config_text(file_text, cfg);
    for (const auto& [key, value] : overrides) apply_config_value(cfg, key, value);
    cfg.validate();
    return cfg;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

// Synthetic corpus spec: `graphs=N,classes=C,nodes=M` (any subset; missing
// keys fall back to a small default corpus).
struct SbmSpec {
    int graphs = 60;
    int classes = 2;
    int nodes = 30;
};

inline SbmSpec parse_sbm_spec(const std::string& text) {
    SbmSpec spec;
    if (detail::trim_ws(text).empty()) return spec;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("sbm spec: expected key=value, got '" + item + "'");
        std::string key = detail::trim_ws(item.substr(0, eq));
        std::string value = detail::trim_ws(item.substr(eq + 1));
        int v = static_cast<int>(detail::config_int(key, value));
        if (key == "graphs") spec.graphs = v;
        else if (key == "classes") spec.classes = v;
        else if (key == "nodes") spec.nodes = v;
        else throw std::invalid_argument("sbm spec: unknown key '" + key + "'");
    }
    return spec;
}

// Loads a dataset given the CLI's format tag. For `sbm` the dataset argument
// is a generator spec rather than a path.
inline Dataset load_dataset(const std::string& dataset, const std::string& format, Task task,
                            std::uint64_t seed) {
    if (format == "tu") {
        Dataset data = load_tu_dataset(dataset);
        data.task = task;
        if (task == Task::NodeClassification)
            throw std::invalid_argument("tu datasets are graph-classification corpora");
        return data;
    }
    if (format == "citation") {
        if (task != Task::NodeClassification)
            throw std::invalid_argument("citation datasets are node-classification graphs");
        return load_citation_dataset(dataset);
    }
    if (format == "sbm") {
        SbmSpec spec = parse_sbm_spec(dataset);
        if (task == Task::NodeClassification) {
            Dataset data;
            data.name = "sbm";
            data.task = Task::NodeClassification;
            data.num_classes = spec.classes;
            std::vector<int> blocks(static_cast<std::size_t>(spec.classes),
                                    spec.nodes / std::max(1, spec.classes));
            Graph g = make_sbm(blocks, 0.6, 0.05, 8, seed);
            data.graphs.push_back(std::move(g));
            data.validate();
            return data;
        }
        return make_sbm_corpus(spec.graphs, spec.classes, spec.nodes, seed);
    }
    throw std::invalid_argument("unknown dataset format '" + format + "' (expected tu|citation|sbm)");
}

inline std::string variant_display_name(Variant v) {
    return v == Variant::Hard ? "hc-gae" : "hc-gae-se";
}

// Evaluation table: one row per fold plus a trailing summary row.
inline std::string format_eval_csv(const EvalResult& result, const std::string& variant_label) {
    std::string out = "dataset, variant, fold, accuracy\n";
    for (std::size_t f = 0; f < result.fold_accuracy.size(); ++f) {
        out += result.dataset + ", " + variant_label + ", " + std::to_string(f) + ", " +
               detail::format_double(result.fold_accuracy[f]) + "\n";
    }
    out += result.dataset + ", " + variant_label + ", mean, " +
           detail::format_double(result.mean) + ", " + detail::format_double(result.stddev) + "\n";
    return out;
}

// Resolved-config artifact: the effective TrainConfig in reloadable form,
// prefixed with commented run facts for the record.
inline std::string format_resolved_config(const std::string& command, const std::string& dataset,
                                          const std::string& format, const TrainConfig& cfg) {
    std::string out;
    out += "# command = " + command + "\n";
    out += "# dataset = " + dataset + "\n";
    out += "# format = " + format + "\n";
    out += serialize_config(cfg);
    return out;
}

}  // namespace hcgae
