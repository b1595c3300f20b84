#pragma once

// Text round-trip for TrainConfig: line-oriented `key = value` files with
// strict unknown-key rejection, plus an FNV-1a digest of the canonical
// serialization used to tag checkpoints and evaluation results.

#include <cstdint>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hcgae/params.hpp"

namespace hcgae {

namespace detail {

inline std::string trim_ws(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// %.17g prints enough digits to reproduce any double exactly on re-parse.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline long long config_int(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    long long out = 0;
    try {
        out = std::stoll(value, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': expected integer, got '" + value + "'");
    }
    if (used != value.size())
        throw std::invalid_argument("config key '" + key + "': expected integer, got '" + value + "'");
    return out;
}

inline double config_real(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(value, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': expected number, got '" + value + "'");
    }
    if (used != value.size())
        throw std::invalid_argument("config key '" + key + "': expected number, got '" + value + "'");
    return out;
}

inline bool config_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true") return true;
    if (value == "0" || value == "false") return false;
    throw std::invalid_argument("config key '" + key + "': expected boolean, got '" + value + "'");
}

inline std::vector<int> config_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos <= value.size()) {
        std::size_t comma = value.find(',', pos);
        std::string item = trim_ws(value.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
        if (item.empty())
            throw std::invalid_argument("config key '" + key + "': empty list entry");
        out.push_back(static_cast<int>(config_int(key, item)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw std::invalid_argument("config key '" + key + "': empty list");
    return out;
}

inline std::string join_ints(const std::vector<int>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(xs[i]);
    }
    return out;
}

}  // namespace detail

inline std::string task_name(Task t) {
    return t == Task::GraphClassification ? "graph" : "node";
}

inline std::string variant_name(Variant v) {
    return v == Variant::Hard ? "hard" : "soft";
}

inline std::string readout_name(ReadoutMode r) {
    return r == ReadoutMode::Mean ? "mean" : "max";
}

// Canonical text form: every field, fixed order, reload-exact values. The
// same syntax is accepted by parse_config_text, so resolved-config files
// written after a run can seed the next one verbatim.
inline std::string serialize_config(const TrainConfig& cfg) {
    std::ostringstream out;
    out << "task = " << task_name(cfg.task) << "\n";
    out << "variant = " << variant_name(cfg.variant) << "\n";
    out << "epochs = " << cfg.epochs << "\n";
    out << "hidden_dim = " << cfg.hidden_dim << "\n";
    out << "dropout = " << detail::format_double(cfg.dropout) << "\n";
    out << "batch_size = " << cfg.batch_size << "\n";
    out << "learning_rate = " << detail::format_double(cfg.learning_rate) << "\n";
    out << "encoder_sizes = " << detail::join_ints(cfg.encoder_sizes) << "\n";
    out << "decoder_sizes = " << detail::join_ints(cfg.decoder_sizes) << "\n";
    out << "lambda_x = " << detail::format_double(cfg.lambda_x) << "\n";
    out << "lambda_a = " << detail::format_double(cfg.lambda_a) << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "readout = " << readout_name(cfg.readout) << "\n";
    out << "shared_subgraph_weights = " << (cfg.shared_subgraph_weights ? 1 : 0) << "\n";
    out << "gnn_depth = " << cfg.gnn_depth << "\n";
    out << "grad_clip = " << detail::format_double(cfg.grad_clip) << "\n";
    return out.str();
}

// Applies one key/value pair. Unknown keys are an error by contract.
inline void apply_config_value(TrainConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "task") {
        if (value == "graph") cfg.task = Task::GraphClassification;
        else if (value == "node") cfg.task = Task::NodeClassification;
        else throw std::invalid_argument("config key 'task': expected graph|node, got '" + value + "'");
    } else if (key == "variant") {
        if (value == "hard") cfg.variant = Variant::Hard;
        else if (value == "soft" || value == "se") cfg.variant = Variant::Soft;
        else throw std::invalid_argument("config key 'variant': expected hard|soft, got '" + value + "'");
    } else if (key == "epochs") {
        cfg.epochs = static_cast<int>(detail::config_int(key, value));
    } else if (key == "hidden_dim") {
        cfg.hidden_dim = static_cast<int>(detail::config_int(key, value));
    } else if (key == "dropout") {
        cfg.dropout = detail::config_real(key, value);
    } else if (key == "batch_size") {
        cfg.batch_size = static_cast<int>(detail::config_int(key, value));
    } else if (key == "learning_rate") {
        cfg.learning_rate = detail::config_real(key, value);
    } else if (key == "encoder_sizes") {
        cfg.encoder_sizes = detail::config_int_list(key, value);
    } else if (key == "decoder_sizes") {
        cfg.decoder_sizes = detail::config_int_list(key, value);
    } else if (key == "lambda_x") {
        cfg.lambda_x = detail::config_real(key, value);
    } else if (key == "lambda_a") {
        cfg.lambda_a = detail::config_real(key, value);
    } else if (key == "seed") {
        cfg.seed = static_cast<unsigned long long>(detail::config_int(key, value));
    } else if (key == "readout") {
        if (value == "mean") cfg.readout = ReadoutMode::Mean;
        else if (value == "max") cfg.readout = ReadoutMode::Max;
        else throw std::invalid_argument("config key 'readout': expected mean|max, got '" + value + "'");
    } else if (key == "shared_subgraph_weights") {
        cfg.shared_subgraph_weights = detail::config_bool(key, value);
    } else if (key == "gnn_depth") {
        cfg.gnn_depth = static_cast<int>(detail::config_int(key, value));
    } else if (key == "grad_clip") {
        cfg.grad_clip = detail::config_real(key, value);
    } else {
        throw std::invalid_argument("unknown config key '" + key + "'");
    }
}

// Parses `key = value` lines into cfg. Blank lines and `#` comments are
// skipped; anything else without an `=` is malformed.
inline void parse_config_text(const std::string& text, TrainConfig& cfg) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::string stripped = detail::trim_ws(line);
        if (stripped.empty()) continue;
        std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = detail::trim_ws(stripped.substr(0, eq));
        std::string value = detail::trim_ws(stripped.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
        apply_config_value(cfg, key, value);
    }
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t config_digest(const TrainConfig& cfg) {
    return fnv1a64(serialize_config(cfg));
}

}  // namespace hcgae
