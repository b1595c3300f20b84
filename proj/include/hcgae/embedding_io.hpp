#pragma once

// Embedding export codecs: a CSV table (`id, dim0, dim1, ...` with
// 17-significant-digit floats, enough to reproduce every double exactly) and
// a small binary tensor container, each with a matching reader.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "hcgae/config_io.hpp"
#include "hcgae/train.hpp"

namespace hcgae {

inline std::string format_embedding_csv(const Matrix& emb) {
    std::string out = "id";
    for (int j = 0; j < emb.cols; ++j) out += ", dim" + std::to_string(j);
    out += "\n";
    for (int i = 0; i < emb.rows; ++i) {
        out += std::to_string(i);
        for (int j = 0; j < emb.cols; ++j) {
            out += ", ";
            out += detail::format_double(emb(i, j));
        }
        out += "\n";
    }
    return out;
}

inline void write_embedding_csv(const Matrix& emb, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("embedding csv: cannot open '" + path + "' for writing");
    std::string text = format_embedding_csv(emb);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("embedding csv: write failed for '" + path + "'");
}

inline Matrix read_embedding_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("embedding csv: cannot open '" + path + "'");
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("embedding csv: empty file");
    int cols = -1;  // count of dim columns, determined by the header
    {
        cols = 0;
        for (char c : header)
            if (c == ',') ++cols;
    }
    std::vector<double> values;
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        int field = 0;
        while (std::getline(ss, cell, ',')) {
            if (field > 0) {
                std::size_t used = 0;
                std::string token = detail::trim_ws(cell);
                double v = std::stod(token, &used);
                if (used != token.size())
                    throw std::runtime_error("embedding csv: bad number '" + token + "'");
                values.push_back(v);
            }
            ++field;
        }
        if (field != cols + 1)
            throw std::runtime_error("embedding csv: row " + std::to_string(rows) + " has " +
                                     std::to_string(field) + " fields, expected " +
                                     std::to_string(cols + 1));
        ++rows;
    }
    Matrix emb(rows, cols);
    emb.data = std::move(values);
    return emb;
}

inline constexpr char kEmbeddingMagic[4] = {'H', 'C', 'G', 'T'};

inline void write_embedding_bin(const Matrix& emb, const std::string& path) {
    std::string out;
    out.append(kEmbeddingMagic, 4);
    detail::put_u32(out, 1);  // format version
    detail::put_u32(out, static_cast<std::uint32_t>(emb.rows));
    detail::put_u32(out, static_cast<std::uint32_t>(emb.cols));
    for (double v : emb.data) detail::put_f64(out, v);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("embedding container: cannot open '" + path + "' for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("embedding container: write failed for '" + path + "'");
}

inline Matrix read_embedding_bin(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("embedding container: cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    detail::ByteReader in(std::move(bytes));
    if (in.str(4) != std::string(kEmbeddingMagic, 4))
        throw std::runtime_error("embedding container: bad magic");
    std::uint32_t version = in.u32();
    if (version != 1)
        throw std::runtime_error("embedding container: unsupported version " +
                                 std::to_string(version));
    int rows = static_cast<int>(in.u32());
    int cols = static_cast<int>(in.u32());
    Matrix emb(rows, cols);
    for (double& v : emb.data) v = in.f64();
    if (!in.exhausted()) throw std::runtime_error("embedding container: trailing bytes");
    return emb;
}

}  // namespace hcgae
