#pragma once

// Dense row-major matrices over double, with the handful of elementwise and
// product operations the rest of the library is built from. The multiply
// kernel is backed by Eigen maps; everything else is plain loops.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace hcgae {

struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;  // row-major, length rows*cols

    Matrix() = default;

    Matrix(int r, int c) : rows(r), cols(c) {
        if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative dimension");
        data.assign(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0);
    }

    Matrix(std::initializer_list<std::initializer_list<double>> init) {
        rows = static_cast<int>(init.size());
        cols = rows > 0 ? static_cast<int>(init.begin()->size()) : 0;
        data.reserve(static_cast<std::size_t>(rows) * cols);
        for (const auto& row : init) {
            if (static_cast<int>(row.size()) != cols)
                throw std::invalid_argument("Matrix: ragged initializer");
            data.insert(data.end(), row.begin(), row.end());
        }
    }

    static Matrix zeros(int r, int c) { return Matrix(r, c); }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix filled(int r, int c, double v) {
        Matrix m(r, c);
        std::fill(m.data.begin(), m.data.end(), v);
        return m;
    }

    double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    std::string shape_str() const {
        return std::to_string(rows) + "x" + std::to_string(cols);
    }
};

namespace detail {
using ERowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMapConst = Eigen::Map<const ERowMajor>;
using EMap = Eigen::Map<ERowMajor>;

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(op) + ": shape mismatch (" + a.shape_str() +
                                    " vs " + b.shape_str() + ")");
}
}  // namespace detail

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument("matmul: dimension mismatch (" + a.shape_str() + " vs " +
                                    b.shape_str() + ")");
    Matrix out(a.rows, b.cols);
    if (a.rows == 0 || b.cols == 0) return out;
    if (a.cols == 0) return out;  // empty inner dimension: zero product
    detail::EMapConst ma(a.data.data(), a.rows, a.cols);
    detail::EMapConst mb(b.data.data(), b.rows, b.cols);
    detail::EMap mo(out.data.data(), out.rows, out.cols);
    mo.noalias() = ma * mb;
    return out;
}

inline Matrix transpose(const Matrix& a) {
    Matrix out(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    return out;
}

inline Matrix add(const Matrix& a, const Matrix& b) {
    detail::require_same_shape(a, b, "add");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += b.data[i];
    return out;
}

inline Matrix sub(const Matrix& a, const Matrix& b) {
    detail::require_same_shape(a, b, "sub");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

inline Matrix hadamard(const Matrix& a, const Matrix& b) {
    detail::require_same_shape(a, b, "hadamard");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= b.data[i];
    return out;
}

inline Matrix scale(const Matrix& a, double c) {
    Matrix out = a;
    for (double& v : out.data) v *= c;
    return out;
}

inline Matrix relu(const Matrix& a) {
    Matrix out = a;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

// Row-wise softmax with max-subtraction; each output row sums to 1.
inline Matrix row_softmax(const Matrix& a) {
    if (a.rows == 0 || a.cols == 0) throw std::invalid_argument("row_softmax: empty input");
    Matrix out(a.rows, a.cols);
    for (int i = 0; i < a.rows; ++i) {
        double m = a(i, 0);
        for (int j = 1; j < a.cols; ++j) m = std::max(m, a(i, j));
        double z = 0.0;
        for (int j = 0; j < a.cols; ++j) {
            double e = std::exp(a(i, j) - m);
            out(i, j) = e;
            z += e;
        }
        for (int j = 0; j < a.cols; ++j) out(i, j) /= z;
    }
    return out;
}

inline double sum(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data) s += v;
    return s;
}

inline double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.data) m = std::max(m, std::abs(v));
    return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    detail::require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

inline bool all_finite(const Matrix& a) {
    for (double v : a.data)
        if (!std::isfinite(v)) return false;
    return true;
}

inline void check_finite(const Matrix& a, const char* context) {
    if (!all_finite(a)) throw std::runtime_error(std::string(context) + ": non-finite entries");
}

inline bool is_symmetric(const Matrix& a, double tol) {
    if (a.rows != a.cols) return false;
    for (int i = 0; i < a.rows; ++i)
        for (int j = i + 1; j < a.cols; ++j)
            if (std::abs(a(i, j) - a(j, i)) > tol) return false;
    return true;
}

namespace detail {

// Symmetric degree-normalized adjacency with self-loops: N = D^-1/2 (A+I) D^-1/2.
// Shared by the plain graph operation and the tape primitive. Degrees of A+I are
// >= 1, so isolated nodes come out with self-weight 1. Optionally reports the
// A+I row sums (needed by the backward rule).
inline Matrix normalize_adjacency_impl(const Matrix& a, std::vector<double>* degrees_out) {
    if (a.rows != a.cols)
        throw std::invalid_argument("normalize_adjacency: non-square input " + a.shape_str());
    const int n = a.rows;
    std::vector<double> deg(n, 0.0), rsqrt(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double d = 1.0;  // self-loop
        for (int j = 0; j < n; ++j) {
            if (a(i, j) < 0.0)
                throw std::invalid_argument("normalize_adjacency: negative entry at (" +
                                            std::to_string(i) + "," + std::to_string(j) + ")");
            d += a(i, j);
        }
        deg[i] = d;
        rsqrt[i] = 1.0 / std::sqrt(d);
    }
    Matrix out(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double atilde = a(i, j) + (i == j ? 1.0 : 0.0);
            out(i, j) = atilde * rsqrt[i] * rsqrt[j];
        }
    if (degrees_out) *degrees_out = std::move(deg);
    return out;
}

}  // namespace detail

// Symmetric degree-normalized adjacency with self-loops: D^-1/2 (A+I) D^-1/2.
inline Matrix normalize_adjacency(const Matrix& a) {
    return detail::normalize_adjacency_impl(a, nullptr);
}

// Deterministic random source; wraps the engine so all draws go through one place.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen_);
    }
    double normal(double mean, double stddev) {
        return std::normal_distribution<double>(mean, stddev)(gen_);
    }
    int uniform_int(int lo, int hi) {  // inclusive bounds
        return std::uniform_int_distribution<int>(lo, hi)(gen_);
    }
    bool bernoulli(double p) { return std::bernoulli_distribution(p)(gen_); }
    std::uint64_t next_u64() { return gen_(); }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

inline Matrix random_uniform(int r, int c, double lo, double hi, Rng& rng) {
    Matrix m(r, c);
    for (double& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

inline Matrix random_normal(int r, int c, double mean, double stddev, Rng& rng) {
    Matrix m(r, c);
    for (double& v : m.data) v = rng.normal(mean, stddev);
    return m;
}

}  // namespace hcgae
