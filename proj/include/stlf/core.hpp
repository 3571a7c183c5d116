#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stlf {

// Error taxonomy. The CLI maps these to exit codes: ConfigError -> 1,
// DataError/ParseError -> 2, TrainingError -> 3.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : DataError {
    using DataError::DataError;
};
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/**
 * Deterministic random source. Every draw is derived from raw engine output
 * with fixed arithmetic, so streams are identical across standard library
 * implementations (std::uniform_* distributions are not portable).
 */
class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next() { return eng_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller, spare cached
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // uniform integer in [0, n); modulo bias is irrelevant at our sizes
    uint64_t below(uint64_t n) { return next() % n; }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

class Vector {
  public:
    Vector() = default;
    explicit Vector(size_t n, double value = 0.0) : v_(n, value) {}

    size_t size() const { return v_.size(); }
    bool empty() const { return v_.empty(); }
    double& operator()(size_t i) { return v_[i]; }
    double operator()(size_t i) const { return v_[i]; }
    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }
    std::span<double> span() { return v_; }
    std::span<const double> span() const { return v_; }
    void fill(double x) { std::fill(v_.begin(), v_.end(), x); }

    auto begin() { return v_.begin(); }
    auto end() { return v_.end(); }
    auto begin() const { return v_.begin(); }
    auto end() const { return v_.end(); }

  private:
    std::vector<double> v_;
};

/// Dense row-major matrix of doubles.
class Matrix {
  public:
    Matrix() = default;
    Matrix(size_t rows, size_t cols, double value = 0.0)
        : rows_(rows), cols_(cols), a_(rows * cols, value) {}

    size_t rows() const { return rows_; }
    size_t cols() const { return cols_; }
    size_t size() const { return a_.size(); }
    bool empty() const { return a_.empty(); }

    double& operator()(size_t r, size_t c) { return a_[r * cols_ + c]; }
    double operator()(size_t r, size_t c) const { return a_[r * cols_ + c]; }
    double* row(size_t r) { return a_.data() + r * cols_; }
    const double* row(size_t r) const { return a_.data() + r * cols_; }
    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }
    std::span<double> span() { return a_; }
    std::span<const double> span() const { return a_; }
    void fill(double x) { std::fill(a_.begin(), a_.end(), x); }

  private:
    size_t rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

namespace detail {
inline void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}
}  // namespace detail

/// C += A * B
inline void mul_add(Matrix& c, const Matrix& a, const Matrix& b) {
    detail::require(a.cols() == b.rows() && c.rows() == a.rows() && c.cols() == b.cols(),
                    "mul_add: shape mismatch");
    const size_t h = a.rows(), k = a.cols(), n = b.cols();
    for (size_t i = 0; i < h; ++i) {
        const double* ar = a.row(i);
        double* cr = c.row(i);
        for (size_t p = 0; p < k; ++p) {
            const double ap = ar[p];
            const double* br = b.row(p);
            for (size_t j = 0; j < n; ++j) cr[j] += ap * br[j];
        }
    }
}

/// C += A^T * B (A stored untransposed)
inline void mul_transA_add(Matrix& c, const Matrix& a, const Matrix& b) {
    detail::require(a.rows() == b.rows() && c.rows() == a.cols() && c.cols() == b.cols(),
                    "mul_transA_add: shape mismatch");
    const size_t h = a.rows(), k = a.cols(), n = b.cols();
    for (size_t i = 0; i < h; ++i) {
        const double* ar = a.row(i);
        const double* br = b.row(i);
        for (size_t p = 0; p < k; ++p) {
            const double ap = ar[p];
            double* cr = c.row(p);
            for (size_t j = 0; j < n; ++j) cr[j] += ap * br[j];
        }
    }
}

inline Matrix transposed(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (size_t i = 0; i < a.rows(); ++i)
        for (size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

/// m(i, j) += b(i) for every column j
inline void add_bias_cols(Matrix& m, const Vector& b) {
    detail::require(m.rows() == b.size(), "add_bias_cols: shape mismatch");
    for (size_t i = 0; i < m.rows(); ++i) {
        const double bi = b(i);
        double* r = m.row(i);
        for (size_t j = 0; j < m.cols(); ++j) r[j] += bi;
    }
}

/// out(i, j) += d(i) * x(i, j)  (diagonal map applied per column)
inline void add_scaled_rows(Matrix& out, const Vector& d, const Matrix& x) {
    detail::require(out.rows() == d.size() && out.rows() == x.rows() && out.cols() == x.cols(),
                    "add_scaled_rows: shape mismatch");
    for (size_t i = 0; i < out.rows(); ++i) {
        const double di = d(i);
        const double* xr = x.row(i);
        double* r = out.row(i);
        for (size_t j = 0; j < out.cols(); ++j) r[j] += di * xr[j];
    }
}

/// out(i) += sum_j m(i, j)
inline void add_row_sums(Vector& out, const Matrix& m) {
    detail::require(out.size() == m.rows(), "add_row_sums: shape mismatch");
    for (size_t i = 0; i < m.rows(); ++i) {
        const double* r = m.row(i);
        double s = 0.0;
        for (size_t j = 0; j < m.cols(); ++j) s += r[j];
        out(i) += s;
    }
}

/// out(i) += sum_j a(i, j) * b(i, j)
inline void add_rowwise_dot(Vector& out, const Matrix& a, const Matrix& b) {
    detail::require(out.size() == a.rows() && a.rows() == b.rows() && a.cols() == b.cols(),
                    "add_rowwise_dot: shape mismatch");
    for (size_t i = 0; i < a.rows(); ++i) {
        const double* ar = a.row(i);
        const double* br = b.row(i);
        double s = 0.0;
        for (size_t j = 0; j < a.cols(); ++j) s += ar[j] * br[j];
        out(i) += s;
    }
}

inline double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Vector sigmoid(const Vector& v) {
    Vector out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out(i) = sigmoid_scalar(v(i));
    return out;
}

inline Vector tanh(const Vector& v) {
    Vector out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out(i) = std::tanh(v(i));
    return out;
}

inline void sigmoid_inplace(Matrix& m) {
    for (double& x : m.span()) x = sigmoid_scalar(x);
}

inline void tanh_inplace(Matrix& m) {
    for (double& x : m.span()) x = std::tanh(x);
}

inline bool all_finite(std::span<const double> xs) {
    for (double x : xs)
        if (!std::isfinite(x)) return false;
    return true;
}

inline double squared_norm(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x * x;
    return s;
}

}  // namespace stlf
