#include "prac/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "prac/errors.hpp"

namespace prac {

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ParameterError("ragged initializer for DenseMatrix");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::diagonal(const std::vector<double>& entries) {
    DenseMatrix m(entries.size(), entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) m(i, i) = entries[i];
    return m;
}

bool DenseMatrix::is_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

double DenseMatrix::squared_frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return s;
}

double DenseMatrix::frobenius_norm() const { return std::sqrt(squared_frobenius_norm()); }

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

void gemm(DenseMatrix& out, const DenseMatrix& a, const DenseMatrix& b, bool trans_a,
          bool trans_b, double alpha, double beta) {
    const std::size_t m = trans_a ? a.cols() : a.rows();
    const std::size_t k = trans_a ? a.rows() : a.cols();
    const std::size_t kb = trans_b ? b.cols() : b.rows();
    const std::size_t n = trans_b ? b.rows() : b.cols();
    if (k != kb) throw ParameterError("gemm: inner dimensions do not match");
    if (beta == 0.0) {
        if (out.rows() != m || out.cols() != n) out = DenseMatrix(m, n);
        else std::fill(out.data(), out.data() + out.size(), 0.0);
    } else if (out.rows() != m || out.cols() != n) {
        throw ParameterError("gemm: output shape does not match for beta != 0");
    }
    if (beta != 0.0 && beta != 1.0) scale_in_place(out, beta);

    // i-k-j loop order keeps the innermost access contiguous for row-major data.
    for (std::size_t i = 0; i < m; ++i) {
        double* out_row = out.row(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double av = trans_a ? a(p, i) : a(i, p);
            if (av == 0.0) continue;
            const double s = alpha * av;
            if (!trans_b) {
                const double* b_row = b.row(p);
                for (std::size_t j = 0; j < n; ++j) out_row[j] += s * b_row[j];
            } else {
                for (std::size_t j = 0; j < n; ++j) out_row[j] += s * b(j, p);
            }
        }
    }
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix c;
    gemm(c, a, b);
    return c;
}

DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix c;
    gemm(c, a, b, /*trans_a=*/true);
    return c;
}

DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix c;
    gemm(c, a, b, false, /*trans_b=*/true);
    return c;
}

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) throw ParameterError("matrix add: shape mismatch");
    DenseMatrix c = a;
    add_scaled_in_place(c, 1.0, b);
    return c;
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) throw ParameterError("matrix sub: shape mismatch");
    DenseMatrix c = a;
    add_scaled_in_place(c, -1.0, b);
    return c;
}

DenseMatrix operator*(double s, const DenseMatrix& a) {
    DenseMatrix c = a;
    scale_in_place(c, s);
    return c;
}

void add_scaled_in_place(DenseMatrix& target, double s, const DenseMatrix& other) {
    if (!target.same_shape(other)) throw ParameterError("add_scaled: shape mismatch");
    double* t = target.data();
    const double* o = other.data();
    for (std::size_t i = 0; i < target.size(); ++i) t[i] += s * o[i];
}

void scale_in_place(DenseMatrix& target, double s) {
    double* t = target.data();
    for (std::size_t i = 0; i < target.size(); ++i) t[i] *= s;
}

double max_abs(const DenseMatrix& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.data()[i]));
    return m;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) throw ParameterError("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
    return m;
}

double frobenius_diff(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) throw ParameterError("frobenius_diff: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        s += d * d;
    }
    return std::sqrt(s);
}

void ensure_finite(const DenseMatrix& x, const std::string& where) {
    if (!x.is_finite()) throw DataError(where + ": matrix contains non-finite entries");
}

}  // namespace prac
