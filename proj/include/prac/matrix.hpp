#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace prac {

/// Dense row-major matrix of doubles. The single carrier type for
/// activations, gradients, and subspace bases.
class DenseMatrix {
  public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    /// Construction from row literals, for tests and fixtures.
    DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

    static DenseMatrix identity(std::size_t n);
    static DenseMatrix diagonal(const std::vector<double>& entries);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    bool is_finite() const;
    double frobenius_norm() const;
    double squared_frobenius_norm() const;

    DenseMatrix transposed() const;

    bool same_shape(const DenseMatrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool operator==(const DenseMatrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// C = alpha * op(A) * op(B) + beta * C, with op = identity or transpose.
/// C must not alias A or B. Resizes C to the product shape when beta == 0.
void gemm(DenseMatrix& out, const DenseMatrix& a, const DenseMatrix& b,
          bool trans_a = false, bool trans_b = false, double alpha = 1.0,
          double beta = 0.0);

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// Aᵀ·B without materializing the transpose.
DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b);
/// A·Bᵀ without materializing the transpose.
DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(double s, const DenseMatrix& a);

void add_scaled_in_place(DenseMatrix& target, double s, const DenseMatrix& other);
void scale_in_place(DenseMatrix& target, double s);

double max_abs(const DenseMatrix& a);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
double frobenius_diff(const DenseMatrix& a, const DenseMatrix& b);

/// Throws DataError naming `where` if any entry is NaN or infinite.
void ensure_finite(const DenseMatrix& x, const std::string& where);

}  // namespace prac
