#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace coldstart {

using Index = std::int32_t;

/// Row-major dense matrix of doubles.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    bool all_finite() const noexcept;
    void fill(double value);

    bool operator==(const DenseMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Compressed sparse rows with per-entry weights. Column indices within a row are sorted.
struct CsrMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> offsets;  // rows + 1 entries
    std::vector<Index> indices;
    std::vector<double> values;

    std::size_t nnz() const noexcept { return indices.size(); }
    std::span<const Index> row_indices(std::size_t r) const noexcept {
        return {indices.data() + offsets[r], offsets[r + 1] - offsets[r]};
    }
    std::span<const double> row_values(std::size_t r) const noexcept {
        return {values.data() + offsets[r], offsets[r + 1] - offsets[r]};
    }

    /// Drops exact zeros of a dense matrix.
    static CsrMatrix from_dense(const DenseMatrix& m);
    DenseMatrix to_dense() const;
    CsrMatrix transpose() const;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// a^T * b
DenseMatrix matmul_at(const DenseMatrix& a, const DenseMatrix& b);
/// a * b^T
DenseMatrix matmul_bt(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);

/// Sparse-dense product; row v of the result is sum_u op(v,u) * x[u].
DenseMatrix spmm(const CsrMatrix& op, const DenseMatrix& x);
/// op^T * x without materializing the transpose.
DenseMatrix spmm_transposed(const CsrMatrix& op, const DenseMatrix& x);
/// Sparse-sparse product, used to precompute propagated feature matrices.
CsrMatrix spgemm(const CsrMatrix& a, const CsrMatrix& b);

/// Row-wise softmax with max subtraction.
DenseMatrix row_softmax(const DenseMatrix& m);

/// Squared Euclidean distance between two equally sized rows.
double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;
double euclidean_distance(std::span<const double> a, std::span<const double> b) noexcept;

/// Copies the listed rows into a new matrix, in order.
DenseMatrix select_rows(const DenseMatrix& m, std::span<const Index> rows);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> row) noexcept;

}  // namespace coldstart
