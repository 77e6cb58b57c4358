#include "coldstart/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coldstart/error.hpp"

namespace coldstart {

namespace {

std::string shape(std::size_t r, std::size_t c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape(rows_, cols_));
    }
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw DimensionError("ragged matrix literal");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

bool DenseMatrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

void DenseMatrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

CsrMatrix CsrMatrix::from_dense(const DenseMatrix& m) {
    CsrMatrix out;
    out.rows = m.rows();
    out.cols = m.cols();
    out.offsets.assign(m.rows() + 1, 0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (m(r, c) != 0.0) {
                out.indices.push_back(static_cast<Index>(c));
                out.values.push_back(m(r, c));
            }
        }
        out.offsets[r + 1] = out.indices.size();
    }
    return out;
}

DenseMatrix CsrMatrix::to_dense() const {
    DenseMatrix out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) out(r, indices[k]) += values[k];
    }
    return out;
}

CsrMatrix CsrMatrix::transpose() const {
    CsrMatrix t;
    t.rows = cols;
    t.cols = rows;
    t.offsets.assign(cols + 1, 0);
    for (Index c : indices) ++t.offsets[static_cast<std::size_t>(c) + 1];
    for (std::size_t c = 0; c < cols; ++c) t.offsets[c + 1] += t.offsets[c];
    t.indices.resize(nnz());
    t.values.resize(nnz());
    std::vector<std::size_t> cursor(t.offsets.begin(), t.offsets.end() - 1);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
            const std::size_t dst = cursor[indices[k]]++;
            t.indices[dst] = static_cast<Index>(r);
            t.values[dst] = values[k];
        }
    }
    return t;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul " + shape(a.rows(), a.cols()) + " * " + shape(b.rows(), b.cols()));
    }
    DenseMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto dst = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            auto src = b.row(k);
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += aik * src[j];
        }
    }
    return out;
}

DenseMatrix matmul_at(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows()) {
        throw DimensionError("matmul_at " + shape(a.rows(), a.cols()) + "^T * " + shape(b.rows(), b.cols()));
    }
    DenseMatrix out(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        auto src = b.row(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = a(k, i);
            if (aki == 0.0) continue;
            auto dst = out.row(i);
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += aki * src[j];
        }
    }
    return out;
}

DenseMatrix matmul_bt(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.cols()) {
        throw DimensionError("matmul_bt " + shape(a.rows(), a.cols()) + " * " + shape(b.rows(), b.cols()) + "^T");
    }
    DenseMatrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ai = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            auto bj = b.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < ai.size(); ++k) s += ai[k] * bj[k];
            out(i, j) = s;
        }
    }
    return out;
}

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

DenseMatrix spmm(const CsrMatrix& op, const DenseMatrix& x) {
    if (op.cols != x.rows()) {
        throw DimensionError("spmm " + shape(op.rows, op.cols) + " * " + shape(x.rows(), x.cols()));
    }
    DenseMatrix out(op.rows, x.cols());
    for (std::size_t r = 0; r < op.rows; ++r) {
        auto dst = out.row(r);
        for (std::size_t k = op.offsets[r]; k < op.offsets[r + 1]; ++k) {
            const double w = op.values[k];
            auto src = x.row(static_cast<std::size_t>(op.indices[k]));
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += w * src[j];
        }
    }
    return out;
}

DenseMatrix spmm_transposed(const CsrMatrix& op, const DenseMatrix& x) {
    if (op.rows != x.rows()) {
        throw DimensionError("spmm_transposed " + shape(op.rows, op.cols) + "^T * " + shape(x.rows(), x.cols()));
    }
    DenseMatrix out(op.cols, x.cols());
    for (std::size_t r = 0; r < op.rows; ++r) {
        auto src = x.row(r);
        for (std::size_t k = op.offsets[r]; k < op.offsets[r + 1]; ++k) {
            const double w = op.values[k];
            auto dst = out.row(static_cast<std::size_t>(op.indices[k]));
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += w * src[j];
        }
    }
    return out;
}

CsrMatrix spgemm(const CsrMatrix& a, const CsrMatrix& b) {
    if (a.cols != b.rows) {
        throw DimensionError("spgemm " + shape(a.rows, a.cols) + " * " + shape(b.rows, b.cols));
    }
    CsrMatrix out;
    out.rows = a.rows;
    out.cols = b.cols;
    out.offsets.assign(a.rows + 1, 0);
    std::vector<double> acc(b.cols, 0.0);
    std::vector<char> touched(b.cols, 0);
    std::vector<Index> cols;
    for (std::size_t r = 0; r < a.rows; ++r) {
        cols.clear();
        for (std::size_t k = a.offsets[r]; k < a.offsets[r + 1]; ++k) {
            const double w = a.values[k];
            const auto mid = static_cast<std::size_t>(a.indices[k]);
            for (std::size_t q = b.offsets[mid]; q < b.offsets[mid + 1]; ++q) {
                const auto c = static_cast<std::size_t>(b.indices[q]);
                if (!touched[c]) {
                    touched[c] = 1;
                    cols.push_back(static_cast<Index>(c));
                }
                acc[c] += w * b.values[q];
            }
        }
        std::sort(cols.begin(), cols.end());
        for (Index c : cols) {
            out.indices.push_back(c);
            out.values.push_back(acc[c]);
            acc[c] = 0.0;
            touched[c] = 0;
        }
        out.offsets[r + 1] = out.indices.size();
    }
    return out;
}

DenseMatrix row_softmax(const DenseMatrix& m) {
    DenseMatrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto src = m.row(r);
        auto dst = out.row(r);
        if (src.empty()) continue;
        const double mx = *std::max_element(src.begin(), src.end());
        double total = 0.0;
        for (std::size_t j = 0; j < src.size(); ++j) {
            dst[j] = std::exp(src[j] - mx);
            total += dst[j];
        }
        for (double& v : dst) v /= total;
    }
    return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
    // Four partial sums let the compiler keep several lanes busy without -ffast-math.
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    const std::size_t n = a.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const double d0 = a[i] - b[i];
        const double d1 = a[i + 1] - b[i + 1];
        const double d2 = a[i + 2] - b[i + 2];
        const double d3 = a[i + 3] - b[i + 3];
        s0 += d0 * d0;
        s1 += d1 * d1;
        s2 += d2 * d2;
        s3 += d3 * d3;
    }
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s0 += d * d;
    }
    return (s0 + s1) + (s2 + s3);
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) noexcept {
    return std::sqrt(squared_distance(a, b));
}

DenseMatrix select_rows(const DenseMatrix& m, std::span<const Index> rows) {
    DenseMatrix out(rows.size(), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto src = m.row(static_cast<std::size_t>(rows[i]));
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

std::size_t argmax(std::span<const double> row) noexcept {
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j)
        if (row[j] > row[best]) best = j;
    return best;
}

}  // namespace coldstart
