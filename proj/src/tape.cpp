#include "coldstart/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coldstart/error.hpp"

namespace coldstart {

namespace {

void check_finite(std::string_view op, const DenseMatrix& m, const char* what) {
    if (!m.all_finite()) throw NumericError(std::string(op), what);
}

void require_same_shape(std::string_view op, const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(op) + ": operand shapes differ");
    }
}

void add_into(DenseMatrix& dst, const DenseMatrix& src, double factor = 1.0) {
    auto& d = dst.data();
    const auto& s = src.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * s[i];
}

}  // namespace

Tape::Var Tape::push(std::string_view op, DenseMatrix value, std::initializer_list<Var> inputs,
                     std::function<void(Tape&, const Node&)> backward) {
    for (Var in : inputs) check_var(in);
    check_finite(op, value, "forward value");
    Node node;
    node.value = std::move(value);
    node.op = op;
    node.tracked = std::any_of(inputs.begin(), inputs.end(), [&](Var in) { return tracked(in); });
    if (node.tracked) node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

void Tape::check_var(Var v) const {
    if (v.id >= nodes_.size()) throw Error("tape variable does not belong to this tape");
}

DenseMatrix& Tape::accum(Var v) {
    Node& n = nodes_[v.id];
    if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols()) {
        n.grad = DenseMatrix(n.value.rows(), n.value.cols());
    }
    return n.grad;
}

Tape::Var Tape::constant(DenseMatrix value) {
    check_finite("constant", value, "input");
    Node node;
    node.value = std::move(value);
    node.op = "constant";
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

Tape::Var Tape::parameter(DenseMatrix value) {
    check_finite("parameter", value, "input");
    Node node;
    node.value = std::move(value);
    node.op = "parameter";
    node.tracked = true;
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

const DenseMatrix& Tape::value(Var v) const {
    check_var(v);
    return nodes_[v.id].value;
}

DenseMatrix Tape::grad(Var v) const {
    check_var(v);
    const Node& n = nodes_[v.id];
    if (n.grad.rows() == n.value.rows() && n.grad.cols() == n.value.cols()) return n.grad;
    return DenseMatrix(n.value.rows(), n.value.cols());
}

double Tape::scalar(Var v) const {
    const DenseMatrix& m = value(v);
    if (m.rows() != 1 || m.cols() != 1) throw DimensionError("scalar() on a non-1x1 variable");
    return m(0, 0);
}

std::vector<std::string_view> Tape::trace() const {
    std::vector<std::string_view> out;
    out.reserve(nodes_.size());
    for (const auto& n : nodes_) out.push_back(n.op);
    return out;
}

void Tape::backward(Var target) {
    check_var(target);
    if (nodes_[target.id].value.rows() != 1 || nodes_[target.id].value.cols() != 1) {
        throw DimensionError("backward() target must be 1x1");
    }
    for (auto& n : nodes_) n.grad = DenseMatrix();
    accum(target)(0, 0) = 1.0;
    for (std::size_t i = target.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.tracked || !n.backward || n.grad.empty()) continue;
        check_finite(n.op, n.grad, "gradient");
        n.backward(*this, n);
    }
}

Tape::Var Tape::add(Var a, Var b) {
    require_same_shape("add", value(a), value(b));
    DenseMatrix out = value(a);
    add_into(out, value(b));
    return push("add", std::move(out), {a, b}, [a, b](Tape& t, const Node& self) {
        if (t.tracked(a)) add_into(t.accum(a), self.grad);
        if (t.tracked(b)) add_into(t.accum(b), self.grad);
    });
}

Tape::Var Tape::sub(Var a, Var b) {
    require_same_shape("sub", value(a), value(b));
    DenseMatrix out = value(a);
    add_into(out, value(b), -1.0);
    return push("sub", std::move(out), {a, b}, [a, b](Tape& t, const Node& self) {
        if (t.tracked(a)) add_into(t.accum(a), self.grad);
        if (t.tracked(b)) add_into(t.accum(b), self.grad, -1.0);
    });
}

Tape::Var Tape::scale(Var a, double s) {
    DenseMatrix out = value(a);
    for (double& x : out.data()) x *= s;
    return push("scale", std::move(out), {a}, [a, s](Tape& t, const Node& self) {
        add_into(t.accum(a), self.grad, s);
    });
}

Tape::Var Tape::add_scalar(Var a, double s) {
    DenseMatrix out = value(a);
    for (double& x : out.data()) x += s;
    return push("add_scalar", std::move(out), {a}, [a](Tape& t, const Node& self) {
        add_into(t.accum(a), self.grad);
    });
}

Tape::Var Tape::matmul(Var a, Var b) {
    DenseMatrix out = coldstart::matmul(value(a), value(b));
    return push("matmul", std::move(out), {a, b}, [a, b](Tape& t, const Node& self) {
        if (t.tracked(a)) add_into(t.accum(a), coldstart::matmul_bt(self.grad, t.value(b)));
        if (t.tracked(b)) add_into(t.accum(b), coldstart::matmul_at(t.value(a), self.grad));
    });
}

Tape::Var Tape::matmul_bt(Var a, Var b) {
    DenseMatrix out = coldstart::matmul_bt(value(a), value(b));
    return push("matmul_bt", std::move(out), {a, b}, [a, b](Tape& t, const Node& self) {
        if (t.tracked(a)) add_into(t.accum(a), coldstart::matmul(self.grad, t.value(b)));
        if (t.tracked(b)) add_into(t.accum(b), coldstart::matmul_at(self.grad, t.value(a)));
    });
}

Tape::Var Tape::spmm(const CsrMatrix& op, Var x) {
    DenseMatrix out = coldstart::spmm(op, value(x));
    const CsrMatrix* ptr = &op;
    return push("spmm", std::move(out), {x}, [ptr, x](Tape& t, const Node& self) {
        add_into(t.accum(x), coldstart::spmm_transposed(*ptr, self.grad));
    });
}

Tape::Var Tape::relu(Var a) {
    DenseMatrix out = value(a);
    for (double& x : out.data()) x = std::max(x, 0.0);
    return push("relu", std::move(out), {a}, [a](Tape& t, const Node& self) {
        DenseMatrix& g = t.accum(a);
        const auto& in = t.value(a).data();
        for (std::size_t i = 0; i < in.size(); ++i)
            if (in[i] > 0.0) g.data()[i] += self.grad.data()[i];
    });
}

Tape::Var Tape::dropout(Var a, double p, std::mt19937_64& rng) {
    if (p < 0.0 || p >= 1.0) throw Error("dropout probability must be in [0, 1)");
    const DenseMatrix& in = value(a);
    DenseMatrix mask(in.rows(), in.cols());
    std::bernoulli_distribution keep(1.0 - p);
    const double s = 1.0 / (1.0 - p);
    for (double& m : mask.data()) m = keep(rng) ? s : 0.0;
    DenseMatrix out = in;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= mask.data()[i];
    return push("dropout", std::move(out), {a}, [a, mask = std::move(mask)](Tape& t, const Node& self) {
        DenseMatrix& g = t.accum(a);
        for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += self.grad.data()[i] * mask.data()[i];
    });
}

Tape::Var Tape::row_softmax(Var a) {
    DenseMatrix out = coldstart::row_softmax(value(a));
    return push("row_softmax", std::move(out), {a}, [a](Tape& t, const Node& self) {
        DenseMatrix& g = t.accum(a);
        for (std::size_t r = 0; r < self.value.rows(); ++r) {
            auto s = self.value.row(r);
            auto gr = self.grad.row(r);
            double dot = 0.0;
            for (std::size_t j = 0; j < s.size(); ++j) dot += gr[j] * s[j];
            auto dst = g.row(r);
            for (std::size_t j = 0; j < s.size(); ++j) dst[j] += s[j] * (gr[j] - dot);
        }
    });
}

Tape::Var Tape::row_log_softmax(Var a) {
    const DenseMatrix& in = value(a);
    DenseMatrix out(in.rows(), in.cols());
    for (std::size_t r = 0; r < in.rows(); ++r) {
        auto x = in.row(r);
        if (x.empty()) continue;
        const double mx = *std::max_element(x.begin(), x.end());
        double total = 0.0;
        for (double v : x) total += std::exp(v - mx);
        const double lse = mx + std::log(total);
        auto y = out.row(r);
        for (std::size_t j = 0; j < x.size(); ++j) y[j] = x[j] - lse;
    }
    return push("row_log_softmax", std::move(out), {a}, [a](Tape& t, const Node& self) {
        DenseMatrix& g = t.accum(a);
        for (std::size_t r = 0; r < self.value.rows(); ++r) {
            auto y = self.value.row(r);
            auto gr = self.grad.row(r);
            double total = 0.0;
            for (double v : gr) total += v;
            auto dst = g.row(r);
            for (std::size_t j = 0; j < y.size(); ++j) dst[j] += gr[j] - std::exp(y[j]) * total;
        }
    });
}

Tape::Var Tape::exp(Var a) {
    DenseMatrix out = value(a);
    for (double& x : out.data()) x = std::exp(x);
    return push("exp", std::move(out), {a}, [a](Tape& t, const Node& self) {
        DenseMatrix& g = t.accum(a);
        for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += self.grad.data()[i] * self.value.data()[i];
    });
}

Tape::Var Tape::log(Var a) {
    DenseMatrix out = value(a);
    for (double& x : out.data()) x = std::log(x);
    return push("log", std::move(out), {a}, [a](Tape& t, const Node& self) {
        DenseMatrix& g = t.accum(a);
        const auto& in = t.value(a).data();
        for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += self.grad.data()[i] / in[i];
    });
}

Tape::Var Tape::select_rows(Var a, std::vector<Index> rows) {
    const DenseMatrix& in = value(a);
    for (Index r : rows) {
        if (r < 0 || static_cast<std::size_t>(r) >= in.rows()) throw DimensionError("select_rows: row out of range");
    }
    DenseMatrix out = coldstart::select_rows(in, rows);
    return push("select_rows", std::move(out), {a}, [a, rows = std::move(rows)](Tape& t, const Node& self) {
        DenseMatrix& g = t.accum(a);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto src = self.grad.row(i);
            auto dst = g.row(static_cast<std::size_t>(rows[i]));
            for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
        }
    });
}

Tape::Var Tape::pairwise_distance(Var a, Var b) {
    const DenseMatrix& x = value(a);
    const DenseMatrix& y = value(b);
    if (x.cols() != y.cols()) throw DimensionError("pairwise_distance: column counts differ");
    DenseMatrix out(x.rows(), y.rows());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < y.rows(); ++j) out(i, j) = euclidean_distance(x.row(i), y.row(j));
    return push("pairwise_distance", std::move(out), {a, b}, [a, b](Tape& t, const Node& self) {
        const DenseMatrix& x = t.value(a);
        const DenseMatrix& y = t.value(b);
        const bool ta = t.tracked(a);
        const bool tb = t.tracked(b);
        // accum() may allocate; take both references before writing.
        DenseMatrix* ga = ta ? &t.accum(a) : nullptr;
        DenseMatrix* gb = tb ? &t.accum(b) : nullptr;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < y.rows(); ++j) {
                const double d = self.value(i, j);
                const double g = self.grad(i, j);
                if (d == 0.0 || g == 0.0) continue;
                const double f = g / d;
                auto xi = x.row(i);
                auto yj = y.row(j);
                for (std::size_t k = 0; k < xi.size(); ++k) {
                    const double diff = f * (xi[k] - yj[k]);
                    if (ga) (*ga)(i, k) += diff;
                    if (gb) (*gb)(j, k) -= diff;
                }
            }
        }
    });
}

Tape::Var Tape::column_mean(Var a) {
    const DenseMatrix& in = value(a);
    if (in.rows() == 0) throw DimensionError("column_mean of an empty matrix");
    DenseMatrix out(1, in.cols());
    for (std::size_t r = 0; r < in.rows(); ++r)
        for (std::size_t j = 0; j < in.cols(); ++j) out(0, j) += in(r, j);
    const double inv = 1.0 / static_cast<double>(in.rows());
    for (double& x : out.data()) x *= inv;
    return push("column_mean", std::move(out), {a}, [a, inv](Tape& t, const Node& self) {
        DenseMatrix& g = t.accum(a);
        for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t j = 0; j < g.cols(); ++j) g(r, j) += inv * self.grad(0, j);
    });
}

Tape::Var Tape::sub_row(Var a, Var row) {
    const DenseMatrix& in = value(a);
    const DenseMatrix& r = value(row);
    if (r.rows() != 1 || r.cols() != in.cols()) throw DimensionError("sub_row: row must be 1 x cols");
    DenseMatrix out = in;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) -= r(0, j);
    return push("sub_row", std::move(out), {a, row}, [a, row](Tape& t, const Node& self) {
        if (t.tracked(a)) add_into(t.accum(a), self.grad);
        if (t.tracked(row)) {
            DenseMatrix& g = t.accum(row);
            for (std::size_t i = 0; i < self.grad.rows(); ++i)
                for (std::size_t j = 0; j < self.grad.cols(); ++j) g(0, j) -= self.grad(i, j);
        }
    });
}

Tape::Var Tape::row_normalize(Var a) {
    const DenseMatrix& in = value(a);
    DenseMatrix out(in.rows(), in.cols());
    std::vector<double> norms(in.rows());
    for (std::size_t r = 0; r < in.rows(); ++r) {
        double s = 0.0;
        for (double x : in.row(r)) s += x * x;
        norms[r] = std::sqrt(s);
        if (norms[r] > 0.0) {
            auto dst = out.row(r);
            auto src = in.row(r);
            for (std::size_t j = 0; j < src.size(); ++j) dst[j] = src[j] / norms[r];
        }
    }
    return push("row_normalize", std::move(out), {a}, [a, norms = std::move(norms)](Tape& t, const Node& self) {
        DenseMatrix& g = t.accum(a);
        for (std::size_t r = 0; r < self.value.rows(); ++r) {
            if (norms[r] == 0.0) continue;
            auto u = self.value.row(r);
            auto gr = self.grad.row(r);
            double dot = 0.0;
            for (std::size_t j = 0; j < u.size(); ++j) dot += u[j] * gr[j];
            auto dst = g.row(r);
            for (std::size_t j = 0; j < u.size(); ++j) dst[j] += (gr[j] - u[j] * dot) / norms[r];
        }
    });
}

Tape::Var Tape::masked_row_max(Var a, std::vector<char> mask) {
    const DenseMatrix& in = value(a);
    if (mask.size() != in.size()) throw DimensionError("masked_row_max: mask size mismatch");
    DenseMatrix out(in.rows(), 1);
    std::vector<std::ptrdiff_t> arg(in.rows(), -1);
    for (std::size_t r = 0; r < in.rows(); ++r) {
        for (std::size_t c = 0; c < in.cols(); ++c) {
            if (!mask[r * in.cols() + c]) continue;
            if (arg[r] < 0 || in(r, c) > out(r, 0)) {
                out(r, 0) = in(r, c);
                arg[r] = static_cast<std::ptrdiff_t>(c);
            }
        }
    }
    return push("masked_row_max", std::move(out), {a}, [a, arg = std::move(arg)](Tape& t, const Node& self) {
        DenseMatrix& g = t.accum(a);
        for (std::size_t r = 0; r < arg.size(); ++r)
            if (arg[r] >= 0) g(r, static_cast<std::size_t>(arg[r])) += self.grad(r, 0);
    });
}

Tape::Var Tape::mean(Var a) {
    const DenseMatrix& in = value(a);
    if (in.empty()) throw DimensionError("mean of an empty matrix");
    double s = 0.0;
    for (double x : in.data()) s += x;
    const double inv = 1.0 / static_cast<double>(in.size());
    return push("mean", DenseMatrix(1, 1, s * inv), {a}, [a, inv](Tape& t, const Node& self) {
        DenseMatrix& g = t.accum(a);
        for (double& x : g.data()) x += inv * self.grad(0, 0);
    });
}

Tape::Var Tape::sum(Var a) {
    double s = 0.0;
    for (double x : value(a).data()) s += x;
    return push("sum", DenseMatrix(1, 1, s), {a}, [a](Tape& t, const Node& self) {
        DenseMatrix& g = t.accum(a);
        for (double& x : g.data()) x += self.grad(0, 0);
    });
}

Tape::Var Tape::nll(Var log_probs, std::vector<int> targets) {
    const DenseMatrix& lp = value(log_probs);
    if (targets.size() != lp.rows() || targets.empty()) {
        throw DimensionError("nll: need one target per row and at least one row");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= lp.cols()) {
            throw DimensionError("nll: target class out of range");
        }
        s -= lp(i, static_cast<std::size_t>(targets[i]));
    }
    const double inv = 1.0 / static_cast<double>(targets.size());
    return push("cross_entropy", DenseMatrix(1, 1, s * inv), {log_probs},
                [log_probs, inv, targets = std::move(targets)](Tape& t, const Node& self) {
                    DenseMatrix& g = t.accum(log_probs);
                    for (std::size_t i = 0; i < targets.size(); ++i)
                        g(i, static_cast<std::size_t>(targets[i])) -= inv * self.grad(0, 0);
                });
}

Tape::Var Tape::cross_entropy(Var logits, std::vector<int> targets) {
    return nll(row_log_softmax(logits), std::move(targets));
}

void adam_step(DenseMatrix& param, const DenseMatrix& grad, AdamState& state, const AdamConfig& cfg) {
    if (param.rows() != grad.rows() || param.cols() != grad.cols()) {
        throw DimensionError("adam_step: parameter and gradient shapes differ");
    }
    if (state.m.rows() != param.rows() || state.m.cols() != param.cols()) {
        state.m = DenseMatrix(param.rows(), param.cols());
        state.v = DenseMatrix(param.rows(), param.cols());
        state.t = 0;
    }
    ++state.t;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    auto& p = param.data();
    auto& m = state.m.data();
    auto& v = state.v.data();
    const auto& g = grad.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double gi = g[i] + cfg.weight_decay * p[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
        p[i] -= cfg.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.eps);
    }
}

}  // namespace coldstart
