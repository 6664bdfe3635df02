#include "core/grad/ops.hpp"

#include <algorithm>
#include <cmath>

#include "core/common/error.hpp"

namespace asn::grad {

namespace {

using NodePtr = std::shared_ptr<Node>;

Tensor make_op(Shape shape, std::vector<NodePtr> parents) {
    auto node = std::make_shared<Node>();
    node->value.assign(shape_size(shape), 0.0);
    node->shape = std::move(shape);
    for (const auto& p : parents)
        if (p->requires_grad) node->requires_grad = true;
    node->parents = std::move(parents);
    return Tensor(node);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        fail(ErrorCode::InvalidArgument, std::string(op) + ": shape mismatch " +
                                             shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

// C (+)= op(A)*op(B) with row-major storage.
void gemm(const double* a, std::size_t ra, std::size_t ca, bool ta,
          const double* b, std::size_t rb, std::size_t cb, bool tb,
          double* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (!accumulate) std::fill(c, c + m * n, 0.0);
    (void)rb;
    auto a_at = [&](std::size_t i, std::size_t t) { return ta ? a[t * ca + i] : a[i * ca + t]; };
    auto b_at = [&](std::size_t t, std::size_t j) { return tb ? b[j * cb + t] : b[t * cb + j]; };
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t t = 0; t < k; ++t) {
            const double av = a_at(i, t);
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * b_at(t, j);
        }
    }
}

} // namespace

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
    if (a.rank() != 2 || b.rank() != 2)
        fail(ErrorCode::InvalidArgument, "matmul: needs matrices, got " + shape_str(a.shape()) +
                                             " and " + shape_str(b.shape()));
    const std::size_t m = trans_a ? a.cols() : a.rows();
    const std::size_t k = trans_a ? a.rows() : a.cols();
    const std::size_t kb = trans_b ? b.cols() : b.rows();
    const std::size_t n = trans_b ? b.rows() : b.cols();
    if (k != kb)
        fail(ErrorCode::InvalidArgument, "matmul: inner extent mismatch " + shape_str(a.shape()) +
                                             (trans_a ? "^T" : "") + " vs " + shape_str(b.shape()) +
                                             (trans_b ? "^T" : ""));

    Tensor out = make_op({m, n}, {a.node(), b.node()});
    gemm(a.values().data(), a.rows(), a.cols(), trans_a,
         b.values().data(), b.rows(), b.cols(), trans_b,
         out.values().data(), m, k, n, false);
    check_finite(*out.node(), "matmul");

    auto an = a.node(), bn = b.node();
    out.node()->backward_fn = [an, bn, trans_a, trans_b, m, k, n](Node& self) {
        // dA' = dC * B'^T, dB' = A'^T * dC, transposed back into storage.
        if (an->requires_grad) {
            if (!trans_a) {
                gemm(self.grad.data(), m, n, false, bn->value.data(), bn->shape[0], bn->shape[1],
                     !trans_b, an->grad.data(), m, n, k, true);
            } else {
                // dA stored as [k stored rows?] - A stored [k_rows=a.rows]: dA = B' * dC^T
                gemm(bn->value.data(), bn->shape[0], bn->shape[1], trans_b, self.grad.data(), m, n,
                     true, an->grad.data(), k, n, m, true);
            }
        }
        if (bn->requires_grad) {
            if (!trans_b) {
                gemm(an->value.data(), an->shape[0], an->shape[1], !trans_a, self.grad.data(), m, n,
                     false, bn->grad.data(), k, m, n, true);
            } else {
                // dB stored [n, k]: dB = dC^T * A'
                gemm(self.grad.data(), m, n, true, an->value.data(), an->shape[0], an->shape[1],
                     trans_a, bn->grad.data(), n, m, k, true);
            }
        }
    };
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    const bool bias_form = a.rank() == 2 && b.rank() == 1 && b.shape()[0] == a.cols();
    if (!bias_form) require_same_shape(a, b, "add");

    Tensor out = make_op(a.shape(), {a.node(), b.node()});
    auto& ov = out.values();
    const auto& av = a.values();
    const auto& bv = b.values();
    if (bias_form) {
        const std::size_t n = b.size();
        for (std::size_t i = 0; i < av.size(); ++i) ov[i] = av[i] + bv[i % n];
    } else {
        for (std::size_t i = 0; i < av.size(); ++i) ov[i] = av[i] + bv[i];
    }
    check_finite(*out.node(), "add");

    auto an = a.node(), bn = b.node();
    out.node()->backward_fn = [an, bn, bias_form](Node& self) {
        if (an->requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
        if (bn->requires_grad) {
            if (bias_form) {
                const std::size_t n = bn->value.size();
                for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i % n] += self.grad[i];
            } else {
                for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] += self.grad[i];
            }
        }
    };
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = make_op(a.shape(), {a.node(), b.node()});
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = a.values()[i] - b.values()[i];
    check_finite(*out.node(), "sub");
    auto an = a.node(), bn = b.node();
    out.node()->backward_fn = [an, bn](Node& self) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            if (an->requires_grad) an->grad[i] += self.grad[i];
            if (bn->requires_grad) bn->grad[i] -= self.grad[i];
        }
    };
    return out;
}

Tensor multiply(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "multiply");
    Tensor out = make_op(a.shape(), {a.node(), b.node()});
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = a.values()[i] * b.values()[i];
    check_finite(*out.node(), "multiply");
    auto an = a.node(), bn = b.node();
    out.node()->backward_fn = [an, bn](Node& self) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            if (an->requires_grad) an->grad[i] += self.grad[i] * bn->value[i];
            if (bn->requires_grad) bn->grad[i] += self.grad[i] * an->value[i];
        }
    };
    return out;
}

Tensor divide(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "divide");
    Tensor out = make_op(a.shape(), {a.node(), b.node()});
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (b.values()[i] == 0.0) fail(ErrorCode::Numeric, "divide: zero denominator");
        out.values()[i] = a.values()[i] / b.values()[i];
    }
    check_finite(*out.node(), "divide");
    auto an = a.node(), bn = b.node();
    out.node()->backward_fn = [an, bn](Node& self) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double inv = 1.0 / bn->value[i];
            if (an->requires_grad) an->grad[i] += self.grad[i] * inv;
            if (bn->requires_grad) bn->grad[i] -= self.grad[i] * an->value[i] * inv * inv;
        }
    };
    return out;
}

Tensor scale(const Tensor& x, const Tensor& s) {
    if (s.size() != 1) fail(ErrorCode::InvalidArgument, "scale: scalar expected, got " + shape_str(s.shape()));
    Tensor out = make_op(x.shape(), {x.node(), s.node()});
    const double sv = s.values()[0];
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = x.values()[i] * sv;
    check_finite(*out.node(), "scale");
    auto xn = x.node(), sn = s.node();
    out.node()->backward_fn = [xn, sn, sv](Node& self) {
        if (xn->requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) xn->grad[i] += self.grad[i] * sv;
        if (sn->requires_grad) {
            double acc = 0.0;
            for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * xn->value[i];
            sn->grad[0] += acc;
        }
    };
    return out;
}

Tensor scale_const(const Tensor& x, double c) {
    Tensor out = make_op(x.shape(), {x.node()});
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = x.values()[i] * c;
    check_finite(*out.node(), "scale_const");
    auto xn = x.node();
    out.node()->backward_fn = [xn, c](Node& self) {
        if (!xn->requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i) xn->grad[i] += self.grad[i] * c;
    };
    return out;
}

Tensor add_const(const Tensor& x, double c) {
    Tensor out = make_op(x.shape(), {x.node()});
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = x.values()[i] + c;
    check_finite(*out.node(), "add_const");
    auto xn = x.node();
    out.node()->backward_fn = [xn](Node& self) {
        if (!xn->requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i) xn->grad[i] += self.grad[i];
    };
    return out;
}

Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis) {
    Shape out_shape;
    if (a.rank() == 1 && b.rank() == 1 && axis == 0) {
        out_shape = {a.size() + b.size()};
    } else if (a.rank() == 2 && b.rank() == 2 && axis == 0 && a.cols() == b.cols()) {
        out_shape = {a.rows() + b.rows(), a.cols()};
    } else if (a.rank() == 2 && b.rank() == 2 && axis == 1 && a.rows() == b.rows()) {
        out_shape = {a.rows(), a.cols() + b.cols()};
    } else {
        fail(ErrorCode::InvalidArgument, "concat: incompatible " + shape_str(a.shape()) + " and " +
                                             shape_str(b.shape()) + " on axis " + std::to_string(axis));
    }

    Tensor out = make_op(out_shape, {a.node(), b.node()});
    auto& ov = out.values();
    if (axis == 0 || a.rank() == 1) {
        std::copy(a.values().begin(), a.values().end(), ov.begin());
        std::copy(b.values().begin(), b.values().end(), ov.begin() + static_cast<std::ptrdiff_t>(a.size()));
    } else {
        const std::size_t ca = a.cols(), cb = b.cols(), c = ca + cb;
        for (std::size_t i = 0; i < a.rows(); ++i) {
            std::copy_n(a.values().begin() + static_cast<std::ptrdiff_t>(i * ca), ca, ov.begin() + static_cast<std::ptrdiff_t>(i * c));
            std::copy_n(b.values().begin() + static_cast<std::ptrdiff_t>(i * cb), cb, ov.begin() + static_cast<std::ptrdiff_t>(i * c + ca));
        }
    }
    auto an = a.node(), bn = b.node();
    const bool rowwise = (axis == 0 || a.rank() == 1);
    out.node()->backward_fn = [an, bn, rowwise](Node& self) {
        if (rowwise) {
            const std::size_t na = an->value.size();
            if (an->requires_grad)
                for (std::size_t i = 0; i < na; ++i) an->grad[i] += self.grad[i];
            if (bn->requires_grad)
                for (std::size_t i = 0; i < bn->value.size(); ++i) bn->grad[i] += self.grad[na + i];
        } else {
            const std::size_t ca = an->shape[1], cb = bn->shape[1], c = ca + cb;
            for (std::size_t i = 0; i < an->shape[0]; ++i) {
                if (an->requires_grad)
                    for (std::size_t j = 0; j < ca; ++j) an->grad[i * ca + j] += self.grad[i * c + j];
                if (bn->requires_grad)
                    for (std::size_t j = 0; j < cb; ++j) bn->grad[i * cb + j] += self.grad[i * c + ca + j];
            }
        }
    };
    return out;
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
    if (begin >= end) fail(ErrorCode::InvalidArgument, "slice: empty or inverted range");
    if (x.rank() == 1) {
        if (axis != 0 || end > x.size()) fail(ErrorCode::InvalidArgument, "slice: out of range on " + shape_str(x.shape()));
        Tensor out = make_op({end - begin}, {x.node()});
        std::copy(x.values().begin() + static_cast<std::ptrdiff_t>(begin), x.values().begin() + static_cast<std::ptrdiff_t>(end), out.values().begin());
        auto xn = x.node();
        out.node()->backward_fn = [xn, begin](Node& self) {
            if (!xn->requires_grad) return;
            for (std::size_t i = 0; i < self.grad.size(); ++i) xn->grad[begin + i] += self.grad[i];
        };
        return out;
    }
    if (x.rank() != 2 || axis > 1) fail(ErrorCode::InvalidArgument, "slice: unsupported on " + shape_str(x.shape()));
    const std::size_t r = x.rows(), c = x.cols();
    if ((axis == 0 && end > r) || (axis == 1 && end > c))
        fail(ErrorCode::InvalidArgument, "slice: range out of bounds for " + shape_str(x.shape()));

    Shape out_shape = axis == 0 ? Shape{end - begin, c} : Shape{r, end - begin};
    Tensor out = make_op(out_shape, {x.node()});
    auto& ov = out.values();
    if (axis == 0) {
        std::copy_n(x.values().begin() + static_cast<std::ptrdiff_t>(begin * c), (end - begin) * c, ov.begin());
    } else {
        const std::size_t w = end - begin;
        for (std::size_t i = 0; i < r; ++i)
            std::copy_n(x.values().begin() + static_cast<std::ptrdiff_t>(i * c + begin), w, ov.begin() + static_cast<std::ptrdiff_t>(i * w));
    }
    auto xn = x.node();
    out.node()->backward_fn = [xn, axis, begin, c](Node& self) {
        if (!xn->requires_grad) return;
        if (axis == 0) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) xn->grad[begin * c + i] += self.grad[i];
        } else {
            const std::size_t w = self.shape[1];
            for (std::size_t i = 0; i < self.shape[0]; ++i)
                for (std::size_t j = 0; j < w; ++j) xn->grad[i * c + begin + j] += self.grad[i * w + j];
        }
    };
    return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (shape_size(shape) != x.size())
        fail(ErrorCode::InvalidArgument, "reshape: element count mismatch " + shape_str(x.shape()) +
                                             " -> " + shape_str(shape));
    Tensor out = make_op(std::move(shape), {x.node()});
    out.values() = x.values();
    auto xn = x.node();
    out.node()->backward_fn = [xn](Node& self) {
        if (!xn->requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i) xn->grad[i] += self.grad[i];
    };
    return out;
}

namespace {

template <typename Fwd, typename Dfn>
Tensor unary_op(const Tensor& x, const char* name, Fwd fwd, Dfn dval) {
    Tensor out = make_op(x.shape(), {x.node()});
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = fwd(x.values()[i]);
    check_finite(*out.node(), name);
    auto xn = x.node();
    out.node()->backward_fn = [xn, dval](Node& self) {
        if (!xn->requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            xn->grad[i] += self.grad[i] * dval(xn->value[i], self.value[i]);
    };
    return out;
}

} // namespace

Tensor sigmoid(const Tensor& x) {
    return unary_op(
        x, "sigmoid",
        [](double v) { return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh_op(const Tensor& x) {
    return unary_op(x, "tanh", [](double v) { return std::tanh(v); },
                    [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& x) {
    return unary_op(x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
                    [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor log_op(const Tensor& x) {
    for (double v : x.values())
        if (v <= 0.0) fail(ErrorCode::Numeric, "log: non-positive input");
    return unary_op(x, "log", [](double v) { return std::log(v); },
                    [](double v, double) { return 1.0 / v; });
}

namespace {

Tensor softmax_impl(const Tensor& x, const double* key_mask) {
    const bool vec = x.rank() == 1;
    const std::size_t rows = vec ? 1 : x.shape()[0];
    const std::size_t cols = vec ? x.size() : x.shape()[1];

    Tensor out = make_op(x.shape(), {x.node()});
    auto& ov = out.values();
    const auto& xv = x.values();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = xv.data() + r * cols;
        double* orow = ov.data() + r * cols;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < cols; ++j)
            if (!key_mask || key_mask[j] != 0.0) mx = std::max(mx, row[j]);
        if (!std::isfinite(mx)) fail(ErrorCode::InvalidArgument, "softmax: all keys masked");
        double denom = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            if (key_mask && key_mask[j] == 0.0) {
                orow[j] = 0.0;
            } else {
                orow[j] = std::exp(row[j] - mx);
                denom += orow[j];
            }
        }
        for (std::size_t j = 0; j < cols; ++j) orow[j] /= denom;
    }
    check_finite(*out.node(), "softmax");

    auto xn = x.node();
    out.node()->backward_fn = [xn, rows, cols](Node& self) {
        if (!xn->requires_grad) return;
        // dx_i = y_i * (dy_i - sum_j dy_j y_j); masked entries have y = 0.
        for (std::size_t r = 0; r < rows; ++r) {
            const double* y = self.value.data() + r * cols;
            const double* dy = self.grad.data() + r * cols;
            double dot = 0.0;
            for (std::size_t j = 0; j < cols; ++j) dot += dy[j] * y[j];
            for (std::size_t j = 0; j < cols; ++j) xn->grad[r * cols + j] += y[j] * (dy[j] - dot);
        }
    };
    return out;
}

} // namespace

Tensor softmax(const Tensor& x) {
    if (x.rank() > 2) fail(ErrorCode::InvalidArgument, "softmax: rank > 2 unsupported");
    return softmax_impl(x, nullptr);
}

Tensor masked_softmax(const Tensor& x, const Tensor& key_mask) {
    if (x.rank() != 2 && x.rank() != 1) fail(ErrorCode::InvalidArgument, "masked_softmax: needs vector or matrix");
    const std::size_t cols = x.rank() == 1 ? x.size() : x.shape()[1];
    if (key_mask.rank() != 1 || key_mask.size() != cols)
        fail(ErrorCode::InvalidArgument, "masked_softmax: mask " + shape_str(key_mask.shape()) +
                                             " does not cover keys of " + shape_str(x.shape()));
    return softmax_impl(x, key_mask.values().data());
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    if (x.rank() != 2) fail(ErrorCode::InvalidArgument, "layer_norm: needs a matrix");
    const std::size_t rows = x.rows(), cols = x.cols();
    if (gain.rank() != 1 || gain.size() != cols || bias.rank() != 1 || bias.size() != cols)
        fail(ErrorCode::InvalidArgument, "layer_norm: gain/bias must be [" + std::to_string(cols) + "]");

    Tensor out = make_op(x.shape(), {x.node(), gain.node(), bias.node()});
    auto xhat = std::make_shared<std::vector<double>>(rows * cols);
    auto inv_sigma = std::make_shared<std::vector<double>>(rows);
    const auto& xv = x.values();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = xv.data() + r * cols;
        double mu = 0.0;
        for (std::size_t j = 0; j < cols; ++j) mu += row[j];
        mu /= static_cast<double>(cols);
        double var = 0.0;
        for (std::size_t j = 0; j < cols; ++j) var += (row[j] - mu) * (row[j] - mu);
        var /= static_cast<double>(cols);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_sigma)[r] = is;
        for (std::size_t j = 0; j < cols; ++j) {
            const double xh = (row[j] - mu) * is;
            (*xhat)[r * cols + j] = xh;
            out.values()[r * cols + j] = gain.values()[j] * xh + bias.values()[j];
        }
    }
    check_finite(*out.node(), "layer_norm");

    auto xn = x.node(), gn = gain.node(), bn = bias.node();
    out.node()->backward_fn = [xn, gn, bn, xhat, inv_sigma, rows, cols](Node& self) {
        for (std::size_t r = 0; r < rows; ++r) {
            const double* dy = self.grad.data() + r * cols;
            const double* xh = xhat->data() + r * cols;
            if (gn->requires_grad || bn->requires_grad) {
                for (std::size_t j = 0; j < cols; ++j) {
                    if (gn->requires_grad) gn->grad[j] += dy[j] * xh[j];
                    if (bn->requires_grad) bn->grad[j] += dy[j];
                }
            }
            if (xn->requires_grad) {
                const double is = (*inv_sigma)[r];
                double mean_g = 0.0, mean_gx = 0.0;
                for (std::size_t j = 0; j < cols; ++j) {
                    const double g = dy[j] * gn->value[j];
                    mean_g += g;
                    mean_gx += g * xh[j];
                }
                mean_g /= static_cast<double>(cols);
                mean_gx /= static_cast<double>(cols);
                for (std::size_t j = 0; j < cols; ++j) {
                    const double g = dy[j] * gn->value[j];
                    xn->grad[r * cols + j] += is * (g - mean_g - xh[j] * mean_gx);
                }
            }
        }
    };
    return out;
}

Tensor embedding_lookup(const Tensor& table, const std::vector<std::size_t>& ids) {
    if (table.rank() != 2) fail(ErrorCode::InvalidArgument, "embedding_lookup: table must be [vocab, dim]");
    const std::size_t v = table.rows(), d = table.cols();
    for (std::size_t id : ids)
        if (id >= v) fail(ErrorCode::InvalidArgument, "embedding_lookup: index " + std::to_string(id) +
                                                          " out of range for vocab " + std::to_string(v));
    Tensor out = make_op({ids.size(), d}, {table.node()});
    for (std::size_t t = 0; t < ids.size(); ++t)
        std::copy_n(table.values().begin() + static_cast<std::ptrdiff_t>(ids[t] * d), d,
                    out.values().begin() + static_cast<std::ptrdiff_t>(t * d));
    auto tn = table.node();
    auto ids_copy = std::make_shared<std::vector<std::size_t>>(ids);
    out.node()->backward_fn = [tn, ids_copy, d](Node& self) {
        if (!tn->requires_grad) return;
        for (std::size_t t = 0; t < ids_copy->size(); ++t) {
            const std::size_t id = (*ids_copy)[t];
            for (std::size_t j = 0; j < d; ++j) tn->grad[id * d + j] += self.grad[t * d + j];
        }
    };
    return out;
}

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& row_ids) {
    if (x.rank() != 2) fail(ErrorCode::InvalidArgument, "gather_rows: needs a matrix");
    const std::size_t r = x.rows(), c = x.cols();
    for (std::size_t id : row_ids)
        if (id >= r) fail(ErrorCode::InvalidArgument, "gather_rows: row " + std::to_string(id) + " out of range");
    Tensor out = make_op({row_ids.size(), c}, {x.node()});
    for (std::size_t i = 0; i < row_ids.size(); ++i)
        std::copy_n(x.values().begin() + static_cast<std::ptrdiff_t>(row_ids[i] * c), c,
                    out.values().begin() + static_cast<std::ptrdiff_t>(i * c));
    auto xn = x.node();
    auto ids_copy = std::make_shared<std::vector<std::size_t>>(row_ids);
    out.node()->backward_fn = [xn, ids_copy, c](Node& self) {
        if (!xn->requires_grad) return;
        for (std::size_t i = 0; i < ids_copy->size(); ++i)
            for (std::size_t j = 0; j < c; ++j) xn->grad[(*ids_copy)[i] * c + j] += self.grad[i * c + j];
    };
    return out;
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
    if (rows.empty()) fail(ErrorCode::InvalidArgument, "stack_rows: no rows");
    const std::size_t d = rows[0].size();
    std::vector<NodePtr> parents;
    parents.reserve(rows.size());
    for (const auto& row : rows) {
        if (row.rank() != 1 || row.size() != d)
            fail(ErrorCode::InvalidArgument, "stack_rows: rows must all be vectors of length " + std::to_string(d));
        parents.push_back(row.node());
    }
    Tensor out = make_op({rows.size(), d}, parents);
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(rows[i].values().begin(), rows[i].values().end(),
                  out.values().begin() + static_cast<std::ptrdiff_t>(i * d));
    out.node()->backward_fn = [d](Node& self) {
        for (std::size_t i = 0; i < self.parents.size(); ++i) {
            auto& parent = self.parents[i];
            if (!parent->requires_grad) continue;
            for (std::size_t j = 0; j < d; ++j) parent->grad[j] += self.grad[i * d + j];
        }
    };
    return out;
}

Tensor dropout_mask(const Shape& shape, double rate, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) fail(ErrorCode::InvalidArgument, "dropout: rate must be in [0, 1)");
    Tensor mask = Tensor::zeros(shape);
    const double keep_scale = 1.0 / (1.0 - rate);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (auto& m : mask.values()) m = unif(rng) < rate ? 0.0 : keep_scale;
    return mask;
}

Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) fail(ErrorCode::InvalidArgument, "dropout: rate must be in [0, 1)");
    if (!training || rate == 0.0) return x;
    return multiply(x, dropout_mask(x.shape(), rate, rng));
}

Tensor cross_entropy(const Tensor& logits, const std::vector<std::size_t>& targets, Reduction reduction) {
    const bool vec = logits.rank() == 1;
    const std::size_t n = vec ? 1 : logits.shape()[0];
    const std::size_t c = vec ? logits.size() : logits.shape()[1];
    if (targets.size() != n)
        fail(ErrorCode::InvalidArgument, "cross_entropy: " + std::to_string(targets.size()) +
                                             " targets for " + std::to_string(n) + " rows");
    for (std::size_t t : targets)
        if (t >= c) fail(ErrorCode::InvalidArgument, "cross_entropy: target class out of range");

    auto probs = std::make_shared<std::vector<double>>(n * c);
    double total = 0.0;
    const auto& zv = logits.values();
    for (std::size_t r = 0; r < n; ++r) {
        const double* z = zv.data() + r * c;
        double mx = z[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, z[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < c; ++j) denom += std::exp(z[j] - mx);
        const double lse = mx + std::log(denom);
        for (std::size_t j = 0; j < c; ++j) (*probs)[r * c + j] = std::exp(z[j] - mx) / denom;
        total += lse - z[targets[r]];
    }
    const double scale_f = reduction == Reduction::Mean ? 1.0 / static_cast<double>(n) : 1.0;

    Tensor out = make_op({}, {logits.node()});
    out.values()[0] = total * scale_f;
    check_finite(*out.node(), "cross_entropy");

    auto ln = logits.node();
    auto tgt = std::make_shared<std::vector<std::size_t>>(targets);
    out.node()->backward_fn = [ln, tgt, probs, n, c, scale_f](Node& self) {
        if (!ln->requires_grad) return;
        const double up = self.grad[0] * scale_f;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t j = 0; j < c; ++j)
                ln->grad[r * c + j] += up * ((*probs)[r * c + j] - (j == (*tgt)[r] ? 1.0 : 0.0));
    };
    return out;
}

Tensor sum_all(const Tensor& x) {
    Tensor out = make_op({}, {x.node()});
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    out.values()[0] = acc;
    auto xn = x.node();
    out.node()->backward_fn = [xn](Node& self) {
        if (!xn->requires_grad) return;
        for (auto& g : xn->grad) g += self.grad[0];
    };
    return out;
}

Tensor mean_all(const Tensor& x) {
    return scale_const(sum_all(x), 1.0 / static_cast<double>(x.size()));
}

Tensor sum_axis(const Tensor& x, std::size_t axis) {
    if (x.rank() != 2 || axis > 1) fail(ErrorCode::InvalidArgument, "sum_axis: needs a matrix and axis 0/1");
    const std::size_t r = x.rows(), c = x.cols();
    Tensor out = make_op({axis == 0 ? c : r}, {x.node()});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.values()[axis == 0 ? j : i] += x.values()[i * c + j];
    auto xn = x.node();
    out.node()->backward_fn = [xn, axis, r, c](Node& self) {
        if (!xn->requires_grad) return;
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) xn->grad[i * c + j] += self.grad[axis == 0 ? j : i];
    };
    return out;
}

Tensor masked_mean_rows(const Tensor& x, const Tensor& row_mask) {
    if (x.rank() != 2) fail(ErrorCode::InvalidArgument, "masked_mean_rows: needs a matrix");
    const std::size_t r = x.rows(), c = x.cols();
    if (row_mask.rank() != 1 || row_mask.size() != r)
        fail(ErrorCode::InvalidArgument, "masked_mean_rows: mask must be [" + std::to_string(r) + "]");
    double count = 0.0;
    for (double m : row_mask.values()) count += (m != 0.0) ? 1.0 : 0.0;
    if (count == 0.0) fail(ErrorCode::InvalidArgument, "masked_mean_rows: empty mask (all rows excluded)");

    Tensor out = make_op({c}, {x.node()});
    for (std::size_t i = 0; i < r; ++i) {
        if (row_mask.values()[i] == 0.0) continue;
        for (std::size_t j = 0; j < c; ++j) out.values()[j] += x.values()[i * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) out.values()[j] /= count;

    auto xn = x.node();
    auto mask = std::make_shared<std::vector<double>>(row_mask.values());
    out.node()->backward_fn = [xn, mask, r, c, count](Node& self) {
        if (!xn->requires_grad) return;
        for (std::size_t i = 0; i < r; ++i) {
            if ((*mask)[i] == 0.0) continue;
            for (std::size_t j = 0; j < c; ++j) xn->grad[i * c + j] += self.grad[j] / count;
        }
    };
    return out;
}

Tensor mask_mix(const Tensor& row_mask, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mask_mix");
    if (a.rank() != 2) fail(ErrorCode::InvalidArgument, "mask_mix: needs matrices");
    const std::size_t r = a.rows(), c = a.cols();
    if (row_mask.rank() != 1 || row_mask.size() != r)
        fail(ErrorCode::InvalidArgument, "mask_mix: mask must be [" + std::to_string(r) + "]");

    Tensor out = make_op(a.shape(), {a.node(), b.node()});
    for (std::size_t i = 0; i < r; ++i) {
        const double m = row_mask.values()[i];
        for (std::size_t j = 0; j < c; ++j)
            out.values()[i * c + j] = m * a.values()[i * c + j] + (1.0 - m) * b.values()[i * c + j];
    }
    auto an = a.node(), bn = b.node();
    auto mask = std::make_shared<std::vector<double>>(row_mask.values());
    out.node()->backward_fn = [an, bn, mask, r, c](Node& self) {
        for (std::size_t i = 0; i < r; ++i) {
            const double m = (*mask)[i];
            for (std::size_t j = 0; j < c; ++j) {
                if (an->requires_grad) an->grad[i * c + j] += self.grad[i * c + j] * m;
                if (bn->requires_grad) bn->grad[i * c + j] += self.grad[i * c + j] * (1.0 - m);
            }
        }
    };
    return out;
}

} // namespace asn::grad
