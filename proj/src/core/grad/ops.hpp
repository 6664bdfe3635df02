#pragma once

#include <cstdint>
#include <vector>

#include "core/common/rng.hpp"
#include "core/grad/tensor.hpp"

// Differentiable primitives. All ops build graph nodes; gradients flow via
// grad::backward(). Shape rules are strict: no broadcasting beyond the
// row-vector bias form of add() and the explicit scalar form of scale().

namespace asn::grad {

// C = op(A) * op(B); transpose flags avoid materialized transposes.
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);

// Same shape, or a:[m,n] + bias:[n].
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor multiply(const Tensor& a, const Tensor& b); // elementwise, same shape
Tensor divide(const Tensor& a, const Tensor& b);   // elementwise, same shape

Tensor scale(const Tensor& x, const Tensor& s); // s scalar, differentiable in both
Tensor scale_const(const Tensor& x, double c);
Tensor add_const(const Tensor& x, double c);

Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);
Tensor reshape(const Tensor& x, Shape shape); // same element count, grad passes through

Tensor sigmoid(const Tensor& x);
Tensor tanh_op(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor log_op(const Tensor& x); // requires strictly positive input

// Row softmax of a matrix (axis=1) or of a single vector. Rows sum to 1.
Tensor softmax(const Tensor& x);
// Softmax over keys where key_mask[j] != 0; masked columns get exactly 0.
// Equivalent to -inf logits on masked keys. key_mask carries no gradient.
Tensor masked_softmax(const Tensor& x, const Tensor& key_mask);

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

Tensor embedding_lookup(const Tensor& table, const std::vector<std::size_t>& ids);
Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& row_ids);
Tensor stack_rows(const std::vector<Tensor>& rows); // k vectors [d] -> [k,d]

// Train-time inverted dropout: retained entries scaled by 1/(1-rate).
// Identity at inference or rate 0. Mask drawn from rng.
Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng);
// Constant inverted-dropout mask, for variational reuse across time steps.
Tensor dropout_mask(const Shape& shape, double rate, Rng& rng);

enum class Reduction { Mean, Sum };
// Fused log-softmax + NLL on raw logits [n,c] (or [c] with one target).
// d loss / d logits = (softmax - one_hot) / n for Mean.
Tensor cross_entropy(const Tensor& logits, const std::vector<std::size_t>& targets,
                     Reduction reduction = Reduction::Mean);

Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);
Tensor sum_axis(const Tensor& x, std::size_t axis); // matrix -> vector

// Mean over rows t with mask[t] != 0: [t,d] -> [d]. Errors if mask empty.
Tensor masked_mean_rows(const Tensor& x, const Tensor& row_mask);

// Rowwise blend: out[r,:] = m[r]*a[r,:] + (1-m[r])*b[r,:]. Used to freeze
// recurrent state across PAD steps. mask carries no gradient.
Tensor mask_mix(const Tensor& row_mask, const Tensor& a, const Tensor& b);

} // namespace asn::grad
