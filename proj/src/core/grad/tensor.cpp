#include "core/grad/tensor.hpp"

#include <cassert>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "core/common/error.hpp"

namespace asn::grad {

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream oss;
    oss << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) oss << "x";
        oss << shape[i];
    }
    oss << "]";
    return oss.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double fill, bool requires_grad) {
    auto node = std::make_shared<Node>();
    node->value.assign(shape_size(shape), fill);
    node->shape = std::move(shape);
    node->requires_grad = requires_grad;
    return Tensor(node);
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_size(shape) != values.size())
        fail(ErrorCode::InvalidArgument,
             "tensor values length " + std::to_string(values.size()) +
                 " does not match shape " + shape_str(shape));
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(node);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from_values({}, {v}, requires_grad);
}

std::size_t Tensor::rows() const {
    if (rank() != 2) fail(ErrorCode::InvalidArgument, "rows() on non-matrix " + shape_str(shape()));
    return node_->shape[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) fail(ErrorCode::InvalidArgument, "cols() on non-matrix " + shape_str(shape()));
    return node_->shape[1];
}

double Tensor::item() const {
    if (size() != 1) fail(ErrorCode::InvalidArgument, "item() on non-scalar " + shape_str(shape()));
    return node_->value[0];
}

std::vector<double>& Tensor::grad() {
    node_->ensure_grad();
    return node_->grad;
}

const std::vector<double>& Tensor::grad() const {
    node_->ensure_grad();
    return node_->grad;
}

void Tensor::zero_grad() {
    node_->grad.assign(node_->value.size(), 0.0);
}

void check_finite(const Node& node, const char* op_name) {
#ifdef NDEBUG
    (void)node;
    (void)op_name;
#else
    for (double v : node.value) {
        assert(std::isfinite(v) && "non-finite tensor value");
        if (!std::isfinite(v)) {
            fail(ErrorCode::Numeric, std::string("non-finite value produced by ") + op_name);
        }
    }
#endif
}

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1)
        fail(ErrorCode::InvalidArgument, "backward() requires a scalar loss");

    // Iterative post-order DFS; reverse of the resulting order is a valid
    // reverse-topological visit (each node exactly once).
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    struct Frame {
        Node* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({loss.node().get(), 0});
    visited.insert(loss.node().get());
    while (!stack.empty()) {
        Frame& top = stack.back();
        if (top.next_parent < top.node->parents.size()) {
            Node* parent = top.node->parents[top.next_parent++].get();
            if (parent->requires_grad && !visited.count(parent)) {
                visited.insert(parent);
                stack.push_back({parent, 0});
            }
        } else {
            order.push_back(top.node);
            stack.pop_back();
        }
    }

    // Interior grads are per-sweep scratch; only leaves accumulate across
    // sweeps (so backward-ing the same loss twice doubles leaf gradients).
    for (Node* node : order) {
        if (node->backward_fn) node->grad.assign(node->value.size(), 0.0);
    }

    Node* root = loss.node().get();
    root->ensure_grad();
    root->grad[0] += 1.0;

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (node->backward_fn) {
            node->ensure_grad();
            for (auto& parent : node->parents)
                if (parent->requires_grad) parent->ensure_grad();
            node->backward_fn(*node);
        }
    }
}

} // namespace asn::grad
