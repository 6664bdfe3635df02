#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace asn::grad {

// Extents of a dense tensor. Rank 0 = scalar, rank 1 = vector, rank 2 =
// matrix. Nothing in the toolkit needs more.
using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad; // lazily allocated, same length as value
    bool requires_grad = false;
    std::string name; // nonempty only for named parameters

    std::vector<std::shared_ptr<Node>> parents;
    // Pulls this node's grad into the parents' grad buffers. Null for leaves.
    std::function<void(Node&)> backward_fn;

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

// Value-semantic handle onto a graph node. Copies share the node.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double fill, bool requires_grad = false);
    static Tensor from_values(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t size() const { return node_->value.size(); }
    std::size_t rows() const;
    std::size_t cols() const;

    std::vector<double>& values() { return node_->value; }
    const std::vector<double>& values() const { return node_->value; }
    double item() const;

    std::vector<double>& grad();
    const std::vector<double>& grad() const;
    void zero_grad();

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool v) { node_->requires_grad = v; }
    const std::string& name() const { return node_->name; }
    void set_name(std::string name) { node_->name = std::move(name); }

    std::shared_ptr<Node> node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

// Reverse-mode sweep from a scalar loss. Gradients accumulate additively
// into every reachable node with requires_grad; calling twice without
// zeroing doubles them.
void backward(const Tensor& loss);

// Debug-build guard: asserts all entries finite. No-op under NDEBUG.
void check_finite(const Node& node, const char* op_name);

} // namespace asn::grad
