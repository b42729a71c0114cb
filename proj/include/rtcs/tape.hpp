#pragma once

#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rtcs/tensor.hpp"

namespace rtcs {

/// Reverse-mode tape. Nodes are appended in forward (topological) order;
/// backward() sweeps them once in reverse and accumulates gradients into
/// per-node buffers. Single-writer: one forward pass, one backward pass.
template <typename T>
class Tape {
 public:
    /// Backward rule: receives the output gradient of the node and the tape,
    /// and accumulates into the parents' gradient buffers.
    using BackwardFn = std::function<void(const Tensor<T>& out_grad, Tape<T>& tape)>;

    int add_leaf(const Shape4& shape) { return add_node(shape, {}, nullptr); }

    int add_node(const Shape4& shape, std::vector<int> parents, BackwardFn back) {
        for (int p : parents) {
            if (p >= static_cast<int>(nodes_.size())) {
                throw std::logic_error("Tape: parent node does not precede child");
            }
        }
        nodes_.push_back(Node{shape, std::move(parents), std::move(back)});
        grads_.emplace_back();
        return static_cast<int>(nodes_.size()) - 1;
    }

    /// Registers `t` as a leaf on this tape and returns a recorded copy.
    Tensor<T> watch(const Tensor<T>& t) {
        Tensor<T> out = t;
        out.node = add_leaf(t.shape);
        return out;
    }

    void accumulate(int node, const Tensor<T>& g) {
        if (node < 0) return;
        Tensor<T>& buf = grad_buffer(node);
        for (std::size_t i = 0; i < buf.data.size(); ++i) buf.data[i] += g.data[i];
    }

    Tensor<T>& grad_buffer(int node) {
        if (grads_[static_cast<std::size_t>(node)].data.empty()) {
            grads_[static_cast<std::size_t>(node)] = Tensor<T>(nodes_[static_cast<std::size_t>(node)].shape);
        }
        return grads_[static_cast<std::size_t>(node)];
    }

    /// Gradient of the last backward() w.r.t. the given node. Zero tensor if
    /// the node was unreachable from the loss.
    const Tensor<T>& grad(int node) {
        if (node < 0 || node >= static_cast<int>(nodes_.size())) {
            throw std::logic_error("Tape::grad: node id out of range");
        }
        return grad_buffer(node);
    }

    void backward(const Tensor<T>& loss) {
        if (loss.node < 0) throw std::logic_error("backward: tensor is not attached to this tape");
        if (loss.numel() != 1) throw std::logic_error("backward: loss must be scalar");
        if (backward_done_) throw std::logic_error("backward: tape already consumed; build a fresh tape per step");
        backward_done_ = true;
        grad_buffer(loss.node).data[0] = T(1);
        for (int i = loss.node; i >= 0; --i) {
            Node& nd = nodes_[static_cast<std::size_t>(i)];
            if (!nd.back) continue;
            Tensor<T>& g = grads_[static_cast<std::size_t>(i)];
            if (g.data.empty()) continue;  // unreachable from the loss
            nd.back(g, *this);
        }
    }

    std::size_t size() const { return nodes_.size(); }

 private:
    struct Node {
        Shape4 shape;
        std::vector<int> parents;
        BackwardFn back;
    };
    std::vector<Node> nodes_;
    std::vector<Tensor<T>> grads_;
    bool backward_done_ = false;
};

}  // namespace rtcs
