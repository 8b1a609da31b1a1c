// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "condtune/array.hpp"

namespace condtune::numcore {

/// Handle into a Tape; valid until the owning tape is cleared or destroyed.
struct Value {
    std::size_t id = 0;
};

/// Reverse-mode tape over RealArray nodes. Forward evaluation runs the same
/// kernels as the eager path, so taped and untaped forward passes are
/// bit-identical. backward() accumulates gradients for every node reachable
/// from the root; leaves created with input() are read back via grad().
class Tape {
public:
    Value input(RealArray v);

    const RealArray& value(Value v) const { return nodes_[v.id].value; }
    const RealArray& grad(Value v) const { return nodes_[v.id].grad; }
    std::size_t node_count() const { return nodes_.size(); }
    void clear();

    /// Root must be a scalar (shape (1)); throws std::invalid_argument otherwise.
    void backward(Value root);

    Value add(Value a, Value b);
    Value sub(Value a, Value b);
    Value mul(Value a, Value b);
    Value scale(Value a, double c);
    Value add_const(Value a, double c);
    Value matmul(Value a, Value b);
    Value tanh(Value a);
    Value sigmoid(Value a);
    Value exp(Value a);
    Value log(Value a);
    Value square(Value a);
    Value max_const(Value a, double c);
    Value sum(Value a);
    Value mean(Value a);
    Value slice0(Value a, std::size_t row_begin, std::size_t row_end);
    Value concat0(const std::vector<Value>& parts);
    Value broadcast0(Value a, std::size_t n);
    Value reshape(Value a, std::vector<std::size_t> shape);
    Value conv2d(Value x, const RealArray& weights, const RealArray& bias);
    Value avg_pool2(Value x);

private:
    struct Node {
        RealArray value;
        RealArray grad;
        std::function<void(Tape&, const RealArray&)> back;
    };

    Value push(const char* op, RealArray v, std::function<void(Tape&, const RealArray&)> back);
    void accumulate(std::size_t id, const RealArray& g);

    std::vector<Node> nodes_;
};

}  // namespace condtune::numcore
