// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace condtune::numcore {

/// Dense row-major array of 64-bit reals. All numeric state in the project
/// lives in these; shapes are explicit and checked at operation boundaries.
struct RealArray {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    RealArray() = default;
    explicit RealArray(std::vector<std::size_t> shape_in, double fill = 0.0);

    static RealArray scalar(double v);
    static RealArray from(std::vector<std::size_t> shape_in, std::vector<double> values);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    bool same_shape(const RealArray& other) const { return shape == other.shape; }
    bool all_finite() const;

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
};

std::size_t shape_product(const std::vector<std::size_t>& shape);
std::string shape_to_string(const std::vector<std::size_t>& shape);

// Elementwise / reduction kernels shared by the eager path and the tape.
// Shape mismatches throw std::invalid_argument.
RealArray k_add(const RealArray& a, const RealArray& b);
RealArray k_sub(const RealArray& a, const RealArray& b);
RealArray k_mul(const RealArray& a, const RealArray& b);
RealArray k_scale(const RealArray& a, double c);
RealArray k_tanh(const RealArray& a);
RealArray k_sigmoid(const RealArray& a);
RealArray k_exp(const RealArray& a);
RealArray k_log(const RealArray& a);
RealArray k_square(const RealArray& a);
RealArray k_max_const(const RealArray& a, double c);
double k_sum(const RealArray& a);
double k_mean(const RealArray& a);

/// (m,k) x (k,n) -> (m,n), plain triple loop, deterministic accumulation order.
RealArray k_matmul(const RealArray& a, const RealArray& b);

/// Rows [row_begin, row_end) along axis 0.
RealArray k_slice0(const RealArray& a, std::size_t row_begin, std::size_t row_end);
RealArray k_concat0(const std::vector<const RealArray*>& parts);

/// Repeats a scalar or a (1, rest...) block n times along axis 0.
RealArray k_broadcast0(const RealArray& a, std::size_t n);

/// 3x3 zero-padded convolution over an (H, W, Cin) frame with a fixed
/// (F, 3, 3, Cin) kernel bank and (F) bias; output is (H, W, F).
RealArray k_conv2d(const RealArray& x, const RealArray& weights, const RealArray& bias);

/// 2x2 stride-2 average pool over (H, W, C); odd trailing row/col dropped.
RealArray k_avg_pool2(const RealArray& x);

}  // namespace condtune::numcore
