// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#include "condtune/array.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace condtune::numcore {

namespace {

void require_same_shape(const RealArray& a, const RealArray& b, const char* op) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    shape_to_string(a.shape) + " vs " + shape_to_string(b.shape));
    }
}

}  // namespace

RealArray::RealArray(std::vector<std::size_t> shape_in, double fill)
    : shape(std::move(shape_in)), data(shape_product(shape), fill) {}

RealArray RealArray::scalar(double v) {
    RealArray a({1});
    a.data[0] = v;
    return a;
}

RealArray RealArray::from(std::vector<std::size_t> shape_in, std::vector<double> values) {
    if (shape_product(shape_in) != values.size()) {
        throw std::invalid_argument("RealArray::from: " + shape_to_string(shape_in) +
                                    " does not hold " + std::to_string(values.size()) + " values");
    }
    RealArray a;
    a.shape = std::move(shape_in);
    a.data = std::move(values);
    return a;
}

bool RealArray::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

RealArray k_add(const RealArray& a, const RealArray& b) {
    require_same_shape(a, b, "k_add");
    RealArray out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += b.data[i];
    return out;
}

RealArray k_sub(const RealArray& a, const RealArray& b) {
    require_same_shape(a, b, "k_sub");
    RealArray out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

RealArray k_mul(const RealArray& a, const RealArray& b) {
    require_same_shape(a, b, "k_mul");
    RealArray out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= b.data[i];
    return out;
}

RealArray k_scale(const RealArray& a, double c) {
    RealArray out = a;
    for (double& v : out.data) v *= c;
    return out;
}

RealArray k_tanh(const RealArray& a) {
    RealArray out = a;
    for (double& v : out.data) v = std::tanh(v);
    return out;
}

RealArray k_sigmoid(const RealArray& a) {
    RealArray out = a;
    for (double& v : out.data) {
        if (v >= 0.0) {
            v = 1.0 / (1.0 + std::exp(-v));
        } else {
            const double e = std::exp(v);
            v = e / (1.0 + e);
        }
    }
    return out;
}

RealArray k_exp(const RealArray& a) {
    RealArray out = a;
    for (double& v : out.data) v = std::exp(v);
    return out;
}

RealArray k_log(const RealArray& a) {
    RealArray out = a;
    for (double& v : out.data) {
        if (v <= 0.0) throw std::domain_error("k_log: non-positive input " + std::to_string(v));
        v = std::log(v);
    }
    return out;
}

RealArray k_square(const RealArray& a) {
    RealArray out = a;
    for (double& v : out.data) v *= v;
    return out;
}

RealArray k_max_const(const RealArray& a, double c) {
    RealArray out = a;
    for (double& v : out.data) v = v > c ? v : c;
    return out;
}

double k_sum(const RealArray& a) {
    double s = 0.0;
    for (double v : a.data) s += v;
    return s;
}

double k_mean(const RealArray& a) {
    if (a.size() == 0) throw std::invalid_argument("k_mean: empty array");
    return k_sum(a) / static_cast<double>(a.size());
}

RealArray k_matmul(const RealArray& a, const RealArray& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.shape[1] != b.shape[0]) {
        throw std::invalid_argument("k_matmul: incompatible shapes " + shape_to_string(a.shape) +
                                    " x " + shape_to_string(b.shape));
    }
    const std::size_t m = a.shape[0];
    const std::size_t k = a.shape[1];
    const std::size_t n = b.shape[1];
    RealArray out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a.data[i * k + p];
            if (av == 0.0) continue;
            const double* brow = &b.data[p * n];
            double* orow = &out.data[i * n];
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

RealArray k_slice0(const RealArray& a, std::size_t row_begin, std::size_t row_end) {
    if (a.rank() < 1 || row_begin > row_end || row_end > a.shape[0]) {
        throw std::invalid_argument("k_slice0: range [" + std::to_string(row_begin) + "," +
                                    std::to_string(row_end) + ") out of " +
                                    shape_to_string(a.shape));
    }
    std::vector<std::size_t> shape = a.shape;
    shape[0] = row_end - row_begin;
    const std::size_t stride = a.size() / a.shape[0];
    RealArray out(shape);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = a.data[row_begin * stride + i];
    return out;
}

RealArray k_concat0(const std::vector<const RealArray*>& parts) {
    if (parts.empty()) throw std::invalid_argument("k_concat0: no inputs");
    std::vector<std::size_t> shape = parts[0]->shape;
    std::size_t rows = 0;
    for (const RealArray* p : parts) {
        if (p->rank() != shape.size()) throw std::invalid_argument("k_concat0: rank mismatch");
        for (std::size_t d = 1; d < shape.size(); ++d) {
            if (p->shape[d] != shape[d]) {
                throw std::invalid_argument("k_concat0: trailing shape mismatch");
            }
        }
        rows += p->shape[0];
    }
    shape[0] = rows;
    RealArray out(shape);
    std::size_t at = 0;
    for (const RealArray* p : parts) {
        for (std::size_t i = 0; i < p->size(); ++i) out.data[at + i] = p->data[i];
        at += p->size();
    }
    return out;
}

RealArray k_broadcast0(const RealArray& a, std::size_t n) {
    if (a.rank() < 1 || a.shape[0] != 1) {
        throw std::invalid_argument("k_broadcast0: leading axis must be 1, got " +
                                    shape_to_string(a.shape));
    }
    std::vector<std::size_t> shape = a.shape;
    shape[0] = n;
    RealArray out(shape);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < a.size(); ++i) out.data[r * a.size() + i] = a.data[i];
    }
    return out;
}

RealArray k_conv2d(const RealArray& x, const RealArray& weights, const RealArray& bias) {
    if (x.rank() != 3) throw std::invalid_argument("k_conv2d: input must be (H,W,C)");
    if (weights.rank() != 4 || weights.shape[1] != 3 || weights.shape[2] != 3 ||
        weights.shape[3] != x.shape[2]) {
        throw std::invalid_argument("k_conv2d: weights must be (F,3,3,Cin) matching input");
    }
    const std::size_t filters = weights.shape[0];
    if (bias.rank() != 1 || bias.shape[0] != filters) {
        throw std::invalid_argument("k_conv2d: bias must be (F)");
    }
    const std::size_t h = x.shape[0];
    const std::size_t w = x.shape[1];
    const std::size_t cin = x.shape[2];
    RealArray out({h, w, filters});
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            for (std::size_t f = 0; f < filters; ++f) {
                double acc = bias.data[f];
                for (std::size_t di = 0; di < 3; ++di) {
                    const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i + di) - 1;
                    if (si < 0 || si >= static_cast<std::ptrdiff_t>(h)) continue;
                    for (std::size_t dj = 0; dj < 3; ++dj) {
                        const std::ptrdiff_t sj = static_cast<std::ptrdiff_t>(j + dj) - 1;
                        if (sj < 0 || sj >= static_cast<std::ptrdiff_t>(w)) continue;
                        const double* xp =
                            &x.data[(static_cast<std::size_t>(si) * w + static_cast<std::size_t>(sj)) * cin];
                        const double* wp = &weights.data[((f * 3 + di) * 3 + dj) * cin];
                        for (std::size_t c = 0; c < cin; ++c) acc += xp[c] * wp[c];
                    }
                }
                out.data[(i * w + j) * filters + f] = acc;
            }
        }
    }
    return out;
}

RealArray k_avg_pool2(const RealArray& x) {
    if (x.rank() != 3) throw std::invalid_argument("k_avg_pool2: input must be (H,W,C)");
    const std::size_t h = x.shape[0] / 2;
    const std::size_t w = x.shape[1] / 2;
    const std::size_t c = x.shape[2];
    if (h == 0 || w == 0) throw std::invalid_argument("k_avg_pool2: input too small");
    RealArray out({h, w, c});
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double s = x.data[((2 * i) * x.shape[1] + 2 * j) * c + ch] +
                                 x.data[((2 * i) * x.shape[1] + 2 * j + 1) * c + ch] +
                                 x.data[((2 * i + 1) * x.shape[1] + 2 * j) * c + ch] +
                                 x.data[((2 * i + 1) * x.shape[1] + 2 * j + 1) * c + ch];
                out.data[(i * w + j) * c + ch] = 0.25 * s;
            }
        }
    }
    return out;
}

}  // namespace condtune::numcore
