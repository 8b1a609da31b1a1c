// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#include "condtune/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace condtune::numcore {

namespace {

// out (m,n) = a (m,k) x b (k,n) variants used only by backward passes.
RealArray matmul_nt(const RealArray& a, const RealArray& b) {
    const std::size_t m = a.shape[0];
    const std::size_t k = a.shape[1];
    const std::size_t n = b.shape[0];
    RealArray out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            const double* ar = &a.data[i * k];
            const double* br = &b.data[j * k];
            for (std::size_t p = 0; p < k; ++p) acc += ar[p] * br[p];
            out.data[i * n + j] = acc;
        }
    }
    return out;
}

RealArray matmul_tn(const RealArray& a, const RealArray& b) {
    const std::size_t k = a.shape[0];
    const std::size_t m = a.shape[1];
    const std::size_t n = b.shape[1];
    RealArray out({m, n});
    for (std::size_t p = 0; p < k; ++p) {
        const double* ar = &a.data[p * m];
        const double* br = &b.data[p * n];
        for (std::size_t i = 0; i < m; ++i) {
            const double av = ar[i];
            if (av == 0.0) continue;
            double* orow = &out.data[i * n];
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * br[j];
        }
    }
    return out;
}

}  // namespace

Value Tape::push(const char* op, RealArray v,
                 std::function<void(Tape&, const RealArray&)> back) {
    if (!v.all_finite()) {
        throw std::runtime_error(std::string("autodiff: non-finite value produced by ") + op);
    }
    nodes_.push_back(Node{std::move(v), RealArray{}, std::move(back)});
    return Value{nodes_.size() - 1};
}

void Tape::accumulate(std::size_t id, const RealArray& g) {
    RealArray& dst = nodes_[id].grad;
    if (dst.size() == 0) {
        dst = g;
        return;
    }
    for (std::size_t i = 0; i < dst.size(); ++i) dst.data[i] += g.data[i];
}

Value Tape::input(RealArray v) { return push("input", std::move(v), nullptr); }

void Tape::clear() { nodes_.clear(); }

void Tape::backward(Value root) {
    if (nodes_[root.id].value.size() != 1) {
        throw std::invalid_argument("Tape::backward: root must be scalar");
    }
    for (Node& n : nodes_) {
        n.grad = RealArray(n.value.shape, 0.0);
    }
    nodes_[root.id].grad.data[0] = 1.0;
    for (std::size_t i = root.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.back && n.grad.size() != 0) n.back(*this, n.grad);
    }
}

Value Tape::add(Value a, Value b) {
    return push("add", k_add(nodes_[a.id].value, nodes_[b.id].value),
                [a, b](Tape& t, const RealArray& g) {
                    t.accumulate(a.id, g);
                    t.accumulate(b.id, g);
                });
}

Value Tape::sub(Value a, Value b) {
    return push("sub", k_sub(nodes_[a.id].value, nodes_[b.id].value),
                [a, b](Tape& t, const RealArray& g) {
                    t.accumulate(a.id, g);
                    t.accumulate(b.id, k_scale(g, -1.0));
                });
}

Value Tape::mul(Value a, Value b) {
    return push("mul", k_mul(nodes_[a.id].value, nodes_[b.id].value),
                [a, b](Tape& t, const RealArray& g) {
                    t.accumulate(a.id, k_mul(g, t.nodes_[b.id].value));
                    t.accumulate(b.id, k_mul(g, t.nodes_[a.id].value));
                });
}

Value Tape::scale(Value a, double c) {
    return push("scale", k_scale(nodes_[a.id].value, c),
                [a, c](Tape& t, const RealArray& g) { t.accumulate(a.id, k_scale(g, c)); });
}

Value Tape::add_const(Value a, double c) {
    RealArray out = nodes_[a.id].value;
    for (double& v : out.data) v += c;
    return push("add_const", std::move(out),
                [a](Tape& t, const RealArray& g) { t.accumulate(a.id, g); });
}

Value Tape::matmul(Value a, Value b) {
    return push("matmul", k_matmul(nodes_[a.id].value, nodes_[b.id].value),
                [a, b](Tape& t, const RealArray& g) {
                    t.accumulate(a.id, matmul_nt(g, t.nodes_[b.id].value));
                    t.accumulate(b.id, matmul_tn(t.nodes_[a.id].value, g));
                });
}

Value Tape::tanh(Value a) {
    Value out = push("tanh", k_tanh(nodes_[a.id].value), nullptr);
    nodes_[out.id].back = [a, out](Tape& t, const RealArray& g) {
        const RealArray& y = t.nodes_[out.id].value;
        RealArray d = g;
        for (std::size_t i = 0; i < d.size(); ++i) d.data[i] *= 1.0 - y.data[i] * y.data[i];
        t.accumulate(a.id, d);
    };
    return out;
}

Value Tape::sigmoid(Value a) {
    Value out = push("sigmoid", k_sigmoid(nodes_[a.id].value), nullptr);
    nodes_[out.id].back = [a, out](Tape& t, const RealArray& g) {
        const RealArray& y = t.nodes_[out.id].value;
        RealArray d = g;
        for (std::size_t i = 0; i < d.size(); ++i) d.data[i] *= y.data[i] * (1.0 - y.data[i]);
        t.accumulate(a.id, d);
    };
    return out;
}

Value Tape::exp(Value a) {
    Value out = push("exp", k_exp(nodes_[a.id].value), nullptr);
    nodes_[out.id].back = [a, out](Tape& t, const RealArray& g) {
        t.accumulate(a.id, k_mul(g, t.nodes_[out.id].value));
    };
    return out;
}

Value Tape::log(Value a) {
    return push("log", k_log(nodes_[a.id].value), [a](Tape& t, const RealArray& g) {
        const RealArray& x = t.nodes_[a.id].value;
        RealArray d = g;
        for (std::size_t i = 0; i < d.size(); ++i) d.data[i] /= x.data[i];
        t.accumulate(a.id, d);
    });
}

Value Tape::square(Value a) {
    return push("square", k_square(nodes_[a.id].value), [a](Tape& t, const RealArray& g) {
        const RealArray& x = t.nodes_[a.id].value;
        RealArray d = g;
        for (std::size_t i = 0; i < d.size(); ++i) d.data[i] *= 2.0 * x.data[i];
        t.accumulate(a.id, d);
    });
}

Value Tape::max_const(Value a, double c) {
    return push("max_const", k_max_const(nodes_[a.id].value, c), [a, c](Tape& t, const RealArray& g) {
        const RealArray& x = t.nodes_[a.id].value;
        RealArray d = g;
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (x.data[i] <= c) d.data[i] = 0.0;
        }
        t.accumulate(a.id, d);
    });
}

Value Tape::sum(Value a) {
    return push("sum", RealArray::scalar(k_sum(nodes_[a.id].value)),
                [a](Tape& t, const RealArray& g) {
                    RealArray d(t.nodes_[a.id].value.shape, g.data[0]);
                    t.accumulate(a.id, d);
                });
}

Value Tape::mean(Value a) {
    return push("mean", RealArray::scalar(k_mean(nodes_[a.id].value)),
                [a](Tape& t, const RealArray& g) {
                    const double n = static_cast<double>(t.nodes_[a.id].value.size());
                    RealArray d(t.nodes_[a.id].value.shape, g.data[0] / n);
                    t.accumulate(a.id, d);
                });
}

Value Tape::slice0(Value a, std::size_t row_begin, std::size_t row_end) {
    return push("slice0", k_slice0(nodes_[a.id].value, row_begin, row_end),
                [a, row_begin](Tape& t, const RealArray& g) {
                    const RealArray& x = t.nodes_[a.id].value;
                    const std::size_t stride = x.size() / x.shape[0];
                    RealArray d(x.shape, 0.0);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        d.data[row_begin * stride + i] = g.data[i];
                    }
                    t.accumulate(a.id, d);
                });
}

Value Tape::concat0(const std::vector<Value>& parts) {
    std::vector<const RealArray*> vs;
    vs.reserve(parts.size());
    for (Value p : parts) vs.push_back(&nodes_[p.id].value);
    return push("concat0", k_concat0(vs), [parts](Tape& t, const RealArray& g) {
        std::size_t at = 0;
        for (Value p : parts) {
            const RealArray& x = t.nodes_[p.id].value;
            RealArray d(x.shape, 0.0);
            for (std::size_t i = 0; i < d.size(); ++i) d.data[i] = g.data[at + i];
            at += d.size();
            t.accumulate(p.id, d);
        }
    });
}

Value Tape::broadcast0(Value a, std::size_t n) {
    return push("broadcast0", k_broadcast0(nodes_[a.id].value, n), [a, n](Tape& t, const RealArray& g) {
        const RealArray& x = t.nodes_[a.id].value;
        RealArray d(x.shape, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t i = 0; i < d.size(); ++i) d.data[i] += g.data[r * d.size() + i];
        }
        t.accumulate(a.id, d);
    });
}

Value Tape::reshape(Value a, std::vector<std::size_t> shape) {
    const RealArray& x = nodes_[a.id].value;
    if (shape_product(shape) != x.size()) {
        throw std::invalid_argument("Tape::reshape: element count mismatch");
    }
    RealArray out;
    out.shape = std::move(shape);
    out.data = x.data;
    return push("reshape", std::move(out), [a](Tape& t, const RealArray& g) {
        RealArray d;
        d.shape = t.nodes_[a.id].value.shape;
        d.data = g.data;
        t.accumulate(a.id, d);
    });
}

Value Tape::conv2d(Value x, const RealArray& weights, const RealArray& bias) {
    RealArray w = weights;
    return push("conv2d", k_conv2d(nodes_[x.id].value, weights, bias),
                [x, w](Tape& t, const RealArray& g) {
                    const RealArray& in = t.nodes_[x.id].value;
                    const std::size_t h = in.shape[0];
                    const std::size_t wd = in.shape[1];
                    const std::size_t cin = in.shape[2];
                    const std::size_t filters = w.shape[0];
                    RealArray d(in.shape, 0.0);
                    for (std::size_t i = 0; i < h; ++i) {
                        for (std::size_t j = 0; j < wd; ++j) {
                            for (std::size_t f = 0; f < filters; ++f) {
                                const double gv = g.data[(i * wd + j) * filters + f];
                                if (gv == 0.0) continue;
                                for (std::size_t di = 0; di < 3; ++di) {
                                    const std::ptrdiff_t si =
                                        static_cast<std::ptrdiff_t>(i + di) - 1;
                                    if (si < 0 || si >= static_cast<std::ptrdiff_t>(h)) continue;
                                    for (std::size_t dj = 0; dj < 3; ++dj) {
                                        const std::ptrdiff_t sj =
                                            static_cast<std::ptrdiff_t>(j + dj) - 1;
                                        if (sj < 0 || sj >= static_cast<std::ptrdiff_t>(wd)) {
                                            continue;
                                        }
                                        double* dp =
                                            &d.data[(static_cast<std::size_t>(si) * wd +
                                                     static_cast<std::size_t>(sj)) *
                                                    cin];
                                        const double* wp = &w.data[((f * 3 + di) * 3 + dj) * cin];
                                        for (std::size_t c = 0; c < cin; ++c) {
                                            dp[c] += gv * wp[c];
                                        }
                                    }
                                }
                            }
                        }
                    }
                    t.accumulate(x.id, d);
                });
}

Value Tape::avg_pool2(Value x) {
    return push("avg_pool2", k_avg_pool2(nodes_[x.id].value), [x](Tape& t, const RealArray& g) {
        const RealArray& in = t.nodes_[x.id].value;
        const std::size_t ho = g.shape[0];
        const std::size_t wo = g.shape[1];
        const std::size_t c = g.shape[2];
        RealArray d(in.shape, 0.0);
        for (std::size_t i = 0; i < ho; ++i) {
            for (std::size_t j = 0; j < wo; ++j) {
                for (std::size_t ch = 0; ch < c; ++ch) {
                    const double gv = 0.25 * g.data[(i * wo + j) * c + ch];
                    d.data[((2 * i) * in.shape[1] + 2 * j) * c + ch] += gv;
                    d.data[((2 * i) * in.shape[1] + 2 * j + 1) * c + ch] += gv;
                    d.data[((2 * i + 1) * in.shape[1] + 2 * j) * c + ch] += gv;
                    d.data[((2 * i + 1) * in.shape[1] + 2 * j + 1) * c + ch] += gv;
                }
            }
        }
        t.accumulate(x.id, d);
    });
}

}  // namespace condtune::numcore
