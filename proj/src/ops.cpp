// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpnet/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cpnet {

namespace {

int g_threads = 1;

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRow = Eigen::Map<RowMat<T>>;
template <typename T>
using MapRowC = Eigen::Map<const RowMat<T>>;

template <typename T>
std::vector<T>& tl_scratch(int slot) {
    thread_local std::vector<T> buf[2];
    return buf[slot];
}

template <typename T>
Var<T> at(Tape<T>& t, int id) {
    return Var<T>{&t, id};
}

template <typename T>
bool wants_grad(Tape<T>& t, int id) {
    return id >= 0 && t.requires_grad(at(t, id));
}

struct ConvDims {
    int N, Ci, H, W, Co, kh, kw, stride, pad, OH, OW;
    std::int64_t R() const { return static_cast<std::int64_t>(Ci) * kh * kw; }
    std::int64_t P() const { return static_cast<std::int64_t>(OH) * OW; }
    bool unit() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

// Column buffer is [Ci*kh*kw x OH*OW], row-major.
template <typename T>
void im2col(const T* x, const ConvDims& d, T* col) {
    const std::int64_t P = d.P();
    for (int ci = 0; ci < d.Ci; ++ci) {
        const T* xc = x + static_cast<std::int64_t>(ci) * d.H * d.W;
        for (int ki = 0; ki < d.kh; ++ki) {
            for (int kj = 0; kj < d.kw; ++kj) {
                T* row = col + ((static_cast<std::int64_t>(ci) * d.kh + ki) * d.kw + kj) * P;
                for (int oh = 0; oh < d.OH; ++oh) {
                    const int ih = oh * d.stride - d.pad + ki;
                    T* dst = row + static_cast<std::int64_t>(oh) * d.OW;
                    if (ih < 0 || ih >= d.H) {
                        std::fill(dst, dst + d.OW, T(0));
                        continue;
                    }
                    const T* src = xc + static_cast<std::int64_t>(ih) * d.W;
                    for (int ow = 0; ow < d.OW; ++ow) {
                        const int iw = ow * d.stride - d.pad + kj;
                        dst[ow] = (iw >= 0 && iw < d.W) ? src[iw] : T(0);
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const T* col, const ConvDims& d, T* dx) {
    const std::int64_t P = d.P();
    for (int ci = 0; ci < d.Ci; ++ci) {
        T* xc = dx + static_cast<std::int64_t>(ci) * d.H * d.W;
        for (int ki = 0; ki < d.kh; ++ki) {
            for (int kj = 0; kj < d.kw; ++kj) {
                const T* row = col + ((static_cast<std::int64_t>(ci) * d.kh + ki) * d.kw + kj) * P;
                for (int oh = 0; oh < d.OH; ++oh) {
                    const int ih = oh * d.stride - d.pad + ki;
                    if (ih < 0 || ih >= d.H) continue;
                    const T* src = row + static_cast<std::int64_t>(oh) * d.OW;
                    T* dst = xc + static_cast<std::int64_t>(ih) * d.W;
                    for (int ow = 0; ow < d.OW; ++ow) {
                        const int iw = ow * d.stride - d.pad + kj;
                        if (iw >= 0 && iw < d.W) dst[iw] += src[ow];
                    }
                }
            }
        }
    }
}

// Shared skeleton for elementwise unary ops: fn maps x to y, dfn maps
// (x, y, gy) to the increment of dx.
template <typename T, typename F, typename DF>
Var<T> unary_op(Var<T> x, F fn, DF dfn) {
    const Tensor<T>& xv = x.val();
    Tensor<T> out(xv.shape());
    const T* xp = xv.data();
    T* op = out.data();
    const std::int64_t n = xv.numel();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) op[i] = fn(xp[i]);

    Tape<T>* tp = x.tape;
    const int xid = x.id;
    if (!tp->requires_grad(x)) return tp->push(std::move(out), false, nullptr);
    return tp->push(std::move(out), true, [xid, dfn](Tape<T>& t, int self) {
        if (!wants_grad(t, xid)) return;
        const Tensor<T>& g = t.grad_of(at(t, self));
        const Tensor<T>& yv = t.value_of(at(t, self));
        const Tensor<T>& xv2 = t.value_of(at(t, xid));
        Tensor<T>& dx = t.grad_buf(xid);
        const T* gp = g.data();
        const T* yp = yv.data();
        const T* xp2 = xv2.data();
        T* dp = dx.data();
        const std::int64_t n2 = xv2.numel();
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n2; ++i) dp[i] += dfn(xp2[i], yp[i], gp[i]);
    });
}

} // namespace

void set_num_threads(int n) {
    g_threads = std::max(1, n);
#ifdef _OPENMP
    omp_set_num_threads(g_threads);
#endif
    Eigen::setNbThreads(1);
}

int num_threads() { return g_threads; }

template <typename T>
Var<T> conv2d(Var<T> x, Var<T> w, Var<T> b, int stride, int pad) {
    const Tensor<T>& xv = x.val();
    const Tensor<T>& wv = w.val();
    if (xv.rank() != 4 || wv.rank() != 4) throw ShapeError("conv2d expects rank-4 input and weight");
    if (stride < 1) throw ShapeError("conv2d stride must be >= 1");
    if (pad < 0) throw ShapeError("conv2d pad must be >= 0");
    ConvDims d;
    d.N = xv.dim(0);
    d.Ci = xv.dim(1);
    d.H = xv.dim(2);
    d.W = xv.dim(3);
    d.Co = wv.dim(0);
    d.kh = wv.dim(2);
    d.kw = wv.dim(3);
    d.stride = stride;
    d.pad = pad;
    if (wv.dim(1) != d.Ci) {
        throw ShapeError("conv2d channel mismatch: input " + shape_str(xv.shape()) +
                         " vs weight " + shape_str(wv.shape()));
    }
    d.OH = (d.H + 2 * pad - d.kh) / stride + 1;
    d.OW = (d.W + 2 * pad - d.kw) / stride + 1;
    if (d.H + 2 * pad < d.kh || d.W + 2 * pad < d.kw) throw ShapeError("conv2d kernel larger than padded input");
    const bool has_bias = b.defined();
    if (has_bias && (b.val().rank() != 1 || b.val().dim(0) != d.Co)) {
        throw ShapeError("conv2d bias must be [Co]");
    }

    const std::int64_t R = d.R(), P = d.P();
    Tensor<T> out({d.N, d.Co, d.OH, d.OW});
    const T* bp = has_bias ? b.val().data() : nullptr;

#pragma omp parallel for schedule(static)
    for (int n = 0; n < d.N; ++n) {
        const T* xn = xv.data() + static_cast<std::int64_t>(n) * d.Ci * d.H * d.W;
        T* on = out.data() + static_cast<std::int64_t>(n) * d.Co * P;
        const T* colp = xn;
        if (!d.unit()) {
            auto& buf = tl_scratch<T>(0);
            buf.resize(static_cast<std::size_t>(R * P));
            im2col(xn, d, buf.data());
            colp = buf.data();
        }
        MapRow<T>(on, d.Co, P).noalias() =
            MapRowC<T>(wv.data(), d.Co, R) * MapRowC<T>(colp, R, P);
        if (bp) {
            for (int c = 0; c < d.Co; ++c) {
                T* row = on + static_cast<std::int64_t>(c) * P;
                const T bc = bp[c];
                for (std::int64_t p = 0; p < P; ++p) row[p] += bc;
            }
        }
    }

    Tape<T>* tp = x.tape;
    const int xid = x.id, wid = w.id, bid = has_bias ? b.id : -1;
    const bool rg = tp->requires_grad(x) || tp->requires_grad(w) || (has_bias && tp->requires_grad(b));
    if (!rg) return tp->push(std::move(out), false, nullptr);

    return tp->push(std::move(out), true, [xid, wid, bid, d](Tape<T>& t, int self) {
        const Tensor<T>& go = t.grad_of(at(t, self));
        const Tensor<T>& xv2 = t.value_of(at(t, xid));
        const Tensor<T>& wv2 = t.value_of(at(t, wid));
        const std::int64_t R = d.R(), P = d.P();
        const std::int64_t xsz = static_cast<std::int64_t>(d.Ci) * d.H * d.W;

        if (wants_grad(t, xid)) {
            Tensor<T>& dx = t.grad_buf(xid);
#pragma omp parallel for schedule(static)
            for (int n = 0; n < d.N; ++n) {
                const T* gon = go.data() + static_cast<std::int64_t>(n) * d.Co * P;
                T* dxn = dx.data() + static_cast<std::int64_t>(n) * xsz;
                if (d.unit()) {
                    MapRow<T>(dxn, R, P).noalias() +=
                        MapRowC<T>(wv2.data(), d.Co, R).transpose() * MapRowC<T>(gon, d.Co, P);
                } else {
                    auto& buf = tl_scratch<T>(1);
                    buf.resize(static_cast<std::size_t>(R * P));
                    MapRow<T>(buf.data(), R, P).noalias() =
                        MapRowC<T>(wv2.data(), d.Co, R).transpose() * MapRowC<T>(gon, d.Co, P);
                    col2im_add(buf.data(), d, dxn);
                }
            }
        }
        if (wants_grad(t, wid)) {
            // Sequential over samples so the accumulation order is fixed.
            Tensor<T>& dw = t.grad_buf(wid);
            for (int n = 0; n < d.N; ++n) {
                const T* xn = xv2.data() + static_cast<std::int64_t>(n) * xsz;
                const T* gon = go.data() + static_cast<std::int64_t>(n) * d.Co * P;
                const T* colp = xn;
                if (!d.unit()) {
                    auto& buf = tl_scratch<T>(0);
                    buf.resize(static_cast<std::size_t>(R * P));
                    im2col(xn, d, buf.data());
                    colp = buf.data();
                }
                MapRow<T>(dw.data(), d.Co, R).noalias() +=
                    MapRowC<T>(gon, d.Co, P) * MapRowC<T>(colp, R, P).transpose();
            }
        }
        if (wants_grad(t, bid)) {
            Tensor<T>& db = t.grad_buf(bid);
            for (int c = 0; c < d.Co; ++c) {
                double acc = 0.0;
                for (int n = 0; n < d.N; ++n) {
                    const T* row = go.data() + (static_cast<std::int64_t>(n) * d.Co + c) * P;
                    for (std::int64_t p = 0; p < P; ++p) acc += static_cast<double>(row[p]);
                }
                db[c] += static_cast<T>(acc);
            }
        }
    });
}

template <typename T>
Var<T> linear(Var<T> x, Var<T> w, Var<T> b) {
    const Tensor<T>& xv = x.val();
    const Tensor<T>& wv = w.val();
    if (xv.rank() != 2 || wv.rank() != 2) throw ShapeError("linear expects rank-2 input and weight");
    const int N = xv.dim(0), D = xv.dim(1), O = wv.dim(0);
    if (wv.dim(1) != D) {
        throw ShapeError("linear dimension mismatch: input " + shape_str(xv.shape()) +
                         " vs weight " + shape_str(wv.shape()));
    }
    const bool has_bias = b.defined();
    if (has_bias && (b.val().rank() != 1 || b.val().dim(0) != O)) throw ShapeError("linear bias must be [O]");

    Tensor<T> out({N, O});
    MapRow<T>(out.data(), N, O).noalias() =
        MapRowC<T>(xv.data(), N, D) * MapRowC<T>(wv.data(), O, D).transpose();
    if (has_bias) {
        const T* bp = b.val().data();
        for (int n = 0; n < N; ++n) {
            T* row = out.data() + static_cast<std::int64_t>(n) * O;
            for (int o = 0; o < O; ++o) row[o] += bp[o];
        }
    }

    Tape<T>* tp = x.tape;
    const int xid = x.id, wid = w.id, bid = has_bias ? b.id : -1;
    const bool rg = tp->requires_grad(x) || tp->requires_grad(w) || (has_bias && tp->requires_grad(b));
    if (!rg) return tp->push(std::move(out), false, nullptr);

    return tp->push(std::move(out), true, [xid, wid, bid, N, D, O](Tape<T>& t, int self) {
        const Tensor<T>& go = t.grad_of(at(t, self));
        if (wants_grad(t, xid)) {
            const Tensor<T>& wv2 = t.value_of(at(t, wid));
            Tensor<T>& dx = t.grad_buf(xid);
            MapRow<T>(dx.data(), N, D).noalias() +=
                MapRowC<T>(go.data(), N, O) * MapRowC<T>(wv2.data(), O, D);
        }
        if (wants_grad(t, wid)) {
            const Tensor<T>& xv2 = t.value_of(at(t, xid));
            Tensor<T>& dw = t.grad_buf(wid);
            MapRow<T>(dw.data(), O, D).noalias() +=
                MapRowC<T>(go.data(), N, O).transpose() * MapRowC<T>(xv2.data(), N, D);
        }
        if (wants_grad(t, bid)) {
            Tensor<T>& db = t.grad_buf(bid);
            for (int o = 0; o < O; ++o) {
                double acc = 0.0;
                for (int n = 0; n < N; ++n) acc += static_cast<double>(go[static_cast<std::int64_t>(n) * O + o]);
                db[o] += static_cast<T>(acc);
            }
        }
    });
}

template <typename T>
Var<T> instance_norm(Var<T> x, Var<T> gamma, Var<T> beta, T eps) {
    const Tensor<T>& xv = x.val();
    if (xv.rank() != 4) throw ShapeError("instance_norm expects rank-4 input");
    const int N = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
    const std::int64_t HW = static_cast<std::int64_t>(H) * W;
    if (HW == 0) throw ShapeError("instance_norm on empty spatial extent");
    if (gamma.val().rank() != 1 || gamma.val().dim(0) != C) throw ShapeError("instance_norm gamma must be [C]");
    if (beta.val().rank() != 1 || beta.val().dim(0) != C) throw ShapeError("instance_norm beta must be [C]");

    Tensor<T> out(xv.shape());
    std::vector<double> mean(static_cast<std::size_t>(N) * C), inv(static_cast<std::size_t>(N) * C);
    const T* gp = gamma.val().data();
    const T* bp = beta.val().data();

#pragma omp parallel for schedule(static)
    for (int nc = 0; nc < N * C; ++nc) {
        const T* xp = xv.data() + static_cast<std::int64_t>(nc) * HW;
        T* op = out.data() + static_cast<std::int64_t>(nc) * HW;
        double s = 0.0, s2 = 0.0;
        for (std::int64_t i = 0; i < HW; ++i) {
            const double v = static_cast<double>(xp[i]);
            s += v;
            s2 += v * v;
        }
        const double mu = s / static_cast<double>(HW);
        const double var = std::max(0.0, s2 / static_cast<double>(HW) - mu * mu);
        const double iv = 1.0 / std::sqrt(var + static_cast<double>(eps));
        mean[static_cast<std::size_t>(nc)] = mu;
        inv[static_cast<std::size_t>(nc)] = iv;
        const int c = nc % C;
        const double g = static_cast<double>(gp[c]), b = static_cast<double>(bp[c]);
        for (std::int64_t i = 0; i < HW; ++i) {
            op[i] = static_cast<T>((static_cast<double>(xp[i]) - mu) * iv * g + b);
        }
    }

    Tape<T>* tp = x.tape;
    const int xid = x.id, gid = gamma.id, bid = beta.id;
    const bool rg = tp->requires_grad(x) || tp->requires_grad(gamma) || tp->requires_grad(beta);
    if (!rg) return tp->push(std::move(out), false, nullptr);

    return tp->push(std::move(out), true,
                    [xid, gid, bid, N, C, HW, mean = std::move(mean), inv = std::move(inv)](Tape<T>& t, int self) {
        const Tensor<T>& go = t.grad_of(at(t, self));
        const Tensor<T>& xv2 = t.value_of(at(t, xid));
        const Tensor<T>& gv = t.value_of(at(t, gid));
        const bool gx = wants_grad(t, xid);
        const bool gg = wants_grad(t, gid);
        const bool gb = wants_grad(t, bid);
        // Per-(n,c) partial sums; reduced sequentially afterwards so the
        // result does not depend on thread scheduling.
        std::vector<double> ps1(static_cast<std::size_t>(N) * C), ps2(static_cast<std::size_t>(N) * C);
        Tensor<T>* dx = gx ? &t.grad_buf(xid) : nullptr;

#pragma omp parallel for schedule(static)
        for (int nc = 0; nc < N * C; ++nc) {
            const T* xp = xv2.data() + static_cast<std::int64_t>(nc) * HW;
            const T* gop = go.data() + static_cast<std::int64_t>(nc) * HW;
            const double mu = mean[static_cast<std::size_t>(nc)];
            const double iv = inv[static_cast<std::size_t>(nc)];
            double s1 = 0.0, s2 = 0.0;
            for (std::int64_t i = 0; i < HW; ++i) {
                const double xh = (static_cast<double>(xp[i]) - mu) * iv;
                const double g = static_cast<double>(gop[i]);
                s1 += g;
                s2 += g * xh;
            }
            ps1[static_cast<std::size_t>(nc)] = s1;
            ps2[static_cast<std::size_t>(nc)] = s2;
            if (dx) {
                const double gam = static_cast<double>(gv[nc % C]);
                const double m1 = s1 / static_cast<double>(HW);
                const double m2 = s2 / static_cast<double>(HW);
                T* dxp = dx->data() + static_cast<std::int64_t>(nc) * HW;
                for (std::int64_t i = 0; i < HW; ++i) {
                    const double xh = (static_cast<double>(xp[i]) - mu) * iv;
                    const double g = static_cast<double>(gop[i]);
                    dxp[i] += static_cast<T>(gam * iv * (g - m1 - xh * m2));
                }
            }
        }
        if (gg) {
            Tensor<T>& dg = t.grad_buf(gid);
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int n = 0; n < N; ++n) acc += ps2[static_cast<std::size_t>(n) * C + c];
                dg[c] += static_cast<T>(acc);
            }
        }
        if (gb) {
            Tensor<T>& db = t.grad_buf(bid);
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int n = 0; n < N; ++n) acc += ps1[static_cast<std::size_t>(n) * C + c];
                db[c] += static_cast<T>(acc);
            }
        }
    });
}

template <typename T>
Var<T> leaky_relu(Var<T> x, T slope) {
    return unary_op(
        x, [slope](T v) { return v > T(0) ? v : slope * v; },
        [slope](T v, T, T g) { return v > T(0) ? g : slope * g; });
}

template <typename T>
Var<T> relu(Var<T> x) {
    return unary_op(
        x, [](T v) { return v > T(0) ? v : T(0); },
        [](T v, T, T g) { return v > T(0) ? g : T(0); });
}

template <typename T>
Var<T> sigmoid(Var<T> x) {
    return unary_op(
        x,
        [](T v) {
            if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
            const T e = std::exp(v);
            return e / (T(1) + e);
        },
        [](T, T y, T g) { return g * y * (T(1) - y); });
}

template <typename T>
Var<T> softplus(Var<T> x) {
    return unary_op(
        x,
        [](T v) { return v > T(0) ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
        [](T v, T, T g) {
            const T s = v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
            return g * s;
        });
}

template <typename T>
Var<T> upsample_nearest2x(Var<T> x) {
    const Tensor<T>& xv = x.val();
    if (xv.rank() != 4) throw ShapeError("upsample_nearest2x expects rank-4 input");
    const int N = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
    Tensor<T> out({N, C, 2 * H, 2 * W});
#pragma omp parallel for schedule(static)
    for (int nc = 0; nc < N * C; ++nc) {
        const T* xp = xv.data() + static_cast<std::int64_t>(nc) * H * W;
        T* op = out.data() + static_cast<std::int64_t>(nc) * 4 * H * W;
        for (int h = 0; h < 2 * H; ++h) {
            const T* src = xp + static_cast<std::int64_t>(h / 2) * W;
            T* dst = op + static_cast<std::int64_t>(h) * 2 * W;
            for (int w = 0; w < 2 * W; ++w) dst[w] = src[w / 2];
        }
    }
    Tape<T>* tp = x.tape;
    const int xid = x.id;
    if (!tp->requires_grad(x)) return tp->push(std::move(out), false, nullptr);
    return tp->push(std::move(out), true, [xid, N, C, H, W](Tape<T>& t, int self) {
        if (!wants_grad(t, xid)) return;
        const Tensor<T>& g = t.grad_of(at(t, self));
        Tensor<T>& dx = t.grad_buf(xid);
#pragma omp parallel for schedule(static)
        for (int nc = 0; nc < N * C; ++nc) {
            const T* gp = g.data() + static_cast<std::int64_t>(nc) * 4 * H * W;
            T* dp = dx.data() + static_cast<std::int64_t>(nc) * H * W;
            for (int h = 0; h < 2 * H; ++h) {
                const T* src = gp + static_cast<std::int64_t>(h) * 2 * W;
                T* dst = dp + static_cast<std::int64_t>(h / 2) * W;
                for (int w = 0; w < 2 * W; ++w) dst[w / 2] += src[w];
            }
        }
    });
}

template <typename T>
Var<T> adaptive_avg_pool(Var<T> x, int oh, int ow) {
    const Tensor<T>& xv = x.val();
    if (xv.rank() != 4) throw ShapeError("adaptive_avg_pool expects rank-4 input");
    if (oh < 1 || ow < 1) throw ShapeError("adaptive_avg_pool target must be positive");
    const int N = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
    if (oh > H || ow > W) throw ShapeError("adaptive_avg_pool cannot upsample");

    auto start = [](int i, int in, int out) { return (i * in) / out; };
    auto stop = [](int i, int in, int out) { return ((i + 1) * in + out - 1) / out; };

    Tensor<T> out({N, C, oh, ow});
#pragma omp parallel for schedule(static)
    for (int nc = 0; nc < N * C; ++nc) {
        const T* xp = xv.data() + static_cast<std::int64_t>(nc) * H * W;
        T* op = out.data() + static_cast<std::int64_t>(nc) * oh * ow;
        for (int i = 0; i < oh; ++i) {
            const int h0 = start(i, H, oh), h1 = stop(i, H, oh);
            for (int j = 0; j < ow; ++j) {
                const int w0 = start(j, W, ow), w1 = stop(j, W, ow);
                double acc = 0.0;
                for (int h = h0; h < h1; ++h)
                    for (int w = w0; w < w1; ++w) acc += static_cast<double>(xp[static_cast<std::int64_t>(h) * W + w]);
                op[static_cast<std::int64_t>(i) * ow + j] =
                    static_cast<T>(acc / (static_cast<double>(h1 - h0) * (w1 - w0)));
            }
        }
    }
    Tape<T>* tp = x.tape;
    const int xid = x.id;
    if (!tp->requires_grad(x)) return tp->push(std::move(out), false, nullptr);
    return tp->push(std::move(out), true, [xid, N, C, H, W, oh, ow, start, stop](Tape<T>& t, int self) {
        if (!wants_grad(t, xid)) return;
        const Tensor<T>& g = t.grad_of(at(t, self));
        Tensor<T>& dx = t.grad_buf(xid);
#pragma omp parallel for schedule(static)
        for (int nc = 0; nc < N * C; ++nc) {
            const T* gp = g.data() + static_cast<std::int64_t>(nc) * oh * ow;
            T* dp = dx.data() + static_cast<std::int64_t>(nc) * H * W;
            for (int i = 0; i < oh; ++i) {
                const int h0 = start(i, H, oh), h1 = stop(i, H, oh);
                for (int j = 0; j < ow; ++j) {
                    const int w0 = start(j, W, ow), w1 = stop(j, W, ow);
                    const T share = gp[static_cast<std::int64_t>(i) * ow + j] /
                                    static_cast<T>((h1 - h0) * (w1 - w0));
                    for (int h = h0; h < h1; ++h)
                        for (int w = w0; w < w1; ++w) dp[static_cast<std::int64_t>(h) * W + w] += share;
                }
            }
        }
    });
}

template <typename T>
Var<T> max_pool2x2(Var<T> x) {
    const Tensor<T>& xv = x.val();
    if (xv.rank() != 4) throw ShapeError("max_pool2x2 expects rank-4 input");
    const int N = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
    if (H < 2 || W < 2) throw ShapeError("max_pool2x2 input too small");
    const int OH = H / 2, OW = W / 2;
    Tensor<T> out({N, C, OH, OW});
#pragma omp parallel for schedule(static)
    for (int nc = 0; nc < N * C; ++nc) {
        const T* xp = xv.data() + static_cast<std::int64_t>(nc) * H * W;
        T* op = out.data() + static_cast<std::int64_t>(nc) * OH * OW;
        for (int i = 0; i < OH; ++i) {
            for (int j = 0; j < OW; ++j) {
                const T* p = xp + static_cast<std::int64_t>(2 * i) * W + 2 * j;
                T m = p[0];
                m = std::max(m, p[1]);
                m = std::max(m, p[W]);
                m = std::max(m, p[W + 1]);
                op[static_cast<std::int64_t>(i) * OW + j] = m;
            }
        }
    }
    Tape<T>* tp = x.tape;
    const int xid = x.id;
    if (!tp->requires_grad(x)) return tp->push(std::move(out), false, nullptr);
    return tp->push(std::move(out), true, [xid, N, C, H, W, OH, OW](Tape<T>& t, int self) {
        if (!wants_grad(t, xid)) return;
        const Tensor<T>& g = t.grad_of(at(t, self));
        const Tensor<T>& xv2 = t.value_of(at(t, xid));
        Tensor<T>& dx = t.grad_buf(xid);
#pragma omp parallel for schedule(static)
        for (int nc = 0; nc < N * C; ++nc) {
            const T* xp = xv2.data() + static_cast<std::int64_t>(nc) * H * W;
            const T* gp = g.data() + static_cast<std::int64_t>(nc) * OH * OW;
            T* dp = dx.data() + static_cast<std::int64_t>(nc) * H * W;
            for (int i = 0; i < OH; ++i) {
                for (int j = 0; j < OW; ++j) {
                    const std::int64_t base = static_cast<std::int64_t>(2 * i) * W + 2 * j;
                    const std::int64_t cand[4] = {base, base + 1, base + W, base + W + 1};
                    std::int64_t best = cand[0];
                    for (int k = 1; k < 4; ++k) {
                        if (xp[cand[k]] > xp[best]) best = cand[k];
                    }
                    dp[best] += gp[static_cast<std::int64_t>(i) * OW + j];
                }
            }
        }
    });
}

namespace {

struct LerpAxis {
    std::vector<int> i0, i1;
    std::vector<double> f;
};

LerpAxis make_lerp_axis(int in, int out) {
    LerpAxis a;
    a.i0.resize(static_cast<std::size_t>(out));
    a.i1.resize(static_cast<std::size_t>(out));
    a.f.resize(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / out;
    for (int i = 0; i < out; ++i) {
        double src = (i + 0.5) * scale - 0.5;
        src = std::max(0.0, std::min(src, static_cast<double>(in - 1)));
        const int lo = std::min(static_cast<int>(src), in - 1);
        a.i0[static_cast<std::size_t>(i)] = lo;
        a.i1[static_cast<std::size_t>(i)] = std::min(lo + 1, in - 1);
        a.f[static_cast<std::size_t>(i)] = src - lo;
    }
    return a;
}

} // namespace

template <typename T>
Var<T> bilinear_resize(Var<T> x, int oh, int ow) {
    const Tensor<T>& xv = x.val();
    if (xv.rank() != 4) throw ShapeError("bilinear_resize expects rank-4 input");
    if (oh < 1 || ow < 1) throw ShapeError("bilinear_resize target must be positive");
    const int N = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
    const LerpAxis ay = make_lerp_axis(H, oh);
    const LerpAxis ax = make_lerp_axis(W, ow);

    Tensor<T> out({N, C, oh, ow});
#pragma omp parallel for schedule(static)
    for (int nc = 0; nc < N * C; ++nc) {
        const T* xp = xv.data() + static_cast<std::int64_t>(nc) * H * W;
        T* op = out.data() + static_cast<std::int64_t>(nc) * oh * ow;
        for (int i = 0; i < oh; ++i) {
            const int h0 = ay.i0[static_cast<std::size_t>(i)], h1 = ay.i1[static_cast<std::size_t>(i)];
            const double fy = ay.f[static_cast<std::size_t>(i)];
            for (int j = 0; j < ow; ++j) {
                const int w0 = ax.i0[static_cast<std::size_t>(j)], w1 = ax.i1[static_cast<std::size_t>(j)];
                const double fx = ax.f[static_cast<std::size_t>(j)];
                const double v00 = static_cast<double>(xp[static_cast<std::int64_t>(h0) * W + w0]);
                const double v01 = static_cast<double>(xp[static_cast<std::int64_t>(h0) * W + w1]);
                const double v10 = static_cast<double>(xp[static_cast<std::int64_t>(h1) * W + w0]);
                const double v11 = static_cast<double>(xp[static_cast<std::int64_t>(h1) * W + w1]);
                const double top = v00 + fx * (v01 - v00);
                const double bot = v10 + fx * (v11 - v10);
                op[static_cast<std::int64_t>(i) * ow + j] = static_cast<T>(top + fy * (bot - top));
            }
        }
    }
    Tape<T>* tp = x.tape;
    const int xid = x.id;
    if (!tp->requires_grad(x)) return tp->push(std::move(out), false, nullptr);
    return tp->push(std::move(out), true, [xid, N, C, H, W, oh, ow, ay, ax](Tape<T>& t, int self) {
        if (!wants_grad(t, xid)) return;
        const Tensor<T>& g = t.grad_of(at(t, self));
        Tensor<T>& dx = t.grad_buf(xid);
#pragma omp parallel for schedule(static)
        for (int nc = 0; nc < N * C; ++nc) {
            const T* gp = g.data() + static_cast<std::int64_t>(nc) * oh * ow;
            T* dp = dx.data() + static_cast<std::int64_t>(nc) * H * W;
            for (int i = 0; i < oh; ++i) {
                const int h0 = ay.i0[static_cast<std::size_t>(i)], h1 = ay.i1[static_cast<std::size_t>(i)];
                const double fy = ay.f[static_cast<std::size_t>(i)];
                for (int j = 0; j < ow; ++j) {
                    const int w0 = ax.i0[static_cast<std::size_t>(j)], w1 = ax.i1[static_cast<std::size_t>(j)];
                    const double fx = ax.f[static_cast<std::size_t>(j)];
                    const double gv = static_cast<double>(gp[static_cast<std::int64_t>(i) * ow + j]);
                    dp[static_cast<std::int64_t>(h0) * W + w0] += static_cast<T>(gv * (1 - fy) * (1 - fx));
                    dp[static_cast<std::int64_t>(h0) * W + w1] += static_cast<T>(gv * (1 - fy) * fx);
                    dp[static_cast<std::int64_t>(h1) * W + w0] += static_cast<T>(gv * fy * (1 - fx));
                    dp[static_cast<std::int64_t>(h1) * W + w1] += static_cast<T>(gv * fy * fx);
                }
            }
        }
    });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
    const Tensor<T>& av = a.val();
    const Tensor<T>& bv = b.val();
    if (!av.same_shape(bv)) {
        throw ShapeError("add shape mismatch: " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
    }
    Tensor<T> out(av.shape());
    const std::int64_t n = av.numel();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) out[i] = av[i] + bv[i];
    Tape<T>* tp = a.tape;
    const int aid = a.id, bid = b.id;
    const bool rg = tp->requires_grad(a) || tp->requires_grad(b);
    if (!rg) return tp->push(std::move(out), false, nullptr);
    return tp->push(std::move(out), true, [aid, bid](Tape<T>& t, int self) {
        const Tensor<T>& g = t.grad_of(at(t, self));
        for (int id : {aid, bid}) {
            if (!wants_grad(t, id)) continue;
            Tensor<T>& d = t.grad_buf(id);
            const std::int64_t n2 = g.numel();
#pragma omp parallel for schedule(static)
            for (std::int64_t i = 0; i < n2; ++i) d[i] += g[i];
        }
    });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
    const Tensor<T>& av = a.val();
    const Tensor<T>& bv = b.val();
    if (!av.same_shape(bv)) {
        throw ShapeError("sub shape mismatch: " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
    }
    Tensor<T> out(av.shape());
    const std::int64_t n = av.numel();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) out[i] = av[i] - bv[i];
    Tape<T>* tp = a.tape;
    const int aid = a.id, bid = b.id;
    const bool rg = tp->requires_grad(a) || tp->requires_grad(b);
    if (!rg) return tp->push(std::move(out), false, nullptr);
    return tp->push(std::move(out), true, [aid, bid](Tape<T>& t, int self) {
        const Tensor<T>& g = t.grad_of(at(t, self));
        const std::int64_t n2 = g.numel();
        if (wants_grad(t, aid)) {
            Tensor<T>& d = t.grad_buf(aid);
#pragma omp parallel for schedule(static)
            for (std::int64_t i = 0; i < n2; ++i) d[i] += g[i];
        }
        if (wants_grad(t, bid)) {
            Tensor<T>& d = t.grad_buf(bid);
#pragma omp parallel for schedule(static)
            for (std::int64_t i = 0; i < n2; ++i) d[i] -= g[i];
        }
    });
}

template <typename T>
Var<T> scale(Var<T> x, T s) {
    return unary_op(
        x, [s](T v) { return s * v; }, [s](T, T, T g) { return s * g; });
}

template <typename T>
Var<T> add_scalar(Var<T> x, T c) {
    return unary_op(
        x, [c](T v) { return v + c; }, [](T, T, T g) { return g; });
}

template <typename T>
Var<T> square(Var<T> x) {
    return unary_op(
        x, [](T v) { return v * v; }, [](T v, T, T g) { return T(2) * v * g; });
}

template <typename T>
Var<T> abs_val(Var<T> x) {
    return unary_op(
        x, [](T v) { return std::abs(v); },
        [](T v, T, T g) { return v > T(0) ? g : (v < T(0) ? -g : T(0)); });
}

template <typename T>
Var<T> scale_channels(Var<T> x, Var<T> g) {
    const Tensor<T>& xv = x.val();
    const Tensor<T>& gv = g.val();
    if (xv.rank() != 4) throw ShapeError("scale_channels expects rank-4 input");
    const int N = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
    if (gv.rank() != 2 || gv.dim(0) != N || gv.dim(1) != C) {
        throw ShapeError("scale_channels gains must be [N,C], got " + shape_str(gv.shape()));
    }
    const std::int64_t HW = static_cast<std::int64_t>(H) * W;
    Tensor<T> out(xv.shape());
#pragma omp parallel for schedule(static)
    for (int nc = 0; nc < N * C; ++nc) {
        const T* xp = xv.data() + static_cast<std::int64_t>(nc) * HW;
        T* op = out.data() + static_cast<std::int64_t>(nc) * HW;
        const T s = gv[nc];
        for (std::int64_t i = 0; i < HW; ++i) op[i] = xp[i] * s;
    }
    Tape<T>* tp = x.tape;
    const int xid = x.id, gid = g.id;
    const bool rg = tp->requires_grad(x) || tp->requires_grad(g);
    if (!rg) return tp->push(std::move(out), false, nullptr);
    return tp->push(std::move(out), true, [xid, gid, N, C, HW](Tape<T>& t, int self) {
        const Tensor<T>& go = t.grad_of(at(t, self));
        const Tensor<T>& xv2 = t.value_of(at(t, xid));
        const Tensor<T>& gv2 = t.value_of(at(t, gid));
        const bool gx = wants_grad(t, xid);
        const bool ggain = wants_grad(t, gid);
        Tensor<T>* dx = gx ? &t.grad_buf(xid) : nullptr;
        Tensor<T>* dg = ggain ? &t.grad_buf(gid) : nullptr;
#pragma omp parallel for schedule(static)
        for (int nc = 0; nc < N * C; ++nc) {
            const T* gop = go.data() + static_cast<std::int64_t>(nc) * HW;
            const T* xp = xv2.data() + static_cast<std::int64_t>(nc) * HW;
            if (dx) {
                T* dp = dx->data() + static_cast<std::int64_t>(nc) * HW;
                const T s = gv2[nc];
                for (std::int64_t i = 0; i < HW; ++i) dp[i] += gop[i] * s;
            }
            if (dg) {
                double acc = 0.0;
                for (std::int64_t i = 0; i < HW; ++i) acc += static_cast<double>(gop[i]) * xp[i];
                (*dg)[nc] += static_cast<T>(acc);
            }
        }
    });
}

template <typename T>
Var<T> concat_channels(std::span<const Var<T>> xs) {
    if (xs.empty()) throw ShapeError("concat_channels needs at least one input");
    const Tensor<T>& first = xs[0].val();
    if (first.rank() != 4) throw ShapeError("concat_channels expects rank-4 inputs");
    const int N = first.dim(0), H = first.dim(2), W = first.dim(3);
    const std::int64_t HW = static_cast<std::int64_t>(H) * W;
    int Ctot = 0;
    std::vector<int> ids, chans;
    ids.reserve(xs.size());
    chans.reserve(xs.size());
    for (const Var<T>& v : xs) {
        const Tensor<T>& tv = v.val();
        if (tv.rank() != 4 || tv.dim(0) != N || tv.dim(2) != H || tv.dim(3) != W) {
            throw ShapeError("concat_channels inputs disagree: " + shape_str(first.shape()) +
                             " vs " + shape_str(tv.shape()));
        }
        ids.push_back(v.id);
        chans.push_back(tv.dim(1));
        Ctot += tv.dim(1);
    }

    Tape<T>* tp = xs[0].tape;
    Tensor<T> out({N, Ctot, H, W});
#pragma omp parallel for schedule(static)
    for (int n = 0; n < N; ++n) {
        T* dst = out.data() + static_cast<std::int64_t>(n) * Ctot * HW;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            const Tensor<T>& src = tp->value_of(at(*tp, ids[k]));
            const std::int64_t blk = static_cast<std::int64_t>(chans[k]) * HW;
            std::memcpy(dst, src.data() + static_cast<std::int64_t>(n) * blk,
                        static_cast<std::size_t>(blk) * sizeof(T));
            dst += blk;
        }
    }

    bool rg = false;
    for (const Var<T>& v : xs) rg = rg || tp->requires_grad(v);
    if (!rg) return tp->push(std::move(out), false, nullptr);
    return tp->push(std::move(out), true,
                    [ids = std::move(ids), chans = std::move(chans), N, Ctot, HW](Tape<T>& t, int self) {
        const Tensor<T>& g = t.grad_of(at(t, self));
        std::int64_t coff = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            const std::int64_t blk = static_cast<std::int64_t>(chans[k]) * HW;
            if (wants_grad(t, ids[k])) {
                Tensor<T>& d = t.grad_buf(ids[k]);
#pragma omp parallel for schedule(static)
                for (int n = 0; n < N; ++n) {
                    const T* gp = g.data() + static_cast<std::int64_t>(n) * Ctot * HW + coff;
                    T* dp = d.data() + static_cast<std::int64_t>(n) * blk;
                    for (std::int64_t i = 0; i < blk; ++i) dp[i] += gp[i];
                }
            }
            coff += blk;
        }
    });
}

template <typename T>
Var<T> slice_batch(Var<T> x, int n0, int n1) {
    const Tensor<T>& xv = x.val();
    if (xv.rank() < 1) throw ShapeError("slice_batch expects rank >= 1");
    const int N = xv.dim(0);
    if (n0 < 0 || n1 > N || n0 >= n1) throw ShapeError("slice_batch range out of bounds");
    std::vector<int> oshape = xv.shape();
    oshape[0] = n1 - n0;
    const std::int64_t row = xv.numel() / N;
    Tensor<T> out(oshape);
    std::memcpy(out.data(), xv.data() + static_cast<std::int64_t>(n0) * row,
                static_cast<std::size_t>(out.numel()) * sizeof(T));
    Tape<T>* tp = x.tape;
    const int xid = x.id;
    if (!tp->requires_grad(x)) return tp->push(std::move(out), false, nullptr);
    return tp->push(std::move(out), true, [xid, n0, row](Tape<T>& t, int self) {
        if (!wants_grad(t, xid)) return;
        const Tensor<T>& g = t.grad_of(at(t, self));
        Tensor<T>& dx = t.grad_buf(xid);
        T* dp = dx.data() + static_cast<std::int64_t>(n0) * row;
        const std::int64_t n = g.numel();
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) dp[i] += g[i];
    });
}

template <typename T>
Var<T> reshape(Var<T> x, std::vector<int> shape) {
    Tensor<T> out = x.val().reshaped(std::move(shape));
    Tape<T>* tp = x.tape;
    const int xid = x.id;
    if (!tp->requires_grad(x)) return tp->push(std::move(out), false, nullptr);
    return tp->push(std::move(out), true, [xid](Tape<T>& t, int self) {
        if (!wants_grad(t, xid)) return;
        const Tensor<T>& g = t.grad_of(at(t, self));
        Tensor<T>& dx = t.grad_buf(xid);
        const std::int64_t n = g.numel();
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) dx[i] += g[i];
    });
}

template <typename T>
Var<T> detach(Var<T> x) {
    return x.tape->leaf(x.val(), false);
}

template <typename T>
Var<T> sum_all(Var<T> x) {
    const Tensor<T>& xv = x.val();
    double acc = 0.0;
    for (T v : xv.flat()) acc += static_cast<double>(v);
    Tape<T>* tp = x.tape;
    const int xid = x.id;
    if (!tp->requires_grad(x)) return tp->push(Tensor<T>::scalar(static_cast<T>(acc)), false, nullptr);
    return tp->push(Tensor<T>::scalar(static_cast<T>(acc)), true, [xid](Tape<T>& t, int self) {
        if (!wants_grad(t, xid)) return;
        const T g = t.grad_of(at(t, self))[0];
        Tensor<T>& dx = t.grad_buf(xid);
        const std::int64_t n = dx.numel();
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) dx[i] += g;
    });
}

template <typename T>
Var<T> mean_all(Var<T> x) {
    const Tensor<T>& xv = x.val();
    if (xv.numel() == 0) throw ShapeError("mean_all of empty tensor");
    const std::int64_t n = xv.numel();
    double acc = 0.0;
    for (T v : xv.flat()) acc += static_cast<double>(v);
    acc /= static_cast<double>(n);
    Tape<T>* tp = x.tape;
    const int xid = x.id;
    if (!tp->requires_grad(x)) return tp->push(Tensor<T>::scalar(static_cast<T>(acc)), false, nullptr);
    return tp->push(Tensor<T>::scalar(static_cast<T>(acc)), true, [xid, n](Tape<T>& t, int self) {
        if (!wants_grad(t, xid)) return;
        const T g = t.grad_of(at(t, self))[0] / static_cast<T>(n);
        Tensor<T>& dx = t.grad_buf(xid);
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) dx[i] += g;
    });
}

template <typename T>
Var<T> euclidean_norm(Var<T> x) {
    const Tensor<T>& xv = x.val();
    double acc = 0.0;
    for (T v : xv.flat()) acc += static_cast<double>(v) * v;
    const double r = std::sqrt(acc);
    Tape<T>* tp = x.tape;
    const int xid = x.id;
    if (!tp->requires_grad(x)) return tp->push(Tensor<T>::scalar(static_cast<T>(r)), false, nullptr);
    return tp->push(Tensor<T>::scalar(static_cast<T>(r)), true, [xid, r](Tape<T>& t, int self) {
        if (!wants_grad(t, xid) || r == 0.0) return;
        const double g = static_cast<double>(t.grad_of(at(t, self))[0]) / r;
        const Tensor<T>& xv2 = t.value_of(at(t, xid));
        Tensor<T>& dx = t.grad_buf(xid);
        const std::int64_t n = xv2.numel();
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) dx[i] += static_cast<T>(g * xv2[i]);
    });
}

template <typename T>
Var<T> per_sample_euclidean_norm_mean(Var<T> x) {
    const Tensor<T>& xv = x.val();
    if (xv.rank() < 1 || xv.dim(0) == 0) throw ShapeError("per_sample_euclidean_norm_mean needs a batch axis");
    const int N = xv.dim(0);
    const std::int64_t row = xv.numel() / N;
    std::vector<double> r(static_cast<std::size_t>(N));
    double total = 0.0;
    for (int n = 0; n < N; ++n) {
        const T* p = xv.data() + static_cast<std::int64_t>(n) * row;
        double acc = 0.0;
        for (std::int64_t i = 0; i < row; ++i) acc += static_cast<double>(p[i]) * p[i];
        r[static_cast<std::size_t>(n)] = std::sqrt(acc);
        total += r[static_cast<std::size_t>(n)];
    }
    total /= N;
    Tape<T>* tp = x.tape;
    const int xid = x.id;
    if (!tp->requires_grad(x)) return tp->push(Tensor<T>::scalar(static_cast<T>(total)), false, nullptr);
    return tp->push(Tensor<T>::scalar(static_cast<T>(total)), true,
                    [xid, N, row, r = std::move(r)](Tape<T>& t, int self) {
        if (!wants_grad(t, xid)) return;
        const double g = static_cast<double>(t.grad_of(at(t, self))[0]) / N;
        const Tensor<T>& xv2 = t.value_of(at(t, xid));
        Tensor<T>& dx = t.grad_buf(xid);
#pragma omp parallel for schedule(static)
        for (int n = 0; n < N; ++n) {
            const double rn = r[static_cast<std::size_t>(n)];
            if (rn == 0.0) continue;
            const double s = g / rn;
            const T* p = xv2.data() + static_cast<std::int64_t>(n) * row;
            T* dp = dx.data() + static_cast<std::int64_t>(n) * row;
            for (std::int64_t i = 0; i < row; ++i) dp[i] += static_cast<T>(s * p[i]);
        }
    });
}

template <typename T>
Var<T> per_sample_l1_sum_mean(Var<T> x) {
    const Tensor<T>& xv = x.val();
    if (xv.rank() < 1 || xv.dim(0) == 0) throw ShapeError("per_sample_l1_sum_mean needs a batch axis");
    const int N = xv.dim(0);
    double acc = 0.0;
    for (T v : xv.flat()) acc += std::abs(static_cast<double>(v));
    acc /= N;
    Tape<T>* tp = x.tape;
    const int xid = x.id;
    if (!tp->requires_grad(x)) return tp->push(Tensor<T>::scalar(static_cast<T>(acc)), false, nullptr);
    return tp->push(Tensor<T>::scalar(static_cast<T>(acc)), true, [xid, N](Tape<T>& t, int self) {
        if (!wants_grad(t, xid)) return;
        const T g = t.grad_of(at(t, self))[0] / static_cast<T>(N);
        const Tensor<T>& xv2 = t.value_of(at(t, xid));
        Tensor<T>& dx = t.grad_buf(xid);
        const std::int64_t n = xv2.numel();
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) {
            dx[i] += xv2[i] > T(0) ? g : (xv2[i] < T(0) ? -g : T(0));
        }
    });
}

#define CPNET_INSTANTIATE_OPS(T)                                                    \
    template Var<T> conv2d<T>(Var<T>, Var<T>, Var<T>, int, int);                    \
    template Var<T> linear<T>(Var<T>, Var<T>, Var<T>);                              \
    template Var<T> instance_norm<T>(Var<T>, Var<T>, Var<T>, T);                    \
    template Var<T> leaky_relu<T>(Var<T>, T);                                       \
    template Var<T> relu<T>(Var<T>);                                                \
    template Var<T> sigmoid<T>(Var<T>);                                             \
    template Var<T> softplus<T>(Var<T>);                                            \
    template Var<T> upsample_nearest2x<T>(Var<T>);                                  \
    template Var<T> adaptive_avg_pool<T>(Var<T>, int, int);                         \
    template Var<T> max_pool2x2<T>(Var<T>);                                         \
    template Var<T> bilinear_resize<T>(Var<T>, int, int);                           \
    template Var<T> add<T>(Var<T>, Var<T>);                                         \
    template Var<T> sub<T>(Var<T>, Var<T>);                                         \
    template Var<T> scale<T>(Var<T>, T);                                            \
    template Var<T> add_scalar<T>(Var<T>, T);                                       \
    template Var<T> square<T>(Var<T>);                                              \
    template Var<T> abs_val<T>(Var<T>);                                             \
    template Var<T> scale_channels<T>(Var<T>, Var<T>);                              \
    template Var<T> concat_channels<T>(std::span<const Var<T>>);                    \
    template Var<T> slice_batch<T>(Var<T>, int, int);                               \
    template Var<T> reshape<T>(Var<T>, std::vector<int>);                           \
    template Var<T> detach<T>(Var<T>);                                              \
    template Var<T> sum_all<T>(Var<T>);                                             \
    template Var<T> mean_all<T>(Var<T>);                                            \
    template Var<T> euclidean_norm<T>(Var<T>);                                      \
    template Var<T> per_sample_euclidean_norm_mean<T>(Var<T>);                      \
    template Var<T> per_sample_l1_sum_mean<T>(Var<T>);

CPNET_INSTANTIATE_OPS(float)
CPNET_INSTANTIATE_OPS(double)

#undef CPNET_INSTANTIATE_OPS

} // namespace cpnet
