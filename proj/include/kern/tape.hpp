#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "kern/tensor.hpp"

namespace kern {

enum class Op {
    Input,
    Param,
    MatMul,
    Add,
    Sub,
    Relu,
    Softmax,
    LayerNorm,
    Concat,
    SliceLast,
    Transpose,
    Scale,
    MeanAbs,
    CrossEntropy,
    Conv2d,
    GlobalAvgPool,
    PairStack,
};

// Reverse-mode tape. Nodes are appended in evaluation order, so insertion
// order is a topological order and backward is a single reverse sweep.
// Leaf inputs are rejected if non-finite; every op output is checked once at
// creation, which keeps the all-finite invariant without rescanning inputs.
template <class Scalar>
class Tape {
public:
    struct Node {
        Op op;
        std::array<int, 3> in{-1, -1, -1};
        Tensor<Scalar> value;
        bool is_param = false;
        int param_slot = -1;
        int aux0 = 0;  // slice offset
        int aux1 = 0;  // slice length
        Scalar factor = Scalar(1);
        std::vector<int> targets;  // cross-entropy class indices
    };

    int input(Tensor<Scalar> t) {
        if (!t.all_finite()) throw NumericError("input: non-finite value rejected");
        return push({Op::Input, {-1, -1, -1}, std::move(t)});
    }

    int param(Tensor<Scalar> t, int slot) {
        if (!t.all_finite()) throw NumericError("param: non-finite value rejected");
        Node n{Op::Param, {-1, -1, -1}, std::move(t)};
        n.is_param = true;
        n.param_slot = slot;
        return push(std::move(n));
    }

    // Registers every entry of a store as a parameter leaf; the returned ids
    // are in store order, matching backward()'s gradient order.
    std::vector<int> attach(const ParameterStore<Scalar>& store) {
        std::vector<int> ids(static_cast<size_t>(store.size()));
        for (int i = 0; i < store.size(); ++i) ids[static_cast<size_t>(i)] = param(store.value(i), i);
        return ids;
    }

    const Tensor<Scalar>& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
    size_t size() const { return nodes_.size(); }

    // ---- forward ops ----

    int matmul(int a, int b) {
        const auto& A = val(a);
        const auto& B = val(b);
        if (A.rank() != 2 || B.rank() != 2 || A.shape[1] != B.shape[0]) {
            throw ShapeError("matmul: shape mismatch " + shape_str(A.shape) + " vs " + shape_str(B.shape));
        }
        const int m = A.shape[0], k = A.shape[1], n = B.shape[1];
        Tensor<Scalar> C({m, n});
        matmul_acc(A.data.data(), B.data.data(), C.data.data(), m, k, n);
        return push({Op::MatMul, {a, b, -1}, std::move(C)});
    }

    int add(int a, int b) { return add_like(Op::Add, a, b); }
    int sub(int a, int b) { return add_like(Op::Sub, a, b); }

    int relu(int a) {
        Tensor<Scalar> out = val(a);
        for (auto& v : out.data) v = v > Scalar(0) ? v : Scalar(0);
        return push({Op::Relu, {a, -1, -1}, std::move(out)});
    }

    int softmax(int a) {
        const auto& X = val(a);
        const int c = X.last_dim();
        Tensor<Scalar> out(X.shape);
        const size_t rows = X.rows();
        for (size_t r = 0; r < rows; ++r) {
            const Scalar* x = X.data.data() + r * c;
            Scalar* y = out.data.data() + r * c;
            Scalar mx = x[0];
            for (int i = 1; i < c; ++i) mx = std::max(mx, x[i]);
            Scalar sum = 0;
            for (int i = 0; i < c; ++i) {
                y[i] = std::exp(x[i] - mx);
                sum += y[i];
            }
            for (int i = 0; i < c; ++i) y[i] /= sum;
        }
        return push({Op::Softmax, {a, -1, -1}, std::move(out)});
    }

    static constexpr double kLayerNormEps = 1e-5;

    // Normalizes the last dim; gain/bias are 1-D of that length. Constant rows
    // map to zero pre-affine (eps inside the denominator).
    int layer_norm(int a, int gain, int bias) {
        const auto& X = val(a);
        const auto& G = val(gain);
        const auto& B = val(bias);
        const int c = X.last_dim();
        if (c < 2) throw ShapeError("layer_norm: last dim must be >= 2, got " + shape_str(X.shape));
        if (G.rank() != 1 || G.shape[0] != c || B.rank() != 1 || B.shape[0] != c) {
            throw ShapeError("layer_norm: gain/bias " + shape_str(G.shape) + "/" + shape_str(B.shape) +
                             " do not match input " + shape_str(X.shape));
        }
        Tensor<Scalar> out(X.shape);
        const size_t rows = X.rows();
        for (size_t r = 0; r < rows; ++r) {
            const Scalar* x = X.data.data() + r * c;
            Scalar* y = out.data.data() + r * c;
            Scalar mu = 0;
            for (int i = 0; i < c; ++i) mu += x[i];
            mu /= Scalar(c);
            Scalar var = 0;
            for (int i = 0; i < c; ++i) var += (x[i] - mu) * (x[i] - mu);
            var /= Scalar(c);
            const Scalar inv = Scalar(1) / std::sqrt(var + Scalar(kLayerNormEps));
            for (int i = 0; i < c; ++i) y[i] = G.data[i] * ((x[i] - mu) * inv) + B.data[i];
        }
        return push({Op::LayerNorm, {a, gain, bias}, std::move(out)});
    }

    int concat(int a, int b) {
        const auto& A = val(a);
        const auto& B = val(b);
        if (A.rank() != B.rank()) {
            throw ShapeError("concat: rank mismatch " + shape_str(A.shape) + " vs " + shape_str(B.shape));
        }
        for (int i = 0; i + 1 < A.rank(); ++i) {
            if (A.shape[i] != B.shape[i]) {
                throw ShapeError("concat: leading dims differ " + shape_str(A.shape) + " vs " +
                                 shape_str(B.shape));
            }
        }
        std::vector<int> shape = A.shape;
        shape.back() = A.last_dim() + B.last_dim();
        Tensor<Scalar> out(shape);
        const int ca = A.last_dim(), cb = B.last_dim();
        const size_t rows = A.rows();
        for (size_t r = 0; r < rows; ++r) {
            std::copy_n(A.data.data() + r * ca, ca, out.data.data() + r * (ca + cb));
            std::copy_n(B.data.data() + r * cb, cb, out.data.data() + r * (ca + cb) + ca);
        }
        return push({Op::Concat, {a, b, -1}, std::move(out)});
    }

    int slice_last(int a, int offset, int len) {
        const auto& A = val(a);
        const int c = A.last_dim();
        if (offset < 0 || len <= 0 || offset + len > c) {
            throw ShapeError("slice_last: [" + std::to_string(offset) + "," + std::to_string(offset + len) +
                             ") out of range for " + shape_str(A.shape));
        }
        std::vector<int> shape = A.shape;
        shape.back() = len;
        Tensor<Scalar> out(shape);
        const size_t rows = A.rows();
        for (size_t r = 0; r < rows; ++r) {
            std::copy_n(A.data.data() + r * c + offset, len, out.data.data() + r * len);
        }
        Node n{Op::SliceLast, {a, -1, -1}, std::move(out)};
        n.aux0 = offset;
        n.aux1 = len;
        return push(std::move(n));
    }

    int transpose(int a) {
        const auto& A = val(a);
        if (A.rank() != 2) throw ShapeError("transpose: expected rank 2, got " + shape_str(A.shape));
        const int m = A.shape[0], n = A.shape[1];
        Tensor<Scalar> out({n, m});
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) out.data[static_cast<size_t>(j) * m + i] = A.data[static_cast<size_t>(i) * n + j];
        }
        return push({Op::Transpose, {a, -1, -1}, std::move(out)});
    }

    int scale(int a, Scalar factor) {
        Tensor<Scalar> out = val(a);
        for (auto& v : out.data) v *= factor;
        Node n{Op::Scale, {a, -1, -1}, std::move(out)};
        n.factor = factor;
        return push(std::move(n));
    }

    int mean_abs(int a) {
        const auto& A = val(a);
        double acc = 0;
        for (Scalar v : A.data) acc += std::abs(static_cast<double>(v));
        Tensor<Scalar> out({1});
        out.data[0] = static_cast<Scalar>(acc / static_cast<double>(A.numel()));
        return push({Op::MeanAbs, {a, -1, -1}, std::move(out)});
    }

    // Mean negative log-likelihood of integer class targets over logits [B,C].
    int cross_entropy(int logits, std::vector<int> targets) {
        const auto& X = val(logits);
        if (X.rank() != 2) throw ShapeError("cross_entropy: expected [batch,classes], got " + shape_str(X.shape));
        const int b = X.shape[0], c = X.shape[1];
        if (static_cast<int>(targets.size()) != b) {
            throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for batch " +
                             std::to_string(b));
        }
        double acc = 0;
        for (int r = 0; r < b; ++r) {
            const int t = targets[static_cast<size_t>(r)];
            if (t < 0 || t >= c) throw ValidationError("cross_entropy: target " + std::to_string(t) + " out of range");
            acc -= log_softmax_at(X.data.data() + static_cast<size_t>(r) * c, c, t);
        }
        Tensor<Scalar> out({1});
        out.data[0] = static_cast<Scalar>(acc / b);
        Node n{Op::CrossEntropy, {logits, -1, -1}, std::move(out)};
        n.targets = std::move(targets);
        return push(std::move(n));
    }

    // 3x3 conv, stride 2, pad 1, with per-channel bias folded in.
    int conv2d(int x, int w, int b) {
        const auto& X = val(x);
        const auto& W = val(w);
        const auto& B = val(b);
        if (X.rank() != 4 || W.rank() != 4 || W.shape[2] != 3 || W.shape[3] != 3 || X.shape[1] != W.shape[1] ||
            B.rank() != 1 || B.shape[0] != W.shape[0]) {
            throw ShapeError("conv2d: shape mismatch x " + shape_str(X.shape) + " w " + shape_str(W.shape) +
                             " b " + shape_str(B.shape));
        }
        const int bs = X.shape[0], ic = X.shape[1], h = X.shape[2], wd = X.shape[3];
        const int oc = W.shape[0];
        const int oh = (h + 1) / 2, ow = (wd + 1) / 2;
        Tensor<Scalar> Y({bs, oc, oh, ow});
        for (int n = 0; n < bs; ++n) {
            for (int o = 0; o < oc; ++o) {
                Scalar* yplane = Y.data.data() + ((static_cast<size_t>(n) * oc + o) * oh) * ow;
                for (size_t i = 0; i < static_cast<size_t>(oh) * ow; ++i) yplane[i] = B.data[o];
                for (int i = 0; i < ic; ++i) {
                    const Scalar* xplane = X.data.data() + ((static_cast<size_t>(n) * ic + i) * h) * wd;
                    const Scalar* wk = W.data.data() + ((static_cast<size_t>(o) * ic + i) * 3) * 3;
                    conv_plane_acc(xplane, wk, yplane, h, wd, oh, ow);
                }
            }
        }
        return push({Op::Conv2d, {x, w, b}, std::move(Y)});
    }

    int global_avg_pool(int x) {
        const auto& X = val(x);
        if (X.rank() != 4) throw ShapeError("global_avg_pool: expected [b,c,h,w], got " + shape_str(X.shape));
        const int bs = X.shape[0], c = X.shape[1];
        const size_t hw = static_cast<size_t>(X.shape[2]) * X.shape[3];
        Tensor<Scalar> out({bs, c});
        for (int n = 0; n < bs; ++n) {
            for (int ch = 0; ch < c; ++ch) {
                const Scalar* plane = X.data.data() + (static_cast<size_t>(n) * c + ch) * hw;
                double acc = 0;
                for (size_t i = 0; i < hw; ++i) acc += plane[i];
                out.at2(n, ch) = static_cast<Scalar>(acc / static_cast<double>(hw));
            }
        }
        return push({Op::GlobalAvgPool, {x, -1, -1}, std::move(out)});
    }

    // [N,D] feature rows -> [N*N, 2D] where row i*N+j is [f_i | f_j].
    int pair_stack(int f) {
        const auto& F = val(f);
        if (F.rank() != 2 || F.shape[0] < 2) {
            throw ShapeError("pair_stack: expected [n>=2, d], got " + shape_str(F.shape));
        }
        const int n = F.shape[0], d = F.shape[1];
        Tensor<Scalar> out({n * n, 2 * d});
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                Scalar* row = out.data.data() + (static_cast<size_t>(i) * n + j) * (2 * d);
                std::copy_n(F.data.data() + static_cast<size_t>(i) * d, d, row);
                std::copy_n(F.data.data() + static_cast<size_t>(j) * d, d, row + d);
            }
        }
        return push({Op::PairStack, {f, -1, -1}, std::move(out)});
    }

    // ---- backward ----

    // Gradients for all parameter slots [0, n_slots); unreached slots get
    // zeros in the parameter's shape.
    std::vector<Tensor<Scalar>> backward(int loss, int n_slots) {
        if (val(loss).numel() != 1) {
            throw ShapeError("backward: loss must be scalar, got " + shape_str(val(loss).shape));
        }
        std::vector<Tensor<Scalar>> grads(nodes_.size());
        grads[static_cast<size_t>(loss)] = Tensor<Scalar>::full(val(loss).shape, Scalar(1));
        for (int id = loss; id >= 0; --id) {
            Node& node = nodes_[static_cast<size_t>(id)];
            Tensor<Scalar>& g = grads[static_cast<size_t>(id)];
            if (g.numel() == 0) continue;
            step_backward(node, g, grads);
        }
        std::vector<Tensor<Scalar>> out(static_cast<size_t>(n_slots));
        for (size_t id = 0; id < nodes_.size(); ++id) {
            const Node& node = nodes_[id];
            if (!node.is_param || node.param_slot < 0 || node.param_slot >= n_slots) continue;
            Tensor<Scalar>& slot = out[static_cast<size_t>(node.param_slot)];
            if (grads[id].numel() == 0) {
                if (slot.numel() == 0) slot = Tensor<Scalar>::zeros(node.value.shape);
            } else if (slot.numel() == 0) {
                slot = std::move(grads[id]);
            } else {
                for (size_t i = 0; i < slot.numel(); ++i) slot.data[i] += grads[id].data[i];
            }
        }
        for (size_t s = 0; s < out.size(); ++s) {
            if (out[s].numel() == 0) throw ValidationError("backward: parameter slot " + std::to_string(s) + " never attached");
        }
        return out;
    }

private:
    std::vector<Node> nodes_;

    const Tensor<Scalar>& val(int id) const { return nodes_[static_cast<size_t>(id)].value; }

    int push(Node n) {
        if (n.op != Op::Input && n.op != Op::Param && !n.value.all_finite()) {
            throw NumericError("forward op produced non-finite values");
        }
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    int add_like(Op op, int a, int b) {
        const auto& A = val(a);
        const auto& B = val(b);
        if (!is_suffix(B.shape, A.shape)) {
            throw ShapeError(std::string(op == Op::Add ? "add" : "sub") + ": shape mismatch " +
                             shape_str(A.shape) + " vs " + shape_str(B.shape));
        }
        Tensor<Scalar> out = A;
        const size_t bn = B.numel();
        const Scalar sgn = op == Op::Add ? Scalar(1) : Scalar(-1);
        for (size_t i = 0; i < out.numel(); ++i) out.data[i] += sgn * B.data[i % bn];
        return push({op, {a, b, -1}, std::move(out)});
    }

    static bool is_suffix(const std::vector<int>& small, const std::vector<int>& big) {
        if (small.size() > big.size()) return false;
        for (size_t i = 0; i < small.size(); ++i) {
            if (small[small.size() - 1 - i] != big[big.size() - 1 - i]) return false;
        }
        return true;
    }

    static double log_softmax_at(const Scalar* x, int c, int t) {
        double mx = static_cast<double>(x[0]);
        for (int i = 1; i < c; ++i) mx = std::max(mx, static_cast<double>(x[i]));
        double sum = 0;
        for (int i = 0; i < c; ++i) sum += std::exp(static_cast<double>(x[i]) - mx);
        return static_cast<double>(x[t]) - mx - std::log(sum);
    }

    static void matmul_acc(const Scalar* a, const Scalar* b, Scalar* c, int m, int k, int n) {
        for (int i = 0; i < m; ++i) {
            const Scalar* arow = a + static_cast<size_t>(i) * k;
            Scalar* crow = c + static_cast<size_t>(i) * n;
            for (int kk = 0; kk < k; ++kk) {
                const Scalar av = arow[kk];
                const Scalar* brow = b + static_cast<size_t>(kk) * n;
                for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    }

    static void conv_plane_acc(const Scalar* x, const Scalar* w, Scalar* y, int h, int wd, int oh, int ow) {
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                const Scalar wv = w[ky * 3 + kx];
                const int ox_lo = kx == 0 ? 1 : 0;
                const int ox_hi = std::min(ow - 1, (wd - kx) / 2);
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = 2 * oy + ky - 1;
                    if (iy < 0 || iy >= h) continue;
                    const Scalar* xrow = x + static_cast<size_t>(iy) * wd;
                    Scalar* yrow = y + static_cast<size_t>(oy) * ow;
                    for (int ox = ox_lo; ox <= ox_hi; ++ox) yrow[ox] += wv * xrow[2 * ox + kx - 1];
                }
            }
        }
    }

    void accumulate(std::vector<Tensor<Scalar>>& grads, int id, const Tensor<Scalar>& delta) {
        Tensor<Scalar>& g = grads[static_cast<size_t>(id)];
        if (g.numel() == 0) {
            g = delta;
        } else {
            for (size_t i = 0; i < g.numel(); ++i) g.data[i] += delta.data[i];
        }
    }

    Tensor<Scalar>& grad_buffer(std::vector<Tensor<Scalar>>& grads, int id) {
        Tensor<Scalar>& g = grads[static_cast<size_t>(id)];
        if (g.numel() == 0) g = Tensor<Scalar>::zeros(val(id).shape);
        return g;
    }

    void step_backward(Node& node, const Tensor<Scalar>& g, std::vector<Tensor<Scalar>>& grads) {
        switch (node.op) {
            case Op::Input:
            case Op::Param:
                return;
            case Op::MatMul: {
                const auto& A = val(node.in[0]);
                const auto& B = val(node.in[1]);
                const int m = A.shape[0], k = A.shape[1], n = B.shape[1];
                Tensor<Scalar>& da = grad_buffer(grads, node.in[0]);
                for (int i = 0; i < m; ++i) {
                    const Scalar* grow = g.data.data() + static_cast<size_t>(i) * n;
                    Scalar* darow = da.data.data() + static_cast<size_t>(i) * k;
                    for (int kk = 0; kk < k; ++kk) {
                        const Scalar* brow = B.data.data() + static_cast<size_t>(kk) * n;
                        Scalar acc = 0;
                        for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
                        darow[kk] += acc;
                    }
                }
                Tensor<Scalar>& db = grad_buffer(grads, node.in[1]);
                for (int i = 0; i < m; ++i) {
                    const Scalar* arow = A.data.data() + static_cast<size_t>(i) * k;
                    const Scalar* grow = g.data.data() + static_cast<size_t>(i) * n;
                    for (int kk = 0; kk < k; ++kk) {
                        const Scalar av = arow[kk];
                        Scalar* dbrow = db.data.data() + static_cast<size_t>(kk) * n;
                        for (int j = 0; j < n; ++j) dbrow[j] += av * grow[j];
                    }
                }
                return;
            }
            case Op::Add:
            case Op::Sub: {
                accumulate(grads, node.in[0], g);
                const auto& B = val(node.in[1]);
                Tensor<Scalar>& db = grad_buffer(grads, node.in[1]);
                const size_t bn = B.numel();
                const Scalar sgn = node.op == Op::Add ? Scalar(1) : Scalar(-1);
                for (size_t i = 0; i < g.numel(); ++i) db.data[i % bn] += sgn * g.data[i];
                return;
            }
            case Op::Relu: {
                const auto& X = val(node.in[0]);
                Tensor<Scalar>& dx = grad_buffer(grads, node.in[0]);
                for (size_t i = 0; i < X.numel(); ++i) {
                    if (X.data[i] > Scalar(0)) dx.data[i] += g.data[i];
                }
                return;
            }
            case Op::Softmax: {
                const auto& Y = node.value;
                const int c = Y.last_dim();
                Tensor<Scalar>& dx = grad_buffer(grads, node.in[0]);
                const size_t rows = Y.rows();
                for (size_t r = 0; r < rows; ++r) {
                    const Scalar* y = Y.data.data() + r * c;
                    const Scalar* gy = g.data.data() + r * c;
                    Scalar dot = 0;
                    for (int i = 0; i < c; ++i) dot += gy[i] * y[i];
                    Scalar* dxr = dx.data.data() + r * c;
                    for (int i = 0; i < c; ++i) dxr[i] += y[i] * (gy[i] - dot);
                }
                return;
            }
            case Op::LayerNorm: {
                const auto& X = val(node.in[0]);
                const auto& G = val(node.in[1]);
                const int c = X.last_dim();
                Tensor<Scalar>& dx = grad_buffer(grads, node.in[0]);
                Tensor<Scalar>& dg = grad_buffer(grads, node.in[1]);
                Tensor<Scalar>& db = grad_buffer(grads, node.in[2]);
                const size_t rows = X.rows();
                std::vector<Scalar> y0(static_cast<size_t>(c));
                for (size_t r = 0; r < rows; ++r) {
                    const Scalar* x = X.data.data() + r * c;
                    const Scalar* gy = g.data.data() + r * c;
                    Scalar mu = 0;
                    for (int i = 0; i < c; ++i) mu += x[i];
                    mu /= Scalar(c);
                    Scalar var = 0;
                    for (int i = 0; i < c; ++i) var += (x[i] - mu) * (x[i] - mu);
                    var /= Scalar(c);
                    const Scalar inv = Scalar(1) / std::sqrt(var + Scalar(kLayerNormEps));
                    Scalar mean_dy0 = 0, mean_dy0_y0 = 0;
                    for (int i = 0; i < c; ++i) {
                        y0[static_cast<size_t>(i)] = (x[i] - mu) * inv;
                        const Scalar dy0 = gy[i] * G.data[i];
                        mean_dy0 += dy0;
                        mean_dy0_y0 += dy0 * y0[static_cast<size_t>(i)];
                    }
                    mean_dy0 /= Scalar(c);
                    mean_dy0_y0 /= Scalar(c);
                    Scalar* dxr = dx.data.data() + r * c;
                    for (int i = 0; i < c; ++i) {
                        const Scalar dy0 = gy[i] * G.data[i];
                        dxr[i] += inv * (dy0 - mean_dy0 - y0[static_cast<size_t>(i)] * mean_dy0_y0);
                        dg.data[i] += gy[i] * y0[static_cast<size_t>(i)];
                        db.data[i] += gy[i];
                    }
                }
                return;
            }
            case Op::Concat: {
                const auto& A = val(node.in[0]);
                const auto& B = val(node.in[1]);
                const int ca = A.last_dim(), cb = B.last_dim();
                Tensor<Scalar>& da = grad_buffer(grads, node.in[0]);
                Tensor<Scalar>& db = grad_buffer(grads, node.in[1]);
                const size_t rows = A.rows();
                for (size_t r = 0; r < rows; ++r) {
                    const Scalar* gr = g.data.data() + r * (ca + cb);
                    for (int i = 0; i < ca; ++i) da.data[r * ca + i] += gr[i];
                    for (int i = 0; i < cb; ++i) db.data[r * cb + i] += gr[ca + i];
                }
                return;
            }
            case Op::SliceLast: {
                const auto& A = val(node.in[0]);
                const int c = A.last_dim();
                Tensor<Scalar>& da = grad_buffer(grads, node.in[0]);
                const size_t rows = A.rows();
                for (size_t r = 0; r < rows; ++r) {
                    for (int i = 0; i < node.aux1; ++i) {
                        da.data[r * c + node.aux0 + i] += g.data[r * node.aux1 + i];
                    }
                }
                return;
            }
            case Op::Transpose: {
                const auto& A = val(node.in[0]);
                const int m = A.shape[0], n = A.shape[1];
                Tensor<Scalar>& da = grad_buffer(grads, node.in[0]);
                for (int i = 0; i < m; ++i) {
                    for (int j = 0; j < n; ++j) {
                        da.data[static_cast<size_t>(i) * n + j] += g.data[static_cast<size_t>(j) * m + i];
                    }
                }
                return;
            }
            case Op::Scale: {
                Tensor<Scalar>& da = grad_buffer(grads, node.in[0]);
                for (size_t i = 0; i < g.numel(); ++i) da.data[i] += node.factor * g.data[i];
                return;
            }
            case Op::MeanAbs: {
                const auto& X = val(node.in[0]);
                Tensor<Scalar>& dx = grad_buffer(grads, node.in[0]);
                const Scalar s = g.data[0] / static_cast<Scalar>(X.numel());
                for (size_t i = 0; i < X.numel(); ++i) {
                    // |x| subgradient at 0 is taken as 0
                    if (X.data[i] > Scalar(0)) dx.data[i] += s;
                    else if (X.data[i] < Scalar(0)) dx.data[i] -= s;
                }
                return;
            }
            case Op::CrossEntropy: {
                const auto& X = val(node.in[0]);
                const int b = X.shape[0], c = X.shape[1];
                Tensor<Scalar>& dx = grad_buffer(grads, node.in[0]);
                const Scalar gl = g.data[0] / static_cast<Scalar>(b);
                for (int r = 0; r < b; ++r) {
                    const Scalar* x = X.data.data() + static_cast<size_t>(r) * c;
                    Scalar mx = x[0];
                    for (int i = 1; i < c; ++i) mx = std::max(mx, x[i]);
                    Scalar sum = 0;
                    for (int i = 0; i < c; ++i) sum += std::exp(x[i] - mx);
                    Scalar* dxr = dx.data.data() + static_cast<size_t>(r) * c;
                    for (int i = 0; i < c; ++i) {
                        Scalar p = std::exp(x[i] - mx) / sum;
                        if (i == node.targets[static_cast<size_t>(r)]) p -= Scalar(1);
                        dxr[i] += gl * p;
                    }
                }
                return;
            }
            case Op::Conv2d: {
                const auto& X = val(node.in[0]);
                const auto& W = val(node.in[1]);
                const int bs = X.shape[0], ic = X.shape[1], h = X.shape[2], wd = X.shape[3];
                const int oc = W.shape[0];
                const int oh = (h + 1) / 2, ow = (wd + 1) / 2;
                Tensor<Scalar>& dx = grad_buffer(grads, node.in[0]);
                Tensor<Scalar>& dw = grad_buffer(grads, node.in[1]);
                Tensor<Scalar>& db = grad_buffer(grads, node.in[2]);
                for (int n = 0; n < bs; ++n) {
                    for (int o = 0; o < oc; ++o) {
                        const Scalar* gplane = g.data.data() + ((static_cast<size_t>(n) * oc + o) * oh) * ow;
                        for (size_t i = 0; i < static_cast<size_t>(oh) * ow; ++i) db.data[o] += gplane[i];
                        for (int i = 0; i < ic; ++i) {
                            const Scalar* xplane = X.data.data() + ((static_cast<size_t>(n) * ic + i) * h) * wd;
                            Scalar* dxplane = dx.data.data() + ((static_cast<size_t>(n) * ic + i) * h) * wd;
                            const Scalar* wk = W.data.data() + ((static_cast<size_t>(o) * ic + i) * 3) * 3;
                            Scalar* dwk = dw.data.data() + ((static_cast<size_t>(o) * ic + i) * 3) * 3;
                            for (int ky = 0; ky < 3; ++ky) {
                                for (int kx = 0; kx < 3; ++kx) {
                                    const Scalar wv = wk[ky * 3 + kx];
                                    Scalar wacc = 0;
                                    const int ox_lo = kx == 0 ? 1 : 0;
                                    const int ox_hi = std::min(ow - 1, (wd - kx) / 2);
                                    for (int oy = 0; oy < oh; ++oy) {
                                        const int iy = 2 * oy + ky - 1;
                                        if (iy < 0 || iy >= h) continue;
                                        const Scalar* xrow = xplane + static_cast<size_t>(iy) * wd;
                                        Scalar* dxrow = dxplane + static_cast<size_t>(iy) * wd;
                                        const Scalar* grow = gplane + static_cast<size_t>(oy) * ow;
                                        for (int ox = ox_lo; ox <= ox_hi; ++ox) {
                                            wacc += grow[ox] * xrow[2 * ox + kx - 1];
                                            dxrow[2 * ox + kx - 1] += wv * grow[ox];
                                        }
                                    }
                                    dwk[ky * 3 + kx] += wacc;
                                }
                            }
                        }
                    }
                }
                return;
            }
            case Op::GlobalAvgPool: {
                const auto& X = val(node.in[0]);
                const int bs = X.shape[0], c = X.shape[1];
                const size_t hw = static_cast<size_t>(X.shape[2]) * X.shape[3];
                Tensor<Scalar>& dx = grad_buffer(grads, node.in[0]);
                for (int n = 0; n < bs; ++n) {
                    for (int ch = 0; ch < c; ++ch) {
                        const Scalar gv = g.data[static_cast<size_t>(n) * c + ch] / static_cast<Scalar>(hw);
                        Scalar* plane = dx.data.data() + (static_cast<size_t>(n) * c + ch) * hw;
                        for (size_t i = 0; i < hw; ++i) plane[i] += gv;
                    }
                }
                return;
            }
            case Op::PairStack: {
                const auto& F = val(node.in[0]);
                const int n = F.shape[0], d = F.shape[1];
                Tensor<Scalar>& df = grad_buffer(grads, node.in[0]);
                for (int i = 0; i < n; ++i) {
                    for (int j = 0; j < n; ++j) {
                        const Scalar* grow = g.data.data() + (static_cast<size_t>(i) * n + j) * (2 * d);
                        Scalar* dfi = df.data.data() + static_cast<size_t>(i) * d;
                        Scalar* dfj = df.data.data() + static_cast<size_t>(j) * d;
                        for (int t = 0; t < d; ++t) {
                            dfi[t] += grow[t];
                            dfj[t] += grow[d + t];
                        }
                    }
                }
                return;
            }
        }
    }
};

}  // namespace kern
