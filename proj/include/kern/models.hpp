#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kern/glyph.hpp"
#include "kern/rng.hpp"
#include "kern/tape.hpp"
#include "kern/tensor.hpp"

namespace kern {

// ---- pairwise conditional regressor ----
// [f_i | f_j | onehot(i) | onehot(j)] -> 512 -> 256 -> 1 with ReLU between
// layers. Order matters: the space of "AV" need not equal "VA".
struct PairwiseConfig {
    int feature_dim = 512;
    int n_categories = 52;
    int hidden1 = 512;
    int hidden2 = 256;

    int input_dim() const { return 2 * feature_dim + 2 * n_categories; }
};

template <class Scalar>
struct PairwiseModel {
    PairwiseConfig cfg;
    ParameterStore<Scalar> params;

    static PairwiseModel init(const PairwiseConfig& cfg, uint64_t seed) {
        PairwiseModel m;
        m.cfg = cfg;
        Rng rng(seed, /*stream_tag=*/0x70616972ull);
        m.params.add_uniform("w1", {cfg.input_dim(), cfg.hidden1}, cfg.input_dim(), rng);
        m.params.add_uniform("b1", {cfg.hidden1}, cfg.input_dim(), rng);
        m.params.add_uniform("w2", {cfg.hidden1, cfg.hidden2}, cfg.hidden1, rng);
        m.params.add_uniform("b2", {cfg.hidden2}, cfg.hidden1, rng);
        m.params.add_uniform("w3", {cfg.hidden2, 1}, cfg.hidden2, rng);
        m.params.add_uniform("b3", {1}, cfg.hidden2, rng);
        return m;
    }

    // rows: [B, 2D+2N] -> predicted spaces [B, 1]
    int build_scores(Tape<Scalar>& tape, const std::vector<int>& ids, int rows) const {
        int x = tape.relu(tape.add(tape.matmul(rows, ids[0]), ids[1]));
        x = tape.relu(tape.add(tape.matmul(x, ids[2]), ids[3]));
        return tape.add(tape.matmul(x, ids[4]), ids[5]);
    }

    // One conditioned input row from the font's feature matrix [N, D].
    void fill_row(Scalar* row, const Tensor<Scalar>& features, int i, int j) const {
        const int n = cfg.n_categories, d = cfg.feature_dim;
        if (features.rank() != 2 || features.shape[0] != n || features.shape[1] != d) {
            throw ShapeError("pairwise: feature matrix " + shape_str(features.shape) + " does not match N=" +
                             std::to_string(n) + " D=" + std::to_string(d));
        }
        if (i < 0 || i >= n || j < 0 || j >= n) {
            throw ValidationError("pairwise: category pair (" + std::to_string(i) + "," + std::to_string(j) +
                                  ") out of range [0," + std::to_string(n) + ")");
        }
        std::fill(row, row + cfg.input_dim(), Scalar(0));
        std::copy_n(features.data.data() + static_cast<size_t>(i) * d, d, row);
        std::copy_n(features.data.data() + static_cast<size_t>(j) * d, d, row + d);
        row[2 * d + i] = Scalar(1);
        row[2 * d + n + j] = Scalar(1);
    }

    double forward_one(const Tensor<Scalar>& features, int i, int j) const {
        Tensor<Scalar> rows({1, cfg.input_dim()});
        fill_row(rows.data.data(), features, i, j);
        Tape<Scalar> tape;
        auto ids = tape.attach(params);
        return static_cast<double>(tape.value(build_scores(tape, ids, tape.input(std::move(rows)))).data[0]);
    }

    // All N^2 ordered pairs, one row per pair in row-major (i,j) order.
    KerningTable predict_table(const Tensor<Scalar>& features) const {
        const int n = cfg.n_categories;
        Tensor<Scalar> rows({n * n, cfg.input_dim()});
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                fill_row(rows.data.data() + (static_cast<size_t>(i) * n + j) * cfg.input_dim(), features, i, j);
            }
        }
        Tape<Scalar> tape;
        auto ids = tape.attach(params);
        const Tensor<Scalar>& y = tape.value(build_scores(tape, ids, tape.input(std::move(rows))));
        KerningTable table(n);
        for (size_t k = 0; k < table.values.size(); ++k) table.values[k] = static_cast<double>(y.data[k]);
        return table;
    }
};

// ---- set-wise transformer ----
// All N^2 pair tokens attend to each other in one post-norm transformer
// layer; the output head (layer norm then linear) reads each token
// pointwise. No positional encoding exists, so the model is permutation
// equivariant by construction.
struct SetwiseConfig {
    int feature_dim = 512;
    int n_categories = 52;
    int d_model = 32;
    int heads = 2;
    int ffn_hidden = 64;
    int token_budget = 4096;

    void validate() const {
        if (heads < 1 || d_model % heads != 0) {
            throw ValidationError("setwise: d_model " + std::to_string(d_model) +
                                  " not divisible by heads " + std::to_string(heads));
        }
    }
};

template <class Scalar>
struct SetwiseModel {
    SetwiseConfig cfg;
    ParameterStore<Scalar> params;

    static SetwiseModel init(const SetwiseConfig& cfg, uint64_t seed) {
        cfg.validate();
        SetwiseModel m;
        m.cfg = cfg;
        Rng rng(seed, /*stream_tag=*/0x736574ull);
        const int dm = cfg.d_model;
        m.params.add_uniform("proj_w", {2 * cfg.feature_dim, dm}, 2 * cfg.feature_dim, rng);
        m.params.add_uniform("proj_b", {dm}, 2 * cfg.feature_dim, rng);
        for (const char* name : {"wq", "wk", "wv", "wo"}) {
            m.params.add_uniform(name, {dm, dm}, dm, rng);
            m.params.add_uniform(std::string(1, 'b') + (name + 1), {dm}, dm, rng);
        }
        m.params.add("ln1_g", Tensor<Scalar>::full({dm}, Scalar(1)));
        m.params.add("ln1_b", Tensor<Scalar>::zeros({dm}));
        m.params.add_uniform("ffn1_w", {dm, cfg.ffn_hidden}, dm, rng);
        m.params.add_uniform("ffn1_b", {cfg.ffn_hidden}, dm, rng);
        m.params.add_uniform("ffn2_w", {cfg.ffn_hidden, dm}, cfg.ffn_hidden, rng);
        m.params.add_uniform("ffn2_b", {dm}, cfg.ffn_hidden, rng);
        m.params.add("ln2_g", Tensor<Scalar>::full({dm}, Scalar(1)));
        m.params.add("ln2_b", Tensor<Scalar>::zeros({dm}));
        m.params.add("head_ln_g", Tensor<Scalar>::full({dm}, Scalar(1)));
        m.params.add("head_ln_b", Tensor<Scalar>::zeros({dm}));
        m.params.add_uniform("head_w", {dm, 1}, dm, rng);
        m.params.add_uniform("head_b", {1}, dm, rng);
        return m;
    }

    int slot(const char* name) const {
        const int i = params.find(name);
        if (i < 0) throw ValidationError(std::string("setwise: missing parameter ") + name);
        return i;
    }

    void check_features(const Tensor<Scalar>& features) const {
        if (features.rank() != 2 || features.shape[1] != cfg.feature_dim) {
            throw ShapeError("setwise: feature matrix " + shape_str(features.shape) +
                             " does not match D=" + std::to_string(cfg.feature_dim));
        }
        const int n = features.shape[0];
        if (n < 2) throw ShapeError("setwise: need at least 2 glyphs, got " + std::to_string(n));
        if (n * n > cfg.token_budget) {
            throw ValidationError("setwise: " + std::to_string(n * n) + " tokens exceed budget " +
                                  std::to_string(cfg.token_budget));
        }
    }

    // Token (i,j) = proj([f_i | f_j]) at row-major position i*N+j: [N^2, d_model].
    int build_pair_tokens(Tape<Scalar>& tape, const std::vector<int>& ids, int features) const {
        check_features(tape.value(features));
        const int stacked = tape.pair_stack(features);
        return tape.add(tape.matmul(stacked, ids[static_cast<size_t>(slot("proj_w"))]),
                        ids[static_cast<size_t>(slot("proj_b"))]);
    }

    // features [N, D] -> predicted spaces [N^2, 1].
    int build_outputs(Tape<Scalar>& tape, const std::vector<int>& ids, int features) const {
        auto p = [&](const char* name) { return ids[static_cast<size_t>(slot(name))]; };
        const int tokens = build_pair_tokens(tape, ids, features);
        const int q = tape.add(tape.matmul(tokens, p("wq")), p("bq"));
        const int k = tape.add(tape.matmul(tokens, p("wk")), p("bk"));
        const int v = tape.add(tape.matmul(tokens, p("wv")), p("bv"));
        const int hd = cfg.d_model / cfg.heads;
        const Scalar inv_sqrt = static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(hd)));
        int heads_out = -1;
        for (int h = 0; h < cfg.heads; ++h) {
            const int qh = tape.slice_last(q, h * hd, hd);
            const int kh = tape.slice_last(k, h * hd, hd);
            const int vh = tape.slice_last(v, h * hd, hd);
            const int att = tape.softmax(tape.scale(tape.matmul(qh, tape.transpose(kh)), inv_sqrt));
            const int oh = tape.matmul(att, vh);
            heads_out = h == 0 ? oh : tape.concat(heads_out, oh);
        }
        const int attn = tape.add(tape.matmul(heads_out, p("wo")), p("bo"));
        const int n1 = tape.layer_norm(tape.add(tokens, attn), p("ln1_g"), p("ln1_b"));
        const int ffn_h = tape.relu(tape.add(tape.matmul(n1, p("ffn1_w")), p("ffn1_b")));
        const int ffn = tape.add(tape.matmul(ffn_h, p("ffn2_w")), p("ffn2_b"));
        const int n2 = tape.layer_norm(tape.add(n1, ffn), p("ln2_g"), p("ln2_b"));
        const int head_in = tape.layer_norm(n2, p("head_ln_g"), p("head_ln_b"));
        return tape.add(tape.matmul(head_in, p("head_w")), p("head_b"));
    }

    // All N^2 spaces at once.
    KerningTable predict_table(const Tensor<Scalar>& features) const {
        const int n = features.shape[0];
        Tape<Scalar> tape;
        auto ids = tape.attach(params);
        const Tensor<Scalar>& y = tape.value(build_outputs(tape, ids, tape.input(features)));
        KerningTable table(n);
        for (size_t i = 0; i < table.values.size(); ++i) table.values[i] = static_cast<double>(y.data[i]);
        return table;
    }
};

}  // namespace kern
