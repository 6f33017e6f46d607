#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "kern/adam.hpp"
#include "kern/early_stopping.hpp"
#include "kern/features.hpp"
#include "kern/glyph.hpp"
#include "kern/gradcheck.hpp"
#include "kern/rng.hpp"
#include "kern/tape.hpp"

namespace kern {

// Small trainable image embedder: four 3x3 stride-2 conv stages with ReLU,
// global average pooling, and a linear map to the feature dimension. A
// category head on top is used only while pretraining; afterwards the
// parameters are frozen and only the feature path is evaluated.
struct EncoderConfig {
    int image_size = 64;
    int feature_dim = 512;
    int n_categories = 52;
    std::array<int, 4> channels{16, 32, 64, 128};
};

template <class Scalar>
struct Encoder {
    EncoderConfig cfg;
    ParameterStore<Scalar> params;
    bool frozen = false;

    static Encoder init(const EncoderConfig& cfg, uint64_t seed) {
        Encoder e;
        e.cfg = cfg;
        Rng rng(seed, /*stream_tag=*/0x656e63ull);
        int ic = 1;
        for (int s = 0; s < 4; ++s) {
            const int oc = cfg.channels[static_cast<size_t>(s)];
            const std::string tag = "conv" + std::to_string(s + 1);
            e.params.add_uniform(tag + "_w", {oc, ic, 3, 3}, ic * 9, rng);
            e.params.add_uniform(tag + "_b", {oc}, ic * 9, rng);
            ic = oc;
        }
        e.params.add_uniform("fc_w", {cfg.channels[3], cfg.feature_dim}, cfg.channels[3], rng);
        e.params.add_uniform("fc_b", {cfg.feature_dim}, cfg.channels[3], rng);
        e.params.add_uniform("head_w", {cfg.feature_dim, cfg.n_categories}, cfg.feature_dim, rng);
        e.params.add_uniform("head_b", {cfg.n_categories}, cfg.feature_dim, rng);
        return e;
    }

    // images: [B, 1, H, H] -> features [B, D]
    int build_features(Tape<Scalar>& tape, const std::vector<int>& ids, int images) const {
        int x = images;
        for (int s = 0; s < 4; ++s) {
            x = tape.relu(tape.conv2d(x, ids[static_cast<size_t>(2 * s)], ids[static_cast<size_t>(2 * s + 1)]));
        }
        x = tape.global_avg_pool(x);
        return tape.add(tape.matmul(x, ids[8]), ids[9]);
    }

    int build_logits(Tape<Scalar>& tape, const std::vector<int>& ids, int features) const {
        return tape.add(tape.matmul(features, ids[10]), ids[11]);
    }

    Tensor<Scalar> images_tensor(const std::vector<const GlyphImage*>& glyphs) const {
        const int h = cfg.image_size;
        Tensor<Scalar> t({static_cast<int>(glyphs.size()), 1, h, h});
        for (size_t i = 0; i < glyphs.size(); ++i) {
            if (glyphs[i]->size != h) {
                throw ShapeError("encoder: glyph size " + std::to_string(glyphs[i]->size) +
                                 " does not match configured " + std::to_string(h));
            }
            for (size_t p = 0; p < glyphs[i]->pixels.size(); ++p) {
                t.data[i * static_cast<size_t>(h) * h + p] = glyphs[i]->pixels[p] ? Scalar(1) : Scalar(0);
            }
        }
        return t;
    }

    // Forward-only feature extraction, [B, D].
    Tensor<Scalar> encode(const std::vector<const GlyphImage*>& glyphs) const {
        Tape<Scalar> tape;
        auto ids = tape.attach(params);
        const int feats = build_features(tape, ids, tape.input(images_tensor(glyphs)));
        return tape.value(feats);
    }

    std::vector<Scalar> encode_one(const GlyphImage& g) const {
        const Tensor<Scalar> f = encode({&g});
        return f.data;
    }
};

struct PretrainConfig {
    double lr = 1e-3;
    int batch_size = 64;
    int patience = 10;
    int max_epochs = 100;
    uint64_t seed = 1;
};

struct PretrainStats {
    double best_val_accuracy = 0.0;
    int best_epoch = 0;
    int epochs_run = 0;
};

using LabeledGlyphs = std::vector<std::pair<const GlyphImage*, int>>;

// Cross-entropy category pretraining with Adam and early stopping on
// held-out accuracy. The returned encoder is frozen.
template <class Scalar>
PretrainStats pretrain_encoder(Encoder<Scalar>& encoder, const LabeledGlyphs& train,
                               const LabeledGlyphs& held_out, const PretrainConfig& cfg) {
    std::set<int> cats;
    for (const auto& [g, label] : train) cats.insert(label);
    if (cats.size() < 2) throw ValidationError("pretrain: need at least 2 categories, got " +
                                               std::to_string(cats.size()));

    auto eval_accuracy = [&](const LabeledGlyphs& data) {
        size_t correct = 0;
        const size_t chunk = 64;
        for (size_t at = 0; at < data.size(); at += chunk) {
            const size_t n = std::min(chunk, data.size() - at);
            std::vector<const GlyphImage*> glyphs(n);
            for (size_t i = 0; i < n; ++i) glyphs[i] = data[at + i].first;
            Tape<Scalar> tape;
            auto ids = tape.attach(encoder.params);
            const int logits = encoder.build_logits(
                tape, ids, encoder.build_features(tape, ids, tape.input(encoder.images_tensor(glyphs))));
            const Tensor<Scalar>& L = tape.value(logits);
            for (size_t i = 0; i < n; ++i) {
                int arg = 0;
                for (int c = 1; c < L.shape[1]; ++c) {
                    if (L.at2(static_cast<int>(i), c) > L.at2(static_cast<int>(i), arg)) arg = c;
                }
                if (arg == data[at + i].second) ++correct;
            }
        }
        return data.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(data.size());
    };

    AdamState<Scalar> state = AdamState<Scalar>::init(encoder.params);
    EarlyStopper stopper{cfg.patience, /*maximize=*/true};
    ParameterStore<Scalar> best = encoder.params;
    Rng shuffle_rng(cfg.seed, /*stream_tag=*/0x70726574ull);
    std::vector<size_t> order(train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    PretrainStats stats;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order.data(), order.size());
        for (size_t at = 0; at < order.size(); at += static_cast<size_t>(cfg.batch_size)) {
            const size_t n = std::min(static_cast<size_t>(cfg.batch_size), order.size() - at);
            std::vector<const GlyphImage*> glyphs(n);
            std::vector<int> targets(n);
            for (size_t i = 0; i < n; ++i) {
                glyphs[i] = train[order[at + i]].first;
                targets[i] = train[order[at + i]].second;
            }
            Tape<Scalar> tape;
            auto ids = tape.attach(encoder.params);
            const int logits = encoder.build_logits(
                tape, ids, encoder.build_features(tape, ids, tape.input(encoder.images_tensor(glyphs))));
            const int loss = tape.cross_entropy(logits, std::move(targets));
            auto grads = tape.backward(loss, encoder.params.size());
            if (!adam_step(encoder.params, grads, state, cfg.lr)) {
                throw NumericError("pretrain: non-finite gradient at epoch " + std::to_string(epoch));
            }
        }
        const double acc = eval_accuracy(held_out);
        if (stopper.observe(acc)) best = encoder.params;
        stats.epochs_run = epoch;
        if (stopper.should_stop()) break;
    }
    encoder.params = std::move(best);
    encoder.frozen = true;
    stats.best_val_accuracy = stopper.best;
    stats.best_epoch = stopper.best_epoch;
    return stats;
}

// All glyphs of all fonts, labeled by category.
inline LabeledGlyphs labeled_glyphs(const std::vector<const FontRecord*>& fonts) {
    LabeledGlyphs out;
    for (const FontRecord* f : fonts) {
        for (const GlyphImage& g : f->glyphs) out.emplace_back(&g, g.category);
    }
    return out;
}

}  // namespace kern
