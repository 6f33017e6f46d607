#pragma once

#include <string>
#include <vector>

#include "kern/encoder.hpp"
#include "kern/features.hpp"
#include "kern/glyph.hpp"
#include "kern/tensor.hpp"

namespace kern {

enum class FeatureKind { EncoderFeatures, Peripheral };

inline std::string feature_kind_name(FeatureKind k) {
    return k == FeatureKind::EncoderFeatures ? "encoder" : "peripheral";
}

inline FeatureKind feature_kind_from_name(const std::string& s) {
    if (s == "encoder") return FeatureKind::EncoderFeatures;
    if (s == "peripheral") return FeatureKind::Peripheral;
    throw ValidationError("unknown feature kind: " + s + " (expected encoder|peripheral)");
}

inline int feature_dim_for(FeatureKind kind, int image_size, int encoder_dim) {
    return kind == FeatureKind::EncoderFeatures ? encoder_dim : 2 * image_size;
}

// Per-font feature matrix [N, D]; the encoder, when used, is frozen so this
// is a pure function of the record.
template <class Scalar>
Tensor<Scalar> font_features(const FontRecord& rec, FeatureKind kind, const Encoder<Scalar>* encoder) {
    const int n = rec.n_categories();
    if (kind == FeatureKind::EncoderFeatures) {
        if (encoder == nullptr) throw ValidationError("font_features: encoder features requested without encoder");
        std::vector<const GlyphImage*> glyphs(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) glyphs[static_cast<size_t>(i)] = &rec.glyphs[static_cast<size_t>(i)];
        return encoder->encode(glyphs);
    }
    const int d = 2 * rec.image_size();
    Tensor<Scalar> f({n, d});
    for (int i = 0; i < n; ++i) {
        const std::vector<double> p = peripheral_feature(rec.glyphs[static_cast<size_t>(i)]);
        for (int k = 0; k < d; ++k) f.at2(i, k) = static_cast<Scalar>(p[static_cast<size_t>(k)]);
    }
    return f;
}

}  // namespace kern
