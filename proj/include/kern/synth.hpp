#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "kern/features.hpp"
#include "kern/font_io.hpp"
#include "kern/glyph.hpp"
#include "kern/rng.hpp"

namespace kern {

// Deterministic stand-in corpus. Glyph shapes come from a fixed parametric
// family assigned to categories cyclically; each font has one stroke width
// and one shear slant. The ground-truth rule keeps the minimum horizontal
// ink-to-ink clearance equal to a per-font gap derived from the stroke width,
// so both models can in principle learn it from the rasters alone.
enum class ShapeKind : int {
    VerticalBar = 0,
    Rectangle = 1,
    LeftWedge = 2,
    RightWedge = 3,
    Ring = 4,
    TeeShape = 5,
    EllShape = 6,
};

constexpr int kShapeKindCount = 7;

struct SynthConfig {
    int n_categories = 10;
    int image_size = 64;
    int fonts_train = 200;
    int fonts_val = 25;
    int fonts_test = 25;
    char mode = 'A';
    uint64_t seed = 1;

    void validate() const {
        if (n_categories < 2) throw ValidationError("synth: n_categories must be >= 2");
        if (!valid_image_size(image_size)) {
            throw ValidationError("synth: image_size must be one of 32/64/128/256");
        }
        if (fonts_train < 1 || fonts_val < 0 || fonts_test < 0) {
            throw ValidationError("synth: font counts must be positive (train >= 1)");
        }
        if (mode != 'A' && mode != 'B') throw ValidationError("synth: mode must be A or B");
    }
};

// Later cycles through the shape family shrink, so repeated kinds stay
// distinguishable by size.
inline double category_scale(int category) {
    return 1.0 / (1.0 + 0.35 * (category / kShapeKindCount));
}

inline GlyphImage draw_synthetic_glyph(int category, int image_size, int stroke_width, double slant) {
    const int h = image_size;
    const int b = baseline_row_for(h);
    const ShapeKind kind = static_cast<ShapeKind>(category % kShapeKindCount);
    const double scale = category_scale(category);
    const int hgt = std::max(4, static_cast<int>(std::lround(scale * 0.55 * h)));
    const int wid = std::max(4, static_cast<int>(std::lround(scale * 0.42 * h)));
    const int top = b - hgt + 1;
    const int x0 = (h - wid) / 2;
    const int x1 = x0 + wid - 1;
    const int xc = x0 + wid / 2;
    const int ws = std::max(2, std::min({stroke_width, wid, hgt}));

    GlyphImage g = GlyphImage::blank(category, h);
    auto put = [&](int y, int x) {
        // shear about the baseline
        const int xs = x + static_cast<int>(std::lround(slant * (b - y)));
        if (y >= 0 && y < h && xs >= 0 && xs < h) g.set_ink(y, xs);
    };
    auto fill = [&](int ya, int yb, int xa, int xb) {
        for (int y = ya; y <= yb; ++y) {
            for (int x = xa; x <= xb; ++x) put(y, x);
        }
    };

    switch (kind) {
        case ShapeKind::VerticalBar:
            fill(top, b, xc - ws / 2, xc - ws / 2 + ws - 1);
            break;
        case ShapeKind::Rectangle:
            fill(top, b, x0, x1);
            break;
        case ShapeKind::LeftWedge:
            for (int t = 0; t < hgt; ++t) {
                const int w = ws + static_cast<int>(std::lround((wid - ws) * (hgt == 1 ? 1.0 : double(t) / (hgt - 1))));
                fill(top + t, top + t, x1 - w + 1, x1);
            }
            break;
        case ShapeKind::RightWedge:
            for (int t = 0; t < hgt; ++t) {
                const int w = ws + static_cast<int>(std::lround((wid - ws) * (hgt == 1 ? 1.0 : double(t) / (hgt - 1))));
                fill(top + t, top + t, x0, x0 + w - 1);
            }
            break;
        case ShapeKind::Ring: {
            const int r = std::max(2, std::min(wid, hgt) / 2);
            const int cy = b - r;
            const int rin = std::max(0, r - ws);
            for (int y = cy - r; y <= cy + r; ++y) {
                for (int x = xc - r; x <= xc + r; ++x) {
                    const int d2 = (y - cy) * (y - cy) + (x - xc) * (x - xc);
                    if (d2 <= r * r && d2 >= rin * rin) put(y, x);
                }
            }
            break;
        }
        case ShapeKind::TeeShape:
            fill(top, top + ws - 1, x0, x1);
            fill(top, b, xc - ws / 2, xc - ws / 2 + ws - 1);
            break;
        case ShapeKind::EllShape:
            fill(top, b, x0, x0 + ws - 1);
            fill(b - ws + 1, b, x0, x1);
            break;
    }
    return g;
}

// Per-font inputs to the spacing rule.
struct SynthContext {
    double gap;           // minimum clearance, 0.5 * stroke_width + 4
    double mode_b_term;   // 0 in mode A
};

inline SynthContext make_synth_context(const std::vector<GlyphImage>& glyphs, double stroke_width,
                                       char mode) {
    SynthContext ctx{0.5 * stroke_width + 4.0, 0.0};
    if (mode == 'B') {
        if (glyphs.empty()) throw ValidationError("synth context: no glyphs");
        double mean_width = 0;
        for (const GlyphImage& g : glyphs) mean_width += ink_width(g);
        mean_width /= static_cast<double>(glyphs.size());
        ctx.mode_b_term = 0.1 * (mean_width - glyphs[0].size / 4.0);
    }
    return ctx;
}

// Ground-truth center-of-gravity distance between glyph i (left) and glyph j
// (right). The right glyph's frame is offset so the smallest per-row
// clearance over rows inked in both glyphs equals ctx.gap; if no row is inked
// in both, the global extents are used instead.
inline double synthetic_gt_space(const GlyphImage& gi, const GlyphImage& gj, const SynthContext& ctx) {
    if (gi.ink_count() == 0 || gj.ink_count() == 0) {
        throw ValidationError("synthetic_gt_space: empty glyph");
    }
    const std::vector<int> ri = right_profile(gi);
    const std::vector<int> lj = left_profile(gj);
    const int h = gi.size;
    bool common = false;
    int reach = 0;  // max over common rows of R_i(y) - L_j(y)
    for (int y = 0; y < h && y < gj.size; ++y) {
        if (ri[static_cast<size_t>(y)] < 0 || lj[static_cast<size_t>(y)] < 0) continue;
        const int d = ri[static_cast<size_t>(y)] - lj[static_cast<size_t>(y)];
        reach = common ? std::max(reach, d) : d;
        common = true;
    }
    double delta;
    if (common) {
        delta = ctx.gap + reach;
    } else {
        int max_r = -1, min_l = -1;
        for (int v : ri) max_r = std::max(max_r, v);
        for (int v : lj) {
            if (v >= 0 && (min_l < 0 || v < min_l)) min_l = v;
        }
        delta = ctx.gap + max_r - min_l;
    }
    return delta + center_of_gravity(gj) - center_of_gravity(gi) + ctx.mode_b_term;
}

inline KerningTable synthetic_gt_table(const std::vector<GlyphImage>& glyphs, const SynthContext& ctx) {
    const int n = static_cast<int>(glyphs.size());
    KerningTable table(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            table.at(i, j) = synthetic_gt_space(glyphs[static_cast<size_t>(i)], glyphs[static_cast<size_t>(j)], ctx);
        }
    }
    return table;
}

// One font: stroke width and slant from the font's own counter stream, shapes
// per category, ground truth per the mode rule. The font index is global
// across splits so the rasters do not depend on how splits are sized.
inline FontRecord make_synthetic_font(const SynthConfig& cfg, const std::string& font_id,
                                      const std::string& family_id, uint64_t global_index) {
    Rng rng(cfg.seed, global_index);
    const int stroke = static_cast<int>(rng.uniform_int(4, 16));
    const double slant = rng.uniform(-0.2, 0.2);

    FontRecord rec;
    rec.font_id = font_id;
    rec.family_id = family_id;
    rec.style = FontStyle::Synthetic;
    rec.synth.present = true;
    rec.synth.stroke_width = stroke;
    rec.synth.slant = slant;
    rec.synth.mode = cfg.mode;
    rec.glyphs.reserve(static_cast<size_t>(cfg.n_categories));
    for (int c = 0; c < cfg.n_categories; ++c) {
        rec.glyphs.push_back(draw_synthetic_glyph(c, cfg.image_size, stroke, slant));
    }
    rec.gt_table = synthetic_gt_table(rec.glyphs, make_synth_context(rec.glyphs, stroke, cfg.mode));
    rec.validate();
    return rec;
}

// Writes the corpus tree and splits.json; byte-identical for identical cfg.
// Every two consecutive fonts of a split share a family, and families never
// cross splits.
inline SplitManifest generate_synthetic_corpus(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
    cfg.validate();
    std::filesystem::create_directories(out_dir);
    SplitManifest manifest;
    uint64_t global_index = 0;
    const std::pair<const char*, int> splits[] = {
        {"train", cfg.fonts_train}, {"val", cfg.fonts_val}, {"test", cfg.fonts_test}};
    for (const auto& [split, count] : splits) {
        std::vector<std::string>& list = split == std::string("train") ? manifest.train
                                       : split == std::string("val")   ? manifest.val
                                                                       : manifest.test;
        for (int i = 0; i < count; ++i, ++global_index) {
            char font_id[64], family_id[64];
            std::snprintf(font_id, sizeof font_id, "synth-%s-%04d", split, i);
            std::snprintf(family_id, sizeof family_id, "fam-%s-%04d", split, i / 2);
            FontRecord rec = make_synthetic_font(cfg, font_id, family_id, global_index);
            save_font_record(rec, out_dir / font_id);
            list.push_back(font_id);
        }
    }
    save_splits(manifest, out_dir / "splits.json");
    return manifest;
}

}  // namespace kern
