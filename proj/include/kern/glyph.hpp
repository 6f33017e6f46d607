#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kern/error.hpp"

namespace kern {

// Baseline sits 96/256 of the height from the bottom, i.e. row H*160/256
// from the top.
inline int baseline_row_for(int image_size) {
    return static_cast<int>(std::lround(image_size * 160.0 / 256.0));
}

inline bool valid_image_size(int h) { return h == 32 || h == 64 || h == 128 || h == 256; }

// One binary letter raster (1 = ink).
struct GlyphImage {
    int category = 0;
    int size = 0;  // square H x H
    std::vector<uint8_t> pixels;
    int baseline_row = 0;

    static GlyphImage blank(int category, int size) {
        GlyphImage g;
        g.category = category;
        g.size = size;
        g.pixels.assign(static_cast<size_t>(size) * size, 0);
        g.baseline_row = baseline_row_for(size);
        return g;
    }

    uint8_t ink(int y, int x) const { return pixels[static_cast<size_t>(y) * size + x]; }
    void set_ink(int y, int x, uint8_t v = 1) { pixels[static_cast<size_t>(y) * size + x] = v; }

    size_t ink_count() const {
        size_t n = 0;
        for (uint8_t p : pixels) n += p ? 1 : 0;
        return n;
    }

    // Horizontal extent of the ink, inclusive; {-1,-1} when empty.
    std::pair<int, int> ink_span() const {
        int lo = -1, hi = -1;
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                if (!ink(y, x)) continue;
                if (lo < 0 || x < lo) lo = x;
                if (x > hi) hi = x;
            }
        }
        return {lo, hi};
    }
};

// N x N letter spaces in pixels; row = first letter, column = second letter.
struct KerningTable {
    int n = 0;
    std::vector<double> values;

    KerningTable() = default;
    explicit KerningTable(int n_) : n(n_), values(static_cast<size_t>(n_) * n_, 0.0) {}

    double& at(int i, int j) { return values[static_cast<size_t>(i) * n + j]; }
    double at(int i, int j) const { return values[static_cast<size_t>(i) * n + j]; }

    bool all_finite() const {
        for (double v : values) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }
};

enum class FontStyle { Serif, SansSerif, Handwriting, Display, Synthetic, Unknown };

inline std::string style_name(FontStyle s) {
    switch (s) {
        case FontStyle::Serif: return "Serif";
        case FontStyle::SansSerif: return "Sans-serif";
        case FontStyle::Handwriting: return "Handwriting";
        case FontStyle::Display: return "Display";
        case FontStyle::Synthetic: return "Synthetic";
        case FontStyle::Unknown: break;
    }
    return "Unknown";
}

// Unrecognized tags group under Unknown rather than failing the load.
inline FontStyle style_from_name(const std::string& s) {
    if (s == "Serif") return FontStyle::Serif;
    if (s == "Sans-serif") return FontStyle::SansSerif;
    if (s == "Handwriting") return FontStyle::Handwriting;
    if (s == "Display") return FontStyle::Display;
    if (s == "Synthetic") return FontStyle::Synthetic;
    return FontStyle::Unknown;
}

// Category order is fixed: A..Z a..z when n = 52, decimal indices otherwise.
inline std::string category_label(int category, int n_categories) {
    if (n_categories == 52) {
        if (category < 26) return std::string(1, static_cast<char>('A' + category));
        return std::string(1, static_cast<char>('a' + category - 26));
    }
    return std::to_string(category);
}

inline int category_from_label(const std::string& label, int n_categories) {
    if (n_categories == 52 && label.size() == 1) {
        const char c = label[0];
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return 26 + (c - 'a');
        return -1;
    }
    try {
        const int v = std::stoi(label);
        return (v >= 0 && v < n_categories && label == std::to_string(v)) ? v : -1;
    } catch (...) {
        return -1;
    }
}

// Synthetic generation parameters carried in meta.json so the ground-truth
// rule can be re-run from the emitted rasters alone.
struct SynthInfo {
    bool present = false;
    double stroke_width = 0.0;
    double slant = 0.0;
    char mode = 'A';
};

struct FontRecord {
    std::string font_id;
    std::string family_id;
    FontStyle style = FontStyle::Unknown;
    std::vector<GlyphImage> glyphs;  // one per category, category order
    KerningTable gt_table;
    SynthInfo synth;

    int n_categories() const { return static_cast<int>(glyphs.size()); }
    int image_size() const { return glyphs.empty() ? 0 : glyphs[0].size; }

    void validate() const {
        if (glyphs.empty()) throw ValidationError("font " + font_id + ": no glyphs");
        const int h = glyphs[0].size;
        if (!valid_image_size(h)) {
            throw ValidationError("font " + font_id + ": image size " + std::to_string(h) +
                                  " not in {32,64,128,256}");
        }
        for (size_t i = 0; i < glyphs.size(); ++i) {
            const GlyphImage& g = glyphs[i];
            if (g.category != static_cast<int>(i)) {
                throw ValidationError("font " + font_id + ": glyph order broken at index " + std::to_string(i));
            }
            if (g.size != h) throw ValidationError("font " + font_id + ": mixed glyph sizes");
            if (g.baseline_row != baseline_row_for(h)) {
                throw ValidationError("font " + font_id + ": baseline row " + std::to_string(g.baseline_row) +
                                      " != " + std::to_string(baseline_row_for(h)));
            }
            if (g.ink_count() == 0) {
                throw ValidationError("font " + font_id + ": glyph " +
                                      category_label(g.category, n_categories()) + " has no ink");
            }
        }
        if (gt_table.n != n_categories()) {
            throw ShapeError("font " + font_id + ": kerning table " + std::to_string(gt_table.n) + "x" +
                             std::to_string(gt_table.n) + " does not match " +
                             std::to_string(n_categories()) + " glyphs");
        }
        if (!gt_table.all_finite()) throw ValidationError("font " + font_id + ": non-finite kerning entry");
    }
};

struct SplitManifest {
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;
};

}  // namespace kern
