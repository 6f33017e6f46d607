#pragma once

#include <vector>

#include "kern/glyph.hpp"

namespace kern {

// Per-row leftmost ink column, -1 where the row has no ink.
inline std::vector<int> left_profile(const GlyphImage& g) {
    std::vector<int> p(static_cast<size_t>(g.size), -1);
    for (int y = 0; y < g.size; ++y) {
        for (int x = 0; x < g.size; ++x) {
            if (g.ink(y, x)) {
                p[static_cast<size_t>(y)] = x;
                break;
            }
        }
    }
    return p;
}

inline std::vector<int> right_profile(const GlyphImage& g) {
    std::vector<int> p(static_cast<size_t>(g.size), -1);
    for (int y = 0; y < g.size; ++y) {
        for (int x = g.size - 1; x >= 0; --x) {
            if (g.ink(y, x)) {
                p[static_cast<size_t>(y)] = x;
                break;
            }
        }
    }
    return p;
}

// Mean column index over ink pixels.
inline double center_of_gravity(const GlyphImage& g) {
    double sum = 0;
    size_t count = 0;
    for (int y = 0; y < g.size; ++y) {
        for (int x = 0; x < g.size; ++x) {
            if (g.ink(y, x)) {
                sum += x;
                ++count;
            }
        }
    }
    if (count == 0) throw ValidationError("center_of_gravity: glyph has no ink");
    return sum / static_cast<double>(count);
}

// Side-shape feature of length 2H: entry y is the distance from the left
// image edge to the leftmost ink in row y, entry H+y the distance from the
// right edge to the rightmost ink. Rows without ink get the sentinel H.
// Everything is divided by H.
inline std::vector<double> peripheral_feature(const GlyphImage& g) {
    const int h = g.size;
    std::vector<double> f(static_cast<size_t>(2 * h));
    const std::vector<int> left = left_profile(g);
    const std::vector<int> right = right_profile(g);
    for (int y = 0; y < h; ++y) {
        if (left[static_cast<size_t>(y)] < 0) {
            f[static_cast<size_t>(y)] = 1.0;
            f[static_cast<size_t>(h + y)] = 1.0;
        } else {
            f[static_cast<size_t>(y)] = static_cast<double>(left[static_cast<size_t>(y)]) / h;
            f[static_cast<size_t>(h + y)] = static_cast<double>((h - 1) - right[static_cast<size_t>(y)]) / h;
        }
    }
    return f;
}

// Horizontal ink extent (rightmost - leftmost + 1), 0 for an empty glyph.
inline int ink_width(const GlyphImage& g) {
    const auto [lo, hi] = g.ink_span();
    return lo < 0 ? 0 : hi - lo + 1;
}

}  // namespace kern
