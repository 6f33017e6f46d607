#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "kern/features.hpp"
#include "kern/font_io.hpp"
#include "kern/glyph.hpp"

namespace kern {

// "Monospace": one constant space, the mean of every ground-truth entry of
// every training font.
inline double fit_monospace(const std::vector<const FontRecord*>& train) {
    if (train.empty()) throw ValidationError("fit_monospace: empty training set");
    double sum = 0;
    size_t count = 0;
    for (const FontRecord* f : train) {
        for (double v : f->gt_table.values) {
            sum += v;
            ++count;
        }
    }
    return sum / static_cast<double>(count);
}

// "Average": elementwise mean table across training fonts.
inline KerningTable fit_average(const std::vector<const FontRecord*>& train) {
    if (train.empty()) throw ValidationError("fit_average: empty training set");
    const int n = train[0]->gt_table.n;
    KerningTable table(n);
    for (const FontRecord* f : train) {
        if (f->gt_table.n != n) {
            throw ShapeError("fit_average: font " + f->font_id + " has table size " +
                             std::to_string(f->gt_table.n) + ", expected " + std::to_string(n));
        }
        for (size_t k = 0; k < table.values.size(); ++k) table.values[k] += f->gt_table.values[k];
    }
    for (double& v : table.values) v /= static_cast<double>(train.size());
    return table;
}

// Blank area between two glyphs when the right one is placed at
// center-of-gravity distance s. Per row inked in both glyphs the contribution
// is the count of blank columns strictly between the strokes,
// max(0, L_j + delta - R_i - 1); rows inked in only one glyph contribute 0.
// Nondecreasing in s, which makes bisection valid.
inline double blank_area(const GlyphImage& g_left, const GlyphImage& g_right, double s) {
    if (g_left.ink_count() == 0 || g_right.ink_count() == 0) {
        throw ValidationError("blank_area: empty glyph");
    }
    const double delta = s + center_of_gravity(g_left) - center_of_gravity(g_right);
    const std::vector<int> r = right_profile(g_left);
    const std::vector<int> l = left_profile(g_right);
    double area = 0;
    const int h = std::min(g_left.size, g_right.size);
    for (int y = 0; y < h; ++y) {
        if (r[static_cast<size_t>(y)] < 0 || l[static_cast<size_t>(y)] < 0) continue;
        area += std::max(0.0, (l[static_cast<size_t>(y)] + delta) - r[static_cast<size_t>(y)] - 1.0);
    }
    return area;
}

// Optical-spacing calibration: the blank area a "well spaced" pair should
// have, measured at the ground-truth spacing over the training pairs.
struct OpticalCalibration {
    double target_area = 0.0;
    double s_min = 0.0;
    double s_max = 0.0;
};

inline OpticalCalibration fit_optical(const std::vector<const FontRecord*>& train) {
    if (train.empty()) throw ValidationError("fit_optical: empty training set");
    double sum = 0;
    size_t count = 0;
    for (const FontRecord* f : train) {
        const int n = f->n_categories();
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                sum += blank_area(f->glyphs[static_cast<size_t>(i)], f->glyphs[static_cast<size_t>(j)],
                                  f->gt_table.at(i, j));
                ++count;
            }
        }
    }
    OpticalCalibration cal;
    cal.target_area = sum / static_cast<double>(count);
    cal.s_min = 0.0;
    cal.s_max = 2.0 * train[0]->image_size();
    return cal;
}

struct OpticalEstimate {
    double space = 0.0;
    bool saturated = false;  // target area unreachable within bounds
};

// Smallest s in [s_min, s_max] with blank_area >= target, bisected down to
// 0.25 px.
inline OpticalEstimate optical_estimate(const OpticalCalibration& cal, const GlyphImage& g_left,
                                        const GlyphImage& g_right) {
    constexpr double kResolution = 0.25;
    if (blank_area(g_left, g_right, cal.s_min) >= cal.target_area) return {cal.s_min, false};
    if (blank_area(g_left, g_right, cal.s_max) < cal.target_area) return {cal.s_max, true};
    double lo = cal.s_min, hi = cal.s_max;
    while (hi - lo > kResolution) {
        const double mid = 0.5 * (lo + hi);
        if (blank_area(g_left, g_right, mid) >= cal.target_area) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return {hi, false};
}

inline KerningTable optical_predict_table(const OpticalCalibration& cal, const FontRecord& rec) {
    const int n = rec.n_categories();
    KerningTable table(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            table.at(i, j) = optical_estimate(cal, rec.glyphs[static_cast<size_t>(i)],
                                              rec.glyphs[static_cast<size_t>(j)]).space;
        }
    }
    return table;
}

// ---- baseline artifacts (JSON) ----

struct BaselineArtifact {
    std::string kind;  // monospace | average | optical
    double constant = 0.0;
    KerningTable table;
    OpticalCalibration calibration;
};

inline void save_baseline(const BaselineArtifact& art, const std::filesystem::path& path) {
    ordered_json j;
    j["kind"] = art.kind;
    if (art.kind == "monospace") {
        j["constant"] = art.constant;
    } else if (art.kind == "average") {
        j["n"] = art.table.n;
        j["values"] = kerning_to_json(art.table);
    } else if (art.kind == "optical") {
        j["target_area"] = art.calibration.target_area;
        j["s_min"] = art.calibration.s_min;
        j["s_max"] = art.calibration.s_max;
    } else {
        throw ValidationError("save_baseline: unknown kind " + art.kind);
    }
    write_json_file(j, path);
}

inline BaselineArtifact load_baseline(const std::filesystem::path& path) {
    const ordered_json j = read_json_file(path);
    BaselineArtifact art;
    art.kind = j.value("kind", "");
    if (art.kind == "monospace") {
        art.constant = j.at("constant").get<double>();
    } else if (art.kind == "average") {
        art.table = kerning_from_json(j.at("values"), path.string());
    } else if (art.kind == "optical") {
        art.calibration.target_area = j.at("target_area").get<double>();
        art.calibration.s_min = j.at("s_min").get<double>();
        art.calibration.s_max = j.at("s_max").get<double>();
    } else {
        throw ValidationError("load_baseline: unknown kind in " + path.string());
    }
    return art;
}

inline KerningTable baseline_predict_table(const BaselineArtifact& art, const FontRecord& rec) {
    const int n = rec.n_categories();
    if (art.kind == "monospace") {
        KerningTable t(n);
        for (double& v : t.values) v = art.constant;
        return t;
    }
    if (art.kind == "average") {
        if (art.table.n != n) {
            throw ShapeError("average baseline has N=" + std::to_string(art.table.n) + ", font has N=" +
                             std::to_string(n));
        }
        return art.table;
    }
    if (art.kind == "optical") return optical_predict_table(art.calibration, rec);
    throw ValidationError("baseline_predict_table: unknown kind " + art.kind);
}

}  // namespace kern
