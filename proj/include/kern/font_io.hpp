#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "kern/glyph.hpp"
#include "kern/pgm.hpp"

namespace kern {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// Font-record directory layout:
//   meta.json     {font_id, family_id, style, ink, [synth]}
//   kerning.json  n x n nested arrays, row-major
//   glyphs/<category>.pgm   binary P5, 0 = ink (threshold 128 on load)
inline ordered_json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path.string());
    try {
        return ordered_json::parse(in);
    } catch (const std::exception& e) {
        throw IoError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

inline void write_json_file(const ordered_json& j, const fs::path& path, int indent = 2) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << j.dump(indent) << "\n";
    if (!out) throw IoError("write failed: " + path.string());
}

inline GlyphImage glyph_from_pgm(const PgmImage& img, int category) {
    if (img.width != img.height) {
        throw ValidationError("glyph raster must be square, got " + std::to_string(img.width) + "x" +
                              std::to_string(img.height));
    }
    GlyphImage g = GlyphImage::blank(category, img.width);
    for (size_t i = 0; i < img.pixels.size(); ++i) g.pixels[i] = img.pixels[i] < 128 ? 1 : 0;
    return g;
}

inline PgmImage glyph_to_pgm(const GlyphImage& g) {
    PgmImage img;
    img.width = g.size;
    img.height = g.size;
    img.pixels.resize(g.pixels.size());
    for (size_t i = 0; i < g.pixels.size(); ++i) img.pixels[i] = g.pixels[i] ? 0 : 255;
    return img;
}

// n is taken from the row count; every row must have exactly n entries.
inline KerningTable kerning_from_json(const ordered_json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw IoError(where + ": kerning table must be a non-empty array of rows");
    const int n = static_cast<int>(j.size());
    KerningTable table(n);
    for (int i = 0; i < n; ++i) {
        const auto& row = j[static_cast<size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != n) {
            throw ShapeError(where + ": kerning row " + std::to_string(i) + " has " +
                             std::to_string(row.size()) + " entries, expected " + std::to_string(n));
        }
        for (int k = 0; k < n; ++k) table.at(i, k) = row[static_cast<size_t>(k)].get<double>();
    }
    return table;
}

inline ordered_json kerning_to_json(const KerningTable& table) {
    ordered_json rows = ordered_json::array();
    for (int i = 0; i < table.n; ++i) {
        ordered_json row = ordered_json::array();
        for (int j = 0; j < table.n; ++j) row.push_back(table.at(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline FontRecord load_font_record(const fs::path& dir) {
    FontRecord rec;
    const ordered_json meta = read_json_file(dir / "meta.json");
    rec.font_id = meta.value("font_id", dir.filename().string());
    rec.family_id = meta.value("family_id", rec.font_id);
    rec.style = style_from_name(meta.value("style", ""));
    if (meta.contains("synth")) {
        const auto& s = meta["synth"];
        rec.synth.present = true;
        rec.synth.stroke_width = s.value("stroke_width", 0.0);
        rec.synth.slant = s.value("slant", 0.0);
        const std::string mode = s.value("mode", "A");
        rec.synth.mode = mode.empty() ? 'A' : mode[0];
    }
    rec.gt_table = kerning_from_json(read_json_file(dir / "kerning.json"), rec.font_id);
    const int n = rec.gt_table.n;
    rec.glyphs.reserve(static_cast<size_t>(n));
    for (int c = 0; c < n; ++c) {
        const std::string label = category_label(c, n);
        const fs::path p = dir / "glyphs" / (label + ".pgm");
        if (!fs::exists(p)) throw ValidationError("missing glyph: " + label);
        rec.glyphs.push_back(glyph_from_pgm(read_pgm(p), c));
    }
    rec.validate();
    return rec;
}

inline void save_font_record(const FontRecord& rec, const fs::path& dir) {
    fs::create_directories(dir / "glyphs");
    ordered_json meta;
    meta["font_id"] = rec.font_id;
    meta["family_id"] = rec.family_id;
    meta["style"] = style_name(rec.style);
    meta["ink"] = "0=ink";
    if (rec.synth.present) {
        ordered_json s;
        s["stroke_width"] = rec.synth.stroke_width;
        s["slant"] = rec.synth.slant;
        s["mode"] = std::string(1, rec.synth.mode);
        meta["synth"] = std::move(s);
    }
    write_json_file(meta, dir / "meta.json");
    write_json_file(kerning_to_json(rec.gt_table), dir / "kerning.json");
    const int n = rec.n_categories();
    for (const GlyphImage& g : rec.glyphs) {
        write_pgm(glyph_to_pgm(g), dir / "glyphs" / (category_label(g.category, n) + ".pgm"));
    }
}

inline SplitManifest load_splits(const fs::path& path) {
    const ordered_json j = read_json_file(path);
    SplitManifest m;
    for (const auto& [key, dst] : std::initializer_list<std::pair<const char*, std::vector<std::string>*>>{
             {"train", &m.train}, {"val", &m.val}, {"test", &m.test}}) {
        if (!j.contains(key)) throw IoError("splits manifest missing list: " + std::string(key));
        for (const auto& id : j[key]) dst->push_back(id.get<std::string>());
    }
    return m;
}

inline void save_splits(const SplitManifest& m, const fs::path& path) {
    ordered_json j;
    j["train"] = m.train;
    j["val"] = m.val;
    j["test"] = m.test;
    write_json_file(j, path);
}

// Family disjointness across the three lists ("fonts in the same family stay
// in one split"); also rejects duplicate font ids and unknown ids.
inline std::vector<std::string> validate_splits(const SplitManifest& manifest,
                                                const std::map<std::string, std::string>& font_to_family) {
    std::vector<std::string> violations;
    std::map<std::string, std::string> family_home;  // family -> split name
    std::set<std::string> seen;
    const std::pair<const char*, const std::vector<std::string>*> lists[] = {
        {"train", &manifest.train}, {"val", &manifest.val}, {"test", &manifest.test}};
    for (const auto& [split, ids] : lists) {
        for (const std::string& id : ids) {
            auto it = font_to_family.find(id);
            if (it == font_to_family.end()) throw ValidationError("unknown font_id in splits: " + id);
            if (!seen.insert(id).second) {
                violations.push_back("font " + id + " appears in more than one split");
                continue;
            }
            auto [home, inserted] = family_home.emplace(it->second, split);
            if (!inserted && home->second != split) {
                violations.push_back("family " + it->second + " split across " + home->second + " and " + split);
            }
        }
    }
    return violations;
}

// Loads records for every id in the manifest, keyed by font_id. All fonts in
// one corpus must agree on category count and image size.
inline std::map<std::string, FontRecord> load_corpus(const fs::path& corpus_dir) {
    const SplitManifest m = load_splits(corpus_dir / "splits.json");
    std::map<std::string, FontRecord> records;
    int n = -1, h = -1;
    for (const auto* list : {&m.train, &m.val, &m.test}) {
        for (const std::string& id : *list) {
            FontRecord rec = load_font_record(corpus_dir / id);
            if (n < 0) {
                n = rec.n_categories();
                h = rec.image_size();
            } else if (rec.n_categories() != n || rec.image_size() != h) {
                throw ValidationError("font " + id + ": category count or image size differs from corpus");
            }
            records.emplace(id, std::move(rec));
        }
    }
    return records;
}

}  // namespace kern
