#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <vector>

#include "kern/error.hpp"

namespace kern {

struct PgmImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;  // row-major, 8-bit gray
};

// Binary PGM (P5), maxval 255, one byte per pixel.
inline void write_pgm(const PgmImage& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

namespace detail {
inline int pgm_token(std::istream& in, const std::string& path) {
    // Whitespace-separated token, '#' comments allowed per PNM spec.
    int c = in.get();
    while (c != EOF && (std::isspace(c) || c == '#')) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        }
        c = in.get();
    }
    if (c == EOF) throw IoError("truncated PGM header: " + path);
    int value = 0;
    bool any = false;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = in.get();
    }
    if (!any) throw IoError("malformed PGM header: " + path);
    return value;
}
}  // namespace detail

inline PgmImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '5') throw IoError("not a binary PGM (P5): " + path.string());
    PgmImage img;
    img.width = detail::pgm_token(in, path.string());
    img.height = detail::pgm_token(in, path.string());
    const int maxval = detail::pgm_token(in, path.string());
    if (maxval <= 0 || maxval > 255) throw IoError("unsupported PGM maxval: " + path.string());
    img.pixels.resize(static_cast<size_t>(img.width) * img.height);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
        throw IoError("truncated PGM payload: " + path.string());
    }
    return img;
}

}  // namespace kern
