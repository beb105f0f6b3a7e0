#pragma once
// Image -> SPN pipeline: IDX ingestion, binarization, border following with
// inner/outer classification, polygonal approximation, gradient-orientation
// change nodes and the eight state networks.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "varsel/spn.hpp"

namespace varsel {

struct MnistDataset {
    int rows = 0, cols = 0;
    std::vector<std::vector<uint8_t>> images;  // row-major grayscale
    std::vector<uint8_t> labels;
};

// Reads the IDX pair (big-endian magics 0x803 / 0x801). Bad magic, truncation
// or an image/label count mismatch is a format error.
MnistDataset load_mnist(const std::string& images_path, const std::string& labels_path);

struct BinaryImage {
    int width = 0, height = 0;
    std::vector<uint8_t> bits;  // row-major 0/1

    uint8_t at(int x, int y) const {
        if (x < 0 || y < 0 || x >= width || y >= height) return 0;
        return bits[static_cast<size_t>(y) * width + x];
    }
    int foreground_count() const {
        int n = 0;
        for (uint8_t b : bits) n += b;
        return n;
    }
};

// bit = 1 iff pixel >= threshold * 255.
BinaryImage binarize(const std::vector<uint8_t>& image, int width, int height,
                     double threshold = 0.5);

struct Contour {
    std::vector<std::array<int, 2>> points;  // ordered border pixels (x, y)
    bool outer = true;
    bool closed = true;
};

// Border following over the 8-connected foreground; outer borders are
// normalized clockwise (screen orientation, y down) and hole borders
// counter-clockwise.
std::vector<Contour> extract_contours(const BinaryImage& bin);

// Ramer-Douglas-Peucker on a closed contour with tolerance epsilon_fraction
// times the arc length. Contours with fewer than 3 points are skipped by the
// caller. Traversal orientation is preserved.
std::vector<std::array<int, 2>> approximate_polygon(const Contour& contour,
                                                    double epsilon_fraction = 0.01);

struct CornerNode {
    std::array<double, 2> position;
    bool convex = true;
    std::optional<std::pair<int, int>> x_change;  // sign from, sign to (+1/-1)
    std::optional<std::pair<int, int>> y_change;
    std::string type_label;  // e.g. "cx_ypos_yneg"
};

// Gradient-orientation-change corners of one oriented polygon. The per-axis
// gradient sign of an edge is the negated sign of its direction component;
// axis-aligned edges contribute zero and do not break sign runs.
std::vector<CornerNode> gradient_change_corners(const std::vector<std::array<int, 2>>& polygon,
                                                bool outer);

inline const std::vector<std::string>& spn_keys() {
    static const std::vector<std::string> keys = {"contour_h", "contour_v", "inner_h",
                                                  "inner_v",   "outer_h",   "outer_v",
                                                  "all_h",     "all_v"};
    return keys;
}

// Full SPN: {contour, inner, outer, all} x {horizontal, vertical}. Horizontal
// edges are directed strictly left-to-right, vertical strictly top-to-bottom;
// equal coordinates yield no edge.
StatePolynetwork build_spn(const std::vector<std::vector<CornerNode>>& polygons,
                           const BinaryImage& bin);

// Convenience: the whole pipeline on one grayscale image.
StatePolynetwork image_to_spn(const std::vector<uint8_t>& image, int width, int height,
                              double threshold = 0.5, double epsilon_fraction = 0.01);

}  // namespace varsel
