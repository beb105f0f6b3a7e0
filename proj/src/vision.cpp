#include "varsel/vision.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace varsel {

namespace {

uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw std::runtime_error("truncated IDX file: " + path);
    return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

}  // namespace

MnistDataset load_mnist(const std::string& images_path, const std::string& labels_path) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw std::runtime_error("cannot open IDX image file: " + images_path);
    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) throw std::runtime_error("cannot open IDX label file: " + labels_path);

    if (uint32_t magic = read_be32(imgs, images_path); magic != 0x803)
        throw std::runtime_error("bad IDX image magic in " + images_path);
    if (uint32_t magic = read_be32(labs, labels_path); magic != 0x801)
        throw std::runtime_error("bad IDX label magic in " + labels_path);

    MnistDataset ds;
    uint32_t n_images = read_be32(imgs, images_path);
    ds.rows = static_cast<int>(read_be32(imgs, images_path));
    ds.cols = static_cast<int>(read_be32(imgs, images_path));
    uint32_t n_labels = read_be32(labs, labels_path);
    if (n_images != n_labels)
        throw std::runtime_error("image/label count mismatch: " + std::to_string(n_images) +
                                 " vs " + std::to_string(n_labels));

    const size_t px = static_cast<size_t>(ds.rows) * ds.cols;
    ds.images.resize(n_images);
    for (uint32_t i = 0; i < n_images; ++i) {
        ds.images[i].resize(px);
        if (!imgs.read(reinterpret_cast<char*>(ds.images[i].data()), px))
            throw std::runtime_error("truncated IDX file: " + images_path);
    }
    ds.labels.resize(n_labels);
    if (!labs.read(reinterpret_cast<char*>(ds.labels.data()), n_labels))
        throw std::runtime_error("truncated IDX file: " + labels_path);
    return ds;
}

BinaryImage binarize(const std::vector<uint8_t>& image, int width, int height, double threshold) {
    if (threshold <= 0.0 || threshold >= 1.0)
        throw std::invalid_argument("threshold must lie in (0,1)");
    if (static_cast<size_t>(width) * height != image.size())
        throw std::invalid_argument("image size does not match dimensions");
    BinaryImage bin;
    bin.width = width;
    bin.height = height;
    bin.bits.resize(image.size());
    const double cut = threshold * 255.0;
    for (size_t i = 0; i < image.size(); ++i) bin.bits[i] = image[i] >= cut ? 1 : 0;
    return bin;
}

namespace {

// 8-neighborhood in clockwise screen order starting east (y grows down).
constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDy[8] = {0, 1, 1, 1, 0, -1, -1, -1};

int direction_of(int from_x, int from_y, int to_x, int to_y) {
    for (int d = 0; d < 8; ++d)
        if (from_x + kDx[d] == to_x && from_y + kDy[d] == to_y) return d;
    throw std::logic_error("pixels are not neighbors");
}

double shoelace(const std::vector<std::array<int, 2>>& pts) {
    double a = 0;
    for (size_t i = 0; i < pts.size(); ++i) {
        const auto& p = pts[i];
        const auto& q = pts[(i + 1) % pts.size()];
        a += double(p[0]) * q[1] - double(q[0]) * p[1];
    }
    return a / 2.0;  // positive = clockwise on screen (y down)
}

}  // namespace

std::vector<Contour> extract_contours(const BinaryImage& bin) {
    // Border following over a padded signed copy; borders are marked so each
    // is traced once. Outer borders start where the west neighbor is
    // background, hole borders where the east neighbor is.
    const int w = bin.width + 2, h = bin.height + 2;
    std::vector<int> f(static_cast<size_t>(w) * h, 0);
    for (int y = 0; y < bin.height; ++y)
        for (int x = 0; x < bin.width; ++x)
            f[static_cast<size_t>(y + 1) * w + (x + 1)] = bin.at(x, y);
    auto at = [&](int x, int y) -> int& { return f[static_cast<size_t>(y) * w + x]; };

    std::vector<Contour> contours;
    int nbd = 1;
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            bool outer_start = at(x, y) == 1 && at(x - 1, y) == 0;
            bool hole_start = at(x, y) >= 1 && at(x + 1, y) == 0;
            if (!outer_start && !hole_start) continue;
            ++nbd;
            const bool outer = outer_start;
            int sx = x, sy = y;
            int i2x = outer ? x - 1 : x + 1, i2y = y;

            Contour c;
            c.outer = outer;

            // First nonzero neighbor clockwise from (i2, j2).
            int start_dir = direction_of(sx, sy, i2x, i2y);
            int d = -1;
            for (int k = 1; k <= 8; ++k) {
                int cand = (start_dir + k) % 8;
                if (at(sx + kDx[cand], sy + kDy[cand]) != 0) {
                    d = cand;
                    break;
                }
            }
            if (d < 0) {
                at(sx, sy) = -nbd;  // isolated pixel
                c.points.push_back({sx - 1, sy - 1});
                contours.push_back(std::move(c));
                continue;
            }
            int i1x = sx + kDx[d], i1y = sy + kDy[d];
            i2x = i1x;
            i2y = i1y;
            int i3x = sx, i3y = sy;

            while (true) {
                int from = direction_of(i3x, i3y, i2x, i2y);
                int found = -1;
                bool east_was_zero = false;
                for (int k = 1; k <= 8; ++k) {
                    int cand = (from - k + 16) % 8;  // counter-clockwise search
                    int px = i3x + kDx[cand], py = i3y + kDy[cand];
                    if (at(px, py) != 0) {
                        found = cand;
                        break;
                    }
                    if (cand == 0) east_was_zero = true;  // east neighbor examined and empty
                }
                c.points.push_back({i3x - 1, i3y - 1});
                if (east_was_zero)
                    at(i3x, i3y) = -nbd;
                else if (at(i3x, i3y) == 1)
                    at(i3x, i3y) = nbd;

                int i4x = i3x + kDx[found], i4y = i3y + kDy[found];
                if (i4x == sx && i4y == sy && i3x == i1x && i3y == i1y) break;
                i2x = i3x;
                i2y = i3y;
                i3x = i4x;
                i3y = i4y;
            }
            contours.push_back(std::move(c));
        }
    }

    // Orientation normalization: outer clockwise, holes counter-clockwise.
    for (auto& c : contours) {
        if (c.points.size() < 3) continue;
        double a = shoelace(c.points);
        if ((c.outer && a < 0) || (!c.outer && a > 0))
            std::reverse(c.points.begin(), c.points.end());
    }
    return contours;
}

namespace {

double point_segment_distance(const std::array<int, 2>& p, const std::array<int, 2>& a,
                              const std::array<int, 2>& b) {
    const double ax = a[0], ay = a[1], bx = b[0], by = b[1], px = p[0], py = p[1];
    const double dx = bx - ax, dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    if (len2 < 1e-12) return std::hypot(px - ax, py - ay);
    double t = ((px - ax) * dx + (py - ay) * dy) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(px - (ax + t * dx), py - (ay + t * dy));
}

void rdp(const std::vector<std::array<int, 2>>& pts, size_t lo, size_t hi, double eps,
         std::vector<bool>& keep) {
    if (hi <= lo + 1) return;
    double best = -1;
    size_t best_i = lo;
    for (size_t i = lo + 1; i < hi; ++i) {
        double d = point_segment_distance(pts[i], pts[lo], pts[hi]);
        if (d > best) {
            best = d;
            best_i = i;
        }
    }
    if (best > eps) {
        keep[best_i] = true;
        rdp(pts, lo, best_i, eps, keep);
        rdp(pts, best_i, hi, eps, keep);
    }
}

}  // namespace

std::vector<std::array<int, 2>> approximate_polygon(const Contour& contour,
                                                    double epsilon_fraction) {
    const auto& pts = contour.points;
    if (pts.size() < 3) return {};

    double arc = 0;
    for (size_t i = 0; i < pts.size(); ++i) {
        const auto& p = pts[i];
        const auto& q = pts[(i + 1) % pts.size()];
        arc += std::hypot(double(q[0] - p[0]), double(q[1] - p[1]));
    }
    const double eps = epsilon_fraction * arc;

    // Closed contour: anchor at the two mutually farthest points, then
    // simplify the two open chains.
    size_t a = 0, b = 0;
    double far2 = -1;
    for (size_t i = 0; i < pts.size(); ++i)
        for (size_t j = i + 1; j < pts.size(); ++j) {
            double dx = pts[i][0] - pts[j][0], dy = pts[i][1] - pts[j][1];
            double d2 = dx * dx + dy * dy;
            if (d2 > far2) {
                far2 = d2;
                a = i;
                b = j;
            }
        }
    if (a == b) return {};  // all points coincide

    std::vector<std::array<int, 2>> rot(pts.begin() + a, pts.end());
    rot.insert(rot.end(), pts.begin(), pts.begin() + a);
    const size_t split = (b + pts.size() - a) % pts.size();

    std::vector<bool> keep(rot.size(), false);
    keep[0] = keep[split] = true;
    rdp(rot, 0, split, eps, keep);
    {
        // Second chain wraps around; close it against the first anchor.
        std::vector<std::array<int, 2>> chain(rot.begin() + split, rot.end());
        chain.push_back(rot[0]);
        std::vector<bool> k2(chain.size(), false);
        k2.front() = k2.back() = true;
        rdp(chain, 0, chain.size() - 1, eps, k2);
        for (size_t i = 1; i + 1 < chain.size(); ++i)
            if (k2[i]) keep[split + i] = true;
    }

    std::vector<std::array<int, 2>> out;
    for (size_t i = 0; i < rot.size(); ++i)
        if (keep[i] && (out.empty() || out.back() != rot[i])) out.push_back(rot[i]);
    if (out.size() > 1 && out.front() == out.back()) out.pop_back();
    return out;
}

std::vector<CornerNode> gradient_change_corners(const std::vector<std::array<int, 2>>& polygon,
                                                bool /*outer*/) {
    const size_t n = polygon.size();
    if (n < 3) return {};
    auto sgn = [](int v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); };

    std::vector<int> gx(n), gy(n), ex(n), ey(n);
    for (size_t k = 0; k < n; ++k) {
        int dx = polygon[(k + 1) % n][0] - polygon[k][0];
        int dy = polygon[(k + 1) % n][1] - polygon[k][1];
        ex[k] = dx;
        ey[k] = dy;
        gx[k] = -sgn(dx);  // a rightward edge has a negative x gradient
        gy[k] = -sgn(dy);
    }
    auto last_nonzero = [&](const std::vector<int>& g, size_t from) -> int {
        for (size_t k = 0; k < n; ++k) {
            int v = g[(from + n - k) % n];
            if (v != 0) return v;
        }
        return 0;
    };
    auto first_nonzero = [&](const std::vector<int>& g, size_t from) -> int {
        for (size_t k = 0; k < n; ++k) {
            int v = g[(from + k) % n];
            if (v != 0) return v;
        }
        return 0;
    };

    std::vector<CornerNode> out;
    for (size_t k = 0; k < n; ++k) {
        const size_t prev = (k + n - 1) % n;
        CornerNode node;
        int xf = last_nonzero(gx, prev), xt = first_nonzero(gx, k);
        if (xf != 0 && xt != 0 && xf != xt) node.x_change = {xf, xt};
        int yf = last_nonzero(gy, prev), yt = first_nonzero(gy, k);
        if (yf != 0 && yt != 0 && yf != yt) node.y_change = {yf, yt};
        if (!node.x_change && !node.y_change) continue;

        node.position = {double(polygon[k][0]), double(polygon[k][1])};
        const long cross = long(ex[prev]) * ey[k] - long(ey[prev]) * ex[k];
        node.convex = cross >= 0;

        std::string label = node.convex ? "cx" : "cc";
        if (node.x_change) {
            label += node.x_change->first > 0 ? "_xpos" : "_xneg";
            label += node.x_change->second > 0 ? "_xpos" : "_xneg";
        }
        if (node.y_change) {
            label += node.y_change->first > 0 ? "_ypos" : "_yneg";
            label += node.y_change->second > 0 ? "_ypos" : "_yneg";
        }
        node.type_label = std::move(label);
        out.push_back(std::move(node));
    }
    return out;
}

namespace {

enum class Region { Inner, Outer, Neither };

// Samples the open segment between two corners at quarter-pixel steps,
// skipping samples that land on either endpoint pixel.
Region segment_region(const BinaryImage& bin, const std::array<double, 2>& a,
                      const std::array<double, 2>& b) {
    const double dx = b[0] - a[0], dy = b[1] - a[1];
    const double len = std::hypot(dx, dy);
    const int apx = int(std::lround(a[0])), apy = int(std::lround(a[1]));
    const int bpx = int(std::lround(b[0])), bpy = int(std::lround(b[1]));
    bool any = false, all_fg = true, all_bg = true;
    for (double t = 0.25; t < len; t += 0.25) {
        int px = int(std::lround(a[0] + dx * t / len));
        int py = int(std::lround(a[1] + dy * t / len));
        if ((px == apx && py == apy) || (px == bpx && py == bpy)) continue;
        any = true;
        if (bin.at(px, py))
            all_bg = false;
        else
            all_fg = false;
    }
    if (!any) return Region::Inner;  // adjacent corners sit on the same stroke
    if (all_fg) return Region::Inner;
    if (all_bg) return Region::Outer;
    return Region::Neither;
}

}  // namespace

StatePolynetwork build_spn(const std::vector<std::vector<CornerNode>>& polygons,
                           const BinaryImage& bin) {
    StatePolynetwork spn;
    for (const auto& key : spn_keys()) spn.add_network(key);

    struct FlatNode {
        const CornerNode* corner;
        int polygon;
    };
    std::vector<FlatNode> flat;
    for (size_t p = 0; p < polygons.size(); ++p)
        for (const auto& c : polygons[p]) flat.push_back({&c, static_cast<int>(p)});

    for (auto& [key, sn] : spn.entries()) {
        (void)key;
        for (const auto& fn : flat) {
            SpnNode node;
            node.type = fn.corner->type_label;
            node.pos = fn.corner->position;
            sn.add_node_with_id(static_cast<int32_t>(&fn - flat.data()), std::move(node));
        }
    }

    auto oriented = [&](int32_t i, int32_t j, bool horizontal) -> std::optional<std::pair<int32_t, int32_t>> {
        const auto& a = flat[i].corner->position;
        const auto& b = flat[j].corner->position;
        double ca = horizontal ? a[0] : a[1];
        double cb = horizontal ? b[0] : b[1];
        if (ca < cb) return std::pair(i, j);
        if (cb < ca) return std::pair(j, i);
        return std::nullopt;  // strict ordering: ties yield no edge
    };
    auto add_pair = [&](const char* hkey, const char* vkey, int32_t i, int32_t j) {
        if (auto e = oriented(i, j, true); e && !spn.find(hkey)->has_edge(e->first, e->second))
            spn.find(hkey)->add_edge(e->first, e->second);
        if (auto e = oriented(i, j, false); e && !spn.find(vkey)->has_edge(e->first, e->second))
            spn.find(vkey)->add_edge(e->first, e->second);
    };

    // Contour edges: consecutive surviving corners along each polygon.
    {
        int32_t base = 0;
        for (const auto& poly : polygons) {
            const int32_t count = static_cast<int32_t>(poly.size());
            if (count >= 2) {
                for (int32_t k = 0; k < count; ++k) {
                    int32_t i = base + k, j = base + (k + 1) % count;
                    if (i == j) continue;
                    add_pair("contour_h", "contour_v", i, j);
                }
            }
            base += count;
        }
    }

    // Inner/outer edges by region test; all-type edges for every pair.
    const int32_t n = static_cast<int32_t>(flat.size());
    for (int32_t i = 0; i < n; ++i) {
        for (int32_t j = i + 1; j < n; ++j) {
            add_pair("all_h", "all_v", i, j);
            Region r = segment_region(bin, flat[i].corner->position, flat[j].corner->position);
            if (r == Region::Inner)
                add_pair("inner_h", "inner_v", i, j);
            else if (r == Region::Outer)
                add_pair("outer_h", "outer_v", i, j);
        }
    }
    return spn;
}

StatePolynetwork image_to_spn(const std::vector<uint8_t>& image, int width, int height,
                              double threshold, double epsilon_fraction) {
    BinaryImage bin = binarize(image, width, height, threshold);
    auto contours = extract_contours(bin);
    std::vector<std::vector<CornerNode>> polygons;
    for (const auto& c : contours) {
        if (c.points.size() < 3) continue;  // degenerate contour, skipped
        auto poly = approximate_polygon(c, epsilon_fraction);
        if (poly.size() < 3) continue;
        polygons.push_back(gradient_change_corners(poly, c.outer));
    }
    return build_spn(polygons, bin);
}

}  // namespace varsel
