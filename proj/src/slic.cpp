#include "supix/slic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <thread>

namespace supix::slic {

namespace {

// D65 reference white.
constexpr double kWhiteX = 0.95047;
constexpr double kWhiteY = 1.00000;
constexpr double kWhiteZ = 1.08883;

constexpr double kEpsilon = 216.0 / 24389.0;
constexpr double kKappa = 24389.0 / 27.0;

const std::array<double, 256>& srgb_to_linear_table() {
    static const std::array<double, 256> table = [] {
        std::array<double, 256> t{};
        for (int v = 0; v < 256; ++v) {
            double c = v / 255.0;
            t[v] = c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
        }
        return t;
    }();
    return table;
}

double lab_f(double t) {
    return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0;
}

struct Center {
    double x = 0, y = 0, L = 0, a = 0, b = 0;
};

double lab_dist2(const float* p, const float* q) {
    double dL = double(p[0]) - q[0];
    double da = double(p[1]) - q[1];
    double db = double(p[2]) - q[2];
    return dL * dL + da * da + db * db;
}

// Squared Lab difference to the right and down neighbors.
double gradient_at(const ImageLab& image, int x, int y) {
    const float* p = &image.pixels[3 * (static_cast<std::size_t>(y) * image.width + x)];
    double g = 0.0;
    if (x + 1 < image.width) g += lab_dist2(p, p + 3);
    if (y + 1 < image.height) g += lab_dist2(p, p + 3 * image.width);
    return g;
}

std::vector<Center> initial_centers(const ImageLab& image, int S) {
    const int nx = std::max(1, image.width / S);
    const int ny = std::max(1, image.height / S);
    std::vector<Center> centers;
    centers.reserve(static_cast<std::size_t>(nx) * ny);
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            int cx = static_cast<int>((ix + 0.5) * image.width / nx);
            int cy = static_cast<int>((iy + 0.5) * image.height / ny);
            // Lowest-gradient pixel in the 3x3 neighborhood, first in raster order.
            int best_x = cx, best_y = cy;
            double best_g = std::numeric_limits<double>::infinity();
            for (int y = cy - 1; y <= cy + 1; ++y) {
                if (y < 0 || y >= image.height) continue;
                for (int x = cx - 1; x <= cx + 1; ++x) {
                    if (x < 0 || x >= image.width) continue;
                    double g = gradient_at(image, x, y);
                    if (g < best_g) {
                        best_g = g;
                        best_x = x;
                        best_y = y;
                    }
                }
            }
            const float* p = &image.pixels[3 * (static_cast<std::size_t>(best_y) * image.width + best_x)];
            centers.push_back({double(best_x), double(best_y), p[0], p[1], p[2]});
        }
    }
    return centers;
}

// Assigns pixels of rows [row_begin, row_end) to the nearest center whose
// window covers them. Centers are visited in id order with a strict
// comparison, so equal distances keep the lowest id.
void assign_rows(const ImageLab& image, const std::vector<Center>& centers, int S,
                 double inv_s2, double inv_m2, int row_begin, int row_end,
                 std::vector<std::int32_t>& labels, std::vector<double>& best) {
    const int w = image.width;
    for (int y = row_begin; y < row_end; ++y) {
        std::fill(best.begin() + static_cast<std::ptrdiff_t>(y) * w,
                  best.begin() + static_cast<std::ptrdiff_t>(y + 1) * w,
                  std::numeric_limits<double>::infinity());
        std::fill(labels.begin() + static_cast<std::ptrdiff_t>(y) * w,
                  labels.begin() + static_cast<std::ptrdiff_t>(y + 1) * w, -1);
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
        const Center& c = centers[k];
        const int y0 = std::max(row_begin, static_cast<int>(std::ceil(c.y - S)));
        const int y1 = std::min(row_end, static_cast<int>(std::ceil(c.y + S)));
        const int x0 = std::max(0, static_cast<int>(std::ceil(c.x - S)));
        const int x1 = std::min(w, static_cast<int>(std::ceil(c.x + S)));
        for (int y = y0; y < y1; ++y) {
            const double dy = y - c.y;
            for (int x = x0; x < x1; ++x) {
                const std::size_t n = static_cast<std::size_t>(y) * w + x;
                const float* p = &image.pixels[3 * n];
                const double dx = x - c.x;
                const double dL = p[0] - c.L;
                const double da = p[1] - c.a;
                const double db = p[2] - c.b;
                const double d = (dx * dx + dy * dy) * inv_s2 + (dL * dL + da * da + db * db) * inv_m2;
                if (d < best[n]) {
                    best[n] = d;
                    labels[n] = static_cast<std::int32_t>(k);
                }
            }
        }
    }
    // Pixels no window reached after centers drifted.
    for (int y = row_begin; y < row_end; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t n = static_cast<std::size_t>(y) * w + x;
            if (labels[n] >= 0) continue;
            const float* p = &image.pixels[3 * n];
            double bd = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < centers.size(); ++k) {
                const Center& c = centers[k];
                const double dx = x - c.x, dy = y - c.y;
                const double dL = p[0] - c.L, da = p[1] - c.a, db = p[2] - c.b;
                const double d = (dx * dx + dy * dy) * inv_s2 + (dL * dL + da * da + db * db) * inv_m2;
                if (d < bd) {
                    bd = d;
                    labels[n] = static_cast<std::int32_t>(k);
                }
            }
            best[n] = bd;
        }
    }
}

}  // namespace

Status validate(const SlicParams& params) {
    if (params.cluster_size < 2) return Status::fail("cluster_size", 0, "must be >= 2");
    if (!(params.compactness > 0.0) || !std::isfinite(params.compactness)) {
        return Status::fail("compactness", 0, "must be > 0");
    }
    if (params.max_iterations < 1) return Status::fail("max_iterations", 0, "must be >= 1");
    if (!(params.min_region_fraction > 0.0 && params.min_region_fraction < 1.0)) {
        return Status::fail("min_region_fraction", 0, "must be in (0,1)");
    }
    return Status::ok();
}

ImageLab rgb_to_lab(const ImageRGB& image) {
    require_valid(image, "rgb_to_lab");
    const auto& lin = srgb_to_linear_table();
    ImageLab out{image.width, image.height, std::vector<float>(image.pixels.size())};
    for (std::size_t n = 0; n < image.size(); ++n) {
        const double r = lin[image.pixels[3 * n]];
        const double g = lin[image.pixels[3 * n + 1]];
        const double b = lin[image.pixels[3 * n + 2]];
        const double X = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
        const double Y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
        const double Z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
        const double fx = lab_f(X / kWhiteX);
        const double fy = lab_f(Y / kWhiteY);
        const double fz = lab_f(Z / kWhiteZ);
        out.pixels[3 * n] = static_cast<float>(std::clamp(116.0 * fy - 16.0, 0.0, 100.0));
        out.pixels[3 * n + 1] = static_cast<float>(500.0 * (fx - fy));
        out.pixels[3 * n + 2] = static_cast<float>(200.0 * (fy - fz));
    }
    return out;
}

SuperpixelPartition segment(const ImageLab& image, const SlicParams& params, int threads) {
    require_valid(image, "slic::segment image");
    require(validate(params), "slic::segment params");

    const int S = params.cluster_size;
    const int w = image.width;
    const int h = image.height;
    const std::size_t npix = image.size();
    const double inv_s2 = 1.0 / (double(S) * S);
    const double inv_m2 = 1.0 / (params.compactness * params.compactness);
    if (threads <= 0) threads = default_thread_count();
    threads = std::clamp(threads, 1, h);

    std::vector<Center> centers = initial_centers(image, S);
    std::vector<std::int32_t> labels(npix, -1);
    std::vector<double> best(npix);

    for (int iter = 0; iter < params.max_iterations; ++iter) {
        if (threads == 1) {
            assign_rows(image, centers, S, inv_s2, inv_m2, 0, h, labels, best);
        } else {
            std::vector<std::thread> workers;
            workers.reserve(threads);
            for (int t = 0; t < threads; ++t) {
                const int r0 = static_cast<int>(static_cast<long long>(h) * t / threads);
                const int r1 = static_cast<int>(static_cast<long long>(h) * (t + 1) / threads);
                workers.emplace_back([&, r0, r1] {
                    assign_rows(image, centers, S, inv_s2, inv_m2, r0, r1, labels, best);
                });
            }
            for (auto& worker : workers) worker.join();
        }

        // Serial raster-order reduction keeps the update bit-identical
        // regardless of how the assignment was split.
        std::vector<Center> sums(centers.size());
        std::vector<std::int64_t> counts(centers.size(), 0);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t n = static_cast<std::size_t>(y) * w + x;
                const std::int32_t k = labels[n];
                Center& s = sums[k];
                s.x += x;
                s.y += y;
                s.L += image.pixels[3 * n];
                s.a += image.pixels[3 * n + 1];
                s.b += image.pixels[3 * n + 2];
                ++counts[k];
            }
        }
        for (std::size_t k = 0; k < centers.size(); ++k) {
            if (counts[k] == 0) continue;
            const double inv = 1.0 / double(counts[k]);
            centers[k] = {sums[k].x * inv, sums[k].y * inv, sums[k].L * inv, sums[k].a * inv,
                          sums[k].b * inv};
        }
    }

    SuperpixelPartition raw{w, h, static_cast<int>(centers.size()), std::move(labels)};
    return enforce_connectivity(raw, params);
}

SuperpixelPartition enforce_connectivity(const SuperpixelPartition& partition,
                                         const SlicParams& params) {
    require(validate(params), "slic::enforce_connectivity params");
    const int w = partition.width;
    const int h = partition.height;
    if (w < 1 || h < 1 || partition.assignments.size() != partition.size()) {
        throw Error(ErrorKind::Invalid, "slic::enforce_connectivity: dimension mismatch");
    }
    const std::size_t npix = partition.size();
    const double threshold =
        params.min_region_fraction * double(params.cluster_size) * params.cluster_size;

    // Label 4-connected components in raster order of first pixel.
    std::vector<int> comp(npix, -1);
    std::vector<std::int64_t> comp_size;
    std::queue<int> frontier;
    for (int start = 0; start < static_cast<int>(npix); ++start) {
        if (comp[start] >= 0) continue;
        const int c = static_cast<int>(comp_size.size());
        const std::int32_t id = partition.assignments[start];
        std::int64_t size = 0;
        comp[start] = c;
        frontier.push(start);
        while (!frontier.empty()) {
            const int p = frontier.front();
            frontier.pop();
            ++size;
            const int y = p / w;
            const int x = p % w;
            const int nbrs[4] = {x > 0 ? p - 1 : -1, x + 1 < w ? p + 1 : -1,
                                 y > 0 ? p - w : -1, y + 1 < h ? p + w : -1};
            for (int q : nbrs) {
                if (q >= 0 && comp[q] < 0 && partition.assignments[q] == id) {
                    comp[q] = c;
                    frontier.push(q);
                }
            }
        }
        comp_size.push_back(size);
    }
    const int ncomp = static_cast<int>(comp_size.size());

    // Component adjacency, sorted and deduplicated.
    std::vector<std::vector<int>> adjacent(ncomp);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t n = static_cast<std::size_t>(y) * w + x;
            const int a = comp[n];
            if (x + 1 < w && comp[n + 1] != a) {
                adjacent[a].push_back(comp[n + 1]);
                adjacent[comp[n + 1]].push_back(a);
            }
            if (y + 1 < h && comp[n + w] != a) {
                adjacent[a].push_back(comp[n + w]);
                adjacent[comp[n + w]].push_back(a);
            }
        }
    }
    for (auto& list : adjacent) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }

    std::vector<int> parent(ncomp);
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<std::int64_t> group_size = comp_size;
    std::vector<std::vector<int>> members(ncomp);
    for (int c = 0; c < ncomp; ++c) members[c] = {c};
    auto find = [&parent](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };

    bool changed = true;
    while (changed) {
        changed = false;
        for (int c = 0; c < ncomp; ++c) {
            const int root = find(c);
            if (root != c || double(group_size[root]) >= threshold) continue;
            int target = -1;
            for (int m : members[root]) {
                for (int nb : adjacent[m]) {
                    const int r = find(nb);
                    if (r == root) continue;
                    if (target < 0 || group_size[r] > group_size[target] ||
                        (group_size[r] == group_size[target] && r < target)) {
                        target = r;
                    }
                }
            }
            if (target < 0) continue;  // the whole image is one small region
            parent[root] = target;
            group_size[target] += group_size[root];
            members[target].insert(members[target].end(), members[root].begin(), members[root].end());
            members[root].clear();
            changed = true;
        }
    }

    SuperpixelPartition out{w, h, 0, std::vector<std::int32_t>(npix)};
    std::vector<std::int32_t> dense(ncomp, -1);
    for (std::size_t n = 0; n < npix; ++n) {
        const int r = find(comp[n]);
        if (dense[r] < 0) dense[r] = out.num_superpixels++;
        out.assignments[n] = dense[r];
    }
    return out;
}

}  // namespace supix::slic
