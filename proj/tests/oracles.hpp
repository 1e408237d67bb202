// Test-only reference implementations. They are written for obviousness,
// not speed, and deliberately share no code with the library kernels.

#ifndef SUPIX_TESTS_ORACLES_HPP
#define SUPIX_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "supix/core.hpp"

namespace oracle {

/// Deterministic test-side generator (LCG, independent of synth's).
class Lcg {
public:
    explicit Lcg(std::uint64_t seed) : s_(seed * 2862933555777941757ULL + 3037000493ULL) {}
    std::uint64_t next() {
        s_ = s_ * 6364136223846793005ULL + 1442695040888963407ULL;
        return s_ >> 17;
    }
    int below(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }
    double unit() { return double(next() % (1ULL << 40)) / double(1ULL << 40); }

private:
    std::uint64_t s_;
};

/// Textbook sRGB (D65) -> CIELAB in long double.
inline std::vector<long double> lab(int r8, int g8, int b8) {
    auto lin = [](int v) -> long double {
        long double c = v / 255.0L;
        return c <= 0.04045L ? c / 12.92L : std::pow((c + 0.055L) / 1.055L, 2.4L);
    };
    const long double r = lin(r8), g = lin(g8), b = lin(b8);
    const long double X = 0.4124564L * r + 0.3575761L * g + 0.1804375L * b;
    const long double Y = 0.2126729L * r + 0.7151522L * g + 0.0721750L * b;
    const long double Z = 0.0193339L * r + 0.1191920L * g + 0.9503041L * b;
    auto f = [](long double t) {
        const long double e = 216.0L / 24389.0L, k = 24389.0L / 27.0L;
        return t > e ? std::cbrt(t) : (k * t + 16.0L) / 116.0L;
    };
    const long double fx = f(X / 0.95047L), fy = f(Y), fz = f(Z / 1.08883L);
    return {116.0L * fy - 16.0L, 500.0L * (fx - fy), 200.0L * (fy - fz)};
}

/// Half-pixel-center bilinear sample of an h x w grid at output (oi, oj)
/// of an H x W target, evaluated as an explicit four-corner weighted sum.
inline double bilinear_at(const std::vector<float>& grid, int h, int w, int H, int W, int oi, int oj) {
    auto src = [](int o, int in, int out) {
        double s = (o + 0.5) * double(in) / double(out) - 0.5;
        if (s < 0) s = 0;
        if (s > in - 1) s = in - 1;
        return s;
    };
    const double sy = src(oi, h, H), sx = src(oj, w, W);
    double total = 0.0;
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const double wy = std::max(0.0, 1.0 - std::abs(sy - i));
            const double wx = std::max(0.0, 1.0 - std::abs(sx - j));
            total += wy * wx * grid[static_cast<std::size_t>(i) * w + j];
        }
    }
    return total;
}

/// Naive per-superpixel tally and rewrite: for each superpixel id, scan the
/// whole image to count votes, then scan again to rewrite.
inline supix::LabelMask floodfill(const supix::LabelMask& mask, const supix::SuperpixelPartition& part,
                                  double tau) {
    supix::LabelMask out = mask;
    for (int sp = 0; sp < part.num_superpixels; ++sp) {
        std::map<int, long> votes;
        long size = 0;
        for (std::size_t n = 0; n < mask.labels.size(); ++n) {
            if (part.assignments[n] != sp || mask.labels[n] == supix::kIgnoreLabel) continue;
            ++votes[mask.labels[n]];
            ++size;
        }
        if (size == 0) continue;
        int best = -1;
        long best_count = -1;
        for (const auto& [cls, count] : votes) {  // ascending class order
            if (count > best_count) {
                best = cls;
                best_count = count;
            }
        }
        if (double(best_count) / double(size) <= tau) continue;
        for (std::size_t n = 0; n < mask.labels.size(); ++n) {
            if (part.assignments[n] == sp && mask.labels[n] != supix::kIgnoreLabel) {
                out.labels[n] = static_cast<std::uint8_t>(best);
            }
        }
    }
    return out;
}

/// IoU per class via explicit pixel-index sets.
inline std::vector<std::optional<double>> set_iou(const supix::LabelMask& pred, const supix::LabelMask& gt,
                                                  int K) {
    std::vector<std::optional<double>> out(K);
    for (int c = 0; c < K; ++c) {
        std::set<std::size_t> P, G;
        for (std::size_t n = 0; n < gt.labels.size(); ++n) {
            if (gt.labels[n] == supix::kIgnoreLabel || pred.labels[n] == supix::kIgnoreLabel) continue;
            if (pred.labels[n] == c) P.insert(n);
            if (gt.labels[n] == c) G.insert(n);
        }
        std::set<std::size_t> I, U = P;
        for (auto n : G) {
            if (P.count(n)) I.insert(n);
            U.insert(n);
        }
        if (!U.empty()) out[c] = double(I.size()) / double(U.size());
    }
    return out;
}

/// Random partition of a w x h grid into at most `max_ids` ids, made
/// valid (dense, every id nonempty) but not necessarily connected.
inline supix::SuperpixelPartition random_partition(Lcg& rng, int w, int h, int max_ids) {
    const int want = 1 + rng.below(max_ids);
    std::vector<std::int32_t> raw(static_cast<std::size_t>(w) * h);
    for (auto& v : raw) v = rng.below(want);
    std::map<std::int32_t, std::int32_t> dense;
    for (auto& v : raw) {
        auto it = dense.find(v);
        if (it == dense.end()) it = dense.emplace(v, static_cast<std::int32_t>(dense.size())).first;
        v = it->second;
    }
    return {w, h, static_cast<int>(dense.size()), raw};
}

/// Random partition made of axis-aligned blocks (connected ids).
inline supix::SuperpixelPartition block_partition(Lcg& rng, int w, int h, int max_ids) {
    const int cols = 1 + rng.below(std::min(w, max_ids));
    const int rows = 1 + rng.below(std::max(1, std::min(h, max_ids / cols)));
    supix::SuperpixelPartition p{w, h, rows * cols, std::vector<std::int32_t>(static_cast<std::size_t>(w) * h)};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            p.assignments[static_cast<std::size_t>(y) * w + x] = (y * rows / h) * cols + (x * cols / w);
        }
    }
    return p;
}

inline supix::LabelMask random_mask(Lcg& rng, int w, int h, int K, double ignore_rate = 0.0) {
    supix::LabelMask m{w, h, K, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h)};
    for (auto& v : m.labels) {
        v = rng.unit() < ignore_rate ? supix::kIgnoreLabel : static_cast<std::uint8_t>(rng.below(K));
    }
    return m;
}

}  // namespace oracle

#endif  // SUPIX_TESTS_ORACLES_HPP
