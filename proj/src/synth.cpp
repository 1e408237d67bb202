#include "supix/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace supix::synth {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kStreamMul = 0xD1B54A32D192ED03ULL;

// Per-pixel stream ids.
constexpr std::uint64_t kStreamJitter = 1;  // + channel
constexpr std::uint64_t kStreamFlip = 16;
constexpr std::uint64_t kStreamNewClass = 17;

constexpr double kMinColorDistance = 48.0;
constexpr int kColorAttempts = 256;

}  // namespace

std::uint64_t splitmix64(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t counter_random(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return splitmix64(splitmix64(seed ^ (stream * kStreamMul)) ^ index);
}

double uniform01(std::uint64_t x) { return double(x >> 11) * 0x1.0p-53; }

std::uint64_t uniform_below(std::uint64_t x, std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(x) * n) >> 64);
}

Xorshift64Star::Xorshift64Star(std::uint64_t seed) : state_(splitmix64(seed)) {
    if (state_ == 0) state_ = kGolden;
}

std::uint64_t Xorshift64Star::next() {
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545F4914F6CDD1DULL;
}

Status validate(const SynthParams& p) {
    if (p.width < 1) return Status::fail("width", 0, "must be >= 1");
    if (p.height < 1) return Status::fail("height", 0, "must be >= 1");
    if (p.num_classes < 2 || p.num_classes > 254) return Status::fail("num_classes", 0, "must be in [2,254]");
    if (p.num_sites < p.num_classes) {
        return Status::fail("num_sites", 0,
                            "num_sites " + std::to_string(p.num_sites) + " < num_classes " +
                                std::to_string(p.num_classes));
    }
    if (!(p.noise_rate >= 0.0 && p.noise_rate < 0.5)) return Status::fail("noise_rate", 0, "must be in [0,0.5)");
    if (p.color_jitter < 0 || p.color_jitter > 255) return Status::fail("color_jitter", 0, "must be in [0,255]");
    return Status::ok();
}

LabelMask voronoi_labels(const std::vector<Site>& sites, int width, int height, int num_classes) {
    if (sites.empty()) throw Error(ErrorKind::Invalid, "voronoi_labels: no sites");
    LabelMask mask{width, height, num_classes,
                   std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height)};
    for (int y = 0; y < height; ++y) {
        const double py = y + 0.5;
        for (int x = 0; x < width; ++x) {
            const double px = x + 0.5;
            double best = std::numeric_limits<double>::infinity();
            int owner = 0;
            for (std::size_t s = 0; s < sites.size(); ++s) {
                const double dx = px - sites[s].x;
                const double dy = py - sites[s].y;
                const double d = dx * dx + dy * dy;
                if (d < best) {
                    best = d;
                    owner = static_cast<int>(s);
                }
            }
            mask.labels[static_cast<std::size_t>(y) * width + x] =
                static_cast<std::uint8_t>(sites[owner].cls);
        }
    }
    require_valid(mask, "voronoi_labels");
    return mask;
}

Fixture generate(const SynthParams& params) {
    require(validate(params), "synth::generate");
    Xorshift64Star rng(params.seed);

    Fixture f;
    f.sites.resize(params.num_sites);
    for (int s = 0; s < params.num_sites; ++s) {
        f.sites[s].x = rng.next_double() * params.width;
        f.sites[s].y = rng.next_double() * params.height;
        f.sites[s].cls = s < params.num_classes ? s : static_cast<int>(rng.next_below(params.num_classes));
    }

    std::vector<std::array<int, 3>> colors;
    colors.reserve(params.num_sites);
    for (int s = 0; s < params.num_sites; ++s) {
        std::array<int, 3> candidate{};
        for (int attempt = 0;; ++attempt) {
            for (int& ch : candidate) ch = static_cast<int>(rng.next_below(256));
            bool ok = true;
            for (const auto& c : colors) {
                const double d = std::hypot(candidate[0] - c[0], candidate[1] - c[1], candidate[2] - c[2]);
                if (d < (attempt < kColorAttempts ? kMinColorDistance : 1.0)) {
                    ok = false;
                    break;
                }
            }
            if (ok) break;
        }
        colors.push_back(candidate);
    }

    f.ground_truth = voronoi_labels(f.sites, params.width, params.height, params.num_classes);

    // Owner site per pixel, recomputed so colors follow cells, not classes.
    f.image = ImageRGB{params.width, params.height, std::vector<std::uint8_t>(f.ground_truth.size() * 3)};
    const int J = params.color_jitter;
    for (int y = 0; y < params.height; ++y) {
        for (int x = 0; x < params.width; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            double best = std::numeric_limits<double>::infinity();
            int owner = 0;
            for (int s = 0; s < params.num_sites; ++s) {
                const double dx = px - f.sites[s].x, dy = py - f.sites[s].y;
                const double d = dx * dx + dy * dy;
                if (d < best) {
                    best = d;
                    owner = s;
                }
            }
            const std::size_t n = static_cast<std::size_t>(y) * params.width + x;
            for (int ch = 0; ch < 3; ++ch) {
                int v = colors[owner][ch];
                if (J > 0) {
                    const std::uint64_t r = counter_random(params.seed, kStreamJitter + ch, n);
                    v += static_cast<int>(uniform_below(r, 2 * J + 1)) - J;
                }
                f.image.pixels[3 * n + ch] = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
            }
        }
    }
    return f;
}

LabelMask corrupt(const LabelMask& gt, double noise_rate, std::uint64_t seed) {
    require_valid(gt, "synth::corrupt");
    if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) {
        throw Error(ErrorKind::Invalid, "synth::corrupt: noise_rate must be in [0,1]");
    }
    LabelMask out = gt;
    if (gt.num_classes < 2 || noise_rate == 0.0) return out;
    for (std::size_t n = 0; n < out.size(); ++n) {
        const std::uint8_t label = out.labels[n];
        if (label == kIgnoreLabel) continue;
        if (uniform01(counter_random(seed, kStreamFlip, n)) >= noise_rate) continue;
        // Pick among the K-1 other classes.
        auto shift = uniform_below(counter_random(seed, kStreamNewClass, n), gt.num_classes - 1);
        int cls = static_cast<int>(shift);
        if (cls >= label) ++cls;
        out.labels[n] = static_cast<std::uint8_t>(cls);
    }
    return out;
}

ProbabilityMap soft_probabilities(const LabelMask& mask, double confidence) {
    require_valid(mask, "synth::soft_probabilities");
    const int K = mask.num_classes;
    if (!(confidence >= 1.0 / K && confidence <= 1.0)) {
        throw Error(ErrorKind::Invalid, "synth::soft_probabilities: confidence must be in [1/K, 1]");
    }
    const std::size_t plane = mask.size();
    ProbabilityMap s{K, mask.height, mask.width, std::vector<float>(plane * K)};
    const float peak = static_cast<float>(confidence);
    const float rest = K > 1 ? static_cast<float>((1.0 - confidence) / (K - 1)) : 0.0f;
    const float uniform = static_cast<float>(1.0 / K);
    for (std::size_t n = 0; n < plane; ++n) {
        const std::uint8_t label = mask.labels[n];
        for (int c = 0; c < K; ++c) {
            float v = uniform;
            if (label != kIgnoreLabel) v = c == label ? peak : rest;
            s.probs[c * plane + n] = v;
        }
    }
    return s;
}

}  // namespace supix::synth
