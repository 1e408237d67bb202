/**
 * @file synth.hpp
 * @brief Deterministic Voronoi fixtures with ground truth.
 *
 * Randomness is fully specified so fixtures are identical everywhere:
 *
 *   splitmix64(z):  z += 0x9E3779B97F4A7C15
 *                   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
 *                   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
 *                   return z ^ (z >> 31)
 *
 *   Sequential stream (sites, classes, colors): xorshift64* with state
 *   splitmix64(seed) (0 replaced by 0x9E3779B97F4A7C15):
 *                   x ^= x >> 12; x ^= x << 25; x ^= x >> 27
 *                   return x * 0x2545F4914F6CDD1D
 *
 *   Per-pixel values: counter_random(seed, stream, index) =
 *                   splitmix64(splitmix64(seed ^ (stream * 0xD1B54A32D192ED03)) ^ index)
 *
 *   uniform01(x) = (x >> 11) * 2^-53;  uniform_below(x, n) = (x * n) >> 64
 *   using the full 128-bit product.
 */

#ifndef SUPIX_SYNTH_HPP
#define SUPIX_SYNTH_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "supix/core.hpp"

namespace supix::synth {

std::uint64_t splitmix64(std::uint64_t z);
std::uint64_t counter_random(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);
double uniform01(std::uint64_t x);
std::uint64_t uniform_below(std::uint64_t x, std::uint64_t n);

class Xorshift64Star {
public:
    explicit Xorshift64Star(std::uint64_t seed);
    std::uint64_t next();
    double next_double() { return uniform01(next()); }
    std::uint64_t next_below(std::uint64_t n) { return uniform_below(next(), n); }

private:
    std::uint64_t state_;
};

struct SynthParams {
    int width = 128;
    int height = 128;
    int num_classes = 4;
    int num_sites = 12;
    double noise_rate = 0.15;
    int color_jitter = 12;
    std::uint64_t seed = 0;
};

Status validate(const SynthParams& params);

struct Site {
    double x = 0.0;
    double y = 0.0;
    int cls = 0;
};

/// Labels each pixel center (x+0.5, y+0.5) with the class of its nearest
/// site; equal distances go to the lowest site index.
LabelMask voronoi_labels(const std::vector<Site>& sites, int width, int height, int num_classes);

struct Fixture {
    ImageRGB image;
    LabelMask ground_truth;
    std::vector<Site> sites;
};

Fixture generate(const SynthParams& params);

/// Moves each non-IGNORE pixel to a uniformly chosen other class with
/// probability `noise_rate`.
LabelMask corrupt(const LabelMask& gt, double noise_rate, std::uint64_t seed);

/// Soft probability map peaked at each mask label: `confidence` on the
/// label and the remainder spread evenly over the other classes. IGNORE
/// pixels get a uniform vector.
ProbabilityMap soft_probabilities(const LabelMask& mask, double confidence);

}  // namespace supix::synth

#endif  // SUPIX_SYNTH_HPP
