#include "supix/cam.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace supix::cam {

namespace {

void require_pairing(const FeatureMapStack& features, const ClassifierWeights& weights,
                     const char* op) {
    require_valid(features, std::string(op) + " features");
    require_valid(weights, std::string(op) + " weights");
    if (weights.num_maps != features.num_maps) {
        throw Error(ErrorKind::Invalid,
                    std::string(op) + ": dimension mismatch: weights expect " +
                        std::to_string(weights.num_maps) + " maps, features carry " +
                        std::to_string(features.num_maps));
    }
}

void require_same_grid(const ProbabilityMap& s, const LabelMask& p, const char* name) {
    require_valid(p, name);
    if (p.width != s.width || p.height != s.height) {
        throw Error(ErrorKind::Invalid, std::string(name) + ": dimension mismatch with probability map");
    }
    if (p.num_classes != s.num_classes) {
        throw Error(ErrorKind::Invalid, std::string(name) + ": class count " +
                                            std::to_string(p.num_classes) + " differs from probability map " +
                                            std::to_string(s.num_classes));
    }
}

template <typename Get>
LabelMask argmax_mask(int num_classes, int height, int width, Get get) {
    if (num_classes > 255) {
        throw Error(ErrorKind::Invalid, "argmax: more than 255 classes cannot be stored in a LabelMask");
    }
    LabelMask mask{width, height, num_classes,
                   std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height)};
    const std::size_t plane = mask.size();
    for (std::size_t n = 0; n < plane; ++n) {
        int best = 0;
        float best_v = get(0, n);
        for (int c = 1; c < num_classes; ++c) {
            const float v = get(c, n);
            if (v > best_v) {
                best_v = v;
                best = c;
            }
        }
        mask.labels[n] = static_cast<std::uint8_t>(best);
    }
    return mask;
}

}  // namespace

Status validate(const LayerWeights& lw) {
    bool any_positive = false;
    for (std::size_t i = 0; i < lw.lambdas.size(); ++i) {
        const double v = lw.lambdas[i];
        if (!std::isfinite(v) || v < 0.0) return Status::fail("lambdas", i, "must be finite and >= 0");
        any_positive = any_positive || v > 0.0;
    }
    if (!any_positive) return Status::fail("lambdas", 0, "at least one lambda must be > 0");
    return Status::ok();
}

std::vector<double> compute_logits(const FeatureMapStack& features, const ClassifierWeights& weights) {
    require_pairing(features, weights, "compute_logits");
    const std::size_t plane = static_cast<std::size_t>(features.height) * features.width;
    std::vector<double> gap(features.num_maps, 0.0);
    for (int k = 0; k < features.num_maps; ++k) {
        double sum = 0.0;
        const float* m = &features.values[k * plane];
        for (std::size_t n = 0; n < plane; ++n) sum += m[n];
        gap[k] = sum / double(plane);
    }
    std::vector<double> logits(weights.num_classes, 0.0);
    for (int c = 0; c < weights.num_classes; ++c) {
        double z = 0.0;
        for (int k = 0; k < weights.num_maps; ++k) z += double(weights.at(c, k)) * gap[k];
        logits[c] = z;
    }
    return logits;
}

std::vector<float> resize_bilinear(const std::vector<float>& plane, int in_height, int in_width,
                                   int out_height, int out_width) {
    if (in_height == out_height && in_width == out_width) return plane;

    struct Tap {
        int i0, i1;
        double frac;
    };
    auto taps = [](int in, int out) {
        std::vector<Tap> t(out);
        const double scale = double(in) / out;
        for (int o = 0; o < out; ++o) {
            double src = (o + 0.5) * scale - 0.5;
            src = std::clamp(src, 0.0, double(in - 1));
            const int i0 = static_cast<int>(std::floor(src));
            const int i1 = std::min(i0 + 1, in - 1);
            t[o] = {i0, i1, src - i0};
        }
        return t;
    };
    const auto rows = taps(in_height, out_height);
    const auto cols = taps(in_width, out_width);

    std::vector<float> out(static_cast<std::size_t>(out_height) * out_width);
    for (int i = 0; i < out_height; ++i) {
        const Tap& r = rows[i];
        const float* top = &plane[static_cast<std::size_t>(r.i0) * in_width];
        const float* bottom = &plane[static_cast<std::size_t>(r.i1) * in_width];
        for (int j = 0; j < out_width; ++j) {
            const Tap& c = cols[j];
            const double t = top[c.i0] + (double(top[c.i1]) - top[c.i0]) * c.frac;
            const double b = bottom[c.i0] + (double(bottom[c.i1]) - bottom[c.i0]) * c.frac;
            out[static_cast<std::size_t>(i) * out_width + j] = static_cast<float>(t + (b - t) * r.frac);
        }
    }
    return out;
}

ScoreMap compute_score_map(const FeatureMapStack& features, const ClassifierWeights& weights,
                           int out_height, int out_width) {
    require_pairing(features, weights, "compute_score_map");
    if (out_height < features.height || out_width < features.width) {
        throw Error(ErrorKind::Invalid,
                    "compute_score_map: dimension mismatch: output " + std::to_string(out_height) + "x" +
                        std::to_string(out_width) + " smaller than feature maps " +
                        std::to_string(features.height) + "x" + std::to_string(features.width));
    }
    const std::size_t plane = static_cast<std::size_t>(features.height) * features.width;
    ScoreMap out{weights.num_classes, out_height, out_width, {}};
    out.scores.reserve(static_cast<std::size_t>(weights.num_classes) * out_height * out_width);

    std::vector<double> acc(plane);
    std::vector<float> low(plane);
    for (int c = 0; c < weights.num_classes; ++c) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int k = 0; k < features.num_maps; ++k) {
            const double wk = weights.at(c, k);
            const float* m = &features.values[k * plane];
            for (std::size_t n = 0; n < plane; ++n) acc[n] += wk * m[n];
        }
        for (std::size_t n = 0; n < plane; ++n) low[n] = static_cast<float>(acc[n]);
        const auto high = resize_bilinear(low, features.height, features.width, out_height, out_width);
        out.scores.insert(out.scores.end(), high.begin(), high.end());
    }
    require_valid(out, "compute_score_map result");
    return out;
}

LabelMask score_map_to_mask(const ScoreMap& scores) {
    require_valid(scores, "score_map_to_mask");
    const std::size_t plane = static_cast<std::size_t>(scores.height) * scores.width;
    return argmax_mask(scores.num_classes, scores.height, scores.width,
                       [&](int c, std::size_t n) { return scores.scores[c * plane + n]; });
}

LabelMask probability_map_to_mask(const ProbabilityMap& probs) {
    require_valid(probs, "probability_map_to_mask");
    const std::size_t plane = static_cast<std::size_t>(probs.height) * probs.width;
    return argmax_mask(probs.num_classes, probs.height, probs.width,
                       [&](int c, std::size_t n) { return probs.probs[c * plane + n]; });
}

double cross_entropy(const ProbabilityMap& s, const LabelMask& p) {
    require_valid(s, "cross_entropy probabilities");
    require_same_grid(s, p, "cross_entropy mask");
    const std::size_t plane = p.size();
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t n = 0; n < plane; ++n) {
        const std::uint8_t label = p.labels[n];
        if (label == kIgnoreLabel) continue;
        const double prob = std::max(double(s.probs[label * plane + n]), kProbabilityFloor);
        sum -= std::log(prob);
        ++counted;
    }
    if (counted == 0) throw Error(ErrorKind::Invalid, "cross_entropy: every pixel of the mask is IGNORE");
    return std::max(sum / double(counted), 0.0);
}

double multi_layer_loss(const ProbabilityMap& s, const LabelMask& p1, const LabelMask& p2,
                        const LabelMask& p3, const LayerWeights& lw) {
    require(validate(lw), "multi_layer_loss");
    require_valid(s, "multi_layer_loss probabilities");
    require_same_grid(s, p1, "multi_layer_loss p1");
    require_same_grid(s, p2, "multi_layer_loss p2");
    require_same_grid(s, p3, "multi_layer_loss p3");
    const LabelMask* masks[3] = {&p1, &p2, &p3};
    double total = 0.0;
    for (int i = 0; i < 3; ++i) total += lw.lambdas[i] * cross_entropy(s, *masks[i]);
    return total;
}

}  // namespace supix::cam
