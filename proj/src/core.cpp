#include "supix/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <queue>
#include <thread>

namespace supix {

namespace {

Status check_dims(int width, int height) {
    if (width < 1) return Status::fail("width", 0, "must be >= 1, got " + std::to_string(width));
    if (height < 1) return Status::fail("height", 0, "must be >= 1, got " + std::to_string(height));
    return Status::ok();
}

Status check_length(const char* field, std::size_t actual, std::size_t expected) {
    if (actual != expected) {
        return Status::fail(field, actual,
                            "dimension mismatch: length " + std::to_string(actual) +
                                ", expected " + std::to_string(expected));
    }
    return Status::ok();
}

Status check_finite(const char* field, const std::vector<float>& values) {
    for (std::size_t n = 0; n < values.size(); ++n) {
        if (!std::isfinite(values[n])) return Status::fail(field, n, "non-finite value");
    }
    return Status::ok();
}

Status check_tensor3(int c, int h, int w, const char* c_name) {
    if (c < 1) return Status::fail(c_name, 0, "must be >= 1");
    if (h < 1) return Status::fail("height", 0, "must be >= 1");
    if (w < 1) return Status::fail("width", 0, "must be >= 1");
    return Status::ok();
}

}  // namespace

std::string ValidationError::to_string() const {
    return field + "[" + std::to_string(index) + "]: " + message;
}

void require(const Status& status, const std::string& what) {
    if (!status.is_ok()) {
        throw Error(ErrorKind::Invalid, what + ": " + status.error().to_string());
    }
}

Status validate(const ImageRGB& image) {
    if (auto s = check_dims(image.width, image.height); !s) return s;
    return check_length("pixels", image.pixels.size(), image.size() * 3);
}

Status validate(const ImageLab& image) {
    if (auto s = check_dims(image.width, image.height); !s) return s;
    if (auto s = check_length("pixels", image.pixels.size(), image.size() * 3); !s) return s;
    if (auto s = check_finite("pixels", image.pixels); !s) return s;
    for (std::size_t n = 0; n < image.size(); ++n) {
        float L = image.pixels[3 * n];
        if (L < 0.0f || L > 100.0f) return Status::fail("pixels", 3 * n, "L outside [0,100]");
        for (int c = 1; c < 3; ++c) {
            float v = image.pixels[3 * n + c];
            if (v < -128.0f || v > 128.0f) return Status::fail("pixels", 3 * n + c, "a/b outside [-128,128]");
        }
    }
    return Status::ok();
}

Status validate(const LabelMask& mask) {
    if (auto s = check_dims(mask.width, mask.height); !s) return s;
    if (mask.num_classes < 1 || mask.num_classes > 255) {
        return Status::fail("num_classes", 0,
                            "must be in [1,255], got " + std::to_string(mask.num_classes));
    }
    if (auto s = check_length("labels", mask.labels.size(), mask.size()); !s) return s;
    for (std::size_t n = 0; n < mask.labels.size(); ++n) {
        std::uint8_t v = mask.labels[n];
        if (v != kIgnoreLabel && v >= mask.num_classes) {
            return Status::fail("labels", n,
                                "label out of range: " + std::to_string(v) + " >= K=" +
                                    std::to_string(mask.num_classes));
        }
    }
    return Status::ok();
}

Status validate(const SuperpixelPartition& partition) {
    if (auto s = check_dims(partition.width, partition.height); !s) return s;
    if (auto s = check_length("assignments", partition.assignments.size(), partition.size()); !s) return s;
    if (partition.num_superpixels < 1) return Status::fail("num_superpixels", 0, "must be >= 1");
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(partition.num_superpixels), 0);
    for (std::size_t n = 0; n < partition.assignments.size(); ++n) {
        std::int32_t id = partition.assignments[n];
        if (id < 0 || id >= partition.num_superpixels) {
            return Status::fail("assignments", n, "superpixel id out of range: " + std::to_string(id));
        }
        seen[static_cast<std::size_t>(id)] = 1;
    }
    for (std::size_t id = 0; id < seen.size(); ++id) {
        if (!seen[id]) return Status::fail("num_superpixels", id, "superpixel id owns no pixel");
    }
    return Status::ok();
}

Status validate(const FeatureMapStack& features) {
    if (auto s = check_tensor3(features.num_maps, features.height, features.width, "num_maps"); !s) return s;
    std::size_t expected = static_cast<std::size_t>(features.num_maps) * features.height * features.width;
    if (auto s = check_length("values", features.values.size(), expected); !s) return s;
    return check_finite("values", features.values);
}

Status validate(const ClassifierWeights& weights) {
    if (weights.num_classes < 1) return Status::fail("num_classes", 0, "must be >= 1");
    if (weights.num_maps < 1) return Status::fail("num_maps", 0, "must be >= 1");
    std::size_t expected = static_cast<std::size_t>(weights.num_classes) * weights.num_maps;
    if (auto s = check_length("weights", weights.weights.size(), expected); !s) return s;
    return check_finite("weights", weights.weights);
}

Status validate(const ScoreMap& scores) {
    if (auto s = check_tensor3(scores.num_classes, scores.height, scores.width, "num_classes"); !s) return s;
    std::size_t expected = static_cast<std::size_t>(scores.num_classes) * scores.height * scores.width;
    if (auto s = check_length("scores", scores.scores.size(), expected); !s) return s;
    return check_finite("scores", scores.scores);
}

Status validate(const ProbabilityMap& probs) {
    if (auto s = check_tensor3(probs.num_classes, probs.height, probs.width, "num_classes"); !s) return s;
    const std::size_t plane = static_cast<std::size_t>(probs.height) * probs.width;
    if (auto s = check_length("probs", probs.probs.size(), plane * probs.num_classes); !s) return s;
    for (std::size_t n = 0; n < probs.probs.size(); ++n) {
        float v = probs.probs[n];
        if (!std::isfinite(v)) return Status::fail("probs", n, "non-finite value");
        if (v < 0.0f || v > 1.0f) return Status::fail("probs", n, "probability outside [0,1]");
    }
    for (std::size_t p = 0; p < plane; ++p) {
        double sum = 0.0;
        for (int c = 0; c < probs.num_classes; ++c) sum += probs.probs[c * plane + p];
        if (std::abs(sum - 1.0) > 1e-6) {
            return Status::fail("probs", p, "not normalized: class vector sums to " + std::to_string(sum));
        }
    }
    return Status::ok();
}

bool is_four_connected(const SuperpixelPartition& partition) {
    const int w = partition.width;
    const int h = partition.height;
    std::vector<std::uint8_t> visited(partition.size(), 0);
    std::vector<std::uint8_t> id_seen(static_cast<std::size_t>(std::max(partition.num_superpixels, 0)), 0);
    std::queue<int> frontier;
    for (int start = 0; start < w * h; ++start) {
        if (visited[start]) continue;
        const std::int32_t id = partition.assignments[start];
        if (id < 0 || id >= partition.num_superpixels) return false;
        if (id_seen[id]) return false;  // second component of the same id
        id_seen[id] = 1;
        visited[start] = 1;
        frontier.push(start);
        while (!frontier.empty()) {
            const int p = frontier.front();
            frontier.pop();
            const int y = p / w;
            const int x = p % w;
            const int nbrs[4] = {x > 0 ? p - 1 : -1, x + 1 < w ? p + 1 : -1,
                                 y > 0 ? p - w : -1, y + 1 < h ? p + w : -1};
            for (int q : nbrs) {
                if (q >= 0 && !visited[q] && partition.assignments[q] == id) {
                    visited[q] = 1;
                    frontier.push(q);
                }
            }
        }
    }
    return true;
}

int default_thread_count() {
    if (const char* env = std::getenv("SUPIX_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(std::min(v, 1024L));
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace supix
