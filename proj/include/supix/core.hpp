/**
 * @file core.hpp
 * @brief Domain types shared by every supix module.
 *
 * All grids are row-major with (row, column) = (i, j). Types are plain
 * aggregates; `validate` checks their invariants without throwing and
 * `require_valid` turns a failed check into an exception.
 */

#ifndef SUPIX_CORE_HPP
#define SUPIX_CORE_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace supix {

/// Label reserved for pixels outside the region of interest.
inline constexpr std::uint8_t kIgnoreLabel = 255;

enum class ErrorKind {
    Invalid,   // usage or validation failure
    Input,     // an input file could not be read or decoded
    Io,        // an output could not be written
    Internal,  // invariant violated inside an operation
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Structured validation failure: which field, which flat index, and why.
struct ValidationError {
    std::string field;
    std::size_t index = 0;
    std::string message;

    std::string to_string() const;
};

/// Result of `validate`: empty means ok.
class Status {
public:
    Status() = default;
    Status(ValidationError err) : error_(std::move(err)) {}

    static Status ok() { return {}; }
    static Status fail(std::string field, std::size_t index, std::string message) {
        return Status(ValidationError{std::move(field), index, std::move(message)});
    }

    bool is_ok() const noexcept { return !error_.has_value(); }
    explicit operator bool() const noexcept { return is_ok(); }
    const ValidationError& error() const { return *error_; }

private:
    std::optional<ValidationError> error_;
};

struct ImageRGB {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // r,g,b per pixel

    std::size_t size() const { return static_cast<std::size_t>(width) * height; }
    friend bool operator==(const ImageRGB&, const ImageRGB&) = default;
};

struct ImageLab {
    int width = 0;
    int height = 0;
    std::vector<float> pixels;  // L,a,b per pixel

    std::size_t size() const { return static_cast<std::size_t>(width) * height; }
    friend bool operator==(const ImageLab&, const ImageLab&) = default;
};

struct LabelMask {
    int width = 0;
    int height = 0;
    int num_classes = 0;
    std::vector<std::uint8_t> labels;

    std::size_t size() const { return static_cast<std::size_t>(width) * height; }
    std::uint8_t at(int i, int j) const { return labels[static_cast<std::size_t>(i) * width + j]; }
    friend bool operator==(const LabelMask&, const LabelMask&) = default;
};

struct SuperpixelPartition {
    int width = 0;
    int height = 0;
    int num_superpixels = 0;
    std::vector<std::int32_t> assignments;

    std::size_t size() const { return static_cast<std::size_t>(width) * height; }
    std::int32_t at(int i, int j) const {
        return assignments[static_cast<std::size_t>(i) * width + j];
    }
    friend bool operator==(const SuperpixelPartition&, const SuperpixelPartition&) = default;
};

/// K_f feature maps of size h×w taken from one network depth.
struct FeatureMapStack {
    int depth_id = 0;
    int num_maps = 0;
    int height = 0;
    int width = 0;
    std::vector<float> values;  // [map][row][col]

    float at(int k, int i, int j) const {
        return values[(static_cast<std::size_t>(k) * height + i) * width + j];
    }
    friend bool operator==(const FeatureMapStack&, const FeatureMapStack&) = default;
};

/// Linear-layer weights w_{c,k}, stored [class][map].
struct ClassifierWeights {
    int num_classes = 0;
    int num_maps = 0;
    std::vector<float> weights;

    float at(int c, int k) const {
        return weights[static_cast<std::size_t>(c) * num_maps + k];
    }
    friend bool operator==(const ClassifierWeights&, const ClassifierWeights&) = default;
};

struct ScoreMap {
    int num_classes = 0;
    int height = 0;
    int width = 0;
    std::vector<float> scores;  // [class][row][col]

    float at(int c, int i, int j) const {
        return scores[(static_cast<std::size_t>(c) * height + i) * width + j];
    }
    friend bool operator==(const ScoreMap&, const ScoreMap&) = default;
};

struct ProbabilityMap {
    int num_classes = 0;
    int height = 0;
    int width = 0;
    std::vector<float> probs;  // [class][row][col]

    float at(int c, int i, int j) const {
        return probs[(static_cast<std::size_t>(c) * height + i) * width + j];
    }
    friend bool operator==(const ProbabilityMap&, const ProbabilityMap&) = default;
};

Status validate(const ImageRGB& image);
Status validate(const ImageLab& image);
Status validate(const LabelMask& mask);
Status validate(const SuperpixelPartition& partition);
Status validate(const FeatureMapStack& features);
Status validate(const ClassifierWeights& weights);
Status validate(const ScoreMap& scores);
Status validate(const ProbabilityMap& probs);

/// Throws Error(Invalid) naming `what` when `status` carries an error.
void require(const Status& status, const std::string& what);

template <typename T>
void require_valid(const T& value, const std::string& what) {
    require(validate(value), what);
}

/// True when every superpixel id owns a single 4-connected pixel set.
bool is_four_connected(const SuperpixelPartition& partition);

/// Worker count for internal parallelism: SUPIX_THREADS if set and
/// positive, otherwise the hardware concurrency (at least 1).
int default_thread_count();

}  // namespace supix

#endif  // SUPIX_CORE_HPP
