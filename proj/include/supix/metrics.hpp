/**
 * @file metrics.hpp
 * @brief Confusion matrix and IoU-family metrics.
 *
 * Classes whose union is empty have an undefined IoU and are left out of
 * mIoU rather than counted as zero.
 */

#ifndef SUPIX_METRICS_HPP
#define SUPIX_METRICS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "supix/core.hpp"

namespace supix::metrics {

class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int num_classes);

    int num_classes() const noexcept { return k_; }

    /// Pixels with ground truth `gt` predicted as `pred`.
    std::uint64_t at(int gt, int pred) const {
        return counts_[static_cast<std::size_t>(gt) * k_ + pred];
    }
    std::uint64_t total() const;
    std::uint64_t row_sum(int gt) const;
    std::uint64_t col_sum(int pred) const;

    /// Adds every pixel where neither mask is IGNORE.
    void accumulate(const LabelMask& pred, const LabelMask& gt);

    /// Entrywise sum.
    void merge(const ConfusionMatrix& other);

    void add(int gt, int pred, std::uint64_t n = 1) {
        counts_[static_cast<std::size_t>(gt) * k_ + pred] += n;
    }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    int k_;
    std::vector<std::uint64_t> counts_;
};

struct MetricsReport {
    std::vector<std::optional<double>> per_class_iou;
    double miou = 0.0;
    double fwiou = 0.0;
    std::vector<std::uint64_t> gt_pixels;    // row sums
    std::vector<std::uint64_t> pred_pixels;  // column sums
    std::uint64_t total_pixels = 0;
};

MetricsReport report(const ConfusionMatrix& cm);

/// key=value lines, one per metric.
std::string to_text(const MetricsReport& r);

}  // namespace supix::metrics

#endif  // SUPIX_METRICS_HPP
