#include "supix/metrics.hpp"

#include <cstdio>

namespace supix::metrics {

ConfusionMatrix::ConfusionMatrix(int num_classes) : k_(num_classes) {
    if (num_classes < 1 || num_classes > 255) {
        throw Error(ErrorKind::Invalid, "ConfusionMatrix: class count must be in [1,255]");
    }
    counts_.assign(static_cast<std::size_t>(k_) * k_, 0);
}

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t t = 0;
    for (auto v : counts_) t += v;
    return t;
}

std::uint64_t ConfusionMatrix::row_sum(int gt) const {
    std::uint64_t t = 0;
    for (int p = 0; p < k_; ++p) t += at(gt, p);
    return t;
}

std::uint64_t ConfusionMatrix::col_sum(int pred) const {
    std::uint64_t t = 0;
    for (int g = 0; g < k_; ++g) t += at(g, pred);
    return t;
}

void ConfusionMatrix::accumulate(const LabelMask& pred, const LabelMask& gt) {
    require_valid(pred, "accumulate pred");
    require_valid(gt, "accumulate gt");
    if (pred.width != gt.width || pred.height != gt.height) {
        throw Error(ErrorKind::Invalid, "accumulate: dimension mismatch between pred and gt");
    }
    if (pred.num_classes != k_ || gt.num_classes != k_) {
        throw Error(ErrorKind::Invalid, "accumulate: class count mismatch (matrix K=" + std::to_string(k_) +
                                            ", pred K=" + std::to_string(pred.num_classes) +
                                            ", gt K=" + std::to_string(gt.num_classes) + ")");
    }
    for (std::size_t n = 0; n < gt.size(); ++n) {
        const std::uint8_t g = gt.labels[n];
        const std::uint8_t p = pred.labels[n];
        if (g == kIgnoreLabel || p == kIgnoreLabel) continue;
        ++counts_[static_cast<std::size_t>(g) * k_ + p];
    }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (other.k_ != k_) throw Error(ErrorKind::Invalid, "merge: class count mismatch");
    for (std::size_t n = 0; n < counts_.size(); ++n) counts_[n] += other.counts_[n];
}

MetricsReport report(const ConfusionMatrix& cm) {
    const int K = cm.num_classes();
    MetricsReport r;
    r.per_class_iou.resize(K);
    r.gt_pixels.resize(K);
    r.pred_pixels.resize(K);
    r.total_pixels = cm.total();

    double iou_sum = 0.0;
    int defined = 0;
    for (int c = 0; c < K; ++c) {
        r.gt_pixels[c] = cm.row_sum(c);
        r.pred_pixels[c] = cm.col_sum(c);
        const std::uint64_t inter = cm.at(c, c);
        const std::uint64_t uni = r.gt_pixels[c] + r.pred_pixels[c] - inter;
        if (uni == 0) continue;
        const double iou = double(inter) / double(uni);
        r.per_class_iou[c] = iou;
        iou_sum += iou;
        ++defined;
        if (r.total_pixels > 0) r.fwiou += double(r.gt_pixels[c]) / double(r.total_pixels) * iou;
    }
    if (defined == 0) throw Error(ErrorKind::Invalid, "report: every class is undefined (empty confusion matrix)");
    r.miou = iou_sum / defined;
    return r;
}

std::string to_text(const MetricsReport& r) {
    std::string out;
    char buf[64];
    auto line = [&](const std::string& key, double v) {
        std::snprintf(buf, sizeof buf, "%.6f", v);
        out += key + "=" + buf + "\n";
    };
    line("miou", r.miou);
    line("fwiou", r.fwiou);
    out += "pixels=" + std::to_string(r.total_pixels) + "\n";
    for (std::size_t c = 0; c < r.per_class_iou.size(); ++c) {
        const std::string key = "iou." + std::to_string(c);
        if (r.per_class_iou[c]) {
            line(key, *r.per_class_iou[c]);
        } else {
            out += key + "=undefined\n";
        }
    }
    return out;
}

}  // namespace supix::metrics
