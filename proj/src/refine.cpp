#include "supix/refine.hpp"

#include <cmath>
#include <string>

namespace supix::refine {

namespace {

void require_compatible(const LabelMask& mask, const SuperpixelPartition& partition, const char* op) {
    require_valid(mask, std::string(op) + " mask");
    require_valid(partition, std::string(op) + " partition");
    if (mask.width != partition.width || mask.height != partition.height) {
        throw Error(ErrorKind::Invalid,
                    std::string(op) + ": dimension mismatch: mask " + std::to_string(mask.height) + "x" +
                        std::to_string(mask.width) + ", partition " + std::to_string(partition.height) +
                        "x" + std::to_string(partition.width));
    }
}

}  // namespace

Status validate(const RefineParams& params) {
    if (!(params.tau > 0.0 && params.tau <= 1.0)) return Status::fail("tau", 0, "must be in (0,1]");
    return Status::ok();
}

SuperpixelStats compute_stats(const LabelMask& mask, const SuperpixelPartition& partition,
                              IgnorePolicy policy) {
    require_compatible(mask, partition, "compute_stats");
    const int N = partition.num_superpixels;
    const int K = mask.num_classes;
    SuperpixelStats stats;
    stats.num_superpixels = N;
    stats.num_classes = K;
    stats.counts.assign(static_cast<std::size_t>(N) * K, 0);
    stats.counted.assign(N, 0);
    stats.dominant.assign(N, kIgnoreLabel);
    stats.ratio.assign(N, 0.0);

    std::vector<std::int64_t> ignored(N, 0);
    for (std::size_t n = 0; n < mask.size(); ++n) {
        const std::int32_t sp = partition.assignments[n];
        const std::uint8_t label = mask.labels[n];
        if (label == kIgnoreLabel) {
            ++ignored[sp];
        } else {
            ++stats.counts[static_cast<std::size_t>(sp) * K + label];
        }
    }
    for (int i = 0; i < N; ++i) {
        std::int64_t voters = 0;
        int best = -1;
        for (int j = 0; j < K; ++j) {
            const std::int64_t c = stats.count(i, j);
            voters += c;
            if (c > 0 && (best < 0 || c > stats.count(i, best))) best = j;
        }
        stats.counted[i] = voters + (policy == IgnorePolicy::Include ? ignored[i] : 0);
        if (best < 0 || stats.counted[i] == 0) continue;
        stats.dominant[i] = static_cast<std::uint8_t>(best);
        stats.ratio[i] = double(stats.count(i, best)) / double(stats.counted[i]);
    }
    return stats;
}

LabelMask floodfill_refine(const LabelMask& mask, const SuperpixelPartition& partition,
                           const RefineParams& params) {
    require(validate(params), "floodfill_refine");
    const SuperpixelStats stats = compute_stats(mask, partition, params.ignore_policy);

    std::vector<std::uint8_t> rewrite(stats.num_superpixels, kIgnoreLabel);
    for (int i = 0; i < stats.num_superpixels; ++i) {
        if (stats.dominant[i] != kIgnoreLabel && stats.ratio[i] > params.tau) {
            rewrite[i] = stats.dominant[i];
        }
    }
    LabelMask out = mask;
    for (std::size_t n = 0; n < out.size(); ++n) {
        const std::uint8_t target = rewrite[partition.assignments[n]];
        if (target != kIgnoreLabel && out.labels[n] != kIgnoreLabel) out.labels[n] = target;
    }
    return out;
}

}  // namespace supix::refine
