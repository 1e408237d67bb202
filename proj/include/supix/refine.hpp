/**
 * @file refine.hpp
 * @brief Superpixel floodfill refinement of a label mask.
 *
 * Every superpixel whose most frequent class covers more than `tau` of
 * its counted pixels is rewritten to that class. Others are left alone.
 */

#ifndef SUPIX_REFINE_HPP
#define SUPIX_REFINE_HPP

#include <cstdint>
#include <vector>

#include "supix/core.hpp"

namespace supix::refine {

enum class IgnorePolicy {
    Exclude,  // IGNORE pixels do not count toward |c_i|
    Include,  // IGNORE pixels enlarge |c_i| but never vote
};

struct RefineParams {
    double tau = 0.5;
    IgnorePolicy ignore_policy = IgnorePolicy::Exclude;
};

Status validate(const RefineParams& params);

struct SuperpixelStats {
    int num_superpixels = 0;
    int num_classes = 0;
    std::vector<std::int64_t> counts;    // [superpixel][class]
    std::vector<std::int64_t> counted;   // |c_i| under the ignore policy
    std::vector<std::uint8_t> dominant;  // l_i, kIgnoreLabel when nothing was counted
    std::vector<double> ratio;           // r_i

    std::int64_t count(int superpixel, int cls) const {
        return counts[static_cast<std::size_t>(superpixel) * num_classes + cls];
    }
};

SuperpixelStats compute_stats(const LabelMask& mask, const SuperpixelPartition& partition,
                              IgnorePolicy policy = IgnorePolicy::Exclude);

LabelMask floodfill_refine(const LabelMask& mask, const SuperpixelPartition& partition,
                           const RefineParams& params);

}  // namespace supix::refine

#endif  // SUPIX_REFINE_HPP
