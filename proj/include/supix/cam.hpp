/**
 * @file cam.hpp
 * @brief Class activation maps: logits, score maps, pseudo-masks and the
 * multi-layer cross-entropy loss.
 */

#ifndef SUPIX_CAM_HPP
#define SUPIX_CAM_HPP

#include <array>
#include <vector>

#include "supix/core.hpp"

namespace supix::cam {

/// Weights of the three per-depth loss terms.
struct LayerWeights {
    std::array<double, 3> lambdas{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
};

Status validate(const LayerWeights& lw);

/// Probabilities are clamped to this value before taking the log.
inline constexpr double kProbabilityFloor = 1e-12;

/// z_c = sum_k w_{c,k} * mean(m_k).
std::vector<double> compute_logits(const FeatureMapStack& features, const ClassifierWeights& weights);

/// sum_k w_{c,k} m_k(i,j) at feature resolution, bilinearly resampled
/// (half-pixel centers) to out_height x out_width.
ScoreMap compute_score_map(const FeatureMapStack& features, const ClassifierWeights& weights,
                           int out_height, int out_width);

/// Per-pixel argmax over classes; ties go to the lowest class index.
LabelMask score_map_to_mask(const ScoreMap& scores);

/// Hard-label argmax of a probability map, same tie rule.
LabelMask probability_map_to_mask(const ProbabilityMap& probs);

/// Mean over non-IGNORE pixels of -log(s[p(i,j)](i,j)).
double cross_entropy(const ProbabilityMap& s, const LabelMask& p);

/// lambda_1 l(s,p1) + lambda_2 l(s,p2) + lambda_3 l(s,p3).
double multi_layer_loss(const ProbabilityMap& s, const LabelMask& p1, const LabelMask& p2,
                        const LabelMask& p3, const LayerWeights& lw);

/// Bilinear resampling of one h x w plane with half-pixel centers
/// (align_corners = false).
std::vector<float> resize_bilinear(const std::vector<float>& plane, int in_height, int in_width,
                                   int out_height, int out_width);

}  // namespace supix::cam

#endif  // SUPIX_CAM_HPP
