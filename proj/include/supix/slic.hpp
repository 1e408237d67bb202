/**
 * @file slic.hpp
 * @brief SLIC superpixels over (x, y, L, a, b).
 *
 * Pixels are clustered with
 *   D = sqrt((dx/S)^2 + (dy/S)^2 + (dLab/m)^2)
 * where dLab is the Euclidean distance in CIELAB. Each center only
 * competes for pixels inside the 2S x 2S window around it.
 */

#ifndef SUPIX_SLIC_HPP
#define SUPIX_SLIC_HPP

#include "supix/core.hpp"

namespace supix::slic {

struct SlicParams {
    int cluster_size = 16;              // S
    double compactness = 10.0;          // m
    int max_iterations = 10;
    double min_region_fraction = 0.25;  // of S^2
};

Status validate(const SlicParams& params);

/// sRGB (D65) to CIELAB.
ImageLab rgb_to_lab(const ImageRGB& image);

/// Clusters `image` into superpixels and enforces connectivity.
/// `threads` <= 0 uses default_thread_count(); the result does not
/// depend on the thread count.
SuperpixelPartition segment(const ImageLab& image, const SlicParams& params, int threads = 0);

/// Merges 4-connected fragments smaller than min_region_fraction * S^2
/// into their largest neighbor, then relabels ids densely in raster order.
SuperpixelPartition enforce_connectivity(const SuperpixelPartition& partition,
                                         const SlicParams& params);

}  // namespace supix::slic

#endif  // SUPIX_SLIC_HPP
