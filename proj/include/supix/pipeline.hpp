/**
 * @file pipeline.hpp
 * @brief Config files and the end-to-end run: superpixels, pseudo-masks
 * or ingested probabilities, second-stage refinement, evaluation.
 */

#ifndef SUPIX_PIPELINE_HPP
#define SUPIX_PIPELINE_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "supix/cam.hpp"
#include "supix/metrics.hpp"
#include "supix/refine.hpp"
#include "supix/slic.hpp"

namespace supix::pipeline {

namespace fs = std::filesystem;

/// Flat `key = value` document. Keys are dotted ("slic.compactness");
/// a `[section]` line prefixes the keys that follow it. Lines starting
/// with '#' or ';' are comments.
struct ConfigDocument {
    std::map<std::string, std::string> values;
    fs::path base_dir;  // relative paths resolve against this
};

ConfigDocument parse_config(const std::string& text, const fs::path& base_dir = {});
ConfigDocument load_config(const fs::path& path);

struct PipelineConfig {
    fs::path image;
    std::vector<fs::path> features;
    std::vector<fs::path> weights;  // one shared, or one per feature stack
    std::optional<fs::path> probabilities;
    fs::path ground_truth;
    slic::SlicParams slic;
    refine::RefineParams refine;
    cam::LayerWeights lambdas;
    fs::path output_dir;
    bool emit_intermediates = false;
};

/// Checks keys, parameters, and that every input exists. Throws
/// Error(Invalid) naming the offending key; does no other work.
PipelineConfig make_pipeline_config(const ConfigDocument& doc);

/// Inverse of make_pipeline_config, with paths written as given.
std::string format_config(const PipelineConfig& config);

struct ManifestEntry {
    std::string path;  // relative to the output directory
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct PipelineResult {
    metrics::MetricsReport unrefined;
    metrics::MetricsReport refined;
    std::optional<double> loss;
    int num_superpixels = 0;
    std::vector<ManifestEntry> manifest;
};

PipelineResult run_pipeline(const PipelineConfig& config, int threads = 0);

nlohmann::json metrics_to_json(const metrics::MetricsReport& report);
nlohmann::json manifest_to_json(const std::vector<ManifestEntry>& entries);

}  // namespace supix::pipeline

#endif  // SUPIX_PIPELINE_HPP
