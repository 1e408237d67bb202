#include "supix/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "supix/cam.hpp"
#include "supix/io.hpp"
#include "supix/metrics.hpp"
#include "supix/pipeline.hpp"
#include "supix/refine.hpp"
#include "supix/slic.hpp"
#include "supix/synth.hpp"

namespace supix::cli {

namespace fs = std::filesystem;

namespace {

struct SlicOptions {
    std::string image;
    std::string out;
    std::string overlay;
    slic::SlicParams params;
};

struct RefineOptions {
    std::string mask;
    std::string partition;
    std::string out;
    std::string ignore_policy = "exclude";
    double tau = 0.5;
};

struct CamOptions {
    std::vector<std::string> features;
    std::vector<std::string> weights;
    int width = 0;
    int height = 0;
    std::string out;
    std::string scores;
};

struct EvalOptions {
    std::string pred;
    std::string gt;
    std::string out;
};

struct PipelineOptions {
    std::vector<std::string> configs;
    int jobs = 1;
};

struct SynthOptions {
    synth::SynthParams params;
    std::string out_dir;
    int cluster_size = 8;
    double confidence = 0.7;
};

void require_input(const std::string& path, const char* flag) {
    if (!fs::exists(path)) throw Error(ErrorKind::Input, std::string(flag) + ": no such file: " + path);
}

fs::path numbered_output(const fs::path& out, std::size_t index, std::size_t count) {
    if (count == 1) return out;
    fs::path p = out;
    p.replace_filename(out.stem().string() + "_" + std::to_string(index) + out.extension().string());
    return p;
}

int cmd_slic(const SlicOptions& o, std::ostream& out) {
    require(slic::validate(o.params), "slic parameters");
    require_input(o.image, "--image");
    const ImageRGB image = io::read_rgb_png(o.image);
    const SuperpixelPartition partition = slic::segment(slic::rgb_to_lab(image), o.params);
    io::write_partition(o.out, partition, o.params);
    if (!o.overlay.empty()) io::write_rgb_png(o.overlay, io::boundary_overlay(image, partition));
    out << "superpixels=" << partition.num_superpixels << "\n";
    return kExitOk;
}

int cmd_cam(const CamOptions& o, std::ostream& out) {
    if (o.width < 1 || o.height < 1) throw Error(ErrorKind::Invalid, "--width and --height must be >= 1");
    if (o.weights.size() != 1 && o.weights.size() != o.features.size()) {
        throw Error(ErrorKind::Invalid, "--weights: expected one shared file or one per --features entry");
    }
    for (const auto& f : o.features) require_input(f, "--features");
    for (const auto& w : o.weights) require_input(w, "--weights");
    for (std::size_t i = 0; i < o.features.size(); ++i) {
        const FeatureMapStack stack = io::to_feature_stack(io::read_tensor(o.features[i]), static_cast<int>(i));
        const ClassifierWeights weights =
            io::to_classifier_weights(io::read_tensor(o.weights[o.weights.size() == 1 ? 0 : i]));
        const ScoreMap scores = cam::compute_score_map(stack, weights, o.height, o.width);
        const LabelMask mask = cam::score_map_to_mask(scores);
        const fs::path mask_path = numbered_output(o.out, i, o.features.size());
        io::write_mask_png(mask_path, mask);
        if (!o.scores.empty()) {
            io::write_tensor(numbered_output(o.scores, i, o.features.size()), io::from_score_map(scores));
        }
        out << "mask=" << mask_path.string() << "\n";
    }
    return kExitOk;
}

int cmd_refine(const RefineOptions& o, std::ostream& out) {
    refine::RefineParams params;
    params.tau = o.tau;
    params.ignore_policy = o.ignore_policy == "include" ? refine::IgnorePolicy::Include
                                                        : refine::IgnorePolicy::Exclude;
    require(refine::validate(params), "refine parameters");
    require_input(o.mask, "--mask");
    require_input(o.partition, "--partition");
    const LabelMask mask = io::read_mask_png(o.mask);
    const auto part = io::read_partition(o.partition);
    const LabelMask refined = refine::floodfill_refine(mask, part.partition, params);
    io::write_mask_png(o.out, refined);
    std::size_t changed = 0;
    for (std::size_t n = 0; n < mask.size(); ++n) changed += mask.labels[n] != refined.labels[n];
    out << "changed_pixels=" << changed << "\n";
    return kExitOk;
}

int cmd_eval(const EvalOptions& o, std::ostream& out) {
    require_input(o.pred, "--pred");
    require_input(o.gt, "--gt");
    LabelMask pred = io::read_mask_png(o.pred);
    LabelMask gt = io::read_mask_png(o.gt);
    const int K = std::max(pred.num_classes, gt.num_classes);
    pred.num_classes = K;
    gt.num_classes = K;
    metrics::ConfusionMatrix cm(K);
    cm.accumulate(pred, gt);
    const metrics::MetricsReport r = metrics::report(cm);
    out << metrics::to_text(r);
    if (!o.out.empty()) io::write_text(o.out, pipeline::metrics_to_json(r).dump(2) + "\n");
    return kExitOk;
}

int cmd_synth(const SynthOptions& o, std::ostream& out) {
    require(synth::validate(o.params), "synth parameters");
    const fs::path dir = o.out_dir;
    fs::create_directories(dir);
    const synth::Fixture f = synth::generate(o.params);
    // Noise seed is decorrelated from the fixture seed.
    const LabelMask noisy = synth::corrupt(f.ground_truth, o.params.noise_rate, synth::splitmix64(o.params.seed));
    io::write_rgb_png(dir / "image.png", f.image);
    io::write_mask_png(dir / "gt.png", f.ground_truth);
    io::write_mask_png(dir / "noisy.png", noisy);
    io::write_tensor(dir / "probs.spxt", io::from_probability_map(synth::soft_probabilities(noisy, o.confidence)));

    pipeline::PipelineConfig cfg;
    cfg.image = "image.png";
    cfg.ground_truth = "gt.png";
    cfg.probabilities = fs::path("probs.spxt");
    cfg.slic.cluster_size = o.cluster_size;
    cfg.output_dir = "out";
    io::write_text(dir / "pipeline.cfg", pipeline::format_config(cfg));
    out << "wrote=" << (dir / "pipeline.cfg").string() << "\n";
    return kExitOk;
}

int cmd_pipeline(const PipelineOptions& o, std::ostream& out, std::ostream& err) {
    if (o.jobs < 1) throw Error(ErrorKind::Invalid, "--jobs must be >= 1");
    // Validate every config before any work.
    std::vector<pipeline::PipelineConfig> configs;
    for (const auto& path : o.configs) {
        try {
            configs.push_back(pipeline::make_pipeline_config(pipeline::load_config(path)));
        } catch (const Error& e) {
            throw Error(e.kind(), path + ": " + e.what());
        }
    }

    struct Outcome {
        int code = kExitOk;
        std::string text;
    };
    std::vector<Outcome> outcomes(configs.size());
    const int workers = std::min<int>(o.jobs, static_cast<int>(configs.size()));
    const int threads_each = std::max(1, default_thread_count() / std::max(workers, 1));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
            Outcome& r = outcomes[i];
            try {
                const auto res = pipeline::run_pipeline(configs[i], threads_each);
                std::ostringstream line;
                line << o.configs[i] << ": superpixels=" << res.num_superpixels
                     << " miou_unrefined=" << res.unrefined.miou << " miou_refined=" << res.refined.miou
                     << " files=" << res.manifest.size() + 1 << "\n";
                r.text = line.str();
            } catch (const Error& e) {
                r.code = exit_code_for(e.kind());
                r.text = o.configs[i] + ": error: " + e.what() + "\n";
            } catch (const fs::filesystem_error& e) {
                r.code = kExitIo;
                r.text = o.configs[i] + ": error: " + e.what() + "\n";
            } catch (const std::exception& e) {
                r.code = kExitInternal;
                r.text = o.configs[i] + ": internal error: " + e.what() + "\n";
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    int code = kExitOk;
    for (const auto& r : outcomes) {
        (r.code == kExitOk ? out : err) << r.text;
        if (code == kExitOk) code = r.code;
    }
    return code;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Invalid:
        case ErrorKind::Input:
            return kExitUsage;
        case ErrorKind::Io:
            return kExitIo;
        case ErrorKind::Internal:
            return kExitInternal;
    }
    return kExitInternal;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"supix: superpixel refinement of segmentation masks", "supix"};
    app.require_subcommand(1);

    SlicOptions slic_o;
    auto* slic_cmd = app.add_subcommand("slic", "Superpixel partition of an RGB PNG");
    slic_cmd->add_option("--image", slic_o.image, "Input RGB PNG")->required();
    slic_cmd->add_option("--cluster-size", slic_o.params.cluster_size, "Grid spacing S")->capture_default_str();
    slic_cmd->add_option("--compactness", slic_o.params.compactness, "Compactness m")->capture_default_str();
    slic_cmd->add_option("--iters", slic_o.params.max_iterations, "Iterations")->capture_default_str();
    slic_cmd->add_option("--min-region", slic_o.params.min_region_fraction,
                         "Fragments below this fraction of S^2 are merged")
        ->capture_default_str();
    slic_cmd->add_option("--out", slic_o.out, "Partition PNG (sidecar written next to it)")->required();
    slic_cmd->add_option("--overlay", slic_o.overlay, "Optional boundary overlay PNG");

    CamOptions cam_o;
    auto* cam_cmd = app.add_subcommand("cam", "Pseudo-masks from feature maps and classifier weights");
    cam_cmd->add_option("--features", cam_o.features, "SPXT feature stacks [K_f,h,w]")->required();
    cam_cmd->add_option("--weights", cam_o.weights, "SPXT classifier weights [C,K_f]")->required();
    cam_cmd->add_option("--width", cam_o.width, "Output width")->required();
    cam_cmd->add_option("--height", cam_o.height, "Output height")->required();
    cam_cmd->add_option("--out", cam_o.out, "Mask PNG (suffixed _<i> for several stacks)")->required();
    cam_cmd->add_option("--scores", cam_o.scores, "Optional SPXT score map output");

    RefineOptions refine_o;
    auto* refine_cmd = app.add_subcommand("refine", "Superpixel floodfill refinement of a mask");
    refine_cmd->add_option("--mask", refine_o.mask, "Label mask PNG")->required();
    refine_cmd->add_option("--partition", refine_o.partition, "Partition PNG")->required();
    refine_cmd->add_option("--tau", refine_o.tau, "Dominance threshold in (0,1]")->capture_default_str();
    refine_cmd->add_option("--ignore-policy", refine_o.ignore_policy, "exclude|include")
        ->check(CLI::IsMember({"exclude", "include"}))
        ->capture_default_str();
    refine_cmd->add_option("--out", refine_o.out, "Refined mask PNG")->required();

    EvalOptions eval_o;
    auto* eval_cmd = app.add_subcommand("eval", "IoU metrics of a prediction against ground truth");
    eval_cmd->add_option("--pred", eval_o.pred, "Predicted mask PNG")->required();
    eval_cmd->add_option("--gt", eval_o.gt, "Ground-truth mask PNG")->required();
    eval_cmd->add_option("--out", eval_o.out, "Optional JSON report");

    PipelineOptions pipe_o;
    auto* pipe_cmd = app.add_subcommand("pipeline", "Run the full refinement pipeline from config files");
    pipe_cmd->add_option("--config", pipe_o.configs, "Config file(s)")->required();
    pipe_cmd->add_option("--jobs", pipe_o.jobs, "Configs processed concurrently")->capture_default_str();

    SynthOptions synth_o;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a Voronoi fixture and a ready pipeline config");
    synth_cmd->add_option("--width", synth_o.params.width)->capture_default_str();
    synth_cmd->add_option("--height", synth_o.params.height)->capture_default_str();
    synth_cmd->add_option("--classes", synth_o.params.num_classes)->capture_default_str();
    synth_cmd->add_option("--sites", synth_o.params.num_sites)->capture_default_str();
    synth_cmd->add_option("--noise", synth_o.params.noise_rate)->capture_default_str();
    synth_cmd->add_option("--jitter", synth_o.params.color_jitter)->capture_default_str();
    synth_cmd->add_option("--seed", synth_o.params.seed)->capture_default_str();
    synth_cmd->add_option("--cluster-size", synth_o.cluster_size, "S written into the config")->capture_default_str();
    synth_cmd->add_option("--out-dir", synth_o.out_dir)->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*slic_cmd) return cmd_slic(slic_o, out);
        if (*cam_cmd) return cmd_cam(cam_o, out);
        if (*refine_cmd) return cmd_refine(refine_o, out);
        if (*eval_cmd) return cmd_eval(eval_o, out);
        if (*pipe_cmd) return cmd_pipeline(pipe_o, out, err);
        if (*synth_cmd) return cmd_synth(synth_o, out);
    } catch (const Error& e) {
        err << "supix: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const fs::filesystem_error& e) {
        err << "supix: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        err << "supix: internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}

}  // namespace supix::cli
