#include "supix/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "supix/io.hpp"

namespace supix::pipeline {

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "input.image",          "input.features",        "input.weights",
        "input.probabilities",  "input.ground_truth",    "slic.cluster_size",
        "slic.compactness",     "slic.max_iterations",   "slic.min_region_fraction",
        "refine.tau",           "refine.ignore_policy",  "loss.lambda1",
        "loss.lambda2",         "loss.lambda3",          "output.dir",
        "output.emit_intermediates",
    };
    return keys;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& key) {
    if (key.empty() || key.front() == '.' || key.back() == '.') return false;
    return std::all_of(key.begin(), key.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '.';
    });
}

Error config_error(const std::string& key, const std::string& why) {
    return Error(ErrorKind::Invalid, "config key '" + key + "': " + why);
}

class Reader {
public:
    explicit Reader(const ConfigDocument& doc) : doc_(doc) {}

    std::optional<std::string> get(const std::string& key) const {
        auto it = doc_.values.find(key);
        if (it == doc_.values.end()) return std::nullopt;
        return it->second;
    }

    std::string required(const std::string& key) const {
        auto v = get(key);
        if (!v || v->empty()) throw config_error(key, "missing");
        return *v;
    }

    double number(const std::string& key, std::optional<double> fallback) const {
        auto v = get(key);
        if (!v) {
            if (!fallback) throw config_error(key, "missing");
            return *fallback;
        }
        std::size_t used = 0;
        double out = 0;
        try {
            out = std::stod(*v, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != v->size()) throw config_error(key, "not a number: '" + *v + "'");
        return out;
    }

    int integer(const std::string& key, int fallback) const {
        auto v = get(key);
        if (!v) return fallback;
        std::size_t used = 0;
        int out = 0;
        try {
            out = std::stoi(*v, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != v->size()) throw config_error(key, "not an integer: '" + *v + "'");
        return out;
    }

    bool boolean(const std::string& key, bool fallback) const {
        auto v = get(key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        throw config_error(key, "not a boolean: '" + *v + "'");
    }

    fs::path input_path(const std::string& key, const std::string& value) const {
        fs::path p = value;
        if (p.is_relative()) p = doc_.base_dir / p;
        if (!fs::exists(p)) throw config_error(key, "no such file: " + p.string());
        return p;
    }

    std::vector<fs::path> path_list(const std::string& key) const {
        std::vector<fs::path> out;
        auto v = get(key);
        if (!v) return out;
        std::stringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) throw config_error(key, "empty list entry");
            out.push_back(input_path(key, item));
        }
        return out;
    }

    fs::path output_path(const std::string& key) const {
        fs::path p = required(key);
        if (p.is_relative()) p = doc_.base_dir / p;
        return p;
    }

private:
    const ConfigDocument& doc_;
};

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

nlohmann::json optional_list(const std::vector<std::optional<double>>& values) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& v : values) arr.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
    return arr;
}

}  // namespace

ConfigDocument parse_config(const std::string& text, const fs::path& base_dir) {
    ConfigDocument doc;
    doc.base_dir = base_dir;
    std::stringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        const std::string where = "config line " + std::to_string(line_no);
        if (line.front() == '[') {
            if (line.back() != ']') throw Error(ErrorKind::Invalid, where + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!section.empty() && !valid_key(section)) {
                throw Error(ErrorKind::Invalid, where + ": bad section name '" + section + "'");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(ErrorKind::Invalid, where + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (!section.empty()) key = section + "." + key;
        if (!valid_key(key)) throw Error(ErrorKind::Invalid, where + ": bad key '" + key + "'");
        if (doc.values.count(key)) throw Error(ErrorKind::Invalid, where + ": duplicate key '" + key + "'");
        doc.values[key] = trim(line.substr(eq + 1));
    }
    return doc;
}

ConfigDocument load_config(const fs::path& path) {
    if (!fs::exists(path)) throw Error(ErrorKind::Input, "no such file: " + path.string());
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Input, "cannot open for reading: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

PipelineConfig make_pipeline_config(const ConfigDocument& doc) {
    for (const auto& [key, value] : doc.values) {
        if (!known_keys().count(key)) throw config_error(key, "unknown key");
    }
    const Reader r(doc);
    PipelineConfig c;

    // Scalar parameters first so a broken config fails before touching files.
    for (int i = 0; i < 3; ++i) {
        c.lambdas.lambdas[i] = r.number("loss.lambda" + std::to_string(i + 1), std::nullopt);
    }
    require(cam::validate(c.lambdas), "config loss.lambda1..3");

    c.slic.cluster_size = r.integer("slic.cluster_size", c.slic.cluster_size);
    c.slic.compactness = r.number("slic.compactness", c.slic.compactness);
    c.slic.max_iterations = r.integer("slic.max_iterations", c.slic.max_iterations);
    c.slic.min_region_fraction = r.number("slic.min_region_fraction", c.slic.min_region_fraction);
    require(slic::validate(c.slic), "config slic");

    c.refine.tau = r.number("refine.tau", c.refine.tau);
    if (auto policy = r.get("refine.ignore_policy")) {
        if (*policy == "exclude") {
            c.refine.ignore_policy = refine::IgnorePolicy::Exclude;
        } else if (*policy == "include") {
            c.refine.ignore_policy = refine::IgnorePolicy::Include;
        } else {
            throw config_error("refine.ignore_policy", "expected 'exclude' or 'include'");
        }
    }
    require(refine::validate(c.refine), "config refine");

    c.emit_intermediates = r.boolean("output.emit_intermediates", false);
    c.output_dir = r.output_path("output.dir");

    c.image = r.input_path("input.image", r.required("input.image"));
    c.ground_truth = r.input_path("input.ground_truth", r.required("input.ground_truth"));
    c.features = r.path_list("input.features");
    c.weights = r.path_list("input.weights");
    if (auto p = r.get("input.probabilities")) c.probabilities = r.input_path("input.probabilities", *p);

    if (c.features.empty() && !c.probabilities) {
        throw config_error("input.features", "need feature stacks or input.probabilities");
    }
    if (!c.features.empty() && c.weights.size() != 1 && c.weights.size() != c.features.size()) {
        throw config_error("input.weights", "expected one shared file or one per feature stack");
    }
    if (c.features.empty() && !c.weights.empty()) {
        throw config_error("input.weights", "given without input.features");
    }
    return c;
}

std::string format_config(const PipelineConfig& c) {
    auto join = [](const std::vector<fs::path>& paths) {
        std::string out;
        for (std::size_t i = 0; i < paths.size(); ++i) out += (i ? ", " : "") + paths[i].string();
        return out;
    };
    std::string out;
    out += "[input]\n";
    out += "image = " + c.image.string() + "\n";
    if (!c.features.empty()) out += "features = " + join(c.features) + "\n";
    if (!c.weights.empty()) out += "weights = " + join(c.weights) + "\n";
    if (c.probabilities) out += "probabilities = " + c.probabilities->string() + "\n";
    out += "ground_truth = " + c.ground_truth.string() + "\n\n";
    out += "[slic]\n";
    out += "cluster_size = " + std::to_string(c.slic.cluster_size) + "\n";
    out += "compactness = " + format_number(c.slic.compactness) + "\n";
    out += "max_iterations = " + std::to_string(c.slic.max_iterations) + "\n";
    out += "min_region_fraction = " + format_number(c.slic.min_region_fraction) + "\n\n";
    out += "[refine]\n";
    out += "tau = " + format_number(c.refine.tau) + "\n";
    out += std::string("ignore_policy = ") +
           (c.refine.ignore_policy == refine::IgnorePolicy::Exclude ? "exclude" : "include") + "\n\n";
    out += "[loss]\n";
    for (int i = 0; i < 3; ++i) {
        out += "lambda" + std::to_string(i + 1) + " = " + format_number(c.lambdas.lambdas[i]) + "\n";
    }
    out += "\n[output]\n";
    out += "dir = " + c.output_dir.string() + "\n";
    out += std::string("emit_intermediates = ") + (c.emit_intermediates ? "true" : "false") + "\n";
    return out;
}

nlohmann::json metrics_to_json(const metrics::MetricsReport& report) {
    nlohmann::json j;
    j["miou"] = report.miou;
    j["fwiou"] = report.fwiou;
    j["per_class_iou"] = optional_list(report.per_class_iou);
    j["gt_pixels"] = report.gt_pixels;
    j["pred_pixels"] = report.pred_pixels;
    j["total_pixels"] = report.total_pixels;
    return j;
}

nlohmann::json manifest_to_json(const std::vector<ManifestEntry>& entries) {
    nlohmann::json files = nlohmann::json::array();
    for (const auto& e : entries) {
        files.push_back({{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}});
    }
    return {{"files", files}, {"format", "supix-manifest"}, {"version", 1}};
}

PipelineResult run_pipeline(const PipelineConfig& config, int threads) {
    const ImageRGB image = io::read_rgb_png(config.image);
    LabelMask gt = io::read_mask_png(config.ground_truth);
    if (gt.width != image.width || gt.height != image.height) {
        throw Error(ErrorKind::Invalid, "ground truth " + config.ground_truth.string() +
                                            " does not match the image dimensions");
    }

    const SuperpixelPartition partition = slic::segment(slic::rgb_to_lab(image), config.slic, threads);

    std::vector<LabelMask> cam_masks;
    for (std::size_t i = 0; i < config.features.size(); ++i) {
        const FeatureMapStack stack = io::to_feature_stack(io::read_tensor(config.features[i]), static_cast<int>(i));
        const ClassifierWeights weights =
            io::to_classifier_weights(io::read_tensor(config.weights[config.weights.size() == 1 ? 0 : i]));
        cam_masks.push_back(cam::score_map_to_mask(cam::compute_score_map(stack, weights, image.height, image.width)));
    }

    PipelineResult result;
    result.num_superpixels = partition.num_superpixels;
    LabelMask prediction;
    if (config.probabilities) {
        const ProbabilityMap probs = io::to_probability_map(io::read_tensor(*config.probabilities));
        if (probs.width != image.width || probs.height != image.height) {
            throw Error(ErrorKind::Invalid, "probability map " + config.probabilities->string() +
                                                " does not match the image dimensions");
        }
        prediction = cam::probability_map_to_mask(probs);
        if (cam_masks.size() == 3) {
            result.loss = cam::multi_layer_loss(probs, cam_masks[0], cam_masks[1], cam_masks[2], config.lambdas);
        }
    } else {
        prediction = cam_masks.back();
    }

    const LabelMask refined = refine::floodfill_refine(prediction, partition, config.refine);

    const int K = std::max(prediction.num_classes, gt.num_classes);
    gt.num_classes = K;
    LabelMask pred_k = prediction;
    LabelMask refined_k = refined;
    pred_k.num_classes = K;
    refined_k.num_classes = K;
    metrics::ConfusionMatrix before(K), after(K);
    before.accumulate(pred_k, gt);
    after.accumulate(refined_k, gt);
    result.unrefined = metrics::report(before);
    result.refined = metrics::report(after);

    fs::create_directories(config.output_dir);
    auto record = [&](const std::string& name) {
        const fs::path p = config.output_dir / name;
        const auto bytes = io::read_bytes(p);
        result.manifest.push_back({name, io::sha256_hex(bytes), bytes.size()});
    };
    if (config.emit_intermediates) {
        io::write_partition(config.output_dir / "partition.png", partition, config.slic);
        record("partition.png");
        record("partition.png.txt");
        io::write_rgb_png(config.output_dir / "overlay.png", io::boundary_overlay(image, partition));
        record("overlay.png");
        for (std::size_t i = 0; i < cam_masks.size(); ++i) {
            const std::string name = "cam_" + std::to_string(i) + ".png";
            io::write_mask_png(config.output_dir / name, cam_masks[i]);
            record(name);
        }
        io::write_mask_png(config.output_dir / "prediction.png", prediction);
        record("prediction.png");
    }
    io::write_mask_png(config.output_dir / "refined.png", refined);
    record("refined.png");

    nlohmann::json report;
    report["unrefined"] = metrics_to_json(result.unrefined);
    report["refined"] = metrics_to_json(result.refined);
    report["miou_gain"] = result.refined.miou - result.unrefined.miou;
    report["loss"] = result.loss ? nlohmann::json(*result.loss) : nlohmann::json(nullptr);
    report["num_classes"] = K;
    report["num_superpixels"] = partition.num_superpixels;
    report["prediction_source"] = config.probabilities ? "probabilities" : "cam";
    io::write_text(config.output_dir / "report.json", report.dump(2) + "\n");
    record("report.json");

    io::write_text(config.output_dir / "manifest.json", manifest_to_json(result.manifest).dump(2) + "\n");
    return result;
}

}  // namespace supix::pipeline
