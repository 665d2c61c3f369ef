// wsdist command-line front end. Links only the C API.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wsdist/wsdist.h"

namespace fs = std::filesystem;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_runtime = 1;
constexpr int exit_usage = 2;

struct RuntimeFailure {
    std::string message;
};

struct UsageFailure {
    std::string message;
};

void check(wsdist_status status, const std::string& what) {
    if (status != WSDIST_OK) throw RuntimeFailure{what + ": " + wsdist_last_error()};
}

template <class T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using Image = std::unique_ptr<wsdist_image, Deleter<wsdist_image, wsdist_image_free>>;
using Labels = std::unique_ptr<wsdist_labels, Deleter<wsdist_labels, wsdist_labels_free>>;
using Probs = std::unique_ptr<wsdist_probs, Deleter<wsdist_probs, wsdist_probs_free>>;
using Maps = std::unique_ptr<wsdist_maps, Deleter<wsdist_maps, wsdist_maps_free>>;
using Report = std::unique_ptr<wsdist_report, Deleter<wsdist_report, wsdist_report_free>>;

struct OwnedString {
    char* p = nullptr;
    ~OwnedString() { wsdist_string_free(p); }
};

Labels load_labels(const std::string& path, int num_classes) {
    wsdist_labels* raw = nullptr;
    check(wsdist_labels_read(path.c_str(), num_classes, &raw), "reading " + path);
    return Labels(raw);
}

std::vector<std::size_t> parse_list(const std::string& text, std::size_t expected, const char* flag) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const long v = std::stol(item, &used);
            if (used != item.size() || v <= 0) throw std::invalid_argument(item);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw UsageFailure{std::string(flag) + ": expected positive integers, got '" + text + "'"};
        }
    }
    if (out.size() != expected)
        throw UsageFailure{std::string(flag) + ": expected " + std::to_string(expected) + " comma-separated values"};
    return out;
}

std::vector<double> parse_reals(const std::string& text, std::size_t expected, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const double v = std::stod(item, &used);
            if (used != item.size() || !(v > 0)) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw UsageFailure{std::string(flag) + ": expected positive numbers, got '" + text + "'"};
        }
    }
    if (out.size() != expected)
        throw UsageFailure{std::string(flag) + ": expected " + std::to_string(expected) + " comma-separated values"};
    return out;
}

// --- distmap -------------------------------------------------------------

struct DistmapArgs {
    std::string image, labels, out;
    std::string kind = "geo";
    std::optional<double> mix;
    std::string engine = "exact";
    int passes = 4;
    double tol = 0.0;
    std::string connectivity = "full";
    std::string dims = "2d";
    std::string absent = "ones";
    std::size_t channel = 0;
    bool no_rescale = false;
    int num_classes = 0;
};

wsdist_absent_policy parse_absent(const std::string& text) {
    if (text == "zeros") return {WSDIST_ABSENT_ZEROS, 0.0};
    if (text == "ones") return {WSDIST_ABSENT_ONES, 1.0};
    if (text.rfind("const:", 0) == 0) {
        try {
            std::size_t used = 0;
            const std::string num = text.substr(6);
            const double v = std::stod(num, &used);
            if (used == num.size() && std::isfinite(v) && v >= 0) return {WSDIST_ABSENT_CONSTANT, v};
        } catch (const std::exception&) {
        }
    }
    throw UsageFailure{"--absent: expected zeros, ones or const:<v >= 0>, got '" + text + "'"};
}

int run_distmap(const DistmapArgs& a, bool json) {
    const int kind = a.kind == "euc" ? WSDIST_KIND_EUCLIDEAN
                     : a.kind == "geo" ? WSDIST_KIND_GEODESIC
                     : a.kind == "int" ? WSDIST_KIND_INTENSITY
                                       : WSDIST_KIND_MBD;
    if (kind == WSDIST_KIND_MBD && a.engine == "raster")
        throw UsageFailure{"--engine raster does not support --kind mbd"};
    if (a.mix && kind != WSDIST_KIND_GEODESIC)
        throw UsageFailure{"--mix only applies to --kind geo (euc is fixed at 0, int at 1)"};
    const auto policy = parse_absent(a.absent);

    wsdist_transform_options opts;
    wsdist_transform_options_init(&opts, kind);
    if (a.mix) opts.mix = *a.mix;
    opts.engine = a.engine == "raster" ? WSDIST_ENGINE_RASTER : WSDIST_ENGINE_EXACT;
    opts.max_passes = a.passes;
    opts.convergence_tol = a.tol;
    opts.connectivity = a.connectivity == "faces" ? WSDIST_CONN_FACES : WSDIST_CONN_FULL;
    opts.channel = a.channel;
    opts.rescale_to_255 = a.no_rescale ? 0 : 1;
    opts.per_slice = a.dims == "2d" ? 1 : 0;

    wsdist_image* raw_image = nullptr;
    check(wsdist_image_read(a.image.c_str(), &raw_image), "reading " + a.image);
    const Image image(raw_image);
    const Labels labels = load_labels(a.labels, a.num_classes);

    wsdist_maps* raw_maps = nullptr;
    check(wsdist_signed_maps(image.get(), labels.get(), &opts, &policy, &raw_maps), "computing distance maps");
    const Maps maps(raw_maps);
    check(wsdist_maps_write(maps.get(), a.out.c_str(), &opts), "writing maps");

    nlohmann::json summary;
    summary["out"] = a.out;
    summary["files"] = nlohmann::json::array();
    for (std::size_t i = 0; i < wsdist_maps_count(maps.get()); ++i) {
        int k = 0;
        check(wsdist_maps_class_id(maps.get(), i, &k), "reading class id");
        summary["files"].push_back("class_" + std::to_string(k) + ".npy");
    }
    if (json) {
        std::cout << summary.dump(2) << "\n";
    } else {
        std::cout << "wrote " << summary["files"].size() << " signed maps to " << a.out << "\n";
    }
    return exit_ok;
}

// --- points --------------------------------------------------------------

struct PointsArgs {
    std::string labels, out;
    std::optional<std::uint64_t> seed;
    std::string axes = "4,2";
    bool volume = false;
    int num_classes = 0;
};

int run_points(const PointsArgs& a, bool json) {
    if (!a.seed) throw UsageFailure{"--seed is required"};
    const auto axes = parse_reals(a.axes, 2, "--axes");
    const Labels full = load_labels(a.labels, a.num_classes);
    wsdist_labels* raw = nullptr;
    check(wsdist_generate_points(full.get(), axes[0], axes[1], *a.seed, a.volume ? 0 : 1, &raw),
          "generating point annotations");
    const Labels weak(raw);
    check(wsdist_labels_write(weak.get(), a.out.c_str(), 1, *a.seed), "writing " + a.out);
    if (json) {
        std::cout << nlohmann::json{{"out", a.out}, {"seed", *a.seed}}.dump(2) << "\n";
    } else {
        std::cout << "wrote point annotations to " << a.out << " (seed " << *a.seed << ")\n";
    }
    return exit_ok;
}

// --- loss ----------------------------------------------------------------

struct LossArgs {
    std::string probs, weak_labels, maps;
    double alpha = 1.0;
    bool all_classes = false;
    double eps = 1e-10;
};

int run_loss(const LossArgs& a, bool json) {
    wsdist_probs* raw_probs = nullptr;
    check(wsdist_probs_read(a.probs.c_str(), &raw_probs), "reading " + a.probs);
    const Probs probs(raw_probs);
    wsdist_grid grid{};
    int classes = 0;
    const Labels weak = load_labels(a.weak_labels, 0);
    check(wsdist_labels_info(weak.get(), &grid, &classes), "reading label info");
    wsdist_maps* raw_maps = nullptr;
    check(wsdist_maps_read(a.maps.c_str(), &raw_maps), "reading maps from " + a.maps);
    const Maps maps(raw_maps);

    wsdist_loss_config cfg;
    wsdist_loss_config_init(&cfg);
    cfg.alpha = a.alpha;
    cfg.foreground_only = a.all_classes ? 0 : 1;
    cfg.ce_clamp_eps = a.eps;
    double total = 0, ce = 0, bl = 0;
    check(wsdist_combined_objective(probs.get(), weak.get(), maps.get(), &cfg, &total, &ce, &bl),
          "evaluating the objective");
    const nlohmann::json out{{"total", total}, {"cross_entropy", ce}, {"boundary", bl}, {"alpha", a.alpha}};
    if (json) {
        std::cout << out.dump(2) << "\n";
    } else {
        std::printf("total %.10g\ncross_entropy %.10g\nboundary %.10g\n", total, ce, bl);
    }
    return exit_ok;
}

// --- metrics -------------------------------------------------------------

struct MetricsArgs {
    std::string gt, pred, gt_dir, pred_dir, out;
    int num_classes = 0;
};

int run_metrics(const MetricsArgs& a, bool json) {
    const bool single = !a.gt.empty() || !a.pred.empty();
    const bool dirs = !a.gt_dir.empty() || !a.pred_dir.empty();
    if (single == dirs || (single && (a.gt.empty() || a.pred.empty())) ||
        (dirs && (a.gt_dir.empty() || a.pred_dir.empty())))
        throw UsageFailure{"give either --gt and --pred, or --gt-dir and --pred-dir"};

    std::vector<std::pair<std::string, std::pair<fs::path, fs::path>>> pairs;
    if (single) {
        pairs.push_back({fs::path(a.gt).stem().string(), {a.gt, a.pred}});
    } else {
        std::vector<fs::path> names;
        for (const auto& e : fs::directory_iterator(a.gt_dir))
            if (e.path().extension() == ".npy") names.push_back(e.path().filename());
        std::sort(names.begin(), names.end());
        for (const auto& n : names) {
            const auto pred = fs::path(a.pred_dir) / n;
            if (!fs::exists(pred)) throw RuntimeFailure{"no prediction for " + n.string() + " in " + a.pred_dir};
            pairs.push_back({n.stem().string(), {fs::path(a.gt_dir) / n, pred}});
        }
        if (pairs.empty()) throw RuntimeFailure{"no .npy files in " + a.gt_dir};
    }

    wsdist_report* raw = nullptr;
    check(wsdist_report_create(&raw), "creating report");
    const Report report(raw);
    for (const auto& [subject, files] : pairs) {
        const Labels gt = load_labels(files.first.string(), a.num_classes);
        int k = a.num_classes;
        if (k <= 0) check(wsdist_labels_info(gt.get(), nullptr, &k), "reading label info");
        const Labels pred = load_labels(files.second.string(), k);
        check(wsdist_report_add(report.get(), subject.c_str(), gt.get(), pred.get()), "evaluating " + subject);
    }
    OwnedString text;
    check(wsdist_report_json(report.get(), &text.p), "serializing report");
    if (!a.out.empty()) {
        std::ofstream f(a.out);
        f << text.p << "\n";
        if (!f) throw RuntimeFailure{"cannot write " + a.out};
    }
    if (json || a.out.empty()) {
        std::cout << text.p << "\n";
    } else {
        const auto j = nlohmann::json::parse(text.p);
        std::cout << "class      DSC      HD95\n";
        for (const auto& [k, v] : j["per_class"].items()) {
            std::printf("%-8s %7.4f  %8s\n", k.c_str(), v["dsc"].get<double>(),
                        v["hd95"].is_null() ? "n/a" : std::to_string(v["hd95"].get<double>()).c_str());
        }
        std::printf("%-8s %7.4f  %8s\n", "all", j["overall"]["dsc"].get<double>(),
                    j["overall"]["hd95"].is_null() ? "n/a"
                                                   : std::to_string(j["overall"]["hd95"].get<double>()).c_str());
    }
    return exit_ok;
}

// --- bench ---------------------------------------------------------------

struct BenchArgs {
    int reps = 3;
    std::string size_2d = "256,256";
    std::string size_3d = "64,64,32";
    std::string spacing_3d = "1,1,4";
    int classes = 3;
    std::uint64_t seed = 0;
    std::string engine = "raster";
    int passes = 4;
    std::string out;
};

int run_bench(const BenchArgs& a, bool json) {
    wsdist_bench_config cfg;
    wsdist_bench_config_init(&cfg);
    const auto s2 = parse_list(a.size_2d, 2, "--size-2d");
    const auto s3 = parse_list(a.size_3d, 3, "--size-3d");
    const auto sp = parse_reals(a.spacing_3d, 3, "--spacing-3d");
    std::copy(s2.begin(), s2.end(), cfg.size_2d);
    std::copy(s3.begin(), s3.end(), cfg.size_3d);
    std::copy(sp.begin(), sp.end(), cfg.spacing_3d);
    cfg.repetitions = a.reps;
    cfg.foreground_classes = a.classes;
    cfg.seed = a.seed;
    cfg.additive_engine = a.engine == "exact" ? WSDIST_ENGINE_EXACT : WSDIST_ENGINE_RASTER;
    cfg.max_passes = a.passes;

    OwnedString text;
    check(wsdist_bench_run(&cfg, &text.p), "running benchmark");
    if (!a.out.empty()) {
        std::ofstream f(a.out);
        f << text.p << "\n";
        if (!f) throw RuntimeFailure{"cannot write " + a.out};
    }
    if (json) {
        std::cout << text.p << "\n";
        return exit_ok;
    }
    const auto j = nlohmann::json::parse(text.p);
    std::printf("Mean time to compute signed maps for all foreground classes (s), %d repetition(s)\n", a.reps);
    std::printf("%-10s %12s %12s\n", "Distance", "in 2D", "in 3D");
    for (const auto& row : j["rows"])
        std::printf("%-10s %12.6f %12.6f\n", row["kind"].get<std::string>().c_str(), row["mean_2d"].get<double>(),
                    row["mean_3d"].get<double>());
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Intensity-aware distance maps, boundary loss and segmentation metrics for point annotations"};
    app.require_subcommand(1);
    app.fallthrough();
    bool json = false;
    app.add_flag("--json", json, "Print machine-readable JSON on stdout");

    DistmapArgs dm;
    auto* distmap = app.add_subcommand("distmap", "Precompute one signed distance map per foreground class");
    distmap->add_option("--image", dm.image, "Input image (.npy with .json sidecar)")->required();
    distmap->add_option("--labels", dm.labels, "Weak label volume")->required();
    distmap->add_option("--out", dm.out, "Output directory")->required();
    distmap->add_option("--kind", dm.kind, "Distance kind")->check(CLI::IsMember({"euc", "geo", "int", "mbd"}));
    distmap->add_option("--mix", dm.mix, "Intensity weight for geo, in [0,1]")->check(CLI::Range(0.0, 1.0));
    distmap->add_option("--engine", dm.engine, "Propagation engine")->check(CLI::IsMember({"exact", "raster"}));
    distmap->add_option("--passes", dm.passes, "Raster passes")->check(CLI::PositiveNumber);
    distmap->add_option("--tol", dm.tol, "Raster convergence tolerance")->check(CLI::NonNegativeNumber);
    distmap->add_option("--connectivity", dm.connectivity, "Neighborhood")
        ->check(CLI::IsMember({"faces", "full"}));
    distmap->add_option("--dims", dm.dims, "2d: per slab, 3d: whole volume")->check(CLI::IsMember({"2d", "3d"}));
    distmap->add_option("--absent", dm.absent, "Map for absent classes: zeros, ones or const:v");
    distmap->add_option("--channel", dm.channel, "Intensity channel");
    distmap->add_flag("--no-rescale", dm.no_rescale, "Skip rescaling intensities to [0,255]");
    distmap->add_option("--num-classes", dm.num_classes, "Class count including background");

    PointsArgs pt;
    auto* points = app.add_subcommand("points", "Synthesize point annotations from full labels");
    points->add_option("--labels", pt.labels, "Full label volume")->required();
    points->add_option("--out", pt.out, "Output label volume")->required();
    points->add_option("--seed", pt.seed, "Random seed");
    points->add_option("--axes", pt.axes, "Ellipse semi-axes a,b in voxels (a along columns)");
    points->add_flag("--volume", pt.volume, "One annotation per class per volume instead of per slab");
    points->add_option("--num-classes", pt.num_classes, "Class count including background");

    LossArgs ls;
    auto* loss = app.add_subcommand("loss", "Evaluate partial cross-entropy + alpha * boundary loss");
    loss->add_option("--probs", ls.probs, "Probability volume with a leading class axis")->required();
    loss->add_option("--weak-labels", ls.weak_labels, "Weak label volume")->required();
    loss->add_option("--maps", ls.maps, "Directory written by distmap")->required();
    loss->add_option("--alpha", ls.alpha, "Boundary loss weight")->check(CLI::NonNegativeNumber);
    loss->add_flag("--all-classes", ls.all_classes, "Include background in both terms");
    loss->add_option("--eps", ls.eps, "Log clamp")->check(CLI::Range(0.0, 1.0));

    MetricsArgs mt;
    auto* metrics = app.add_subcommand("metrics", "Dice and HD95 per class and overall");
    metrics->add_option("--gt", mt.gt, "Ground-truth labels");
    metrics->add_option("--pred", mt.pred, "Predicted labels");
    metrics->add_option("--gt-dir", mt.gt_dir, "Directory of ground-truth volumes");
    metrics->add_option("--pred-dir", mt.pred_dir, "Directory of predictions with matching names");
    metrics->add_option("--out", mt.out, "Write the JSON report here");
    metrics->add_option("--num-classes", mt.num_classes, "Class count including background");

    BenchArgs bn;
    auto* bench = app.add_subcommand("bench", "Time signed-map computation for every distance kind in 2D and 3D");
    bench->add_option("--reps", bn.reps, "Repetitions")->check(CLI::PositiveNumber);
    bench->add_option("--size-2d", bn.size_2d, "rows,cols");
    bench->add_option("--size-3d", bn.size_3d, "rows,cols,slabs");
    bench->add_option("--spacing-3d", bn.spacing_3d, "3D voxel spacing");
    bench->add_option("--classes", bn.classes, "Foreground classes in the phantom")->check(CLI::PositiveNumber);
    bench->add_option("--seed", bn.seed, "Phantom seed");
    bench->add_option("--engine", bn.engine, "Engine for additive kinds")->check(CLI::IsMember({"exact", "raster"}));
    bench->add_option("--passes", bn.passes, "Raster passes")->check(CLI::PositiveNumber);
    bench->add_option("--out", bn.out, "Write the JSON result here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    if (const char* env = std::getenv("WSDIST_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end == env || *end != '\0') {
            std::cerr << "WSDIST_THREADS must be a nonnegative integer\n";
            return exit_usage;
        }
        wsdist_set_threads(static_cast<unsigned>(v));
    }

    try {
        if (*distmap) return run_distmap(dm, json);
        if (*points) return run_points(pt, json);
        if (*loss) return run_loss(ls, json);
        if (*metrics) return run_metrics(mt, json);
        if (*bench) return run_bench(bn, json);
    } catch (const UsageFailure& f) {
        std::cerr << "usage error: " << f.message << "\n";
        return exit_usage;
    } catch (const RuntimeFailure& f) {
        std::cerr << "error: " << f.message << "\n";
        return exit_runtime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime;
    }
    return exit_usage;
}
