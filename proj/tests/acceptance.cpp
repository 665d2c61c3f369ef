// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <sys/wait.h>
#include <unistd.h>

#include "oracles.hpp"
#include "wsdist/grid.hpp"
#include "wsdist/io.hpp"
#include "wsdist/loss.hpp"
#include "wsdist/metrics.hpp"
#include "wsdist/transforms.hpp"
#include "wsdist/weaklabels.hpp"

using namespace wsdist;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report(int id, const char* title, const std::function<Outcome()>& body) {
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

GridShape random_shape(std::mt19937_64& rng, bool volumetric, std::size_t max_side, bool anisotropic) {
    std::vector<std::size_t> dims{oracle::pick(rng, 1, max_side), oracle::pick(rng, 1, max_side)};
    if (volumetric) dims.push_back(oracle::pick(rng, 1, max_side));
    std::vector<double> spacing(dims.size(), 1.0);
    if (anisotropic)
        for (auto& s : spacing) s = oracle::uniform(rng, 0.3, 4.0);
    return GridShape(dims, spacing);
}

ScalarVolume random_image(std::mt19937_64& rng, const GridShape& shape, double lo = 0.0, double hi = 255.0) {
    std::vector<double> v(shape.size());
    for (auto& x : v) x = oracle::uniform(rng, lo, hi);
    return ScalarVolume(shape, 1, std::move(v));
}

// 1. Raster engine at its fixed point equals the exact engine.
Outcome raster_matches_exact() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    const DistanceKind kinds[] = {DistanceKind::euclidean, DistanceKind::geodesic, DistanceKind::intensity};
    RasterConfig rc;
    rc.max_passes = 10000;
    rc.convergence_tol = 0.0;
    double worst = 0.0;
    int cases = 0, unconverged = 0;
    for (int n = 0; n < 250; ++n) {
        const bool volumetric = n >= 200;
        const auto shape = random_shape(rng, volumetric, volumetric ? 6 : 16, volumetric);
        const auto image = random_image(rng, shape);
        const auto sources = oracle::random_sources(rng, shape.size(), 4);
        for (auto kind : kinds) {
            auto cfg = TransformConfig::make(kind);
            if (kind == DistanceKind::geodesic) cfg.intensity_mix = oracle::uniform(rng, 0.05, 0.95);
            cfg.connectivity = (n + static_cast<int>(kind)) % 2 ? Connectivity::full : Connectivity::faces;
            RasterStats stats;
            const auto exact = distance_map_exact(image, sources, cfg);
            const auto raster = distance_map_raster(image, sources, cfg, rc, 0, &stats);
            if (!stats.converged) ++unconverged;
            for (std::size_t i = 0; i < shape.size(); ++i) worst = std::max(worst, std::abs(exact[i] - raster[i]));
            ++cases;
        }
    }
    const double t = seconds_since(t0);
    return {worst <= 1e-9 && unconverged == 0 && t < 60.0,
            fmt("%d maps (200 2D grids, 50 3D grids, 3 kinds), max |raster-exact| = %.3g, unconverged = %d, %.2f s",
                cases, worst, unconverged, t)};
}

// 2. The interval engine never undercuts the true minimum barrier.
Outcome mbd_upper_bound() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(202);
    const auto cfg = TransformConfig::make(DistanceKind::mbd);
    int below = 0, exact_miss = 0, oracle_disagree = 0, strict = 0;
    for (int n = 0; n < 100; ++n) {
        const bool line = n % 5 == 0;
        const bool constant = n % 5 == 1;
        std::vector<std::size_t> dims{line ? 1 : oracle::pick(rng, 2, 4), oracle::pick(rng, line ? 2 : 2, 4)};
        if (line && n % 10 == 0) std::swap(dims[0], dims[1]);
        const GridShape shape(dims);
        std::vector<double> v(shape.size());
        // Integers force ties, reals make them rare.
        for (auto& x : v) x = constant ? 7.0 : (n % 2 ? std::floor(oracle::uniform(rng, 0, 5)) : oracle::uniform(rng, 0, 10));
        const ScalarVolume image(shape, 1, v);
        const auto sources = oracle::random_sources(rng, shape.size(), 2);
        const auto g = oracle::grid_of(shape);
        const bool full = n % 3 != 0;
        auto c = cfg;
        c.connectivity = full ? Connectivity::full : Connectivity::faces;
        const auto got = distance_map_exact(image, sources, c);
        const auto truth = oracle::mbd_simple_paths(g, v, sources, full);
        const auto check = oracle::mbd_threshold(g, v, sources, full);
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (truth[i] != check[i]) ++oracle_disagree;
            if (got[i] < truth[i]) ++below;
            if (got[i] > truth[i]) ++strict;
            if ((line || constant) && got[i] != truth[i]) ++exact_miss;
        }
    }
    const double t = seconds_since(t0);
    return {below == 0 && exact_miss == 0 && oracle_disagree == 0 && t < 120.0,
            fmt("100 grids: below truth = %d, 1D/constant mismatches = %d, oracle disagreements = %d, "
                "strictly above (allowed) = %d, %.2f s",
                below, exact_miss, oracle_disagree, strict, t)};
}

// 3. A flat corridor connects an unannotated voxel to the annotation at zero
// barrier.
Outcome mbd_reflexivity() {
    const GridShape shape({3, 7});
    std::vector<double> v(shape.size(), 200.0);
    for (std::size_t c = 0; c < 7; ++c) v[shape.index({1, c, 0})] = 40.0;
    std::vector<std::int32_t> lab(shape.size(), 0);
    lab[shape.index({1, 0, 0})] = 1;
    const LabelVolume weak(shape, 2, lab);
    auto cfg = TransformConfig::make(DistanceKind::mbd);
    cfg.rescale_to_255 = false;
    const auto maps = signed_maps_for_all_classes(ScalarVolume(shape, 1, v), weak, cfg, AbsentClassPolicy::ones());
    const std::size_t far = shape.index({1, 6, 0});
    const std::size_t wall = shape.index({0, 6, 0});
    const bool ok = lab[far] == 0 && maps[0][far] == 0.0 && maps[0][wall] > 0.0;
    return {ok, fmt("corridor end (outside annotation) phi = %g, off-corridor phi = %g", maps[0][far], maps[0][wall])};
}

// 4. Range bounds on rescaled 64x64 images.
Outcome range_bounds() {
    std::mt19937_64 rng(404);
    const GridShape shape({64, 64});
    const double euc_cap = std::sqrt(2.0) * 64.0;
    int violations = 0;
    double max_mbd = 0.0, max_euc = 0.0;
    for (int n = 0; n < 50; ++n) {
        const auto image = rescale_intensities(random_image(rng, shape, -1000.0, 3000.0), 0);
        const auto sources = oracle::random_sources(rng, shape.size(), 5);
        const auto mbd = distance_map_exact(image, sources, TransformConfig::make(DistanceKind::mbd));
        const auto euc = distance_map_exact(image, sources, TransformConfig::make(DistanceKind::euclidean));
        for (std::size_t i = 0; i < shape.size(); ++i) {
            max_mbd = std::max(max_mbd, mbd[i]);
            max_euc = std::max(max_euc, euc[i]);
            violations += mbd[i] > 255.0;
            violations += euc[i] > euc_cap;
        }
    }
    return {violations == 0, fmt("50 images: max mbd = %.6g (cap 255), max euc = %.6g (cap %.6g), violations = %d",
                                 max_mbd, max_euc, euc_cap, violations)};
}

// 5. mu = 0 ignores intensities, mu = 1 ignores spacing.
Outcome endpoint_semantics() {
    std::mt19937_64 rng(505);
    int mismatches = 0;
    RasterConfig rc;
    rc.max_passes = 10000;
    for (int n = 0; n < 20; ++n) {
        const bool volumetric = n % 2 == 1;
        const auto shape = random_shape(rng, volumetric, volumetric ? 8 : 20, true);
        const auto image = random_image(rng, shape);
        std::vector<double> shuffled(image.data().begin(), image.data().end());
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const ScalarVolume permuted(shape, 1, shuffled);
        const auto sources = oracle::random_sources(rng, shape.size(), 3);
        const auto euc = TransformConfig::make(DistanceKind::euclidean);
        const auto a = distance_map_exact(image, sources, euc), b = distance_map_exact(permuted, sources, euc);
        const auto ra = distance_map_raster(image, sources, euc, rc), rb = distance_map_raster(permuted, sources, euc, rc);
        for (std::size_t i = 0; i < shape.size(); ++i) mismatches += (a[i] != b[i]) + (ra[i] != rb[i]);
    }
    for (int n = 0; n < 20; ++n) {
        const bool volumetric = n % 2 == 1;
        const auto shape = random_shape(rng, volumetric, volumetric ? 8 : 20, true);
        std::vector<double> respaced(shape.spacing());
        for (auto& s : respaced) s = oracle::uniform(rng, 0.2, 6.0);
        const GridShape other(shape.dims(), respaced);
        const auto image = random_image(rng, shape);
        const ScalarVolume moved(other, 1, {image.data().begin(), image.data().end()});
        const auto sources = oracle::random_sources(rng, shape.size(), 3);
        const auto in = TransformConfig::make(DistanceKind::intensity);
        const auto a = distance_map_exact(image, sources, in), b = distance_map_exact(moved, sources, in);
        const auto ra = distance_map_raster(image, sources, in, rc), rb = distance_map_raster(moved, sources, in, rc);
        for (std::size_t i = 0; i < shape.size(); ++i) mismatches += (a[i] != b[i]) + (ra[i] != rb[i]);
    }
    return {mismatches == 0, fmt("20 permutation + 20 respacing instances, both engines: %d mismatches", mismatches)};
}

// 6. Sign follows class membership; zeros sit exactly on the boundary.
Outcome signed_structure() {
    std::mt19937_64 rng(606);
    int violations = 0, maps_checked = 0;
    for (int n = 0; n < 100; ++n) {
        const bool volumetric = n % 2 == 1;
        const auto shape = random_shape(rng, volumetric, volumetric ? 10 : 24, n % 3 == 0);
        const auto g = oracle::grid_of(shape);
        const int classes = static_cast<int>(oracle::pick(rng, 1, 3));
        const auto lab = oracle::random_blobs(rng, g, classes);
        const LabelVolume labels(shape, classes + 1, lab);
        auto cfg = TransformConfig::make(n % 2 ? DistanceKind::euclidean : DistanceKind::geodesic);
        cfg.connectivity = n % 4 < 2 ? Connectivity::full : Connectivity::faces;
        const auto maps = signed_maps_for_all_classes(random_image(rng, shape), labels, cfg, AbsentClassPolicy::ones());
        for (int k = 1; k <= classes; ++k) {
            const auto& phi = maps[static_cast<std::size_t>(k - 1)];
            const auto edge = oracle::boundary_mask(g, lab, k, cfg.connectivity == Connectivity::full);
            if (std::none_of(lab.begin(), lab.end(), [&](auto x) { return x == k; })) {
                for (std::size_t i = 0; i < g.size(); ++i) violations += phi[i] != 1.0;
                continue;
            }
            ++maps_checked;
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (edge[i])
                    violations += !(phi[i] == 0.0 && !std::signbit(phi[i]));
                else if (lab[i] == k)
                    violations += !(phi[i] < 0.0);
                else
                    violations += !(phi[i] > 0.0);
            }
        }
    }
    return {violations == 0, fmt("100 volumes, %d present-class maps: %d violations", maps_checked, violations)};
}

// 7. Loss value, gradient and objective composition.
Outcome loss_correctness() {
    std::mt19937_64 rng(707);
    const GridShape shape({9, 7, 3}, {1.0, 1.0, 2.5});
    const std::size_t n = shape.size();
    const int classes = 4;
    std::vector<double> p(static_cast<std::size_t>(classes) * n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int k = 0; k < classes; ++k) sum += p[k * n + i] = oracle::uniform(rng, 0.05, 1.0);
        for (int k = 0; k < classes; ++k) p[k * n + i] /= sum;
    }
    const ProbabilityVolume probs(shape, classes, p);
    const auto g = oracle::grid_of(shape);
    const auto lab = oracle::random_blobs(rng, g, classes - 1);
    std::vector<std::int32_t> weak(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        if (oracle::uniform(rng, 0, 1) < 0.3) weak[i] = lab[i];
    const LabelVolume weak_labels(shape, classes, weak);
    std::vector<SignedDistanceMap> maps;
    for (int k = 1; k < classes; ++k) {
        std::vector<double> phi(n);
        for (auto& x : phi) x = oracle::uniform(rng, -20.0, 20.0);
        maps.emplace_back(shape, k, phi);
    }

    double naive = 0.0;
    for (int k = 1; k < classes; ++k)
        for (std::size_t i = 0; i < n; ++i) naive += p[k * n + i] * maps[static_cast<std::size_t>(k - 1)][i];
    const double got = boundary_loss(probs, maps);
    const double rel = std::abs(got - naive) / std::abs(naive);

    int grad_mismatch = 0;
    const auto grad = boundary_loss_grad(maps);
    for (std::size_t m = 0; m < maps.size(); ++m)
        for (std::size_t i = 0; i < n; ++i) grad_mismatch += grad[m][i] != maps[m][i];

    // Probabilities must keep summing to one, so each nudge of class k is
    // balanced on background, which the foreground-only loss ignores.
    const double eps = 1e-4;
    double fd_worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const int k = static_cast<int>(oracle::pick(rng, 1, classes - 1));
        const std::size_t i = oracle::pick(rng, 0, n - 1);
        auto shifted = [&](double h) {
            auto q = p;
            q[k * n + i] += h;
            q[i] -= h;
            return boundary_loss(ProbabilityVolume(shape, classes, q), maps);
        };
        const double fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
        fd_worst = std::max(fd_worst, std::abs(fd - grad[static_cast<std::size_t>(k - 1)][i]));
    }

    LossConfig cfg;
    cfg.alpha = 0.37;
    const auto terms = combined_objective(probs, weak_labels, maps, cfg);
    const double ce = partial_cross_entropy(probs, weak_labels, cfg);
    double ce_naive = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (weak[i] > 0) ce_naive -= std::log(std::max(p[weak[i] * n + i], cfg.ce_clamp_eps));
    const double recompose = std::max({std::abs(terms.total - (terms.cross_entropy + cfg.alpha * terms.boundary)),
                                       std::abs(terms.cross_entropy - ce), std::abs(terms.boundary - got),
                                       std::abs(ce - ce_naive)});

    return {rel <= 1e-12 && grad_mismatch == 0 && fd_worst <= 1e-6 && recompose <= 1e-9,
            fmt("loss rel err = %.3g, grad mismatches = %d, worst FD err (50 coords) = %.3g, recomposition err = %.3g",
                rel, grad_mismatch, fd_worst, recompose)};
}

// 8. Synthesized annotations stay inside their class, one blob per slice.
Outcome weak_label_containment() {
    std::mt19937_64 rng(808);
    int leaks = 0, bad_components = 0, nondeterministic = 0, pairs = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const GridShape shape({oracle::pick(rng, 8, 32), oracle::pick(rng, 8, 32), oracle::pick(rng, 1, 4)},
                              {1.0, 1.0, 3.0});
        const auto g = oracle::grid_of(shape);
        const int classes = static_cast<int>(oracle::pick(rng, 1, 3));
        const auto lab = oracle::random_blobs(rng, g, classes);
        const LabelVolume full(shape, classes + 1, lab);
        PointAnnotationConfig cfg;
        cfg.seed = seed;
        const auto a = generate_points(full, cfg);
        const auto b = generate_points(full, cfg);
        nondeterministic += !std::equal(a.data().begin(), a.data().end(), b.data().begin());
        for (std::size_t i = 0; i < g.size(); ++i) leaks += a[i] != 0 && a[i] != lab[i];
        for (int k = 1; k <= classes; ++k)
            for (std::size_t s = 0; s < g.ext[2]; ++s) {
                std::vector<char> mask(g.size(), 0);
                bool in_slab = false;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    mask[i] = a[i] == k;
                    if (lab[i] == k && g.pos(i)[2] == s) in_slab = true;
                }
                const int comps = oracle::components_in_slab(g, mask, s);
                bad_components += comps != (in_slab ? 1 : 0);
                pairs += in_slab;
            }
    }
    return {leaks == 0 && bad_components == 0 && nondeterministic == 0,
            fmt("100 seeds, %d (slice, class) pairs: leaks = %d, wrong component counts = %d, nondeterministic = %d",
                pairs, leaks, bad_components, nondeterministic)};
}

// 9. Dice exhaustively on 3x3 masks, HD95 against all-pairs brute force.
Outcome metrics_match() {
    const GridShape square({3, 3});
    int dice_mismatch = 0;
    std::vector<std::int32_t> a(9), b(9);
    for (unsigned ma = 0; ma < 512; ++ma) {
        for (int i = 0; i < 9; ++i) a[i] = (ma >> i) & 1;
        const LabelVolume ga(square, 2, a);
        for (unsigned mb = 0; mb < 512; ++mb) {
            for (int i = 0; i < 9; ++i) b[i] = (mb >> i) & 1;
            const int na = std::popcount(ma), nb = std::popcount(mb), both = std::popcount(ma & mb);
            const double expect = na + nb == 0 ? 1.0 : 2.0 * both / static_cast<double>(na + nb);
            dice_mismatch += dice(ga, LabelVolume(square, 2, b), 1) != expect;
        }
    }

    std::mt19937_64 rng(909);
    double worst = 0.0;
    int definedness = 0;
    for (int n = 0; n < 100; ++n) {
        const GridShape shape({oracle::pick(rng, 2, 12), oracle::pick(rng, 2, 12), oracle::pick(rng, 1, 4)},
                              {1.0, 1.0, 4.0});
        const auto g = oracle::grid_of(shape);
        std::vector<std::int32_t> x, y;
        if (n % 2 == 0) {
            x = oracle::random_blobs(rng, g, 1);
            y = oracle::random_blobs(rng, g, 1);
        } else {
            const double density = oracle::uniform(rng, 0.05, 0.6);
            x.resize(g.size());
            y.resize(g.size());
            for (auto& v : x) v = oracle::uniform(rng, 0, 1) < density;
            for (auto& v : y) v = oracle::uniform(rng, 0, 1) < density;
        }
        const auto got = hd95(LabelVolume(shape, 2, x), LabelVolume(shape, 2, y), 1);
        const auto want = oracle::hd95(g, x, y, 1);
        if (got.has_value() != want.has_value()) {
            ++definedness;
            continue;
        }
        if (got) worst = std::max(worst, std::abs(*got - *want));
    }
    return {dice_mismatch == 0 && definedness == 0 && worst <= 1e-9,
            fmt("262144 dice pairs: %d mismatches; 100 hd95 pairs: max err = %.3g, definedness mismatches = %d",
                dice_mismatch, worst, definedness)};
}

// 10. The bench command's table and the MBD-3D ordering.
Outcome bench_structure() {
    const std::string cmd = std::string(WSDIST_CLI_PATH) + " bench --json --reps 3 --size-3d 64,64,32";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) return {false, "could not start the CLI"};
    std::string out;
    std::array<char, 4096> buf{};
    std::size_t got = 0;
    while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), got);
    const int status = ::pclose(pipe);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {false, "bench exited with an error"};

    const auto j = nlohmann::json::parse(out);
    const std::vector<std::string> expected{"euclidean", "geodesic", "intensity", "mbd"};
    std::vector<std::string> kinds;
    bool shaped = j["size_3d"] == nlohmann::json({64, 64, 32});
    double mbd3 = 0.0, slowest_additive = 0.0;
    std::ostringstream line;
    for (const auto& r : j["rows"]) {
        kinds.push_back(r["kind"]);
        shaped = shaped && r["times_2d"].size() == 3 && r["times_3d"].size() == 3 && r["mean_2d"].is_number() &&
                 r["mean_3d"].is_number();
        const double m3 = r["mean_3d"];
        if (r["kind"] == "mbd")
            mbd3 = m3;
        else
            slowest_additive = std::max(slowest_additive, m3);
        line << r["kind"].get<std::string>() << " 2D " << r["mean_2d"].get<double>() << " s / 3D " << m3 << " s; ";
    }
    shaped = shaped && kinds == expected;
    return {shaped && mbd3 > slowest_additive,
            fmt("table %s; %s MBD-3D %.4g s vs slowest additive 3D %.4g s", shaped ? "complete" : "malformed",
                line.str().c_str(), mbd3, slowest_additive)};
}

// 11. NPY bytes survive encode/parse and a trip through the filesystem.
Outcome npy_round_trip() {
    std::mt19937_64 rng(1111);
    const fs::path dir = fs::temp_directory_path() / ("wsdist_accept_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const io::DType types[] = {io::DType::float32, io::DType::int32, io::DType::uint8};
    int mismatches = 0;
    for (int n = 0; n < 50; ++n) {
        io::NpyArray arr;
        arr.dtype = types[n % 3];
        const std::size_t rank = oracle::pick(rng, 1, 4);
        for (std::size_t a = 0; a < rank; ++a) arr.shape.push_back(oracle::pick(rng, 1, 9));
        arr.payload.resize(arr.count() * io::item_size(arr.dtype));
        for (auto& byte : arr.payload) byte = static_cast<std::byte>(oracle::pick(rng, 0, 255));
        const auto parsed = io::parse_npy(io::encode_npy(arr));
        const auto path = dir / ("a" + std::to_string(n) + ".npy");
        io::write_npy(arr, path);
        const auto loaded = io::read_npy(path);
        for (const auto* back : {&parsed, &loaded})
            mismatches += back->dtype != arr.dtype || back->shape != arr.shape || back->payload != arr.payload;
    }
    fs::remove_all(dir);
    return {mismatches == 0, fmt("50 arrays over f4/i4/u1, in memory and on disk: %d mismatches", mismatches)};
}

} // namespace

int main() {
    report(1, "raster equals exact for additive kinds", raster_matches_exact);
    report(2, "interval MBD bounds the exhaustive MBD from above", mbd_upper_bound);
    report(3, "MBD reaches zero off the annotation along a flat corridor", mbd_reflexivity);
    report(4, "range bounds on rescaled images", range_bounds);
    report(5, "endpoint semantics of the intensity mix", endpoint_semantics);
    report(6, "signed-map sign and zero structure", signed_structure);
    report(7, "boundary loss, gradient and objective", loss_correctness);
    report(8, "weak-label containment and determinism", weak_label_containment);
    report(9, "dice and hd95 against brute force", metrics_match);
    report(10, "bench table and MBD-3D ordering", bench_structure);
    report(11, "NPY round trip", npy_round_trip);
    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
