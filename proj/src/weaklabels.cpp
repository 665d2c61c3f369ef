#include "wsdist/weaklabels.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace wsdist {

void PointAnnotationConfig::validate() const {
    if (!(semi_axis_cols > 0.0) || !(semi_axis_rows > 0.0) || !std::isfinite(semi_axis_cols) ||
        !std::isfinite(semi_axis_rows))
        fail(ErrorCode::invalid_argument, "ellipse semi-axes must be finite and positive");
}

AbsentClassPolicy AbsentClassPolicy::constant(double v) {
    if (!std::isfinite(v) || v < 0.0)
        fail(ErrorCode::invalid_argument, "absent-class constant must be finite and nonnegative");
    return {Mode::constant, v};
}

double AbsentClassPolicy::fill_value() const {
    switch (mode) {
    case Mode::zeros: return 0.0;
    case Mode::ones: return 1.0;
    case Mode::constant:
        if (!std::isfinite(value) || value < 0.0)
            fail(ErrorCode::invalid_argument, "absent-class constant must be finite and nonnegative");
        return value;
    }
    return 0.0;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
    if (bound == 0) fail(ErrorCode::precondition, "bounded_draw needs a positive bound");
    // 2^64 mod bound; draws below it would bias the modulo.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t x = rng();
        if (x >= threshold) return x % bound;
    }
}

std::vector<std::pair<int, int>> ellipse_offsets(double semi_axis_cols, double semi_axis_rows) {
    const int rmax = static_cast<int>(std::floor(semi_axis_rows));
    const int cmax = static_cast<int>(std::floor(semi_axis_cols));
    std::vector<std::pair<int, int>> out;
    for (int dr = -rmax; dr <= rmax; ++dr) {
        for (int dc = -cmax; dc <= cmax; ++dc) {
            const double u = dc / semi_axis_cols;
            const double v = dr / semi_axis_rows;
            if (u * u + v * v <= 1.0) out.emplace_back(dr, dc);
        }
    }
    return out;
}

namespace {

// Stamps the clipped ellipse around `center` (within its slab), keeps the part
// inside class_id and 8-connected to the center.
void stamp(const LabelVolume& full, int class_id, std::size_t center,
           const std::vector<std::pair<int, int>>& ellipse, std::vector<std::int32_t>& out) {
    const auto& shape = full.shape();
    const Voxel c = shape.voxel(center);
    const auto rows = static_cast<long long>(shape.rows());
    const auto cols = static_cast<long long>(shape.cols());

    int rspan = 0, cspan = 0;
    for (auto [dr, dc] : ellipse) {
        rspan = std::max(rspan, std::abs(dr));
        cspan = std::max(cspan, std::abs(dc));
    }
    const int w = 2 * cspan + 1;
    const int h = 2 * rspan + 1;
    // 0 = outside candidate set, 1 = candidate, 2 = reached
    std::vector<unsigned char> local(static_cast<std::size_t>(w * h), 0);
    auto cell = [&](int dr, int dc) -> unsigned char& {
        return local[static_cast<std::size_t>((dr + rspan) * w + (dc + cspan))];
    };
    for (auto [dr, dc] : ellipse) {
        const long long r = static_cast<long long>(c.row) + dr;
        const long long col = static_cast<long long>(c.col) + dc;
        if (r < 0 || r >= rows || col < 0 || col >= cols) continue;
        const std::size_t idx =
            shape.index({static_cast<std::size_t>(r), static_cast<std::size_t>(col), c.slab});
        if (full[idx] == class_id) cell(dr, dc) = 1;
    }

    std::vector<std::pair<int, int>> stack{{0, 0}};
    cell(0, 0) = 2;
    while (!stack.empty()) {
        auto [dr, dc] = stack.back();
        stack.pop_back();
        out[shape.index({c.row + dr, c.col + dc, c.slab})] = class_id;
        for (int er = -1; er <= 1; ++er) {
            for (int ec = -1; ec <= 1; ++ec) {
                const int nr = dr + er, nc = dc + ec;
                if (std::abs(nr) > rspan || std::abs(nc) > cspan) continue;
                if (cell(nr, nc) != 1) continue;
                cell(nr, nc) = 2;
                stack.emplace_back(nr, nc);
            }
        }
    }
}

} // namespace

LabelVolume generate_points(const LabelVolume& full_labels, const PointAnnotationConfig& cfg) {
    cfg.validate();
    if (full_labels.num_classes() < 2)
        fail(ErrorCode::precondition, "point generation needs at least one foreground class");
    const auto& shape = full_labels.shape();
    const auto ellipse = ellipse_offsets(cfg.semi_axis_cols, cfg.semi_axis_rows);
    const int k_max = full_labels.num_classes();
    std::vector<std::int32_t> out(shape.size(), 0);

    const bool slice_wise = cfg.per_slice || shape.slabs() == 1;
    const std::size_t groups = slice_wise ? shape.slabs() : 1;
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(k_max));

    for (std::size_t g = 0; g < groups; ++g) {
        for (auto& m : members) m.clear();
        if (slice_wise) {
            for (std::size_t i = g; i < shape.size(); i += shape.slabs())
                members[static_cast<std::size_t>(full_labels[i])].push_back(i);
        } else {
            for (std::size_t i = 0; i < shape.size(); ++i)
                members[static_cast<std::size_t>(full_labels[i])].push_back(i);
        }
        std::mt19937_64 rng(mix_seed(cfg.seed, g));
        for (int k = 1; k < k_max; ++k) {
            const auto& m = members[static_cast<std::size_t>(k)];
            if (m.empty()) continue;
            const std::size_t center = m[bounded_draw(rng, m.size())];
            stamp(full_labels, k, center, ellipse, out);
        }
    }
    return LabelVolume(shape, full_labels.num_classes(), std::move(out));
}

SignedDistanceMap absent_class_map(const GridShape& shape, const AbsentClassPolicy& policy, int class_id) {
    return SignedDistanceMap(shape, class_id, std::vector<double>(shape.size(), policy.fill_value()));
}

} // namespace wsdist
