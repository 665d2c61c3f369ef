#include "wsdist/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace wsdist {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

void require_same_grid(const LabelVolume& gt, const LabelVolume& pred) {
    if (gt.shape().dims() != pred.shape().dims())
        fail(ErrorCode::shape_mismatch, "ground truth and prediction have different shapes");
}

// Felzenszwalb-Huttenlocher lower envelope along one line, in place.
// f holds squared distances; positions are scaled by step.
void envelope_1d(std::vector<double>& f, double step, std::vector<double>& out, std::vector<int>& v,
                 std::vector<double>& z) {
    const int n = static_cast<int>(f.size());
    const double w2 = step * step;
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == inf) continue;
        if (k < 0) {
            v[0] = q;
            z[0] = -inf;
            z[1] = inf;
            k = 0;
            continue;
        }
        double s;
        for (;;) {
            const int p = v[k];
            s = ((f[q] + w2 * q * q) - (f[p] + w2 * p * p)) / (2.0 * w2 * (q - p));
            if (s <= z[k]) {
                if (--k < 0) break;
                continue;
            }
            break;
        }
        ++k;
        v[k] = q;
        z[k] = k == 0 ? -inf : s;
        z[k + 1] = inf;
    }
    if (k < 0) return; // whole line infinite
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[j + 1] < q) ++j;
        const double d = step * (q - v[j]);
        out[q] = d * d + f[v[j]];
    }
    std::copy(out.begin(), out.begin() + n, f.begin());
}

} // namespace

std::vector<double> squared_distance_to(const GridShape& shape, std::span<const std::size_t> features,
                                        std::span<const double> spacing) {
    if (static_cast<int>(spacing.size()) != shape.rank())
        fail(ErrorCode::invalid_argument, "spacing length does not match grid rank");
    std::vector<double> dist(shape.size(), inf);
    for (auto f : features) dist[f] = 0.0;
    if (features.empty()) return dist;

    const auto& ext = shape.extent();
    const std::size_t longest = std::max({ext[0], ext[1], ext[2]});
    std::vector<double> line(longest), scratch(longest), z(longest + 1);
    std::vector<int> v(longest);
    const std::array<std::size_t, 3> stride{ext[1] * ext[2], ext[2], 1};

    for (int axis = 0; axis < shape.rank(); ++axis) {
        const std::size_t len = ext[axis];
        line.resize(len);
        scratch.resize(len);
        // Iterate over every line parallel to `axis`.
        for (std::size_t base = 0; base < shape.size(); ++base) {
            const Voxel p = shape.voxel(base);
            const std::array<std::size_t, 3> pos{p.row, p.col, p.slab};
            if (pos[axis] != 0) continue;
            for (std::size_t t = 0; t < len; ++t) line[t] = dist[base + t * stride[axis]];
            envelope_1d(line, spacing[axis], scratch, v, z);
            for (std::size_t t = 0; t < len; ++t) dist[base + t * stride[axis]] = line[t];
        }
    }
    return dist;
}

double nearest_rank_percentile(std::vector<double> values, double q) {
    if (values.empty()) fail(ErrorCode::precondition, "percentile of an empty set");
    if (!(q > 0.0 && q <= 100.0)) fail(ErrorCode::invalid_argument, "percentile must lie in (0, 100]");
    std::sort(values.begin(), values.end());
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size()) / 100.0));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

double dice(const LabelVolume& gt, const LabelVolume& pred, int class_id) {
    require_same_grid(gt, pred);
    std::size_t g = 0, s = 0, both = 0;
    for (std::size_t i = 0; i < gt.data().size(); ++i) {
        const bool in_g = gt[i] == class_id;
        const bool in_s = pred[i] == class_id;
        g += in_g;
        s += in_s;
        both += in_g && in_s;
    }
    if (g + s == 0) return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(g + s);
}

std::optional<double> hd95(const LabelVolume& gt, const LabelVolume& pred, int class_id) {
    return hd95(gt, pred, class_id, gt.shape().spacing());
}

std::optional<double> hd95(const LabelVolume& gt, const LabelVolume& pred, int class_id,
                           std::span<const double> spacing) {
    require_same_grid(gt, pred);
    const auto surface_g = boundary_of(gt, class_id, Connectivity::full);
    const auto surface_s = boundary_of(pred, class_id, Connectivity::full);
    if (surface_g.empty() || surface_s.empty()) return std::nullopt;

    auto directed = [&](const std::vector<std::size_t>& from, const std::vector<std::size_t>& to) {
        const auto sq = squared_distance_to(gt.shape(), to, spacing);
        std::vector<double> d;
        d.reserve(from.size());
        for (auto i : from) d.push_back(std::sqrt(sq[i]));
        return nearest_rank_percentile(std::move(d), 95.0);
    };
    return std::max(directed(surface_g, surface_s), directed(surface_s, surface_g));
}

MetricReport evaluate(const LabelVolume& gt, const LabelVolume& pred) {
    require_same_grid(gt, pred);
    if (gt.num_classes() != pred.num_classes())
        fail(ErrorCode::shape_mismatch, "ground truth and prediction disagree on the class count");
    MetricReport report;
    for (int k = 1; k < gt.num_classes(); ++k) {
        ClassMetrics m;
        m.dsc = dice(gt, pred, k);
        m.hd95 = hd95(gt, pred, k);
        report.per_class[k] = m;
    }
    const MetricReport single[] = {report};
    return aggregate(single);
}

MetricReport aggregate(std::span<const MetricReport> subjects) {
    MetricReport out;
    std::map<int, double> dsc_sum, hd_sum;
    std::map<int, int> dsc_n, hd_n;
    for (const auto& s : subjects) {
        for (const auto& [k, m] : s.per_class) {
            dsc_sum[k] += m.dsc;
            ++dsc_n[k];
            if (m.hd95) {
                hd_sum[k] += *m.hd95;
                ++hd_n[k];
            } else {
                ++out.hd95_undefined;
            }
        }
    }
    double dsc_total = 0.0, hd_total = 0.0;
    int hd_classes = 0;
    for (const auto& [k, n] : dsc_n) {
        ClassMetrics m;
        m.dsc = dsc_sum[k] / n;
        if (hd_n[k] > 0) {
            m.hd95 = hd_sum[k] / hd_n[k];
            hd_total += *m.hd95;
            ++hd_classes;
        }
        dsc_total += m.dsc;
        out.per_class[k] = m;
    }
    if (!out.per_class.empty()) out.overall.dsc = dsc_total / static_cast<double>(out.per_class.size());
    if (hd_classes > 0) out.overall.hd95 = hd_total / hd_classes;
    return out;
}

} // namespace wsdist
