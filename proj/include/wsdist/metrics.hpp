#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "wsdist/grid.hpp"

namespace wsdist {

// 2|G n S| / (|G| + |S|); two empty sets score 1.
double dice(const LabelVolume& gt, const LabelVolume& pred, int class_id);

// Symmetric 95th-percentile surface distance in physical units: the larger of
// the two directed nearest-rank percentiles over boundary voxels. Empty when
// either surface is empty.
std::optional<double> hd95(const LabelVolume& gt, const LabelVolume& pred, int class_id);
std::optional<double> hd95(const LabelVolume& gt, const LabelVolume& pred, int class_id,
                           std::span<const double> spacing);

// Nearest-rank percentile (q in (0, 100]) of unsorted values.
double nearest_rank_percentile(std::vector<double> values, double q);

// Exact squared Euclidean distance (physical units) from every voxel to the
// nearest feature voxel; +inf when there are no features.
std::vector<double> squared_distance_to(const GridShape& shape, std::span<const std::size_t> features,
                                        std::span<const double> spacing);

struct ClassMetrics {
    double dsc = 0.0;
    std::optional<double> hd95;
};

struct MetricReport {
    std::map<int, ClassMetrics> per_class;
    ClassMetrics overall;
    // HD95 values excluded from averages because a surface was empty.
    int hd95_undefined = 0;
};

MetricReport evaluate(const LabelVolume& gt, const LabelVolume& pred);

// Per-class means over subjects; overall is the mean over foreground classes.
MetricReport aggregate(std::span<const MetricReport> subjects);

} // namespace wsdist
