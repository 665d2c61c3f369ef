#include "wsdist/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace wsdist {

namespace {

constexpr std::size_t pairwise_block = 128;

// Maps ordered by class id and checked against the probability volume.
std::vector<const SignedDistanceMap*> select_maps(const ProbabilityVolume& probs,
                                                  std::span<const SignedDistanceMap> maps,
                                                  const LossConfig& cfg) {
    const int first = cfg.foreground_only ? 1 : 0;
    const int count = probs.num_classes() - first;
    if (static_cast<int>(maps.size()) != count)
        fail(ErrorCode::shape_mismatch, "expected " + std::to_string(count) + " signed maps, got " +
                                            std::to_string(maps.size()));
    std::vector<const SignedDistanceMap*> ordered(static_cast<std::size_t>(count), nullptr);
    for (const auto& m : maps) {
        if (!(m.shape() == probs.shape()))
            fail(ErrorCode::shape_mismatch, "signed map shape does not match the probabilities");
        const int slot = m.class_id() - first;
        if (slot < 0 || slot >= count || ordered[static_cast<std::size_t>(slot)])
            fail(ErrorCode::shape_mismatch, "unexpected or duplicate signed map for class " +
                                                std::to_string(m.class_id()));
        ordered[static_cast<std::size_t>(slot)] = &m;
    }
    return ordered;
}

void require_finite(std::span<const SignedDistanceMap> maps) {
    for (const auto& m : maps)
        for (double v : m.data())
            if (!std::isfinite(v))
                fail(ErrorCode::numeric, "signed map for class " + std::to_string(m.class_id()) +
                                             " has a non-finite value; choose a finite absent-class policy");
}

template <class Term>
double pairwise(std::size_t begin, std::size_t end, const Term& term) {
    if (end - begin <= pairwise_block) {
        double s = 0.0;
        for (std::size_t i = begin; i < end; ++i) s += term(i);
        return s;
    }
    const std::size_t mid = begin + (end - begin) / 2;
    return pairwise(begin, mid, term) + pairwise(mid, end, term);
}

} // namespace

void LossConfig::validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail(ErrorCode::invalid_argument, "alpha must be >= 0");
    if (!(ce_clamp_eps > 0.0 && ce_clamp_eps < 1.0))
        fail(ErrorCode::invalid_argument, "cross-entropy clamp must lie in (0, 1)");
}

double pairwise_sum(std::span<const double> values) {
    return pairwise(0, values.size(), [&](std::size_t i) { return values[i]; });
}

double boundary_loss(const ProbabilityVolume& probs, std::span<const SignedDistanceMap> signed_maps,
                     const LossConfig& cfg) {
    cfg.validate();
    const auto maps = select_maps(probs, signed_maps, cfg);
    require_finite(signed_maps);
    const int first = cfg.foreground_only ? 1 : 0;
    const std::size_t n = probs.shape().size();
    const std::size_t total = n * maps.size();
    const auto s = probs.data().subspan(static_cast<std::size_t>(first) * n);
    return pairwise(0, total, [&](std::size_t flat) {
        const std::size_t slot = flat / n;
        return s[flat] * (*maps[slot])[flat - slot * n];
    });
}

std::vector<std::vector<double>> boundary_loss_grad(std::span<const SignedDistanceMap> signed_maps) {
    require_finite(signed_maps);
    std::vector<std::vector<double>> grad;
    grad.reserve(signed_maps.size());
    for (const auto& m : signed_maps) grad.emplace_back(m.data().begin(), m.data().end());
    return grad;
}

double partial_cross_entropy(const ProbabilityVolume& probs, const LabelVolume& weak_labels,
                             const LossConfig& cfg) {
    cfg.validate();
    if (!(probs.shape() == weak_labels.shape()))
        fail(ErrorCode::shape_mismatch, "probabilities and labels have different shapes");
    if (probs.num_classes() != weak_labels.num_classes())
        fail(ErrorCode::shape_mismatch, "probabilities and labels disagree on the class count");
    const std::size_t n = probs.shape().size();
    const auto data = probs.data();
    const auto labels = weak_labels.data();
    const double eps = cfg.ce_clamp_eps;
    return pairwise(0, n, [&](std::size_t i) {
        const int k = labels[i];
        if (cfg.foreground_only && k == 0) return 0.0;
        return -std::log(std::max(data[static_cast<std::size_t>(k) * n + i], eps));
    });
}

ObjectiveTerms combined_objective(const ProbabilityVolume& probs, const LabelVolume& weak_labels,
                                  std::span<const SignedDistanceMap> signed_maps, const LossConfig& cfg) {
    ObjectiveTerms t;
    t.cross_entropy = partial_cross_entropy(probs, weak_labels, cfg);
    t.boundary = boundary_loss(probs, signed_maps, cfg);
    t.total = t.cross_entropy + cfg.alpha * t.boundary;
    return t;
}

} // namespace wsdist
