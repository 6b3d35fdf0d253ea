#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace synthref {

enum class CorrelationKind { spearman, kendall };

std::string_view to_string(CorrelationKind kind);
CorrelationKind correlation_kind_from_string(std::string_view name);

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> fractional_ranks(std::span<const double> values);

/// Pearson's r, or nullopt when either side has zero variance.
std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys);

/// Pearson correlation of fractional ranks. nullopt iff either side is
/// constant. Throws ValidationError on length mismatch or fewer than 2 points.
std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys);

/// Kendall's tau-b (tie-corrected). Same contract as spearman().
std::optional<double> kendall_tau_b(std::span<const double> xs, std::span<const double> ys);

std::optional<double> correlate(CorrelationKind kind, std::span<const double> xs,
                                std::span<const double> ys);

}  // namespace synthref
