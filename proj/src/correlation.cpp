#include "synthref/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "synthref/errors.hpp"

namespace synthref {

std::string_view to_string(CorrelationKind kind) {
  return kind == CorrelationKind::spearman ? "spearman" : "kendall";
}

CorrelationKind correlation_kind_from_string(std::string_view name) {
  if (name == "spearman") return CorrelationKind::spearman;
  if (name == "kendall") return CorrelationKind::kendall;
  throw ValidationError("unknown correlation kind: " + std::string(name));
}

namespace {

void check_pair(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw ValidationError("correlation inputs differ in length: " + std::to_string(xs.size()) +
                          " vs " + std::to_string(ys.size()));
  }
  if (xs.size() < 2) throw ValidationError("correlation needs at least 2 points");
}

bool constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

}  // namespace

std::vector<double> fractional_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && values[idx[j]] == values[idx[i]]) ++j;
    // Positions i..j-1 (0-based) hold ranks i+1..j; their mean is (i+1+j)/2.
    const double rank = static_cast<double>(i + 1 + j) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = rank;
    i = j;
  }
  return ranks;
}

std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys) {
  check_pair(xs, ys);
  if (constant(xs) || constant(ys)) return std::nullopt;
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys) {
  check_pair(xs, ys);
  const auto rx = fractional_ranks(xs);
  const auto ry = fractional_ranks(ys);
  return pearson(rx, ry);
}

std::optional<double> kendall_tau_b(std::span<const double> xs, std::span<const double> ys) {
  check_pair(xs, ys);
  const std::size_t n = xs.size();
  double concordant_minus_discordant = 0.0;
  double untied_x = 0.0;
  double untied_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = xs[i] - xs[j];
      const double dy = ys[i] - ys[j];
      if (dx != 0.0) untied_x += 1.0;
      if (dy != 0.0) untied_y += 1.0;
      if (dx != 0.0 && dy != 0.0) concordant_minus_discordant += (dx > 0) == (dy > 0) ? 1.0 : -1.0;
    }
  }
  if (untied_x == 0.0 || untied_y == 0.0) return std::nullopt;
  return std::clamp(concordant_minus_discordant / std::sqrt(untied_x * untied_y), -1.0, 1.0);
}

std::optional<double> correlate(CorrelationKind kind, std::span<const double> xs,
                                std::span<const double> ys) {
  return kind == CorrelationKind::spearman ? spearman(xs, ys) : kendall_tau_b(xs, ys);
}

}  // namespace synthref
