#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "synthref/core.hpp"
#include "synthref/correlation.hpp"

namespace synthref {

enum class Level { system, sample, summary };

std::string_view to_string(Level level);
Level level_from_string(std::string_view name);

struct DocumentCorrelation {
  std::string context_id;
  std::optional<double> rho;  // as computed; nullopt when undefined
  bool skipped = false;
  bool imputed = false;  // undefined rho counted as 0.0
};

struct CorrelationReport {
  std::string dataset;
  std::string dimension;
  Level level = Level::sample;
  CorrelationKind coefficient_kind = CorrelationKind::spearman;
  double value = 0.0;
  std::vector<DocumentCorrelation> per_document;  // sample level only
  int skipped_count = 0;
};

struct MetaEvalOptions {
  std::string dataset;
  CorrelationKind kind = CorrelationKind::spearman;
  // Count undefined per-document correlations as 0 instead of skipping them.
  bool impute_zero = false;
};

// All three take records for a single dimension and reject duplicate
// (context_id, system_id) keys with ValidationError.

/// Mean over documents of the per-document correlation across systems.
/// Throws DegenerateInputError when every document is skipped.
CorrelationReport sample_level(std::span<const MetaEvalRecord> records,
                               const MetaEvalOptions& options);

/// Correlation of per-system means. Requires every system on every document.
CorrelationReport system_level(std::span<const MetaEvalRecord> records,
                               const MetaEvalOptions& options);

/// One correlation over all pooled pairs.
CorrelationReport summary_level(std::span<const MetaEvalRecord> records,
                                const MetaEvalOptions& options);

CorrelationReport evaluate_level(Level level, std::span<const MetaEvalRecord> records,
                                 const MetaEvalOptions& options);

struct AxisMatrix {
  std::vector<std::string> axes;
  std::vector<std::vector<double>> values;  // symmetric, unit diagonal
};

/// Sample-level correlation of human scores between every pair of axes.
/// Every axis must cover the same (context, system) grid.
AxisMatrix axis_correlation_matrix(const std::vector<HumanAnnotation>& annotations,
                                   const std::vector<std::string>& axes,
                                   const MetaEvalOptions& options);

nlohmann::json report_to_json(const CorrelationReport& report);

/// Flat table: one row per level, one column per dimension plus AVG (mean
/// of the unrounded values). Missing cells are left empty.
std::string reports_table_csv(const std::vector<CorrelationReport>& reports,
                              const std::vector<std::string>& dimensions);

std::string axis_matrix_csv(const AxisMatrix& matrix);
/// Fixed-width text rendering with three decimals.
std::string axis_matrix_text(const AxisMatrix& matrix);

}  // namespace synthref
