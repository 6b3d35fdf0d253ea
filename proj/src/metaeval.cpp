#include "synthref/metaeval.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include "synthref/errors.hpp"

namespace synthref {

using json = nlohmann::json;

std::string_view to_string(Level level) {
  switch (level) {
    case Level::system:
      return "system";
    case Level::sample:
      return "sample";
    case Level::summary:
      return "summary";
  }
  return "unknown";
}

Level level_from_string(std::string_view name) {
  for (auto l : {Level::system, Level::sample, Level::summary}) {
    if (to_string(l) == name) return l;
  }
  throw ValidationError("unknown level: " + std::string(name));
}

namespace {

struct Pairs {
  std::vector<double> pred;
  std::vector<double> human;
};

// Groups by context id (sorted) after checking the records describe one
// dimension with unique keys.
std::map<std::string, std::map<std::string, std::pair<double, double>>> grid_of(
    std::span<const MetaEvalRecord> records) {
  if (records.empty()) throw DegenerateInputError("no records");
  std::map<std::string, std::map<std::string, std::pair<double, double>>> grid;
  const std::string& dim = records.front().dimension;
  for (const auto& r : records) {
    if (r.dimension != dim) {
      throw ValidationError("records mix dimensions '" + dim + "' and '" + r.dimension + "'");
    }
    if (!grid[r.context_id].emplace(r.system_id, std::make_pair(r.prediction, r.human_score))
             .second) {
      throw ValidationError("duplicate record (" + r.context_id + ", " + r.system_id + ")");
    }
  }
  return grid;
}

CorrelationReport blank(Level level, std::span<const MetaEvalRecord> records,
                        const MetaEvalOptions& options) {
  CorrelationReport report;
  report.dataset = options.dataset;
  report.dimension = records.empty() ? std::string() : records.front().dimension;
  report.level = level;
  report.coefficient_kind = options.kind;
  return report;
}

}  // namespace

CorrelationReport sample_level(std::span<const MetaEvalRecord> records,
                               const MetaEvalOptions& options) {
  const auto grid = grid_of(records);
  auto report = blank(Level::sample, records, options);
  double sum = 0.0;
  int used = 0;
  for (const auto& [doc, systems] : grid) {
    if (systems.size() < 2) {
      throw ValidationError("document " + doc + " has fewer than 2 systems");
    }
    Pairs p;
    for (const auto& [sys, v] : systems) {
      p.pred.push_back(v.first);
      p.human.push_back(v.second);
    }
    DocumentCorrelation dc{doc, correlate(options.kind, p.pred, p.human)};
    if (dc.rho) {
      sum += *dc.rho;
      ++used;
    } else if (options.impute_zero) {
      dc.imputed = true;
      ++used;
    } else {
      dc.skipped = true;
      ++report.skipped_count;
    }
    report.per_document.push_back(std::move(dc));
  }
  if (used == 0) {
    throw DegenerateInputError("every document has an undefined correlation for '" +
                               report.dimension + "'");
  }
  report.value = sum / used;
  return report;
}

CorrelationReport system_level(std::span<const MetaEvalRecord> records,
                               const MetaEvalOptions& options) {
  const auto grid = grid_of(records);
  std::set<std::string> systems;
  for (const auto& [sys, v] : grid.begin()->second) systems.insert(sys);
  for (const auto& [doc, row] : grid) {
    std::set<std::string> here;
    for (const auto& [sys, v] : row) here.insert(sys);
    if (here != systems) {
      throw ValidationError("ragged system grid: document " + doc +
                            " does not cover the same systems as " + grid.begin()->first);
    }
  }
  Pairs means;
  for (const auto& sys : systems) {
    double p = 0.0;
    double h = 0.0;
    for (const auto& [doc, row] : grid) {
      p += row.at(sys).first;
      h += row.at(sys).second;
    }
    means.pred.push_back(p / static_cast<double>(grid.size()));
    means.human.push_back(h / static_cast<double>(grid.size()));
  }
  auto report = blank(Level::system, records, options);
  const auto value = correlate(options.kind, means.pred, means.human);
  if (!value) {
    throw DegenerateInputError("system-level correlation undefined for '" + report.dimension +
                               "': constant system means");
  }
  report.value = *value;
  return report;
}

CorrelationReport summary_level(std::span<const MetaEvalRecord> records,
                                const MetaEvalOptions& options) {
  const auto grid = grid_of(records);
  Pairs p;
  for (const auto& [doc, row] : grid) {
    for (const auto& [sys, v] : row) {
      p.pred.push_back(v.first);
      p.human.push_back(v.second);
    }
  }
  auto report = blank(Level::summary, records, options);
  const auto value = correlate(options.kind, p.pred, p.human);
  if (!value) {
    throw DegenerateInputError("summary-level correlation undefined for '" + report.dimension +
                               "': one side is constant");
  }
  report.value = *value;
  return report;
}

CorrelationReport evaluate_level(Level level, std::span<const MetaEvalRecord> records,
                                 const MetaEvalOptions& options) {
  switch (level) {
    case Level::system:
      return system_level(records, options);
    case Level::sample:
      return sample_level(records, options);
    case Level::summary:
      return summary_level(records, options);
  }
  throw ValidationError("unknown level");
}

AxisMatrix axis_correlation_matrix(const std::vector<HumanAnnotation>& annotations,
                                   const std::vector<std::string>& axes,
                                   const MetaEvalOptions& options) {
  if (axes.empty()) throw ValidationError("no axes given");
  using Key = std::pair<std::string, std::string>;
  std::map<std::string, std::map<Key, double>> by_axis;
  for (const auto& axis : axes) by_axis[axis];
  for (const auto& a : annotations) {
    auto it = by_axis.find(a.dimension);
    if (it == by_axis.end()) continue;
    if (!it->second.emplace(Key{a.context_id, a.system_id}, a.score).second) {
      throw ValidationError("duplicate annotation (" + a.context_id + ", " + a.system_id + ", " +
                            a.dimension + ")");
    }
  }
  const auto& ref = by_axis.at(axes.front());
  if (ref.empty()) throw DegenerateInputError("no annotations for axis " + axes.front());
  for (const auto& axis : axes) {
    const auto& cells = by_axis.at(axis);
    bool same = cells.size() == ref.size();
    for (auto a = cells.begin(), b = ref.begin(); same && a != cells.end(); ++a, ++b) {
      same = a->first == b->first;
    }
    if (!same) {
      throw ValidationError("axis '" + axis + "' does not cover the same grid as '" +
                            axes.front() + "'");
    }
  }

  AxisMatrix m;
  m.axes = axes;
  m.values.assign(axes.size(), std::vector<double>(axes.size(), 1.0));
  for (std::size_t i = 0; i < axes.size(); ++i) {
    for (std::size_t j = i + 1; j < axes.size(); ++j) {
      std::vector<MetaEvalRecord> records;
      const auto& bj = by_axis.at(axes[j]);
      for (const auto& [key, score] : by_axis.at(axes[i])) {
        records.push_back({key.first, key.second, "axis", score, bj.at(key)});
      }
      const double v = sample_level(records, options).value;
      m.values[i][j] = v;
      m.values[j][i] = v;
    }
  }
  return m;
}

json report_to_json(const CorrelationReport& report) {
  json j;
  j["dataset"] = report.dataset;
  j["dimension"] = report.dimension;
  j["level"] = to_string(report.level);
  j["coefficient_kind"] = to_string(report.coefficient_kind);
  j["value"] = report.value;
  j["skipped_count"] = report.skipped_count;
  if (report.level == Level::sample) {
    json docs = json::array();
    for (const auto& d : report.per_document) {
      docs.push_back({{"context_id", d.context_id},
                      {"rho", d.rho ? json(*d.rho) : json(nullptr)},
                      {"skipped", d.skipped},
                      {"imputed", d.imputed}});
    }
    j["per_document"] = std::move(docs);
  }
  return j;
}

namespace {

std::string fmt(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

std::string reports_table_csv(const std::vector<CorrelationReport>& reports,
                              const std::vector<std::string>& dimensions) {
  std::ostringstream out;
  out << "level";
  for (const auto& d : dimensions) out << ',' << d;
  out << ",AVG\n";
  for (auto level : {Level::system, Level::sample, Level::summary}) {
    std::map<std::string, double> row;
    for (const auto& r : reports) {
      if (r.level == level) row[r.dimension] = r.value;
    }
    if (row.empty()) continue;
    out << to_string(level);
    double sum = 0.0;
    bool complete = true;
    for (const auto& d : dimensions) {
      out << ',';
      auto it = row.find(d);
      if (it == row.end()) {
        complete = false;
        continue;
      }
      out << fmt(it->second, 6);
      sum += it->second;
    }
    out << ',';
    if (complete && !dimensions.empty()) out << fmt(sum / dimensions.size(), 6);
    out << '\n';
  }
  return out.str();
}

std::string axis_matrix_csv(const AxisMatrix& matrix) {
  std::ostringstream out;
  out << "axis";
  for (const auto& a : matrix.axes) out << ',' << a;
  out << '\n';
  for (std::size_t i = 0; i < matrix.axes.size(); ++i) {
    out << matrix.axes[i];
    for (double v : matrix.values[i]) out << ',' << fmt(v, 6);
    out << '\n';
  }
  return out.str();
}

std::string axis_matrix_text(const AxisMatrix& matrix) {
  std::size_t width = 6;
  for (const auto& a : matrix.axes) width = std::max(width, a.size());
  auto pad = [&](const std::string& s) { return s + std::string(width + 2 - s.size(), ' '); };
  std::ostringstream out;
  out << pad("");
  for (const auto& a : matrix.axes) out << pad(a);
  out << '\n';
  for (std::size_t i = 0; i < matrix.axes.size(); ++i) {
    out << pad(matrix.axes[i]);
    for (double v : matrix.values[i]) out << pad(fmt(v, 3));
    out << '\n';
  }
  return out.str();
}

}  // namespace synthref
