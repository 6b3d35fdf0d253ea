#pragma once

// Helpers shared by the unit and acceptance tests: fixture paths, scratch
// directories, and brute-force oracles written straight from the textbook
// definitions, independent of the library's implementations.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace testing_support {

inline std::filesystem::path data_dir() { return SYNTHREF_TEST_DATA; }
inline std::filesystem::path asset_dir() { return SYNTHREF_TEST_ASSETS; }

/// Fresh empty directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("synthref-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// ---------------------------------------------------------------------------
// Oracles

/// Rank of v[i]: one plus the number of strictly smaller values plus half the
/// number of other equal values.
inline std::vector<double> oracle_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0;
    double equal = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) less += 1;
      if (j != i && v[j] == v[i]) equal += 1;
    }
    r[i] = 1 + less + equal / 2;
  }
  return r;
}

inline std::optional<double> oracle_pearson(const std::vector<double>& x,
                                            const std::vector<double>& y) {
  const std::size_t n = x.size();
  long double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const long double mx = sx / n, my = sy / n;
  long double num = 0, dx2 = 0, dy2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (x[i] - mx) * (y[i] - my);
    dx2 += (x[i] - mx) * (x[i] - mx);
    dy2 += (y[i] - my) * (y[i] - my);
  }
  if (dx2 == 0 || dy2 == 0) return std::nullopt;
  return static_cast<double>(num / std::sqrt(dx2 * dy2));
}

inline std::optional<double> oracle_spearman(const std::vector<double>& x,
                                             const std::vector<double>& y) {
  return oracle_pearson(oracle_ranks(x), oracle_ranks(y));
}

/// grid[i][j]: document i, system j.
using Grid = std::vector<std::vector<double>>;

/// Mean over documents of corr(pred_i., human_i.), skipping undefined ones.
inline std::optional<double> oracle_sample_level(const Grid& pred, const Grid& human) {
  double sum = 0;
  int used = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (auto r = oracle_spearman(pred[i], human[i])) {
      sum += *r;
      ++used;
    }
  }
  if (used == 0) return std::nullopt;
  return sum / used;
}

/// corr of the per-system means over documents.
inline std::optional<double> oracle_system_level(const Grid& pred, const Grid& human) {
  const std::size_t docs = pred.size(), systems = pred[0].size();
  std::vector<double> mp(systems, 0), mh(systems, 0);
  for (std::size_t j = 0; j < systems; ++j) {
    for (std::size_t i = 0; i < docs; ++i) {
      mp[j] += pred[i][j];
      mh[j] += human[i][j];
    }
    mp[j] /= docs;
    mh[j] /= docs;
  }
  return oracle_spearman(mp, mh);
}

/// corr over every (document, system) pair pooled.
inline std::optional<double> oracle_summary_level(const Grid& pred, const Grid& human) {
  std::vector<double> p, h;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    p.insert(p.end(), pred[i].begin(), pred[i].end());
    h.insert(h.end(), human[i].begin(), human[i].end());
  }
  return oracle_spearman(p, h);
}

/// Midpoint bisection plan run with an explicit stack: extremes, then each
/// gap's midpoint before the midpoints of its lower and upper halves.
inline std::vector<std::pair<int, std::pair<int, int>>> oracle_plan(int n) {
  std::vector<std::pair<int, std::pair<int, int>>> out{{1, {0, 0}}, {n, {0, 0}}};
  std::vector<std::pair<int, int>> stack{{1, n}};
  while (!stack.empty()) {
    auto [lo, hi] = stack.back();
    stack.pop_back();
    if (hi - lo < 2) continue;
    const int mid = (lo + hi) / 2;
    out.push_back({mid, {lo, hi}});
    stack.push_back({mid, hi});
    stack.push_back({lo, mid});
  }
  return out;
}

}  // namespace testing_support
