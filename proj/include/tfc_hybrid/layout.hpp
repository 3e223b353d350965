#pragma once

#include <numeric>
#include <vector>

#include "tfc_hybrid/basis.hpp"

namespace tfc {

/// Half-open index range [begin, begin + size) into the unknown vector.
struct Slice {
  Eigen::Index begin = 0;
  Eigen::Index size = 0;

  Eigen::Index end() const noexcept { return begin + size; }
};

/// Placement of the global unknown vector
///   [xi_1, y_1, y'_1, xi_2, y_2, y'_2, ..., y_{n-1}, y'_{n-1}, xi_n]
/// where xi_k are the free-function coefficients of segment k and
/// (y_j, y'_j) the value and slope at junction j.
class UnknownLayout {
 public:
  UnknownLayout() = default;

  explicit UnknownLayout(std::vector<int> m_per_segment)
      : m_(std::move(m_per_segment)) {
    if (m_.empty()) throw ConfigurationError("layout needs n >= 1 segments");
    Eigen::Index at = 0;
    for (std::size_t k = 0; k < m_.size(); ++k) {
      if (m_[k] < 1) throw ConfigurationError("layout needs m >= 1");
      xi_.push_back({at, m_[k]});
      at += m_[k];
      if (k + 1 < m_.size()) {
        value_.push_back(at);
        slope_.push_back(at + 1);
        at += 2;
      }
    }
    total_ = at;
  }

  int n_segments() const noexcept { return static_cast<int>(m_.size()); }
  int n_junctions() const noexcept { return n_segments() - 1; }
  Eigen::Index total() const noexcept { return total_; }
  int m(int k) const { return m_.at(static_cast<std::size_t>(k)); }
  const std::vector<int>& m_per_segment() const noexcept { return m_; }

  /// Coefficients of segment k (0-based).
  Slice xi(int k) const { return xi_.at(static_cast<std::size_t>(k)); }
  /// Index of y_j for junction j (1-based, junction j joins segments j-1, j).
  Eigen::Index junction_value(int j) const {
    return value_.at(static_cast<std::size_t>(j - 1));
  }
  Eigen::Index junction_slope(int j) const {
    return slope_.at(static_cast<std::size_t>(j - 1));
  }

  /// Column window touched by segment k: its own coefficients and the
  /// unknowns of the adjacent junctions.
  Slice segment_window(int k) const {
    const Slice s = xi(k);
    const Eigen::Index lo = k > 0 ? s.begin - 2 : s.begin;
    const Eigen::Index hi = k + 1 < n_segments() ? s.end() + 2 : s.end();
    return {lo, hi - lo};
  }

  friend bool operator==(const UnknownLayout& a, const UnknownLayout& b) {
    return a.m_ == b.m_;
  }

 private:
  std::vector<int> m_;
  std::vector<Slice> xi_;
  std::vector<Eigen::Index> value_;
  std::vector<Eigen::Index> slope_;
  Eigen::Index total_ = 0;
};

inline UnknownLayout make_layout(int n, int m) {
  if (n < 1) throw ConfigurationError("layout needs n >= 1 segments");
  return UnknownLayout(std::vector<int>(static_cast<std::size_t>(n), m));
}

inline UnknownLayout make_layout(std::vector<int> m_per_segment) {
  return UnknownLayout(std::move(m_per_segment));
}

}  // namespace tfc
