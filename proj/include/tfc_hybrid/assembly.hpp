#pragma once

// Stacking of constrained-expression rows over per-segment collocation
// grids into y^(d) = A^(d) Xi + B^(d).

#include <array>
#include <string>
#include <vector>

#include "tfc_hybrid/expressions.hpp"

namespace tfc {

/// Break points x0 < x1 < ... < xf and the outer boundary values.
struct Geometry {
  std::vector<double> break_points;
  double y0 = 0.0;
  double yf = 0.0;

  int n_segments() const noexcept {
    return static_cast<int>(break_points.size()) - 1;
  }
  Interval segment(int k) const {
    return {break_points.at(static_cast<std::size_t>(k)),
            break_points.at(static_cast<std::size_t>(k) + 1)};
  }
  double x0() const { return break_points.front(); }
  double xf() const { return break_points.back(); }

  /// Segment containing x; a junction abscissa belongs to the left segment.
  int locate(double x) const {
    const int n = n_segments();
    for (int k = 0; k + 1 < n; ++k) {
      if (x <= break_points[static_cast<std::size_t>(k) + 1]) return k;
    }
    return n - 1;
  }

  void validate() const {
    if (break_points.size() < 2) {
      throw ConfigurationError("need at least two break points");
    }
    for (std::size_t i = 0; i < break_points.size(); ++i) {
      if (!std::isfinite(break_points[i])) {
        throw ConfigurationError("break_points must be finite");
      }
      if (i > 0 && !(break_points[i - 1] < break_points[i])) {
        throw ConfigurationError("break_points not strictly increasing");
      }
    }
    if (!std::isfinite(y0) || !std::isfinite(yf)) {
      throw ConfigurationError("boundary values must be finite");
    }
  }
};

/// Per-segment bases and collocation grids with the matching unknown layout.
struct SegmentGrids {
  std::vector<BasisSpec> bases;
  std::vector<Grid> grids;
  UnknownLayout layout;

  int n_segments() const noexcept { return static_cast<int>(grids.size()); }
  Eigen::Index rows() const noexcept {
    Eigen::Index r = 0;
    for (const auto& g : grids) r += static_cast<Eigen::Index>(g.size());
    return r;
  }
};

/// Number of constraint functionals carried by segment k of n: two boundary
/// values for a lone segment, three for the first and last, four for the
/// middle ones.
inline int constraint_count(int k, int n) noexcept {
  if (n == 1) return 2;
  return (k == 0 || k == n - 1) ? 3 : 4;
}

/// Grids of N points on every segment and m_k basis functions on segment k.
/// The basis of a segment starts at the degree equal to its constraint
/// count: lower degrees lie in the span of its switching functions and are
/// annihilated by the constrained expression.
inline SegmentGrids make_segment_grids(const Geometry& geo, int N,
                                       const std::vector<int>& m_per_segment,
                                       Family family = Family::Chebyshev) {
  geo.validate();
  const int n = geo.n_segments();
  if (static_cast<int>(m_per_segment.size()) != n) {
    throw ConfigurationError("need one basis size per segment");
  }
  SegmentGrids out;
  for (int k = 0; k < n; ++k) {
    out.bases.emplace_back(family, m_per_segment[static_cast<std::size_t>(k)],
                           constraint_count(k, n));
    out.grids.push_back(collocation_grid(geo.segment(k), N));
  }
  out.layout = make_layout(m_per_segment);
  return out;
}

inline SegmentGrids make_segment_grids(const Geometry& geo, int N, int m,
                                       Family family = Family::Chebyshev) {
  return make_segment_grids(
      geo, N, std::vector<int>(static_cast<std::size_t>(geo.n_segments()), m),
      family);
}

/// Dense block of one segment: rows [row_begin, row_begin + A.rows()) of the
/// global system, columns `cols` of the unknown vector. Everything outside
/// the block is exactly zero.
struct SegmentBlock {
  Eigen::Index row_begin = 0;
  Slice cols;
  Matrix A;
  Vector B;
};

/// y^(d) at every collocation point for one derivative order d.
struct SystemMatrices {
  int order = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<SegmentBlock> blocks;

  Matrix dense_A() const {
    Matrix out = Matrix::Zero(rows, cols);
    for (const auto& b : blocks) {
      out.block(b.row_begin, b.cols.begin, b.A.rows(), b.cols.size) = b.A;
    }
    return out;
  }

  Vector dense_B() const {
    Vector out = Vector::Zero(rows);
    for (const auto& b : blocks) out.segment(b.row_begin, b.B.size()) = b.B;
    return out;
  }

  /// A Xi + B.
  Vector apply(const Vector& xi) const {
    Vector out(rows);
    for (const auto& b : blocks) {
      out.segment(b.row_begin, b.A.rows()) =
          b.A * xi.segment(b.cols.begin, b.cols.size) + b.B;
    }
    return out;
  }
};

inline SystemMatrices assemble(const Geometry& geo, const SegmentGrids& sg,
                               int d) {
  check_order(d);
  const int n = geo.n_segments();
  if (sg.n_segments() != n || static_cast<int>(sg.bases.size()) != n ||
      sg.layout.n_segments() != n) {
    throw AssemblyError("segment count mismatch between geometry and grids");
  }
  SystemMatrices sys;
  sys.order = d;
  sys.rows = sg.rows();
  sys.cols = sg.layout.total();
  Eigen::Index row = 0;
  for (int k = 0; k < n; ++k) {
    const auto& grid = sg.grids[static_cast<std::size_t>(k)];
    const auto& spec = sg.bases[static_cast<std::size_t>(k)];
    const Interval iv = geo.segment(k);
    if (!(grid.iv == iv)) {
      throw AssemblyError("grid " + std::to_string(k) +
                          " does not cover its segment");
    }
    if (sg.layout.m(k) != spec.m) {
      throw AssemblyError("layout and basis disagree on m for segment " +
                          std::to_string(k));
    }
    SegmentBlock blk;
    blk.row_begin = row;
    blk.cols = sg.layout.segment_window(k);
    const auto N = static_cast<Eigen::Index>(grid.size());
    blk.A.resize(N, blk.cols.size);
    blk.B.resize(N);
    for (Eigen::Index i = 0; i < N; ++i) {
      const AffineRow r = segment_row(spec, iv, k, geo.y0, geo.yf,
                                      grid.points[static_cast<std::size_t>(i)],
                                      d, sg.layout);
      blk.A.row(i) = r.coeffs.segment(blk.cols.begin, blk.cols.size);
      blk.B(i) = r.offset;
    }
    row += N;
    sys.blocks.push_back(std::move(blk));
  }
  return sys;
}

/// A^(d), B^(d) for d = 0, 1, 2.
inline std::array<SystemMatrices, 3> assemble_all(const Geometry& geo,
                                                  const SegmentGrids& sg) {
  return {assemble(geo, sg, 0), assemble(geo, sg, 1), assemble(geo, sg, 2)};
}

}  // namespace tfc
