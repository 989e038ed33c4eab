#pragma once

// Dense tensor time series and the index algebra used everywhere else:
// reorder (with vectorization/matricization as special cases), per-mode
// slicing, time slicing and per-period standardization.
//
// Storage is canonical "first index fastest": for shape (D1, ..., DN, T) the
// flat offset of (d1, ..., dN, t) is d1 + D1*(d2 + D2*(... + DN*t)). All time
// and mode indices in this header's public contracts are 1-based unless a
// function name says otherwise.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dmm/error.hpp"

namespace dmm {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_product(std::span<const std::size_t> dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

// Plain dense array with first-index-fastest layout.
struct DenseArray {
  Shape shape;
  std::vector<double> data;

  double at(std::span<const std::size_t> idx) const {
    std::size_t off = 0, stride = 1;
    for (std::size_t g = 0; g < shape.size(); ++g) {
      off += idx[g] * stride;
      stride *= shape[g];
    }
    return data[off];
  }
};

// Partition of modes for reorder. Each group lists 1-based modes; the value
// -1 stands for "all modes not listed elsewhere, in increasing order".
using ModePartition = std::vector<std::vector<int>>;

namespace detail {

inline std::vector<std::vector<std::size_t>> resolve_partition(const ModePartition& partition,
                                                               std::size_t order) {
  std::vector<bool> used(order, false);
  int wildcard_group = -1;
  for (std::size_t g = 0; g < partition.size(); ++g) {
    for (int m : partition[g]) {
      if (m == -1) {
        if (wildcard_group != -1 || partition[g].size() != 1) {
          throw InvalidArgument("reorder: '-1' must appear alone and at most once");
        }
        wildcard_group = static_cast<int>(g);
        continue;
      }
      if (m < 1 || static_cast<std::size_t>(m) > order) {
        throw InvalidArgument("reorder: mode " + std::to_string(m) + " out of range");
      }
      if (used[m - 1]) throw InvalidArgument("reorder: overlapping partition");
      used[m - 1] = true;
    }
  }
  std::vector<std::vector<std::size_t>> groups(partition.size());
  for (std::size_t g = 0; g < partition.size(); ++g) {
    if (static_cast<int>(g) == wildcard_group) {
      for (std::size_t m = 0; m < order; ++m) {
        if (!used[m]) groups[g].push_back(m);
      }
    } else {
      for (int m : partition[g]) groups[g].push_back(static_cast<std::size_t>(m - 1));
    }
  }
  std::size_t covered = 0;
  for (const auto& grp : groups) covered += grp.size();
  if (covered != order || std::any_of(groups.begin(), groups.end(),
                                      [](const auto& grp) { return grp.empty(); })) {
    throw InvalidArgument("reorder: incomplete partition");
  }
  return groups;
}

}  // namespace detail

// Rearranges x into a G-order array whose g-th index linearizes the modes of
// group g (earlier listed modes vary fastest).
inline DenseArray reorder(const DenseArray& x, const ModePartition& partition) {
  const std::size_t order = x.shape.size();
  const auto groups = detail::resolve_partition(partition, order);

  DenseArray out;
  for (const auto& grp : groups) {
    std::size_t j = 1;
    for (std::size_t m : grp) j *= x.shape[m];
    out.shape.push_back(j);
  }
  out.data.assign(x.data.size(), 0.0);

  // Output stride of each source mode.
  std::vector<std::size_t> target_stride(order, 0);
  std::size_t group_stride = 1;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::size_t inner = 1;
    for (std::size_t m : groups[g]) {
      target_stride[m] = group_stride * inner;
      inner *= x.shape[m];
    }
    group_stride *= inner;
  }

  std::vector<std::size_t> idx(order, 0);
  for (std::size_t off = 0; off < x.data.size(); ++off) {
    std::size_t dst = 0;
    for (std::size_t m = 0; m < order; ++m) dst += idx[m] * target_stride[m];
    out.data[dst] = x.data[off];
    for (std::size_t m = 0; m < order; ++m) {
      if (++idx[m] < x.shape[m]) break;
      idx[m] = 0;
    }
  }
  return out;
}

// Values of one mode laid out for covariance work: column t*probdim + d holds
// the D_n-vector of variables that differ only at mode n, at time step t and
// "other-modes" index d.
struct ModeSlices {
  std::size_t mode = 1;  // 1-based
  std::size_t steps = 0;
  std::size_t probdim = 0;
  Eigen::MatrixXd columns;  // D_n x (steps * probdim)

  std::size_t dim() const { return static_cast<std::size_t>(columns.rows()); }
  auto at(std::size_t t, std::size_t d) const { return columns.col(t * probdim + d); }
};

class TensorTS {
 public:
  TensorTS() = default;

  // shape = (D1, ..., DN, T); data in canonical order.
  TensorTS(Shape shape, std::vector<double> data,
           std::vector<std::vector<std::string>> mode_labels = {})
      : shape_(std::move(shape)), data_(std::move(data)), labels_(std::move(mode_labels)) {
    if (shape_.size() < 2) throw InvalidArgument("tensor needs at least one mode plus time");
    if (std::any_of(shape_.begin(), shape_.end(), [](std::size_t d) { return d == 0; })) {
      throw InvalidArgument("tensor dimensions must be positive");
    }
    if (data_.size() != shape_product(shape_)) {
      throw InvalidArgument("tensor data length does not match shape");
    }
    if (!std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); })) {
      throw DataError("tensor contains non-finite values");
    }
    if (!labels_.empty()) {
      if (labels_.size() != order()) throw InvalidArgument("mode_labels: one list per mode");
      for (std::size_t n = 0; n < order(); ++n) {
        if (!labels_[n].empty() && labels_[n].size() != shape_[n]) {
          throw InvalidArgument("mode_labels: wrong label count for mode " + std::to_string(n + 1));
        }
      }
    }
  }

  // N, the number of non-temporal modes.
  std::size_t order() const { return shape_.size() - 1; }
  const Shape& shape() const { return shape_; }
  Shape dims() const { return Shape(shape_.begin(), shape_.end() - 1); }
  std::size_t dim(std::size_t n) const { return shape_.at(n - 1); }
  std::size_t length() const { return shape_.back(); }
  std::size_t variables() const { return data_.size() / length(); }
  std::size_t probdim(std::size_t n) const { return variables() / dim(n); }

  const std::vector<double>& data() const { return data_; }
  const std::vector<std::vector<std::string>>& mode_labels() const { return labels_; }

  // vec(X_t) for zero-based time row i.
  std::span<const double> time_row(std::size_t i) const {
    return {data_.data() + i * variables(), variables()};
  }

  DenseArray as_array() const { return {shape_, data_}; }

  // X_t as an N-order array, 1-based t.
  DenseArray snapshot(std::size_t t) const {
    auto row = time_row(t - 1);
    return {dims(), std::vector<double>(row.begin(), row.end())};
  }

 private:
  Shape shape_;
  std::vector<double> data_;
  std::vector<std::vector<std::string>> labels_;
};

// vec(X_t); identical to reorder(snapshot, {{-1}}).
inline std::vector<double> vectorize(const TensorTS& x, std::size_t t) {
  auto row = x.time_row(t - 1);
  return {row.begin(), row.end()};
}

namespace detail {

// Offset inside vec(X_t) of element (i at mode n, d over the other modes).
// Returns (base offsets indexed by d, stride of mode n).
inline std::pair<std::vector<std::size_t>, std::size_t> mode_offsets(const Shape& dims,
                                                                     std::size_t n) {
  const std::size_t order = dims.size();
  std::size_t stride_n = 1;
  for (std::size_t m = 0; m + 1 < n; ++m) stride_n *= dims[m];
  const std::size_t p = shape_product(dims) / dims[n - 1];
  std::vector<std::size_t> base(p, 0);
  std::vector<std::size_t> idx(order, 0);
  for (std::size_t d = 0; d < p; ++d) {
    std::size_t off = 0, stride = 1;
    for (std::size_t m = 0; m < order; ++m) {
      off += idx[m] * stride;
      stride *= dims[m];
    }
    base[d] = off;
    for (std::size_t m = 0; m < order; ++m) {
      if (m == n - 1) continue;
      if (++idx[m] < dims[m]) break;
      idx[m] = 0;
    }
  }
  return {std::move(base), stride_n};
}

}  // namespace detail

inline ModeSlices mode_slices(const TensorTS& x, std::size_t n) {
  if (n < 1 || n > x.order()) {
    throw InvalidArgument("mode_slices: mode " + std::to_string(n) + " out of range");
  }
  const auto [base, stride_n] = detail::mode_offsets(x.dims(), n);
  const std::size_t dn = x.dim(n), p = base.size(), steps = x.length();
  ModeSlices s;
  s.mode = n;
  s.steps = steps;
  s.probdim = p;
  s.columns.resize(static_cast<Eigen::Index>(dn), static_cast<Eigen::Index>(steps * p));
  for (std::size_t t = 0; t < steps; ++t) {
    const auto row = x.time_row(t);
    for (std::size_t d = 0; d < p; ++d) {
      auto col = s.columns.col(static_cast<Eigen::Index>(t * p + d));
      for (std::size_t i = 0; i < dn; ++i) col(static_cast<Eigen::Index>(i)) = row[base[d] + i * stride_n];
    }
  }
  return s;
}

// Inverse of mode_slices.
inline TensorTS from_mode_slices(const ModeSlices& s, const Shape& dims) {
  const auto [base, stride_n] = detail::mode_offsets(dims, s.mode);
  const std::size_t dn = dims[s.mode - 1], D = shape_product(dims);
  if (base.size() != s.probdim || dn != s.dim()) throw InvalidArgument("from_mode_slices: shape mismatch");
  std::vector<double> data(D * s.steps);
  for (std::size_t t = 0; t < s.steps; ++t) {
    for (std::size_t d = 0; d < s.probdim; ++d) {
      const auto col = s.at(t, d);
      for (std::size_t i = 0; i < dn; ++i) data[t * D + base[d] + i * stride_n] = col(static_cast<Eigen::Index>(i));
    }
  }
  Shape shape = dims;
  shape.push_back(s.steps);
  return {std::move(shape), std::move(data)};
}

// Time steps a..b-1 (1-based, half-open).
inline TensorTS slice_time(const TensorTS& x, std::size_t a, std::size_t b) {
  if (a < 1 || a > b || b > x.length() + 1) {
    throw InvalidArgument("slice_time: invalid range [" + std::to_string(a) + ", " +
                          std::to_string(b) + ")");
  }
  if (a == b) throw InvalidArgument("slice_time: empty range");
  const std::size_t D = x.variables();
  Shape shape = x.shape();
  shape.back() = b - a;
  std::vector<double> data(x.data().begin() + static_cast<std::ptrdiff_t>((a - 1) * D),
                           x.data().begin() + static_cast<std::ptrdiff_t>((b - 1) * D));
  return {std::move(shape), std::move(data), x.mode_labels()};
}

// Time steps listed in `times` (1-based), in the given order.
inline TensorTS gather_times(const TensorTS& x, std::span<const std::size_t> times) {
  if (times.empty()) throw InvalidArgument("gather_times: empty time set");
  const std::size_t D = x.variables();
  std::vector<double> data;
  data.reserve(times.size() * D);
  for (std::size_t t : times) {
    if (t < 1 || t > x.length()) throw InvalidArgument("gather_times: time index out of range");
    const auto row = x.time_row(t - 1);
    data.insert(data.end(), row.begin(), row.end());
  }
  Shape shape = x.shape();
  shape.back() = times.size();
  return {std::move(shape), std::move(data), x.mode_labels()};
}

// Standardizes every variable within each period [b_i, b_{i+1}) to mean 0 and
// population standard deviation 1. A variable that is constant within a period
// (sigma < 1e-12) becomes all zeros there.
inline TensorTS normalize_periods(const TensorTS& x, std::span<const std::size_t> boundaries) {
  const std::size_t T = x.length(), D = x.variables();
  if (boundaries.size() < 2 || boundaries.front() != 1 || boundaries.back() != T + 1 ||
      !std::is_sorted(boundaries.begin(), boundaries.end(), std::less_equal<>())) {
    throw InvalidArgument("normalize_periods: boundaries must increase strictly from 1 to T+1");
  }
  std::vector<double> out(x.data());
  for (std::size_t p = 0; p + 1 < boundaries.size(); ++p) {
    const std::size_t a = boundaries[p] - 1, b = boundaries[p + 1] - 1;
    const double count = static_cast<double>(b - a);
    for (std::size_t v = 0; v < D; ++v) {
      double mean = 0.0;
      for (std::size_t t = a; t < b; ++t) mean += x.data()[t * D + v];
      mean /= count;
      double var = 0.0;
      for (std::size_t t = a; t < b; ++t) {
        const double r = x.data()[t * D + v] - mean;
        var += r * r;
      }
      const double sd = std::sqrt(var / count);
      for (std::size_t t = a; t < b; ++t) {
        out[t * D + v] = sd < 1e-12 ? 0.0 : (x.data()[t * D + v] - mean) / sd;
      }
    }
  }
  return {x.shape(), std::move(out), x.mode_labels()};
}

// Boundaries for consecutive periods of `period` steps; the last may be shorter.
inline std::vector<std::size_t> periodic_boundaries(std::size_t T, std::size_t period) {
  if (period == 0) throw InvalidArgument("period must be positive");
  std::vector<std::size_t> b;
  for (std::size_t t = 1; t <= T; t += period) b.push_back(t);
  b.push_back(T + 1);
  return b;
}

}  // namespace dmm
