#pragma once

// Reader/writer for the ".tts" text format:
//
//   # optional comment lines
//   D1 ... DN T
//   <T lines of D values each, vec(X_t) order, mode 1 fastest>
//
// A comment of the form "# mode <n>: name1 name2 ..." attaches variable names
// to mode n. Parsing is locale-independent.

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dmm/error.hpp"
#include "dmm/tensor.hpp"

namespace dmm {

struct TtsReadOptions {
  // Fill "nan" entries by per-variable linear interpolation.
  bool interpolate = false;
};

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline double parse_double(std::string_view tok, std::size_t line_no) {
  if (tok == "nan" || tok == "NaN" || tok == "NA") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const char* first = tok.data();
  if (!tok.empty() && tok.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw DataError("line " + std::to_string(line_no) + ": bad number '" + std::string(tok) + "'");
  }
  return v;
}

inline std::size_t parse_size(std::string_view tok, std::size_t line_no) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || v == 0) {
    throw DataError("line " + std::to_string(line_no) + ": bad dimension '" + std::string(tok) + "'");
  }
  return v;
}

// Linear interpolation over interior NaN runs of each variable.
inline void interpolate_gaps(std::vector<double>& data, std::size_t T, std::size_t D) {
  for (std::size_t v = 0; v < D; ++v) {
    auto val = [&](std::size_t t) -> double& { return data[t * D + v]; };
    if (std::isnan(val(0)) || std::isnan(val(T - 1))) {
      throw DataError("interpolation: variable " + std::to_string(v + 1) +
                      " has a leading or trailing gap");
    }
    std::size_t t = 1;
    while (t < T) {
      if (!std::isnan(val(t))) {
        ++t;
        continue;
      }
      const std::size_t left = t - 1;
      std::size_t right = t;
      while (std::isnan(val(right))) ++right;
      const double a = val(left), b = val(right);
      for (std::size_t k = left + 1; k < right; ++k) {
        const double w = static_cast<double>(k - left) / static_cast<double>(right - left);
        val(k) = a + w * (b - a);
      }
      t = right + 1;
    }
  }
}

}  // namespace detail

inline TensorTS read_tts(std::istream& in, const TtsReadOptions& opts = {}) {
  std::string line;
  std::size_t line_no = 0;
  Shape shape;
  std::vector<std::vector<std::string>> labels;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> pending_labels;
  std::vector<double> data;
  std::size_t rows = 0;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv(line);
    const auto toks = detail::split_ws(sv);
    if (toks.empty()) continue;
    if (toks.front().front() == '#') {
      // "# mode <n>: a b c"
      if (toks.size() >= 3 && (toks[0] == "#" && toks[1] == "mode")) {
        std::string_view num = toks[2];
        if (!num.empty() && num.back() == ':') num.remove_suffix(1);
        std::size_t n = 0;
        auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), n);
        if (ec == std::errc() && n >= 1) {
          std::vector<std::string> names;
          for (std::size_t i = 3; i < toks.size(); ++i) names.emplace_back(toks[i]);
          pending_labels.emplace_back(n, std::move(names));
        }
      }
      continue;
    }
    if (shape.empty()) {
      for (auto tok : toks) shape.push_back(detail::parse_size(tok, line_no));
      if (shape.size() < 2) throw DataError("header needs at least two dimensions (D1 ... T)");
      data.reserve(shape_product(shape));
      continue;
    }
    const std::size_t D = shape_product(shape) / shape.back();
    if (rows == shape.back()) throw DataError("line " + std::to_string(line_no) + ": more rows than T");
    if (toks.size() != D) {
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(D) +
                      " values, got " + std::to_string(toks.size()));
    }
    for (auto tok : toks) {
      const double v = detail::parse_double(tok, line_no);
      if (std::isinf(v) || (std::isnan(v) && !opts.interpolate)) {
        throw DataError("line " + std::to_string(line_no) + ": non-finite value (use interpolation for gaps)");
      }
      data.push_back(v);
    }
    ++rows;
  }
  if (shape.empty()) throw DataError("missing header line");
  if (rows != shape.back()) {
    throw DataError("expected " + std::to_string(shape.back()) + " rows, got " + std::to_string(rows));
  }
  if (opts.interpolate) detail::interpolate_gaps(data, shape.back(), data.size() / shape.back());

  if (!pending_labels.empty()) {
    labels.assign(shape.size() - 1, {});
    for (auto& [n, names] : pending_labels) {
      if (n > labels.size()) throw DataError("mode label for unknown mode " + std::to_string(n));
      if (names.size() != shape[n - 1]) throw DataError("mode " + std::to_string(n) + ": wrong label count");
      labels[n - 1] = std::move(names);
    }
  }
  return {std::move(shape), std::move(data), std::move(labels)};
}

inline TensorTS read_tts_file(const std::string& path, const TtsReadOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_tts(in, opts);
}

inline void write_tts(std::ostream& out, const TensorTS& x) {
  out.imbue(std::locale::classic());
  for (std::size_t n = 0; n < x.mode_labels().size(); ++n) {
    if (x.mode_labels()[n].empty()) continue;
    out << "# mode " << n + 1 << ":";
    for (const auto& name : x.mode_labels()[n]) out << ' ' << name;
    out << '\n';
  }
  for (std::size_t i = 0; i < x.shape().size(); ++i) out << (i ? " " : "") << x.shape()[i];
  out << '\n';
  out << std::setprecision(17);
  for (std::size_t t = 0; t < x.length(); ++t) {
    const auto row = x.time_row(t);
    for (std::size_t v = 0; v < row.size(); ++v) out << (v ? " " : "") << row[v];
    out << '\n';
  }
}

inline void write_tts_file(const std::string& path, const TensorTS& x) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  write_tts(out, x);
}

}  // namespace dmm
