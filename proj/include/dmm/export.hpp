#pragma once

// Label CSV files and network export (Graphviz DOT / JSON adjacency).

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dmm/error.hpp"
#include "dmm/glasso.hpp"
#include "dmm/serialize.hpp"

namespace dmm {

inline void write_labels_csv(std::ostream& out, const std::vector<int>& labels) {
  out << "t,cluster\n";
  for (std::size_t t = 0; t < labels.size(); ++t) out << t + 1 << ',' << labels[t] << '\n';
}

inline std::vector<int> read_labels_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("labels CSV: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,cluster") throw DataError("labels CSV: expected header 't,cluster'");
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument(line);
      const long t = std::stol(line.substr(0, comma));
      const int c = std::stoi(line.substr(comma + 1));
      if (t != static_cast<long>(labels.size()) + 1) throw std::invalid_argument("t out of order");
      labels.push_back(c);
    } catch (const std::exception&) {
      throw DataError("labels CSV line " + std::to_string(line_no) + ": malformed '" + line + "'");
    }
  }
  return labels;
}

inline std::vector<int> read_labels_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_labels_csv(in);
}

// -psi_ij / sqrt(psi_ii psi_jj), unit diagonal.
inline Eigen::MatrixXd partial_correlation(const Eigen::MatrixXd& psi) {
  const Eigen::VectorXd inv_sd = psi.diagonal().array().rsqrt();
  Eigen::MatrixXd pc = -(inv_sd.asDiagonal() * psi * inv_sd.asDiagonal());
  pc.diagonal().setOnes();
  return pc;
}

namespace detail {

inline std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> node_names(const ModeNetwork& net, const std::vector<std::string>& labels) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < net.dim(); ++i) {
    names.push_back(i < labels.size() ? labels[i] : "v" + std::to_string(i + 1));
  }
  return names;
}

}  // namespace detail

// Undirected graph, one edge per off-diagonal support entry.
inline std::string network_to_dot(const ModeNetwork& net, const std::vector<std::string>& labels = {},
                                  const std::string& graph_name = "network") {
  const auto names = detail::node_names(net, labels);
  const Eigen::MatrixXd pc = partial_correlation(net.psi);
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17);
  os << "graph " << detail::dot_quote(graph_name) << " {\n";
  for (const auto& n : names) os << "  " << detail::dot_quote(n) << ";\n";
  for (Eigen::Index i = 0; i < net.psi.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < net.psi.cols(); ++j) {
      if (!net.support(i, j)) continue;
      os << "  " << detail::dot_quote(names[static_cast<std::size_t>(i)]) << " -- "
         << detail::dot_quote(names[static_cast<std::size_t>(j)]) << " [weight=" << pc(i, j) << "];\n";
    }
  }
  os << "}\n";
  return os.str();
}

inline Json network_to_adjacency(const ModeNetwork& net, const std::vector<std::string>& labels = {}) {
  const auto names = detail::node_names(net, labels);
  const Eigen::MatrixXd pc = partial_correlation(net.psi);
  Json edges = Json::array();
  for (Eigen::Index i = 0; i < net.psi.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < net.psi.cols(); ++j) {
      if (!net.support(i, j)) continue;
      edges.push_back(Json{{"source", names[static_cast<std::size_t>(i)]},
                           {"target", names[static_cast<std::size_t>(j)]},
                           {"weight", pc(i, j)}});
    }
  }
  return Json{{"mode", net.mode}, {"nodes", names}, {"edges", std::move(edges)}};
}

}  // namespace dmm
