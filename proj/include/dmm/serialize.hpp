#pragma once

// JSON documents for fitted results, ground truth and evaluation reports.
// Doubles are written in shortest round-trip form, so reading a document back
// reproduces every value bit for bit.

#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "dmm/cluster_detector.hpp"
#include "dmm/error.hpp"
#include "dmm/eval.hpp"
#include "dmm/synth.hpp"

namespace dmm {

using Json = nlohmann::ordered_json;

namespace detail {

inline Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const Json& j) {
  const auto n = static_cast<Eigen::Index>(j.size());
  const auto c = n ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(n, c);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (static_cast<Eigen::Index>(j.at(r).size()) != c) throw DataError("ragged matrix in JSON");
    for (Eigen::Index k = 0; k < c; ++k) m(r, k) = j.at(r).at(k).get<double>();
  }
  return m;
}

}  // namespace detail

inline Json to_json(const ModeNetwork& net) {
  Json sup = Json::array();
  for (Eigen::Index i = 0; i < net.support.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < net.support.cols(); ++j) row.push_back(net.support(i, j));
    sup.push_back(std::move(row));
  }
  return Json{{"mode", net.mode},
              {"psi", detail::matrix_to_json(net.psi)},
              {"support", std::move(sup)},
              {"converged", net.converged},
              {"iterations", net.iterations}};
}

inline ModeNetwork network_from_json(const Json& j) {
  ModeNetwork net;
  net.mode = j.at("mode").get<std::size_t>();
  net.psi = detail::matrix_from_json(j.at("psi"));
  const auto& sup = j.at("support");
  const Eigen::Index n = net.psi.rows();
  if (net.psi.cols() != n || static_cast<Eigen::Index>(sup.size()) != n) throw DataError("network JSON: bad shape");
  net.support.resize(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) net.support(r, c) = sup.at(r).at(c).get<bool>();
  net.converged = j.value("converged", true);
  net.iterations = j.value("iterations", 0);
  return net;
}

inline Json to_json(const ClusterModel& m) {
  Json nets = Json::array();
  for (const auto& n : m.networks) nets.push_back(to_json(n));
  return Json{{"networks", std::move(nets)},
              {"mean_vec", std::vector<double>(m.mean_vec.data(), m.mean_vec.data() + m.mean_vec.size())},
              {"member_count", m.member_count},
              {"degenerate", m.degenerate}};
}

inline ClusterModel model_from_json(const Json& j) {
  ClusterModel m;
  for (const auto& n : j.at("networks")) m.networks.push_back(network_from_json(n));
  const auto mv = j.at("mean_vec").get<std::vector<double>>();
  m.mean_vec = Eigen::Map<const Eigen::VectorXd>(mv.data(), static_cast<Eigen::Index>(mv.size()));
  m.member_count = j.at("member_count").get<std::size_t>();
  m.degenerate = j.value("degenerate", false);
  return m;
}

inline Json to_json(const CostBreakdown& c) {
  return Json{{"assign", c.assign}, {"model", c.model}, {"data", c.data}, {"l1", c.l1}, {"total", c.total}};
}

inline CostBreakdown costs_from_json(const Json& j) {
  CostBreakdown c;
  c.assign = j.at("assign").get<double>();
  c.model = j.at("model").get<double>();
  c.data = j.at("data").get<double>();
  c.l1 = j.at("l1").get<double>();
  c.total = j.at("total").get<double>();
  return c;
}

// Result document. `shape` is the fitted tensor's (D1, ..., DN, T).
inline Json result_to_json(const ClusterParams& r, const Shape& shape,
                           const std::vector<std::vector<std::string>>& mode_labels = {}) {
  Json clusters = Json::array();
  for (const auto& m : r.models) clusters.push_back(to_json(m));
  Json ktrace = Json::array();
  for (const auto& k : r.diagnostics.k_trace) {
    ktrace.push_back(Json{{"K", k.k_requested},
                          {"K_effective", k.k_effective},
                          {"total", k.total},
                          {"em_iterations", k.em_iterations},
                          {"em_converged", k.em_converged}});
  }
  Json ltrace = Json::array();
  for (const auto& l : r.diagnostics.lambda_trace) {
    ltrace.push_back(Json{{"lambda", l.lambda}, {"total", l.total}, {"K", l.K}, {"segments", l.segments}});
  }
  Json doc{{"shape", shape},
           {"lambda", r.lambda},
           {"K", r.K},
           {"cut_points", r.assignments.segmentation.cut_points},
           {"segment_cluster", r.assignments.segment_cluster},
           {"clusters", std::move(clusters)},
           {"costs", to_json(r.costs)},
           {"diagnostics",
            Json{{"em_iterations", r.diagnostics.em_iterations},
                 {"em_converged", r.diagnostics.em_converged},
                 {"segmenter_sweeps", r.diagnostics.segmenter_sweeps},
                 {"initial_segments", r.diagnostics.segmenter_initial_segments},
                 {"degenerate_fits", r.diagnostics.degenerate_fits},
                 {"unconverged_fits", r.diagnostics.unconverged_fits},
                 {"k_trace", std::move(ktrace)}}},
           {"lambda_trace", std::move(ltrace)}};
  if (!mode_labels.empty()) doc["mode_labels"] = mode_labels;
  return doc;
}

struct LoadedResult {
  ClusterParams params;
  Shape shape;
  std::vector<std::vector<std::string>> mode_labels;
};

inline LoadedResult result_from_json(const Json& j) {
  try {
    LoadedResult out;
    out.shape = j.at("shape").get<Shape>();
    if (out.shape.size() < 2) throw DataError("result JSON: bad shape");
    auto& r = out.params;
    r.lambda = j.at("lambda").get<double>();
    r.K = j.at("K").get<int>();
    r.assignments.segmentation.cut_points = j.at("cut_points").get<std::vector<std::size_t>>();
    r.assignments.segmentation.length = out.shape.back();
    r.assignments.segment_cluster = j.at("segment_cluster").get<std::vector<int>>();
    r.assignments.K = r.K;
    for (const auto& c : j.at("clusters")) r.models.push_back(model_from_json(c));
    r.costs = costs_from_json(j.at("costs"));
    if (j.contains("diagnostics")) {
      const auto& d = j.at("diagnostics");
      r.diagnostics.em_iterations = d.value("em_iterations", 0);
      r.diagnostics.em_converged = d.value("em_converged", true);
      r.diagnostics.segmenter_sweeps = d.value("segmenter_sweeps", std::size_t{0});
      r.diagnostics.segmenter_initial_segments = d.value("initial_segments", std::size_t{0});
      r.diagnostics.degenerate_fits = d.value("degenerate_fits", std::size_t{0});
      r.diagnostics.unconverged_fits = d.value("unconverged_fits", std::size_t{0});
      for (const auto& k : d.value("k_trace", Json::array())) {
        r.diagnostics.k_trace.push_back({k.at("K").get<int>(), k.at("K_effective").get<int>(),
                                         k.at("total").get<double>(), k.at("em_iterations").get<int>(),
                                         k.at("em_converged").get<bool>()});
      }
    }
    for (const auto& l : j.value("lambda_trace", Json::array())) {
      r.diagnostics.lambda_trace.push_back({l.at("lambda").get<double>(), l.at("total").get<double>(),
                                            l.at("K").get<int>(), l.at("segments").get<std::size_t>()});
    }
    if (j.contains("mode_labels")) out.mode_labels = j.at("mode_labels").get<std::vector<std::vector<std::string>>>();
    r.assignments.validate();
    if (r.models.size() != static_cast<std::size_t>(r.K)) throw DataError("result JSON: cluster count differs from K");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("result JSON: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("result JSON: ") + e.what());
  }
}

inline Json truth_to_json(const GroundTruth& gt, const Shape& shape) {
  Json clusters = Json::array();
  for (std::size_t k = 0; k < gt.true_networks.size(); ++k) {
    Json nets = Json::array();
    for (const auto& n : gt.true_networks[k]) nets.push_back(detail::matrix_to_json(n));
    Json c{{"cluster", k + 1}, {"networks", std::move(nets)}};
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gt.assembled_precisions[k], Eigen::EigenvaluesOnly);
    c["precision_min_eigenvalue"] = es.eigenvalues().minCoeff();
    clusters.push_back(std::move(c));
  }
  return Json{{"shape", shape},
              {"cut_points", gt.true_cut_points.cut_points},
              {"segment_cluster", gt.segment_cluster},
              {"clusters", std::move(clusters)}};
}

inline Json to_json(const EvalReport& rep) {
  Json matching = Json::object();
  for (auto [p, t] : rep.matching) matching[std::to_string(p)] = t;
  Json per_class = Json::array();
  for (std::size_t i = 0; i < rep.truth_classes.size(); ++i) {
    per_class.push_back(Json{{"class", rep.truth_classes[i]}, {"f1", rep.per_class_f1[i]}});
  }
  return Json{{"macro_f1", rep.macro_f1},
              {"matching", std::move(matching)},
              {"per_class_f1", std::move(per_class)},
              {"loglik", rep.loglik},
              {"n_segments", rep.n_segments},
              {"n_clusters", rep.n_clusters}};
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace dmm
