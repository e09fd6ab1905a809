#include "toptdes/serialization.hpp"

#include <cmath>
#include <ostream>

#include "toptdes/error.hpp"

namespace toptdes {

namespace {

std::vector<double> numbers_at(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw InvalidArgument(std::string("design JSON: missing array \"") + key + "\"");
  }
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) {
      throw InvalidArgument(std::string("design JSON: non-numeric entry in \"") + key + "\"");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

class CsvNumbers {
 public:
  explicit CsvNumbers(std::ostream& out) : out_(out), saved_(out.precision()) {
    out_.precision(17);
  }
  ~CsvNumbers() { out_.precision(saved_); }
  CsvNumbers(const CsvNumbers&) = delete;
  CsvNumbers& operator=(const CsvNumbers&) = delete;

 private:
  std::ostream& out_;
  std::streamsize saved_;
};

}  // namespace

nlohmann::json to_json(const Design& design) {
  return {{"points", design.points()}, {"weights", design.weights()}};
}

Design design_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("design JSON: expected an object");
  std::vector<double> points = numbers_at(j, "points");
  std::vector<double> weights = numbers_at(j, "weights");
  if (points.size() != weights.size()) {
    throw InvalidArgument("design JSON: points and weights differ in length");
  }
  return make_design(std::move(points), std::move(weights));
}

Design parse_design(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("design JSON: ") + e.what());
  }
  return design_from_json(j);
}

nlohmann::json to_json(const CertificateReport& report) {
  return {{"h", report.h},
          {"gap", report.gap},
          {"gap_relative", report.gap_relative},
          {"worst_x", report.worst_x},
          {"support_dev", report.support_dev},
          {"orth_dev", report.orth_dev},
          {"passed", report.passed}};
}

nlohmann::json to_json(const SolveReport& report) {
  return {{"design", to_json(report.design)},
          {"t_value", report.t_value},
          {"certificate", to_json(report.certificate)},
          {"iterations", report.iterations},
          {"restarts_used", report.restarts_used},
          {"polish_trace", report.polish_trace}};
}

void write_csv(std::ostream& out, const RegionTable& table) {
  CsvNumbers guard(out);
  out << "b1,b2,n_support,t_value,gap_rel,status\n";
  for (const RegionCell& c : table.cells) {
    out << c.b1 << ',' << c.b2 << ',' << c.n_support << ',' << c.t_value << ',' << c.gap_rel
        << ',' << (c.resolved ? "OK" : "UNRESOLVED") << '\n';
  }
}

void write_csv(std::ostream& out, const TrajectoryTable& table) {
  CsvNumbers guard(out);
  out << "b1,point_index,x,weight\n";
  for (const TrajectoryRow& row : table.rows) {
    if (!row.resolved) continue;
    for (const TrajectoryPoint& p : row.points) {
      out << row.b1 << ',' << p.track << ',' << p.x << ',' << p.weight << '\n';
    }
  }
}

void write_csv(std::ostream& out, const EfficiencyTable& table) {
  CsvNumbers guard(out);
  out << "b1,b2,eff_D,eff_D3,t_opt\n";
  for (const EfficiencyRow& r : table.rows) {
    out << r.b1 << ',' << r.b2 << ',';
    if (r.resolved) {
      out << r.eff_d << ',' << r.eff_d3 << ',' << r.t_opt << '\n';
    } else {
      out << "nan,nan,nan\n";
    }
  }
}

}  // namespace toptdes
