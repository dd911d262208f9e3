#include "flexenv/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace flexenv::io {

using nlohmann::json;

namespace {

json parse(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw SchemaError("malformed JSON");
  return j;
}

Matrix matrix_from(const json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_array())
    throw SchemaError("missing matrix field: " + key);
  const auto& rows = j[key];
  const int nr = static_cast<int>(rows.size());
  if (nr == 0) return Matrix(0, 0);
  if (!rows[0].is_array()) throw SchemaError(key + " must be a row-major nested array");
  const int nc = static_cast<int>(rows[0].size());
  Matrix m(nr, nc);
  for (int r = 0; r < nr; ++r) {
    if (!rows[r].is_array() || static_cast<int>(rows[r].size()) != nc)
      throw SchemaError(key + " has ragged rows");
    for (int c = 0; c < nc; ++c) {
      if (!rows[r][c].is_number()) throw SchemaError(key + " has non-numeric entries");
      m(r, c) = rows[r][c].get<double>();
    }
  }
  return m;
}

Vector vector_from(const json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_array())
    throw SchemaError("missing vector field: " + key);
  const auto& arr = j[key];
  Vector v(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw SchemaError(key + " has non-numeric entries");
    v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  }
  return v;
}

json to_rows(const Matrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_array(const Vector& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

json default_units() {
  return json{{"time", "s"},
              {"power", "W"},
              {"energy", "J"},
              {"temperature", "C"}};
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

LinearLossySystem system_from_json(const std::string& text) {
  const json j = parse(text);
  LinearLossySystem sys;
  sys.A = matrix_from(j, "A");
  sys.B_p = matrix_from(j, "B_p");
  sys.B_d = j.contains("B_d") ? matrix_from(j, "B_d")
                              : Matrix::Zero(sys.A.rows(), 0);
  sys.p_min = vector_from(j, "p_min");
  sys.p_max = vector_from(j, "p_max");
  sys.x_min = vector_from(j, "x_min");
  sys.x_max = vector_from(j, "x_max");
  sys.x0 = vector_from(j, "x0");
  if (j.contains("state_labels"))
    sys.state_labels = j["state_labels"].get<std::vector<std::string>>();
  if (j.contains("power_labels"))
    sys.power_labels = j["power_labels"].get<std::vector<std::string>>();
  if (sys.A.rows() != sys.A.cols()) throw SchemaError("A must be square");
  if (sys.B_p.rows() != sys.A.rows())
    throw SchemaError("B_p row count must match A");
  if (sys.B_d.size() > 0 && sys.B_d.rows() != sys.A.rows())
    throw SchemaError("B_d row count must match A");
  if (sys.p_min.size() != sys.B_p.cols() || sys.p_max.size() != sys.B_p.cols())
    throw SchemaError("power bound lengths must match B_p columns");
  if (sys.x_min.size() != sys.A.rows() || sys.x_max.size() != sys.A.rows() ||
      sys.x0.size() != sys.A.rows())
    throw SchemaError("state vector lengths must match A");
  return sys;
}

std::string system_to_json(const LinearLossySystem& sys) {
  nlohmann::ordered_json j;
  j["units"] = default_units();
  j["A"] = to_rows(sys.A);
  j["B_p"] = to_rows(sys.B_p);
  j["B_d"] = to_rows(sys.B_d);
  j["p_min"] = to_array(sys.p_min);
  j["p_max"] = to_array(sys.p_max);
  j["x_min"] = to_array(sys.x_min);
  j["x_max"] = to_array(sys.x_max);
  j["x0"] = to_array(sys.x0);
  j["state_labels"] = sys.state_labels;
  j["power_labels"] = sys.power_labels;
  return j.dump(2) + "\n";
}

rc::RcNetwork network_from_json(const std::string& text) {
  const json j = parse(text);
  rc::RcNetwork net;
  if (!j.contains("rooms") || !j["rooms"].is_array())
    throw SchemaError("missing rooms array");
  for (const auto& r : j["rooms"]) {
    rc::Room room;
    room.label = r.value("label", "");
    if (!r.contains("C") || !r["C"].is_number())
      throw SchemaError("room missing capacitance C");
    room.C = r["C"].get<double>();
    if (r.contains("R_amb") && !r["R_amb"].is_null())
      room.R_amb = r["R_amb"].get<double>();
    room.heated = r.value("heated", false);
    room.p_max = r.value("p_max", 0.0);
    net.rooms.push_back(std::move(room));
  }
  if (j.contains("edges")) {
    for (const auto& e : j["edges"]) {
      rc::Edge ed;
      if (!e.contains("i") || !e.contains("j") || !e.contains("R"))
        throw SchemaError("edge needs i, j, R");
      ed.i = e["i"].get<int>();
      ed.j = e["j"].get<int>();
      ed.R = e["R"].get<double>();
      net.edges.push_back(ed);
    }
  }
  if (j.contains("comfort")) {
    net.comfort.T_min = j["comfort"].value("T_min", 22.0);
    net.comfort.T_max = j["comfort"].value("T_max", 24.0);
  }
  net.T0 = j.value("T0", 23.0);
  return net;
}

std::string network_to_json(const rc::RcNetwork& net) {
  nlohmann::ordered_json j;
  j["units"] = default_units();
  j["rooms"] = nlohmann::ordered_json::array();
  for (const auto& r : net.rooms) {
    nlohmann::ordered_json room;
    room["label"] = r.label;
    room["C"] = r.C;
    if (r.R_amb)
      room["R_amb"] = *r.R_amb;
    else
      room["R_amb"] = nullptr;
    room["heated"] = r.heated;
    room["p_max"] = r.p_max;
    j["rooms"].push_back(std::move(room));
  }
  j["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : net.edges)
    j["edges"].push_back({{"i", e.i}, {"j", e.j}, {"R", e.R}});
  j["comfort"] = {{"T_min", net.comfort.T_min}, {"T_max", net.comfort.T_max}};
  j["T0"] = net.T0;
  return j.dump(2) + "\n";
}

LoadedModel load_model_file(const std::string& path) {
  const std::string text = read_file(path);
  const json j = parse(text);
  LoadedModel m;
  if (j.contains("rooms"))
    m.network = network_from_json(text);
  else
    m.system = system_from_json(text);
  return m;
}

DispatchPlan dispatch_from_json(const std::string& text) {
  const json j = parse(text);
  DispatchPlan plan;
  plan.delta = matrix_from(j, "delta");
  return plan;
}

std::string dispatch_to_json(const DispatchPlan& plan) {
  nlohmann::ordered_json j;
  j["delta"] = to_rows(plan.delta);
  return j.dump(2) + "\n";
}

std::string envelope_csv_string(const EnvelopeSeries& env,
                                const std::string& label) {
  std::ostringstream os;
  os << "# kind=" << to_string(env.kind) << " dt=" << format_double(env.dt);
  if (!label.empty()) os << " label=" << label;
  os << "\n";
  os << "step,time_s,E_down_J,E_up_J\n";
  for (int k = 0; k <= env.defined_up_to; ++k) {
    os << k << "," << format_double(k * env.dt) << ","
       << format_double(env.E_down(k)) << "," << format_double(env.E_up(k))
       << "\n";
  }
  return os.str();
}

void write_envelope_csv(const std::string& path, const EnvelopeSeries& env,
                        const std::string& label) {
  write_file(path, envelope_csv_string(env, label));
}

std::string metrics_csv_string(const std::vector<verify::MetricsRow>& rows) {
  std::ostringstream os;
  os << "archetype,horizon_s,area_td,area_ti,reduction,mfph_s,worst_above_C,"
        "worst_below_C\n";
  for (const auto& r : rows) {
    os << r.label << "," << format_double(r.horizon_s) << ","
       << format_double(r.area_td) << "," << format_double(r.area_ti) << ",";
    if (r.reduction) os << format_double(*r.reduction);
    os << "," << format_double(r.mfph_s) << ","
       << format_double(r.worst_above_C) << "," << format_double(r.worst_below_C)
       << "\n";
  }
  return os.str();
}

void write_metrics_csv(const std::string& path,
                       const std::vector<verify::MetricsRow>& rows) {
  write_file(path, metrics_csv_string(rows));
}

RunConfig config_from_json(const std::string& text) {
  const json j = parse(text);
  RunConfig cfg;
  if (j.contains("model")) {
    if (!j["model"].is_string()) throw SchemaError("model must be a path string");
    cfg.model_path = j["model"].get<std::string>();
  }
  if (j.contains("ambient")) {
    const auto& a = j["ambient"];
    if (a.contains("file"))
      cfg.ambient_file = a["file"].get<std::string>();
    else if (a.contains("constant"))
      cfg.ambient_constant = a["constant"].get<double>();
    else if (a.contains("synthetic")) {
      SynthAmbient s;
      s.mean = a["synthetic"].value("mean", 5.0);
      s.amplitude = a["synthetic"].value("amplitude", 10.0);
      s.period = a["synthetic"].value("period", 86400.0);
      cfg.ambient_synth = s;
    } else {
      throw SchemaError("ambient must be file, constant or synthetic");
    }
  } else {
    cfg.ambient_synth = SynthAmbient{};
  }
  cfg.dt = j.value("dt", 900.0);
  cfg.horizon = j.value("horizon", 86400.0);
  if (!(cfg.dt > 0.0) || !(cfg.horizon > 0.0))
    throw SchemaError("dt and horizon must be positive");
  const double ratio = cfg.horizon / cfg.dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9)
    throw SchemaError("horizon must be a multiple of dt");
  if (j.contains("scheme")) {
    auto s = scheme_from_string(j["scheme"].get<std::string>());
    if (!s) throw SchemaError("unknown scheme");
    cfg.scheme = *s;
  }
  if (j.contains("kinds"))
    cfg.kinds = j["kinds"].get<std::vector<std::string>>();
  if (j.contains("dispatch") && !j["dispatch"].is_null())
    cfg.dispatch_path = j["dispatch"].get<std::string>();
  cfg.seed = j.value("seed", 1ull);
  cfg.samples = j.value("samples", 1000);
  cfg.workers = j.value("workers", 0);
  cfg.out_dir = j.value("out", std::string("out"));
  cfg.archetype_area = j.value("archetype_area", 100.0);
  cfg.archetype_power_density = j.value("archetype_power_density", 50.0);
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  return config_from_json(read_file(path));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

}  // namespace flexenv::io
