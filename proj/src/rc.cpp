#include "flexenv/rc.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

namespace flexenv::rc {

std::vector<std::string> validate_network(const RcNetwork& rc) {
  std::vector<std::string> report;
  const int n = static_cast<int>(rc.rooms.size());
  if (n == 0) report.push_back("network has no rooms");
  for (int i = 0; i < n; ++i) {
    const Room& r = rc.rooms[i];
    if (!(r.C > 0.0))
      report.push_back("room " + std::to_string(i) + ": capacitance must be positive");
    if (r.R_amb && !(*r.R_amb > 0.0))
      report.push_back("room " + std::to_string(i) + ": ambient resistance must be positive");
    if (r.heated && r.p_max < 0.0)
      report.push_back("room " + std::to_string(i) + ": negative heater rating");
  }
  std::set<std::pair<int, int>> seen;
  for (size_t e = 0; e < rc.edges.size(); ++e) {
    const Edge& ed = rc.edges[e];
    if (ed.i < 0 || ed.i >= n || ed.j < 0 || ed.j >= n) {
      report.push_back("edge " + std::to_string(e) + ": references missing room");
      continue;
    }
    if (ed.i == ed.j)
      report.push_back("edge " + std::to_string(e) + ": self-loop");
    if (!(ed.R > 0.0))
      report.push_back("edge " + std::to_string(e) + ": resistance must be positive");
    auto key = std::minmax(ed.i, ed.j);
    if (!seen.insert(key).second)
      report.push_back("edge " + std::to_string(e) + ": duplicate edge");
  }
  if (rc.comfort.T_min > rc.comfort.T_max)
    report.push_back("comfort band empty (T_min > T_max)");
  if (rc.T0 < rc.comfort.T_min || rc.T0 > rc.comfort.T_max)
    report.push_back("initial temperature outside comfort band");
  return report;
}

std::pair<LinearLossySystem, Trajectory> compile(const RcNetwork& rc,
                                                 const AmbientSeries& ambient) {
  auto report = validate_network(rc);
  if (!report.empty())
    throw std::invalid_argument("compile: invalid network: " + report.front());

  const int n = static_cast<int>(rc.rooms.size());
  std::vector<int> load_of_room;
  for (int i = 0; i < n; ++i)
    if (rc.rooms[i].heated) load_of_room.push_back(i);
  const int np = static_cast<int>(load_of_room.size());
  if (np == 0) throw std::invalid_argument("compile: no heated rooms");

  // A heated room with no thermal path at all cannot shed energy; the
  // comfort ceiling makes its envelope degenerate, so reject it up front.
  std::vector<int> degree(n, 0);
  for (const Edge& e : rc.edges) {
    ++degree[e.i];
    ++degree[e.j];
  }
  for (int i : load_of_room)
    if (!rc.rooms[i].R_amb && degree[i] == 0)
      throw std::invalid_argument("compile: heated room " + std::to_string(i) +
                                  " is thermally disconnected");

  LinearLossySystem sys;
  sys.A = Matrix::Zero(n, n);
  sys.B_p = Matrix::Zero(n, np);
  sys.B_d = Matrix::Zero(n, 1);
  for (int i = 0; i < n; ++i) {
    const Room& r = rc.rooms[i];
    double g_total = 0.0;
    if (r.R_amb) {
      const double g = 1.0 / *r.R_amb;
      g_total += g;
      sys.B_d(i, 0) = g / r.C;
    }
    sys.A(i, i) -= g_total / r.C;
    sys.state_labels.push_back(r.label);
  }
  for (const Edge& e : rc.edges) {
    const double g = 1.0 / e.R;
    sys.A(e.i, e.j) += g / rc.rooms[e.i].C;
    sys.A(e.j, e.i) += g / rc.rooms[e.j].C;
    sys.A(e.i, e.i) -= g / rc.rooms[e.i].C;
    sys.A(e.j, e.j) -= g / rc.rooms[e.j].C;
  }
  sys.p_min = Vector::Zero(np);
  sys.p_max = Vector::Zero(np);
  for (int l = 0; l < np; ++l) {
    const int i = load_of_room[l];
    sys.B_p(i, l) = 1.0 / rc.rooms[i].C;
    sys.p_max(l) = rc.rooms[i].p_max;
    sys.power_labels.push_back(rc.rooms[i].label);
  }
  sys.x_min = Vector::Constant(n, rc.comfort.T_min);
  sys.x_max = Vector::Constant(n, rc.comfort.T_max);
  sys.x0 = Vector::Constant(n, rc.T0);

  Trajectory d;
  d.dt = ambient.dt;
  d.values.resize(ambient.steps(), 1);
  for (int k = 0; k < ambient.steps(); ++k) d.values(k, 0) = ambient.values[k];
  return {std::move(sys), std::move(d)};
}

namespace {

double capacitance_per_m2(Construction c) {
  switch (c) {
    case Construction::Light: return 0.1e6;
    case Construction::Medium: return 0.3e6;
    case Construction::Heavy: return 0.5e6;
  }
  return 0.0;
}

double conductance_per_m2(Insulation ins) {
  switch (ins) {
    case Insulation::VeryWell: return 0.34;
    case Insulation::Well: return 0.86;
    case Insulation::Medium: return 1.14;
    case Insulation::Poor: return 1.71;
  }
  return 0.0;
}

std::string construction_name(Construction c) {
  switch (c) {
    case Construction::Light: return "light";
    case Construction::Medium: return "medium";
    case Construction::Heavy: return "heavy";
  }
  return "";
}

std::string insulation_name(Insulation ins) {
  switch (ins) {
    case Insulation::VeryWell: return "verywell";
    case Insulation::Well: return "well";
    case Insulation::Medium: return "mediumins";
    case Insulation::Poor: return "poor";
  }
  return "";
}

}  // namespace

std::vector<Archetype> archetype_catalog(double floor_area,
                                         double power_density) {
  if (!(floor_area > 0.0) || !(power_density > 0.0))
    throw std::invalid_argument("archetype_catalog: area and power density must be positive");

  std::vector<Archetype> out;
  for (Construction c : {Construction::Light, Construction::Medium,
                         Construction::Heavy}) {
    for (Insulation ins : {Insulation::VeryWell, Insulation::Well,
                           Insulation::Medium, Insulation::Poor}) {
      Archetype a;
      a.spec = ArchetypeSpec{c, ins, floor_area, power_density};
      a.name = construction_name(c) + "_" + insulation_name(ins);
      Room room;
      room.label = a.name;
      room.C = capacitance_per_m2(c) * floor_area;
      room.R_amb = 1.0 / (conductance_per_m2(ins) * floor_area);
      room.heated = true;
      room.p_max = power_density * floor_area;
      a.network.rooms.push_back(room);
      a.network.comfort = Comfort{22.0, 24.0};
      a.network.T0 = 23.0;
      out.push_back(std::move(a));
    }
  }
  return out;
}

RcNetwork nine_room_builder(bool with_indoor_insulation,
                            const NineRoomParams& params) {
  RcNetwork rc;
  rc.comfort = Comfort{22.0, 24.0};
  rc.T0 = 23.0;

  // 3 floors x 3 columns; every room keeps two facade faces (front/back),
  // edge columns add a side face, the top floor adds the roof.
  for (int floor = 0; floor < 3; ++floor) {
    for (int col = 0; col < 3; ++col) {
      Room r;
      r.label = "f" + std::to_string(floor) + "r" + std::to_string(col);
      r.C = params.capacitance_per_m2 * params.room_area;
      int extra_faces = 0;
      if (col == 0 || col == 2) extra_faces += 1;
      if (floor == 2) extra_faces += 1;
      r.R_amb = 1.0 / (params.facade_conductance +
                       params.extra_face_conductance * extra_faces);
      r.heated = true;
      r.p_max = params.room_power;
      rc.rooms.push_back(std::move(r));
    }
  }
  const double factor = with_indoor_insulation ? params.insulation_factor : 1.0;
  const double R_part = factor / params.partition_conductance;
  auto idx = [](int floor, int col) { return 3 * floor + col; };
  for (int floor = 0; floor < 3; ++floor)
    for (int col = 0; col + 1 < 3; ++col)
      rc.edges.push_back({idx(floor, col), idx(floor, col + 1), R_part});
  for (int floor = 0; floor + 1 < 3; ++floor)
    for (int col = 0; col < 3; ++col)
      rc.edges.push_back({idx(floor, col), idx(floor + 1, col), R_part});
  return rc;
}

AmbientSeries ambient_from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ambient_from_csv: cannot open " + path);

  AmbientSeries s;
  s.source = path;
  std::vector<double> times;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && line.find("timestamp") != std::string::npos) continue;
    std::istringstream ls(line);
    std::string t_str, v_str;
    if (!std::getline(ls, t_str, ',') || !std::getline(ls, v_str, ','))
      throw std::runtime_error("ambient_from_csv: malformed line " +
                               std::to_string(lineno));
    size_t pos = 0;
    const double t = std::stod(t_str, &pos);
    const double v = std::stod(v_str, &pos);
    if (!std::isfinite(t) || !std::isfinite(v))
      throw std::runtime_error("ambient_from_csv: non-finite value at line " +
                               std::to_string(lineno));
    times.push_back(t);
    s.values.push_back(v);
  }
  if (s.values.empty())
    throw std::runtime_error("ambient_from_csv: empty file " + path);
  if (s.values.size() == 1) {
    s.dt = 0.0;
    return s;
  }
  const double dt = times[1] - times[0];
  if (!(dt > 0.0))
    throw std::runtime_error("ambient_from_csv: timestamps must be strictly increasing");
  for (size_t k = 1; k < times.size(); ++k) {
    const double step = times[k] - times[k - 1];
    if (std::abs(step - dt) > 1e-9 * std::max(1.0, dt))
      throw std::runtime_error("ambient_from_csv: non-uniform grid at line " +
                               std::to_string(k + 1));
  }
  s.dt = dt;
  return s;
}

AmbientSeries synth_ambient(double mean, double amplitude, double period,
                            double dt, int steps) {
  if (!std::isfinite(mean) || !std::isfinite(amplitude) || !(period > 0.0) ||
      !(dt > 0.0) || steps < 0)
    throw std::invalid_argument("synth_ambient: invalid parameters");
  AmbientSeries s;
  s.dt = dt;
  std::ostringstream os;
  os << "synth(mean=" << mean << ",amp=" << amplitude << ",period=" << period
     << ")";
  s.source = os.str();
  s.values.reserve(steps);
  for (int k = 0; k < steps; ++k) {
    const double t = k * dt;
    s.values.push_back(mean +
                       amplitude * std::sin(2.0 * std::numbers::pi * t / period));
  }
  return s;
}

AmbientSeries constant_ambient(double value, double dt, int steps) {
  AmbientSeries s;
  s.dt = dt;
  s.source = "constant";
  s.values.assign(static_cast<size_t>(steps), value);
  return s;
}

}  // namespace flexenv::rc
