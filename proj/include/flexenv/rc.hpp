#pragma once

#include "flexenv/system.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace flexenv::rc {

/// Lumped resistance-capacitance thermal network:
///   C_i dT_i/dt = -(T_i - T_a)/R_amb_i - sum_j (T_i - T_j)/R_ij + p_i + d_i.
struct Room {
  std::string label;
  double C = 0.0;                    // J/K
  std::optional<double> R_amb;       // K/W, absent = adiabatic to ambient
  bool heated = false;
  double p_max = 0.0;                // W, per-room heater rating
};

struct Edge {
  int i = 0, j = 0;
  double R = 0.0;  // K/W
};

struct Comfort {
  double T_min = 22.0, T_max = 24.0;  // C
};

struct RcNetwork {
  std::vector<Room> rooms;
  std::vector<Edge> edges;
  Comfort comfort;
  double T0 = 23.0;  // C
};

struct AmbientSeries {
  double dt = 0.0;
  std::vector<double> values;  // C per step
  std::string source;

  int steps() const { return static_cast<int>(values.size()); }
};

enum class Construction { Light, Medium, Heavy };
enum class Insulation { VeryWell, Well, Medium, Poor };

struct ArchetypeSpec {
  Construction construction = Construction::Light;
  Insulation insulation = Insulation::Poor;
  double floor_area = 100.0;      // m^2
  double power_density = 50.0;    // W/m^2
};

struct Archetype {
  std::string name;
  ArchetypeSpec spec;
  RcNetwork network;
};

/// Structural checks (positive C and resistances, edges referencing existing
/// rooms, simple graph). Empty report means valid.
std::vector<std::string> validate_network(const RcNetwork& rc);

/// Compiles the network and ambient series into the state-space model plus
/// the matching disturbance trajectory (one channel carrying T_a).
std::pair<LinearLossySystem, Trajectory> compile(const RcNetwork& rc,
                                                 const AmbientSeries& ambient);

/// The 12 one-zone Swiss archetypes (3 heat capacities x 4 insulation
/// levels), scaled by floor area; heater rating = power_density * area.
/// The default density keeps the comfort band of every archetype alive
/// through a paper-range winter day, which the flexibility orderings need.
std::vector<Archetype> archetype_catalog(double floor_area = 100.0,
                                         double power_density = 50.0);

struct NineRoomParams {
  double room_area = 20.0;                // m^2 each
  double capacitance_per_m2 = 0.3e6;      // J/(K m^2), medium construction
  double facade_conductance = 3.0;        // W/K, panel-insulated envelope share
  double extra_face_conductance = 0.5;    // W/K per additional exposed face
  double partition_conductance = 15.0;    // W/K per uninsulated inner wall
  double insulation_factor = 10.0;        // resistance scale when insulated
  double room_power = 1000.0;             // W per room
};

/// Three floors of three rooms: grid adjacency, exterior-facing rooms get a
/// smaller R_amb (more exposed faces), per-room rating 1 kW (9 kW total).
/// The insulation flag scales every inter-room resistance up.
RcNetwork nine_room_builder(bool with_indoor_insulation,
                            const NineRoomParams& params = {});

AmbientSeries ambient_from_csv(const std::string& path);

/// mean + amplitude * sin(2 pi t / period) sampled at step starts.
AmbientSeries synth_ambient(double mean, double amplitude, double period,
                            double dt, int steps);

AmbientSeries constant_ambient(double value, double dt, int steps);

}  // namespace flexenv::rc
