#pragma once

#include "flexenv/envelope.hpp"
#include "flexenv/rc.hpp"
#include "flexenv/system.hpp"
#include "flexenv/verify.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace flexenv::io {

/// Raised on malformed documents (schema problems, as opposed to model
/// invariant violations which are reported by the validators).
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

LinearLossySystem system_from_json(const std::string& text);
std::string system_to_json(const LinearLossySystem& sys);

rc::RcNetwork network_from_json(const std::string& text);
std::string network_to_json(const rc::RcNetwork& rc);

/// A model file holds either a state-space system or an RC network
/// (detected by the "rooms" key).
struct LoadedModel {
  std::optional<LinearLossySystem> system;
  std::optional<rc::RcNetwork> network;
};

LoadedModel load_model_file(const std::string& path);

DispatchPlan dispatch_from_json(const std::string& text);
std::string dispatch_to_json(const DispatchPlan& plan);

void write_envelope_csv(const std::string& path, const EnvelopeSeries& env,
                        const std::string& label = "");
std::string envelope_csv_string(const EnvelopeSeries& env,
                                const std::string& label = "");

std::string metrics_csv_string(const std::vector<verify::MetricsRow>& rows);
void write_metrics_csv(const std::string& path,
                       const std::vector<verify::MetricsRow>& rows);

struct SynthAmbient {
  double mean = 5.0;
  double amplitude = 10.0;
  double period = 86400.0;
};

struct RunConfig {
  std::string model_path;
  std::optional<std::string> ambient_file;
  std::optional<SynthAmbient> ambient_synth;
  std::optional<double> ambient_constant;
  double dt = 900.0;
  double horizon = 86400.0;
  Scheme scheme = Scheme::ExactZOH;
  std::vector<std::string> kinds;  // td, ti_scalar, ti_distributed, ti_centralized
  std::optional<std::string> dispatch_path;
  std::uint64_t seed = 1;
  int samples = 1000;
  int workers = 0;  // 0 = hardware default
  std::string out_dir = "out";
  double archetype_area = 100.0;
  double archetype_power_density = 50.0;

  int steps() const { return static_cast<int>(horizon / dt + 0.5); }
};

RunConfig config_from_json(const std::string& text);
RunConfig load_config_file(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// Fixed-precision float formatting shared by all emitters (stable goldens).
std::string format_double(double v);

}  // namespace flexenv::io
