// Batch front-end: model ingestion, envelope computation, verification and
// archetype sweeps, emitting plot-ready CSV/JSON.
//
// Exit codes: 0 success (including per-lead-time infeasibility, which is a
// result), 2 schema/config errors, 3 model invariant violations, 4 solver
// numeric failure, 5 a trajectory-independent corridor admitted a comfort
// violation.

#include <CLI11.hpp>
#include <json.hpp>

#include "flexenv/envelope.hpp"
#include "flexenv/io.hpp"
#include "flexenv/rc.hpp"
#include "flexenv/system.hpp"
#include "flexenv/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

namespace flexenv {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

constexpr int kExitSchema = 2;
constexpr int kExitInvariant = 3;
constexpr int kExitSolver = 4;
constexpr int kExitUnsound = 5;

struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Instance {
  io::RunConfig cfg;
  LinearLossySystem sys;
  DiscreteSystem dsys;
  Trajectory d;
};

rc::AmbientSeries make_ambient(const io::RunConfig& cfg, double dt, int steps) {
  if (cfg.ambient_file) {
    auto s = rc::ambient_from_csv(*cfg.ambient_file);
    if (std::abs(s.dt - dt) > 1e-9)
      throw io::SchemaError("ambient file grid does not match dt");
    if (s.steps() < steps)
      throw io::SchemaError("ambient series shorter than the horizon");
    return s;
  }
  if (cfg.ambient_constant)
    return rc::constant_ambient(*cfg.ambient_constant, dt, steps);
  const auto& sy = *cfg.ambient_synth;
  return rc::synth_ambient(sy.mean, sy.amplitude, sy.period, dt, steps);
}

int effective_workers(const io::RunConfig& cfg) {
  if (cfg.workers > 0) return cfg.workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 2;
}

Instance load_instance(const io::RunConfig& cfg) {
  if (cfg.model_path.empty())
    throw io::SchemaError("this command needs a model path in the config");
  Instance inst;
  inst.cfg = cfg;
  const int K = cfg.steps();
  const auto model = io::load_model_file(cfg.model_path);
  const auto ambient = make_ambient(cfg, cfg.dt, K);
  if (model.network) {
    if (auto rep = rc::validate_network(*model.network); !rep.empty())
      throw InvariantError(rep.front());
    auto [sys, d] = rc::compile(*model.network, ambient);
    inst.sys = std::move(sys);
    inst.d = std::move(d);
  } else {
    inst.sys = *model.system;
    inst.d.dt = cfg.dt;
    inst.d.values.resize(K, inst.sys.dist_dim());
    if (inst.sys.dist_dim() == 1) {
      for (int k = 0; k < K; ++k) inst.d.values(k, 0) = ambient.values[k];
    } else if (inst.sys.dist_dim() > 1) {
      throw io::SchemaError(
          "system files with several disturbance channels are not supported");
    }
  }
  if (auto rep = validate_system(inst.sys); !rep.empty())
    throw InvariantError(rep.front());
  inst.dsys = discretize(inst.sys, cfg.dt, K, cfg.scheme);
  return inst;
}

std::vector<std::string> requested_kinds(const Instance& inst) {
  if (!inst.cfg.kinds.empty()) return inst.cfg.kinds;
  if (inst.sys.state_dim() == 1) return {"td", "ti_scalar"};
  return {"td", "ti_distributed", "ti_centralized"};
}

void check_kinds(const Instance& inst, const std::vector<std::string>& kinds) {
  for (const auto& kind : kinds) {
    if (kind != "td" && kind != "ti_scalar" && kind != "ti_distributed" &&
        kind != "ti_centralized")
      throw io::SchemaError("unknown envelope kind: " + kind);
    if (kind == "ti_scalar" && inst.sys.state_dim() != 1)
      throw io::SchemaError("ti_scalar requires a one-state model");
  }
}

DispatchPlan load_dispatch(const Instance& inst) {
  const int K = inst.cfg.steps();
  const int np = static_cast<int>(inst.sys.power_dim());
  if (!inst.cfg.dispatch_path) return uniform_dispatch(K, np);
  auto plan = io::dispatch_from_json(io::read_file(*inst.cfg.dispatch_path));
  if (plan.delta.cols() != np || plan.delta.rows() < K)
    throw io::SchemaError("dispatch plan shape does not match model/horizon");
  if (auto rep = validate_dispatch(plan); !rep.empty())
    throw io::SchemaError("dispatch plan invalid: " + rep.front());
  return plan;
}

std::string label_of(const Instance& inst, int load) {
  if (load < static_cast<int>(inst.sys.power_labels.size()))
    return inst.sys.power_labels[load];
  return "load" + std::to_string(load);
}

ordered_json envelope_summary(const EnvelopeSeries& env) {
  ordered_json j;
  j["kind"] = to_string(env.kind);
  j["defined_up_to"] = env.defined_up_to;
  j["mfph_s"] = verify::mfph_seconds(env);
  j["area_Js"] = verify::envelope_area(env, env.horizon_steps());
  return j;
}

int cmd_validate(const io::RunConfig& cfg) {
  const Instance inst = load_instance(cfg);
  std::cout << "model ok: " << inst.sys.state_dim() << " state(s), "
            << inst.sys.power_dim() << " load(s), horizon " << cfg.steps()
            << " x " << cfg.dt << " s\n";
  return 0;
}

int cmd_envelope(const io::RunConfig& cfg) {
  const Instance inst = load_instance(cfg);
  const auto kinds = requested_kinds(inst);
  check_kinds(inst, kinds);
  fs::create_directories(cfg.out_dir);

  EnvelopeOptions opts;
  opts.workers = effective_workers(cfg);

  ordered_json summary;
  summary["model"] = cfg.model_path;
  summary["dt"] = cfg.dt;
  summary["horizon"] = cfg.horizon;
  summary["scheme"] = to_string(cfg.scheme);
  summary["kinds"] = ordered_json::object();

  const auto t0 = Clock::now();
  for (const auto& kind : kinds) {
    const auto k0 = Clock::now();
    ordered_json entry;
    if (kind == "td") {
      const auto td = compute_td_envelope(inst.dsys, inst.d, opts);
      const std::string path = cfg.out_dir + "/td.csv";
      io::write_envelope_csv(path, td.env);
      entry = envelope_summary(td.env);
      if (td.first_infeasible_step)
        entry["infeasible_from_step"] = *td.first_infeasible_step;
      entry["files"] = {path};
    } else if (kind == "ti_scalar") {
      const auto ti = compute_ti_scalar_envelope(inst.dsys, inst.d, opts);
      const std::string path = cfg.out_dir + "/ti_scalar.csv";
      io::write_envelope_csv(path, ti.env);
      entry = envelope_summary(ti.env);
      if (ti.first_infeasible_step)
        entry["infeasible_from_step"] = *ti.first_infeasible_step;
      entry["files"] = {path};
    } else if (kind == "ti_distributed") {
      const auto box = compute_distributed_box(inst.dsys, inst.d, opts);
      ordered_json files = ordered_json::array();
      ordered_json loads = ordered_json::object();
      for (size_t j = 0; j < box.per_load.size(); ++j) {
        const std::string label = label_of(inst, static_cast<int>(j));
        const std::string path =
            cfg.out_dir + "/ti_distributed_" + label + ".csv";
        io::write_envelope_csv(path, box.per_load[j], label);
        files.push_back(path);
        loads[label] = envelope_summary(box.per_load[j]);
      }
      entry["kind"] = "TI_distributed_per_load";
      entry["defined_up_to"] = box.defined_up_to;
      if (!box.excluded_steps.empty())
        entry["infeasible_from_step"] = box.excluded_steps.front();
      entry["loads"] = std::move(loads);
      entry["files"] = std::move(files);
    } else {  // ti_centralized
      const auto plan = load_dispatch(inst);
      const auto cen =
          compute_centralized_envelope(inst.dsys, inst.d, plan, opts);
      const std::string path = cfg.out_dir + "/ti_centralized.csv";
      io::write_envelope_csv(path, cen.total);
      entry = envelope_summary(cen.total);
      if (cen.first_infeasible_step)
        entry["infeasible_from_step"] = *cen.first_infeasible_step;
      entry["files"] = {path};
    }
    summary["kinds"][kind] = std::move(entry);
    std::cerr << "[envelope] " << kind << " took "
              << std::chrono::duration<double, std::milli>(Clock::now() - k0)
                     .count()
              << " ms\n";
  }
  std::cerr << "[envelope] total "
            << std::chrono::duration<double, std::milli>(Clock::now() - t0)
                   .count()
            << " ms\n";
  io::write_file(cfg.out_dir + "/summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return 0;
}

ordered_json verdict_entry(const TrajectoryVerdict& v) {
  ordered_json j;
  j["feasible"] = v.feasible;
  j["worst_over_C"] = v.worst_over.maxCoeff();
  j["worst_under_C"] = v.worst_under.maxCoeff();
  if (v.first_violation_step)
    j["first_violation_step"] = *v.first_violation_step;
  return j;
}

int cmd_verify(const io::RunConfig& cfg) {
  const Instance inst = load_instance(cfg);
  auto kinds = requested_kinds(inst);
  check_kinds(inst, kinds);
  fs::create_directories(cfg.out_dir);

  EnvelopeOptions opts;
  opts.workers = effective_workers(cfg);
  const int K = cfg.steps();
  const double soundness_tol = 0.01;

  ordered_json verdict;
  verdict["model"] = cfg.model_path;
  verdict["seed"] = cfg.seed;
  verdict["samples_per_kind"] = cfg.samples;
  int ti_violations_total = 0;

  const bool with_td =
      std::find(kinds.begin(), kinds.end(), std::string("td")) != kinds.end();
  if (with_td) {
    const auto td = compute_td_envelope(inst.dsys, inst.d, opts);
    ordered_json tdj;
    tdj["defined_up_to"] = td.env.defined_up_to;
    if (inst.sys.state_dim() == 1 && td.env.defined_up_to >= 1) {
      // Scenario A: as little and as late as possible. Scenario B: full
      // power until scenario A's final energy is banked, then the minimum.
      const auto a = verify::extreme_trajectory(td.env, inst.sys,
                                                verify::ExtremeMode::LatestMin);
      const auto b = verify::extreme_trajectory(
          td.env, inst.sys, verify::ExtremeMode::EarliestThenMin);
      const auto va =
          check_state_feasibility(simulate(inst.dsys, a, inst.d), inst.sys);
      const auto vb =
          check_state_feasibility(simulate(inst.dsys, b, inst.d), inst.sys);
      tdj["scenario_a"] = verdict_entry(va);
      tdj["scenario_b"] = verdict_entry(vb);
      tdj["witness_found"] = !vb.feasible || !va.feasible;
      const auto rep = verify::worst_discomfort(inst.dsys, inst.d, td.env);
      tdj["worst_above_C"] = rep.worst_above;
      tdj["worst_below_C"] = rep.worst_below;
    }
    verdict["td"] = std::move(tdj);
  }

  auto sample_report = [&](const EnvelopeSeries& env, const Vector& lo,
                           const Vector& hi, std::uint64_t seed,
                           auto&& verdict_fn) {
    ordered_json j;
    int violations = 0, produced = 0, dead_ends = 0;
    double worst = 0.0;
    std::uint64_t s = seed;
    const std::uint64_t limit =
        seed + 20ull * static_cast<std::uint64_t>(cfg.samples);
    ordered_json events = ordered_json::array();
    while (produced < cfg.samples && s < limit && env.defined_up_to >= 1) {
      const auto r = verify::sample_in_envelope(env, lo, hi, s++);
      if (!r.ok) {
        ++dead_ends;
        continue;
      }
      ++produced;
      const TrajectoryVerdict v = verdict_fn(r.trajectory);
      const double mag =
          std::max(v.worst_over.maxCoeff(), v.worst_under.maxCoeff());
      if (mag > soundness_tol) {
        ++violations;
        worst = std::max(worst, mag);
        if (events.size() < 16) {
          ordered_json e;
          e["seed"] = s - 1;
          e["magnitude_C"] = mag;
          if (v.first_violation_step)
            e["first_violation_step"] = *v.first_violation_step;
          events.push_back(std::move(e));
        }
      }
    }
    j["samples"] = produced;
    j["dead_ends"] = dead_ends;
    j["violations"] = violations;
    j["worst_violation_C"] = worst;
    if (!events.empty()) j["events"] = std::move(events);
    ti_violations_total += violations;
    return j;
  };

  for (const auto& kind : kinds) {
    if (kind == "td") continue;
    if (kind == "ti_scalar") {
      const auto ti = compute_ti_scalar_envelope(inst.dsys, inst.d, opts);
      const int D = std::max(ti.env.defined_up_to, 1);
      auto j = sample_report(
          ti.env, Vector::Constant(D, inst.sys.p_min(0)),
          Vector::Constant(D, inst.sys.p_max(0)), cfg.seed,
          [&](const Trajectory& t) {
            Trajectory dd = inst.d;
            dd.values.conservativeResize(t.steps(), Eigen::NoChange);
            return check_state_feasibility(simulate(inst.dsys, t, dd),
                                           inst.sys, 0.0);
          });
      j["defined_up_to"] = ti.env.defined_up_to;
      j["mfph_s"] = verify::mfph_seconds(ti.env);
      verdict["ti_scalar"] = std::move(j);
    } else if (kind == "ti_distributed") {
      const auto box = compute_distributed_box(inst.dsys, inst.d, opts);
      const int np = static_cast<int>(inst.sys.power_dim());
      const int D = box.defined_up_to;
      ordered_json j;
      int violations = 0, produced = 0, dead_ends = 0;
      double worst = 0.0;
      std::uint64_t s = cfg.seed;
      const std::uint64_t limit =
          cfg.seed + 20ull * static_cast<std::uint64_t>(cfg.samples);
      while (produced < cfg.samples && s < limit && D > 0) {
        Trajectory joint;
        joint.dt = cfg.dt;
        joint.values = Matrix::Zero(D, np);
        bool ok = true;
        for (int load = 0; load < np && ok; ++load) {
          const auto r = verify::sample_in_envelope(
              box.per_load[load], Vector::Constant(D, inst.sys.p_min(load)),
              Vector::Constant(D, inst.sys.p_max(load)),
              s * 1000003ull + load);
          if (!r.ok)
            ok = false;
          else
            joint.values.col(load) = r.trajectory.values.col(0);
        }
        ++s;
        if (!ok) {
          ++dead_ends;
          continue;
        }
        ++produced;
        Trajectory dd = inst.d;
        dd.values.conservativeResize(D, Eigen::NoChange);
        const auto v = check_state_feasibility(simulate(inst.dsys, joint, dd),
                                               inst.sys, 0.0);
        const double mag =
            std::max(v.worst_over.maxCoeff(), v.worst_under.maxCoeff());
        if (mag > soundness_tol) {
          ++violations;
          worst = std::max(worst, mag);
        }
      }
      j["samples"] = produced;
      j["dead_ends"] = dead_ends;
      j["violations"] = violations;
      j["worst_violation_C"] = worst;
      j["defined_up_to"] = D;
      if (!box.excluded_steps.empty())
        j["infeasible_from_step"] = box.excluded_steps.front();
      ti_violations_total += violations;
      verdict["ti_distributed"] = std::move(j);
    } else if (kind == "ti_centralized") {
      const auto plan = load_dispatch(inst);
      const auto cen =
          compute_centralized_envelope(inst.dsys, inst.d, plan, opts);
      const int D = std::max(cen.total.defined_up_to, 1);
      auto j = sample_report(
          cen.total, cen.ptot_min.head(D), cen.ptot_max.head(D),
          cfg.seed + 7777,
          [&](const Trajectory& ptot) {
            Trajectory joint;
            joint.dt = cfg.dt;
            const int steps = ptot.steps();
            joint.values = Matrix::Zero(steps, inst.sys.power_dim());
            for (int l = 0; l < steps; ++l)
              joint.values.row(l) = plan.delta.row(l) * ptot.values(l, 0);
            Trajectory dd = inst.d;
            dd.values.conservativeResize(steps, Eigen::NoChange);
            return check_state_feasibility(simulate(inst.dsys, joint, dd),
                                           inst.sys, 0.0);
          });
      j["defined_up_to"] = cen.total.defined_up_to;
      j["mfph_s"] = verify::mfph_seconds(cen.total);
      verdict["ti_centralized"] = std::move(j);
    }
  }

  // Exhaustive enumeration on small instances, with envelopes recomputed on
  // the oracle's coarse grid.
  if (inst.sys.state_dim() <= 2 && K >= 4) {
    const int osteps = inst.sys.state_dim() == 1 ? 4 : 3;
    const int levels = inst.sys.state_dim() == 1 ? 5 : 3;
    const double odt = cfg.horizon / osteps;
    const auto osys = discretize(inst.sys, odt, osteps, cfg.scheme);
    const auto oamb = make_ambient(cfg, odt, osteps);
    Trajectory od;
    od.dt = odt;
    od.values.resize(osteps, inst.sys.dist_dim());
    if (inst.sys.dist_dim() == 1)
      for (int k = 0; k < osteps; ++k) od.values(k, 0) = oamb.values[k];
    const auto oracle = verify::brute_force_oracle(osys, od, levels, osteps);
    ordered_json oj;
    oj["trajectories"] = oracle.cumulative.size();
    const auto otd = compute_td_envelope(osys, od, opts);
    const auto enc = verify::oracle_td_enclosure(oracle, otd.env);
    oj["td_enclosed"] = enc.enclosed;
    oj["td_enclosure_slack_J"] = enc.max_slack;
    if (inst.sys.state_dim() == 1) {
      const auto oti = compute_ti_scalar_envelope(osys, od, opts);
      const auto sound =
          verify::oracle_ti_soundness_total(oracle, osys, od, oti.env);
      oj["ti_scalar_inside"] = sound.inside;
      oj["ti_scalar_violations"] = sound.violations;
      ti_violations_total += sound.violations;
    } else {
      const auto obox = compute_distributed_box(osys, od, opts);
      const auto sound =
          verify::oracle_ti_soundness(oracle, osys, od, obox.per_load);
      oj["ti_distributed_inside"] = sound.inside;
      oj["ti_distributed_violations"] = sound.violations;
      ti_violations_total += sound.violations;
    }
    verdict["oracle"] = std::move(oj);
  }

  verdict["ti_violations_total"] = ti_violations_total;
  const std::string text = verdict.dump(2) + "\n";
  io::write_file(cfg.out_dir + "/verdict.json", text);
  std::cout << text;
  return ti_violations_total > 0 ? kExitUnsound : 0;
}

int cmd_sweep(const io::RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const auto catalog =
      rc::archetype_catalog(cfg.archetype_area, cfg.archetype_power_density);
  const int K = cfg.steps();
  if (cfg.horizon < 86400.0 - 1e-6)
    throw io::SchemaError("sweep needs a horizon of at least 24 h");

  EnvelopeOptions opts;
  opts.workers = effective_workers(cfg);

  const std::vector<double> horizons_s = {3600.0, 14400.0, 43200.0, 86400.0};
  std::vector<verify::MetricsRow> rows;
  struct Cell {
    double reduction24 = 0.0;
    double mfph_s = 0.0;
  };
  std::map<std::string, Cell> cells;

  for (const auto& arche : catalog) {
    const auto ambient = make_ambient(cfg, cfg.dt, K);
    auto [sys, d] = rc::compile(arche.network, ambient);
    const auto dsys = discretize(sys, cfg.dt, K, cfg.scheme);
    const auto td = compute_td_envelope(dsys, d, opts);
    const auto ti = compute_ti_scalar_envelope(dsys, d, opts);

    for (double hs : horizons_s) {
      const int kh = static_cast<int>(hs / cfg.dt + 0.5);
      verify::MetricsRow row;
      row.label = arche.name;
      row.horizon_steps = kh;
      row.horizon_s = hs;
      row.area_td = verify::envelope_area(td.env, kh);
      row.area_ti = verify::envelope_area(ti.env, kh);
      row.reduction = verify::area_reduction(ti.env, td.env, kh);
      row.mfph_s = std::min(verify::mfph_seconds(ti.env), hs);
      const auto rep = verify::worst_discomfort(
          dsys, d, verify::envelope_prefix(td.env, kh));
      row.worst_above_C = rep.worst_above;
      row.worst_below_C = rep.worst_below;
      if (hs == 86400.0)
        cells[arche.name] = {row.reduction ? *row.reduction : 0.0,
                             verify::mfph_seconds(ti.env)};
      rows.push_back(std::move(row));
    }
  }

  io::write_metrics_csv(cfg.out_dir + "/metrics.csv", rows);

  // Qualitative orderings at 24 h across the capacity/insulation grid.
  const std::vector<std::string> cons = {"light", "medium", "heavy"};
  const std::vector<std::string> ins = {"verywell", "well", "mediumins",
                                        "poor"};
  ordered_json mono;
  ordered_json issues = ordered_json::array();
  bool ok = true;
  const double tol = 1e-9;
  for (const auto& c : cons) {
    for (size_t i = 0; i + 1 < ins.size(); ++i) {
      const auto& a = cells[c + "_" + ins[i]];
      const auto& b = cells[c + "_" + ins[i + 1]];
      if (b.reduction24 < a.reduction24 - tol) {
        ok = false;
        issues.push_back("reduction not nondecreasing in 1/R for " + c);
      }
      if (b.mfph_s > a.mfph_s + tol) {
        ok = false;
        issues.push_back("mfph not nonincreasing in 1/R for " + c);
      }
    }
  }
  for (const auto& iname : ins) {
    for (size_t ci = 0; ci + 1 < cons.size(); ++ci) {
      const auto& a = cells[cons[ci] + "_" + iname];
      const auto& b = cells[cons[ci + 1] + "_" + iname];
      if (b.reduction24 > a.reduction24 + tol) {
        ok = false;
        issues.push_back("reduction not nonincreasing in C for " + iname);
      }
    }
  }
  mono["orderings_hold"] = ok;
  mono["issues"] = std::move(issues);
  io::write_file(cfg.out_dir + "/sweep_orderings.json", mono.dump(2) + "\n");
  std::cout << mono.dump(2) << "\n";
  return 0;
}

}  // namespace
}  // namespace flexenv

int main(int argc, char** argv) {
  using namespace flexenv;
  CLI::App app{"Energy-flexibility envelope computation and verification"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override, scheme_override, kinds_override;
  int workers_override = -1;
  std::int64_t seed_override = -1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration JSON")
        ->required();
    sub->add_option("--out", out_override, "output directory override");
    sub->add_option("--workers", workers_override, "worker-thread override");
    sub->add_option("--seed", seed_override, "sampling seed override");
    sub->add_option("--scheme", scheme_override, "euler|zoh override");
    sub->add_option("--kinds", kinds_override,
                    "comma-separated envelope kinds override");
  };
  auto* validate = app.add_subcommand("validate", "load and validate a model");
  auto* envelope = app.add_subcommand("envelope", "compute envelope CSVs");
  auto* verify_cmd = app.add_subcommand("verify", "corridor soundness checks");
  auto* sweep = app.add_subcommand("sweep", "archetype metric sweep");
  for (auto* sub : {validate, envelope, verify_cmd, sweep}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    io::RunConfig cfg = io::load_config_file(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (workers_override >= 0) cfg.workers = workers_override;
    if (seed_override >= 0)
      cfg.seed = static_cast<std::uint64_t>(seed_override);
    if (!scheme_override.empty()) {
      auto s = scheme_from_string(scheme_override);
      if (!s) throw io::SchemaError("unknown scheme: " + scheme_override);
      cfg.scheme = *s;
    }
    if (!kinds_override.empty()) {
      cfg.kinds.clear();
      std::string item;
      std::istringstream is(kinds_override);
      while (std::getline(is, item, ','))
        if (!item.empty()) cfg.kinds.push_back(item);
    }

    if (app.got_subcommand(validate)) return cmd_validate(cfg);
    if (app.got_subcommand(envelope)) return cmd_envelope(cfg);
    if (app.got_subcommand(verify_cmd)) return cmd_verify(cfg);
    return cmd_sweep(cfg);
  } catch (const io::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const InvariantError& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSchema;
  }
}
