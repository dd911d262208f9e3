#include "flexenv/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace flexenv::verify {

namespace {

double rel_tol(double tol, double scale) { return tol * (1.0 + std::abs(scale)); }

}  // namespace

bool corridor_contains(const EnvelopeSeries& env, const Trajectory& p,
                       double tol) {
  if (p.values.cols() != 1) return false;
  double cum = 0.0;
  const int D = std::min(env.defined_up_to, p.steps());
  for (int k = 1; k <= D; ++k) {
    cum += p.values(k - 1, 0) * env.dt;
    if (cum > env.E_up(k) + rel_tol(tol, env.E_up(k))) return false;
    if (cum < env.E_down(k) - rel_tol(tol, env.E_down(k))) return false;
  }
  return true;
}

SampleResult sample_in_envelope(const EnvelopeSeries& env, const Vector& p_lo,
                                const Vector& p_hi, std::uint64_t seed,
                                int max_backtracks) {
  const int D = env.defined_up_to;
  SampleResult out;
  out.trajectory.dt = env.dt;
  out.trajectory.values = Matrix::Zero(D, 1);
  if (D == 0) {
    out.ok = true;
    return out;
  }
  if (p_lo.size() < D || p_hi.size() < D)
    throw std::invalid_argument("sample_in_envelope: power bound series too short");

  std::mt19937_64 rng(seed);
  std::vector<double> cum(D + 1, 0.0);
  int k = 0;
  while (k < D) {
    const double lo =
        std::max(p_lo(k), (env.E_down(k + 1) - cum[k]) / env.dt);
    const double hi = std::min(p_hi(k), (env.E_up(k + 1) - cum[k]) / env.dt);
    if (lo > hi + 1e-12 * (1.0 + std::abs(hi))) {
      if (out.backtracks >= max_backtracks || k == 0) {
        out.dead_end_step = k;
        return out;
      }
      ++out.backtracks;
      --k;  // redraw the previous step with fresh randomness
      continue;
    }
    const double width = std::max(0.0, hi - lo);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    const double p = lo + width * dist(rng);
    out.trajectory.values(k, 0) = p;
    cum[k + 1] = cum[k] + p * env.dt;
    ++k;
  }
  out.ok = true;
  return out;
}

SampleResult sample_in_envelope(const EnvelopeSeries& env,
                                const LinearLossySystem& sys,
                                std::uint64_t seed) {
  if (sys.power_dim() != 1)
    throw std::invalid_argument("sample_in_envelope: 1-D overload needs a single load");
  const int D = env.defined_up_to;
  return sample_in_envelope(env, Vector::Constant(std::max(D, 1), sys.p_min(0)),
                            Vector::Constant(std::max(D, 1), sys.p_max(0)),
                            seed);
}

SampleBatch sample_many(const EnvelopeSeries& env, const Vector& p_lo,
                        const Vector& p_hi, std::uint64_t seed, int count) {
  SampleBatch batch;
  std::uint64_t s = seed;
  const std::uint64_t limit = seed + 20ull * static_cast<std::uint64_t>(count);
  while (static_cast<int>(batch.trajectories.size()) < count && s < limit) {
    SampleResult r = sample_in_envelope(env, p_lo, p_hi, s++);
    if (r.ok)
      batch.trajectories.push_back(std::move(r.trajectory));
    else
      ++batch.dead_ends;
  }
  return batch;
}

Trajectory extreme_trajectory(const EnvelopeSeries& env, const Vector& p_lo,
                              const Vector& p_hi, ExtremeMode mode) {
  const int D = env.defined_up_to;
  Trajectory t;
  t.dt = env.dt;
  t.values = Matrix::Zero(D, 1);
  if (D == 0) return t;
  if (p_lo.size() < D || p_hi.size() < D)
    throw std::invalid_argument("extreme_trajectory: power bound series too short");

  auto window = [&](int k, double cum, double& lo, double& hi) {
    lo = std::max(p_lo(k), (env.E_down(k + 1) - cum) / env.dt);
    hi = std::min(p_hi(k), (env.E_up(k + 1) - cum) / env.dt);
    if (lo > hi) lo = hi;  // numerical pinch, ride the ceiling
  };

  if (mode == ExtremeMode::LatestMax) {
    // Backward construction from the ceiling's final energy: consume as
    // late as the floor and power limits allow.
    std::vector<double> c(D + 1);
    c[D] = env.E_up(D);
    for (int k = D - 1; k >= 0; --k) {
      double lo = std::max(env.E_down(k), c[k + 1] - p_hi(k) * env.dt);
      lo = std::max(lo, 0.0);
      c[k] = std::min(lo, c[k + 1] - p_lo(k) * env.dt);
    }
    for (int k = 0; k < D; ++k) t.values(k, 0) = (c[k + 1] - c[k]) / env.dt;
    return t;
  }

  double cum = 0.0;
  const double target =
      (mode == ExtremeMode::EarliestThenMin) ? env.E_down(D) : 0.0;
  for (int k = 0; k < D; ++k) {
    double lo, hi;
    window(k, cum, lo, hi);
    double p = lo;
    switch (mode) {
      case ExtremeMode::EarliestMax:
        p = hi;
        break;
      case ExtremeMode::LatestMin:
        p = lo;
        break;
      case ExtremeMode::EarliestThenMin:
        p = std::clamp((target - cum) / env.dt, lo, hi);
        break;
      case ExtremeMode::LatestMax:
        break;  // handled above
    }
    t.values(k, 0) = p;
    cum += p * env.dt;
  }
  return t;
}

Trajectory extreme_trajectory(const EnvelopeSeries& env,
                              const LinearLossySystem& sys, ExtremeMode mode) {
  if (sys.power_dim() != 1)
    throw std::invalid_argument("extreme_trajectory: 1-D overload needs a single load");
  const int D = std::max(env.defined_up_to, 1);
  return extreme_trajectory(env, Vector::Constant(D, sys.p_min(0)),
                            Vector::Constant(D, sys.p_max(0)), mode);
}

DiscomfortReport worst_discomfort(const DiscreteSystem& dsys,
                                  const Trajectory& d,
                                  const EnvelopeSeries& td_env) {
  if (dsys.state_dim() != 1)
    throw std::invalid_argument("worst_discomfort: 1-D systems only");

  DiscomfortReport rep;
  rep.above_trajectory =
      extreme_trajectory(td_env, dsys.source, ExtremeMode::LatestMax);
  rep.below_trajectory =
      extreme_trajectory(td_env, dsys.source, ExtremeMode::EarliestThenMin);
  for (const Trajectory* t : {&rep.above_trajectory, &rep.below_trajectory}) {
    const StateTrajectory xs = simulate(dsys, *t, d);
    const TrajectoryVerdict v = check_state_feasibility(xs, dsys.source, 0.0);
    rep.worst_above = std::max(rep.worst_above, v.worst_over.maxCoeff());
    rep.worst_below = std::max(rep.worst_below, v.worst_under.maxCoeff());
  }
  return rep;
}

EnvelopeSeries envelope_prefix(const EnvelopeSeries& env, int k) {
  EnvelopeSeries out = env;
  out.defined_up_to = std::min(env.defined_up_to, k);
  return out;
}

double envelope_area(const EnvelopeSeries& env, int k) {
  double area = 0.0;
  const int last = std::min(k, env.defined_up_to);
  for (int l = 0; l <= last; ++l)
    area += std::max(0.0, env.E_up(l) - env.E_down(l)) * env.dt;
  return area;
}

std::optional<double> area_reduction(const EnvelopeSeries& ti,
                                     const EnvelopeSeries& td, int k) {
  const double at = envelope_area(td, k);
  if (at <= 0.0) return std::nullopt;
  return 1.0 - envelope_area(ti, k) / at;
}

double mfph_seconds(const EnvelopeSeries& env) {
  for (int k = 1; k <= env.defined_up_to; ++k)
    if (env.E_up(k) < env.E_down(k)) return env.dt * k;
  if (env.defined_up_to < env.horizon_steps())
    return env.dt * (env.defined_up_to + 1);
  return env.dt * env.horizon_steps();
}

OracleTables brute_force_oracle(const DiscreteSystem& dsys,
                                const Trajectory& d, int power_levels,
                                int k_max, double comfort_tol) {
  const auto& sys = dsys.source;
  const int np = static_cast<int>(dsys.power_dim());
  if (power_levels < 2)
    throw std::invalid_argument("brute_force_oracle: need at least 2 levels");
  const double combos_per_step = std::pow(power_levels, np);
  const double total = std::pow(combos_per_step, k_max);
  if (total > 1e7)
    throw std::invalid_argument("brute_force_oracle: enumeration budget exceeded");

  OracleTables t;
  t.dt = dsys.dt;
  t.levels = power_levels;
  t.steps = k_max;
  t.n_loads = np;
  t.max_feasible = Vector::Constant(k_max + 1, -opt::kInf);
  t.min_feasible = Vector::Constant(k_max + 1, opt::kInf);

  const long n_traj = static_cast<long>(std::llround(total));
  const long per_step = static_cast<long>(std::llround(combos_per_step));
  Matrix grid(power_levels, np);
  for (int j = 0; j < np; ++j)
    for (int g = 0; g < power_levels; ++g)
      grid(g, j) = sys.p_min(j) + (sys.p_max(j) - sys.p_min(j)) * g /
                                      (power_levels - 1);

  Trajectory p;
  p.dt = dsys.dt;
  p.values = Matrix::Zero(k_max, np);
  for (long idx = 0; idx < n_traj; ++idx) {
    long rem = idx;
    for (int step = 0; step < k_max; ++step) {
      long combo = rem % per_step;
      rem /= per_step;
      for (int j = 0; j < np; ++j) {
        p.values(step, j) = grid(combo % power_levels, j);
        combo /= power_levels;
      }
    }
    const StateTrajectory xs = simulate(dsys, p, d);
    Matrix cum = Matrix::Zero(k_max + 1, np);
    for (int k = 1; k <= k_max; ++k)
      cum.row(k) = cum.row(k - 1) + p.values.row(k - 1) * dsys.dt;

    int ok_through = k_max;
    for (int k = 1; k <= k_max; ++k) {
      bool ok = true;
      for (int i = 0; i < dsys.state_dim(); ++i)
        if (xs.values(k, i) > sys.x_max(i) + comfort_tol ||
            xs.values(k, i) < sys.x_min(i) - comfort_tol)
          ok = false;
      if (!ok) {
        ok_through = k - 1;
        break;
      }
    }
    for (int k = 1; k <= ok_through; ++k) {
      const double total_e = cum.row(k).sum();
      t.max_feasible(k) = std::max(t.max_feasible(k), total_e);
      t.min_feasible(k) = std::min(t.min_feasible(k), total_e);
    }
    t.cumulative.push_back(std::move(cum));
    t.comfort_ok_through.push_back(ok_through);
  }
  return t;
}

EnclosureCheck oracle_td_enclosure(const OracleTables& oracle,
                                   const EnvelopeSeries& td) {
  EnclosureCheck c;
  const int last = std::min(oracle.steps, td.defined_up_to);
  for (int k = 1; k <= last; ++k) {
    if (!std::isfinite(oracle.max_feasible(k))) continue;
    const double tol = 1e-6 * (1.0 + std::abs(td.E_up(k)));
    if (oracle.max_feasible(k) > td.E_up(k) + tol ||
        oracle.min_feasible(k) < td.E_down(k) - tol)
      c.enclosed = false;
    c.max_defect = std::max({c.max_defect, oracle.max_feasible(k) - td.E_up(k),
                             td.E_down(k) - oracle.min_feasible(k)});
    c.max_slack = std::max({c.max_slack, td.E_up(k) - oracle.max_feasible(k),
                            oracle.min_feasible(k) - td.E_down(k)});
  }
  return c;
}

namespace {

SoundnessCheck oracle_soundness_impl(
    const OracleTables& oracle, const DiscreteSystem& dsys,
    const Trajectory& d, const std::vector<EnvelopeSeries>* per_load,
    const EnvelopeSeries* total, double comfort_tol) {
  SoundnessCheck c;
  int D = oracle.steps;
  if (per_load)
    for (const auto& env : *per_load)
      D = std::min(D, env.defined_up_to);
  if (total) D = std::min(D, total->defined_up_to);

  if (D == 0) return c;
  for (size_t t = 0; t < oracle.cumulative.size(); ++t) {
    const Matrix& cum = oracle.cumulative[t];
    bool inside = true;
    for (int k = 1; k <= D && inside; ++k) {
      if (per_load) {
        for (int j = 0; j < oracle.n_loads && inside; ++j) {
          const auto& env = (*per_load)[j];
          const double tol = 1e-9 * (1.0 + std::abs(env.E_up(k)));
          if (cum(k, j) > env.E_up(k) + tol || cum(k, j) < env.E_down(k) - tol)
            inside = false;
        }
      }
      if (total) {
        const double e = cum.row(k).sum();
        const double tol = 1e-9 * (1.0 + std::abs(total->E_up(k)));
        if (e > total->E_up(k) + tol || e < total->E_down(k) - tol)
          inside = false;
      }
    }
    if (!inside) continue;
    ++c.inside;
    // Comfort through the corridor's defined range.
    if (oracle.comfort_ok_through[t] < D) {
      // Recheck with the looser tolerance before counting a violation.
      Trajectory p;
      p.dt = oracle.dt;
      p.values = Matrix::Zero(oracle.steps, oracle.n_loads);
      for (int k = 1; k <= oracle.steps; ++k)
        p.values.row(k - 1) = (cum.row(k) - cum.row(k - 1)) / oracle.dt;
      const StateTrajectory xs = simulate(dsys, p, d);
      double worst = 0.0;
      for (int k = 1; k <= D; ++k)
        for (int i = 0; i < dsys.state_dim(); ++i) {
          worst = std::max(worst, xs.values(k, i) - dsys.source.x_max(i));
          worst = std::max(worst, dsys.source.x_min(i) - xs.values(k, i));
        }
      if (worst > comfort_tol) {
        ++c.violations;
        c.worst_violation = std::max(c.worst_violation, worst);
      }
    }
  }
  return c;
}

}  // namespace

SoundnessCheck oracle_ti_soundness(const OracleTables& oracle,
                                   const DiscreteSystem& dsys,
                                   const Trajectory& d,
                                   const std::vector<EnvelopeSeries>& per_load,
                                   double comfort_tol) {
  return oracle_soundness_impl(oracle, dsys, d, &per_load, nullptr,
                               comfort_tol);
}

SoundnessCheck oracle_ti_soundness_total(const OracleTables& oracle,
                                         const DiscreteSystem& dsys,
                                         const Trajectory& d,
                                         const EnvelopeSeries& total,
                                         double comfort_tol) {
  return oracle_soundness_impl(oracle, dsys, d, nullptr, &total, comfort_tol);
}

}  // namespace flexenv::verify
