// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance gate. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "../common/dense_oracle.hpp"
#include "sms/experiment.hpp"
#include "sms/groundstate.hpp"
#include "sms/morse.hpp"
#include "sms/nehari.hpp"
#include "sms/parallel.hpp"
#include "sms/poisson.hpp"
#include "sms/topo.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace sms;

namespace
{

// Tolerances.
constexpr double kSolitonTol = 1e-5;
constexpr double kNehariProfileTol = 1e-6;
constexpr double kGroundStateSeconds = 5.0;
constexpr double kPsiCentreTol = 0.01;
constexpr double kTTol = 0.02;
constexpr double kPoissonSeconds = 30.0;
constexpr double kGradTol = 1e-5;
constexpr double kRatioLo = 3.0, kRatioHi = 5.0;
constexpr int kRandomFields = 20;
constexpr double kDerivSeconds = 120.0;
constexpr double kClosedFormTol = 1e-12;
constexpr double kCoupledTol = 1e-9;
constexpr double kIdempotenceTol = 1e-9;
constexpr double kMEpsTol = 0.10;
constexpr double kSweepSeconds = 1800.0;
constexpr double kSlopeLo = 1.7, kSlopeHi = 2.3;
constexpr double kPhotoEnergy = 1.1;
constexpr double kTDeviation = 0.05;
constexpr double kEnergyWindow = 1.1;
constexpr int kBallSeeds = 4;
constexpr double kConcentration = 0.9;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void verdict(int id, const std::string &name, bool pass, const std::string &detail)
{
  failures += !pass;
  std::printf("%s [%d] %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
}

void guarded(int id, const std::string &name, const std::function<void()> &body)
{
  try
  {
    body();
  }
  catch (const std::exception &e)
  {
    verdict(id, name, false, std::string("error: ") + e.what());
  }
}

Field sample(const GridPtr &g, const std::function<double(const Point &)> &f)
{
  Field out(g);
  for (std::size_t i = 0; i < out.size(); ++i)
  {
    out[i] = f(g->coord(i));
  }
  return out;
}

Field smooth_field(const GridPtr &g, std::uint64_t seed, double width, double shift)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(-0.4, 0.4), amp(0.3, 1.5);
  std::array<Point, 3> c{};
  std::array<double, 3> a{};
  for (int k = 0; k < 3; ++k)
  {
    c[k] = {pos(rng), pos(rng), pos(rng)};
    a[k] = amp(rng);
  }
  return sample(g, [&](const Point &x)
                {
                  double v = shift;
                  for (int k = 0; k < 3; ++k)
                  {
                    const double s = distance(x, c[k]) / width;
                    v += a[k] * std::exp(-s * s);
                  }
                  return v;
                });
}

struct Cli
{
  int code = -1;
  json record;
};

// Runs the CLI quietly and loads the record it wrote.
Cli run_cli(const std::string &args, const fs::path &record)
{
  const std::string cmd = std::string(SMS_CLI) + " -q " + args;
  const int status = std::system(cmd.c_str());
  Cli r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(record);
  if (in)
  {
    r.record = json::parse(in, nullptr, false);
    if (r.record.is_discarded())
    {
      r.record = json();
    }
  }
  return r;
}

std::string slurp(const fs::path &p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const fs::path kConfigs = SMS_CONFIG_DIR;

fs::path work_dir()
{
  static const fs::path dir = []
  {
    const fs::path d = fs::current_path() / "acceptance-runs";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// ---------------------------------------------------------------------------

void ground_state()
{
  const auto t0 = Clock::now();
  const RadialProfile p1 = shoot_ground_state(5.0, 1, 1e-12);
  double worst = 0.0;
  for (double x = 0.0; x <= 10.0; x += 1e-3)
  {
    const double exact = std::cbrt(2.5) * std::pow(1.0 / std::cosh(1.5 * x), 2.0 / 3.0);
    worst = std::max(worst, std::abs(eval_profile(p1, x) - exact) / exact);
  }
  const RadialProfile p3 = shoot_ground_state(5.0, 3, 1e-12);
  const double res = p3.nehari_residual();
  const double dt = seconds_since(t0);
  verdict(1, "ground-state oracle",
          worst <= kSolitonTol && res <= kNehariProfileTol && dt < kGroundStateSeconds,
          fmt::format("d=1 max rel err {:.2e} (<= {:.0e}); d=3 Nehari {:.2e} (<= {:.0e}); {:.2f} s (< {} s)", worst,
                      kSolitonTol, res, kNehariProfileTol, dt, kGroundStateSeconds));
}

void poisson()
{
  const auto t0 = Clock::now();
  auto g = build_domain(make_ball(3, 1.0), 0.02);
  Field one = sample(g, [](const Point &) { return 1.0; });
  Params prm;
  prm.eps = 1.0;
  Field v = psi(one, prm, {});
  double centre = 0.0;
  for (std::size_t n = 0; n < g->size(); ++n)
  {
    if (distance(g->coord(n), {0, 0, 0}) < 1e-12)
    {
      centre = v[n];
    }
  }
  const double T = g->cell_volume() * lattice_dot(one, v);
  const double e1 = std::abs(centre - 1.0 / 6.0) * 6.0;
  const double ref = 4.0 * std::numbers::pi / 45.0;
  const double e2 = std::abs(T - ref) / ref;
  const double dt = seconds_since(t0);
  verdict(2, "analytic Poisson check", e1 <= kPsiCentreTol && e2 <= kTTol && dt < kPoissonSeconds,
          fmt::format("psi(0) = {:.6f} rel err {:.2e} (<= {}); T = {:.6f} rel err {:.2e} (<= {}); {:.1f} s (< {} s)",
                      centre, e1, kPsiCentreTol, T, e2, kTTol, dt, kPoissonSeconds));
}

void derivatives()
{
  const auto t0 = Clock::now();
  auto g = build_domain(make_ball(3, 1.0), 0.1);
  Params prm;
  prm.eps = 0.4;
  CgOptions cg;
  cg.rel_tol = 1e-13;
  double worst_grad = 0.0, lo = 1e300, hi = 0.0;
  for (int k = 0; k < kRandomFields; ++k)
  {
    Functional fn(prm, cg);
    const Field u = smooth_field(g, 1000 + k, 0.35, -0.2);
    const Field phi = smooth_field(g, 2000 + k, 0.3, -0.5);
    const double an = inner_h1_eps(fn.sobolev_gradient(u), phi, prm);
    const double s = 1e-4;
    const double fd = (fn.energy(u + s * phi).total - fn.energy(u - s * phi).total) / (2.0 * s);
    worst_grad = std::max(worst_grad, std::abs(an - fd) / std::abs(an));

    const Field hv = fn.hess_vec(u, phi);
    auto err = [&](double h)
    {
      const Field d = (1.0 / (2.0 * h)) * (fn.sobolev_gradient(u + h * phi) - fn.sobolev_gradient(u - h * phi));
      return norm_h1_eps(d - hv, prm);
    };
    const double ratio = err(1e-3) / err(5e-4);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  const double dt = seconds_since(t0);
  verdict(3, "gradient/Hessian correctness",
          worst_grad <= kGradTol && lo >= kRatioLo && hi <= kRatioHi && dt < kDerivSeconds,
          fmt::format("{} fields: gradient max rel err {:.2e} (<= {:.0e}); Hessian ratio in [{:.3f}, {:.3f}] "
                      "(within [{}, {}]); {:.1f} s (< {} s)",
                      kRandomFields, worst_grad, kGradTol, lo, hi, kRatioLo, kRatioHi, dt, kDerivSeconds));
}

void projection()
{
  const double e1 = std::abs(project_t(1, 0, 1, 5) - 1.0);
  const double e2 = std::abs(project_t(2, 0, 1, 5) - std::cbrt(2.0)) / std::cbrt(2.0);
  double lo = 1.0, hi = 2.0;
  for (int k = 0; k < 200; ++k)
  {
    const double mid = 0.5 * (lo + hi);
    (mid * mid * mid - mid * mid - 1.0 > 0.0 ? hi : lo) = mid;
  }
  const double oracle = 0.5 * (lo + hi);
  const double t = project_t(1, 1, 1, 5);
  const double e3 = std::abs(t - oracle);

  auto g = build_domain(make_ball(3, 1.0), 0.1);
  Params prm;
  prm.eps = 0.4;
  Functional fn(prm);
  const Field u = retract(fn, smooth_field(g, 7, 0.3, -0.1));
  double t2 = 0.0;
  retract(fn, u, &t2);
  const double e4 = std::abs(t2 - 1.0);
  verdict(4, "Nehari projection",
          e1 <= kClosedFormTol && e2 <= kClosedFormTol && e3 <= kCoupledTol && e4 <= kIdempotenceTol,
          fmt::format("closed forms {:.1e}, {:.1e} (<= {:.0e}); coupled t = {:.10f} vs oracle {:.10f} "
                      "(|diff| {:.1e} <= {:.0e}); idempotence {:.1e} (<= {:.0e})",
                      e1, e2, kClosedFormTol, t, oracle, e3, kCoupledTol, e4, kIdempotenceTol));
}

void sweep()
{
  const auto t0 = Clock::now();
  const fs::path out = work_dir() / "sweep";
  fs::remove_all(out);
  const Cli r = run_cli(
      fmt::format("sweep-eps --config {} --out {}", (kConfigs / "acceptance_sweep.json").string(), out.string()),
      out / "record.json");
  const double dt = seconds_since(t0);
  if (r.record.is_null() || !r.record.contains("rows"))
  {
    verdict(5, "m_eps -> m_inf", false, fmt::format("sweep failed with exit code {}", r.code));
    verdict(6, "G_eps(W) ~ eps^2", false, "no sweep record");
    verdict(7, "photography energy and scale", false, "no sweep record");
    return;
  }
  const json &rows = r.record["rows"];
  std::vector<double> rel, eps;
  std::string table;
  bool converged = true;
  for (const auto &row : rows)
  {
    converged = converged && row["converged"].get<bool>();
    eps.push_back(row["eps"]);
    rel.push_back(row.value("rel_err_m_inf", 1.0));
    table += fmt::format("{}{:.4f}", table.empty() ? "" : ", ", rel.back());
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < rel.size(); ++i)
  {
    decreasing = decreasing && rel[i] < rel[i - 1];
  }
  verdict(5, "m_eps -> m_inf", converged && decreasing && rel.back() <= kMEpsTol && dt < kSweepSeconds,
          fmt::format("|m_eps - m_inf|/m_inf over eps {{0.4,0.3,0.2,0.15}} = [{}]; strictly decreasing: {}; "
                      "last {:.4f} (<= {}); {:.0f} s (< {} s)",
                      table, decreasing ? "yes" : "no", rel.back(), kMEpsTol, dt, kSweepSeconds));

  const double slope = r.record.value("g_eps_slope", 0.0);
  verdict(6, "G_eps(W) ~ eps^2", converged && slope >= kSlopeLo && slope <= kSlopeHi,
          fmt::format("log-log slope {:.4f} (within [{}, {}])", slope, kSlopeLo, kSlopeHi));

  const json &last = rows.back();
  const double photo = last.value("photo_energy_ratio", 1e9);
  const double dev = std::abs(last.value("t_eps_w", 0.0) - 1.0);
  verdict(7, "photography energy and scale", converged && photo <= kPhotoEnergy && dev <= kTDeviation,
          fmt::format("eps = 0.15, h = {:.5f}: I(Phi)/m_inf = {:.4f} (<= {}); |t - 1| = {:.4f} (<= {})",
                      last.value("h", 0.0), photo, kPhotoEnergy, dev, kTDeviation));
}

struct MultiplicityRun
{
  fs::path dir;
  Cli record;
  Cli morse;
};

MultiplicityRun multiplicity(const std::string &config, const std::string &name)
{
  MultiplicityRun m;
  m.dir = work_dir() / name;
  m.record = run_cli(fmt::format("multiplicity --config {} --out {}", (kConfigs / config).string(), m.dir.string()),
                     m.dir / "record.json");
  m.morse = run_cli(fmt::format("morse --run {}", m.dir.string()), m.dir / "morse.json");
  return m;
}

std::string dense_check_body(const DomainShape &shape, double h, double eps, double r, const Point &xi, bool &ok);

// Coarse solve (<= 20 nodes per axis) checked against the dense oracle.
std::string dense_check(const DomainShape &shape, double h, double eps, double r, const Point &xi, bool &ok)
{
  try
  {
    return dense_check_body(shape, h, eps, r, xi, ok);
  }
  catch (const std::exception &e)
  {
    ok = false;
    return std::string("error: ") + e.what();
  }
}

std::string dense_check_body(const DomainShape &shape, double h, double eps, double r, const Point &xi, bool &ok)
{
  static const RadialProfile prof = shoot_ground_state(5.0, 3, 1e-12);
  Params prm;
  prm.eps = eps;
  prm.r = r;
  auto g = build_domain(shape, h);
  Functional fn(prm);
  const SolveReport rep = solve_critical(fn, photography(xi, prof, fn, g));
  const auto &dims = g->dims();
  const int widest = std::max({dims[0], dims[1], dims[2]});
  const Eigen::VectorXd ev = test::dense_spectrum(rep.solution, prm);
  const int dense = test::dense_negative_count(ev);
  Functional f2(prm);
  const SpectrumReport sp = lowest_spectrum(f2, rep.solution);
  ok = ok && rep.converged && widest <= 20 && dense == 1 && sp.negative_count == 1 && sp.ray_rayleigh < 0.0;
  return fmt::format("{} nodes ({} per axis, <= 20): converged {}, dense index {}, Lanczos index {}, "
                     "lambda_1 {:.5f} vs {:.5f}",
                     g->size(), widest, rep.converged ? "yes" : "no", dense, sp.negative_count, ev(0),
                     sp.eigenvalues.front());
}

void multiplicity_criteria()
{
  const auto t0 = Clock::now();
  const MultiplicityRun shell = multiplicity("shell_multiplicity.json", "shell");
  const MultiplicityRun ball = multiplicity("ball_multiplicity.json", "ball");
  const double dt = seconds_since(t0);

  bool ok8 = true;
  std::string detail;
  const json &sr = shell.record.record;
  const json &br = ball.record.record;
  if (sr.is_null() || br.is_null() || !sr.contains("rows") || !br.contains("rows"))
  {
    verdict(8, "multiplicity vs category", false, "multiplicity runs produced no record");
    verdict(9, "barycentre and concentration", false, "multiplicity runs produced no record");
    return;
  }
  const double minf = sr["m_inf"];
  const double r_shell = sr["r"];
  const int shell_distinct = sr["distinct"];
  const double sep = sr.value("min_class_separation", 0.0);
  double worst_energy = 0.0;
  bool all_converged = true, ray_negative = true;
  for (const json *rec : {&sr, &br})
  {
    for (const auto &row : (*rec)["rows"])
    {
      all_converged = all_converged && row["converged"].get<bool>();
      worst_energy = std::max(worst_energy, row["energy"].get<double>() / minf);
      ray_negative = ray_negative && row["ray_hessian"].get<double>() < 0.0;
    }
  }
  const int ball_rows = static_cast<int>(br["rows"].size());
  const int ball_distinct = br["distinct"];
  ok8 = all_converged && shell_distinct >= 2 && sep > 0.5 * r_shell && worst_energy <= kEnergyWindow &&
        ball_distinct == 1 && ball_rows >= kBallSeeds && ray_negative;
  detail = fmt::format("shell: {} distinct, beta separation {:.3f} (> r/2 = {:.3f}); ball: {} class from {} seeds; "
                       "max I/m_inf {:.4f} (<= {}); all converged: {}; <Hu,u> < 0 at all {} critical points: {}",
                       shell_distinct, sep, 0.5 * r_shell, ball_distinct, ball_rows, worst_energy, kEnergyWindow,
                       all_converged ? "yes" : "no", sr["rows"].size() + br["rows"].size(), ray_negative ? "yes" : "no");

  std::vector<int> indices;
  for (const MultiplicityRun *m : {&shell, &ball})
  {
    const json &mj = m->morse.record;
    if (mj.is_null() || !mj.contains("entries"))
    {
      ok8 = false;
      continue;
    }
    for (const auto &e : mj["entries"])
    {
      indices.push_back(e["morse_index"]);
      ok8 = ok8 && e["morse_index"] == 1 && e["ray_rayleigh"].get<double>() < 0.0;
    }
  }
  std::string idx;
  for (int k : indices)
  {
    idx += (idx.empty() ? "" : ",") + std::to_string(k);
  }
  detail += fmt::format("; Lanczos indices [{}]", idx);
  detail += "; coarse ball " + dense_check(make_ball(3, 1.0), 0.125, 0.5, 0.9, {0, 0, 0}, ok8);
  detail += "; coarse shell " + dense_check(make_shell(3, 0.5, 1.5), 0.17, 0.7, 0.45, {1, 0, 0}, ok8);
  detail += fmt::format("; {:.0f} s", dt);
  verdict(8, "multiplicity vs category", ok8, detail);

  bool ok9 = true, outer = true;
  double worst_conc = 1.0;
  int checked = 0;
  for (const json *rec : {&sr, &br})
  {
    ok9 = ok9 && (*rec)["eps"].get<double>() == 0.15;
    for (const auto &row : (*rec)["rows"])
    {
      ++checked;
      outer = outer && row["membership"] != "neither";
      worst_conc = std::min(worst_conc, row["concentration"].get<double>());
    }
  }
  ok9 = ok9 && outer && worst_conc >= kConcentration && checked > 0;
  verdict(9, "barycentre and concentration", ok9,
          fmt::format("{} accepted solutions at eps = 0.15: all beta(u) in the outer set: {}; min concentration in "
                      "B(beta, r/2) {:.6f} (>= {})",
                      checked, outer ? "yes" : "no", worst_conc, kConcentration));

  // Second identical run for the determinism criterion.
  const fs::path again = work_dir() / "ball-again";
  const Cli rerun = run_cli(fmt::format("multiplicity --config {} --out {}",
                                        (kConfigs / "ball_multiplicity.json").string(), again.string()),
                            again / "record.json");
  int compared = 0, identical = 0;
  for (const auto &e : fs::directory_iterator(ball.dir / "solutions"))
  {
    if (e.path().extension() == ".smsfield")
    {
      ++compared;
      identical += slurp(e.path()) == slurp(again / "solutions" / e.path().filename());
    }
  }
  verdict(10, "determinism", rerun.code == 0 && compared > 0 && identical == compared,
          fmt::format("ball multiplicity run twice: {}/{} field dumps bit-identical", identical, compared));
}

}  // namespace

int main()
{
  parallel::configure_threads();
  std::printf("sms acceptance, threads = %d\n", parallel::thread_count());
  guarded(1, "ground-state oracle", ground_state);
  guarded(2, "analytic Poisson check", poisson);
  guarded(3, "gradient/Hessian correctness", derivatives);
  guarded(4, "Nehari projection", projection);
  guarded(5, "sweep", sweep);
  guarded(8, "multiplicity", multiplicity_criteria);
  std::printf("%d criterion failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
