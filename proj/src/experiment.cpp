// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#include "sms/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "sms/mask.hpp"

namespace sms
{

namespace fs = std::filesystem;

namespace
{

[[noreturn]] void config_error(const std::string &msg)
{
  throw Error(ErrorCode::Parse, "config: " + msg);
}

std::string now_iso()
{
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void check_keys(const json &obj, const std::string &where, std::initializer_list<const char *> allowed)
{
  if (!obj.is_object())
  {
    config_error(fmt::format("'{}' must be an object", where));
  }
  for (const auto &[key, _] : obj.items())
  {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char *a) { return key == a; }))
    {
      config_error(fmt::format("unknown key '{}' in {}", key, where));
    }
  }
}

double get_number(const json &obj, const char *key, double fallback)
{
  if (!obj.contains(key) || obj[key].is_null())
  {
    return fallback;
  }
  if (!obj[key].is_number())
  {
    config_error(fmt::format("'{}' must be a number", key));
  }
  return obj[key].get<double>();
}

int get_int(const json &obj, const char *key, int fallback)
{
  if (!obj.contains(key))
  {
    return fallback;
  }
  if (!obj[key].is_number_integer())
  {
    config_error(fmt::format("'{}' must be an integer", key));
  }
  return obj[key].get<int>();
}

bool get_bool(const json &obj, const char *key, bool fallback)
{
  if (!obj.contains(key))
  {
    return fallback;
  }
  if (!obj[key].is_boolean())
  {
    config_error(fmt::format("'{}' must be a boolean", key));
  }
  return obj[key].get<bool>();
}

std::string get_string(const json &obj, const char *key, const std::string &fallback)
{
  if (!obj.contains(key))
  {
    return fallback;
  }
  if (!obj[key].is_string())
  {
    config_error(fmt::format("'{}' must be a string", key));
  }
  return obj[key].get<std::string>();
}

Point parse_point(const json &j, int dim)
{
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
  {
    config_error(fmt::format("points must be arrays of {} numbers", dim));
  }
  Point x{};
  for (int a = 0; a < dim; ++a)
  {
    if (!j[a].is_number())
    {
      config_error("point coordinates must be numbers");
    }
    x[a] = j[a].get<double>();
  }
  return x;
}

json point_json(const Point &x, int dim)
{
  json out = json::array();
  for (int a = 0; a < dim; ++a)
  {
    out.push_back(x[a]);
  }
  return out;
}

DomainShape parse_shape(const json &j)
{
  if (j.is_string())
  {
    return DomainShape::parse(j.get<std::string>());
  }
  check_keys(j, "shape", {"type", "dim", "center", "radius", "inner_radius", "outer_radius", "lo", "hi",
                          "major_radius", "minor_radius", "path"});
  const std::string type = get_string(j, "type", "");
  const int dim = get_int(j, "dim", 3);
  if (dim != 2 && dim != 3)
  {
    config_error("shape dim must be 2 or 3");
  }
  const Point center = j.contains("center") ? parse_point(j["center"], dim) : Point{};
  DomainShape s;
  if (type == "ball")
  {
    s = make_ball(dim, get_number(j, "radius", 1.0), center);
  }
  else if (type == "shell")
  {
    s = make_shell(dim, get_number(j, "inner_radius", 0.5), get_number(j, "outer_radius", 1.5), center);
  }
  else if (type == "box")
  {
    if (!j.contains("lo") || !j.contains("hi"))
    {
      config_error("box needs 'lo' and 'hi'");
    }
    s = make_box(dim, parse_point(j["lo"], dim), parse_point(j["hi"], dim));
  }
  else if (type == "torus")
  {
    if (dim != 3)
    {
      config_error("torus is three-dimensional");
    }
    s = make_torus(get_number(j, "major_radius", 1.0), get_number(j, "minor_radius", 0.4), center);
  }
  else if (type == "mask")
  {
    const std::string path = get_string(j, "path", "");
    s.dim = read_mask_header(path).dim;
    s.geometry = MaskFile{path};
  }
  else
  {
    config_error(fmt::format("unknown shape type '{}'", type));
  }
  s.validate();
  return s;
}

double bounding_extent(const DomainShape &shape)
{
  return std::visit(
      [&](const auto &g) -> double
      {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Ball>)
        {
          return 2.0 * g.radius;
        }
        else if constexpr (std::is_same_v<T, Shell>)
        {
          return 2.0 * g.outer_radius;
        }
        else if constexpr (std::is_same_v<T, Box>)
        {
          double e = 0.0;
          for (int a = 0; a < shape.dim; ++a)
          {
            e = std::max(e, g.hi[a] - g.lo[a]);
          }
          return e;
        }
        else if constexpr (std::is_same_v<T, SolidTorus>)
        {
          return 2.0 * (g.major_radius + g.minor_radius);
        }
        else
        {
          return 0.0;
        }
      },
      shape.geometry);
}

void write_json(const fs::path &path, const json &j)
{
  std::ofstream out(path);
  if (!out)
  {
    throw Error(ErrorCode::Io, fmt::format("cannot open '{}' for writing", path.string()));
  }
  out << j.dump(2) << '\n';
}

json read_json(const fs::path &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw Error(ErrorCode::Io, fmt::format("cannot open '{}'", path.string()));
  }
  try
  {
    return json::parse(in);
  }
  catch (const json::exception &e)
  {
    throw Error(ErrorCode::Parse, fmt::format("{}: {}", path.string(), e.what()));
  }
}

class CsvWriter
{
public:
  CsvWriter(const fs::path &path, const std::string &header) : out_(path)
  {
    if (!out_)
    {
      throw Error(ErrorCode::Io, fmt::format("cannot open '{}' for writing", path.string()));
    }
    out_ << header << '\n';
  }
  void row(const std::string &line) { out_ << line << '\n'; }

private:
  std::ofstream out_;
};

json check(const std::string &name, double value, const std::string &rule, bool pass)
{
  return {{"name", name}, {"value", value}, {"rule", rule}, {"pass", pass}};
}

bool all_pass(const json &checks)
{
  return std::all_of(checks.begin(), checks.end(), [](const json &c) { return c["pass"].get<bool>(); });
}

void save_solution(const fs::path &dir, const std::string &stem, const SolveReport &rep, double eps,
                   bool write_field_dump, json &row)
{
  json r = report_to_json(rep);
  r["eps"] = eps;
  if (write_field_dump)
  {
    write_field(dir / (stem + ".smsfield"), rep.solution);
    r["field"] = stem + ".smsfield";
    row["field"] = "solutions/" + stem + ".smsfield";
  }
  write_json(dir / (stem + ".json"), r);
  row["report"] = "solutions/" + stem + ".json";
}

json record_header(const ExperimentConfig &cfg, const char *command, const std::string &started)
{
  json rec;
  rec["schema"] = "sms-run/1";
  rec["command"] = command;
  rec["config"] = cfg.canonical();
  rec["config_hash"] = cfg.hash();
  rec["version"] = kVersion;
  rec["started"] = started;
  return rec;
}

}  // namespace

std::string fnv1a_hex(const std::string &text)
{
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text)
  {
    h ^= c;
    h *= 1099511628211ull;
  }
  return fmt::format("{:016x}", h);
}

double ExperimentConfig::cutoff() const
{
  return r > 0.0 ? r : r_fraction * shape.inradius();
}

double ExperimentConfig::spacing_for(double eps) const
{
  if (shape.is_mask())
  {
    return read_mask_header(std::get<MaskFile>(shape.geometry).path).h;
  }
  double hh = h > 0.0 ? h : eps / eps_over_h;
  const double floor_h = bounding_extent(shape) / (max_axis_nodes - 1);
  return std::max(hh, floor_h);
}

Params ExperimentConfig::params_for(double eps) const
{
  Params prm;
  prm.eps = eps;
  prm.omega = omega;
  prm.q = q;
  prm.p = p;
  prm.r = cutoff();
  prm.validate();
  return prm;
}

std::vector<Point> ExperimentConfig::seed_points() const
{
  if (seed_generator == "explicit")
  {
    return seeds;
  }
  return admissible_seeds(shape, seed_count);
}

json ExperimentConfig::canonical() const
{
  json j;
  j["schema"] = kConfigSchema;
  j["shape"] = shape.canonical();
  j["grid"] = {{"h", h}, {"eps_over_h", eps_over_h}, {"max_axis_nodes", max_axis_nodes}};
  j["params"] = {{"eps", eps_list}, {"omega", omega}, {"q", q}, {"p", p}, {"r", cutoff()}, {"r_fraction", r_fraction}};
  json pts = json::array();
  for (const Point &x : seeds)
  {
    pts.push_back(point_json(x, shape.dim));
  }
  j["seeds"] = {{"generator", seed_generator}, {"points", pts},         {"count", seed_count},
                {"perturbed_copies", perturbed_copies},    {"perturbation", perturbation},
                {"rng_seed", rng_seed}};
  j["delta"] = delta;
  j["assert"] = assert_checks;
  j["descent"] = {{"grad_tol", descent.grad_tol},         {"nehari_tol", descent.nehari_tol},
                  {"max_iter", descent.max_iter},         {"initial_step", descent.initial_step},
                  {"backtrack", descent.backtrack},       {"armijo_c", descent.armijo_c},
                  {"step_floor", descent.step_floor},     {"memory", descent.memory},
                  {"energy_noise", descent.energy_noise}};
  j["cg"] = {{"rel_tol", cg.rel_tol},
             {"max_iter", cg.max_iter},
             {"deterministic", cg.deterministic},
             {"preconditioner", cg.preconditioner == Preconditioner::Ssor ? "ssor" : "none"},
             {"ssor_omega", cg.ssor_omega}};
  j["spectrum"] = {{"count", spectrum.count},
                   {"tol", spectrum.tol},
                   {"max_dim", spectrum.max_dim},
                   {"degeneracy", spectrum.degeneracy}};
  j["write_fields"] = write_fields;
  return j;
}

std::string ExperimentConfig::hash() const
{
  return fnv1a_hex(canonical().dump());
}

ExperimentConfig parse_config(const json &j)
{
  check_keys(j, "config", {"schema", "shape", "grid", "params", "seeds", "delta", "assert", "descent", "cg",
                           "spectrum", "output_dir", "write_fields", "comment"});
  if (get_string(j, "schema", "") != kConfigSchema)
  {
    config_error(fmt::format("schema must be \"{}\"", kConfigSchema));
  }
  if (!j.contains("shape"))
  {
    config_error("missing 'shape'");
  }
  ExperimentConfig c;
  try
  {
    c.shape = parse_shape(j["shape"]);
  }
  catch (const Error &e)
  {
    if (e.code() == ErrorCode::Parse)
    {
      throw;
    }
    config_error(e.what());
  }
  const int dim = c.shape.dim;
  if (j.contains("grid"))
  {
    const json &g = j["grid"];
    check_keys(g, "grid", {"h", "eps_over_h", "max_axis_nodes"});
    c.h = get_number(g, "h", c.h);
    c.eps_over_h = get_number(g, "eps_over_h", c.eps_over_h);
    c.max_axis_nodes = get_int(g, "max_axis_nodes", c.max_axis_nodes);
  }
  if (j.contains("params"))
  {
    const json &p = j["params"];
    check_keys(p, "params", {"eps", "omega", "q", "p", "r", "r_fraction"});
    if (p.contains("eps"))
    {
      if (p["eps"].is_number())
      {
        c.eps_list = {p["eps"].get<double>()};
      }
      else if (p["eps"].is_array())
      {
        c.eps_list.clear();
        for (const auto &e : p["eps"])
        {
          if (!e.is_number())
          {
            config_error("'eps' entries must be numbers");
          }
          c.eps_list.push_back(e.get<double>());
        }
      }
      else
      {
        config_error("'eps' must be a number or a list");
      }
    }
    c.omega = get_number(p, "omega", c.omega);
    c.q = get_number(p, "q", c.q);
    c.p = get_number(p, "p", c.p);
    c.r = get_number(p, "r", c.r);
    c.r_fraction = get_number(p, "r_fraction", c.r_fraction);
  }
  if (j.contains("seeds"))
  {
    const json &s = j["seeds"];
    check_keys(s, "seeds", {"generator", "points", "count", "perturbed_copies", "perturbation", "rng_seed"});
    c.seed_generator = get_string(s, "generator", c.seed_generator);
    if (s.contains("points"))
    {
      if (!s["points"].is_array())
      {
        config_error("'points' must be a list");
      }
      for (const auto &x : s["points"])
      {
        c.seeds.push_back(parse_point(x, dim));
      }
      if (!s.contains("generator"))
      {
        c.seed_generator = "explicit";
      }
    }
    c.seed_count = get_int(s, "count", c.seed_count);
    c.perturbed_copies = get_int(s, "perturbed_copies", c.perturbed_copies);
    c.perturbation = get_number(s, "perturbation", c.perturbation);
    if (s.contains("rng_seed"))
    {
      if (!s["rng_seed"].is_number_unsigned())
      {
        config_error("'rng_seed' must be a non-negative integer");
      }
      c.rng_seed = s["rng_seed"].get<std::uint64_t>();
    }
  }
  c.delta = get_number(j, "delta", c.delta);
  c.assert_checks = get_bool(j, "assert", c.assert_checks);
  if (j.contains("descent"))
  {
    const json &d = j["descent"];
    check_keys(d, "descent", {"grad_tol", "nehari_tol", "max_iter", "initial_step", "backtrack", "armijo_c",
                              "step_floor", "memory", "energy_noise"});
    auto &o = c.descent;
    o.grad_tol = get_number(d, "grad_tol", o.grad_tol);
    o.nehari_tol = get_number(d, "nehari_tol", o.nehari_tol);
    o.max_iter = get_int(d, "max_iter", o.max_iter);
    o.initial_step = get_number(d, "initial_step", o.initial_step);
    o.backtrack = get_number(d, "backtrack", o.backtrack);
    o.armijo_c = get_number(d, "armijo_c", o.armijo_c);
    o.step_floor = get_number(d, "step_floor", o.step_floor);
    o.memory = get_int(d, "memory", o.memory);
    o.energy_noise = get_number(d, "energy_noise", o.energy_noise);
  }
  if (j.contains("cg"))
  {
    const json &d = j["cg"];
    check_keys(d, "cg", {"rel_tol", "max_iter", "deterministic", "preconditioner", "ssor_omega"});
    auto &o = c.cg;
    o.rel_tol = get_number(d, "rel_tol", o.rel_tol);
    o.max_iter = get_int(d, "max_iter", o.max_iter);
    o.deterministic = get_bool(d, "deterministic", o.deterministic);
    const std::string pre = get_string(d, "preconditioner", "none");
    if (pre == "none")
    {
      o.preconditioner = Preconditioner::None;
    }
    else if (pre == "ssor")
    {
      o.preconditioner = Preconditioner::Ssor;
    }
    else
    {
      config_error("'preconditioner' must be \"none\" or \"ssor\"");
    }
    o.ssor_omega = get_number(d, "ssor_omega", o.ssor_omega);
  }
  if (j.contains("spectrum"))
  {
    const json &d = j["spectrum"];
    check_keys(d, "spectrum", {"count", "tol", "max_dim", "degeneracy"});
    auto &o = c.spectrum;
    o.count = get_int(d, "count", o.count);
    o.tol = get_number(d, "tol", o.tol);
    o.max_dim = get_int(d, "max_dim", o.max_dim);
    o.degeneracy = get_number(d, "degeneracy", o.degeneracy);
  }
  c.output_dir = get_string(j, "output_dir", c.output_dir);
  c.write_fields = get_bool(j, "write_fields", c.write_fields);

  // Invariants.
  if (c.eps_list.empty())
  {
    config_error("'eps' list is empty");
  }
  if (!(c.eps_over_h > 0.0) || c.h < 0.0 || c.max_axis_nodes < 8)
  {
    config_error("grid needs h >= 0, eps_over_h > 0, max_axis_nodes >= 8");
  }
  if (c.seed_generator != "auto" && c.seed_generator != "explicit")
  {
    config_error("seed generator must be \"auto\" or \"explicit\"");
  }
  if (c.seed_generator == "explicit" && c.seeds.empty())
  {
    config_error("explicit seed generator needs 'points'");
  }
  if (c.seed_count < 1 || c.perturbed_copies < 0 || c.perturbation < 0.0 || c.delta < 0.0)
  {
    config_error("seed count >= 1, perturbed_copies >= 0, perturbation >= 0, delta >= 0 required");
  }
  if (!(c.spectrum.count >= 1 && c.spectrum.count <= 12) || !(c.spectrum.tol > 0.0) || c.spectrum.max_dim < 2)
  {
    config_error("spectrum needs 1 <= count <= 12, tol > 0, max_dim >= 2");
  }
  try
  {
    c.descent.validate();
    c.cg.validate();
  }
  catch (const Error &e)
  {
    config_error(e.what());
  }
  if (!(c.p > 4.0 && c.p < 6.0))
  {
    config_error("p out of range (4,6)");
  }
  if (!(c.omega >= 0.0) || !(c.q > 0.0))
  {
    config_error("omega >= 0 and q > 0 required");
  }
  const double r = c.cutoff();
  if (!(r > 0.0) || !(r < c.shape.inradius()))
  {
    config_error(fmt::format("cutoff r = {} must lie in (0, inradius = {})", r, c.shape.inradius()));
  }
  for (double eps : c.eps_list)
  {
    if (!(eps > 0.0))
    {
      config_error("eps must be positive");
    }
    const double hh = c.spacing_for(eps);
    if (eps < 4.0 * hh)
    {
      config_error(fmt::format("eps = {} is below 4h = {}", eps, 4.0 * hh));
    }
  }
  return c;
}

ExperimentConfig load_config(const fs::path &path)
{
  json j;
  {
    std::ifstream in(path);
    if (!in)
    {
      throw Error(ErrorCode::Io, fmt::format("cannot open config '{}'", path.string()));
    }
    try
    {
      j = json::parse(in);
    }
    catch (const json::exception &e)
    {
      throw Error(ErrorCode::Parse, fmt::format("config: {}", e.what()));
    }
  }
  return parse_config(j);
}

json report_to_json(const SolveReport &rep, bool with_trace)
{
  const int dim = rep.solution.grid_ptr() ? rep.solution.grid().dim() : 3;
  json j;
  j["converged"] = rep.converged;
  j["message"] = rep.message;
  j["energy"] = {{"total", rep.energy.total},
                 {"kinetic", rep.energy.kinetic},
                 {"coupling", rep.energy.coupling},
                 {"potential", rep.energy.potential}};
  j["grad_norm"] = rep.grad_norm;
  j["tangent_grad_norm"] = rep.tangent_grad_norm;
  j["norm"] = rep.norm;
  j["nehari_abs"] = rep.nehari_abs;
  j["iterations"] = rep.iterations;
  j["barycenter"] = point_json(rep.barycenter, dim);
  j["min_value"] = rep.min_value;
  j["max_value"] = rep.max_value;
  j["ray_hessian"] = rep.ray_hessian;
  j["wall_seconds"] = rep.wall_seconds;
  if (with_trace)
  {
    json t = json::array();
    for (const auto &e : rep.trace)
    {
      t.push_back({e.iteration, e.energy, e.grad_norm, e.step});
    }
    j["trace_columns"] = {"iteration", "energy", "grad_norm", "step"};
    j["trace"] = std::move(t);
  }
  return j;
}

json spectrum_to_json(const SpectrumReport &s)
{
  json j;
  j["eigenvalues"] = s.eigenvalues;
  j["residuals"] = s.residuals;
  std::vector<int> acc(s.accepted.begin(), s.accepted.end());
  j["accepted"] = acc;
  j["morse_index"] = s.negative_count;
  j["near_zero"] = s.near_zero_count;
  j["lambda_max"] = s.lambda_max;
  j["ray_rayleigh"] = s.ray_rayleigh;
  j["basis_size"] = s.basis_size;
  j["hess_vec_calls"] = s.hess_vec_calls;
  j["converged"] = s.converged;
  return j;
}

double loglog_slope(const std::vector<double> &x, const std::vector<double> &y)
{
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n)
  {
    throw Error(ErrorCode::InvalidArgument, "regression needs at least two points");
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i)
  {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

json run_groundstate(double p, int d, const fs::path &out_dir)
{
  const RadialProfile prof = shoot_ground_state(p, d, 1e-12);
  fs::create_directories(out_dir);
  export_profile_csv(prof, out_dir / "profile.csv");
  export_profile_json(prof, out_dir / "profile.json");
  return read_json(out_dir / "profile.json");
}

CommandResult run_sweep(const ExperimentConfig &cfg)
{
  const std::string started = now_iso();
  const fs::path out = cfg.output_dir;
  fs::create_directories(out / "solutions");
  const RadialProfile prof = shoot_ground_state(cfg.p, cfg.shape.dim, 1e-12);
  const double minf = prof.m_inf;
  const std::string hash = cfg.hash();

  json rec = record_header(cfg, "sweep-eps", started);
  rec["m_inf"] = minf;
  json rows = json::array();
  CsvWriter csv(out / "sweep.csv",
                "config_hash,eps,h,nodes,m_eps,rel_err_m_inf,g_eps_w,t_eps_w,photo_energy_ratio,iterations,"
                "converged,report");
  std::vector<double> eps_ok, g_ok, rel_ok, t_ok, photo_ok;
  int failures = 0;
  for (std::size_t k = 0; k < cfg.eps_list.size(); ++k)
  {
    const double eps = cfg.eps_list[k];
    json row;
    row["eps"] = eps;
    try
    {
      const Params prm = cfg.params_for(eps);
      const double h = cfg.spacing_for(eps);
      GridPtr grid = build_domain(cfg.shape, h);
      row["h"] = h;
      row["nodes"] = grid->size();
      Functional fn(prm, cfg.cg);
      const std::vector<Point> seeds = cfg.seed_points();
      const Field w = sample_bump(seeds.front(), prof, prm, grid);
      double t = 0.0;
      const Field phi = retract(fn, w, &t);
      const double photo = fn.energy(phi).total;
      const double gw = fn.g_eps(w);
      row["g_eps_w"] = gw;
      row["t_eps_w"] = t;
      row["photo_energy_ratio"] = photo / minf;
      MEpsEstimate est = estimate_m_eps(fn, prof, grid, seeds, cfg.descent);
      std::size_t best = 0;
      int iters = 0;
      for (std::size_t i = 0; i < est.reports.size(); ++i)
      {
        iters += est.reports[i].iterations;
        if (est.reports[i].converged && est.reports[i].energy.total == est.m_eps)
        {
          best = i;
        }
      }
      const double rel = std::abs(est.m_eps - minf) / minf;
      row["m_eps"] = est.m_eps;
      row["rel_err_m_inf"] = rel;
      row["iterations"] = iters;
      row["converged"] = true;
      save_solution(out / "solutions", fmt::format("eps_{}", k), est.reports[best], eps, cfg.write_fields, row);
      eps_ok.push_back(eps);
      g_ok.push_back(gw);
      rel_ok.push_back(rel);
      t_ok.push_back(std::abs(t - 1.0));
      photo_ok.push_back(photo / minf);
      csv.row(fmt::format("{},{:.6g},{:.10g},{},{:.12g},{:.6e},{:.10e},{:.10f},{:.8f},{},1,{}", hash, eps, h,
                          grid->size(), est.m_eps, rel, gw, t, photo / minf, iters,
                          row["report"].get<std::string>()));
    }
    catch (const Error &e)
    {
      ++failures;
      row["converged"] = false;
      row["error"] = e.what();
      csv.row(fmt::format("{},{:.6g},,,,,,,,,0,", hash, eps));
    }
    rows.push_back(row);
  }
  rec["rows"] = rows;

  json checks = json::array();
  if (failures == 0 && eps_ok.size() >= 2)
  {
    bool decreasing = true, t_decreasing = true;
    for (std::size_t i = 1; i < rel_ok.size(); ++i)
    {
      decreasing = decreasing && rel_ok[i] < rel_ok[i - 1];
      t_decreasing = t_decreasing && t_ok[i] < t_ok[i - 1];
    }
    const double slope = loglog_slope(eps_ok, g_ok);
    rec["g_eps_slope"] = slope;
    checks.push_back(check("m_eps_rel_err_strictly_decreasing", rel_ok.back(), "strictly decreasing in eps order",
                           decreasing));
    checks.push_back(check("m_eps_rel_err_last", rel_ok.back(), "<= 0.10", rel_ok.back() <= 0.10));
    checks.push_back(check("g_eps_loglog_slope", slope, "in [1.7, 2.3]", slope >= 1.7 && slope <= 2.3));
    checks.push_back(check("t_eps_deviation_decreasing", t_ok.back(), "strictly decreasing", t_decreasing));
    checks.push_back(check("t_eps_deviation_last", t_ok.back(), "<= 0.05", t_ok.back() <= 0.05));
    checks.push_back(
        check("photography_energy_last", photo_ok.back(), "<= 1.1 m_inf", photo_ok.back() <= 1.1));
  }
  rec["checks"] = checks;
  rec["finished"] = now_iso();
  write_json(out / "record.json", rec);

  CommandResult res;
  res.record = std::move(rec);
  if (failures > 0)
  {
    res.exit_code = 3;
  }
  else if (cfg.assert_checks && !all_pass(checks))
  {
    res.exit_code = 4;
  }
  return res;
}

CommandResult run_multiplicity(const ExperimentConfig &cfg)
{
  const std::string started = now_iso();
  const fs::path out = cfg.output_dir;
  fs::create_directories(out / "solutions");
  const DomainTopology topo = topology_catalog(cfg.shape);
  const RadialProfile prof = shoot_ground_state(cfg.p, cfg.shape.dim, 1e-12);
  const double minf = prof.m_inf;
  const double eps = cfg.eps_list.back();
  const Params prm = cfg.params_for(eps);
  const double h = cfg.spacing_for(eps);
  GridPtr grid = build_domain(cfg.shape, h);
  Functional fn(prm, cfg.cg);
  const std::string hash = cfg.hash();

  struct SeedSpec
  {
    std::string label;
    Point xi;
    int copy;  // -1: plain photography
  };
  std::vector<SeedSpec> specs;
  const std::vector<Point> points = cfg.seed_points();
  for (std::size_t k = 0; k < points.size(); ++k)
  {
    specs.push_back({fmt::format("s{}", k), points[k], -1});
  }
  for (int c = 0; c < cfg.perturbed_copies; ++c)
  {
    specs.push_back({fmt::format("s0p{}", c), points.front(), c});
  }

  json rec = record_header(cfg, "multiplicity", started);
  rec["m_inf"] = minf;
  rec["eps"] = eps;
  rec["h"] = h;
  rec["nodes"] = grid->size();
  rec["r"] = prm.r;
  rec["topology"] = {{"category", topo.category},
                     {"betti", topo.betti},
                     {"poincare", topo.poincare_string()},
                     {"morse_lower_bound", topo.morse_lower_bound()}};

  CsvWriter csv(out / "multiplicity.csv",
                "config_hash,seed,xi_x,xi_y,xi_z,converged,energy,energy_ratio,beta_x,beta_y,beta_z,membership,"
                "concentration,class,iterations,report");
  std::vector<SolveReport> reps;
  std::vector<std::size_t> class_rep;
  json rows = json::array();
  bool all_outer = true, all_low = true;
  int accepted = 0;
  double min_concentration = 1.0;
  for (const SeedSpec &s : specs)
  {
    json row;
    row["seed"] = s.label;
    row["xi"] = point_json(s.xi, cfg.shape.dim);
    Field u0 = photography(s.xi, prof, fn, grid);
    if (s.copy >= 0)
    {
      std::mt19937_64 rng(cfg.rng_seed + static_cast<std::uint64_t>(s.copy));
      std::uniform_real_distribution<double> dist(-1.0, 1.0);
      const double amp = cfg.perturbation * max_value(u0);
      for (std::size_t i = 0; i < u0.size(); ++i)
      {
        u0[i] += amp * dist(rng);
      }
    }
    SolveReport rep = solve_critical(fn, u0, cfg.descent);
    const Membership m = inner_outer_membership(rep.barycenter, *grid, prm.r);
    const double conc = concentration_fraction(rep.solution, prm.p, rep.barycenter, 0.5 * prm.r);
    int cls = -1;
    if (rep.converged)
    {
      ++accepted;
      for (std::size_t c = 0; c < class_rep.size(); ++c)
      {
        if (!distinct_solutions(reps[class_rep[c]], rep, prm.r))
        {
          cls = static_cast<int>(c);
          break;
        }
      }
      if (cls < 0)
      {
        cls = static_cast<int>(class_rep.size());
        class_rep.push_back(reps.size());
      }
      all_outer = all_outer && m != Membership::Neither;
      all_low = all_low && rep.energy.total <= (1.0 + cfg.delta) * minf;
      min_concentration = std::min(min_concentration, conc);
    }
    row["converged"] = rep.converged;
    row["message"] = rep.message;
    row["energy"] = rep.energy.total;
    row["energy_ratio"] = rep.energy.total / minf;
    row["barycenter"] = point_json(rep.barycenter, cfg.shape.dim);
    row["membership"] = to_string(m);
    row["concentration"] = conc;
    row["class"] = cls;
    row["iterations"] = rep.iterations;
    row["ray_hessian"] = rep.ray_hessian;
    save_solution(out / "solutions", s.label, rep, eps, cfg.write_fields, row);
    csv.row(fmt::format("{},{},{:.10g},{:.10g},{:.10g},{},{:.12g},{:.8f},{:.10g},{:.10g},{:.10g},{},{:.8f},{},{},{}",
                        hash, s.label, s.xi[0], s.xi[1], s.xi[2], rep.converged ? 1 : 0, rep.energy.total,
                        rep.energy.total / minf, rep.barycenter[0], rep.barycenter[1], rep.barycenter[2],
                        to_string(m), conc, cls, rep.iterations, row["report"].get<std::string>()));
    rows.push_back(row);
    reps.push_back(std::move(rep));
  }
  rec["rows"] = rows;

  json classes = json::array();
  double min_sep = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < class_rep.size(); ++c)
  {
    const SolveReport &r = reps[class_rep[c]];
    json cj;
    cj["class"] = c;
    cj["seed"] = specs[class_rep[c]].label;
    cj["energy"] = r.energy.total;
    cj["barycenter"] = point_json(r.barycenter, cfg.shape.dim);
    if (cfg.write_fields)
    {
      cj["field"] = "solutions/" + specs[class_rep[c]].label + ".smsfield";
    }
    classes.push_back(cj);
    for (std::size_t d = 0; d < c; ++d)
    {
      min_sep = std::min(min_sep, distance(r.barycenter, reps[class_rep[d]].barycenter));
    }
  }
  rec["classes"] = classes;
  rec["distinct"] = class_rep.size();
  rec["accepted"] = accepted;
  if (std::isfinite(min_sep))
  {
    rec["min_class_separation"] = min_sep;
  }

  json checks = json::array();
  checks.push_back(check("distinct_vs_category", static_cast<double>(class_rep.size()),
                         fmt::format(">= cat = {}", topo.category),
                         static_cast<int>(class_rep.size()) >= topo.category));
  checks.push_back(check("barycenters_in_outer_set", all_outer ? 1.0 : 0.0, "every accepted beta(u) in outer set",
                         all_outer && accepted > 0));
  checks.push_back(check("energies_below_window", all_low ? 1.0 : 0.0,
                         fmt::format("<= (1 + {}) m_inf", cfg.delta), all_low && accepted > 0));
  rec["min_concentration"] = min_concentration;
  rec["checks"] = checks;
  rec["finished"] = now_iso();
  write_json(out / "record.json", rec);

  CommandResult res;
  res.record = std::move(rec);
  if (accepted == 0)
  {
    res.exit_code = 3;
  }
  else if (!all_pass(checks))
  {
    res.exit_code = 4;
  }
  return res;
}

CommandResult run_diagnose(const ExperimentConfig &cfg, const fs::path &field_path, double eps)
{
  const std::string started = now_iso();
  const Field u = read_field(field_path);
  Params prm = cfg.params_for(eps);
  const double p = prm.p;
  if (!(max_value(u) > 0.0))
  {
    throw Error(ErrorCode::InvalidArgument, "u+ vanishes");
  }
  const RadialProfile prof = shoot_ground_state(p, u.grid().dim(), 1e-12);
  const double minf = prof.m_inf;
  Functional fn(prm, cfg.cg);
  const EnergyBreakdown e = fn.energy(u);
  const RayCoefficients c = fn.ray(u);
  const double g = prm.omega > 0.0 ? c.coupling / prm.omega : fn.g_eps(u);
  const double nres = c.norm_sq + c.coupling - c.lp_power;
  const double id_norm = (0.5 - 1.0 / p) * c.norm_sq + prm.omega * (0.25 - 1.0 / p) * g;
  const double id_mass = (0.5 - 1.0 / p) * c.lp_power - 0.25 * prm.omega * g;
  const Point beta = barycenter(u, p);
  const Membership m = inner_outer_membership(beta, u.grid(), prm.r);
  const double conc = concentration_fraction(u, p, beta, 0.5 * prm.r);
  const GoodPartition part = good_partition(u.grid(), eps);
  const std::vector<double> masses = cell_masses(part, u, prm);
  const double gamma = masses.empty() ? 0.0 : *std::max_element(masses.begin(), masses.end());
  const double mass_target = 2.0 * p / (p - 2.0) * minf;

  const fs::path out = cfg.output_dir;
  fs::create_directories(out);
  {
    CsvWriter csv(out / "partition.csv", "config_hash,cell,center_x,center_y,center_z,nodes,mass");
    const std::string hash = cfg.hash();
    for (std::size_t j = 0; j < part.cells.size(); ++j)
    {
      const auto &cell = part.cells[j];
      csv.row(fmt::format("{},{},{:.10g},{:.10g},{:.10g},{},{:.12e}", hash, j, cell.center[0], cell.center[1],
                          cell.center[2], cell.nodes.size(), masses[j]));
    }
  }

  json rec = record_header(cfg, "diagnose", started);
  rec["field"] = field_path.string();
  rec["eps"] = eps;
  rec["m_inf"] = minf;
  rec["energy"] = e.total;
  rec["energy_ratio"] = e.total / minf;
  rec["nehari_residual"] = nres;
  rec["nehari_relative"] = std::abs(nres) / c.norm_sq;
  rec["identity_norm_form"] = id_norm;
  rec["identity_mass_form"] = id_mass;
  rec["identity_gap"] = std::abs(id_norm - id_mass) / std::abs(e.total);
  rec["barycenter"] = point_json(beta, u.grid().dim());
  rec["membership"] = to_string(m);
  rec["concentration"] = conc;
  rec["partition"] = {{"cells", part.cells.size()},
                      {"overlap", part.overlap},
                      {"inscribed", part.inscribed},
                      {"circumscribed", part.circumscribed},
                      {"gamma", gamma}};
  rec["normalized_mass"] = c.lp_power;
  rec["normalized_mass_target"] = mass_target;
  rec["normalized_mass_ratio"] = c.lp_power / mass_target;
  rec["finished"] = now_iso();
  write_json(out / "diagnose.json", rec);
  return {rec, 0};
}

CommandResult run_morse(const fs::path &run_dir)
{
  const std::string started = now_iso();
  const json run = read_json(run_dir / "record.json");
  if (run.value("command", "") != "multiplicity")
  {
    throw Error(ErrorCode::Parse, "morse needs the record of a multiplicity run");
  }
  const ExperimentConfig cfg = parse_config(run["config"]);
  const double eps = run["eps"].get<double>();
  const Params prm = cfg.params_for(eps);
  const DomainTopology topo = topology_catalog(cfg.shape);

  json entries = json::array();
  std::vector<MorseEntry> morse;
  CsvWriter csv(run_dir / "morse.csv",
                "config_hash,class,seed,energy,morse_index,near_zero,lambda_min,ray_rayleigh,converged");
  for (const json &cj : run["classes"])
  {
    if (!cj.contains("field"))
    {
      throw Error(ErrorCode::Io, "multiplicity run has no field dumps (write_fields = false)");
    }
    const Field u = read_field(run_dir / cj["field"].get<std::string>());
    Functional fn(prm, cfg.cg);
    const SpectrumReport s = lowest_spectrum(fn, u, cfg.spectrum);
    MorseEntry e;
    e.label = cj["seed"].get<std::string>();
    e.energy = cj["energy"].get<double>();
    e.morse_index = s.negative_count;
    e.near_zero = s.near_zero_count;
    morse.push_back(e);
    json ej = spectrum_to_json(s);
    ej["class"] = cj["class"];
    ej["seed"] = e.label;
    ej["energy"] = e.energy;
    entries.push_back(ej);
    csv.row(fmt::format("{},{},{},{:.12g},{},{},{:.10e},{:.10e},{}", run["config_hash"].get<std::string>(),
                        cj["class"].get<int>(), e.label, e.energy, e.morse_index, e.near_zero,
                        s.eigenvalues.empty() ? 0.0 : s.eigenvalues.front(), s.ray_rayleigh, s.converged ? 1 : 0));
  }
  const MorseSummary sum = morse_consistency(morse, topo);
  json rec;
  rec["schema"] = "sms-run/1";
  rec["command"] = "morse";
  rec["config_hash"] = run["config_hash"];
  rec["version"] = kVersion;
  rec["started"] = started;
  rec["entries"] = entries;
  rec["summary"] = {{"has_data", sum.has_data},
                    {"indices", sum.indices},
                    {"observed_poly", sum.observed_poly},
                    {"target_poly", sum.target_poly},
                    {"found", sum.found},
                    {"category", sum.category},
                    {"morse_target", sum.morse_target},
                    {"meets_category", sum.meets_category},
                    {"minimizers_index_one", sum.minimizers_index_one},
                    {"index_one_covered", sum.index_one_covered},
                    {"message", sum.message}};
  rec["finished"] = now_iso();
  write_json(run_dir / "morse.json", rec);
  return {rec, 0};
}

}  // namespace sms
