#pragma once

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "orperc/cones.hpp"
#include "orperc/io.hpp"
#include "orperc/oracle.hpp"
#include "orperc/render.hpp"

namespace orperc::cli {

// ---------------------------------------------------------------------------
// Small parsers for the CLI's string-encoded values.

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  parts.push_back(cur);
  return parts;
}

template <int D>
Vec<D> parse_vec(const std::string& s) {
  const auto parts = split(s, ',');
  if (static_cast<int>(parts.size()) != D)
    throw spec_error("expected " + std::to_string(D) + " comma-separated integers, got '" + s +
                     "'");
  Vec<D> v;
  for (int i = 0; i < D; ++i) {
    try {
      v.c[i] = std::stoll(parts[static_cast<std::size_t>(i)]);
    } catch (const std::exception&) {
      throw spec_error("bad integer in vector '" + s + "'");
    }
  }
  return v;
}

template <int D>
std::vector<Vec<D>> parse_vec_list(const std::string& s) {
  std::vector<Vec<D>> out;
  for (const auto& part : split(s, ';'))
    if (!part.empty()) out.push_back(parse_vec<D>(part));
  return out;
}

inline std::vector<std::int64_t> parse_i64_list(const std::string& s) {
  std::vector<std::int64_t> out;
  for (const auto& part : split(s, ','))
    if (!part.empty()) {
      try {
        out.push_back(std::stoll(part));
      } catch (const std::exception&) {
        throw spec_error("bad integer list '" + s + "'");
      }
    }
  if (out.empty()) throw spec_error("empty integer list");
  return out;
}

// "lo:hi:step" inclusive grid, or a single value.
inline std::vector<double> parse_grid(const std::string& s) {
  const auto parts = split(s, ':');
  try {
    if (parts.size() == 1) return {std::stod(parts[0])};
    if (parts.size() != 3) throw spec_error("grid must be lo:hi:step");
    const double lo = std::stod(parts[0]), hi = std::stod(parts[1]), step = std::stod(parts[2]);
    if (step <= 0 || hi < lo) throw spec_error("grid must satisfy lo <= hi, step > 0");
    std::vector<double> out;
    for (double x = lo; x <= hi + step * 1e-9; x += step) out.push_back(x);
    return out;
  } catch (const spec_error&) {
    throw;
  } catch (const std::exception&) {
    throw spec_error("bad grid '" + s + "'");
  }
}

// ---------------------------------------------------------------------------
// Shared flags and config-file precedence: flags > config JSON > defaults.

struct Common {
  std::string graph_file;
  std::string model;
  std::int64_t M = 1;
  double p = 0.5;
  std::uint64_t seed = 1;
  std::int64_t reps = 10000;
  int threads = 0;
  std::string out = "-";
  std::string config;
};

inline void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--graph", c.graph_file, "graph spec JSON file");
  sub->add_option("--model", c.model, "built-in model family (example)");
  sub->add_option("--M", c.M, "drift bound for the example model");
  sub->add_option("--p", c.p, "edge open probability");
  sub->add_option("--seed", c.seed, "base seed; all randomness derives from it");
  sub->add_option("--reps", c.reps, "Monte Carlo replicas");
  sub->add_option("--threads", c.threads, "worker threads (0 = hardware)");
  sub->add_option("--out", c.out, "output path ('-' = stdout)");
  sub->add_option("--config", c.config, "JSON config file mirroring the flags");
}

// Applies config-file values to options the command line left untouched.
class ConfigApplier {
 public:
  ConfigApplier(const CLI::App* sub, const std::string& config_path) : sub_(sub) {
    if (!config_path.empty()) cfg_ = load_json_file(config_path);
  }

  template <class T>
  void get(const std::string& flag, T& target) const {
    if (sub_->count("--" + flag) == 0 && cfg_.contains(flag)) target = cfg_.at(flag).get<T>();
  }

 private:
  const CLI::App* sub_;
  json cfg_ = json::object();
};

inline void apply_common_config(const ConfigApplier& cfg, Common& c) {
  cfg.get("graph", c.graph_file);
  cfg.get("model", c.model);
  cfg.get("M", c.M);
  cfg.get("p", c.p);
  cfg.get("seed", c.seed);
  cfg.get("reps", c.reps);
  cfg.get("threads", c.threads);
  cfg.get("out", c.out);
}

inline int graph_dim(const Common& c) {
  if (!c.graph_file.empty() && !c.model.empty())
    throw spec_error("give either --graph or --model, not both");
  if (!c.graph_file.empty()) return graph_json_dim(load_json_file(c.graph_file));
  if (c.model == "example") return 2;
  if (c.model.empty()) throw spec_error("need --graph FILE or --model example");
  throw spec_error("unknown model '" + c.model + "'");
}

template <int D>
GraphSpec<D> load_graph(const Common& c) {
  if (!c.graph_file.empty()) return graph_from_json<D>(load_json_file(c.graph_file));
  if constexpr (D == 2) {
    if (c.model == "example") return example_model(c.M);
  }
  throw spec_error("model '" + c.model + "' is not available in dimension " +
                   std::to_string(D));
}

template <class Fn>
int dispatch_dim(int d, Fn&& fn) {
  switch (d) {
    case 1:
      return fn(std::integral_constant<int, 1>{});
    case 2:
      return fn(std::integral_constant<int, 2>{});
    case 3:
      return fn(std::integral_constant<int, 3>{});
    case 4:
      return fn(std::integral_constant<int, 4>{});
    default:
      throw spec_error("the CLI supports dimensions 1 through 4");
  }
}

template <int D>
std::vector<Vec<D>> axis_probes() {
  std::vector<Vec<D>> probes;
  for (int i = 0; i < D; ++i) {
    Vec<D> e{};
    e.c[i] = 1;
    probes.push_back(e);
    probes.push_back(-e);
  }
  return probes;
}

// Builds a window from the explore-style flags.
template <int D>
Window<D> make_window(std::int64_t box_radius, const std::string& psi_u,
                      std::int64_t psi_level, std::int64_t trunc) {
  if (psi_u.empty()) return Window<D>::box(box_radius);
  return Window<D>::psiball(SubadditiveWeight<D>::linear(parse_vec<D>(psi_u)),
                            Frac::of(psi_level), trunc);
}

// ---------------------------------------------------------------------------
// Subcommand option bags.

struct ExploreOpts {
  std::string x0, probes, psi_u;
  std::int64_t window_radius = 32, psi_level = 0, trunc = -1, budget = 1000000;
};

struct SweepOpts {
  std::string u, p_grid, n_list = "128";
  std::int64_t window_factor = 4;
  std::int64_t budget = std::int64_t{1} << 62;
};

struct PcOpts {
  std::string u;
  std::int64_t n = 256;
  double tau = 0.05, p_lo = 0.01, p_hi = 0.6, width = 0.005;
  std::int64_t window_factor = 4;
  std::int64_t budget = std::int64_t{1} << 62;
};

struct PhiOpts {
  std::string psi_u, set_file, mode = "auto";
  std::int64_t k = 0, cap = 10;
};

struct CertifyOpts {
  std::string psi_u, cert_out = "-";
  std::int64_t k_max = 6, cap = 20, k_lo = 1, k_hi = 5, verify_reps = 0;
};

struct FppOpts {
  std::string target = "mu", x, u, n_ladder = "64,128,256";
  std::int64_t window_factor = 4;
};

struct DecayOpts {
  std::string u, alpha_grid = "0.25:8:0.25", n_ladder = "8,16,32", const_out = "-";
  std::int64_t set_k = 1, set_cap = 2;
  double c_frac = 0.5;
  std::int64_t window_factor = 4;
};

struct ConesOpts {
  std::string rays, n_ladder = "32,64,128", cone_file, op;
  double zero_tol = kMuZeroTol;
  std::int64_t window_factor = 4;
  std::int64_t refine_max = 2048;
};

struct ScanOpts {
  std::string rays, mu_ladder = "32,64,128", bg_ladder = "16,32,64,128";
  double q = -1.0;
  std::int64_t mu_reps = 60, bg_reps = 0, bg_budget = 20000;
  double bg_hi = 0.02, bg_lo = 0.005, min_r2 = 0.9;
};

struct OracleOpts {
  std::string mode = "event", u, x, y;
  std::int64_t window_radius = 1, n = 1, cap = 24;
};

struct RenderOpts {
  std::int64_t width = 200;
  std::string mode = "hop", palette = "wheel64";
};

// ---------------------------------------------------------------------------
// Handlers.

template <int D>
void cmd_explore(const Common& c, const ExploreOpts& o) {
  const GraphSpec<D> g = load_graph<D>(c);
  const Window<D> window = make_window<D>(o.window_radius, o.psi_u, o.psi_level, o.trunc);
  const Vec<D> x0 = o.x0.empty() ? Vec<D>{} : parse_vec<D>(o.x0);
  const std::vector<Vec<D>> probes =
      o.probes.empty() ? axis_probes<D>() : parse_vec_list<D>(o.probes);
  FieldParams params(c.seed, c.p);
  ClusterReport<D> rep = explore(g, params, x0, window, o.budget, probes);
  json ext = json::object();
  for (const auto& [u, e] : rep.extent) ext[u.str()] = e;
  save_json_file(c.out, json{{"visited_count", rep.visited_count},
                             {"termination", to_string(rep.termination)},
                             {"extent", ext}});
}

template <int D>
void cmd_sweep(const Common& c, const SweepOpts& o) {
  const GraphSpec<D> g = load_graph<D>(c);
  if (o.u.empty()) throw spec_error("sweep needs --u");
  const Vec<D> u = parse_vec<D>(o.u);
  const std::vector<double> ps = o.p_grid.empty() ? std::vector<double>{c.p}
                                                  : parse_grid(o.p_grid);
  const std::vector<std::int64_t> ns = parse_i64_list(o.n_list);
  CsvWriter csv(c.out, "p,n,reps,successes,theta_hat,ci_low,ci_high,boundary_flag_rate");
  for (double p : ps)
    for (std::int64_t n : ns) {
      SweepPoint sp = directional_survival(g, u, p, n, survival_window<D>(n, o.window_factor),
                                           c.reps, c.seed, c.threads, o.budget);
      csv.row({fmt_double(sp.p), std::to_string(sp.n), std::to_string(sp.reps),
               std::to_string(sp.successes), fmt_double(sp.theta_hat), fmt_double(sp.ci_low),
               fmt_double(sp.ci_high), fmt_double(sp.boundary_flag_rate)});
    }
}

template <int D>
void cmd_pc(const Common& c, const PcOpts& o) {
  const GraphSpec<D> g = load_graph<D>(c);
  if (o.u.empty()) throw spec_error("pc needs --u");
  PcEstimate<D> est = estimate_pc(g, parse_vec<D>(o.u), o.n, o.tau, c.reps, c.seed, o.p_lo,
                                  o.p_hi, c.threads, o.width, o.window_factor, o.budget);
  save_json_file(c.out, json{{"u", est.u.str()},
                             {"n", est.n},
                             {"tau", est.tau},
                             {"p_lo", est.p_lo},
                             {"p_hi", est.p_hi},
                             {"reps", est.reps},
                             {"decided", est.decided}});
}

template <int D>
void cmd_phi(const Common& c, const PhiOpts& o) {
  const GraphSpec<D> g = load_graph<D>(c);
  if (o.psi_u.empty()) throw spec_error("phi needs --psi-u");
  const SubadditiveWeight<D> psi = SubadditiveWeight<D>::linear(parse_vec<D>(o.psi_u));
  FiniteSet<D> S;
  if (!o.set_file.empty()) {
    std::vector<Vec<D>> verts;
    for (const auto& row : load_json_file(o.set_file).at("S")) {
      Vec<D> v;
      for (int i = 0; i < D; ++i) v.c[i] = row.at(static_cast<std::size_t>(i)).get<std::int64_t>();
      verts.push_back(v);
    }
    S = make_finite_set<D>(std::move(verts), psi);
  } else {
    S = sublevel_set<D>(psi, o.k, o.cap);
  }
  ConnMode mode;
  if (o.mode == "exact") {
    mode = ConnMode::exact_mode();
  } else if (o.mode == "mc") {
    mode = ConnMode::mc(c.reps, c.seed, c.threads);
  } else {
    const auto sg = make_set_graph(g, S);
    mode = static_cast<int>(sg.internal.size()) <= kExactEdgeCap
               ? ConnMode::exact_mode()
               : ConnMode::mc(c.reps, c.seed, c.threads);
  }
  PhiResult ph = phi(g, S, c.p, mode);
  save_json_file(c.out, json{{"phi", ph.value},
                             {"phi_ci", json::array({ph.ci_low, ph.ci_high})},
                             {"boundary_size", ph.boundary_size},
                             {"set_size", static_cast<std::int64_t>(S.vertices.size())},
                             {"method", ph.exact ? "exact" : "monte_carlo"},
                             {"reps", ph.reps}});
}

template <int D>
void cmd_certify(const Common& c, const CertifyOpts& o) {
  const GraphSpec<D> g = load_graph<D>(c);
  if (o.psi_u.empty()) throw spec_error("certify needs --psi-u");
  const SubadditiveWeight<D> psi = SubadditiveWeight<D>::linear(parse_vec<D>(o.psi_u));
  auto cert = find_good_set(g, psi, c.p, o.k_max, o.cap, c.reps, c.seed, c.threads);
  if (!cert) throw refusal_error("no-certificate: no sublevel candidate had phi below 1");
  save_json_file(o.cert_out, certificate_to_json<D>(*cert));
  const std::int64_t vreps = o.verify_reps > 0 ? o.verify_reps : c.reps;
  auto rows = verify_decay(g, *cert, o.k_lo, o.k_hi, vreps, mix_seed(c.seed, 99), c.threads);
  CsvWriter csv(c.out, "k,L,predicted,estimate,ci_low,ci_high,flag");
  for (const auto& r : rows)
    csv.row({std::to_string(r.k), std::to_string(r.L), fmt_double(r.predicted),
             fmt_double(r.estimate), fmt_double(r.ci_low), fmt_double(r.ci_high),
             r.flag ? "1" : "0"});
}

template <int D>
void cmd_fpp(const Common& c, const FppOpts& o) {
  const GraphSpec<D> g = load_graph<D>(c);
  const std::vector<std::int64_t> ladder = parse_i64_list(o.n_ladder);
  CsvWriter csv(c.out, "target,n,reps,mean,ci_low,ci_high,unreachable_rate");
  if (o.target == "mu") {
    if (o.x.empty()) throw spec_error("fpp --target mu needs --x");
    MuEstimate<D> est =
        estimate_mu(g, c.p, parse_vec<D>(o.x), ladder, c.reps, c.seed, o.window_factor,
                    c.threads);
    for (const auto& st : est.ladder)
      csv.row({"mu:" + est.x.str(), std::to_string(st.n), std::to_string(st.reps),
               fmt_double(st.mean), fmt_double(st.ci_low), fmt_double(st.ci_high),
               fmt_double(st.unreachable_rate)});
  } else if (o.target == "b") {
    if (o.u.empty()) throw spec_error("fpp --target b needs --u");
    BEstimate<D> est = estimate_b(g, c.p, parse_vec<D>(o.u), ladder, c.reps, c.seed,
                                  o.window_factor, c.threads);
    for (const auto& st : est.ladder)
      csv.row({"b:" + est.u.str(), std::to_string(st.n), std::to_string(st.reps),
               fmt_double(st.mean), fmt_double(st.ci_low), fmt_double(st.ci_high),
               fmt_double(st.unreachable_rate)});
  } else {
    throw spec_error("fpp --target must be mu or b");
  }
}

template <int D>
void cmd_decay(const Common& c, const DecayOpts& o) {
  const GraphSpec<D> g = load_graph<D>(c);
  if (o.u.empty()) throw spec_error("decay needs --u");
  const Vec<D> u = parse_vec<D>(o.u);
  const SubadditiveWeight<D> psi = SubadditiveWeight<D>::linear(u);
  const FiniteSet<D> S = sublevel_set<D>(psi, o.set_k, o.set_cap);
  DecayConstants<D> dc =
      decay_constants(g, S, c.p, u, parse_grid(o.alpha_grid), c.reps, c.seed, c.threads);
  save_json_file(o.const_out, decay_constants_to_json<D>(dc));
  if (!dc.certified) throw refusal_error("no-certificate: K >= 1 over the whole alpha grid");
  auto rows = verify_time_decay(g, dc, u, c.p, parse_i64_list(o.n_ladder), c.reps,
                                mix_seed(c.seed, 17), o.c_frac * dc.c, o.window_factor,
                                c.threads);
  CsvWriter csv(c.out, "n,bound,estimate,ci_low,ci_high,flag");
  for (const auto& r : rows)
    csv.row({std::to_string(r.n), fmt_double(r.bound), fmt_double(r.estimate),
             fmt_double(r.ci_low), fmt_double(r.ci_high), r.flag ? "1" : "0"});
}

template <int D>
std::vector<Vec<D>> resolve_rays(const std::string& spec) {
  if (!spec.empty()) return parse_vec_list<D>(spec);
  if constexpr (D == 2) return default_probe_rays();
  throw spec_error("outside d=2 the probe rays must be given explicitly");
}

template <int D>
void cmd_cones(const Common& c, const ConesOpts& o) {
  if (!o.cone_file.empty()) {
    // Pure cone algebra on a serialized cone; no sampling involved.
    Cone<D> cone = cone_from_json<D>(load_json_file(o.cone_file));
    if (o.op == "polar") cone = polar(cone);
    else if (!o.op.empty() && o.op != "complete")
      throw spec_error("cones --op must be polar or complete");
    save_json_file(c.out, cone_to_json<D>(cone));
    return;
  }
  const GraphSpec<D> g = load_graph<D>(c);
  ShapeApprox<D> shape = sample_shape(g, c.p, resolve_rays<D>(o.rays),
                                      parse_i64_list(o.n_ladder), c.reps, c.seed,
                                      o.window_factor, c.threads, o.refine_max, o.zero_tol);
  Cone<D> rec = recession_cone(shape);
  Cone<D> bar = polar(rec);
  json rays = json::array();
  for (const auto& rs : shape.rays)
    rays.push_back(json{{"ray", rs.ray.str()},
                        {"mu_hat", rs.mu.mu_hat},
                        {"ci", json::array({rs.mu.ci_low, rs.mu.ci_high})},
                        {"unreachable_rate", rs.mu.unreachable_rate},
                        {"valid", rs.mu.valid}});
  save_json_file(c.out, json{{"p", shape.p},
                             {"zero_tol", shape.zero_tol},
                             {"spanning", shape.spanning},
                             {"rays", rays},
                             {"recession", cone_to_json<D>(rec)},
                             {"barrier", cone_to_json<D>(bar)}});
}

template <int D>
void cmd_scan(const Common& c, const ScanOpts& o) {
  const GraphSpec<D> g = load_graph<D>(c);
  const double q = o.q > 0 ? o.q : c.p + 0.1;
  BgThresholds th;
  th.hi = o.bg_hi;
  th.lo = o.bg_lo;
  th.min_r2 = o.min_r2;
  const std::int64_t bg_reps = o.bg_reps > 0 ? o.bg_reps : c.reps;
  ScanReport<D> rep = conjecture_scan(g, c.p, q, resolve_rays<D>(o.rays),
                                      parse_i64_list(o.mu_ladder), o.mu_reps,
                                      parse_i64_list(o.bg_ladder), bg_reps, c.seed, th,
                                      c.threads, o.bg_budget);
  CsvWriter csv(c.out, "ray,in_int_bar,bg_at_p,bg_at_q,flag");
  for (const auto& row : rep.rows) {
    std::string ray = row.ray.str();
    for (auto& ch : ray)
      if (ch == ',') ch = ':';
    csv.row({ray, row.in_int_bar ? "1" : "0", to_string(row.bg_p), to_string(row.bg_q),
             row.flag ? "1" : "0"});
  }
  std::cerr << "scan flags: " << rep.flags << "\n";
}

template <int D>
void cmd_oracle(const Common& c, const OracleOpts& o) {
  const GraphSpec<D> g = load_graph<D>(c);
  EnumerationTask<D> task =
      make_enumeration_task(g, Window<D>::box(o.window_radius), static_cast<int>(o.cap));
  if (o.mode == "event") {
    if (o.u.empty()) throw spec_error("oracle --mode event needs --u and --n");
    const Vec<D> u = parse_vec<D>(o.u);
    const int origin = task.vertex_index(Vec<D>{});
    std::vector<char> reached;
    std::vector<int> queue;
    const long double prob = exact_event_probability(task, c.p, [&](std::uint64_t mask) {
      reach_open(task, mask, origin, reached, queue);
      for (std::size_t vi = 0; vi < task.vertices.size(); ++vi)
        if (reached[vi] && dot(task.vertices[vi], u) >= o.n) return true;
      return false;
    });
    CsvWriter csv(c.out, "config_count,probability");
    csv.row({std::to_string(std::uint64_t{1} << task.edges.size()),
             fmt_double(static_cast<double>(prob))});
  } else if (o.mode == "passage") {
    if (o.x.empty() || o.y.empty()) throw spec_error("oracle --mode passage needs --x and --y");
    auto dist = exact_passage_distribution(task, c.p, parse_vec<D>(o.x), parse_vec<D>(o.y));
    CsvWriter csv(c.out, "time,mass");
    for (const auto& [t, mass] : dist)
      csv.row({std::to_string(t), fmt_double(static_cast<double>(mass))});
  } else {
    throw spec_error("oracle --mode must be event or passage");
  }
}

inline void cmd_render(const Common& c, const RenderOpts& o) {
  if (graph_dim(c) != 2) throw spec_error("render works on d=2 graphs only");
  if (c.out == "-") throw spec_error("render needs --out FILE");
  RenderJob job;
  job.g = load_graph<2>(c);
  job.params = FieldParams(c.seed, c.p);
  job.half_width = o.width;
  job.palette = o.palette;
  if (o.mode == "hop")
    job.mode = RenderMode::hop_distance;
  else if (o.mode == "time")
    job.mode = RenderMode::passage_time;
  else
    throw spec_error("render --mode must be hop or time");
  write_bytes(c.out, render_cluster(job));
}

// ---------------------------------------------------------------------------
// Entry point: parses argv-style arguments (program name excluded) and runs
// the chosen subcommand.  Exit codes: 0 success, 2 invalid arguments, 3
// runtime refusal.

inline int run_command(std::vector<std::string> args) {
  CLI::App app{"orperc: percolation and first-passage percolation on oriented graphs over Z^d"};
  app.require_subcommand(1);

  struct SubState {
    Common common;
    ExploreOpts explore;
    SweepOpts sweep;
    PcOpts pc;
    PhiOpts phi;
    CertifyOpts certify;
    FppOpts fpp;
    DecayOpts decay;
    ConesOpts cones;
    ScanOpts scan;
    OracleOpts oracle;
    RenderOpts render;
  };
  auto st = std::make_shared<SubState>();

  auto* s_explore = app.add_subcommand("explore", "enumerate one open cluster in a window");
  add_common(s_explore, st->common);
  s_explore->add_option("--x0", st->explore.x0, "start vertex (default origin)");
  s_explore->add_option("--window-radius", st->explore.window_radius, "box window radius");
  s_explore->add_option("--psi-u", st->explore.psi_u, "psiball window direction");
  s_explore->add_option("--psi-level", st->explore.psi_level, "psiball window level");
  s_explore->add_option("--trunc", st->explore.trunc, "psiball box truncation (-1 = none)");
  s_explore->add_option("--budget", st->explore.budget, "vertex budget");
  s_explore->add_option("--probes", st->explore.probes, "probe directions 'a,b;c,d'");

  auto* s_sweep = app.add_subcommand("sweep", "survival estimates over a p grid");
  add_common(s_sweep, st->common);
  s_sweep->add_option("--u", st->sweep.u, "direction");
  s_sweep->add_option("--p-grid", st->sweep.p_grid, "lo:hi:step (default: --p only)");
  s_sweep->add_option("--n", st->sweep.n_list, "extent thresholds, comma separated");
  s_sweep->add_option("--window-factor", st->sweep.window_factor, "box radius = factor * n");
  s_sweep->add_option("--budget", st->sweep.budget, "vertex budget per trial");

  auto* s_pc = app.add_subcommand("pc", "bracket the directional critical point");
  add_common(s_pc, st->common);
  s_pc->add_option("--u", st->pc.u, "direction");
  s_pc->add_option("--n", st->pc.n, "extent threshold");
  s_pc->add_option("--tau", st->pc.tau, "survival cutoff");
  s_pc->add_option("--p-lo", st->pc.p_lo, "bracket low end");
  s_pc->add_option("--p-hi", st->pc.p_hi, "bracket high end");
  s_pc->add_option("--width", st->pc.width, "bracket width target");
  s_pc->add_option("--window-factor", st->pc.window_factor, "box radius = factor * n");
  s_pc->add_option("--budget", st->pc.budget, "vertex budget per trial");

  auto* s_phi = app.add_subcommand("phi", "sharp-transition functional of a finite set");
  add_common(s_phi, st->common);
  s_phi->add_option("--psi-u", st->phi.psi_u, "linear weight direction");
  s_phi->add_option("--k", st->phi.k, "sublevel level");
  s_phi->add_option("--cap", st->phi.cap, "transverse box cap");
  s_phi->add_option("--set-file", st->phi.set_file, "explicit vertex set JSON ({\"S\": [...]})");
  s_phi->add_option("--mode", st->phi.mode, "exact | mc | auto");

  auto* s_certify = app.add_subcommand("certify", "find a good set and verify its decay");
  add_common(s_certify, st->common);
  s_certify->add_option("--psi-u", st->certify.psi_u, "linear weight direction");
  s_certify->add_option("--k-max", st->certify.k_max, "largest sublevel to try");
  s_certify->add_option("--cap", st->certify.cap, "transverse box cap");
  s_certify->add_option("--k-lo", st->certify.k_lo, "verification range start");
  s_certify->add_option("--k-hi", st->certify.k_hi, "verification range end");
  s_certify->add_option("--verify-reps", st->certify.verify_reps,
                        "replicas for verification (default --reps)");
  s_certify->add_option("--cert-out", st->certify.cert_out, "certificate JSON path");

  auto* s_fpp = app.add_subcommand("fpp", "estimate the time constant mu or b");
  add_common(s_fpp, st->common);
  s_fpp->add_option("--target", st->fpp.target, "mu | b");
  s_fpp->add_option("--x", st->fpp.x, "lattice ray for mu");
  s_fpp->add_option("--u", st->fpp.u, "hyperplane direction for b");
  s_fpp->add_option("--n-ladder", st->fpp.n_ladder, "scales, comma separated");
  s_fpp->add_option("--window-factor", st->fpp.window_factor, "box radius = factor * n");

  auto* s_decay = app.add_subcommand("decay", "subcritical time-decay constants and check");
  add_common(s_decay, st->common);
  s_decay->add_option("--u", st->decay.u, "direction");
  s_decay->add_option("--set-k", st->decay.set_k, "sublevel level for S");
  s_decay->add_option("--set-cap", st->decay.set_cap, "transverse cap for S");
  s_decay->add_option("--alpha-grid", st->decay.alpha_grid, "lo:hi:step");
  s_decay->add_option("--c-frac", st->decay.c_frac, "use c_frac * certified c");
  s_decay->add_option("--n-ladder", st->decay.n_ladder, "scales for the check");
  s_decay->add_option("--window-factor", st->decay.window_factor, "box radius = factor * n");
  s_decay->add_option("--const-out", st->decay.const_out, "constants JSON path");

  auto* s_cones = app.add_subcommand("cones", "sampled shape, recession and barrier cones");
  add_common(s_cones, st->common);
  s_cones->add_option("--rays", st->cones.rays, "probe rays 'a,b;c,d' (default 16 for d=2)");
  s_cones->add_option("--n-ladder", st->cones.n_ladder, "mu scales");
  s_cones->add_option("--zero-tol", st->cones.zero_tol, "mu = 0 cutoff");
  s_cones->add_option("--window-factor", st->cones.window_factor, "box radius = factor * n");
  s_cones->add_option("--refine-max", st->cones.refine_max,
                      "deepest scale for near-zero refinement (0 = off)");
  s_cones->add_option("--cone-file", st->cones.cone_file, "serialized cone (algebra mode)");
  s_cones->add_option("--op", st->cones.op, "polar | complete (with --cone-file)");

  auto* s_scan = app.add_subcommand("scan", "theorem-consistency scan over probe rays");
  add_common(s_scan, st->common);
  s_scan->add_option("--q", st->scan.q, "second parameter (default p + 0.1)");
  s_scan->add_option("--rays", st->scan.rays, "probe rays (default 16 for d=2)");
  s_scan->add_option("--mu-ladder", st->scan.mu_ladder, "mu scales");
  s_scan->add_option("--mu-reps", st->scan.mu_reps, "mu replicas per scale");
  s_scan->add_option("--bg-ladder", st->scan.bg_ladder, "survival scales");
  s_scan->add_option("--bg-reps", st->scan.bg_reps, "survival replicas (default --reps)");
  s_scan->add_option("--bg-hi", st->scan.bg_hi, "unbounded-evidence threshold");
  s_scan->add_option("--bg-lo", st->scan.bg_lo, "bounded-evidence threshold");
  s_scan->add_option("--min-r2", st->scan.min_r2, "decay fit quality floor");
  s_scan->add_option("--bg-budget", st->scan.bg_budget, "vertex budget per survival trial");

  auto* s_oracle = app.add_subcommand("oracle", "exact enumeration on a small window");
  add_common(s_oracle, st->common);
  s_oracle->add_option("--mode", st->oracle.mode, "event | passage");
  s_oracle->add_option("--window-radius", st->oracle.window_radius, "box window radius");
  s_oracle->add_option("--u", st->oracle.u, "event direction");
  s_oracle->add_option("--n", st->oracle.n, "event threshold");
  s_oracle->add_option("--x", st->oracle.x, "passage source");
  s_oracle->add_option("--y", st->oracle.y, "passage target");
  s_oracle->add_option("--cap", st->oracle.cap, "edge cap for enumeration");

  auto* s_render = app.add_subcommand("render", "PPM image of a Dijkstra-colored cluster");
  add_common(s_render, st->common);
  s_render->add_option("--width", st->render.width, "viewport half-width in vertices");
  s_render->add_option("--mode", st->render.mode, "hop | time");
  s_render->add_option("--palette", st->render.palette, "wheel64 | gray64");

  int rc = 0;
  auto run = [&](CLI::App* sub, auto&& fn) {
    sub->callback([&app, sub, st, fn, &rc] {
      (void)app;
      ConfigApplier cfg(sub, st->common.config);
      apply_common_config(cfg, st->common);
      rc = fn(cfg);
    });
  };

  run(s_explore, [st](const ConfigApplier& cfg) {
    auto& o = st->explore;
    cfg.get("x0", o.x0);
    cfg.get("window-radius", o.window_radius);
    cfg.get("psi-u", o.psi_u);
    cfg.get("psi-level", o.psi_level);
    cfg.get("trunc", o.trunc);
    cfg.get("budget", o.budget);
    cfg.get("probes", o.probes);
    return dispatch_dim(graph_dim(st->common), [&](auto dc) {
      cmd_explore<dc.value>(st->common, o);
      return 0;
    });
  });
  run(s_sweep, [st](const ConfigApplier& cfg) {
    auto& o = st->sweep;
    cfg.get("u", o.u);
    cfg.get("p-grid", o.p_grid);
    cfg.get("n", o.n_list);
    cfg.get("window-factor", o.window_factor);
    cfg.get("budget", o.budget);
    return dispatch_dim(graph_dim(st->common), [&](auto dc) {
      cmd_sweep<dc.value>(st->common, o);
      return 0;
    });
  });
  run(s_pc, [st](const ConfigApplier& cfg) {
    auto& o = st->pc;
    cfg.get("u", o.u);
    cfg.get("n", o.n);
    cfg.get("tau", o.tau);
    cfg.get("p-lo", o.p_lo);
    cfg.get("p-hi", o.p_hi);
    cfg.get("width", o.width);
    cfg.get("window-factor", o.window_factor);
    cfg.get("budget", o.budget);
    return dispatch_dim(graph_dim(st->common), [&](auto dc) {
      cmd_pc<dc.value>(st->common, o);
      return 0;
    });
  });
  run(s_phi, [st](const ConfigApplier& cfg) {
    auto& o = st->phi;
    cfg.get("psi-u", o.psi_u);
    cfg.get("k", o.k);
    cfg.get("cap", o.cap);
    cfg.get("set-file", o.set_file);
    cfg.get("mode", o.mode);
    return dispatch_dim(graph_dim(st->common), [&](auto dc) {
      cmd_phi<dc.value>(st->common, o);
      return 0;
    });
  });
  run(s_certify, [st](const ConfigApplier& cfg) {
    auto& o = st->certify;
    cfg.get("psi-u", o.psi_u);
    cfg.get("k-max", o.k_max);
    cfg.get("cap", o.cap);
    cfg.get("k-lo", o.k_lo);
    cfg.get("k-hi", o.k_hi);
    cfg.get("verify-reps", o.verify_reps);
    cfg.get("cert-out", o.cert_out);
    return dispatch_dim(graph_dim(st->common), [&](auto dc) {
      cmd_certify<dc.value>(st->common, o);
      return 0;
    });
  });
  run(s_fpp, [st](const ConfigApplier& cfg) {
    auto& o = st->fpp;
    cfg.get("target", o.target);
    cfg.get("x", o.x);
    cfg.get("u", o.u);
    cfg.get("n-ladder", o.n_ladder);
    cfg.get("window-factor", o.window_factor);
    return dispatch_dim(graph_dim(st->common), [&](auto dc) {
      cmd_fpp<dc.value>(st->common, o);
      return 0;
    });
  });
  run(s_decay, [st](const ConfigApplier& cfg) {
    auto& o = st->decay;
    cfg.get("u", o.u);
    cfg.get("set-k", o.set_k);
    cfg.get("set-cap", o.set_cap);
    cfg.get("alpha-grid", o.alpha_grid);
    cfg.get("c-frac", o.c_frac);
    cfg.get("n-ladder", o.n_ladder);
    cfg.get("window-factor", o.window_factor);
    cfg.get("const-out", o.const_out);
    return dispatch_dim(graph_dim(st->common), [&](auto dc) {
      cmd_decay<dc.value>(st->common, o);
      return 0;
    });
  });
  run(s_cones, [st](const ConfigApplier& cfg) {
    auto& o = st->cones;
    cfg.get("rays", o.rays);
    cfg.get("n-ladder", o.n_ladder);
    cfg.get("zero-tol", o.zero_tol);
    cfg.get("window-factor", o.window_factor);
    cfg.get("cone-file", o.cone_file);
    cfg.get("op", o.op);
    cfg.get("refine-max", o.refine_max);
    const int d = o.cone_file.empty() ? graph_dim(st->common)
                                      : static_cast<int>(
                                            load_json_file(o.cone_file)
                                                .value("d", json(2))
                                                .get<int>());
    return dispatch_dim(d, [&](auto dc) {
      cmd_cones<dc.value>(st->common, o);
      return 0;
    });
  });
  run(s_scan, [st](const ConfigApplier& cfg) {
    auto& o = st->scan;
    cfg.get("q", o.q);
    cfg.get("rays", o.rays);
    cfg.get("mu-ladder", o.mu_ladder);
    cfg.get("mu-reps", o.mu_reps);
    cfg.get("bg-ladder", o.bg_ladder);
    cfg.get("bg-reps", o.bg_reps);
    cfg.get("bg-hi", o.bg_hi);
    cfg.get("bg-lo", o.bg_lo);
    cfg.get("min-r2", o.min_r2);
    cfg.get("bg-budget", o.bg_budget);
    return dispatch_dim(graph_dim(st->common), [&](auto dc) {
      cmd_scan<dc.value>(st->common, o);
      return 0;
    });
  });
  run(s_oracle, [st](const ConfigApplier& cfg) {
    auto& o = st->oracle;
    cfg.get("mode", o.mode);
    cfg.get("window-radius", o.window_radius);
    cfg.get("u", o.u);
    cfg.get("n", o.n);
    cfg.get("x", o.x);
    cfg.get("y", o.y);
    cfg.get("cap", o.cap);
    return dispatch_dim(graph_dim(st->common), [&](auto dc) {
      cmd_oracle<dc.value>(st->common, o);
      return 0;
    });
  });
  run(s_render, [st](const ConfigApplier& cfg) {
    auto& o = st->render;
    cfg.get("width", o.width);
    cfg.get("mode", o.mode);
    cfg.get("palette", o.palette);
    cmd_render(st->common, o);
    return 0;
  });

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << app.help() << "\n";
    return 2;
  } catch (const spec_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const refusal_error& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return 3;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return rc;
}

}  // namespace orperc::cli
