// dbss: stationary analysis of a dockless bike-sharing network with
// unusable bikes.
//
//   dbss solve    --config sys.json --out run/
//   dbss sweep    --config sys.json --sweep alpha=0.01,0.02 --out sweep/
//   dbss sweep    --config sys.json --pairs "(1,6);(2,6)" --out sweep/
//   dbss simulate --config sys.json --horizon 1e5 --replications 20 --out sim/
//
// Every flag can also come from an environment variable DBSS_<FLAG>
// (DBSS_CONFIG, DBSS_OUT, DBSS_EPSILON, ...); the command line wins.
//
// Exit codes: 0 ok, 1 unexpected error, 2 invalid config or arguments,
// 3 fixed point did not converge, 4 state space above --max-states,
// 5 sweep finished with failed points.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <locale>
#include <mutex>
#include <optional>
#include <regex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "dbss/config_io.hpp"
#include "dbss/measures.hpp"
#include "dbss/product_form.hpp"
#include "dbss/routing.hpp"
#include "dbss/simulator.hpp"

namespace fs = std::filesystem;
using namespace dbss;

namespace {

enum Exit { kOk = 0, kFailure = 1, kInvalid = 2, kNoConvergence = 3, kTooLarge = 4, kPartial = 5 };

struct Options {
  std::string config;
  std::string out = "dbss_out";
  double epsilon = 1e-10;
  int max_iterations = 10'000;
  std::uint64_t max_states = kDefaultStateCap;
  bool node_only = false;
  std::string anchor = "node-count";
  bool simulate = false;
  SimConfig sim;
  std::vector<std::string> sweep;
  std::string pairs;
  int workers = 1;
};

std::string num(double x) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out.precision(17);
  out << x;
  return out.str();
}

/// Writes through a temporary file in the same directory and renames it.
void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

template <class Fn>
std::string render(Fn&& fn) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  fn(out);
  return out.str();
}

std::string csv_escape(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

// -- one analytic solve -------------------------------------------------------

struct Analysis {
  FixedPointResult fixed_point;
  std::optional<ProductFormSolution> product_form;
  MarginalTables marginals;
  MeasureReport measures;
  double rebuilt_residual = 0.0;
};

Analysis analyze(const SystemConfig& config, const Topology& topology, const Options& opt) {
  FixedPointOptions fp;
  fp.epsilon = opt.epsilon;
  fp.max_iterations = opt.max_iterations;
  fp.anchor = opt.anchor == "first-region" ? RateAnchor::FirstRegion : RateAnchor::NodeCount;

  Analysis a{solve_relative_rates(config, topology, fp), std::nullopt, {}, {}, 0.0};
  a.rebuilt_residual = fixed_point_residual(config, topology, a.fixed_point.rates, fp.anchor);
  if (opt.node_only) {
    a.marginals = decomposition_tables(config, topology, a.fixed_point.rates, a.fixed_point.nodes);
  } else {
    ProductFormOptions pf;
    pf.max_states = opt.max_states;
    a.product_form.emplace(
        solve_product_form(config, topology, a.fixed_point.rates, a.fixed_point.nodes, pf));
    a.marginals = a.product_form->factor_form();
  }
  a.measures = compute_measures(a.marginals, config, topology,
                                opt.node_only ? MeasureScale::Accounted : MeasureScale::Fleet);
  return a;
}

void write_analysis(const fs::path& dir, const SystemConfig& config, const Topology& topology,
                    const Options& opt, const Analysis& a) {
  fs::create_directories(dir);
  write_atomic(dir / "rates.csv", render([&](std::ostream& out) {
                 out << "node,label,e\n";
                 for (std::size_t k = 0; k < topology.size(); ++k) {
                   out << k << ',' << topology.label(k) << ','
                       << num(a.fixed_point.rates(static_cast<Eigen::Index>(k))) << '\n';
                 }
               }));
  write_atomic(dir / "trace.csv", render([&](std::ostream& out) {
                 write_trace_csv(out, topology, a.fixed_point.trace);
               }));
  write_atomic(dir / "measures.csv", render([&](std::ostream& out) {
                 out << "mode," << measures_csv_header() << '\n';
                 out << (opt.node_only ? "decomposition" : "product_form") << ','
                     << measures_csv_row(a.measures) << '\n';
               }));
  write_atomic(dir / (opt.node_only ? "marginals_decomposition.csv" : "marginals.csv"),
               render([&](std::ostream& out) {
                 write_marginals_csv(out, config, topology, a.marginals);
               }));
  write_atomic(dir / "summary.txt", render([&](std::ostream& out) {
                 out << "mode: "
                     << (opt.node_only ? "decomposition approximation (node marginals only, no C)"
                                       : "product form")
                     << '\n';
                 out << "iterations: " << a.fixed_point.trace.size() << '\n';
                 out << "residual: " << num(a.fixed_point.residual) << '\n';
                 out << "rebuilt_residual: " << num(a.rebuilt_residual) << '\n';
                 out << "damped: " << (a.fixed_point.damped ? "yes" : "no") << '\n';
                 if (a.product_form) {
                   out << "states: " << a.product_form->state_count() << '\n';
                   out << "log_C: " << num(a.product_form->log_normalization()) << '\n';
                   out << "verified_total: " << num(a.product_form->verified_total()) << '\n';
                 }
                 write_measures(out, a.measures);
               }));
}

std::string sim_columns_header() {
  return "sim_eta,sim_eta_se,sim_xi,sim_xi_se,sim_F_A,sim_F_A_se,sim_gamma1,sim_gamma1_se,"
         "sim_gamma2,sim_gamma2_se,sim_lost_rate,sim_lost_rate_se";
}

std::string sim_columns(const SimEstimates& s) {
  std::string row;
  for (const Estimate* e : {&s.eta, &s.xi, &s.busy, &s.gamma1, &s.gamma2, &s.lost_user_rate}) {
    if (!row.empty()) row += ',';
    row += num(e->mean) + ',' + num(e->se);
  }
  return row;
}

void write_simulation(const fs::path& dir, const SystemConfig& config, const Topology& topology,
                      const SimEstimates& s) {
  fs::create_directories(dir);
  write_atomic(dir / "simulation.csv", render([&](std::ostream& out) {
                 out << sim_columns_header() << ",events\n" << sim_columns(s) << ',' << s.events << '\n';
               }));
  write_atomic(dir / "histograms.csv", render([&](std::ostream& out) {
                 write_histogram_csv(out, config, topology, s);
               }));
}

// -- config loading -----------------------------------------------------------

SystemConfig load_valid(const std::string& path) {
  if (path.empty()) throw ConfigError("no config given (--config or DBSS_CONFIG)");
  SystemConfig config = load_config(path);
  require_valid(config);
  return config;
}

// -- sweeps -------------------------------------------------------------------

struct SweepPoint {
  std::vector<std::pair<std::string, double>> params;
};

std::vector<SweepPoint> sweep_points(const Options& opt) {
  std::vector<SweepPoint> points;
  if (!opt.pairs.empty()) {
    const std::regex pair_re(R"(\(\s*(\d+)\s*,\s*(\d+)\s*\))");
    for (auto it = std::sregex_iterator(opt.pairs.begin(), opt.pairs.end(), pair_re);
         it != std::sregex_iterator(); ++it) {
      points.push_back({{{"M", std::stod((*it)[1])}, {"Z", std::stod((*it)[2])}}});
    }
    if (points.empty()) throw ConfigError("--pairs expects \"(M,Z);(M,Z)...\"");
    return points;
  }
  if (opt.sweep.empty()) throw ConfigError("sweep needs --sweep PARAM=v1,v2,... or --pairs");
  // several --sweep axes form a grid
  points.push_back({});
  for (const auto& axis : opt.sweep) {
    const auto eq = axis.find('=');
    if (eq == std::string::npos) throw ConfigError("--sweep expects PARAM=v1,v2,...");
    const std::string name = axis.substr(0, eq);
    std::vector<double> values;
    std::stringstream list(axis.substr(eq + 1));
    list.imbue(std::locale::classic());
    for (std::string item; std::getline(list, item, ',');) {
      std::istringstream in(item);
      in.imbue(std::locale::classic());
      double v;
      if (!(in >> v)) throw ConfigError("bad value \"" + item + "\" in --sweep " + name);
      values.push_back(v);
    }
    if (values.empty()) throw ConfigError("--sweep " + name + " has no values");
    std::vector<SweepPoint> grid;
    for (const auto& p : points) {
      for (double v : values) {
        SweepPoint q = p;
        q.params.emplace_back(name, v);
        grid.push_back(std::move(q));
      }
    }
    points = std::move(grid);
  }
  return points;
}

int run_sweep(const Options& opt) {
  const SystemConfig base = load_valid(opt.config);
  const auto points = sweep_points(opt);

  // reject invalid sweep values up front
  for (const auto& p : points) {
    SystemConfig c = base;
    for (const auto& [name, v] : p.params) set_parameter(c, name, v);
    const auto violations = validate_config(c);
    if (!violations.empty()) {
      std::string where;
      for (const auto& [name, v] : p.params) where += " " + name + "=" + num(v);
      throw ConfigError("sweep point" + where + ": " + violations.front().field + ": " +
                        violations.front().message);
    }
  }

  const fs::path out_dir(opt.out);
  fs::create_directories(out_dir / "points");
  std::vector<std::string> rows(points.size());
  std::atomic<std::size_t> next{0};
  std::atomic<int> failed{0};
  std::mutex log_mutex;

  auto work = [&] {
    for (std::size_t k = next++; k < points.size(); k = next++) {
      SystemConfig c = base;
      std::string row;
      for (const auto& [name, v] : points[k].params) {
        set_parameter(c, name, v);
        row += num(v) + ',';
      }
      const auto start = std::chrono::steady_clock::now();
      try {
        const Topology topo = Topology::build(c);
        const Analysis a = analyze(c, topo, opt);
        std::string tail = measures_csv_row(a.measures) + ',' + num(a.fixed_point.residual);
        if (opt.simulate) {
          SimConfig sim = opt.sim;
          sim.threads = 1;
          tail += ',' + sim_columns(simulate(c, topo, sim));
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        row += std::string("ok,") + (opt.node_only ? "decomposition" : "product_form") + ',' + tail +
               ',' + num(secs) + ',';
      } catch (const std::exception& e) {
        ++failed;
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const int blanks = 13 + (opt.simulate ? 12 : 0);
        row += "error,,";
        for (int b = 0; b < blanks; ++b) row += ',';
        row += num(secs) + ',' + csv_escape(e.what());
        std::lock_guard lock(log_mutex);
        std::cerr << "sweep point " << k << " failed: " << e.what() << '\n';
      }
      char name[32];
      std::snprintf(name, sizeof name, "point_%04zu.csv", k);
      write_atomic(out_dir / "points" / name, row + '\n');
      rows[k] = std::move(row);
    }
  };
  {
    std::vector<std::jthread> pool;
    const int workers = std::clamp(opt.workers, 1, static_cast<int>(points.size()));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  std::string table;
  for (const auto& [name, v] : points.front().params) table += name + ',';
  table += "status,mode," + measures_csv_header() + ",residual";
  if (opt.simulate) table += ',' + sim_columns_header();
  table += ",wall_time_s,error\n";
  for (const auto& r : rows) table += r + '\n';
  write_atomic(out_dir / "sweep.csv", table);
  std::cout << "wrote " << (out_dir / "sweep.csv").string() << " (" << points.size() << " points, "
            << failed << " failed)\n";
  return failed > 0 ? kPartial : kOk;
}

int run_solve(const Options& opt) {
  const SystemConfig config = load_valid(opt.config);
  const Topology topology = Topology::build(config);
  const Analysis a = analyze(config, topology, opt);
  write_analysis(opt.out, config, topology, opt, a);
  if (opt.simulate) write_simulation(opt.out, config, topology, simulate(config, topology, opt.sim));
  std::cout << "converged in " << a.fixed_point.trace.size() << " iterations, residual "
            << num(a.fixed_point.residual) << "; wrote " << opt.out << '\n';
  return kOk;
}

int run_simulate(const Options& opt) {
  const SystemConfig config = load_valid(opt.config);
  const Topology topology = Topology::build(config);
  const SimEstimates s = simulate(config, topology, opt.sim);
  write_simulation(opt.out, config, topology, s);
  std::cout << "eta " << num(s.eta.mean) << " +- " << num(s.eta.se) << ", xi " << num(s.xi.mean)
            << " +- " << num(s.xi.se) << ", F_A " << num(s.busy.mean) << " +- " << num(s.busy.se)
            << "; wrote " << opt.out << '\n';
  return kOk;
}

void add_common(CLI::App* cmd, Options& opt) {
  cmd->add_option("--config", opt.config, "system config (JSON)")->envname("DBSS_CONFIG");
  cmd->add_option("--out", opt.out, "output directory")->envname("DBSS_OUT");
}

void add_analytic(CLI::App* cmd, Options& opt) {
  cmd->add_option("--epsilon", opt.epsilon, "fixed-point tolerance")->envname("DBSS_EPSILON");
  cmd->add_option("--max-iterations", opt.max_iterations)->envname("DBSS_MAX_ITERATIONS");
  cmd->add_option("--max-states", opt.max_states, "state-space enumeration cap")
      ->envname("DBSS_MAX_STATES");
  cmd->add_flag("--node-marginal-only", opt.node_only,
                "skip C; report decomposition-approximation node marginals")
      ->envname("DBSS_NODE_MARGINAL_ONLY");
  cmd->add_option("--anchor", opt.anchor, "rate normalization: node-count or first-region")
      ->check(CLI::IsMember({"node-count", "first-region"}))
      ->envname("DBSS_ANCHOR");
  cmd->add_flag("--simulate", opt.simulate, "also run the simulator")->envname("DBSS_SIMULATE");
}

void add_sim(CLI::App* cmd, Options& opt) {
  cmd->add_option("--horizon", opt.sim.horizon)->envname("DBSS_HORIZON");
  cmd->add_option("--warmup", opt.sim.warmup)->envname("DBSS_WARMUP");
  cmd->add_option("--seed", opt.sim.seed)->envname("DBSS_SEED");
  cmd->add_option("--replications", opt.sim.replications)->envname("DBSS_REPLICATIONS");
  cmd->add_option("--threads", opt.sim.threads, "simulation threads (0: all cores)")
      ->envname("DBSS_THREADS");
}

}  // namespace

int main(int argc, char** argv) {
  std::locale::global(std::locale::classic());
  CLI::App app{"Stationary analysis of a dockless bike-sharing network with unusable bikes"};
  app.require_subcommand(1);
  Options opt;

  auto* solve = app.add_subcommand("solve", "relative rates, product form, measures");
  add_common(solve, opt);
  add_analytic(solve, opt);
  add_sim(solve, opt);

  auto* sweep = app.add_subcommand("sweep", "one measures row per parameter value");
  add_common(sweep, opt);
  add_analytic(sweep, opt);
  add_sim(sweep, opt);
  sweep->add_option("--sweep", opt.sweep, "PARAM=v1,v2,... (repeat for a grid)")
      ->envname("DBSS_SWEEP");
  sweep->add_option("--pairs", opt.pairs, "\"(M,Z);(M,Z);...\"")->envname("DBSS_PAIRS");
  sweep->add_option("--workers", opt.workers, "concurrent sweep points")->envname("DBSS_WORKERS");

  auto* sim = app.add_subcommand("simulate", "discrete-event simulation only");
  add_common(sim, opt);
  add_sim(sim, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*solve) return run_solve(opt);
    if (*sweep) return run_sweep(opt);
    return run_simulate(opt);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const NonConvergence& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (!e.trace().empty()) {
      fs::create_directories(opt.out);
      const SystemConfig config = load_config(opt.config);
      write_atomic(fs::path(opt.out) / "trace.csv", render([&](std::ostream& out) {
                     write_trace_csv(out, Topology::build(config), e.trace());
                   }));
      std::cerr << "trace written to " << (fs::path(opt.out) / "trace.csv").string() << '\n';
    }
    return kNoConvergence;
  } catch (const StateCapExceeded& e) {
    std::cerr << "error: " << e.what() << " (use --node-marginal-only or raise --max-states)\n";
    return kTooLarge;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
