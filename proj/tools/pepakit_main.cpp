// pepakit: file-based front end over the core library.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "pepakit/io.hpp"
#include "pepakit/version.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace pepakit;

namespace {

enum Exit { kOk = 0, kUsage = 1, kModel = 2, kAnalysis = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  std::string out;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    out += buf;
  }
  return out;
}

struct Options {
  std::string input;
  std::string out = ".";
  std::uint64_t seed = 1;
  std::int64_t scale = 1;
  std::size_t cap = kDefaultStateCap;
  std::string method = "auto";
  double t_max = 1000.0;
  double t_end = 10.0;
  std::optional<double> dt;
  double warmup = 0.1;
  std::vector<std::string> rewards;
  std::size_t replications = 1;
  std::size_t kurtz_replications = 20;
  std::optional<double> sample_dt;
  std::optional<double> early_stop;
  std::vector<std::int64_t> n_list{1, 10, 100};
  std::size_t grid = 1000;
};

// Records every option of a subcommand with its resolved value.
ordered_json resolved_flags(const CLI::App* sub) {
  ordered_json flags = ordered_json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_name() == "--help" || opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (opt->count() > 0) {
      const auto& res = opt->results();
      if (opt->get_expected_max() > 1 || res.size() > 1) flags[name] = res;
      else flags[name] = res.empty() ? "" : res.front();
    } else {
      flags[name] = opt->get_default_str();
    }
  }
  return flags;
}

class Runner {
 public:
  Runner(std::string name, const Options& opt) : name_(std::move(name)), opt_(opt) {}

  int run(const CLI::App* sub);

 private:
  void out(const std::string& file, const std::string& contents) {
    io::write_file(fs::path(opt_.out) / file, contents);
  }
  Derivation derive() {
    stage_ = "derivation";
    Derivation d = derive_all(*model_);
    return d;
  }
  NumericalState start(const Derivation& d) const {
    if (opt_.scale < 1) throw UsageError("--scale must be at least 1");
    return initial_state(d.matrices.derivatives, opt_.scale);
  }
  TransitionSystem explore(const Derivation& d) {
    stage_ = "statespace";
    return reachable(d.matrices, d.rates, start(d), opt_.cap);
  }

  void cmd_parse();
  void cmd_matrix();
  void cmd_states();
  void cmd_steady();
  void cmd_transient();
  void cmd_simulate();
  void cmd_ode();
  void cmd_kurtz();
  void cmd_ptnet();

  std::string name_;
  const Options& opt_;
  std::string stage_ = "cli";
  std::optional<PepaModel> model_;
};

int Runner::run(const CLI::App* sub) {
  std::string text;
  try {
    text = io::read_file(opt_.input);
  } catch (const std::exception& e) {
    std::cerr << "cli: " << e.what() << "\n";
    return kUsage;
  }
  try {
    stage_ = "model-core";
    model_.emplace(parse_model(text));
    if (name_ == "parse") cmd_parse();
    else if (name_ == "matrix") cmd_matrix();
    else if (name_ == "states") cmd_states();
    else if (name_ == "steady") cmd_steady();
    else if (name_ == "transient") cmd_transient();
    else if (name_ == "simulate") cmd_simulate();
    else if (name_ == "ode") cmd_ode();
    else if (name_ == "kurtz") cmd_kurtz();
    else if (name_ == "ptnet") cmd_ptnet();

    ordered_json manifest;
    manifest["subcommand"] = name_;
    manifest["input"] = opt_.input;
    manifest["flags"] = resolved_flags(sub);
    manifest["seed"] = opt_.seed;
    manifest["version"] = kVersion;
    manifest["input_sha256"] = sha256_hex(text);
    out("manifest.json", manifest.dump(2) + "\n");
    return kOk;
  } catch (const UsageError& e) {
    std::cerr << "cli: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << stage_ << ": " << e.what() << "\n";
    return kUsage;
  } catch (const ModelError& e) {
    std::cerr << stage_ << ": " << e.what() << "\n";
    return kModel;
  } catch (const AnalysisError& e) {
    std::cerr << stage_ << ": " << e.what() << "\n";
    return kAnalysis;
  } catch (const std::exception& e) {
    std::cerr << "cli: " << e.what() << "\n";
    return kAnalysis;
  }
}

void Runner::cmd_parse() {
  const DerivativeTable table = local_derivatives(*model_);
  const std::string listing = io::derivatives_text(table);
  std::cout << listing;
  out("derivatives.txt", listing);
}

void Runner::cmd_matrix() {
  const Derivation d = derive();
  out("C.csv", io::matrix_csv(d.matrices, d.matrices.c));
  out("C_pre.csv", io::matrix_csv(d.matrices, d.matrices.c_pre));
  out("C_post.csv", io::matrix_csv(d.matrices, d.matrices.c_post));
  out("rates.json", io::rates_json(d.matrices, d.rates));
}

void Runner::cmd_states() {
  const Derivation d = derive();
  const TransitionSystem ts = explore(d);
  const auto bound = state_space_bound(d.matrices.derivatives, opt_.scale);
  std::ostringstream report;
  report << "reachable " << ts.states.size() << "\n";
  report << "bound " << bound.str() << "\n";
  report << "deadlocks " << deadlocks(ts).size() << "\n";
  std::cout << report.str();
  out("bound.txt", report.str());
  out("states.csv", io::states_csv(d.matrices.derivatives, ts));
  out("edges.csv", io::edges_csv(d.matrices, ts));
}

SteadyMethod parse_method(const std::string& m) {
  if (m == "auto") return SteadyMethod::Auto;
  if (m == "dense") return SteadyMethod::DenseLU;
  if (m == "sparse") return SteadyMethod::SparseLU;
  if (m == "power") return SteadyMethod::Power;
  throw UsageError("unknown method '" + m + "'");
}

void Runner::cmd_steady() {
  const SteadyMethod method = parse_method(opt_.method);
  const Derivation d = derive();
  const TransitionSystem ts = explore(d);
  const Generator g = build_generator(ts);
  const auto pi = steady_state(g, method);
  out("states.csv", io::states_csv(d.matrices.derivatives, ts));
  out("pi.csv", io::pi_csv(pi));
}

void Runner::cmd_transient() {
  const Derivation d = derive();
  const TransitionSystem ts = explore(d);
  const Generator g = build_generator(ts);
  std::vector<double> pi0(ts.states.size(), 0.0);
  pi0[ts.initial] = 1.0;
  const double dt = opt_.dt.value_or(opt_.t_end / 100.0);
  const TransientResult r = transient(g, pi0, opt_.t_end, dt);
  out("states.csv", io::states_csv(d.matrices.derivatives, ts));
  out("transient.csv", io::transient_csv(r));
}

void Runner::cmd_simulate() {
  const Derivation d = derive();
  stage_ = "simulate";
  std::vector<RewardSpec> rewards;
  for (const auto& r : opt_.rewards) rewards.push_back(parse_reward(r, d.matrices));
  if (opt_.replications < 1) throw UsageError("--replications must be at least 1");
  const Simulator sim(d.matrices, d.rates);
  SimConfig cfg;
  cfg.seed = opt_.seed;
  cfg.t_max = opt_.t_max;
  cfg.warmup_fraction = opt_.warmup;
  cfg.checkpoint_rel_tol = opt_.early_stop;
  cfg.sample_dt = opt_.sample_dt;
  const ReplicationSummary s = replications(sim, start(d), rewards, cfg, opt_.replications);
  out("results.json", io::results_json(rewards, s, opt_.seed));
  if (opt_.sample_dt)
    out("trajectory.csv", io::trajectory_csv(d.matrices.derivatives, s.runs.front().trajectory));
}

void Runner::cmd_ode() {
  const Derivation d = derive();
  stage_ = "fluid";
  const VectorField vf(d.matrices, d.rates);
  const NumericalState x0 = start(d);
  const std::vector<double> x(x0.begin(), x0.end());
  const double dt = opt_.dt.value_or(1e-3 * opt_.t_end);
  const OdeTrajectory traj = integrate(vf, x, opt_.t_end, dt);
  if (traj.clipped > 0)
    std::cerr << "fluid: warning: " << traj.clipped << " negative values clipped to 0\n";
  out("ode.csv", io::ode_csv(d.matrices.derivatives, traj));
}

void Runner::cmd_kurtz() {
  const Derivation d = derive();
  stage_ = "fluid";
  KurtzConfig cfg;
  cfg.n_list = opt_.n_list;
  cfg.t_end = opt_.t_end;
  cfg.replications = opt_.kurtz_replications;
  cfg.seed = opt_.seed;
  cfg.grid_points = opt_.grid;
  const auto rows = kurtz_harness(d.matrices, d.rates, start(d), cfg);
  out("kurtz.json", io::kurtz_json(rows));
}

void Runner::cmd_ptnet() {
  const Derivation d = derive();
  stage_ = "ptnet";
  const PTSystem net = to_ptnet(d.matrices, start(d));
  const auto invs = p_invariants(net);
  out("net.json", io::net_json(net));
  out("invariants.csv", io::invariants_csv(net, invs));
  const TransitionSystem ts = explore(d);
  stage_ = "ptnet";
  const InvariantReport report = check_invariants(ts, invs);
  std::cout << "invariants " << invs.size() << "\n";
  std::cout << "states checked " << report.states_checked << "\n";
  for (const auto& v : report.violations) {
    std::cout << "violation invariant " << v.invariant << " state " << v.state << " expected "
              << v.expected << " actual " << v.actual << "\n";
  }
  if (!report.ok()) throw AnalysisError("invariant check failed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pepakit: numerical representation analysis of PEPA models"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Options opt;
  auto add = [&](const std::string& name, const std::string& desc) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("model", opt.input, "PEPA model file")->required();
    sub->add_option("--out", opt.out, "Output directory")->capture_default_str();
    return sub;
  };
  auto scale = [&](CLI::App* s) {
    s->add_option("--scale", opt.scale, "Multiply every initial population by N")
        ->capture_default_str();
  };
  auto cap = [&](CLI::App* s) {
    s->add_option("--cap", opt.cap, "Abort exploration above this many states")
        ->capture_default_str();
  };
  auto seed = [&](CLI::App* s) {
    s->add_option("--seed", opt.seed, "Base RNG seed")->capture_default_str();
  };

  add("parse", "Validate a model and list its local derivatives");
  add("matrix", "Write the activity matrices and rate data");
  CLI::App* states = add("states", "Enumerate reachable states and edges");
  scale(states);
  cap(states);
  CLI::App* steady = add("steady", "Steady-state distribution");
  scale(steady);
  cap(steady);
  steady->add_option("--method", opt.method, "auto, dense, sparse or power")
      ->capture_default_str();
  CLI::App* trans = add("transient", "Transient distribution on a time grid");
  scale(trans);
  cap(trans);
  trans->add_option("--t-end", opt.t_end, "End time")->capture_default_str();
  trans->add_option("--dt", opt.dt, "Output grid spacing (default t-end/100)");
  CLI::App* sim = add("simulate", "Stochastic simulation with rewards");
  scale(sim);
  seed(sim);
  sim->add_option("--t-max", opt.t_max, "Simulated time per run")->capture_default_str();
  sim->add_option("--warmup", opt.warmup, "Warm-up fraction of t-max")->capture_default_str();
  sim->add_option("--reward", opt.rewards, "state:U=c,... or throughput:<label|action>");
  sim->add_option("--replications", opt.replications, "Independent runs (seeds seed+i)")
      ->capture_default_str();
  sim->add_option("--sample-dt", opt.sample_dt, "Write trajectory.csv sampled every DT");
  sim->add_option("--early-stop", opt.early_stop, "Relative tolerance between checkpoints");
  CLI::App* ode = add("ode", "Integrate the fluid approximation");
  scale(ode);
  ode->add_option("--t-end", opt.t_end, "End time")->capture_default_str();
  ode->add_option("--dt", opt.dt, "RK4 step (default 1e-3 * t-end)");
  CLI::App* kurtz = add("kurtz", "Sup-norm error of scaled simulations against the ODE");
  scale(kurtz);
  seed(kurtz);
  kurtz->add_option("--n-list", opt.n_list, "Increasing scaling factors")
      ->delimiter(',')
      ->capture_default_str();
  kurtz->add_option("--t-end", opt.t_end, "End time")->capture_default_str();
  kurtz->add_option("--replications", opt.kurtz_replications, "Runs per scaling factor")
      ->capture_default_str();
  kurtz->add_option("--grid", opt.grid, "Grid intervals on [0, t-end]")->capture_default_str();
  CLI::App* pt = add("ptnet", "Export the P/T net and its P-invariants");
  scale(pt);
  cap(pt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  for (CLI::App* sub : app.get_subcommands()) {
    Runner runner(sub->get_name(), opt);
    return runner.run(sub);
  }
  return kUsage;
}
