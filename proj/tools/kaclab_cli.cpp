// Command line front end. Every subcommand is a thin wrapper over one library
// entry point with deterministic, file-oriented output: CSV for sample and
// grid data, JSON for scalar reports. Stochastic subcommands require --seed
// and draw from per-index rng streams, so results are byte-identical at any
// --threads value.

#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "kaclab/datum.hpp"
#include "kaclab/experiment.hpp"
#include "kaclab/finiteness.hpp"
#include "kaclab/fixed_point.hpp"
#include "kaclab/fourier_oracle.hpp"
#include "kaclab/kernel.hpp"
#include "kaclab/metrics.hpp"
#include "kaclab/parallel.hpp"
#include "kaclab/rng.hpp"
#include "kaclab/stable.hpp"
#include "kaclab/text.hpp"
#include "kaclab/wild.hpp"

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_output(const std::string& path, const std::string& content) {
  kaclab::write_text_file(path, content);
}

// Prints to stdout and, when --out was given, also writes the file.
void deliver(const std::string& text, const std::string& out_path) {
  std::cout << text;
  if (!out_path.empty()) write_output(out_path, text);
}

json finite_or_null(double x) {
  return std::isfinite(x) ? json(x) : json(nullptr);
}

std::vector<double> parse_double_list(const std::string& s, const char* what) {
  std::vector<double> out;
  for (auto part : kaclab::split(s, ',')) {
    try {
      out.push_back(kaclab::parse_double(part));
    } catch (const std::exception&) {
      throw std::runtime_error(std::string(what) + ": bad number '" +
                               std::string(part) + "'");
    }
  }
  if (out.empty()) throw std::runtime_error(std::string(what) + ": empty list");
  return out;
}

// key=value,key=value parser for --tails and --stable.
std::vector<std::pair<std::string, double>> parse_kv_list(const std::string& s,
                                                          const char* what) {
  std::vector<std::pair<std::string, double>> out;
  for (auto part : kaclab::split(s, ',')) {
    auto [key, value] = kaclab::split_kv(part);
    if (key.empty() || value.empty()) {
      throw std::runtime_error(std::string(what) + ": expected key=value, got '" +
                               std::string(part) + "'");
    }
    out.emplace_back(std::string(key), kaclab::parse_double(value));
  }
  return out;
}

kaclab::StableParams tails_to_stable(const std::string& kv, double alpha) {
  std::optional<double> c0, c_plus, c_minus;
  double gamma0 = 0.0;
  for (const auto& [key, value] : parse_kv_list(kv, "--tails")) {
    if (key == "c0") c0 = value;
    else if (key == "c_plus") c_plus = value;
    else if (key == "c_minus") c_minus = value;
    else if (key == "gamma0") gamma0 = value;
    else throw std::runtime_error("--tails: unknown key '" + key + "'");
  }
  if (c0.has_value() == (c_plus.has_value() || c_minus.has_value())) {
    throw std::runtime_error("--tails: give c0=<v> or c_plus=<v>,c_minus=<v>");
  }
  if (c0) return kaclab::params_from_tails(*c0, *c0, alpha, gamma0);
  if (!c_plus || !c_minus) {
    throw std::runtime_error("--tails: both c_plus and c_minus are required");
  }
  return kaclab::params_from_tails(*c_plus, *c_minus, alpha, gamma0);
}

kaclab::StableParams stable_from_kv(const std::string& kv) {
  kaclab::StableParams p;
  bool have_alpha = false, have_lambda = false;
  for (const auto& [key, value] : parse_kv_list(kv, "--stable")) {
    if (key == "alpha") { p.alpha = value; have_alpha = true; }
    else if (key == "lambda") { p.lambda = value; have_lambda = true; }
    else if (key == "beta") p.beta = value;
    else if (key == "gamma0") p.gamma0 = value;
    else throw std::runtime_error("--stable: unknown key '" + key + "'");
  }
  if (!have_alpha || !have_lambda) {
    throw std::runtime_error("--stable: alpha and lambda are required");
  }
  kaclab::validate_stable(p);
  return p;
}

// Shared by check-finiteness: "stable" or "tails" object, same layout as the
// decay config.
kaclab::StableParams stable_from_json(const json& j) {
  if (j.contains("stable") == j.contains("tails")) {
    throw std::runtime_error("config: exactly one of stable/tails is required");
  }
  if (j.contains("stable")) {
    const auto& s = j.at("stable");
    kaclab::StableParams p;
    p.alpha = s.at("alpha").get<double>();
    p.lambda = s.at("lambda").get<double>();
    p.beta = s.value("beta", 0.0);
    p.gamma0 = s.value("gamma0", 0.0);
    kaclab::validate_stable(p);
    return p;
  }
  const auto& s = j.at("tails");
  return kaclab::params_from_tails(s.at("c_plus").get<double>(),
                                   s.at("c_minus").get<double>(),
                                   s.at("alpha").get<double>(),
                                   s.value("gamma0", 0.0));
}

kaclab::Remainder remainder_from_json(const json& j) {
  std::string family = j.at("family").get<std::string>();
  if (family == "power") return kaclab::Remainder::power(j.at("epsilon").get<double>());
  if (family == "log-power") {
    return kaclab::Remainder::log_power(j.at("epsilon").get<double>());
  }
  if (family == "custom") {
    return kaclab::Remainder::custom(j.at("integrable").get<bool>());
  }
  throw std::runtime_error("tail_spec.remainder: unknown family '" + family + "'");
}

kaclab::TailSpec tail_spec_from_json(const json& j) {
  kaclab::TailSpec spec;
  spec.c_minus = j.at("c_minus").get<std::vector<double>>();
  spec.c_plus = j.at("c_plus").get<std::vector<double>>();
  spec.remainder = remainder_from_json(j.at("remainder"));
  spec.gamma0 = j.value("gamma0", 0.0);
  if (j.contains("one_sided_moment")) {
    std::string side = j.at("one_sided_moment").get<std::string>();
    if (side == "negative") spec.one_sided_moment = kaclab::MomentSide::negative_side;
    else if (side == "positive") spec.one_sided_moment = kaclab::MomentSide::positive_side;
    else if (side == "both") spec.one_sided_moment = kaclab::MomentSide::both_sides;
    else throw std::runtime_error("tail_spec: unknown one_sided_moment '" + side + "'");
  }
  return spec;
}

json verdict_to_json(const kaclab::Verdict& v) {
  json reasons = json::array();
  for (const auto& r : v.reasons) {
    reasons.push_back({{"condition", r.condition}, {"passed", r.passed}, {"note", r.note}});
  }
  return json{{"established", v.established},
              {"k_used", v.k_used},
              {"target_minus", v.target_minus},
              {"target_plus", v.target_plus},
              {"reasons", reasons}};
}

// Runs fn(i) for each index, forwarding the first worker exception instead of
// letting it terminate the process (parallel_for_index joins plain threads).
template <class Fn>
void parallel_draws(std::size_t n, unsigned threads, Fn&& fn) {
  std::mutex mu;
  std::string error;
  kaclab::parallel_for_index(n, threads, [&](std::size_t i) {
    try {
      fn(i);
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(mu);
      if (error.empty()) error = e.what();
    }
  });
  if (!error.empty()) throw std::runtime_error(error);
}

std::string sample_csv(const std::vector<std::optional<double>>& values) {
  std::string csv = "sample_index,value\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i]) continue;  // truncated draw, index skipped on purpose
    csv += std::to_string(i);
    csv += ',';
    csv += kaclab::format_double(*values[i]);
    csv += '\n';
  }
  return csv;
}

int cmd_spectral(const std::string& kernel_spec, const std::string& q_list,
                 const std::string& out_path) {
  kaclab::CollisionKernel kernel = kaclab::parse_kernel(kernel_spec);
  kaclab::SpectralProfile profile = kaclab::spectral_profile(kernel);
  json table = json::array();
  for (double q : parse_double_list(q_list, "--q")) {
    table.push_back({{"q", q}, {"s", profile.s(q)}, {"phi", profile.phi(q)}});
  }
  json out{{"kernel", kernel.describe()},
           {"alpha", profile.alpha},
           {"p0", profile.p0 ? json(*profile.p0) : json(nullptr)},
           {"p_bar", finite_or_null(profile.p_bar)},
           {"s_table", table}};
  deliver(out.dump(2) + "\n", out_path);
  return 0;
}

int cmd_rates(const std::string& kernel_spec, double p, const std::string& regime,
              const std::string& out_path) {
  kaclab::CollisionKernel kernel = kaclab::parse_kernel(kernel_spec);
  kaclab::DecayRate rate = kaclab::rate_constant(kernel, p, kaclab::parse_regime(regime));
  json out{{"kernel", kernel.describe()},
           {"p", rate.p},
           {"regime", kaclab::to_string(rate.regime)},
           {"rate", rate.rate},
           {"log_correction", rate.log_correction}};
  deliver(out.dump(2) + "\n", out_path);
  return 0;
}

int cmd_simulate(const std::string& kernel_spec, const std::string& datum_spec,
                 double t, std::size_t samples, std::uint64_t seed,
                 std::size_t tree_cap, unsigned threads, const std::string& out_path) {
  kaclab::CollisionKernel kernel = kaclab::parse_kernel(kernel_spec);
  kaclab::InitialDatum datum = kaclab::parse_datum(datum_spec);
  if (!(t >= 0.0)) throw std::runtime_error("--t must be >= 0");
  if (samples == 0) throw std::runtime_error("--samples must be positive");
  std::vector<std::optional<double>> values(samples);
  std::vector<kaclab::TruncationCounter> counters(samples);
  parallel_draws(samples, threads, [&](std::size_t i) {
    kaclab::Rng rng = kaclab::Rng::stream(seed, i);
    values[i] = kaclab::sample_v_t(kernel, datum, t, rng, tree_cap, &counters[i]);
  });
  std::uint64_t truncated = 0;
  for (const auto& c : counters) truncated += c.truncated;
  write_output(out_path, sample_csv(values));
  if (truncated > 0) {
    std::cerr << "simulate: " << truncated << " of " << samples
              << " draws exceeded the collision-tree cap and were dropped\n";
  }
  std::cout << "wrote " << (samples - truncated) << " samples to " << out_path << "\n";
  return 0;
}

int cmd_steady(const std::string& kernel_spec, const std::string& tails_kv,
               const std::string& stable_kv, std::size_t samples, std::uint64_t seed,
               const std::string& pool_cache, std::size_t pool_size,
               std::size_t pool_depth, std::size_t pool_depth_cap, unsigned threads,
               const std::string& out_path) {
  kaclab::CollisionKernel kernel = kaclab::parse_kernel(kernel_spec);
  double alpha = kaclab::find_alpha(kernel);
  if (tails_kv.empty() == stable_kv.empty()) {
    throw std::runtime_error("give exactly one of --tails / --stable");
  }
  kaclab::StableParams stable =
      tails_kv.empty() ? stable_from_kv(stable_kv) : tails_to_stable(tails_kv, alpha);
  if (samples == 0) throw std::runtime_error("--samples must be positive");

  // Mixture pool seed is offset from the sampling seed so pool draws and
  // steady draws never share a stream.
  std::uint64_t pool_seed = seed + 0x9E3779B97F4A7C15ull;
  bool from_cache = !pool_cache.empty() && std::filesystem::exists(pool_cache);
  kaclab::MixtureLaw law =
      from_cache ? kaclab::load_pool(kernel, alpha, pool_cache)
                 : kaclab::build_pool(kernel, alpha, pool_seed, pool_size,
                                      pool_depth, pool_depth_cap,
                                      static_cast<int>(threads));
  if (!from_cache && !pool_cache.empty() && !law.delta_one) {
    kaclab::save_pool(law, pool_cache);
  }

  std::vector<std::optional<double>> values(samples);
  parallel_draws(samples, threads, [&](std::size_t i) {
    kaclab::Rng rng = kaclab::Rng::stream(seed, i);
    values[i] = kaclab::sample_steady(law, stable, rng);
  });
  write_output(out_path, sample_csv(values));
  std::cout << "wrote " << samples << " samples to " << out_path << "\n";
  return 0;
}

int cmd_distance(const std::string& a_path, const std::string& b_path, double p,
                 const std::string& estimator, const std::string& out_path) {
  std::vector<double> a = kaclab::read_csv_column(a_path, "value");
  std::vector<double> b = kaclab::read_csv_column(b_path, "value");
  kaclab::DistanceEstimate est;
  if (estimator == "quantile") {
    est = kaclab::wasserstein_empirical(kaclab::EmpiricalMeasure::from_samples(a),
                                        kaclab::EmpiricalMeasure::from_samples(b), p);
  } else if (estimator == "coupled") {
    if (a.size() != b.size()) {
      throw std::runtime_error("coupled estimator needs files of equal length");
    }
    std::vector<std::pair<double, double>> pairs(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) pairs[i] = {a[i], b[i]};
    est = kaclab::wasserstein_coupled(pairs, p);
  } else {
    throw std::runtime_error("--estimator must be quantile or coupled");
  }
  json out{{"value", est.value},
           {"stderr", est.stderr_ ? json(*est.stderr_) : json(nullptr)},
           {"estimator", kaclab::estimator_name(est.estimator)},
           {"p", est.p}};
  deliver(out.dump(2) + "\n", out_path);
  return 0;
}

int cmd_oracle(const std::string& kernel_spec, const std::string& datum_spec,
               const std::string& t_list, double dt, double ratio, double xi_max,
               unsigned threads, const std::string& out_path) {
  kaclab::CollisionKernel kernel = kaclab::parse_kernel(kernel_spec);
  kaclab::InitialDatum datum = kaclab::parse_datum(datum_spec);
  std::vector<double> t_grid = parse_double_list(t_list, "--t-grid");
  if (!std::is_sorted(t_grid.begin(), t_grid.end()) || !(t_grid.front() >= 0.0)) {
    throw std::runtime_error("--t-grid must be sorted and nonnegative");
  }
  kaclab::CharacteristicFn cf0 = [&datum, &datum_spec](double xi) {
    auto v = datum.cf(xi);
    if (!v) {
      throw std::runtime_error("datum '" + datum_spec +
                               "' has no closed-form characteristic function");
    }
    return *v;
  };
  cf0(1.0);  // fail early, before any integration work
  kaclab::CfGrid grid(kernel, ratio, 1e-300, xi_max);
  std::string csv = "t,xi,re,im\n";
  for (double t : t_grid) {
    kaclab::CfGrid evolved = kaclab::evolve_cf(kernel, cf0, t, grid, dt, threads);
    const auto& values = evolved.values();
    for (std::size_t k = 0; k < evolved.size(); ++k) {
      csv += kaclab::format_double(t);
      csv += ',';
      csv += kaclab::format_double(evolved.xi(k));
      csv += ',';
      csv += kaclab::format_double(values[k].real());
      csv += ',';
      csv += kaclab::format_double(values[k].imag());
      csv += '\n';
    }
  }
  write_output(out_path, csv);
  std::cout << "wrote " << t_grid.size() << " time slices on " << grid.size()
            << " frequency nodes to " << out_path << "\n";
  return 0;
}

int cmd_decay(const std::string& config_path, const std::string& out_dir,
              unsigned threads_override, const std::string& out_path) {
  kaclab::ExperimentConfig cfg = kaclab::parse_experiment_config(read_file(config_path));
  if (threads_override > 0) cfg.threads = threads_override;
  std::string csv_path = cfg.out_csv, json_path = cfg.out_json;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    csv_path = (std::filesystem::path(out_dir) / "report.csv").string();
    json_path = (std::filesystem::path(out_dir) / "summary.json").string();
  }
  kaclab::DecayReport report = kaclab::run_experiment(cfg);
  kaclab::emit_report(report, csv_path, json_path);
  deliver(kaclab::report_summary_json(report), out_path);
  return 0;
}

int cmd_check_finiteness(const std::string& config_path, const std::string& out_path) {
  json j = json::parse(read_file(config_path));
  kaclab::CollisionKernel kernel = kaclab::parse_kernel(j.at("kernel").get<std::string>());
  kaclab::StableParams stable = stable_from_json(j);
  double p = j.at("p").get<double>();
  kaclab::TailSpec spec = tail_spec_from_json(j.at("tail_spec"));
  kaclab::Verdict verdict = kaclab::check_finiteness(spec, kernel, stable, p);
  deliver(verdict_to_json(verdict).dump(2) + "\n", out_path);
  return verdict.established ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kaclab: sampling, steady states, and decay-rate measurements "
               "for one-dimensional kinetic collision models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "kaclab 0.1.0");

  std::string kernel_spec, datum_spec, out_path, q_list = "0.5,1,2,3,4";
  std::string regime, tails_kv, stable_kv, a_path, b_path, estimator = "quantile";
  std::string t_list, config_path, out_dir, pool_cache;
  double p = 2.0, t = 0.0, dt = 0.005, ratio = 1.1892071150027210667, xi_max = 32.0;
  std::size_t samples = 0, tree_cap = kaclab::default_tree_cap;
  std::size_t pool_size = 100000, pool_depth = std::size_t{1} << 14;
  std::size_t pool_depth_cap = std::size_t{1} << 18;
  std::uint64_t seed = 0;
  unsigned threads = 1, decay_threads = 0;

  auto* spectral = app.add_subcommand(
      "spectral", "Spectral function, index, and moment horizon of a kernel");
  spectral->add_option("--kernel", kernel_spec, "kernel spec string")->required();
  spectral->add_option("--q", q_list, "comma list of orders to tabulate");
  spectral->add_option("--out", out_path, "also write the JSON to this file");

  auto* rates = app.add_subcommand(
      "rates", "Decay rate constant for a kernel, order, and regime");
  rates->add_option("--kernel", kernel_spec, "kernel spec string")->required();
  rates->add_option("--p", p, "moment order")->required();
  rates->add_option("--regime", regime,
                    "wasserstein-low | alpha-lt-1 | alpha-in-1-2 | alpha-eq-2 | chi")
      ->required();
  rates->add_option("--out", out_path, "also write the JSON to this file");

  auto* simulate = app.add_subcommand(
      "simulate", "Draw exact samples of the solution at time t (CSV sample_index,value)");
  simulate->add_option("--kernel", kernel_spec, "kernel spec string")->required();
  simulate->add_option("--datum", datum_spec, "initial datum spec string")->required();
  simulate->add_option("--t", t, "time")->required();
  simulate->add_option("--samples", samples, "number of draws")->required();
  simulate->add_option("--seed", seed, "rng seed")->required();
  simulate->add_option("--tree-cap", tree_cap, "drop draws above this leaf count");
  simulate->add_option("--threads", threads, "worker threads");
  simulate->add_option("--out", out_path, "output CSV path")->required();

  auto* steady = app.add_subcommand(
      "steady", "Draw samples of the steady state (CSV sample_index,value)");
  steady->add_option("--kernel", kernel_spec, "kernel spec string")->required();
  steady->add_option("--tails", tails_kv,
                     "c0=<v> or c_plus=<v>,c_minus=<v>[,gamma0=<v>]");
  steady->add_option("--stable", stable_kv,
                     "alpha=<v>,lambda=<v>[,beta=<v>][,gamma0=<v>]");
  steady->add_option("--samples", samples, "number of draws")->required();
  steady->add_option("--seed", seed, "rng seed")->required();
  steady->add_option("--pool-cache", pool_cache, "load/store the mixture pool here");
  steady->add_option("--pool-size", pool_size, "mixture pool size");
  steady->add_option("--pool-depth", pool_depth, "initial recursion depth");
  steady->add_option("--pool-depth-cap", pool_depth_cap, "depth doubling cap");
  steady->add_option("--threads", threads, "worker threads");
  steady->add_option("--out", out_path, "output CSV path")->required();

  auto* distance = app.add_subcommand(
      "distance", "Wasserstein distance between two sample CSV files (JSON)");
  distance->add_option("--a", a_path, "first CSV (needs a value column)")->required();
  distance->add_option("--b", b_path, "second CSV (needs a value column)")->required();
  distance->add_option("--p", p, "Wasserstein order")->required();
  distance->add_option("--estimator", estimator, "quantile | coupled");
  distance->add_option("--out", out_path, "also write the JSON to this file");

  auto* oracle = app.add_subcommand(
      "oracle", "Integrate the Fourier-side equation on a frequency grid "
                "(CSV t,xi,re,im)");
  oracle->add_option("--kernel", kernel_spec, "kernel spec string")->required();
  oracle->add_option("--datum", datum_spec,
                     "initial datum spec string (needs a closed-form cf)")
      ->required();
  oracle->add_option("--t-grid", t_list, "comma list of output times")->required();
  oracle->add_option("--dt", dt, "integrator step, in (0, 0.01]");
  oracle->add_option("--ratio", ratio, "geometric spacing of frequency nodes");
  oracle->add_option("--xi-max", xi_max, "largest frequency node");
  oracle->add_option("--threads", threads, "worker threads");
  oracle->add_option("--out", out_path, "output CSV path")->required();

  auto* decay = app.add_subcommand(
      "decay", "Run a distance-decay measurement from a JSON config");
  decay->add_option("--config", config_path, "experiment config JSON")->required();
  decay->add_option("--out", out_dir,
                    "directory for report.csv and summary.json (created if needed)");
  decay->add_option("--threads", decay_threads, "override the config thread count");
  decay->add_option("--summary-out", out_path, "also write the summary JSON here");

  auto* finiteness = app.add_subcommand(
      "check-finiteness", "Decide p-th moment finiteness from a declared tail "
                          "expansion (JSON verdict; exit 2 when not established)");
  finiteness->add_option("--config", config_path,
                         "JSON with kernel, stable or tails, p, tail_spec")
      ->required();
  finiteness->add_option("--out", out_path, "also write the JSON to this file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (spectral->parsed()) return cmd_spectral(kernel_spec, q_list, out_path);
    if (rates->parsed()) return cmd_rates(kernel_spec, p, regime, out_path);
    if (simulate->parsed()) {
      return cmd_simulate(kernel_spec, datum_spec, t, samples, seed, tree_cap,
                          threads, out_path);
    }
    if (steady->parsed()) {
      return cmd_steady(kernel_spec, tails_kv, stable_kv, samples, seed, pool_cache,
                        pool_size, pool_depth, pool_depth_cap, threads, out_path);
    }
    if (distance->parsed()) return cmd_distance(a_path, b_path, p, estimator, out_path);
    if (oracle->parsed()) {
      return cmd_oracle(kernel_spec, datum_spec, t_list, dt, ratio, xi_max, threads,
                        out_path);
    }
    if (decay->parsed()) return cmd_decay(config_path, out_dir, decay_threads, out_path);
    if (finiteness->parsed()) return cmd_check_finiteness(config_path, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
