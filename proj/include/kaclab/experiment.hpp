#pragma once

// Config-driven experiment runner: samples the particle representation on a
// time grid, estimates distances to the steady state with the requested
// estimators, fits a decay slope, and compares it against the theoretical
// rate. Runs are fully deterministic for a fixed seed: every replica owns an
// rng stream indexed by (estimator, time, replica), reduction happens in
// index order, and emitted files never include wall-clock data.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kaclab/datum.hpp"
#include "kaclab/fixed_point.hpp"
#include "kaclab/fourier_oracle.hpp"
#include "kaclab/kernel.hpp"
#include "kaclab/metrics.hpp"
#include "kaclab/parallel.hpp"
#include "kaclab/rng.hpp"
#include "kaclab/stable.hpp"
#include "kaclab/stats.hpp"
#include "kaclab/text.hpp"
#include "kaclab/wild.hpp"

namespace kaclab {

struct ExperimentConfig {
  std::string kernel_spec;
  std::string datum_spec;
  double p = 2.0;
  std::vector<double> t_grid;
  std::size_t samples = 0;  // per replica and time point
  std::size_t replicas = 1;
  std::uint64_t seed = 0;  // mandatory: there is no entropy default
  std::vector<Estimator> estimators;
  StableParams stable;
  std::optional<RateRegime> regime;  // absent: no rate claim (stationarity)
  double slope_tolerance = 0.03;
  std::size_t tree_cap = default_tree_cap;
  std::uint64_t replica_budget = 0;  // total replicas allowed; 0 = unlimited
  unsigned threads = 1;
  // Mixture pool controls, used only when the steady law is a true mixture.
  std::size_t pool_size = 32768;
  std::size_t pool_depth = std::size_t{1} << 13;
  std::size_t pool_depth_cap = std::size_t{1} << 17;
  // Fourier controls, used only by the chi estimator.
  double chi_dt = 0.005;
  double chi_ratio = 1.1892071150027210667;  // 2^(1/4)
  std::string out_csv, out_json;  // optional output paths
};

struct DistanceRow {
  double t = 0.0;
  double p = 1.0;
  double estimate = 0.0;
  std::optional<double> stderr_;
  std::size_t n_samples = 0;
  Estimator estimator = Estimator::quantile;
};

struct DecayReport {
  std::vector<DistanceRow> rows;
  std::optional<DecayFit> fit;  // absent when too few usable points
  double theory_rate = 0.0;
  bool log_correction = false;
  bool pass = false;
  bool partial = false;  // replica budget exhausted before the grid finished
  TruncationCounter truncation;
  double wall_seconds = 0.0;  // in-memory diagnostic, never written to files
  ExperimentConfig config;
};

namespace detail {

inline bool needs_sampling(Estimator e) { return e != Estimator::chi; }

// Stream index layout under one master seed: replica draws live at
// row_base + r, steady reference draws at kSteadyOffset + row_base + r.
// Row indices stay far below 2^40, so the spaces cannot collide.
constexpr std::uint64_t kSteadyOffset = std::uint64_t{1} << 48;

inline std::invalid_argument config_error(const std::string& why) {
  return std::invalid_argument("experiment config: " + why);
}

}  // namespace detail

inline void validate_experiment_config(const ExperimentConfig& cfg) {
  if (cfg.kernel_spec.empty()) throw detail::config_error("kernel is required");
  if (cfg.datum_spec.empty()) throw detail::config_error("datum is required");
  if (!(cfg.p > 0.0)) throw detail::config_error("p must be > 0");
  if (cfg.t_grid.empty()) throw detail::config_error("t_grid must be nonempty");
  for (std::size_t i = 0; i + 1 < cfg.t_grid.size(); ++i) {
    if (!(cfg.t_grid[i] < cfg.t_grid[i + 1])) {
      throw detail::config_error("t_grid must be strictly increasing");
    }
  }
  if (!(cfg.t_grid.front() >= 0.0)) throw detail::config_error("times must be >= 0");
  if (cfg.estimators.empty()) throw detail::config_error("estimators must be nonempty");
  if (cfg.replicas < 1) throw detail::config_error("replicas must be >= 1");
  bool sampling = false;
  for (Estimator e : cfg.estimators) sampling = sampling || detail::needs_sampling(e);
  if (sampling && cfg.samples * cfg.replicas < 1000) {
    throw detail::config_error("distance estimation needs samples*replicas >= 1000");
  }
  if (!(cfg.slope_tolerance >= 0.0)) throw detail::config_error("tolerance must be >= 0");
  CollisionKernel kernel = parse_kernel(cfg.kernel_spec);
  parse_datum(cfg.datum_spec);
  H0Report h0 = validate_h0(kernel, cfg.p);
  // The contraction flag S(p) < 0 is deliberately not required here: rate
  // comparisons check it through rate_constant, while stationarity runs are
  // legitimate at conserved orders.
  if (!h0.positivity_ok || !h0.alpha_ok || !h0.nondegenerate_ok) {
    throw detail::config_error("kernel fails the positivity/nondegeneracy hypotheses");
  }
  validate_stable(cfg.stable);
  if (std::abs(find_alpha(kernel) - cfg.stable.alpha) > 1e-9) {
    throw detail::config_error("stable index does not match the kernel");
  }
}

// JSON layout: {"kernel": "...", "datum": "...", "p": 2, "t_grid": [...],
// "samples": n, "replicas": r, "seed": s, "estimators": ["coupled", ...],
// "stable": {"alpha","lambda","beta","gamma0"} or
// "tails": {"alpha","c_plus","c_minus","gamma0"}, optional "regime",
// "slope_tolerance", "tree_cap", "replica_budget", "threads", "pool"
// {"size","depth","depth_cap"}, "chi" {"dt","ratio"}, "out_csv", "out_json"}.
inline ExperimentConfig parse_experiment_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw detail::config_error(std::string("invalid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  auto need = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw detail::config_error(std::string(key) + " is required");
    return j.at(key);
  };
  cfg.kernel_spec = need("kernel").get<std::string>();
  cfg.datum_spec = need("datum").get<std::string>();
  cfg.p = need("p").get<double>();
  cfg.t_grid = need("t_grid").get<std::vector<double>>();
  cfg.samples = need("samples").get<std::size_t>();
  cfg.replicas = j.value("replicas", std::size_t{1});
  if (!j.contains("seed")) throw detail::config_error("seed is required");
  cfg.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& name : need("estimators")) {
    cfg.estimators.push_back(estimator_from_name(name.get<std::string>()));
  }
  if (j.contains("stable") == j.contains("tails")) {
    throw detail::config_error("exactly one of stable/tails is required");
  }
  if (j.contains("stable")) {
    const auto& s = j.at("stable");
    cfg.stable.alpha = s.at("alpha").get<double>();
    cfg.stable.lambda = s.at("lambda").get<double>();
    cfg.stable.beta = s.value("beta", 0.0);
    cfg.stable.gamma0 = s.value("gamma0", 0.0);
  } else {
    const auto& s = j.at("tails");
    cfg.stable = params_from_tails(s.at("c_plus").get<double>(),
                                   s.at("c_minus").get<double>(),
                                   s.at("alpha").get<double>(), s.value("gamma0", 0.0));
  }
  if (j.contains("regime")) {
    cfg.regime = parse_regime(j.at("regime").get<std::string>());
  }
  cfg.slope_tolerance = j.value("slope_tolerance", 0.03);
  cfg.tree_cap = j.value("tree_cap", default_tree_cap);
  cfg.replica_budget = j.value("replica_budget", std::uint64_t{0});
  cfg.threads = j.value("threads", 1u);
  if (j.contains("pool")) {
    const auto& s = j.at("pool");
    cfg.pool_size = s.value("size", cfg.pool_size);
    cfg.pool_depth = s.value("depth", cfg.pool_depth);
    cfg.pool_depth_cap = s.value("depth_cap", cfg.pool_depth_cap);
  }
  if (j.contains("chi")) {
    const auto& s = j.at("chi");
    cfg.chi_dt = s.value("dt", cfg.chi_dt);
    cfg.chi_ratio = s.value("ratio", cfg.chi_ratio);
  }
  cfg.out_csv = j.value("out_csv", std::string{});
  cfg.out_json = j.value("out_json", std::string{});
  validate_experiment_config(cfg);
  return cfg;
}

namespace detail {

struct SteadyContext {
  MixtureLaw law;
  std::optional<std::function<double(double)>> quantile, cdf;
};

inline SteadyContext make_steady_context(const ExperimentConfig& cfg,
                                         const CollisionKernel& kernel) {
  SteadyContext ctx{MixtureLaw{kernel, cfg.stable.alpha, false, 1, {}, 1.0, 1.0, true},
                    std::nullopt, std::nullopt};
  ctx.law = build_pool(kernel, cfg.stable.alpha, cfg.seed + 0x9E3779B97F4A7C15ull,
                       cfg.pool_size, cfg.pool_depth, cfg.pool_depth_cap,
                       static_cast<int>(cfg.threads));
  ctx.quantile = steady_quantile(ctx.law, cfg.stable);
  ctx.cdf = steady_cdf(ctx.law, cfg.stable);
  return ctx;
}

// Merges per-replica truncation counts into the report-level counter.
inline void absorb(TruncationCounter& into, const std::vector<TruncationCounter>& parts) {
  for (const auto& c : parts) {
    into.attempts += c.attempts;
    into.truncated += c.truncated;
  }
}

inline void rethrow_replica_errors(const std::vector<std::string>& errs) {
  for (std::size_t r = 0; r < errs.size(); ++r) {
    if (!errs[r].empty()) {
      throw std::runtime_error("replica " + std::to_string(r) + ": " + errs[r]);
    }
  }
}

}  // namespace detail

inline DecayReport run_experiment(const ExperimentConfig& cfg) {
  validate_experiment_config(cfg);
  auto t_start = std::chrono::steady_clock::now();
  CollisionKernel kernel = parse_kernel(cfg.kernel_spec);
  InitialDatum datum = parse_datum(cfg.datum_spec);

  DecayReport report;
  report.config = cfg;

  bool any_sampling = false;
  for (Estimator e : cfg.estimators) any_sampling = any_sampling || detail::needs_sampling(e);
  std::optional<detail::SteadyContext> steady;
  if (any_sampling) steady = detail::make_steady_context(cfg, kernel);

  const std::size_t t_count = cfg.t_grid.size();
  std::uint64_t replicas_used = 0;

  for (std::size_t ei = 0; ei < cfg.estimators.size() && !report.partial; ++ei) {
    Estimator est = cfg.estimators[ei];

    if (est == Estimator::chi) {
      // Deterministic Fourier pass: one cumulative integration covers the
      // whole grid, no replicas consumed.
      auto cf0 = [&](double xi) {
        auto v = datum.cf(xi);
        if (!v) {
          throw std::invalid_argument(
              "chi estimator needs a datum with a closed-form characteristic function");
        }
        return *v;
      };
      if (!steady) steady = detail::make_steady_context(cfg, kernel);
      auto cf_inf = [&](double xi) { return steady_cf(steady->law, cfg.stable, xi); };
      try {
        CfGrid grid(kernel, cfg.chi_ratio);
        ChiOptions opts;
        opts.dt = cfg.chi_dt;
        opts.threads = cfg.threads;
        std::vector<double> chi =
            chi_contraction_measurement(kernel, cf0, cf_inf, cfg.p, cfg.t_grid, grid, opts);
        std::size_t band = 0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
          if (grid.xi(k) >= opts.band_lo && grid.xi(k) <= opts.band_hi) ++band;
        }
        for (std::size_t ti = 0; ti < t_count; ++ti) {
          report.rows.push_back(
              {cfg.t_grid[ti], cfg.p, chi[ti], std::nullopt, band, Estimator::chi});
        }
      } catch (const std::exception& e) {
        throw std::runtime_error("estimator=chi t_grid: " + std::string(e.what()));
      }
      continue;
    }

    for (std::size_t ti = 0; ti < t_count; ++ti) {
      if (cfg.replica_budget != 0 &&
          replicas_used + cfg.replicas > cfg.replica_budget) {
        report.partial = true;
        break;
      }
      double t = cfg.t_grid[ti];
      std::uint64_t row_base =
          (static_cast<std::uint64_t>(ei) * t_count + ti) * cfg.replicas;
      try {
        std::vector<TruncationCounter> counters(cfg.replicas);
        std::vector<std::string> errs(cfg.replicas);
        DistanceRow row;
        row.t = t;
        row.p = cfg.p;
        row.estimator = est;

        if (est == Estimator::coupled) {
          if (!steady->quantile) {
            throw CouplingUnavailable(
                "coupled estimator needs a closed-form steady quantile");
          }
          std::vector<std::vector<std::pair<double, double>>> parts(cfg.replicas);
          parallel_for_index(cfg.replicas, cfg.threads, [&](std::size_t r) {
            try {
              Rng rng = Rng::stream(cfg.seed, row_base + r);
              parts[r].reserve(cfg.samples);
              for (std::size_t s = 0; s < cfg.samples; ++s) {
                auto pr = coupled_pair(kernel, datum, *steady->quantile, t, rng,
                                       cfg.tree_cap, &counters[r]);
                if (pr) parts[r].push_back(*pr);
              }
            } catch (const std::exception& e) {
              errs[r] = e.what();
            }
          });
          detail::rethrow_replica_errors(errs);
          detail::absorb(report.truncation, counters);
          std::vector<std::pair<double, double>> pairs;
          for (const auto& part : parts) pairs.insert(pairs.end(), part.begin(), part.end());
          if (pairs.empty()) throw std::runtime_error("all replicas truncated");
          DistanceEstimate de = wasserstein_coupled(pairs, cfg.p);
          row.estimate = de.value;
          row.stderr_ = de.stderr_;
          row.n_samples = pairs.size();
        } else {
          // quantile and ks both consume plain draws of V_t plus a steady
          // reference sample of matching size per replica.
          std::vector<std::vector<double>> draws(cfg.replicas), refs(cfg.replicas);
          parallel_for_index(cfg.replicas, cfg.threads, [&](std::size_t r) {
            try {
              Rng rng = Rng::stream(cfg.seed, row_base + r);
              draws[r].reserve(cfg.samples);
              for (std::size_t s = 0; s < cfg.samples; ++s) {
                auto v = sample_v_t(kernel, datum, t, rng, cfg.tree_cap, &counters[r]);
                if (v) draws[r].push_back(*v);
              }
              Rng ref_rng = Rng::stream(cfg.seed, detail::kSteadyOffset + row_base + r);
              refs[r].reserve(draws[r].size());
              for (std::size_t s = 0; s < draws[r].size(); ++s) {
                refs[r].push_back(sample_steady(steady->law, cfg.stable, ref_rng));
              }
            } catch (const std::exception& e) {
              errs[r] = e.what();
            }
          });
          detail::rethrow_replica_errors(errs);
          detail::absorb(report.truncation, counters);

          auto evaluate = [&](const std::vector<double>& vt,
                              const std::vector<double>& ref) {
            EmpiricalMeasure mu_t = EmpiricalMeasure::from_samples(vt, t, cfg.seed);
            if (est == Estimator::quantile) {
              EmpiricalMeasure mu_inf = EmpiricalMeasure::from_samples(ref, t, cfg.seed);
              return wasserstein_empirical(mu_t, mu_inf, cfg.p).value;
            }
            if (steady->cdf) return kolmogorov_distance(mu_t, *steady->cdf);
            return kolmogorov_distance_two_sample(mu_t.values, ref);
          };

          std::vector<double> pooled, pooled_ref, per_replica;
          for (std::size_t r = 0; r < cfg.replicas; ++r) {
            pooled.insert(pooled.end(), draws[r].begin(), draws[r].end());
            pooled_ref.insert(pooled_ref.end(), refs[r].begin(), refs[r].end());
            if (cfg.replicas >= 2 && !draws[r].empty()) {
              per_replica.push_back(evaluate(draws[r], refs[r]));
            }
          }
          if (pooled.empty()) throw std::runtime_error("all replicas truncated");
          row.estimate = evaluate(pooled, pooled_ref);
          row.n_samples = pooled.size();
          if (per_replica.size() >= 2) {
            row.stderr_ = mean_stderr(per_replica).stderr_;
          }
        }
        report.rows.push_back(row);
        replicas_used += cfg.replicas;
      } catch (const std::exception& e) {
        throw std::runtime_error("t=" + format_double(t) + " estimator=" +
                                 estimator_name(est) + ": " + e.what());
      }
    }
  }

  // The slope fit reads the rows of the first requested estimator; later
  // estimators contribute rows only.
  std::vector<double> times, estimates, stderrs;
  bool all_have_stderr = true;
  for (const DistanceRow& r : report.rows) {
    if (r.estimator != cfg.estimators.front()) continue;
    times.push_back(r.t);
    estimates.push_back(r.estimate);
    if (r.stderr_) {
      stderrs.push_back(*r.stderr_);
    } else {
      all_have_stderr = false;
    }
  }
  if (!all_have_stderr) stderrs.clear();
  try {
    report.fit = decay_fit(times, estimates, stderrs);
  } catch (const FitUnavailable&) {
    report.fit = std::nullopt;
  }

  if (cfg.regime) {
    DecayRate rate = rate_constant(kernel, cfg.p, *cfg.regime);
    report.theory_rate = rate.rate;
    report.log_correction = rate.log_correction;
    report.pass =
        report.fit && report.fit->slope <= -report.theory_rate + cfg.slope_tolerance;
  } else {
    report.theory_rate = 0.0;
    report.pass = !report.fit || report.fit->slope <= cfg.slope_tolerance;
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

// CSV rows under the pinned header; the stderr cell is empty when the
// estimator carries none.
inline std::string report_csv(const DecayReport& report) {
  std::string out = "t,p,estimate,stderr,n_samples,estimator\n";
  for (const DistanceRow& r : report.rows) {
    out += format_double(r.t) + "," + format_double(r.p) + "," +
           format_double(r.estimate) + ",";
    if (r.stderr_) out += format_double(*r.stderr_);
    out += "," + std::to_string(r.n_samples) + "," + estimator_name(r.estimator) + "\n";
  }
  return out;
}

// JSON summary. Wall time is deliberately excluded so a fixed seed produces
// byte-identical files at any thread count.
inline std::string report_summary_json(const DecayReport& report) {
  nlohmann::json j;
  j["slope"] = report.fit ? report.fit->slope : 0.0;
  j["slope_stderr"] = report.fit ? report.fit->slope_stderr : 0.0;
  j["intercept"] = report.fit ? report.fit->intercept : 0.0;
  j["fit_points"] = report.fit ? report.fit->used : 0;
  j["fit_available"] = report.fit.has_value();
  j["theory_rate"] = report.theory_rate;
  j["log_correction"] = report.log_correction;
  j["pass"] = report.pass;
  j["partial"] = report.partial;
  j["p"] = report.config.p;
  j["kernel"] = report.config.kernel_spec;
  j["datum"] = report.config.datum_spec;
  j["estimator_fit"] = estimator_name(report.config.estimators.front());
  j["slope_tolerance"] = report.config.slope_tolerance;
  j["rows"] = report.rows.size();
  j["truncation"] = {{"attempts", report.truncation.attempts},
                     {"truncated", report.truncation.truncated},
                     {"rate", report.truncation.rate()}};
  return j.dump(2) + "\n";
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << content;
  if (!f) throw std::runtime_error("write failed for " + path);
}

inline void emit_report(const DecayReport& report, const std::string& csv_path,
                        const std::string& json_path) {
  if (!csv_path.empty()) write_text_file(csv_path, report_csv(report));
  if (!json_path.empty()) write_text_file(json_path, report_summary_json(report));
}

// Reads one named column of a simple headered CSV into doubles. This is the
// same reader the distance subcommand uses for sample files, so report CSVs
// round-trip through it.
inline std::vector<double> read_csv_column(const std::string& path,
                                           const std::string& column) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty csv: " + path);
  auto header = split(line, ',');
  std::size_t col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == column) col = i;
  }
  if (col == header.size()) {
    throw std::runtime_error("csv " + path + " has no column '" + column + "'");
  }
  std::vector<double> out;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() <= col) {
      throw std::runtime_error("csv " + path + ": short row at line " +
                               std::to_string(lineno));
    }
    out.push_back(parse_double(cells[col]));
  }
  return out;
}

}  // namespace kaclab
