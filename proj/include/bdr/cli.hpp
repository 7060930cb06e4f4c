#pragma once

#include <iostream>
#include <memory>
#include <sstream>

#include "cache.hpp"
#include "config.hpp"
#include "invariants.hpp"

namespace bdr {

// Test vectors used by the experiment subcommands; all positive so that every limit is nonzero.
struct DefaultInputs {
  CylinderFunction v, w, v2, w2;
  TreeTestFunction f, g;
};

template <class Fn>
CylinderFunction pattern_function(const GroupContext& ctx, int level, Fn&& fn) {
  std::vector<Complex> values(level_dimension(ctx, level));
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = fn(static_cast<double>(i % 12));
  return make_function(ctx, level, std::move(values));
}

inline DefaultInputs default_inputs(const GroupContext& ctx, int level) {
  auto mod = [](double i, int m) { return std::fmod(i, static_cast<double>(m)); };
  DefaultInputs d;
  d.v = pattern_function(ctx, level, [&](double i) { return Complex(1.0 + 0.5 * mod(i, 3), 0.25 * mod(i, 2)); });
  d.w = pattern_function(ctx, level, [&](double i) { return Complex(1.0 + mod(i, 2), 0.0); });
  d.v2 = pattern_function(ctx, level, [&](double i) { return Complex(1.0 + 0.25 * mod(i, 4), 0.0); });
  d.w2 = pattern_function(ctx, level, [&](double i) { return Complex(2.0 - 0.5 * mod(i, 3), 0.0); });
  d.f = extend_inward(ctx, pattern_function(ctx, level, [&](double i) { return Complex(1.0 + 0.5 * mod(i, 2)); }), 1.0);
  d.g = extend_inward(ctx, pattern_function(ctx, level, [&](double i) { return Complex(1.0 + mod(i, 3) / 3.0); }), 0.75);
  return d;
}

// Ray a B a b a b ... used by `poisson`.
inline Ray default_ray(const GroupContext& ctx) {
  return make_ray(ctx, parse_word(ctx, "aB"), parse_word(ctx, "ab"));
}

class CommandRunner {
 public:
  explicit CommandRunner(RunConfig cfg)
      : cfg_(std::move(cfg)), ctx_(cfg_.rank, cfg_.epsilon, cfg_.budget), opt_{cfg_.threads, 2048} {
    if (!cfg_.cache_dir.empty()) cache_ = std::make_unique<Cache>(cfg_.cache_dir);
  }

  Report run(const std::string& command) {
    Report r;
    if (command == "phi") r = phi_cmd();
    else if (command == "sigma") r = sigma_cmd();
    else if (command == "gram") r = gram_cmd();
    else if (command == "scan-positivity") r = positivity_cmd();
    else if (command == "equi") r = experiment(equi_experiment(ctx_, in().f, in().g, cfg_.n_max, false, opt_, rule()));
    else if (command == "pairs") r = pairs_cmd();
    else if (command == "bml")
      r = experiment(bml_experiment(ctx_, cfg_.t, cfg_.pairing, in().v, in().w, in().f, in().g, cfg_.n_max,
                                    cfg_.rhs_tol, opt_, rule()));
    else if (command == "schur") r = schur_cmd();
    else if (command == "rd") r = rd_cmd();
    else if (command == "besov") r = besov_cmd();
    else if (command == "poisson") r = poisson_cmd();
    else if (command == "mixing") r = mixing_cmd();
    else if (command == "ht") r = ht_cmd();
    else if (command == "selftest") r = selftest_cmd();
    else throw ConfigError("unknown subcommand '" + command + "'");
    r.config = config_to_json(cfg_);
    if (cache_) r.extra["cache"] = {{"hits", cache_->stats().hits}, {"misses", cache_->stats().misses},
                                    {"evictions", cache_->stats().evictions}};
    return r;
  }

  const GroupContext& context() const { return ctx_; }

 private:
  const DefaultInputs& in() {
    if (!inputs_) inputs_ = std::make_unique<DefaultInputs>(default_inputs(ctx_, cfg_.level));
    return *inputs_;
  }
  VerdictRule rule() const { return {cfg_.tol, 4}; }

  GramMatrix gram(double t, int k) { return cache_ ? cache_->gram(ctx_, t, k) : gram_matrix(ctx_, t, k); }

  Report experiment(const ExperimentReport& e) { return to_report(e, {}, cfg_.timings); }

  Report phi_cmd() {
    const SphericalTable tab = envelope_table(ctx_, cfg_.t, cfg_.n_max);
    Report r;
    r.id = "phi";
    r.params = context_params(ctx_);
    r.params.update({{"t", cfg_.t}, {"n_max", cfg_.n_max}, {"c_min", tab.c_min}, {"c_max", tab.c_max}});
    r.columns = {"n", "phi", "envelope", "envelope_low", "envelope_high", "ratio"};
    for (const auto& row : tab.rows)
      r.rows.push_back({row.n, row.phi, spherical_envelope(ctx_, cfg_.t, row.n), row.envelope_low, row.envelope_high,
                        row.ratio});
    const double band = tab.c_max / tab.c_min;
    r.verdict = {band <= 4.0, "ratio band " + format_number(band) + " (limit 4)"};
    return r;
  }

  Report sigma_cmd() {
    const double s = sigma(ctx_, cfg_.t);
    Report r;
    r.id = "sigma";
    r.params = context_params(ctx_);
    r.params.update({{"t", cfg_.t}, {"sigma", s}, {"self_energy", nlohmann::json::object()}});
    for (int k = 1; k <= 4; ++k) r.params["self_energy"][std::to_string(k)] = self_energy(ctx_, cfg_.t, k);
    r.columns = {"A", "below", "above", "total", "rel_defect"};
    double worst = 0.0;
    for (int A = 0; A <= cfg_.n_max; ++A) {
      const double lo = sigma_truncated_below(ctx_, cfg_.t, A), hi = sigma_truncated_above(ctx_, cfg_.t, A);
      const double defect = std::abs(lo + hi - s) / s;
      worst = std::max(worst, defect);
      r.rows.push_back({A, lo, hi, lo + hi, defect});
    }
    r.verdict = {worst <= 1e-12, "largest split defect " + format_number(worst)};
    return r;
  }

  Report gram_cmd() {
    const GramMatrix G = gram(cfg_.t, cfg_.level);
    Report r;
    r.id = "gram";
    r.params = context_params(ctx_);
    r.params.update({{"t", cfg_.t}, {"level", cfg_.level}, {"dim", G.entries.rows()},
                     {"min_normalized_eigenvalue", min_normalized_eigenvalue(ctx_, G)}});
    r.columns = {"row", "col", "row_word", "col_word", "value"};
    CompensatedSum total;
    for (Eigen::Index u = 0; u < G.entries.rows(); ++u)
      for (Eigen::Index v = 0; v < G.entries.cols(); ++v) {
        total.add(G.entries(u, v));
        r.rows.push_back({u, v, to_string(ctx_, word_at(ctx_, cfg_.level, u)),
                          to_string(ctx_, word_at(ctx_, cfg_.level, v)), G.entries(u, v)});
      }
    const double s = sigma(ctx_, cfg_.t), defect = std::abs(total.value() - s) / s;
    r.verdict = {defect <= 1e-12, "entry sum differs from sigma by " + format_number(defect) + " (relative)"};
    return r;
  }

  Report positivity_cmd() {
    Report r;
    r.id = "scan-positivity";
    r.params = context_params(ctx_);
    r.params["levels"] = cfg_.levels;
    r.columns = {"t", "level", "min_eigenvalue", "positive"};
    const auto grid = cfg_.effective_t_grid();
    r.params["t_grid"] = grid;
    r.verdict = {true, "nonnegative for t <= 1/2, negative direction found for every t > 1/2"};
    for (double t : grid) {
      double worst = INFINITY;
      for (int k : cfg_.levels) {
        const double m = min_normalized_eigenvalue(ctx_, gram(t, k));
        worst = std::min(worst, m);
        r.rows.push_back({t, k, m, m >= -1e-10});
        if (t <= 0.5 && m < -1e-10) r.verdict = {false, "negative eigenvalue at t=" + format_number(t)};
      }
      if (t > 0.5 && worst >= -1e-6 && r.verdict.pass)
        r.verdict = {false, "no negative direction found at t=" + format_number(t)};
    }
    return r;
  }

  Report pairs_cmd() {
    if (cfg_.mode == "radial") {
      PairCountSource src;
      if (cache_) src = [this](int N) { return cache_->pair_counts(ctx_, N); };
      return experiment(pair_kernel_experiment_radial(ctx_, cfg_.t, [](int) { return 1.0; }, cfg_.n_max, rule(), src));
    }
    require(cfg_.level >= 1, "cylinder pair mode needs level >= 1");
    const CylinderPairFunction F = tensor_pair(in().v, conj(in().v));
    return experiment(pair_kernel_experiment_cylinder(ctx_, cfg_.t, F, cfg_.level, cfg_.n_max, opt_, rule()));
  }

  Report schur_cmd() {
    const SchurInputs s{in().v, in().w, in().v2, in().w2, in().f, in().g};
    return experiment(schur_experiment(ctx_, cfg_.t, cfg_.effective_t_prime(), cfg_.pairing, cfg_.pairing_prime, s,
                                       cfg_.n_max, cfg_.rhs_tol, opt_, rule()));
  }

  Report rd_cmd() {
    const RdReport rep = rd_experiment(ctx_, cfg_.t, cfg_.level, cfg_.n_max, 5, opt_);
    Report r;
    r.id = "rd";
    r.params = context_params(ctx_);
    r.params.update({{"t", cfg_.t}, {"level", cfg_.level}, {"n_max", cfg_.n_max}, {"calibrate_max", 5},
                     {"constants", rep.constants}});
    r.columns = {"n", "pairing", "lower_bound", "envelope", "ratio"};
    for (const auto& row : rep.rows)
      r.rows.push_back({row.n, pairing_name(row.pairing), row.lower_bound, row.envelope, row.ratio});
    r.verdict = rep.verdict;
    return r;
  }

  Report besov_cmd() {
    require(cfg_.level >= 1, "Besov check needs level >= 1");
    const double t = -0.5;
    const double before = besov_seminorm(ctx_, t, in().v);
    Report r;
    r.id = "besov";
    r.params = context_params(ctx_);
    r.params.update({{"t", t}, {"level", cfg_.level}, {"radius", 3}, {"seminorm", before}});
    r.columns = {"g", "seminorm", "rel_defect"};
    double worst = 0.0;
    for (const auto& g : enumerate_ball(ctx_, 3)) {
      const double after = besov_seminorm(ctx_, t, apply_pi(ctx_, t, g, in().v));
      const double d = std::abs(after - before) / before;
      worst = std::max(worst, d);
      r.rows.push_back({to_string(ctx_, g), after, d});
    }
    r.verdict = {worst <= 1e-12, "largest relative change " + format_number(worst)};
    return r;
  }

  Report poisson_cmd() {
    const Ray eta = default_ray(ctx_);
    const CylinderFunction& f = in().v;
    const Complex target = f.values[word_index(ctx_, ray_prefix(eta, f.level).span())];
    Report r;
    r.id = "poisson";
    r.params = context_params(ctx_);
    r.params.update({{"t", cfg_.t}, {"level", f.level}, {"ray", "aB(ab)^inf"}, {"n_max", cfg_.n_max}});
    r.columns = {"depth", "value_re", "value_im", "target_re", "target_im", "error"};
    double last = INFINITY;
    for (int m = 1; m <= cfg_.n_max; ++m) {
      const Complex p = poisson_transform(ctx_, cfg_.t, f, ray_prefix(eta, m));
      last = std::abs(p - target);
      r.rows.push_back({m, p.real(), p.imag(), target.real(), target.imag(), last});
    }
    r.verdict = {last < cfg_.tol, "error " + format_number(last) + " at depth " + std::to_string(cfg_.n_max)};
    return r;
  }

  Report mixing_cmd() {
    const MixingReport rep = weak_mixing_probe(ctx_, cfg_.t, in().v, in().w, in().v2, in().w2, cfg_.n_max, cfg_.tol);
    Report r;
    r.id = "mixing";
    r.params = context_params(ctx_);
    r.params.update({{"t", cfg_.t}, {"level", cfg_.level}, {"eps", cfg_.tol}, {"first_n", rep.first_n},
                     {"first_witness", rep.first_witness}});
    r.columns = {"n", "min_product", "witness"};
    for (const auto& row : rep.rows) r.rows.push_back({row.n, row.min_product, row.witness});
    r.verdict = rep.verdict;
    return r;
  }

  Report ht_cmd() {
    const Complex base = ht_inner(ctx_, cfg_.t, in().v, in().w);
    const double scale = sigma(ctx_, cfg_.t) * l2_norm(ctx_, in().v) * l2_norm(ctx_, in().w);
    Report r;
    r.id = "ht";
    r.params = context_params(ctx_);
    r.params.update({{"t", cfg_.t}, {"level", cfg_.level}, {"radius", 2}});
    r.columns = {"g", "value_re", "value_im", "rel_defect"};
    double worst = 0.0;
    for (const auto& g : enumerate_ball(ctx_, 2)) {
      const Complex x = ht_inner(ctx_, cfg_.t, apply_pi(ctx_, cfg_.t, g, in().v), apply_pi(ctx_, cfg_.t, g, in().w));
      const double d = std::abs(x - base) / scale;
      worst = std::max(worst, d);
      r.rows.push_back({to_string(ctx_, g), x.real(), x.imag(), d});
    }
    r.verdict = {worst <= 1e-12, "largest change of the H_t pairing " + format_number(worst)};
    return r;
  }

  Report selftest_cmd() {
    std::vector<Check> checks = identity_suite(ctx_);
    checks.push_back(upper_check("grouped coefficient", grouped_coefficient_defect(ctx_, {0.0, 0.25, -0.3}, 3, 2), 1e-12));
    for (double t : {0.1, 0.25, 0.4}) {
      const double s = sigma(ctx_, t);
      checks.push_back(upper_check("sigma closed form t=" + format_number(t), std::abs(s - sigma_series(ctx_, t)) / s, 1e-10));
    }
    const ReducedWord a = parse_word(ctx_, "a");
    const CylinderFunction one = constant_function(ctx_);
    checks.push_back(upper_check("phi_0(1) coefficient",
                                 std::abs(matrix_coefficient(ctx_, 0.0, a, one, one).real() - phi(ctx_, 0.0, 1)), 1e-12));
    double band = 0.0;
    for (double t : {0.0, 0.1, 0.25, 0.5, 0.75}) {
      const auto [lo, hi] = envelope_band(ctx_, t, 30);
      band = std::max(band, hi / lo);
    }
    checks.push_back(upper_check("spherical envelope band", band, 4.0));
    const auto pos = positivity_summary(ctx_, {0.05, 0.1, 0.25, 0.4, 0.5, 0.75}, {1, 2, 3});
    checks.push_back(upper_check("gram nonnegative t<=1/2", -pos.worst_nonnegative, 1e-10));
    checks.push_back(upper_check("gram negative t=3/4", pos.best_negative, -1e-6));
    checks.push_back(upper_check("phi gram nonnegative t=1/4", -pd_gram_phi(ctx_, 0.25, 3), 1e-10));
    checks.push_back(upper_check("phi gram negative t=3/4", pd_gram_phi(ctx_, 0.75, 3), -1e-6));
    double pinv = 0.0, shift = INFINITY;
    for (int k = 1; k <= 3; ++k) {
      const Eigen::MatrixXd T = normalized_gram(gram(0.25, k), ctx_);
      const auto c = check_pseudo_inverse(T, spectral_pseudo_inverse(T));
      pinv = std::max({pinv, c.left_inverse_residual, c.squared_residual});
      shift = std::min(shift, c.shift_remainder_min_eig);
    }
    checks.push_back(upper_check("pseudo-inverse residuals", pinv, 1e-9));
    checks.push_back(upper_check("pseudo-inverse shift remainder", -shift, 1e-9));
    // One-sided averages are exact once the radius reaches the function level.
    const TreeTestFunction unit = extend_inward(ctx_, one, 1.0);
    double equi_err = 0.0;
    for (const auto& [f1, g1] : {std::pair{in().f, unit}, std::pair{unit, in().g}}) {
      const auto eq = equi_experiment(ctx_, f1, g1, cfg_.level + 3, false, opt_);
      for (const auto& row : eq.rows)
        if (row.n >= cfg_.level) equi_err = std::max(equi_err, row.abs_error);
    }
    checks.push_back(upper_check("equidistribution exact rows", equi_err, 1e-12));
    const auto triv = bml_experiment(ctx_, cfg_.t > 0.0 ? cfg_.t : 0.25, 0, one, one, unit, unit, 6, 1e-8, opt_);
    double triv_err = 0.0;
    for (const auto& row : triv.rows) triv_err = std::max(triv_err, row.abs_error);
    checks.push_back(upper_check("trivial coefficient rows", triv_err, 0.0));
    const Ray eta = default_ray(ctx_);
    const CylinderFunction& f = in().v;
    const Complex target = f.values[word_index(ctx_, ray_prefix(eta, f.level).span())];
    checks.push_back(upper_check("Poisson error at depth 40",
                                 std::abs(poisson_transform(ctx_, 0.25, f, ray_prefix(eta, 40)) - target), 1e-3));

    Report r;
    r.id = "selftest";
    r.params = context_params(ctx_);
    r.columns = {"check", "value", "threshold", "pass"};
    r.verdict = {true, "all checks pass"};
    for (const auto& c : checks) {
      r.rows.push_back({c.name, c.value, c.threshold, c.pass});
      if (!c.pass && r.verdict.pass) r.verdict = {false, "failed: " + c.name};
    }
    return r;
  }

  RunConfig cfg_;
  GroupContext ctx_;
  ExecOptions opt_;
  std::unique_ptr<Cache> cache_;
  std::unique_ptr<DefaultInputs> inputs_;
};

enum ExitCode { kExitPass = 0, kExitVerdict = 1, kExitUsage = 2, kExitInternal = 3 };

inline int exit_code_for(const Error& e) {
  const std::string c = e.code();
  if (c == "config" || c == "precondition" || c == "divergent" || c == "budget") return kExitUsage;
  return kExitInternal;
}

// Runs one subcommand and writes its report to cfg.out (or `out`). Errors go to `err`;
// in JSON mode an error object is also written in place of the report.
inline int run(const std::string& command, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto emit_error = [&](const std::string& code, const std::string& message) {
    err << "bdrep: " << code << ": " << message << "\n";
    if (cfg.format != "json") return;
    const std::string doc = error_json(code, message).dump(2) + "\n";
    if (cfg.out.empty())
      out << doc;
    else
      try {
        atomic_write(cfg.out, doc);
      } catch (const Error&) {
      }
  };
  try {
    RunConfig resolved = cfg;
    if (resolved.experiment.empty()) resolved.experiment = command;
    validate_config(resolved);
    CommandRunner runner(resolved);
    const Report r = runner.run(command);
    std::ostringstream os;
    write_report(os, r, cfg.format);
    if (cfg.out.empty())
      out << os.str();
    else
      atomic_write(cfg.out, os.str());
    if (!r.verdict.pass) err << "bdrep: verdict failed: " << r.verdict.detail << "\n";
    return r.verdict.pass ? kExitPass : kExitVerdict;
  } catch (const Error& e) {
    emit_error(e.code(), e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return kExitInternal;
  }
}

}  // namespace bdr
