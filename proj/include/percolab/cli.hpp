#pragma once

// Batch experiment runner behind the `percolab` executable.
//
// Exit codes: 0 success, 1 identity or self-check violation, 2 usage error
// (bad flag or a value outside a module precondition), 3 a run that could not
// produce its estimate (non-convergence, degenerate sample).

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "percolab/errors.hpp"
#include "percolab/events.hpp"
#include "percolab/exact.hpp"
#include "percolab/lattice.hpp"
#include "percolab/montecarlo.hpp"
#include "percolab/report.hpp"
#include "percolab/version.hpp"

namespace percolab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

struct ExperimentSpec {
  std::string subcommand;
  int d = 2;
  int n = 1;
  double p = 0.5;
  std::string p_grid;  // lo:hi:step
  std::uint64_t replicates = 1000;
  std::uint64_t kappa_replicates = 0;  // 0: same as replicates
  std::uint64_t master_seed = 0;
  std::uint64_t replicate = 0;  // `count` only
  unsigned workers = 1;
  std::vector<int> radii;
  double epsilon = kDefaultEpsilon;
  double ks_threshold = kDefaultKsThreshold;
  std::size_t cap = kDefaultEnumerationCap;
  bool martingale = true;
  std::string out;
  std::string format = "csv";
};

inline std::vector<double> parse_p_grid(const std::string& spec) {
  double lo = 0.0;
  double hi = 0.0;
  double step = 0.0;
  char c1 = 0;
  char c2 = 0;
  std::istringstream in(spec);
  if (!(in >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || !(in >> std::ws).eof()) {
    throw InvalidArgument("--p-grid expects lo:hi:step, got '" + spec + "'");
  }
  if (!(step > 0.0) || hi < lo) throw InvalidArgument("--p-grid needs step > 0 and hi >= lo");
  check_probability(lo);
  check_probability(hi);
  std::vector<double> grid;
  // index-based so the grid does not accumulate rounding drift
  const auto count = static_cast<std::uint64_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  if (count > 10'000) throw InvalidArgument("--p-grid has more than 10^4 points");
  for (std::uint64_t i = 0; i < count; ++i) grid.push_back(std::min(hi, lo + static_cast<double>(i) * step));
  return grid;
}

inline std::string join_radii(const std::vector<int>& radii) {
  std::string s;
  for (std::size_t i = 0; i < radii.size(); ++i) s += (i ? "," : "") + std::to_string(radii[i]);
  return s;
}

inline std::vector<int> default_radii(const std::string& subcommand) {
  if (subcommand == "two-arm") return {4, 8, 16, 32};
  return {8, 16, 32, 64, 128};
}

// Canonical invocation that reproduces the numeric output. Worker count and
// output routing are excluded because they never change the numbers.
inline std::string canonical_command(const ExperimentSpec& s) {
  std::ostringstream os;
  os << s.subcommand << " --dim " << s.d;
  const bool uses_n = s.subcommand != "kappa-prime" && s.subcommand != "two-arm";
  if (uses_n) os << " --n " << s.n;
  if (s.subcommand == "exact-verify") {
    os << " --cap " << s.cap << (s.martingale ? "" : " --no-martingale");
    return os.str();
  }
  if (s.subcommand == "sweep") os << " --p-grid " << s.p_grid;
  else os << " --p " << format_double(s.p);
  if (s.subcommand == "count") {
    os << " --seed " << s.master_seed << " --replicate " << s.replicate;
    return os.str();
  }
  os << " --replicates " << s.replicates << " --seed " << s.master_seed;
  if (s.subcommand == "kappa-prime" || s.subcommand == "two-arm" || s.subcommand == "theorem" ||
      s.subcommand == "sweep") {
    os << " --radii " << join_radii(s.radii);
  }
  if (s.subcommand == "kappa-prime" || s.subcommand == "theorem" || s.subcommand == "sweep") {
    os << " --epsilon " << format_double(s.epsilon);
  }
  if (s.subcommand == "theorem" || s.subcommand == "sweep") os << " --kappa-replicates " << s.kappa_replicates;
  if (s.subcommand == "clt") os << " --ks-threshold " << format_double(s.ks_threshold);
  return os.str();
}

// Checks every numeric field against the module preconditions before any work.
inline void validate(ExperimentSpec& s) {
  const BoxSpec box(s.d, s.n);  // throws on d < 1, n < 1, or overflow
  if (s.subcommand != "sweep") check_probability(s.p);
  if (s.workers < 1) throw InvalidArgument("--workers must be >= 1");
  if (s.radii.empty()) s.radii = default_radii(s.subcommand);
  if (s.kappa_replicates == 0) s.kappa_replicates = s.replicates;
  if (s.format != "csv" && s.format != "json") throw InvalidArgument("--format must be csv or json");
  const std::string& c = s.subcommand;
  if (c == "exact-verify") {
    if (box.bond_count() > s.cap) {
      throw CapExceeded("exact enumeration needs k=" + std::to_string(box.bond_count()) +
                        " bonds but the cap is " + std::to_string(s.cap));
    }
  }
  if (c == "variance" || c == "theorem" || c == "sweep") check_replicates(s.replicates, 2);
  if (c == "clt") check_replicates(s.replicates, 500);
  if (c == "kappa-prime" || c == "two-arm") check_replicates(s.replicates, 1);
  if (c == "kappa-prime" || c == "theorem" || c == "sweep" || c == "two-arm") {
    check_radii(s.radii, 1);
    if (c != "two-arm" && s.radii.size() < 2) throw InvalidArgument("--radii needs at least two radii");
    if (!(s.epsilon > 0.0)) throw InvalidArgument("--epsilon must be positive");
    (void)BoxSpec(s.d, s.radii.back());
    check_replicates(s.kappa_replicates, 1);
  }
  if (c == "sweep") {
    if (s.p_grid.empty()) throw InvalidArgument("sweep needs --p-grid lo:hi:step");
    (void)parse_p_grid(s.p_grid);
  }
  if (c == "clt" && !(s.ks_threshold > 0.0)) throw InvalidArgument("--ks-threshold must be positive");
}

inline nlohmann::json poly_json(const PolyP& poly) { return poly.to_strings(); }

inline nlohmann::json identity_json(const IdentityReport& r) {
  nlohmann::json j;
  j["status"] = r.holds ? "pass" : "fail";
  j["lhs"] = poly_json(r.lhs);
  j["rhs"] = poly_json(r.rhs);
  if (r.first_difference) j["first_differing_coefficient"] = *r.first_difference;
  return j;
}

inline nlohmann::json martingale_json(const MartingaleReport& m) {
  nlohmann::json j;
  j["p"] = m.p.str();
  j["configurations"] = m.configurations;
  j["variance"] = m.variance.str();
  j["sum_mean_delta_sq"] = m.sum_delta_sq.str();
  auto status = [](bool ok) { return ok ? "pass" : "fail"; };
  j["martingale_property"] = status(m.martingale_property());
  j["variance_decomposition"] = status(m.variance_decomposition());
  j["delta_zero_off_Gn"] = status(m.vanishes_off_event());
  j["delta_two_valued_on_Gn"] = status(m.two_valued_on_event());
  j["second_moment_closed_form"] = status(m.second_moments_match());
  j["conditional_pivotal_formula"] = status(m.conditional_formula_holds());
  nlohmann::json bonds = nlohmann::json::array();
  for (const auto& b : m.bonds) {
    bonds.push_back({{"bond", b.bond},
                     {"mean_delta_sq", b.mean_delta_sq.str()},
                     {"closed_form", b.closed_form.str()},
                     {"nonzero_off_Gn", b.nonzero_off_event},
                     {"off_two_values_on_Gn", b.off_two_values},
                     {"conditional_formula_mismatches", b.conditional_mismatches}});
  }
  j["bonds"] = std::move(bonds);
  return j;
}

struct ExactVerifyResult {
  nlohmann::json report;
  bool all_pass = true;
};

inline ExactVerifyResult exact_verify(const ExperimentSpec& s) {
  const BoxSpec box(s.d, s.n);
  const ExactMoments moments = compute_exact_moments(box, s.cap, s.workers);
  ExactVerifyResult out;
  auto& j = out.report;
  j["schema"] = kCsvSchema;
  j["version"] = kVersion;
  j["command"] = canonical_command(s);
  j["d"] = s.d;
  j["n"] = s.n;
  j["bonds"] = box.bond_count();
  j["configurations"] = std::uint64_t{1} << box.bond_count();
  j["mean_Mn"] = poly_json(moments.mean);
  j["variance_Mn"] = poly_json(moments.variance);
  nlohmann::json g = nlohmann::json::array();
  for (const auto& poly : moments.prob_Gn) g.push_back(poly_json(poly));
  j["prob_Gn"] = std::move(g);

  const IdentityReport total = compare_polys("total_probability", moments.total_probability, PolyP::constant(1));
  const IdentityReport russo = russo_report(moments);
  const IdentityReport variance = variance_report(moments);
  j["identities"]["total_probability"] = identity_json(total);
  j["identities"]["russo"] = identity_json(russo);
  j["identities"]["variance"] = identity_json(variance);
  out.all_pass = total.holds && russo.holds && variance.holds;

  constexpr std::size_t kMartingaleDefaultLimit = 12;
  if (s.martingale && box.bond_count() <= kMartingaleDefaultLimit) {
    const ConfigTables tables = build_config_tables(box, s.cap);
    nlohmann::json ms = nlohmann::json::array();
    for (const Rational& p : {Rational(1, 4), Rational(1, 2), Rational(3, 4)}) {
      const MartingaleReport m = analyze_martingale(tables, moments, p);
      ms.push_back(martingale_json(m));
      out.all_pass = out.all_pass && m.martingale_property() && m.variance_decomposition() &&
                     m.vanishes_off_event() && m.two_valued_on_event() && m.second_moments_match();
    }
    j["martingale"] = std::move(ms);
  }
  j["status"] = out.all_pass ? "pass" : "fail";
  return out;
}

inline Table theorem_table(const ExperimentSpec& s, const std::vector<double>& ps) {
  Table t;
  t.command = canonical_command(s);
  t.columns = {"d", "n", "p", "R", "seed", "mean", "mean_stderr", "var", "var_stderr", "var_density",
               "predicted_limit", "gap_in_stderr"};
  const BoxSpec box(s.d, s.n);
  for (double p : ps) {
    KappaOptions kappa;
    kappa.radii = s.radii;
    kappa.epsilon = s.epsilon;
    kappa.replicates = s.kappa_replicates;
    kappa.master_seed = s.master_seed;
    kappa.workers = s.workers;
    const TheoremComparison cmp =
        compare_to_theorem(box, p, RunOptions{s.replicates, s.master_seed, s.workers}, kappa);
    t.rows.push_back({s.d, s.n, p, s.replicates, s.master_seed, cmp.mean.point, cmp.mean.std_error,
                      cmp.variance.point, cmp.variance.std_error, cmp.empirical_density.point,
                      cmp.predicted_limit.point, cmp.gap_in_stderr});
    if (ps.size() == 1) {
      t.notes.emplace_back("kappa_prime", format_double(cmp.kappa.kappa_prime.point));
      t.notes.emplace_back("kappa_prime_stderr", format_double(cmp.kappa.kappa_prime.std_error));
      t.notes.emplace_back("kappa_radius", std::to_string(cmp.kappa.radius));
      t.notes.emplace_back("var_density_stderr", format_double(cmp.empirical_density.std_error));
    }
  }
  return t;
}

inline Table scan_table(const ExperimentSpec& s, const std::vector<RadiusEstimate>& rows) {
  Table t;
  t.command = canonical_command(s);
  t.columns = {"d", "p", "m", "replicates", "estimate", "stderr", "seed"};
  for (const auto& r : rows) {
    t.rows.push_back({s.d, s.p, r.radius, s.replicates, r.estimate.point, r.estimate.std_error, s.master_seed});
  }
  return t;
}

// Executes a validated spec; writes results to `out`.
inline int execute(const ExperimentSpec& s, std::ostream& out, std::ostream& err) {
  const std::string& c = s.subcommand;
  if (c == "count") {
    const BoxSpec box(s.d, s.n);
    const BondConfig config = sample_config(box, s.p, RngContract{s.master_seed, s.replicate});
    const std::uint64_t m = cluster_count(config);
    if (s.out.empty()) {
      out << "M_n = " << m << '\n';
      return kExitOk;
    }
    Table t;
    t.command = canonical_command(s);
    t.columns = {"d", "n", "p", "seed", "replicate", "vertices", "bonds", "open_bonds", "M_n"};
    t.rows.push_back({s.d, s.n, s.p, s.master_seed, s.replicate, box.vertex_count(), box.bond_count(),
                      config.open_count(), m});
    std::ofstream file(s.out);
    write_table(file, t, s.format);
    out << "M_n = " << m << '\n';
    return kExitOk;
  }

  std::ofstream file;
  if (!s.out.empty()) {
    file.open(s.out);
    if (!file) {
      err << "error: cannot open --out " << s.out << '\n';
      return kExitUsage;
    }
  }
  std::ostream& sink = s.out.empty() ? out : file;

  if (c == "exact-verify") {
    const ExactVerifyResult r = exact_verify(s);
    sink << r.report.dump(2) << '\n';
    if (!r.all_pass) err << "identity violation: see report\n";
    return r.all_pass ? kExitOk : kExitViolation;
  }
  if (c == "variance") {
    const BoxSpec box(s.d, s.n);
    const RunOptions run{s.replicates, s.master_seed, s.workers};
    const MomentEstimates m = estimate_moments_Mn(box, s.p, run);
    const EstimateSummary density = variance_density(m, box);
    const EstimateSummary kappa = estimate_kappa_inverse_cluster(box, s.p, run);
    const double volume = static_cast<double>(box.vertex_count());
    Table t;
    t.command = canonical_command(s);
    t.columns = {"d", "n", "p", "R", "seed", "mean", "mean_stderr", "var", "var_stderr", "var_density",
                 "var_density_stderr", "mean_density", "kappa_inverse_cluster", "kappa_inverse_cluster_stderr"};
    t.rows.push_back({s.d, s.n, s.p, s.replicates, s.master_seed, m.mean.point, m.mean.std_error,
                      m.variance.point, m.variance.std_error, density.point, density.std_error,
                      m.mean.point / volume, kappa.point, kappa.std_error});
    write_table(sink, t, s.format);
    return kExitOk;
  }
  if (c == "kappa-prime") {
    ScanOptions scan{s.d, s.p, s.radii, s.replicates, s.master_seed, s.workers};
    const auto rows = estimate_G_infinity(scan);
    Table t = scan_table(s, rows);
    int code = kExitOk;
    std::optional<std::size_t> stop;
    for (std::size_t j = 1; j < rows.size() && !stop; ++j) {
      if (std::abs(rows[j].drop.point) < s.epsilon) stop = j;
    }
    if (stop) {
      const EstimateSummary kp = scaled(rows[*stop].estimate, -static_cast<double>(s.d));
      t.notes.emplace_back("kappa_prime", format_double(kp.point));
      t.notes.emplace_back("kappa_prime_stderr", format_double(kp.std_error));
      t.notes.emplace_back("kappa_radius", std::to_string(rows[*stop].radius));
    } else {
      t.notes.emplace_back("kappa_prime", "not-converged");
      err << "error: growing-box gap never fell below epsilon " << format_double(s.epsilon) << '\n';
      code = kExitRuntime;
    }
    write_table(sink, t, s.format);
    return code;
  }
  if (c == "theorem") {
    write_table(sink, theorem_table(s, {s.p}), s.format);
    return kExitOk;
  }
  if (c == "sweep") {
    write_table(sink, theorem_table(s, parse_p_grid(s.p_grid)), s.format);
    return kExitOk;
  }
  if (c == "clt") {
    const CltResult r = clt_check(BoxSpec(s.d, s.n), s.p, RunOptions{s.replicates, s.master_seed, s.workers},
                                  s.ks_threshold);
    Table t;
    t.command = canonical_command(s);
    t.columns = {"d", "n", "p", "R", "seed", "ks_distance", "threshold", "pass"};
    t.rows.push_back({s.d, s.n, s.p, s.replicates, s.master_seed, r.ks_distance, r.threshold, r.pass});
    write_table(sink, t, s.format);
    return kExitOk;
  }
  if (c == "two-arm") {
    ScanOptions scan{s.d, s.p, s.radii, s.replicates, s.master_seed, s.workers};
    write_table(sink, scan_table(s, two_arm_decay_scan(scan)), s.format);
    return kExitOk;
  }
  err << "error: unknown subcommand " << c << '\n';
  return kExitUsage;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"percolab: cluster-count statistics for bond percolation on the box [-n,n]^d", "percolab"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1, 1);
  ExperimentSpec spec;

  auto add_common = [&](CLI::App* sub, bool box, bool sampling) {
    sub->add_option("--dim", spec.d, "lattice dimension d >= 1")->capture_default_str();
    if (box) sub->add_option("--n", spec.n, "box radius n >= 1, B(n) = [-n,n]^d")->capture_default_str();
    if (sampling) {
      sub->add_option("--p", spec.p, "bond open probability in [0,1]")->capture_default_str();
      sub->add_option("--seed", spec.master_seed, "master seed (64-bit)")->capture_default_str();
      sub->add_option("--workers", spec.workers, "worker threads; never changes numeric output")
          ->capture_default_str();
    }
    sub->add_option("--out", spec.out, "output file (default: stdout)");
    sub->add_option("--format", spec.format, "csv or json")->capture_default_str();
  };
  auto add_radii = [&](CLI::App* sub, const std::string& def) {
    sub->add_option("--radii", spec.radii, "radius schedule m1,m2,... (increasing)")
        ->delimiter(',')
        ->default_str(def);
  };

  auto* count = app.add_subcommand("count", "sample one configuration and print M_n");
  add_common(count, true, true);
  count->add_option("--replicate", spec.replicate, "replicate index of the stream")->capture_default_str();

  auto* exact = app.add_subcommand("exact-verify", "exact-enumeration identity checks (JSON report)");
  add_common(exact, true, false);
  exact->add_option("--workers", spec.workers, "worker threads")->capture_default_str();
  exact->add_option("--cap", spec.cap, "maximum bond count for exact enumeration")->capture_default_str();
  exact->add_flag("!--no-martingale", spec.martingale, "skip the per-configuration martingale checks");

  auto* variance = app.add_subcommand("variance", "Monte Carlo mean, variance and variance density of M_n");
  add_common(variance, true, true);

  auto* kappa = app.add_subcommand("kappa-prime", "kappa'(p) = -d P(G(b0)) via growing boxes");
  add_common(kappa, false, true);
  add_radii(kappa, "8,16,32,64,128");
  kappa->add_option("--epsilon", spec.epsilon, "stopping rule |P_m - P_m'| < epsilon")->capture_default_str();

  auto* theorem = app.add_subcommand("theorem", "variance density vs -p(1-p) kappa'(p)");
  add_common(theorem, true, true);
  add_radii(theorem, "8,16,32,64,128");
  theorem->add_option("--epsilon", spec.epsilon, "kappa' stopping rule")->capture_default_str();
  theorem->add_option("--kappa-replicates", spec.kappa_replicates, "replicates for kappa' (default: --replicates)");

  auto* clt = app.add_subcommand("clt", "Kolmogorov-Smirnov distance of standardized M_n to N(0,1)");
  add_common(clt, true, true);
  clt->add_option("--ks-threshold", spec.ks_threshold, "pass threshold")->capture_default_str();

  auto* two_arm = app.add_subcommand("two-arm", "P(D(b0, m)) decay scan");
  add_common(two_arm, false, true);
  add_radii(two_arm, "4,8,16,32");

  auto* sweep = app.add_subcommand("sweep", "theorem over a p grid");
  add_common(sweep, true, true);
  add_radii(sweep, "8,16,32,64,128");
  sweep->add_option("--p-grid", spec.p_grid, "lo:hi:step")->required();
  sweep->add_option("--epsilon", spec.epsilon, "kappa' stopping rule")->capture_default_str();
  sweep->add_option("--kappa-replicates", spec.kappa_replicates, "replicates for kappa'");

  const std::vector<std::pair<CLI::App*, std::uint64_t>> replicate_defaults{
      {variance, 1000}, {kappa, 10000}, {theorem, 1000}, {clt, 2000}, {two_arm, 10000}, {sweep, 1000}};
  for (const auto& [sub, def] : replicate_defaults) {
    sub->add_option("--replicates", spec.replicates, "independent replicates R")->default_str(std::to_string(def));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }
  CLI::App* chosen = app.get_subcommands().front();
  spec.subcommand = chosen->get_name();
  for (const auto& [sub, def] : replicate_defaults) {
    if (sub == chosen && sub->count("--replicates") == 0) spec.replicates = def;
  }

  try {
    validate(spec);
  } catch (const Error& e) {
    err << "usage error: " << e.what() << "\n\n" << app.get_subcommands().front()->help();
    return kExitUsage;
  }

  try {
    return execute(spec, out, err);
  } catch (const IdentityViolation& e) {
    err << "identity violation: " << e.what() << '\n';
    return kExitViolation;
  } catch (const SelfCheckViolation& e) {
    err << "self-check violation: " << e.what() << '\n';
    return kExitViolation;
  } catch (const NonConvergence& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const DegenerateSample& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const Error& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace percolab::cli
