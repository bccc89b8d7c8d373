#include "tdbsde_cli/dispatch.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "tdbsde/errors.hpp"

#ifndef TDBSDE_VERSION
#define TDBSDE_VERSION "0.0.0"
#endif

namespace tdbsde::cli {

namespace {

using json = nlohmann::ordered_json;

// Outcome of one subcommand before it is written to disk.
struct Outcome {
  bool passed = true;
  std::string summary;
  json body = json::object();
  std::string csv;  // empty when the subcommand has no path dump
  std::string csv_name = "paths.csv";
};

std::size_t csv_count(const RunConfig& c, const EnsembleConfig& e) {
  return std::min<std::size_t>(static_cast<std::size_t>(c.count("run", "csv_paths")), e.paths);
}

MarketPaths csv_market(const ShortRateModel& model, const EnsembleConfig& e, std::size_t i) {
  return simulate_rate(model, ensemble_noise(e, i), e.measure);
}

std::string fmt(double x) { return format_number(x); }

std::unique_ptr<SurplusPolicy> make_policy(const RunConfig& c) {
  const std::string& p = c.text("ratchet-discrete", "policy");
  if (p == "discard") return std::make_unique<DiscardSurplusPolicy>();
  if (p == "split") return std::make_unique<SplitSurplusPolicy>(c.number("ratchet-discrete", "bond_fraction"));
  return std::make_unique<SplitSurplusPolicy>(1.0);
}

Outcome run_classify(const RunConfig& c) {
  const ShortRateModel model = c.model();
  const TimeGrid grid = c.grid();
  Outcome o;
  switch (c.product()) {
    case Product::RatchetDiscrete: {
      const RatchetSpec spec = c.ratchet_discrete();
      const Classification cl = classify(model, spec, grid.maturity());
      o.body = {{"case", to_string(cl.label)},
                {"binding_condition", cl.binding_condition},
                {"initial_product", cl.initial_product},
                {"sup_bounds", cl.sup_bounds},
                {"zero_solution_only", cl.zero_solution_only()}};
      o.summary = std::string(to_string(cl.label)) + ": " + cl.binding_condition;
      return o;
    }
    case Product::RatchetContinuous: {
      const DrawdownSpec spec = c.ratchet_continuous();
      const FeasibilityReport f =
          check_feasibility(model, spec, grid, static_cast<std::size_t>(c.count("run", "assumption_paths")),
                            c.count("run", "seed"));
      o.body = {{"initial_product", f.initial_product},
                {"deterministic_bound", std::isfinite(f.deterministic_bound) ? json(f.deterministic_bound)
                                                                              : json("inf")},
                {"shortfall_excluded", f.shortfall_excluded},
                {"shortfall_certain", f.shortfall_certain},
                {"lock_in_certain", f.lock_in_certain},
                {"paths", f.paths},
                {"shortfall_probability", {f.shortfall_probability, f.shortfall_lo, f.shortfall_hi}},
                {"lock_in_probability", {f.lock_in_probability, f.lock_in_lo, f.lock_in_hi}}};
      std::string verdict = f.shortfall_certain    ? "shortfall certain"
                            : f.shortfall_excluded ? "shortfall excluded"
                                                   : "shortfall possible";
      if (model.is_cir()) {
        const WitnessSearch w = cir_infeasibility_witness(
            model, spec.g, grid, static_cast<std::size_t>(c.count("run", "witness_tries")), c.count("run", "seed"));
        o.body["witness"] = {{"found", w.found},         {"gamma", w.gamma},   {"seed", w.seed},
                             {"path_index", w.path_index}, {"node", w.node},     {"time", w.time},
                             {"rate", w.rate},             {"barrier", w.barrier}, {"paths_tried", w.paths_tried},
                             {"min_margin", w.min_margin}};
        if (w.found) verdict += "; witness path " + std::to_string(w.path_index) + " at t=" + fmt(w.time);
      }
      o.summary = verdict + " (gamma e^{gT} D(0) = " + fmt(f.initial_product) + ")";
      return o;
    }
    case Product::Asian: {
      const SmoothingSpec spec = c.asian();
      validate(spec);
      o.body = {{"variant", to_string(spec.variant)}, {"beta", spec.beta}, {"gamma", spec.gamma},
                {"condition", spec.variant == SmoothingVariant::Scaled ? "beta E[S~] + gamma = 1" : "gamma < 1"},
                {"solvable", true}};
      o.summary = std::string(to_string(spec.variant)) + " claim is solvable";
      return o;
    }
    case Product::Withdrawal:
    case Product::Obpi:
      break;
  }
  throw InvalidInput("classify applies to [ratchet-discrete], [ratchet-continuous] and [asian] configs");
}

Outcome from_report(const HedgeReport& r) {
  Outcome o;
  o.passed = r.passed();
  o.body = r.to_json();
  o.body.erase("schema_version");
  std::ostringstream s;
  s << r.strategy << ": " << r.paths << " paths, max terminal residual " << fmt(r.terminal.max)
    << ", violations " << r.constraint_violations << ", martingale z " << fmt(r.martingale_drift);
  o.summary = s.str();
  return o;
}

Outcome run_ratchet_discrete(const RunConfig& c, const Tolerances& tol) {
  const ShortRateModel model = c.model();
  const EnsembleConfig e = c.ensemble();
  const RatchetSpec spec = c.ratchet_discrete();
  const double y0 = c.number("ratchet-discrete", "y0");
  const auto policy = make_policy(c);
  Outcome o = from_report(run_discrete_ratchet_report(model, spec, y0, *policy, e, tol));
  const Classification label = classify(model, spec, e.grid.maturity());
  std::ostringstream csv;
  csv << std::setprecision(17) << "path_id,t,Y,X,pi,reserve,surplus\n";
  for (std::size_t i = 0; i < csv_count(c, e); ++i) {
    const MarketPaths m = csv_market(model, e, i);
    const RatchetPath p = solve_ratchet(y0, *policy, m, spec, label);
    for (std::size_t k = 0; k <= m.steps(); ++k) {
      csv << e.first_path + i << ',' << m.grid.time(k) << ',' << p.Y[k] << ',' << p.X[k] << ',' << p.pi[k] << ','
          << p.reserve[k] << ',' << p.surplus[k] << '\n';
    }
  }
  o.csv = csv.str();
  return o;
}

Outcome run_ratchet_continuous(const RunConfig& c, const Tolerances& tol) {
  const ShortRateModel model = c.model();
  const EnsembleConfig e = c.ensemble();
  const DrawdownSpec spec = c.ratchet_continuous();
  const double x = c.number("ratchet-continuous", "x");
  Outcome o = from_report(run_continuous_ratchet_report(model, spec, x, e, tol));
  std::ostringstream csv;
  csv << std::setprecision(17) << "path_id,t,X,pi,V,M,K,L,R,constraint_slack\n";
  for (std::size_t i = 0; i < csv_count(c, e); ++i) {
    const MarketPaths m = csv_market(model, e, i);
    const DrawdownPath p = construct_drawdown_portfolio(x, spec, m);
    for (std::size_t k = 0; k <= m.steps(); ++k) {
      csv << e.first_path + i << ',' << m.grid.time(k) << ',' << p.X[k] << ',' << p.pi[k] << ',' << p.V[k] << ','
          << p.M[k] << ',' << p.K[k] << ',' << p.L[k] << ',' << p.R[k] << ',' << p.slack[k] << '\n';
    }
  }
  o.csv = csv.str();
  return o;
}

Outcome run_asian(const RunConfig& c, const Tolerances& tol) {
  const ShortRateModel model = c.model();
  const EnsembleConfig e = c.ensemble();
  const SmoothingSpec spec = c.asian();
  const double y0 = c.number("asian", "y0");
  Outcome o = from_report(run_asian_report(model, spec, y0, e, tol));
  o.body["condition"] = {{"text", spec.variant == SmoothingVariant::Scaled ? "beta E[S~] + gamma = 1" : "gamma < 1"},
                         {"value", spec.variant == SmoothingVariant::Scaled ? spec.beta + spec.gamma : spec.gamma},
                         {"holds", true}};
  std::ostringstream csv;
  csv << std::setprecision(17) << "path_id,t,Y,Z,M,running_avg\n";
  for (std::size_t i = 0; i < csv_count(c, e); ++i) {
    const MarketPaths m = csv_market(model, e, i);
    const SmoothingSolution s = solve_smoothing(y0, spec, m);
    for (std::size_t k = 0; k <= m.steps(); ++k) {
      csv << e.first_path + i << ',' << m.grid.time(k) << ',' << s.Y[k] << ',' << s.Z[k] << ',' << s.M[k] << ','
          << s.running_avg[k] << '\n';
    }
  }
  o.csv = csv.str();
  return o;
}

Outcome run_withdrawal(const RunConfig& c) {
  const ShortRateModel model = c.model();
  const WithdrawalSpec spec = c.withdrawal();
  const auto depth = static_cast<std::size_t>(c.count("withdrawal", "depth"));
  const WalkTree tree = build_tree(model, spec, depth, static_cast<std::size_t>(c.count("withdrawal", "depth_cap")));
  const PicardSolution sol = solve_picard(tree, spec, c.number("withdrawal", "tolerance"),
                                          static_cast<std::size_t>(c.count("withdrawal", "max_iterations")));
  Outcome o;
  o.passed = sol.converged;
  o.body = {{"root_value", sol.root()},
            {"iterations", sol.iterations},
            {"deltas", sol.deltas},
            {"root_history", sol.root_history},
            {"contraction_ratio", sol.contraction_ratio},
            {"converged", sol.converged},
            {"depth", depth},
            {"fixed_point_residual", fixed_point_residual(tree, spec, sol.values)}};
  if (const auto paths = c.count("withdrawal", "oracle_paths"); paths > 0) {
    NestedMcOptions opt;
    opt.iteration = static_cast<std::size_t>(c.count("withdrawal", "oracle_iteration"));
    opt.steps = depth;
    opt.paths = static_cast<std::size_t>(paths);
    opt.inner_paths = static_cast<std::size_t>(c.count("withdrawal", "oracle_inner_paths"));
    opt.seed = c.count("run", "seed");
    const NestedMcEstimate mc = nested_mc_oracle(model, spec, opt);
    const double tree_iterate = sol.root_history.at(std::min(opt.iteration, sol.root_history.size() - 1));
    o.body["oracle"] = {{"iteration", mc.iteration},
                        {"value", mc.value},
                        {"standard_error", mc.standard_error},
                        {"tree_iterate", tree_iterate},
                        {"z", mc.standard_error > 0 ? (tree_iterate - mc.value) / mc.standard_error : 0.0}};
  }
  o.summary = "withdrawal root " + fmt(sol.root()) + " after " + std::to_string(sol.iterations) +
              " iterations, contraction ratio " + fmt(sol.contraction_ratio);
  if (depth <= 10) {
    std::vector<double> sup = running_sup(tree, sol.values);
    std::ostringstream csv;
    csv << std::setprecision(17) << "node,level,t,rate,Y,running_sup\n";
    std::size_t level = 0;
    for (std::size_t id = 0; id < tree.node_count(); ++id) {
      if (id >= WalkTree::level_start(level + 1)) ++level;
      csv << id << ',' << level << ',' << tree.grid.time(level) << ',' << tree.rate[id] << ',' << sol.values[id]
          << ',' << sup[id] << '\n';
    }
    o.csv = csv.str();
    o.csv_name = "nodes.csv";
  }
  return o;
}

Outcome run_obpi(const RunConfig& c) {
  const ShortRateModel model = c.model();
  const EnsembleConfig e = c.ensemble();
  const BenchmarkSpec bench = c.obpi_benchmark();
  const double T = e.grid.maturity();
  const auto sample = sample_benchmark_terminals(model, bench, e);
  const double d0 = model.bond_price(T, model.r0());
  const ObpiSolution s = solve_participation(d0, T, sample, e.antithetic, c.obpi_options());
  const ObpiPositions pos = scale_to_capital(s, c.number("obpi", "capital"));
  Outcome o;
  const double parity_band = 4.0 * s.parity.standard_error;
  const bool parity_ok = std::abs(s.parity.value) <= std::max(parity_band, 1e-12);
  const bool fee_ok = s.fee == hedging_fee(s.lambda, T);
  o.passed = parity_ok && fee_ok;
  o.body = {{"lambda", s.lambda},
            {"bond_price", s.bond_price},
            {"call", s.call.value},
            {"put", s.put.value},
            {"fee", s.fee},
            {"residual", s.residual},
            {"stderr", s.call.standard_error},
            {"parity_residual", s.parity.value},
            {"parity_stderr", s.parity.standard_error},
            {"parity_within_4se", parity_ok},
            {"bracket", {s.bracket_lo, s.bracket_hi}},
            {"iterations", s.iterations},
            {"paths", e.paths},
            {"positions", {{"capital", c.number("obpi", "capital")},
                           {"bond_amount", pos.bond_amount},
                           {"call_amount", pos.call_amount}}}};
  o.summary = "lambda " + fmt(s.lambda) + ", fee " + fmt(s.fee) + ", parity " + fmt(s.parity.value) + " +- " +
              fmt(s.parity.standard_error);
  std::ostringstream csv;
  csv << std::setprecision(17);
  write_market_csv_header(csv);
  for (std::size_t i = 0; i < csv_count(c, e); ++i) write_market_csv(csv, e.first_path + i, csv_market(model, e, i));
  o.csv = csv.str();
  return o;
}

Outcome run_convergence(const RunConfig& c) {
  const ShortRateModel model = c.model();
  const TimeGrid grid = c.grid();
  std::vector<std::size_t> steps;
  for (double s : c.list("run", "convergence_steps")) steps.push_back(static_cast<std::size_t>(s));
  const auto paths = static_cast<std::size_t>(c.count("run", "convergence_paths"));
  const std::uint64_t seed = c.count("run", "seed");
  ConvergenceTable table;
  switch (c.product()) {
    case Product::Asian:
      table = run_convergence_study(model, grid.maturity(), steps, paths, seed, "asian_terminal_relative",
                                    asian_terminal_metric(c.asian(), c.number("asian", "y0")), Aggregate::Mean);
      break;
    case Product::RatchetContinuous:
      table = run_convergence_study(
          model, grid.maturity(), steps, paths, seed, "drawdown_lock_in_gap",
          drawdown_gap_metric(c.ratchet_continuous(), c.number("ratchet-continuous", "x")), Aggregate::Median);
      break;
    case Product::RatchetDiscrete:
      table = run_convergence_study(
          model, grid.maturity(), steps, paths, seed, "ratchet_terminal_relative",
          discrete_ratchet_metric(model, c.ratchet_discrete(), c.number("ratchet-discrete", "y0")), Aggregate::Max);
      break;
    case Product::Withdrawal:
    case Product::Obpi:
      throw InvalidInput("convergence applies to [asian], [ratchet-continuous] and [ratchet-discrete] configs");
  }
  Outcome o;
  o.body = table.to_json();
  bool finite = true;
  for (const auto& r : table.rows) finite = finite && std::isfinite(r.metric);
  o.passed = finite;
  o.csv = table.to_csv();
  o.csv_name = "convergence.csv";
  o.summary = table.metric_name + ": " + fmt(table.rows.front().metric) + " at n=" +
              std::to_string(table.rows.front().steps) + " -> " + fmt(table.rows.back().metric) + " at n=" +
              std::to_string(table.rows.back().steps);
  return o;
}

Outcome run_check_assumptions(const RunConfig& c, const Tolerances& tol) {
  const ShortRateModel model = c.model();
  const EnsembleConfig e = c.ensemble();
  const AssumptionReport a = check_assumptions(model, e.grid, static_cast<std::size_t>(c.count("run", "assumption_paths")),
                                               c.count("run", "seed"));
  EnsembleConfig q = e;
  q.measure = Measure::Q;
  const HedgeReport market = run_market_report(model, q, tol);
  Outcome o;
  const bool rates_ok = a.negative_rate_fraction == 0.0;
  const bool bond_ok = a.min_bond > 0.0 && a.bond_at_or_above_one == 0 && a.terminal_bond_exact;
  o.passed = rates_ok && bond_ok && a.risk_premium_bounded && market.passed();
  o.body = {{"model", model.describe()},
            {"real_world",
             {{"paths", a.paths},
              {"rate_samples", a.rate_samples},
              {"negative_rate_fraction", a.negative_rate_fraction},
              {"min_bond", a.min_bond},
              {"max_bond_before_maturity", a.max_bond_before_maturity},
              {"bond_at_or_above_one", a.bond_at_or_above_one},
              {"terminal_bond_exact", a.terminal_bond_exact},
              {"max_abs_bond_vol", a.max_abs_bond_vol},
              {"risk_premium_bounded", a.risk_premium_bounded}}},
            {"risk_neutral", market.to_json()}};
  o.body["risk_neutral"].erase("schema_version");
  o.summary = std::string(o.passed ? "assumptions hold" : "assumptions violated") + ": negative rate fraction " +
              fmt(a.negative_rate_fraction) + ", nodes with D >= 1 before T " +
              std::to_string(a.bond_at_or_above_one) + ", martingale z " + fmt(market.martingale_drift);
  std::ostringstream csv;
  csv << std::setprecision(17);
  write_market_csv_header(csv);
  for (std::size_t i = 0; i < csv_count(c, q); ++i) write_market_csv(csv, q.first_path + i, csv_market(model, q, i));
  o.csv = csv.str();
  return o;
}

const char* error_type(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const InvalidInput*>(&e)) return "InvalidInput";
  if (dynamic_cast<const ZeroSolutionOnly*>(&e)) return "ZeroSolutionOnly";
  if (dynamic_cast<const NoSolution*>(&e)) return "NoSolution";
  if (dynamic_cast<const ConstructionFailure*>(&e)) return "ConstructionFailure";
  if (dynamic_cast<const BracketError*>(&e)) return "BracketError";
  if (dynamic_cast<const NonConvergence*>(&e)) return "NonConvergence";
  if (dynamic_cast<const BudgetExceeded*>(&e)) return "BudgetExceeded";
  return "Error";
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
  if (!f) throw Error("cannot write " + p.string());
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {
      "classify",   "hedge-ratchet-discrete", "hedge-ratchet-continuous", "hedge-asian", "solve-withdrawal",
      "obpi-lambda", "convergence",           "check-assumptions"};
  return names;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidInput*>(&e)) return kExitConfig;
  if (dynamic_cast<const ZeroSolutionOnly*>(&e) || dynamic_cast<const NoSolution*>(&e)) return kExitZeroSolution;
  if (dynamic_cast<const NonConvergence*>(&e) || dynamic_cast<const BracketError*>(&e)) return kExitNonConvergence;
  if (dynamic_cast<const ConstructionFailure*>(&e)) return kExitConstruction;
  if (dynamic_cast<const BudgetExceeded*>(&e)) return kExitBudget;
  return kExitError;
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

int dispatch(const RunConfig& config, const std::string& subcommand, const std::filesystem::path& out, bool force,
             std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  const std::string canonical = serialize(config);
  Outcome outcome;
  int code = kExitPass;
  bool forced = false;
  json error = nullptr;
  try {
    if (std::find(subcommands().begin(), subcommands().end(), subcommand) == subcommands().end()) {
      throw InvalidInput("unknown subcommand '" + subcommand + "'");
    }
    auto tolerances = [&](const std::string& strategy) { return config.tolerances(strategy, force, &forced); };
    if (subcommand == "classify") {
      outcome = run_classify(config);
    } else if (subcommand == "hedge-ratchet-discrete") {
      if (config.product() != Product::RatchetDiscrete) throw InvalidInput(subcommand + " needs a [ratchet-discrete] config");
      const Classification cl = classify(config.model(), config.ratchet_discrete(), config.grid().maturity());
      const std::string strategy = cl.label == RatchetCase::FixedReturn ? "ratchet-discrete-fixed-return"
                                                                         : "ratchet-discrete";
      outcome = run_ratchet_discrete(config, tolerances(strategy));
    } else if (subcommand == "hedge-ratchet-continuous") {
      if (config.product() != Product::RatchetContinuous) {
        throw InvalidInput(subcommand + " needs a [ratchet-continuous] config");
      }
      outcome = run_ratchet_continuous(config, tolerances("ratchet-continuous"));
    } else if (subcommand == "hedge-asian") {
      if (config.product() != Product::Asian) throw InvalidInput(subcommand + " needs an [asian] config");
      outcome = run_asian(config, tolerances("asian"));
    } else if (subcommand == "solve-withdrawal") {
      if (config.product() != Product::Withdrawal) throw InvalidInput(subcommand + " needs a [withdrawal] config");
      outcome = run_withdrawal(config);
    } else if (subcommand == "obpi-lambda") {
      if (config.product() != Product::Obpi) throw InvalidInput(subcommand + " needs an [obpi] config");
      outcome = run_obpi(config);
    } else if (subcommand == "convergence") {
      outcome = run_convergence(config);
    } else {
      outcome = run_check_assumptions(config, tolerances("market"));
    }
    if (!outcome.passed) code = kExitVerification;
  } catch (const std::exception& e) {
    code = exit_code_for(e);
    error = {{"type", error_type(e)}, {"message", e.what()}};
    if (const auto* nc = dynamic_cast<const NonConvergence*>(&e)) {
      error["deltas"] = nc->deltas;
      error["contraction_ratio"] = nc->contraction_ratio;
    } else if (const auto* be = dynamic_cast<const BracketError*>(&e)) {
      error["bracket"] = {be->lo, be->hi};
      error["residuals"] = {be->f_lo, be->f_hi};
    }
    outcome.summary = std::string(error_type(e)) + ": " + e.what();
  }
  const bool partial = !error.is_null();
  const std::string status = partial ? "error" : (code == kExitPass ? "pass" : "fail");

  json report;
  report["schema_version"] = kReportSchemaVersion;
  report["subcommand"] = subcommand;
  report["product"] = section_name(config.product());
  report["status"] = status;
  report["exit_code"] = code;
  report["forced"] = forced;
  report["partial"] = partial;
  if (partial) report["error"] = error;
  report["result"] = std::move(outcome.body);

  const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json manifest;
  manifest["schema_version"] = kReportSchemaVersion;
  manifest["tool"] = "tdbsde";
  manifest["version"] = TDBSDE_VERSION;
  manifest["compiler"] = __VERSION__;
  manifest["json_library"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                             std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                             std::to_string(NLOHMANN_JSON_VERSION_PATCH);
  manifest["subcommand"] = subcommand;
  manifest["seed"] = config.count("run", "seed");
  manifest["config_sha256"] = sha256_hex(canonical);
  manifest["config"] = canonical;
  manifest["forced"] = forced;
  manifest["status"] = status;
  manifest["partial"] = partial;
  manifest["exit_code"] = code;
  manifest["outputs"] = json::array({"report.json"});
  if (!outcome.csv.empty()) manifest["outputs"].push_back(outcome.csv_name);
  manifest["runtime_seconds"] = runtime;

  try {
    std::filesystem::create_directories(out);
    write_file(out / "report.json", report.dump(2) + "\n");
    if (!outcome.csv.empty()) write_file(out / outcome.csv_name, outcome.csv);
    write_file(out / "manifest.json", manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitError;
  }
  log << subcommand << " [" << status << (forced ? ", forced" : "") << "] " << outcome.summary << '\n';
  return code;
}

}  // namespace tdbsde::cli
