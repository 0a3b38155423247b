#include "commands.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include "noisycoin/bounds.hpp"
#include "noisycoin/estimators.hpp"
#include "noisycoin/lfp.hpp"
#include "noisycoin/numeric.hpp"
#include "noisycoin/tuning.hpp"

namespace noisycoin::cli {

const std::vector<std::string> kEstimators = {"li",  "ml",    "add-beta",       "braess",
                                              "hml", "bayes-discrete", "bayes-beta", "minimax"};
const std::vector<std::string> kFigures = {"fig3", "fig4", "fig5", "fig6", "fig7", "fig8"};

namespace {

using nlohmann::ordered_json;

std::string num(double v) { return format_number(v); }

// Short tag used in file names: 0.1 -> "0.1", 0.25 -> "0.25".
std::string tag(double v) { return fmt::format("{:g}", v); }

bool listed(const std::vector<std::string>& names, const std::string& name) {
  return std::find(names.begin(), names.end(), name) != names.end();
}

void check_trials(int n, int minimum) {
  if (n < minimum) throw ValidationError(fmt::format("--trials must be at least {}, got {}", minimum, n));
}

void check_alpha(double a) {
  if (!(a >= 0.0 && a < 0.5)) throw ValidationError(fmt::format("--alpha must lie in [0, 0.5), got {}", num(a)));
}

ordered_json base_config(const RunConfig& c) {
  ordered_json j = ordered_json::object();
  j["command"] = c.command;
  j["trials"] = c.trials;
  j["alpha"] = c.alpha;
  j["grid"] = c.grid;
  j["seed"] = c.seed;
  return j;
}

std::vector<SupportPoint> parse_prior(const std::string& text) {
  std::vector<SupportPoint> atoms;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ValidationError("--prior entries must look like p:w, got '" + item + "'");
    try {
      const double p = std::stod(item.substr(0, colon));
      const double w = std::stod(item.substr(colon + 1));
      atoms.push_back({p, w});
    } catch (const std::logic_error&) {
      throw ValidationError("--prior entry is not numeric: '" + item + "'");
    }
  }
  if (atoms.empty()) throw ValidationError("--prior is empty");
  std::sort(atoms.begin(), atoms.end(), [](const auto& a, const auto& b) { return a.point < b.point; });
  return atoms;
}

LfpOptions lfp_options(const RunConfig& c, std::ostream& log) {
  LfpOptions options;
  options.tolerance = c.tolerance;
  options.max_iterations = c.max_iterations;
  options.grid_size = c.grid;
  options.on_iteration = [&log](const LfpTrace& t) {
    log << fmt::format("lfp iteration={} support={} bayes_risk={} max_risk={} gap={} action={}\n", t.iteration,
                       t.support_size, num(t.bayes_risk), num(t.max_risk), num(t.gap), t.action);
  };
  return options;
}

void note_lfp(Table& table, const LfpResult& r) {
  table.note("bayes_risk", num(r.bayes_risk));
  table.note("max_risk", num(r.max_risk));
  table.note("duality_gap", num(r.duality_gap));
  table.note("converged", r.converged ? "true" : "false");
  table.note("iterations", std::to_string(r.iterations));
}

Table estimator_table(const std::string& name, const Estimator& e) {
  Table t{name, {}, {"n", "p_hat"}, {}};
  for (int n = 0; n <= e.model().trials(); ++n) t.rows.push_back({std::int64_t{n}, e(n)});
  return t;
}

// Risk profiles of several estimators that share a model, tabulated on the
// same grid. Returns the table and the per-estimator profiles.
Table profile_table(const std::string& name, const std::vector<std::pair<std::string, const Estimator*>>& curves,
                    int grid_size) {
  Table t{name, {}, {"p"}, {}};
  std::vector<RiskProfile> profiles;
  for (const auto& [column, e] : curves) {
    t.columns.push_back(column);
    profiles.push_back(risk_profile(*e, grid_size));
  }
  const auto& grid = profiles.front().grid;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<Cell> row{grid[i]};
    for (const auto& pr : profiles) row.emplace_back(pr.values[i]);
    t.rows.push_back(std::move(row));
  }
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    const auto top = profiles[k].global_max();
    t.note("max_" + t.columns[k + 1], fmt::format("p={} risk={}", num(top.p), num(top.risk)));
  }
  return t;
}

struct Built {
  Estimator estimator;
  std::optional<LfpResult> lfp;
  std::optional<BetaChoice> tuned;
};

Built build_estimator(const RunConfig& c, std::ostream& log) {
  const TrialModel model(c.trials, c.alpha);
  const std::string& name = c.estimator;
  if (name == "li") return {linear_inversion_table(model), {}, {}};
  if (name == "ml") return {maximum_likelihood_table(model), {}, {}};
  if (name == "add-beta") return {add_beta_table(model, HedgingParam(*c.beta)), {}, {}};
  if (name == "braess") return {braess_table(model), {}, {}};
  if (name == "hml") {
    if (c.beta) return {hedged_ml_table(model, HedgingParam(*c.beta)), {}, {}};
    const auto choice = optimal_beta(model, c.grid);
    return {hedged_ml_table(model, HedgingParam(choice.beta())), {}, choice};
  }
  if (name == "bayes-beta") return {bayes_mean_beta(model, *c.beta), {}, {}};
  if (name == "bayes-discrete") {
    try {
      return {bayes_mean_discrete(model, DiscretePrior::normalized(parse_prior(c.prior))), {}, {}};
    } catch (const std::domain_error& e) {
      throw ValidationError(std::string("bayes-discrete: ") + e.what());
    }
  }
  auto result = lfp_search(model, lfp_options(c, log));
  Estimator e = result.estimator;
  return {std::move(e), std::move(result), {}};
}

void annotate(Table& t, const Built& b, const RunConfig& c) {
  if (b.estimator.unconstrained()) t.note("unconstrained", "true");
  if (b.tuned) {
    t.note("beta", num(b.tuned->beta()));
    t.note("beta_branch", to_string(b.tuned->branch));
  } else if (c.beta) {
    t.note("beta", num(*c.beta));
  }
  if (b.lfp) note_lfp(t, *b.lfp);
}

int status_of(const Built& b) { return b.lfp && !b.lfp->converged ? kExitNotConverged : kExitSuccess; }

}  // namespace

void validate(const RunConfig& c) {
  if (c.grid < 3) throw ValidationError(fmt::format("--grid must be at least 3, got {}", c.grid));
  if (!(c.tolerance > 0.0 && c.tolerance < 1.0)) {
    throw ValidationError(fmt::format("--tolerance must lie in (0, 1), got {}", num(c.tolerance)));
  }
  if (c.max_iterations < 1) throw ValidationError("--max-iterations must be positive");
  if (c.beta && !(*c.beta > 0.0 && std::isfinite(*c.beta))) {
    throw ValidationError(fmt::format("--beta must be positive, got {}", num(*c.beta)));
  }
  if (c.command == "tune-beta") {
    if (c.trials_list.empty() || c.alpha_list.empty()) throw ValidationError("tune-beta needs --trials and --alpha");
    for (int n : c.trials_list) check_trials(n, 1);
    for (double a : c.alpha_list) check_alpha(a);
    return;
  }
  if (c.command == "reproduce") {
    if (!listed(kFigures, c.figure)) {
      throw ValidationError(fmt::format("unknown figure '{}', expected one of fig3..fig8", c.figure));
    }
    return;
  }
  check_alpha(c.alpha);
  if (c.command == "lfp") {
    check_trials(c.trials, 2);
    return;
  }
  if (c.command == "bimodal") {
    check_trials(c.trials, 1);
    if (c.anchor_list.empty() && c.anchors < 2) throw ValidationError("--anchors must be at least 2");
    for (double a : c.anchor_list) {
      if (!(a >= 0.0 && a <= 1.0)) throw ValidationError(fmt::format("anchor {} is outside [0, 1]", num(a)));
    }
    return;
  }
  // estimate and risk-profile
  if (!listed(kEstimators, c.estimator)) {
    throw ValidationError(fmt::format("unknown estimator '{}'", c.estimator));
  }
  check_trials(c.trials, c.estimator == "braess" || c.estimator == "minimax" ? 2 : 1);
  if ((c.estimator == "add-beta" || c.estimator == "braess") && c.alpha > 0.0) {
    throw ValidationError(fmt::format("{} is defined for alpha = 0 only; use --estimator hml for noisy coins",
                                      c.estimator));
  }
  if ((c.estimator == "add-beta" || c.estimator == "bayes-beta") && !c.beta) {
    throw ValidationError(c.estimator + " requires --beta");
  }
  if (c.estimator == "bayes-discrete" && c.prior.empty()) throw ValidationError("bayes-discrete requires --prior");
}

Outcome cmd_estimate(const RunConfig& c, std::ostream& log) {
  const Built b = build_estimator(c, log);
  Outcome out;
  out.doc.config = base_config(c);
  out.doc.config["estimator"] = c.estimator;
  Table t = estimator_table("estimator", b.estimator);
  annotate(t, b, c);
  out.doc.tables.push_back(std::move(t));
  out.status = status_of(b);
  return out;
}

Outcome cmd_risk_profile(const RunConfig& c, std::ostream& log) {
  const Built b = build_estimator(c, log);
  const RiskProfile profile = risk_profile(b.estimator, c.grid);
  Outcome out;
  out.doc.config = base_config(c);
  out.doc.config["estimator"] = c.estimator;
  Table t{"profile", {}, {"p", "risk"}, {}};
  annotate(t, b, c);
  for (std::size_t i = 0; i < profile.grid.size(); ++i) t.rows.push_back({profile.grid[i], profile.values[i]});
  const auto top = profile.global_max();
  t.note("global_max", fmt::format("p={} risk={}", num(top.p), num(top.risk)));
  Table maxima{"maxima", {}, {"p", "risk"}, {}};
  for (const auto& m : profile.maxima) maxima.rows.push_back({m.p, m.risk});
  out.doc.tables.push_back(std::move(t));
  out.doc.tables.push_back(std::move(maxima));
  out.status = status_of(b);
  return out;
}

Outcome cmd_lfp(const RunConfig& c, std::ostream& log) {
  const TrialModel model(c.trials, c.alpha);
  const LfpResult r = lfp_search(model, lfp_options(c, log));
  const DualityReport report = verify_duality(r);
  Outcome out;
  out.doc.config = base_config(c);
  out.doc.config["tolerance"] = c.tolerance;

  Table support{"support", {}, {"point", "weight", "risk", "deviation"}, {}};
  for (const auto& d : report.points) support.rows.push_back({d.point, d.weight, d.risk, d.deviation});
  out.doc.tables.push_back(std::move(support));
  out.doc.tables.push_back(estimator_table("estimator", r.estimator));

  auto& diag = out.doc.diagnostics;
  diag["bayes_risk"] = r.bayes_risk;
  diag["max_risk"] = r.max_risk;
  diag["duality_gap"] = r.duality_gap;
  diag["converged"] = r.converged;
  diag["iterations"] = r.iterations;
  diag["worst_p"] = r.worst.p;
  diag["duality_threshold"] = report.threshold;
  diag["duality_passed"] = report.passed;
  out.status = r.converged ? kExitSuccess : kExitNotConverged;
  return out;
}

Outcome cmd_bimodal(const RunConfig& c, std::ostream& /*log*/) {
  const TrialModel model(c.trials, c.alpha);
  std::vector<double> anchors = c.anchor_list;
  if (anchors.empty()) {
    for (int i = 0; i < c.anchors; ++i) anchors.push_back(static_cast<double>(i) / (c.anchors - 1));
  }
  const auto results = bimodal_profile(model, anchors);
  Outcome out;
  out.doc.config = base_config(c);
  Table t{"bimodal", {}, {"anchor", "R2", "w_witness", "p2_witness"}, {}};
  for (const auto& r : results) t.rows.push_back({r.anchor, r.risk, r.weight, r.other});
  out.doc.tables.push_back(std::move(t));
  return out;
}

Outcome cmd_tune_beta(const RunConfig& c, std::ostream& /*log*/) {
  auto trials = c.trials_list;
  std::sort(trials.begin(), trials.end());
  const BetaSweep sweep = beta_sweep(trials, c.alpha_list, c.grid);
  Outcome out;
  out.doc.config = ordered_json::object();
  out.doc.config["command"] = c.command;
  out.doc.config["trials"] = trials;
  out.doc.config["alpha"] = c.alpha_list;
  out.doc.config["grid"] = c.grid;
  out.doc.config["seed"] = c.seed;
  Table t{"tune_beta",
          {},
          {"N", "alpha", "beta_opt", "risk_at_0", "interior_peak", "risk_at_half", "branch"},
          {}};
  for (const auto& cell : sweep.cells) {
    const auto& d = cell.choice.at;
    t.rows.push_back({std::int64_t{cell.trials}, cell.noise, d.beta, d.risk_at_zero, d.interior_peak,
                      d.risk_at_half, to_string(cell.choice.branch)});
  }
  out.doc.tables.push_back(std::move(t));
  return out;
}

namespace {

struct Artifact {
  std::string stem;
  Document doc;
};

Document single(const ordered_json& config, Table table) {
  Document d;
  d.config = config;
  d.tables.push_back(std::move(table));
  return d;
}

ordered_json figure_config(const RunConfig& c, int trials) {
  ordered_json j = ordered_json::object();
  j["figure"] = c.figure;
  j["trials"] = trials;
  return j;
}

std::vector<Artifact> fig3(const RunConfig& c) {
  constexpr int kTrials = 100;
  constexpr double kAlpha = 0.1;
  const TrialModel model(kTrials, kAlpha);
  auto config = figure_config(c, kTrials);
  config["alpha"] = kAlpha;
  std::vector<Artifact> out;
  out.push_back({"fig3_ml", single(config, estimator_table("ml", maximum_likelihood_table(model)))});
  for (double beta : {0.01, 0.04, 0.1, 0.5}) {
    Table t = estimator_table("hml", hedged_ml_table(model, HedgingParam(beta)));
    t.note("beta", num(beta));
    out.push_back({"fig3_hml_beta_" + tag(beta), single(config, std::move(t))});
  }
  return out;
}

std::vector<Artifact> fig4(const RunConfig& c) {
  constexpr int kTrials = 100;
  std::vector<Artifact> out;
  for (double alpha : {0.0, 0.01, 0.1, 0.25}) {
    const TrialModel model(kTrials, alpha);
    const auto choice = optimal_beta(model, c.grid);
    const double beta = choice.beta();
    const auto best = hedged_ml_table(model, HedgingParam(beta));
    const auto half = hedged_ml_table(model, HedgingParam(beta / 2));
    const auto twice = hedged_ml_table(model, HedgingParam(beta * 2));
    Table t = profile_table(
        "risk", {{"risk_optimal", &best}, {"risk_half_beta", &half}, {"risk_double_beta", &twice}}, c.grid);
    t.note("beta", num(beta));
    t.note("beta_branch", to_string(choice.branch));
    auto config = figure_config(c, kTrials);
    config["alpha"] = alpha;
    out.push_back({"fig4_alpha_" + tag(alpha), single(config, std::move(t))});
  }
  return out;
}

std::vector<Artifact> fig5(const RunConfig& c, std::ostream& log, bool& converged) {
  constexpr int kTrials = 100;
  std::vector<Artifact> out;
  for (double alpha : {0.1, 0.25}) {
    const TrialModel model(kTrials, alpha);
    auto config = figure_config(c, kTrials);
    config["alpha"] = alpha;
    const auto lfp = lfp_search(model, lfp_options(c, log));
    converged = converged && lfp.converged;
    const auto choice = optimal_beta(model, c.grid);
    const auto hml = hedged_ml_table(model, HedgingParam(choice.beta()));

    Table minimax = estimator_table("minimax", lfp.estimator);
    note_lfp(minimax, lfp);
    Table hml_table = estimator_table("hml", hml);
    hml_table.note("beta", num(choice.beta()));
    Table risk = profile_table("risk", {{"risk_minimax", &lfp.estimator}, {"risk_hml", &hml}}, c.grid);
    const std::string a = tag(alpha);
    out.push_back({"fig5_minimax_alpha_" + a, single(config, std::move(minimax))});
    out.push_back({"fig5_ml_alpha_" + a, single(config, estimator_table("ml", maximum_likelihood_table(model)))});
    out.push_back({"fig5_hml_alpha_" + a, single(config, std::move(hml_table))});
    out.push_back({"fig5_risk_alpha_" + a, single(config, std::move(risk))});
  }
  return out;
}

std::vector<Artifact> fig6(const RunConfig& c, std::ostream& log, bool& converged) {
  constexpr int kTrials = 100;
  constexpr int kAnchors = 101;
  std::vector<Artifact> out;
  for (double alpha : {0.1, 0.25}) {
    const TrialModel model(kTrials, alpha);
    auto config = figure_config(c, kTrials);
    config["alpha"] = alpha;
    const auto lfp = lfp_search(model, lfp_options(c, log));
    converged = converged && lfp.converged;
    const auto choice = optimal_beta(model, c.grid);
    const auto hml = hedged_ml_table(model, HedgingParam(choice.beta()));

    Table risk = profile_table("risk", {{"risk_minimax", &lfp.estimator}, {"risk_hml", &hml}}, c.grid);
    note_lfp(risk, lfp);
    risk.note("beta", num(choice.beta()));
    Table prior{"prior", {}, {"point", "weight"}, {}};
    note_lfp(prior, lfp);
    for (const auto& s : lfp.prior.support()) prior.rows.push_back({s.point, s.weight});

    std::vector<double> anchors;
    for (int i = 0; i < kAnchors; ++i) anchors.push_back(static_cast<double>(i) / (kAnchors - 1));
    Table bimodal{"bimodal", {}, {"anchor", "R2", "w_witness", "p2_witness"}, {}};
    for (const auto& r : bimodal_profile(model, anchors)) bimodal.rows.push_back({r.anchor, r.risk, r.weight, r.other});

    const std::string a = tag(alpha);
    out.push_back({"fig6_risk_alpha_" + a, single(config, std::move(risk))});
    out.push_back({"fig6_prior_alpha_" + a, single(config, std::move(prior))});
    out.push_back({"fig6_bimodal_alpha_" + a, single(config, std::move(bimodal))});
  }
  return out;
}

std::vector<Artifact> fig7(const RunConfig& c) {
  constexpr double kAlpha = 0.01;
  const int top = c.desk_scale ? 16 : 20;  // quarter decades: 10^4 or 10^5
  std::vector<int> trials;
  for (int k = 4; k <= top; ++k) trials.push_back(static_cast<int>(std::lround(std::pow(10.0, k / 4.0))));
  const BetaSweep sweep = beta_sweep(trials, {kAlpha}, c.grid);
  std::vector<double> boundary(trials.size());
  numeric::parallel_for(trials.size(), [&](std::size_t i) {
    boundary[i] = bimodal_risk(TrialModel(trials[i], kAlpha), 0.0).risk;
  });

  ordered_json config = ordered_json::object();
  config["figure"] = c.figure;
  config["alpha"] = kAlpha;
  config["trials"] = trials;
  Table beta{"beta", {}, {"N", "beta_opt", "branch"}, {}};
  Table risk{"risk", {}, {"N", "risk_at_half", "bimodal_at_0", "risk_at_0", "interior_peak"}, {}};
  for (std::size_t i = 0; i < sweep.cells.size(); ++i) {
    const auto& cell = sweep.cells[i];
    const auto& d = cell.choice.at;
    const std::int64_t n = cell.trials;
    beta.rows.push_back({n, d.beta, to_string(cell.choice.branch)});
    risk.rows.push_back({n, d.risk_at_half, boundary[i], d.risk_at_zero, d.interior_peak});
  }
  return {{"fig7_beta", single(config, std::move(beta))}, {"fig7_risk", single(config, std::move(risk))}};
}

std::vector<Artifact> fig8(const RunConfig& c) {
  const int max_log_n = c.desk_scale ? 12 : 17;
  const int max_log_alpha = c.desk_scale ? 8 : 12;  // alpha >= 2^-max_log_alpha
  std::vector<int> trials;
  for (int k = 1; k <= max_log_n; ++k) trials.push_back(1 << k);
  std::vector<double> noises;
  for (int k = 2; k <= max_log_alpha; ++k) noises.push_back(std::ldexp(1.0, -k));
  const BetaSweep sweep = beta_sweep(trials, noises, c.grid);

  std::vector<Artifact> out;
  std::map<double, Table> curves;
  for (const auto& cell : sweep.cells) {
    auto it = curves.try_emplace(cell.noise, Table{"beta", {}, {"N", "beta_opt", "max_risk", "branch"}, {}}).first;
    it->second.rows.push_back(
        {std::int64_t{cell.trials}, cell.choice.beta(), cell.choice.max_risk(), to_string(cell.choice.branch)});
  }
  for (int k = 2; k <= max_log_alpha; ++k) {
    const double alpha = std::ldexp(1.0, -k);
    ordered_json config = ordered_json::object();
    config["figure"] = c.figure;
    config["alpha"] = alpha;
    config["trials"] = trials;
    out.push_back({fmt::format("fig8_log2_alpha_-{}", k), single(config, std::move(curves.at(alpha)))});
  }
  return out;
}

}  // namespace

ReproduceResult cmd_reproduce(const RunConfig& c, const std::filesystem::path& dir, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  bool converged = true;
  std::vector<Artifact> artifacts;
  if (c.figure == "fig3") artifacts = fig3(c);
  if (c.figure == "fig4") artifacts = fig4(c);
  if (c.figure == "fig5") artifacts = fig5(c, log, converged);
  if (c.figure == "fig6") artifacts = fig6(c, log, converged);
  if (c.figure == "fig7") artifacts = fig7(c);
  if (c.figure == "fig8") artifacts = fig8(c);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const std::string extension = c.format == Format::csv ? ".csv" : ".json";
  ReproduceResult result;
  ordered_json files = ordered_json::array();
  std::vector<std::pair<std::filesystem::path, std::string>> pending;
  for (const auto& a : artifacts) {
    std::string body = render(a.doc, c.format);
    const std::filesystem::path name = a.stem + extension;
    files.push_back({{"path", name.string()}, {"sha256", sha256_hex(body)}, {"bytes", body.size()}});
    result.files.push_back(name);
    pending.emplace_back(name, std::move(body));
  }

  ordered_json manifest = ordered_json::object();
  manifest["figure"] = c.figure;
  manifest["config"] = {{"desk_scale", c.desk_scale},
                        {"grid", c.grid},
                        {"format", c.format == Format::csv ? "csv" : "json"},
                        {"seed", c.seed},
                        {"threads", numeric::thread_count()}};
  manifest["tolerances"] = {{"lfp_tolerance", c.tolerance}, {"lfp_max_iterations", c.max_iterations}};
  manifest["converged"] = converged;
  manifest["wall_time_seconds"] = seconds;
  manifest["files"] = std::move(files);

  for (const auto& [name, body] : pending) write_file(dir / name, body);
  result.manifest = dir / "manifest.json";
  write_file(result.manifest, manifest.dump(2) + "\n");
  result.status = converged ? kExitSuccess : kExitNotConverged;
  return result;
}

}  // namespace noisycoin::cli
