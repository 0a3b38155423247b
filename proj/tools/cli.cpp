#include "cli.hpp"

#include <CLI11.hpp>

#include <map>
#include <ostream>

#include "commands.hpp"

namespace noisycoin::cli {

namespace {

void add_common(CLI::App& sub, RunConfig& c) {
  sub.add_option("--grid", c.grid, "Risk grid size")->capture_default_str();
  sub.add_option("--format", c.format, "Output format")
      ->transform(CLI::CheckedTransformer(std::map<std::string, Format>{{"csv", Format::csv}, {"json", Format::json}}))
      ->default_str("csv");
  sub.add_option("--output", c.output, "Output path (directory for reproduce)");
  sub.add_option("--seed", c.seed, "Recorded in the output configuration")->capture_default_str();
}

void add_model(CLI::App& sub, RunConfig& c) {
  sub.add_option("-N,--trials", c.trials, "Number of coin flips")->capture_default_str();
  sub.add_option("--alpha", c.alpha, "Noise level in [0, 1/2)")->capture_default_str();
}

void add_tolerance(CLI::App& sub, RunConfig& c) {
  sub.add_option("--tolerance", c.tolerance, "Relative duality gap target")->capture_default_str();
  sub.add_option("--max-iterations", c.max_iterations, "Outer iterations of the prior search")->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  double beta = 0.0;

  CLI::App app{"Estimators, risk profiles and minimax search for a noisy coin", "noisycoin"};
  app.require_subcommand(1);

  auto* estimate = app.add_subcommand("estimate", "Tabulate an estimator over n = 0..N");
  auto* profile = app.add_subcommand("risk-profile", "Pointwise KL risk of an estimator over p");
  for (auto* sub : {estimate, profile}) {
    add_model(*sub, c);
    add_common(*sub, c);
    add_tolerance(*sub, c);
    sub->add_option("--estimator", c.estimator, "li, ml, add-beta, braess, hml, bayes-discrete, bayes-beta, minimax")
        ->capture_default_str();
    sub->add_option("--beta", beta, "Hedging exponent or Beta prior parameter (hml default: optimal)");
    sub->add_option("--prior", c.prior, "Atoms for bayes-discrete as p:w,p:w,...");
  }

  auto* lfp = app.add_subcommand("lfp", "Least favorable prior and its minimax estimator");
  add_model(*lfp, c);
  add_common(*lfp, c);
  add_tolerance(*lfp, c);

  auto* bimodal = app.add_subcommand("bimodal", "Two-point Bayes risk lower bound R2 over anchors");
  add_model(*bimodal, c);
  add_common(*bimodal, c);
  bimodal->add_option("--anchors", c.anchors, "Evenly spaced anchors on [0, 1]")->capture_default_str();
  bimodal->add_option("--anchor", c.anchor_list, "Explicit anchors (overrides --anchors)");

  auto* tune = app.add_subcommand("tune-beta", "Optimal hedging exponent per (N, alpha)");
  tune->add_option("-N,--trials", c.trials_list, "One or more trial counts")->required();
  tune->add_option("--alpha", c.alpha_list, "One or more noise levels")->required();
  add_common(*tune, c);

  auto* reproduce = app.add_subcommand("reproduce", "Write the data behind one figure plus a manifest");
  reproduce->add_option("figure", c.figure, "fig3, fig4, fig5, fig6, fig7 or fig8")->required();
  reproduce->add_flag("--desk-scale", c.desk_scale, "Truncate the fig7 and fig8 sweeps");
  add_common(*reproduce, c);
  add_tolerance(*reproduce, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitSuccess : kExitValidation;
  }

  c.command = app.get_subcommands().front()->get_name();
  for (auto* sub : {estimate, profile}) {
    if (sub->parsed() && sub->count("--beta") > 0) c.beta = beta;
  }

  try {
    validate(c);
    if (c.command == "reproduce") {
      const std::filesystem::path dir = c.output.empty() ? std::filesystem::path("reproduce") / c.figure
                                                         : std::filesystem::path(c.output);
      const auto result = cmd_reproduce(c, dir, err);
      for (const auto& f : result.files) out << (dir / f).string() << '\n';
      out << result.manifest.string() << '\n';
      return result.status;
    }
    Outcome outcome;
    if (c.command == "estimate") outcome = cmd_estimate(c, err);
    if (c.command == "risk-profile") outcome = cmd_risk_profile(c, err);
    if (c.command == "lfp") outcome = cmd_lfp(c, err);
    if (c.command == "bimodal") outcome = cmd_bimodal(c, err);
    if (c.command == "tune-beta") outcome = cmd_tune_beta(c, err);
    const std::string body = render(outcome.doc, c.format);
    if (c.output.empty()) {
      out << body;
    } else {
      write_file(c.output, body);
    }
    if (outcome.status == kExitNotConverged) err << "noisycoin: search did not converge\n";
    return outcome.status;
  } catch (const ValidationError& e) {
    err << "noisycoin: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    err << "noisycoin: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "noisycoin: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace noisycoin::cli
