#include "cli.hpp"

#include "bayesid/csv_util.hpp"
#include "bayesid/dataio.hpp"
#include "bayesid/diagnostics.hpp"
#include "bayesid/postprocess.hpp"
#include "bayesid/sampler.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <future>
#include <ostream>
#include <sstream>

namespace bayesid::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kFactorsSchemaVersion = 1;

struct DecomposeArgs {
  std::string input;
  std::string format = "csv";
  bool header = false;
  std::string missing;
  std::string flavor = "gbt";
  bool ard = false;
  int k = 0;
  std::string cap = "100";
  bool undo_log = false;
  bool standardize = false;
  bool per_column = false;
  bool exp_before_cap = false;
  bool fill_before_standardize = false;
  int dup_factor = 1;
  std::string out_dir = "bayesid_out";
  int chains = 1;
  HyperParams h;
  RunConfig cfg;
};

struct SynthArgs {
  SyntheticSpec spec;
  std::string out = "synthetic.csv";
  std::string manifest;
};

struct DiagnoseArgs {
  std::string trace;
  int burn_in = 100;
  int thinning = 5;
  double tol = RunConfig{}.convergence_tol;
  int window = RunConfig{}.convergence_window;
  bool json_output = false;
};

json hyperparams_json(const HyperParams& h) {
  return {{"a", h.a},
          {"b", h.b},
          {"alpha_sigma", h.alpha_sigma},
          {"beta_sigma", h.beta_sigma},
          {"mu_init", h.mu_init},
          {"tau_init", h.tau_init},
          {"mu_mu", h.mu_mu},
          {"tau_mu", h.tau_mu},
          {"alpha_t", h.alpha_t},
          {"beta_t", h.beta_t},
          {"nu", h.nu},
          {"flavor", h.flavor == Flavor::GBTN ? "gbtn" : "gbt"},
          {"ard", h.ard}};
}

json run_config_json(const RunConfig& c) {
  return {{"iterations", c.max_iterations},
          {"burn_in", c.burn_in},
          {"thinning", c.thinning},
          {"seed", c.seed},
          {"convergence_tol", c.convergence_tol},
          {"convergence_window", c.convergence_window},
          {"stop_on_convergence", c.stop_on_convergence},
          {"rank", c.rank},
          {"shuffle_flip_order", c.shuffle_flip_order},
          {"monitored_entries", c.monitored_entries}};
}

json rank_json(const RankSummary& s) {
  json hist = json::object();
  for (const auto& [k, count] : s.histogram) hist[std::to_string(k)] = count;
  return {{"mode", s.mode}, {"mean", s.mean}, {"histogram", hist}};
}

struct ChainSummary {
  int chain = 0;
  std::uint64_t seed = 0;
  double averaged_mse = 0.0;
  double mse_after_identity = 0.0;
  int k = 0;
  int k_mode = 0;
};

ChainSummary write_chain(const DecomposeArgs& a, const RunConfig& cfg,
                         const std::shared_ptr<const ObservedMatrix>& observed,
                         const json& preprocessing, const fs::path& dir, int chain) {
  RunResult res = run(observed, a.h, cfg);
  const IdFactors f = extract_cw(res.state);
  const auto tail = post_burn_in(res.trace, cfg.burn_in);
  const RankSummary rank = rank_trace_summary(tail.empty() ? res.trace : tail);

  fs::create_directories(dir);
  write_matrix_csv(dir / "C.csv", f.C);
  write_matrix_csv(dir / "W.csv", f.W);
  export_traces(res.trace, res.chains, dir);

  json factors = {
      {"schema_version", kFactorsSchemaVersion},
      {"input", a.input},
      {"shape", {observed->rows(), observed->cols()}},
      {"K", f.basis.size()},
      {"basis_indices", f.basis},
      {"mse_before_identity", f.mse_before_identity},
      {"mse_after_identity", f.mse_after_identity},
      {"averaged_mse", res.averaged_mse},
      {"final_mse", res.trace.back().mse},
      {"iterations_run", res.trace.size()},
      {"converged_at", res.converged_at ? json(*res.converged_at) : json(nullptr)},
      {"rank_summary", rank_json(rank)},
      {"hyperparameters", hyperparams_json(a.h)},
      {"run_config", run_config_json(cfg)},
      {"preprocessing", preprocessing},
  };
  write_text_file(dir / "factors.json", factors.dump(2) + "\n");
  return {chain, cfg.seed, res.averaged_mse, f.mse_after_identity,
          static_cast<int>(f.basis.size()), rank.mode};
}

int cmd_decompose(DecomposeArgs a, std::ostream& out) {
  if (!a.ard && a.k < 1) {
    throw CLI::ValidationError("--k", "required (>= 1) unless --ard is given");
  }
  a.h.ard = a.ard;
  if (a.flavor == "gbt") {
    a.h.flavor = Flavor::GBT;
  } else if (a.flavor == "gbtn") {
    a.h.flavor = Flavor::GBTN;
  } else {
    throw CLI::ValidationError("--flavor", "must be gbt or gbtn");
  }
  a.cfg.rank = a.k;

  LoadOptions load;
  load.format = a.format == "tsv" ? TableFormat::Tsv : TableFormat::Csv;
  load.has_header = a.header;
  load.missing_sentinel = a.missing;

  PreprocessConfig pre;
  if (a.cap == "none") {
    pre.cap_value.reset();
  } else {
    double cap = 0.0;
    if (!parse_double(a.cap, cap)) {
      throw CLI::ValidationError("--cap", "expected a number or 'none'");
    }
    pre.cap_value = cap;
  }
  pre.undo_log = a.undo_log;
  pre.standardize = a.standardize;
  pre.standardize_per_column = a.per_column;
  pre.exp_before_cap = a.exp_before_cap;
  pre.fill_before_standardize = a.fill_before_standardize;
  pre.column_duplication_factor = a.dup_factor;

  const RawMatrix raw = load_matrix(a.input, load);
  PreprocessResult prepared = preprocess(raw, pre);
  auto observed = std::make_shared<const ObservedMatrix>(std::move(prepared.data));
  a.h.validate();
  a.cfg.validate();

  const fs::path out_dir(a.out_dir);
  fs::create_directories(out_dir);
  write_matrix_csv(out_dir / "preprocessed.csv", observed->data());
  write_text_file(out_dir / "preprocess.json", prepared.manifest.dump(2) + "\n");

  std::vector<ChainSummary> summaries;
  if (a.chains <= 1) {
    summaries.push_back(write_chain(a, a.cfg, observed, prepared.manifest, out_dir, 0));
  } else {
    std::vector<std::future<ChainSummary>> jobs;
    for (int c = 0; c < a.chains; ++c) {
      RunConfig cfg = a.cfg;
      cfg.seed = a.cfg.seed + static_cast<std::uint64_t>(c);
      jobs.push_back(std::async(std::launch::async, write_chain, std::cref(a), cfg, observed,
                                std::cref(prepared.manifest),
                                out_dir / ("chain_" + std::to_string(c)), c));
    }
    for (auto& job : jobs) summaries.push_back(job.get());
  }

  for (const auto& s : summaries) {
    if (summaries.size() > 1) out << "chain " << s.chain << " (seed " << s.seed << "): ";
    out << "averaged_mse=" << format_double(s.averaged_mse)
        << " mse_after_identity=" << format_double(s.mse_after_identity) << " K=" << s.k
        << " K_mode=" << s.k_mode << "\n";
  }
  return 0;
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const SyntheticMatrix syn = synth_lowrank(a.spec);
  write_matrix_csv(a.out, syn.A);
  const std::string manifest_path = a.manifest.empty() ? a.out + ".json" : a.manifest;
  std::vector<std::vector<double>> w_rows;
  for (Index i = 0; i < syn.W.rows(); ++i) {
    w_rows.emplace_back(syn.W.row(i).begin(), syn.W.row(i).end());
  }
  const json manifest = {{"m", a.spec.m},
                         {"n", a.spec.n},
                         {"rank", a.spec.k_star},
                         {"noise_sigma", a.spec.noise_sigma},
                         {"seed", a.spec.seed},
                         {"basis_indices", syn.basis},
                         {"W", w_rows}};
  write_text_file(manifest_path, manifest.dump(2) + "\n");
  out << "wrote " << a.out << " (" << a.spec.m << "x" << a.spec.n << ", rank " << a.spec.k_star
      << ") and " << manifest_path << "\n";
  return 0;
}

int cmd_diagnose(const DiagnoseArgs& a, std::ostream& out) {
  const auto trace = read_trace_csv(a.trace);
  if (trace.empty()) {
    throw std::runtime_error(a.trace + ": trace has no records");
  }
  RunConfig cfg;
  cfg.convergence_tol = a.tol;
  cfg.convergence_window = a.window;
  cfg.thinning = a.thinning;
  cfg.burn_in = a.burn_in;

  json converged = nullptr;
  for (std::size_t t = 1; t <= trace.size(); ++t) {
    if (check_convergence(std::span(trace).first(t), cfg)) {
      converged = trace[t - 1].iteration;
      break;
    }
  }
  auto tail = post_burn_in(trace, a.burn_in);
  const bool whole = tail.empty();
  if (whole) tail = trace;
  const RankSummary rank = rank_trace_summary(tail);
  const auto kept = thinned_post_burn_in(trace, cfg);
  double averaged = 0.0;
  if (kept.empty()) {
    for (const auto& r : tail) averaged += r.mse;
    averaged /= static_cast<double>(tail.size());
  } else {
    averaged = averaged_loss(trace, cfg);
  }

  const json report = {{"records", trace.size()},
                       {"converged_at", converged},
                       {"k_mode", rank.mode},
                       {"k_mean", rank.mean},
                       {"k_histogram", rank_json(rank)["histogram"]},
                       {"final_mse", trace.back().mse},
                       {"averaged_mse", averaged},
                       {"burn_in_exceeds_trace", whole}};
  if (a.json_output) {
    out << report.dump(2) << "\n";
  } else {
    out << "records:       " << trace.size() << "\n"
        << "converged at:  " << (converged.is_null() ? std::string("never") : converged.dump())
        << "\n"
        << "K mode:        " << rank.mode << " (mean " << rank.mean << ")\n"
        << "final MSE:     " << format_double(trace.back().mse) << "\n"
        << "averaged MSE:  " << format_double(averaged) << "\n";
  }
  return 0;
}

void add_decompose_options(CLI::App* sub, DecomposeArgs& a) {
  sub->add_option("--input", a.input, "Input matrix (CSV/TSV)")->required();
  sub->add_option("--format", a.format, "Input format")->check(CLI::IsMember({"csv", "tsv"}));
  sub->add_flag("--header", a.header, "Input has a header row");
  sub->add_option("--missing", a.missing, "Extra missing-cell sentinel (empty cells always count)");
  sub->add_option("--flavor", a.flavor, "Model flavour: gbt | gbtn");
  sub->add_flag("--ard", a.ard, "Infer K with automatic relevance determination");
  sub->add_option("--k", a.k, "Number of basis columns (required without --ard; initial K with it)");
  sub->add_option("--iters", a.cfg.max_iterations, "Gibbs iterations");
  sub->add_option("--burn-in", a.cfg.burn_in, "Burn-in iterations");
  sub->add_option("--thin", a.cfg.thinning, "Thinning interval for the averaged loss");
  sub->add_option("--seed", a.cfg.seed, "RNG seed");
  sub->add_option("--tol", a.cfg.convergence_tol, "Convergence tolerance (relative window change)");
  sub->add_option("--window", a.cfg.convergence_window, "Convergence window (records)");
  sub->add_flag("--stop-on-convergence", a.cfg.stop_on_convergence, "Stop once converged");
  sub->add_flag("--shuffle-flips", a.cfg.shuffle_flip_order,
                "Visit state-vector entries in random order under ARD");
  sub->add_option("--monitor", a.cfg.monitored_entries, "Number of y_kl chains to record");
  sub->add_option("--nu", a.h.nu, "Critical steps (Y sweeps per ARD iteration)");
  sub->add_option("--a", a.h.a, "Lower bound of Y entries");
  sub->add_option("--b", a.h.b, "Upper bound of Y entries");
  sub->add_option("--alpha-sigma", a.h.alpha_sigma, "Inverse-Gamma shape for sigma2");
  sub->add_option("--beta-sigma", a.h.beta_sigma, "Inverse-Gamma scale for sigma2");
  sub->add_option("--mu0", a.h.mu_init, "Initial / fixed parent mean of y_kl");
  sub->add_option("--tau0", a.h.tau_init, "Initial / fixed parent precision of y_kl");
  sub->add_option("--mu-mu", a.h.mu_mu, "GBTN hyperprior mean");
  sub->add_option("--tau-mu", a.h.tau_mu, "GBTN hyperprior precision");
  sub->add_option("--alpha-t", a.h.alpha_t, "GBTN Gamma shape for tau_kl");
  sub->add_option("--beta-t", a.h.beta_t, "GBTN Gamma rate for tau_kl");
  sub->add_option("--cap", a.cap, "Cap value, or 'none'");
  sub->add_flag("--undo-log", a.undo_log, "Exponentiate entries");
  sub->add_flag("--standardize", a.standardize, "Standardise to zero mean, unit variance");
  sub->add_flag("--per-column", a.per_column, "Standardise per column instead of globally");
  sub->add_flag("--exp-before-cap", a.exp_before_cap, "Undo the log before capping");
  sub->add_flag("--fill-before-standardize", a.fill_before_standardize,
                "Fill missing cells with 0 before standardising");
  sub->add_option("--dup-factor", a.dup_factor, "Column duplication factor");
  sub->add_option("--out-dir", a.out_dir, "Output directory");
  sub->add_option("--chains", a.chains, "Independent chains run concurrently")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian interpolative decomposition by Gibbs sampling", "bayesid"};
  app.require_subcommand(1);
  // Accepted after the subcommand too; decompose settings live in a [decompose] table.
  app.fallthrough();
  app.set_config("--config", "", "TOML config file (flags take precedence)");

  DecomposeArgs dec;
  auto* decompose = app.add_subcommand("decompose", "Sample an interpolative decomposition A ~ C W");
  add_decompose_options(decompose, dec);

  SynthArgs syn;
  auto* synth = app.add_subcommand("synth", "Write a synthetic low-rank matrix with known ID");
  synth->add_option("--m", syn.spec.m, "Rows");
  synth->add_option("--n", syn.spec.n, "Columns");
  synth->add_option("--rank", syn.spec.k_star, "True rank");
  synth->add_option("--noise", syn.spec.noise_sigma, "Gaussian noise standard deviation");
  synth->add_option("--seed", syn.spec.seed, "RNG seed");
  synth->add_option("--out", syn.out, "Output CSV path");
  synth->add_option("--manifest", syn.manifest, "Ground-truth JSON path (default <out>.json)");

  DiagnoseArgs diag;
  auto* diagnose = app.add_subcommand("diagnose", "Summarise a trace.csv");
  diagnose->add_option("--trace", diag.trace, "trace.csv written by decompose")->required();
  diagnose->add_option("--burn-in", diag.burn_in, "Burn-in iterations");
  diagnose->add_option("--thin", diag.thinning, "Thinning interval");
  diagnose->add_option("--tol", diag.tol, "Convergence tolerance");
  diagnose->add_option("--window", diag.window, "Convergence window");
  diagnose->add_flag("--json", diag.json_output, "Emit JSON");

  std::vector<const char*> argv;
  argv.push_back("bayesid");
  for (const auto& s : args) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (decompose->parsed()) return cmd_decompose(dec, out);
    if (synth->parsed()) {
      if (syn.spec.k_star > syn.spec.n || syn.spec.k_star > syn.spec.m) {
        throw CLI::ValidationError("--rank", "must not exceed --m or --n");
      }
      return cmd_synth(syn, out);
    }
    if (diagnose->parsed()) return cmd_diagnose(diag, out);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace bayesid::cli
