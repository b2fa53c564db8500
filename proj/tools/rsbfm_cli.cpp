// Command-line front end: simulate / fit / classify / metrics.
// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "rsbfm/checkpoint.hpp"
#include "rsbfm/classifier.hpp"
#include "rsbfm/csv.hpp"
#include "rsbfm/engine.hpp"
#include "rsbfm/linalg.hpp"
#include "rsbfm/parallel.hpp"
#include "rsbfm/simdata.hpp"
#include "rsbfm/tdist.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rsbfm;

namespace {

constexpr int manifest_format_version = 1;

std::string default_outdir() {
  const char* env = std::getenv("RSBFM_OUTDIR");
  return env && *env ? env : ".";
}

struct CliOptions {
  SamplerConfig sampler;
  std::string eta_mode_name = "nuts";
  std::string likelihood_name = "t";
  std::string outdir = default_outdir();
  std::string config_file;
};

// CLI11 only reads config files on the top-level app, but every option here
// lives on a subcommand, so the file is expanded into argv tokens inserted
// right after the subcommand name; explicit flags come later and win because
// all options take the last value given
std::vector<std::string> expand_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  std::size_t subcommand_pos = args.size();
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (subcommand_pos == args.size() && !args[i].empty() && args[i][0] != '-')
      subcommand_pos = i;
    if (args[i] == "--config" && i + 1 < args.size())
      config_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;

  std::ifstream in(config_path);
  if (!in) throw std::invalid_argument("cannot open config file " + config_path);
  auto trim = [](const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  std::vector<std::string> expansion;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    std::string key = trim(eq == std::string::npos ? line : line.substr(0, eq));
    if (key.empty() || key == "config")
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": invalid key in '" + line + "'");
    // "--key=value" keeps flag keys (no separate value token) working too
    expansion.push_back(eq == std::string::npos
                            ? "--" + key
                            : "--" + key + "=" + trim(line.substr(eq + 1)));
  }
  auto insert_at = args.begin() +
                   static_cast<std::ptrdiff_t>(std::min(subcommand_pos + 1, args.size()));
  args.insert(insert_at, expansion.begin(), expansion.end());
  return args;
}

void add_sampler_options(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--nu", o.sampler.nu, "t degrees of freedom of the fitted model");
  cmd->add_option("--a-sigma", o.sampler.a_sigma, "error precision prior shape");
  cmd->add_option("--b-sigma", o.sampler.b_sigma, "error precision prior rate");
  cmd->add_option("--kappa", o.sampler.kappa, "local shrinkage prior parameter");
  cmd->add_option("--step-size", o.sampler.nuts_step_size, "leapfrog step size");
  cmd->add_option("--max-depth", o.sampler.nuts_max_depth, "NUTS tree depth cap");
  cmd->add_option("--adapt-intercept", o.sampler.adapt_intercept,
                  "truncation trigger probability intercept");
  cmd->add_option("--adapt-slope", o.sampler.adapt_slope,
                  "truncation trigger probability slope");
  cmd->add_option("--threshold", o.sampler.trunc_threshold,
                  "loading magnitude below which an entry counts as null");
  cmd->add_option("--proportion", o.sampler.trunc_proportion,
                  "fraction of null entries that flags a column");
  cmd->add_option("--min-k", o.sampler.min_k, "lower bound on the truncation level");
  cmd->add_option("--mh-sd-a1", o.sampler.mh_sd_a1, "a1 proposal standard deviation");
  cmd->add_option("--mh-sd-a2", o.sampler.mh_sd_a2, "a2 proposal standard deviation");
  cmd->add_flag("--robbins-monro", o.sampler.mh_robbins_monro,
                "tune MH proposals toward 50-70% acceptance during burn-in");
  cmd->add_option("--iters", o.sampler.n_iterations, "total MCMC sweeps");
  cmd->add_option("--burnin", o.sampler.n_burnin, "discarded initial sweeps");
  cmd->add_option("--thin", o.sampler.thin, "keep every thin-th sweep after burn-in");
  cmd->add_option("--initial-k", o.sampler.initial_k,
                  "starting truncation level (0 = floor(5 log p) capped at max-k)");
  cmd->add_option("--max-k", o.sampler.max_k, "truncation ceiling (0 = p)");
  cmd->add_option("--seed", o.sampler.seed, "root RNG seed");
  cmd->add_option("--eta-sampler", o.eta_mode_name, "factor update kernel")
      ->check(CLI::IsMember({"nuts", "exact"}));
  cmd->add_option("--likelihood", o.likelihood_name,
                  "t (heavy-tailed) or normal (mixture scales frozen at 1)")
      ->check(CLI::IsMember({"t", "normal"}));
  cmd->add_option("--sample-cap", o.sampler.sample_cap,
                  "retain full covariance samples only when p <= cap");
  cmd->add_option("--checkpoint-every", o.sampler.checkpoint_every,
                  "sweeps between checkpoints");
  cmd->add_option("--threads", o.sampler.n_threads, "threads for within-sweep updates");
  cmd->add_option("--progress-every", o.sampler.progress_every,
                  "sweeps between stderr progress lines (0 = silent)");
  cmd->add_option("--outdir", o.outdir, "output directory (env RSBFM_OUTDIR)");
  cmd->add_option("--config", o.config_file,
                  "flat key=value config file with # comments; flags override it");
}

void finalize_sampler(CliOptions& o) {
  o.sampler.eta_sampler_mode = o.eta_mode_name == "exact" ? eta_mode::exact : eta_mode::nuts;
  o.sampler.likelihood =
      o.likelihood_name == "normal" ? likelihood_mode::normal : likelihood_mode::student_t;
  o.sampler.validate();
}

json sampler_to_json(const SamplerConfig& c) {
  return json{{"nu", c.nu},
              {"a_sigma", c.a_sigma},
              {"b_sigma", c.b_sigma},
              {"kappa", c.kappa},
              {"nuts_step_size", c.nuts_step_size},
              {"nuts_max_depth", c.nuts_max_depth},
              {"adapt_intercept", c.adapt_intercept},
              {"adapt_slope", c.adapt_slope},
              {"trunc_threshold", c.trunc_threshold},
              {"trunc_proportion", c.trunc_proportion},
              {"min_k", c.min_k},
              {"mh_sd_a1", c.mh_sd_a1},
              {"mh_sd_a2", c.mh_sd_a2},
              {"mh_robbins_monro", c.mh_robbins_monro},
              {"n_iterations", c.n_iterations},
              {"n_burnin", c.n_burnin},
              {"thin", c.thin},
              {"initial_k", c.initial_k},
              {"max_k", c.max_k},
              {"seed", c.seed},
              {"eta_sampler_mode", c.eta_sampler_mode == eta_mode::exact ? "exact" : "nuts"},
              {"likelihood",
               c.likelihood == likelihood_mode::normal ? "normal" : "t"},
              {"sample_cap", c.sample_cap},
              {"checkpoint_every", c.checkpoint_every},
              {"n_threads", c.n_threads}};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
}

json summary_to_json(const PosteriorSummary& s) {
  json j;
  j["k_credible_interval"] = {s.k_credible_interval.first, s.k_credible_interval.second};
  j["acceptance_rates"] = s.acceptance_rates;
  j["retained_samples"] = s.covariance_samples.size();
  j["k_trace_length"] = s.k_trace.size();
  j["elapsed_seconds"] = s.elapsed_seconds;
  return j;
}

std::string metrics_header() {
  return "replicate_id,p,k,nu0,nu_model,likelihood,one_norm,two_norm,mse,aab,mab,"
         "elapsed_seconds";
}

std::string metrics_row(int replicate, int p, int k, double nu0, double nu_model,
                        const std::string& lik, const MetricReport& m, double elapsed) {
  std::string row = std::to_string(replicate) + "," + std::to_string(p) + "," +
                    std::to_string(k) + "," + format_double(nu0) + "," +
                    format_double(nu_model) + "," + lik;
  for (double v : {m.one_norm, m.two_norm, m.mse, m.aab, m.mab, elapsed})
    row += "," + format_double(v);
  return row;
}

sweep_logger progress_logger(const SamplerConfig& cfg, std::ofstream* diag_log) {
  if (cfg.progress_every <= 0 && !diag_log) return {};
  return [&cfg, diag_log](const SweepDiagnostics& d, const AdaptationEvent& ev) {
    if (cfg.progress_every > 0 && d.iteration % cfg.progress_every == 0)
      std::cerr << "sweep " << d.iteration << " k=" << d.k
                << " lp=" << d.log_posterior_unnormalized << "\n";
    if (diag_log) {
      if (d.iteration % std::max(1, cfg.progress_every > 0 ? cfg.progress_every : 100) == 0)
        *diag_log << "sweep " << d.iteration << " k=" << d.k
                  << " lp=" << format_double(d.log_posterior_unnormalized)
                  << " accept_a1=" << d.mh_accept_a1 << " accept_a2=" << d.mh_accept_a2
                  << " divergences=" << d.nuts_divergences << "\n";
      if (ev.act != AdaptationEvent::action::none)
        *diag_log << "adapt " << ev.iteration
                  << (ev.act == AdaptationEvent::action::prune ? " prune" : " append")
                  << " k " << ev.k_before << " -> " << ev.k_after << "\n";
    }
  };
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  CliOptions base;
  int p = 20;
  int k0 = 3;
  int n = 100;
  double nu0 = 3.0;
  int replicates = 1;
  double target_zero_fraction = 0.75;
  int support_min = 0;
  int support_max = 0;
  bool no_compare = false;
  int jobs = 1;
};

int run_simulate(SimulateOptions& o) {
  finalize_sampler(o.base);
  fs::create_directories(o.base.outdir);
  const fs::path outdir(o.base.outdir);
  const std::uint64_t root_seed = o.base.sampler.seed;
  GeneratorConfig gen{o.support_min, o.support_max, 64};

  struct Job {
    int replicate;
    likelihood_mode lik;
    std::uint64_t chain_seed;
  };
  std::vector<likelihood_mode> modes{likelihood_mode::student_t};
  if (!o.no_compare) modes.push_back(likelihood_mode::normal);

  // truths and datasets are derived from the root seed per replicate, chains
  // from per-(replicate, model) substream seeds; everything lands in the manifest
  std::vector<SyntheticTruth> truths;
  std::vector<Dataset> datasets;
  for (int r = 0; r < o.replicates; ++r) {
    rng_stream truth_rng(root_seed, static_cast<std::uint64_t>(r), update_id::generator, 0);
    truths.push_back(
        generate_truth(o.p, o.k0, o.nu0, o.target_zero_fraction, truth_rng, gen));
    rng_stream data_rng(root_seed, static_cast<std::uint64_t>(r), update_id::generator, 1);
    datasets.push_back(sample_dataset(truths.back(), o.n, data_rng));
  }

  std::vector<Job> jobs;
  for (int r = 0; r < o.replicates; ++r)
    for (std::size_t m = 0; m < modes.size(); ++m)
      jobs.push_back({r, modes[m],
                      mix64(mix64(root_seed ^ 0x51D5EEDULL) ^
                            (static_cast<std::uint64_t>(r) << 1 |
                             static_cast<std::uint64_t>(m)))});

  std::vector<PosteriorSummary> results(jobs.size());
  std::vector<MetricReport> reports(jobs.size());
  parallel_for(static_cast<int>(jobs.size()), o.jobs, [&](int idx) {
    const Job& job = jobs[idx];
    SamplerConfig cfg = o.base.sampler;
    cfg.seed = job.chain_seed;
    cfg.likelihood = job.lik;
    results[idx] = run_chain(datasets[job.replicate], cfg);
    reports[idx] = evaluate_estimate(results[idx].mean_covariance, truths[job.replicate]);
  });

  std::ofstream metrics(outdir / "metrics.csv", std::ios::trunc);
  metrics << metrics_header() << "\n";
  json manifest;
  manifest["command"] = "simulate";
  manifest["format_versions"] = {{"manifest", manifest_format_version},
                                 {"checkpoint", checkpoint_format_version}};
  manifest["sampler"] = sampler_to_json(o.base.sampler);
  manifest["generator"] = {{"p", o.p},
                           {"k0", o.k0},
                           {"n", o.n},
                           {"nu0", o.nu0},
                           {"replicates", o.replicates},
                           {"target_zero_fraction", o.target_zero_fraction},
                           {"support_min", truths.front().support_min},
                           {"support_max", truths.front().support_max},
                           {"nonzero_entry_distribution", "standard_normal"},
                           {"sigma0_prior", "inverse_gamma(shape=1, rate=0.25)"}};
  manifest["root_seed"] = root_seed;
  json jjobs = json::array();

  for (std::size_t idx = 0; idx < jobs.size(); ++idx) {
    const Job& job = jobs[idx];
    const std::string lik = job.lik == likelihood_mode::normal ? "normal" : "t";
    const std::string est_name =
        "estimate_rep" + std::to_string(job.replicate) + "_" + lik + ".csv";
    write_matrix_csv(outdir / est_name, results[idx].mean_covariance);
    metrics << metrics_row(job.replicate, o.p, o.k0, o.nu0, o.base.sampler.nu, lik,
                           reports[idx], results[idx].elapsed_seconds)
            << "\n";
    json summary = summary_to_json(results[idx]);
    summary["k_trace"] = results[idx].k_trace;
    auto pct = zero_entry_percentiles(results[idx].mean_covariance,
                                      truths[job.replicate].zero_mask);
    summary["zero_entry_percentiles"] = {pct.first, pct.second};
    const std::string sum_name =
        "summary_rep" + std::to_string(job.replicate) + "_" + lik + ".json";
    write_json(outdir / sum_name, summary);
    jjobs.push_back({{"replicate", job.replicate},
                     {"likelihood", lik},
                     {"chain_seed", job.chain_seed},
                     {"estimate_file", est_name},
                     {"summary_file", sum_name}});
  }
  for (int r = 0; r < o.replicates; ++r) {
    const std::string truth_name = "truth_rep" + std::to_string(r) + ".csv";
    const std::string mask_name = "zero_mask_rep" + std::to_string(r) + ".csv";
    write_matrix_csv(outdir / truth_name, truths[r].true_covariance);
    MatrixXd mask01 = truths[r].zero_mask.cast<double>();
    write_matrix_csv(outdir / mask_name, mask01);
    jjobs.push_back({{"replicate", r},
                     {"truth_file", truth_name},
                     {"zero_mask_file", mask_name},
                     {"achieved_zero_fraction", truths[r].achieved_zero_fraction}});
  }
  manifest["jobs"] = jjobs;
  manifest["metrics_file"] = "metrics.csv";
  write_json(outdir / "manifest.json", manifest);
  return 0;
}

// ---------------------------------------------------------------- fit

struct FitOptions {
  CliOptions base;
  std::string data_file;
  std::string resume_from;
};

int run_fit(FitOptions& o) {
  finalize_sampler(o.base);
  fs::create_directories(o.base.outdir);
  const fs::path outdir(o.base.outdir);
  SamplerConfig cfg = o.base.sampler;
  if (cfg.checkpoint_path.empty())
    cfg.checkpoint_path = (outdir / "checkpoint.rsbf").string();

  CsvTable table = read_matrix_csv(o.data_file);
  Dataset data{std::move(table.values)};

  std::ofstream diag(outdir / "diagnostics.log", std::ios::trunc);
  PosteriorSummary summary =
      o.resume_from.empty()
          ? run_chain(data, cfg, progress_logger(cfg, &diag))
          : resume_chain(data, cfg, o.resume_from, progress_logger(cfg, &diag));

  write_matrix_csv(outdir / "mean_covariance.csv", summary.mean_covariance);
  MatrixXd ktrace(summary.k_trace.size(), 2);
  for (std::size_t i = 0; i < summary.k_trace.size(); ++i) {
    ktrace(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i + 1);
    ktrace(static_cast<Eigen::Index>(i), 1) = summary.k_trace[i];
  }
  write_matrix_csv(outdir / "k_trace.csv", ktrace, {"iteration", "k"});
  write_json(outdir / "summary.json", summary_to_json(summary));

  json manifest;
  manifest["command"] = "fit";
  manifest["format_versions"] = {{"manifest", manifest_format_version},
                                 {"checkpoint", checkpoint_format_version}};
  manifest["sampler"] = sampler_to_json(cfg);
  manifest["data_file"] = o.data_file;
  manifest["n"] = data.n();
  manifest["p"] = data.p();
  manifest["outputs"] = {"mean_covariance.csv", "k_trace.csv", "summary.json",
                         "diagnostics.log"};
  manifest["checkpoint"] = cfg.checkpoint_path;
  if (!o.resume_from.empty()) manifest["resumed_from"] = o.resume_from;
  write_json(outdir / "manifest.json", manifest);
  return 0;
}

// ---------------------------------------------------------------- classify

struct ClassifyOptions {
  CliOptions base;
  std::string class0_file, class1_file, test_file, labels_file;
  double xi = 0.0;
  bool xi_inf = false;
};

int run_classify(ClassifyOptions& o) {
  finalize_sampler(o.base);
  fs::create_directories(o.base.outdir);
  const fs::path outdir(o.base.outdir);

  Dataset c0{read_matrix_csv(o.class0_file).values};
  Dataset c1{read_matrix_csv(o.class1_file).values};
  MatrixXd test = read_matrix_csv(o.test_file).values;
  if (c0.p() != c1.p() || test.cols() != c0.p())
    throw std::invalid_argument("class and test files disagree on dimension p");

  double xi = o.xi_inf ? std::numeric_limits<double>::infinity() : o.xi;
  ClassifierModel model = fit_classifier(c0, c1, o.base.sampler, xi);

  MatrixXd out(test.rows(), 2);
  std::vector<int> labels(test.rows());
  for (Eigen::Index i = 0; i < test.rows(); ++i) {
    double llr = log_likelihood_ratio(test.row(i).transpose(), model);
    labels[i] = llr > model.xi ? 1 : 0;
    out(i, 0) = llr;
    out(i, 1) = labels[i];
  }
  write_matrix_csv(outdir / "llr.csv", out, {"llr", "label"});

  ClassifierCheckpoint ck{model.mu0, model.mu1, model.omega0, model.omega1, model.nu,
                          model.xi};
  save_classifier_checkpoint((outdir / "classifier.rsbf").string(), ck);

  json manifest;
  manifest["command"] = "classify";
  manifest["format_versions"] = {{"manifest", manifest_format_version},
                                 {"checkpoint", checkpoint_format_version}};
  manifest["sampler"] = sampler_to_json(o.base.sampler);
  manifest["xi"] = model.xi;
  manifest["inputs"] = {o.class0_file, o.class1_file, o.test_file};
  manifest["outputs"] = {"llr.csv", "classifier.rsbf"};

  if (!o.labels_file.empty()) {
    MatrixXd lab = read_matrix_csv(o.labels_file).values;
    if (lab.rows() != test.rows() || lab.cols() != 1)
      throw std::invalid_argument("label file must hold one column matching the test rows");
    std::vector<int> truth(lab.rows());
    for (Eigen::Index i = 0; i < lab.rows(); ++i) truth[i] = lab(i, 0) != 0.0 ? 1 : 0;
    ClassificationRates rates = evaluate_predictions(labels, truth);
    write_json(outdir / "rates.json", json{{"accuracy", rates.accuracy},
                                           {"sensitivity", rates.sensitivity},
                                           {"specificity", rates.specificity}});
    manifest["outputs"].push_back("rates.json");
  } else {
    std::cerr << "warning: no test labels supplied, skipping evaluation\n";
  }
  write_json(outdir / "manifest.json", manifest);
  return 0;
}

// ---------------------------------------------------------------- metrics

struct MetricsOptions {
  std::string estimate_file, truth_file, mask_file, out_file;
  int replicate_id = 0;
  int k = 0;
  double nu0 = 0.0;
  double nu_model = 0.0;
  std::string likelihood = "t";
};

int run_metrics(MetricsOptions& o) {
  MatrixXd estimate = read_matrix_csv(o.estimate_file).values;
  MatrixXd truth = read_matrix_csv(o.truth_file).values;
  MetricReport m = evaluate_estimate(estimate, truth);
  std::string text = metrics_header() + "\n" +
                     metrics_row(o.replicate_id, static_cast<int>(truth.rows()), o.k,
                                 o.nu0, o.nu_model, o.likelihood, m, 0.0) +
                     "\n";
  if (!o.mask_file.empty()) {
    MatrixXd mask = read_matrix_csv(o.mask_file).values;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> zm =
        mask.array() != 0.0;
    auto pct = zero_entry_percentiles(estimate, zm);
    text += "zero_entry_p10,zero_entry_p90\n" + format_double(pct.first) + "," +
            format_double(pct.second) + "\n";
  }
  if (o.out_file.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(o.out_file, std::ios::trunc);
    out << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse heavy-tailed covariance estimation via an adaptive factor model"};
  app.require_subcommand(1);
  // last value wins everywhere so config-file expansion can precede user flags
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand(
      "simulate", "generate synthetic replicates and run the model comparison");
  sim_cmd->add_option("--p", sim.p, "observed dimension");
  sim_cmd->add_option("--k", sim.k0, "true factor count");
  sim_cmd->add_option("--n", sim.n, "observations per replicate");
  sim_cmd->add_option("--nu0", sim.nu0, "data-generating t degrees of freedom");
  sim_cmd->add_option("--replicates", sim.replicates, "number of replicates");
  sim_cmd->add_option("--target-zero-fraction", sim.target_zero_fraction,
                      "desired fraction of exact zeros off the diagonal");
  sim_cmd->add_option("--support-min", sim.support_min,
                      "row support size lower bound (0 = automatic)");
  sim_cmd->add_option("--support-max", sim.support_max,
                      "row support size upper bound (0 = automatic)");
  sim_cmd->add_flag("--no-compare", sim.no_compare,
                    "fit only the t likelihood, skip the normal comparison run");
  sim_cmd->add_option("--jobs", sim.jobs, "parallel (replicate, model) jobs");
  add_sampler_options(sim_cmd, sim.base);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit the model to a CSV dataset");
  fit_cmd->add_option("--data", fit.data_file, "n x p CSV, optional header")->required();
  fit_cmd->add_option("--resume", fit.resume_from, "resume from a chain checkpoint");
  fit_cmd->add_option("--checkpoint", fit.base.sampler.checkpoint_path,
                      "checkpoint file (default <outdir>/checkpoint.rsbf)");
  add_sampler_options(fit_cmd, fit.base);

  ClassifyOptions cls;
  auto* cls_cmd =
      app.add_subcommand("classify", "two-class t likelihood-ratio discriminant");
  cls.base.sampler.nu = 5.0;  // classification default degrees of freedom
  cls_cmd->add_option("--class0", cls.class0_file, "class 0 training CSV")->required();
  cls_cmd->add_option("--class1", cls.class1_file, "class 1 training CSV")->required();
  cls_cmd->add_option("--test", cls.test_file, "test CSV")->required();
  cls_cmd->add_option("--test-labels", cls.labels_file,
                      "single-column 0/1 CSV aligned with the test rows");
  cls_cmd->add_option("--xi", cls.xi, "decision threshold on the log likelihood ratio");
  cls_cmd->add_flag("--xi-inf", cls.xi_inf, "threshold +infinity: label everything 0");
  add_sampler_options(cls_cmd, cls.base);

  MetricsOptions met;
  auto* met_cmd = app.add_subcommand(
      "metrics", "recompute the metric report from a saved estimate and truth");
  met_cmd->add_option("--estimate", met.estimate_file, "estimated covariance CSV")
      ->required();
  met_cmd->add_option("--truth", met.truth_file, "true covariance CSV")->required();
  met_cmd->add_option("--zero-mask", met.mask_file,
                      "0/1 CSV marking true-zero entries, enables percentiles");
  met_cmd->add_option("--out", met.out_file, "write the report here instead of stdout");
  met_cmd->add_option("--replicate-id", met.replicate_id, "row metadata");
  met_cmd->add_option("--k", met.k, "row metadata: generator factor count");
  met_cmd->add_option("--nu0", met.nu0, "row metadata");
  met_cmd->add_option("--nu-model", met.nu_model, "row metadata");
  met_cmd->add_option("--likelihood", met.likelihood, "row metadata");

  try {
    std::vector<std::string> args = expand_config_args(argc, argv);
    std::reverse(args.begin(), args.end());  // the vector overload pops from the back
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (sim_cmd->parsed()) return run_simulate(sim);
    if (fit_cmd->parsed()) return run_fit(fit);
    if (cls_cmd->parsed()) return run_classify(cls);
    return run_metrics(met);
  } catch (const chain_error& e) {
    std::cerr << "error: " << e.what() << "\n"
              << "checkpoint: " << e.checkpoint_reference << "\n";
    return 1;
  } catch (const csv_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
