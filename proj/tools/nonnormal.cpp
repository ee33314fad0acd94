// Command-line front end: memory, decode, train, sweep, analyze, export.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nonnormal/analysis.hpp"
#include "nonnormal/checkpoint.hpp"
#include "nonnormal/error.hpp"
#include "nonnormal/export.hpp"
#include "nonnormal/harness.hpp"
#include "nonnormal/init.hpp"
#include "nonnormal/memory.hpp"
#include "nonnormal/rng.hpp"

namespace fs = std::filesystem;
using namespace nonnormal;

namespace {

struct Common {
  std::string config;
  std::string data;
  std::string out = ".";
  int workers = 0;
  std::optional<std::uint64_t> seed;
  bool print_resolved = false;
};

struct MemoryArgs {
  int n = 100;
  int k_max = 200;
  double lambda = 0.99;
  double alpha = 1.02;
  double fb_alpha = kFeedbackChainForward;
  double beta = 0.05;
};

struct DecodeArgs {
  int n = 100;
  int t_len = 100;
  int trials = 250;
  std::vector<double> sigmas{0.0, 0.01, 0.1, 1.0};
  std::vector<std::string> nonlinearities{"elu", "tanh", "relu"};
  int seeds = 5;
};

struct TrainArgs {
  int run_index = 0;
  std::string run_id;
  std::string replay;
};

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw DataError("cannot write '" + path.string() + "'");
  return os;
}

Vector unit_gaussian(int n, std::uint64_t seed) {
  Rng rng(seed, Stream::kInputInit);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.gaussian();
  return v / v.norm();
}

struct MemoryNetwork {
  std::string name;
  Matrix w;
  Vector v;
};

std::vector<MemoryNetwork> memory_networks(const MemoryArgs& a, std::uint64_t seed) {
  Vector source = Vector::Zero(a.n);
  source(0) = 1.0;
  return {
      {"identity", a.lambda * Matrix::Identity(a.n, a.n), unit_gaussian(a.n, seed)},
      {"orthogonal", a.lambda * random_orthogonal(a.n, seed), unit_gaussian(a.n, seed)},
      {"chain", chain_matrix(a.n, a.alpha), source},
      {"feedback_chain", feedback_chain_matrix(a.n, a.fb_alpha, a.beta), source},
  };
}

void memory_figures(const MemoryArgs& a, std::uint64_t seed, std::vector<NamedCurve>* j_curves,
                    std::vector<NamedCurve>* amp_curves, bool report) {
  for (const auto& net : memory_networks(a, seed)) {
    if (j_curves) {
      const auto curve = fisher_memory_curve(net.w, net.v, a.k_max);
      j_curves->push_back({net.name, curve.j});
      if (report) std::printf("%-15s j_tot = %.6f\n", net.name.c_str(), total_fisher_memory(net.w, net.v));
    }
    if (amp_curves) amp_curves->push_back({net.name, amplification_curve(net.w, net.v, a.k_max)});
  }
}

std::vector<DecodingRow> decoding_rows(const DecodeArgs& a, std::uint64_t first_seed, bool report) {
  std::vector<DecodingRow> rows;
  auto add = [&](double sigma, Nonlinearity f) {
    double mean[2] = {0.0, 0.0};
    for (auto net : {DecodingNetwork::kOrthogonal, DecodingNetwork::kChain}) {
      for (int s = 0; s < a.seeds; ++s) {
        DecodingConfig c;
        c.network = net;
        c.n = a.n;
        c.t_len = a.t_len;
        c.trials = a.trials;
        c.noise_sigma = sigma;
        c.nonlinearity = f;
        c.seed = first_seed + static_cast<std::uint64_t>(s);
        const double r2 = decoding_r2(c);
        rows.push_back({net, sigma, f, c.seed, r2});
        mean[static_cast<int>(net)] += r2 / a.seeds;
      }
    }
    if (report) {
      std::printf("%-6s sigma=%-5g orthogonal r2=%.4f chain r2=%.4f\n", std::string(to_string(f)).c_str(), sigma,
                  mean[0], mean[1]);
    }
  };
  for (double sigma : a.sigmas) add(sigma, Nonlinearity::kLinear);
  for (const auto& name : a.nonlinearities) add(0.0, parse_nonlinearity(name));
  return rows;
}

ExperimentConfig load_config(const Common& c) {
  if (c.config.empty()) throw InvalidArgument("--config is required");
  auto cfg = load_experiment_config(c.config);
  if (!c.data.empty()) cfg.data_dir = c.data;
  if (c.out != ".") cfg.output_dir = c.out;
  if (c.workers > 0) cfg.workers = c.workers;
  if (c.seed) cfg.seeds = {*c.seed};
  return cfg;
}

fs::path records_path(const Common& c) {
  fs::path dir = c.out;
  if (!c.config.empty() && c.out == ".") dir = load_config(c).output_dir;
  return dir / "runs.jsonl";
}

void print_record(const RunRecord& r) {
  std::printf("%-45s final=%-10.5g min=%-10.5g baseline=%.5g%s%s (%.1fs)\n", r.config.run_id().c_str(),
              r.final_validation_loss(), r.min_validation_loss, r.baseline, r.success ? " success" : "",
              r.diverged ? " diverged" : "", r.wall_seconds);
}

int cmd_train(const Common& c, const TrainArgs& a) {
  const auto cfg = load_config(c);
  const auto runs = expand_grid(cfg);
  const RunConfig* run = nullptr;
  std::optional<RunRecord> reference;
  if (!a.replay.empty()) {
    for (auto& rec : read_records(a.replay)) {
      if (a.run_id.empty() || rec.config.run_id() == a.run_id) {
        reference = std::move(rec);
        break;
      }
    }
    if (!reference) throw InvalidArgument("no record '" + a.run_id + "' in " + a.replay);
    run = &reference->config;
  } else if (!a.run_id.empty()) {
    for (const auto& r : runs) {
      if (r.run_id() == a.run_id) run = &r;
    }
    if (!run) throw InvalidArgument("run '" + a.run_id + "' is not in the grid");
  } else {
    if (a.run_index < 0 || static_cast<std::size_t>(a.run_index) >= runs.size()) {
      throw InvalidArgument("--run-index out of range (grid has " + std::to_string(runs.size()) + " runs)");
    }
    run = &runs[static_cast<std::size_t>(a.run_index)];
  }
  if (c.print_resolved) {
    std::cout << nlohmann::json(*run).dump(2) << '\n';
    return 0;
  }
  TrainOptions opts;
  opts.on_eval = [](long step, double loss) { std::printf("step %ld validation %.6g\n", step, loss); };
  const auto rec = train_run(*run, opts);
  print_record(rec);
  if (reference) {
    const bool same = rec.eval_steps == reference->eval_steps &&
                      std::equal(rec.validation_losses.begin(), rec.validation_losses.end(),
                                 reference->validation_losses.begin(), reference->validation_losses.end(),
                                 [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); });
    std::printf("replay %s\n", same ? "identical" : "MISMATCH");
    return same ? 0 : 1;
  }
  fs::create_directories(cfg.output_dir);
  std::ofstream os(fs::path(cfg.output_dir) / "runs.jsonl", std::ios::app);
  os << nlohmann::json(rec).dump() << '\n';
  return 0;
}

int cmd_sweep(const Common& c) {
  const auto cfg = load_config(c);
  if (c.print_resolved) {
    std::cout << format_experiment_config(cfg);
    std::printf("# %zu runs\n", expand_grid(cfg).size());
    return 0;
  }
  const auto records = run_grid(cfg, [](std::size_t done, std::size_t total, const RunRecord& r) {
    std::printf("[%zu/%zu] ", done, total);
    print_record(r);
    std::fflush(stdout);
  });
  const fs::path dir = cfg.output_dir;
  auto summary = success_summary(records);
  auto os = open_out(dir / "success_bars.csv");
  write_success_csv(os, summary);
  auto losses = open_out(dir / "losses.csv");
  write_losses_csv(losses, records);
  for (const auto& s : summary) std::printf("%-15s %d / %d successful\n", std::string(to_string(s.init)).c_str(), s.successes, s.runs);
  return 0;
}

struct Analysis {
  std::vector<HenriciRow> henrici;
  std::vector<NamedProfile> profiles;
  BetaSweep beta;
};

struct ProfileArgs {
  std::string pulse = "input";
  bool abs_peaks = false;
  int steps = 100;
};

void add_profile_options(CLI::App* sub, ProfileArgs& p) {
  sub->add_option("--pulse", p.pulse, "Profile pulse: input (V·1, normalised) or source (e1)")
      ->check(CLI::IsMember({"input", "source"}));
  sub->add_flag("--abs-peaks", p.abs_peaks, "Rank units by the peak of |activity|");
  sub->add_option("--profile-steps", p.steps, "Free-running steps after the pulse");
}

Vector profile_pulse(const ProfileArgs& p, const RnnParams& params) {
  if (p.pulse == "input") return default_pulse(params);
  Vector e = Vector::Zero(params.hidden_size());
  e(0) = 1.0;
  return e;
}

Analysis analyze_records(const std::vector<RunRecord>& records, std::uint64_t jitter_seed, const ProfileArgs& pa) {
  Analysis out;
  const auto mode = pa.abs_peaks ? PeakMode::kAbsolute : PeakMode::kRaw;
  std::map<InitKind, std::vector<WeightProfile>> trained, initial;
  for (const auto& rec : records) {
    if (!rec.success || rec.checkpoint.empty() || !fs::exists(rec.checkpoint)) continue;
    const auto ckpt = load_checkpoint(rec.checkpoint);
    const auto init = initial_params(rec.config.init, rec.config.hidden, rec.config.input_size(), rec.config.output_size());
    out.henrici.push_back({rec.config.run_id(), rec.config.init.kind, henrici_index(init.w), henrici_index(ckpt.params.w)});
    trained[rec.config.init.kind].push_back(
        peak_order_profile(ckpt.params.w, ckpt.nonlinearity, profile_pulse(pa, ckpt.params), pa.steps, jitter_seed, mode));
    initial[rec.config.init.kind].push_back(
        peak_order_profile(init.w, rec.config.nonlinearity, profile_pulse(pa, init), pa.steps, jitter_seed, mode));
  }
  for (const auto& [kind, profiles] : trained) {
    out.profiles.push_back({std::string(to_string(kind)) + "/trained", average_profiles(profiles)});
    out.profiles.push_back({std::string(to_string(kind)) + "/initial", average_profiles(initial[kind])});
  }
  out.beta = beta_sweep(records);
  return out;
}

int cmd_analyze(const Common& c, const ProfileArgs& pa) {
  const auto path = records_path(c);
  const auto records = read_records(path);
  const auto a = analyze_records(records, c.seed.value_or(1), pa);
  const fs::path dir = path.parent_path();
  {
    auto os = open_out(dir / "henrici.csv");
    write_henrici_csv(os, a.henrici);
    auto ps = open_out(dir / "profiles.csv");
    write_profiles_csv(ps, a.profiles);
    auto bs = open_out(dir / "beta.csv");
    write_beta_csv(bs, a.beta);
  }
  std::map<InitKind, std::pair<double, int>> mean;
  for (const auto& h : a.henrici) {
    mean[h.init].first += h.trained;
    ++mean[h.init].second;
  }
  for (const auto& [kind, m] : mean) {
    std::printf("%-15s henrici %.4f over %d successful runs\n", std::string(to_string(kind)).c_str(),
                m.first / m.second, m.second);
  }
  if (!a.beta.notice.empty()) std::printf("beta sweep: %s\n", a.beta.notice.c_str());
  for (const auto& r : a.beta.rows) std::printf("beta %-6g loss %.4f ± %.4f (%d runs)\n", r.beta, r.mean_loss, r.sem, r.runs);
  std::printf("wrote henrici.csv, profiles.csv, beta.csv to %s\n", dir.string().c_str());
  return 0;
}

int cmd_export(const Common& c, const std::string& kind_name, const std::string& file, const MemoryArgs& mem,
               const DecodeArgs& dec, const ProfileArgs& pa) {
  const auto kind = parse_figure_kind(kind_name);
  const std::uint64_t seed = c.seed.value_or(1);
  const fs::path target = file.empty() ? fs::path(c.out) / (std::string(kind_name) + ".csv") : fs::path(file);
  std::vector<NamedCurve> curves;
  switch (kind) {
    case FigureKind::kMemoryCurves: {
      memory_figures(mem, seed, &curves, nullptr, false);
      auto os = open_out(target);
      write_curves_csv(os, curves);
      break;
    }
    case FigureKind::kAmplification: {
      memory_figures(mem, seed, nullptr, &curves, false);
      auto os = open_out(target);
      write_curves_csv(os, curves);
      break;
    }
    case FigureKind::kDecoding: {
      const auto rows = decoding_rows(dec, seed, false);
      auto os = open_out(target);
      write_decoding_csv(os, rows);
      break;
    }
    case FigureKind::kLosses: {
      const auto records = read_records(records_path(c));
      auto os = open_out(target);
      write_losses_csv(os, records);
      break;
    }
    case FigureKind::kSuccessBars: {
      const auto records = read_records(records_path(c));
      auto os = open_out(target);
      write_success_csv(os, success_summary(records));
      break;
    }
    case FigureKind::kProfiles: {
      const auto a = analyze_records(read_records(records_path(c)), seed, pa);
      auto os = open_out(target);
      write_profiles_csv(os, a.profiles);
      break;
    }
    case FigureKind::kBeta: {
      const auto records = read_records(records_path(c));
      auto os = open_out(target);
      write_beta_csv(os, beta_sweep(records));
      break;
    }
  }
  std::printf("wrote %s\n", target.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-normal recurrent network experiments"};
  app.require_subcommand(1);
  Common common;
  std::uint64_t seed = 1;
  auto* seed_opt = app.add_option("--seed", seed, "Seed override");
  app.add_option("--config", common.config, "Experiment config file");
  app.add_option("--data", common.data, "psMNIST IDX directory");
  app.add_option("--out", common.out, "Output directory");
  app.add_option("--workers", common.workers, "Concurrent runs");
  app.add_flag("--print-resolved", common.print_resolved, "Print the resolved configuration and exit");

  MemoryArgs mem;
  auto add_memory_options = [&](CLI::App* sub) {
    sub->add_option("--n", mem.n, "Network size");
    sub->add_option("--k-max", mem.k_max, "Largest lag");
    sub->add_option("--lambda", mem.lambda, "Identity/orthogonal scale");
    sub->add_option("--alpha", mem.alpha, "Chain weight");
    sub->add_option("--fb-alpha", mem.fb_alpha, "Feedback chain forward weight");
    sub->add_option("--beta", mem.beta, "Feedback chain backward weight");
  };
  DecodeArgs dec;
  auto add_decode_options = [&](CLI::App* sub) {
    sub->add_option("--n", dec.n, "Network size");
    sub->add_option("--t", dec.t_len, "Sequence length");
    sub->add_option("--trials", dec.trials, "Trials per regression");
    sub->add_option("--sigmas", dec.sigmas, "Noise levels for linear networks")->delimiter(',');
    sub->add_option("--nonlinearities", dec.nonlinearities, "Noise-free nonlinear runs")->delimiter(',');
    sub->add_option("--seeds", dec.seeds, "Seeds per condition");
  };

  auto* memory = app.add_subcommand("memory", "Fisher memory and amplification curves of four networks");
  add_memory_options(memory);
  auto* decode = app.add_subcommand("decode", "Linear decoding of the first input from the final state");
  add_decode_options(decode);
  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a single run of a config grid");
  train->add_option("--run-index", train_args.run_index, "Position in the expanded grid");
  train->add_option("--run-id", train_args.run_id, "Run identifier");
  train->add_option("--replay", train_args.replay, "Records file; retrain a record and compare losses");
  auto* sweep = app.add_subcommand("sweep", "Run a whole grid, resuming from existing records");
  auto* analyze = app.add_subcommand("analyze", "Henrici index, weight profiles and beta sweep of finished runs");
  ProfileArgs profile_args;
  add_profile_options(analyze, profile_args);
  std::string kind, file;
  auto* exp = app.add_subcommand("export", "Write one figure's CSV");
  exp->add_option("kind", kind, "memory_curves|amplification|decoding|losses|success_bars|profiles|beta")->required();
  exp->add_option("--file", file, "Output CSV (default <out>/<kind>.csv)");
  add_memory_options(exp);
  add_profile_options(exp, profile_args);
  exp->add_option("--sigmas", dec.sigmas, "Noise levels")->delimiter(',');
  exp->add_option("--seeds", dec.seeds, "Decoding seeds per condition");

  for (auto* sub : {memory, decode, train, sweep, analyze, exp}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);
  if (seed_opt->count() > 0) common.seed = seed;

  try {
    if (*memory) {
      std::vector<NamedCurve> j, amp;
      memory_figures(mem, common.seed.value_or(1), &j, &amp, true);
      auto js = open_out(fs::path(common.out) / "memory_curves.csv");
      write_curves_csv(js, j);
      auto as = open_out(fs::path(common.out) / "amplification.csv");
      write_curves_csv(as, amp);
      return 0;
    }
    if (*decode) {
      const auto rows = decoding_rows(dec, common.seed.value_or(1), true);
      auto os = open_out(fs::path(common.out) / "decoding.csv");
      write_decoding_csv(os, rows);
      return 0;
    }
    if (*train) return cmd_train(common, train_args);
    if (*sweep) return cmd_sweep(common);
    if (*analyze) return cmd_analyze(common, profile_args);
    if (*exp) return cmd_export(common, kind, file, mem, dec, profile_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
