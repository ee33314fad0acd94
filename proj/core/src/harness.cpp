#include "nonnormal/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <thread>

#include "nonnormal/checkpoint.hpp"
#include "nonnormal/error.hpp"

namespace nonnormal {

namespace {

// Shortest text that parses back to the same double.
std::string short_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general);
  return std::string(buf, res.ptr);
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(value);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used == s.size()) return x;
  } catch (const std::logic_error&) {
  }
  throw InvalidArgument("config: '" + key + "' expects a number, got '" + s + "'");
}

long to_long(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const long x = std::stol(s, &used);
    if (used == s.size()) return x;
  } catch (const std::logic_error&) {
  }
  throw InvalidArgument("config: '" + key + "' expects an integer, got '" + s + "'");
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw InvalidArgument("config: '" + key + "' expects true/false, got '" + s + "'");
}

// "1, 2, 5..8" -> {1, 2, 5, 6, 7, 8}
std::vector<std::uint64_t> to_seeds(const std::string& key, const std::string& value) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(value)) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(static_cast<std::uint64_t>(to_long(key, item)));
      continue;
    }
    const long lo = to_long(key, trim(item.substr(0, dots)));
    const long hi = to_long(key, trim(item.substr(dots + 2)));
    if (hi < lo) throw InvalidArgument("config: empty seed range '" + item + "'");
    for (long s = lo; s <= hi; ++s) out.push_back(static_cast<std::uint64_t>(s));
  }
  return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split_list(value)) out.push_back(to_double(key, item));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>) {
      out += short_double(xs[i]);
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out;
}

const std::vector<double>& parameters_for(const ExperimentConfig& cfg, InitKind kind) {
  switch (kind) {
    case InitKind::kIdentity:
    case InitKind::kOrthogonal: return cfg.lambdas;
    case InitKind::kChain: return cfg.alphas;
    case InitKind::kFeedbackChain: return cfg.betas;
  }
  return cfg.lambdas;
}

InitSpec make_spec(InitKind kind, double value, std::uint64_t seed) {
  InitSpec spec;
  spec.kind = kind;
  spec.seed = seed;
  switch (kind) {
    case InitKind::kIdentity:
    case InitKind::kOrthogonal: spec.lambda = value; break;
    case InitKind::kChain: spec.alpha = value; break;
    case InitKind::kFeedbackChain: spec.beta = value; break;
  }
  return spec;
}

}  // namespace

std::string RunConfig::run_id() const {
  return std::string(to_string(task)) + "-T" + std::to_string(t_len) + "-" + std::string(to_string(init.kind)) +
         "-p" + short_double(init.model_parameter()) + "-lr" + short_double(learning_rate) + "-s" +
         std::to_string(init.seed);
}

int RunConfig::input_size() const {
  switch (task) {
    case TaskKind::kCopy: return kCopyInputSymbols;
    case TaskKind::kAddition: return 2;
    case TaskKind::kPsMnist: return 1;
  }
  return 0;
}

int RunConfig::output_size() const {
  switch (task) {
    case TaskKind::kCopy: return kCopyOutputClasses;
    case TaskKind::kAddition: return 1;
    case TaskKind::kPsMnist: return kMnistClasses;
  }
  return 0;
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{{"task", to_string(c.task)},
                     {"t_len", c.t_len},
                     {"hidden", c.hidden},
                     {"nonlinearity", to_string(c.nonlinearity)},
                     {"init", to_string(c.init.kind)},
                     {"lambda", c.init.lambda},
                     {"alpha", c.init.alpha},
                     {"beta", c.init.beta},
                     {"seed", c.init.seed},
                     {"learning_rate", c.learning_rate},
                     {"batch_size", c.batch_size},
                     {"steps", c.steps},
                     {"eval_every", c.eval_every},
                     {"validation_size", c.validation_size},
                     {"test_size", c.test_size},
                     {"epochs", c.epochs},
                     {"train_subset", c.train_subset},
                     {"stop_at_success", c.stop_at_success},
                     {"rmsprop_decay", c.rmsprop_decay},
                     {"rmsprop_epsilon", c.rmsprop_epsilon},
                     {"data_dir", c.data_dir},
                     {"permutation_seed", c.permutation_seed}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  c.task = parse_task_kind(j.at("task").get<std::string>());
  c.t_len = j.at("t_len").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.nonlinearity = parse_nonlinearity(j.at("nonlinearity").get<std::string>());
  c.init.kind = parse_init_kind(j.at("init").get<std::string>());
  c.init.lambda = j.at("lambda").get<double>();
  c.init.alpha = j.at("alpha").get<double>();
  c.init.beta = j.at("beta").get<double>();
  c.init.seed = j.at("seed").get<std::uint64_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.steps = j.at("steps").get<long>();
  c.eval_every = j.at("eval_every").get<long>();
  c.validation_size = j.at("validation_size").get<int>();
  c.test_size = j.value("test_size", 0);
  c.epochs = j.at("epochs").get<int>();
  c.train_subset = j.value("train_subset", 0);
  c.stop_at_success = j.value("stop_at_success", false);
  c.rmsprop_decay = j.at("rmsprop_decay").get<double>();
  c.rmsprop_epsilon = j.at("rmsprop_epsilon").get<double>();
  c.data_dir = j.value("data_dir", std::string{});
  c.permutation_seed = j.value("permutation_seed", std::uint64_t{1});
}

double RunRecord::final_validation_loss() const {
  return validation_losses.empty() ? std::numeric_limits<double>::quiet_NaN() : validation_losses.back();
}

void to_json(nlohmann::json& j, const RunRecord& r) {
  j = nlohmann::json{{"run_id", r.config.run_id()},
                     {"config", r.config},
                     {"eval_steps", r.eval_steps},
                     {"validation_losses", r.validation_losses},
                     {"baseline", r.baseline},
                     {"min_validation_loss", r.min_validation_loss},
                     {"success", r.success},
                     {"diverged", r.diverged},
                     {"divergence_step", r.divergence_step},
                     {"wall_seconds", r.wall_seconds},
                     {"checkpoint", r.checkpoint}};
  if (r.test_loss) j["test_loss"] = *r.test_loss;
}

void from_json(const nlohmann::json& j, RunRecord& r) {
  r.config = j.at("config").get<RunConfig>();
  r.eval_steps = j.at("eval_steps").get<std::vector<long>>();
  // Non-finite losses serialise as null.
  r.validation_losses.clear();
  for (const auto& x : j.at("validation_losses")) {
    r.validation_losses.push_back(x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>());
  }
  r.baseline = j.at("baseline").get<double>();
  const auto& min_loss = j.at("min_validation_loss");
  r.min_validation_loss = min_loss.is_null() ? std::numeric_limits<double>::quiet_NaN() : min_loss.get<double>();
  r.success = j.at("success").get<bool>();
  r.diverged = j.at("diverged").get<bool>();
  r.divergence_step = j.at("divergence_step").get<long>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  r.checkpoint = j.value("checkpoint", std::string{});
  if (j.contains("test_loss") && !j["test_loss"].is_null()) r.test_loss = j["test_loss"].get<double>();
}

ExperimentConfig parse_experiment_config(std::istream& is) {
  ExperimentConfig cfg;
  bool has_task = false, has_hidden = false, has_nonlinearity = false, has_t_len = false;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw InvalidArgument("config: duplicate key '" + key + "'");

    if (key == "task") {
      cfg.task = parse_task_kind(value);
      has_task = true;
    } else if (key == "t_len") {
      cfg.t_len = static_cast<int>(to_long(key, value));
      has_t_len = true;
    } else if (key == "hidden") {
      cfg.hidden = static_cast<int>(to_long(key, value));
      has_hidden = true;
    } else if (key == "nonlinearity") {
      cfg.nonlinearity = parse_nonlinearity(value);
      has_nonlinearity = true;
    } else if (key == "init") {
      for (const auto& item : split_list(value)) cfg.inits.push_back(parse_init_kind(item));
    } else if (key == "lambda") {
      cfg.lambdas = to_doubles(key, value);
    } else if (key == "alpha") {
      cfg.alphas = to_doubles(key, value);
    } else if (key == "beta") {
      cfg.betas = to_doubles(key, value);
    } else if (key == "learning_rates") {
      cfg.learning_rates = to_doubles(key, value);
    } else if (key == "seeds") {
      cfg.seeds = to_seeds(key, value);
    } else if (key == "batch_size") {
      cfg.batch_size = static_cast<int>(to_long(key, value));
    } else if (key == "steps") {
      cfg.steps = to_long(key, value);
    } else if (key == "eval_every") {
      cfg.eval_every = to_long(key, value);
    } else if (key == "validation_size") {
      cfg.validation_size = static_cast<int>(to_long(key, value));
    } else if (key == "test_size") {
      cfg.test_size = static_cast<int>(to_long(key, value));
    } else if (key == "epochs") {
      cfg.epochs = static_cast<int>(to_long(key, value));
    } else if (key == "train_subset") {
      cfg.train_subset = static_cast<int>(to_long(key, value));
    } else if (key == "stop_at_success") {
      cfg.stop_at_success = to_bool(key, value);
    } else if (key == "rmsprop_decay") {
      cfg.rmsprop_decay = to_double(key, value);
    } else if (key == "rmsprop_epsilon") {
      cfg.rmsprop_epsilon = to_double(key, value);
    } else if (key == "data_dir") {
      cfg.data_dir = value;
    } else if (key == "permutation_seed") {
      cfg.permutation_seed = static_cast<std::uint64_t>(to_long(key, value));
    } else if (key == "output_dir") {
      cfg.output_dir = value;
    } else if (key == "workers") {
      cfg.workers = static_cast<int>(to_long(key, value));
    } else if (key == "save_checkpoints") {
      cfg.save_checkpoints = to_bool(key, value);
    } else {
      throw InvalidArgument("config: unknown key '" + key + "'");
    }
  }
  if (!has_task) throw InvalidArgument("config: 'task' is required");

  // Task defaults follow the benchmark descriptions: copy T=500, addition
  // T=750, elu except relu for addition, 25 units for psMNIST.
  if (!has_t_len) cfg.t_len = cfg.task == TaskKind::kCopy ? 500 : cfg.task == TaskKind::kAddition ? 750 : kMnistPixels;
  if (cfg.task == TaskKind::kPsMnist) cfg.t_len = kMnistPixels;
  if (!has_hidden) cfg.hidden = cfg.task == TaskKind::kPsMnist ? 25 : 100;
  if (!has_nonlinearity) cfg.nonlinearity = cfg.task == TaskKind::kAddition ? Nonlinearity::kRelu : Nonlinearity::kElu;

  if (cfg.hidden < 2) throw InvalidArgument("config: hidden must be >= 2");
  if (cfg.batch_size < 1) throw InvalidArgument("config: batch_size must be positive");
  if (cfg.steps < 0 || cfg.eval_every < 1) throw InvalidArgument("config: steps >= 0 and eval_every >= 1 required");
  if (cfg.validation_size < 1) throw InvalidArgument("config: validation_size must be positive");
  if (cfg.workers < 1) throw InvalidArgument("config: workers must be positive");
  if (cfg.rmsprop_decay < 0 || cfg.rmsprop_decay >= 1) throw InvalidArgument("config: rmsprop_decay must be in [0, 1)");
  for (double lr : cfg.learning_rates) {
    if (!(lr > 0)) throw InvalidArgument("config: learning rates must be positive");
  }
  for (InitKind kind : cfg.inits) {
    if (parameters_for(cfg, kind).empty()) {
      throw InvalidArgument("config: init '" + std::string(to_string(kind)) + "' has no " +
                            (kind == InitKind::kChain           ? "alpha"
                             : kind == InitKind::kFeedbackChain ? "beta"
                                                                : "lambda") +
                            " values");
    }
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("config: cannot open '" + path.string() + "'");
  return parse_experiment_config(is);
}

std::string format_experiment_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  std::vector<std::string> inits;
  for (auto k : cfg.inits) inits.emplace_back(to_string(k));
  std::string init_list;
  for (std::size_t i = 0; i < inits.size(); ++i) init_list += (i ? ", " : "") + inits[i];
  os << "task = " << to_string(cfg.task) << '\n'
     << "t_len = " << cfg.t_len << '\n'
     << "hidden = " << cfg.hidden << '\n'
     << "nonlinearity = " << to_string(cfg.nonlinearity) << '\n'
     << "init = " << init_list << '\n'
     << "lambda = " << join(cfg.lambdas) << '\n'
     << "alpha = " << join(cfg.alphas) << '\n'
     << "beta = " << join(cfg.betas) << '\n'
     << "learning_rates = " << join(cfg.learning_rates) << '\n'
     << "seeds = " << join(cfg.seeds) << '\n'
     << "batch_size = " << cfg.batch_size << '\n'
     << "steps = " << cfg.steps << '\n'
     << "eval_every = " << cfg.eval_every << '\n'
     << "validation_size = " << cfg.validation_size << '\n'
     << "test_size = " << cfg.test_size << '\n'
     << "epochs = " << cfg.epochs << '\n'
     << "train_subset = " << cfg.train_subset << '\n'
     << "stop_at_success = " << (cfg.stop_at_success ? "true" : "false") << '\n'
     << "rmsprop_decay = " << short_double(cfg.rmsprop_decay) << '\n'
     << "rmsprop_epsilon = " << short_double(cfg.rmsprop_epsilon) << '\n';
  if (!cfg.data_dir.empty()) os << "data_dir = " << cfg.data_dir << '\n';
  os << "permutation_seed = " << cfg.permutation_seed << '\n'
     << "output_dir = " << cfg.output_dir << '\n'
     << "workers = " << cfg.workers << '\n'
     << "save_checkpoints = " << (cfg.save_checkpoints ? "true" : "false") << '\n';
  return os.str();
}

std::vector<RunConfig> expand_grid(const ExperimentConfig& cfg) {
  std::vector<RunConfig> runs;
  for (InitKind kind : cfg.inits) {
    for (double value : parameters_for(cfg, kind)) {
      for (double lr : cfg.learning_rates) {
        for (std::uint64_t seed : cfg.seeds) {
          RunConfig run;
          run.task = cfg.task;
          run.t_len = cfg.t_len;
          run.hidden = cfg.hidden;
          run.nonlinearity = cfg.nonlinearity;
          run.init = make_spec(kind, value, seed);
          run.learning_rate = lr;
          run.batch_size = cfg.batch_size;
          run.steps = cfg.steps;
          run.eval_every = cfg.eval_every;
          run.validation_size = cfg.validation_size;
          run.test_size = cfg.test_size;
          run.epochs = cfg.epochs;
          run.train_subset = cfg.train_subset;
          run.stop_at_success = cfg.stop_at_success;
          run.rmsprop_decay = cfg.rmsprop_decay;
          run.rmsprop_epsilon = cfg.rmsprop_epsilon;
          run.data_dir = cfg.data_dir;
          run.permutation_seed = cfg.permutation_seed;
          runs.push_back(std::move(run));
        }
      }
    }
  }
  return runs;
}

namespace {

using Clock = std::chrono::steady_clock;

void validate(const RunConfig& cfg) {
  if (cfg.hidden < 2) throw InvalidArgument("train_run: hidden must be >= 2");
  if (cfg.batch_size < 1) throw InvalidArgument("train_run: batch_size must be positive");
  if (cfg.eval_every < 1) throw InvalidArgument("train_run: eval_every must be positive");
  if (cfg.validation_size < 1) throw InvalidArgument("train_run: validation_size must be positive");
  if (!(cfg.learning_rate > 0)) throw InvalidArgument("train_run: learning_rate must be positive");
}

TaskBatch generate(const RunConfig& cfg, int batch, Rng& rng) {
  return cfg.task == TaskKind::kCopy ? gen_copy(cfg.t_len, batch, rng) : gen_addition(cfg.t_len, batch, rng);
}

std::vector<int> first_indices(int count) {
  std::vector<int> idx(static_cast<std::size_t>(count));
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

RunRecord train_run(const RunConfig& cfg, const TrainOptions& options) {
  validate(cfg);
  const auto start = Clock::now();
  RunRecord rec;
  rec.config = cfg;
  rec.baseline = baseline_loss(cfg.task, cfg.t_len);
  const double criterion = 0.5 * rec.baseline;

  RnnParams params = initial_params(cfg.init, cfg.hidden, cfg.input_size(), cfg.output_size());
  RmspropState state =
      RmspropState::for_params(params, {cfg.learning_rate, cfg.rmsprop_decay, cfg.rmsprop_epsilon});
  long step = 0;

  // Returns true when training should stop.
  auto evaluate = [&](const TaskBatch& validation) {
    double loss;
    try {
      loss = evaluate_loss(params, cfg.nonlinearity, validation.inputs, validation.targets, validation.mask,
                           validation.loss)
                 .loss;
    } catch (const DivergenceError&) {
      loss = std::numeric_limits<double>::quiet_NaN();
    }
    rec.eval_steps.push_back(step);
    rec.validation_losses.push_back(loss);
    if (options.on_eval) options.on_eval(step, loss);
    if (!std::isfinite(loss)) {
      rec.diverged = true;
      rec.divergence_step = step;
      return true;
    }
    return cfg.stop_at_success && loss < criterion;
  };

  auto train_on = [&](const TaskBatch& batch) {
    ++step;
    const auto lg = bptt(params, cfg.nonlinearity, batch.inputs, batch.targets, batch.mask, batch.loss);
    rmsprop_step(state, params, lg.grads);
  };

  try {
    if (cfg.task != TaskKind::kPsMnist) {
      Rng train_rng(cfg.init.seed, Stream::kTrainData);
      Rng validation_rng(cfg.init.seed, Stream::kValidationData);
      const TaskBatch validation = generate(cfg, cfg.validation_size, validation_rng);
      while (step < cfg.steps) {
        train_on(generate(cfg, cfg.batch_size, train_rng));
        if (step % cfg.eval_every == 0 || step == cfg.steps) {
          if (evaluate(validation)) break;
        }
      }
    } else {
      std::optional<PsMnist> owned;
      const PsMnist* data = options.mnist;
      if (!data) {
        PsMnistOptions mo;
        mo.permutation_seed = cfg.permutation_seed;
        owned = load_psmnist(cfg.data_dir, mo);
        data = &*owned;
      }
      const int val_count = std::min(cfg.validation_size, data->validation.size());
      const auto val_idx = first_indices(val_count);
      const TaskBatch validation = data->batch(data->validation, val_idx);
      const int train_count =
          cfg.train_subset > 0 ? std::min(cfg.train_subset, data->train.size()) : data->train.size();
      auto order = first_indices(train_count);
      Rng train_rng(cfg.init.seed, Stream::kTrainData);
      bool stop = false;
      for (int epoch = 0; epoch < cfg.epochs && !stop; ++epoch) {
        for (int i = train_count - 1; i > 0; --i) {
          std::swap(order[static_cast<std::size_t>(i)],
                    order[static_cast<std::size_t>(train_rng.below(static_cast<std::uint64_t>(i) + 1))]);
        }
        for (int i = 0; i + cfg.batch_size <= train_count; i += cfg.batch_size) {
          train_on(data->batch(data->train, std::span<const int>(order).subspan(static_cast<std::size_t>(i),
                                                                               static_cast<std::size_t>(cfg.batch_size))));
        }
        stop = evaluate(validation);
      }
      if (!rec.diverged && cfg.test_size > 0) {
        const auto test_idx = first_indices(std::min(cfg.test_size, data->test.size()));
        const TaskBatch test = data->batch(data->test, test_idx);
        rec.test_loss = evaluate_loss(params, cfg.nonlinearity, test.inputs, test.targets, test.mask, test.loss).loss;
      }
    }
  } catch (const DivergenceError&) {
    rec.diverged = true;
    rec.divergence_step = step;
  }

  rec.min_validation_loss = std::numeric_limits<double>::quiet_NaN();
  for (double loss : rec.validation_losses) {
    if (std::isfinite(loss) && !(loss >= rec.min_validation_loss)) rec.min_validation_loss = loss;
  }
  rec.success = std::isfinite(rec.min_validation_loss) && rec.min_validation_loss < criterion;

  if (options.checkpoint_path && params.all_finite()) {
    save_checkpoint(*options.checkpoint_path, Checkpoint{params, cfg.init, cfg.nonlinearity});
    rec.checkpoint = options.checkpoint_path->string();
  }
  rec.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return rec;
}

std::vector<RunRecord> read_records(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("records: cannot open '" + path.string() + "'");
  std::vector<RunRecord> out;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> lines;
  while (std::getline(is, line)) lines.push_back(line);
  for (const auto& text : lines) {
    ++lineno;
    if (trim(text).empty()) continue;
    try {
      auto rec = nlohmann::json::parse(text).get<RunRecord>();
      if (!rec.checkpoint.empty() && std::filesystem::path(rec.checkpoint).is_relative()) {
        rec.checkpoint = (path.parent_path() / rec.checkpoint).string();
      }
      out.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      // An interrupted writer can leave a partial last line behind.
      if (lineno == lines.size()) break;
      throw DataError("records: '" + path.string() + "' line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<RunRecord> run_grid(const ExperimentConfig& cfg, const ProgressCallback& progress) {
  const auto runs = expand_grid(cfg);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (!index.emplace(runs[i].run_id(), i).second) {
      throw InvalidArgument("run_grid: grid contains duplicate run '" + runs[i].run_id() + "'");
    }
  }

  const std::filesystem::path out_dir(cfg.output_dir);
  std::filesystem::create_directories(out_dir);
  const auto ckpt_dir = out_dir / "checkpoints";
  if (cfg.save_checkpoints) std::filesystem::create_directories(ckpt_dir);
  const auto records_path = out_dir / "runs.jsonl";

  std::vector<std::optional<RunRecord>> results(runs.size());
  if (std::filesystem::exists(records_path)) {
    for (auto& rec : read_records(records_path)) {
      const auto it = index.find(rec.config.run_id());
      if (it != index.end()) results[it->second] = std::move(rec);
    }
  }
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (!results[i]) pending.push_back(i);
  }

  std::optional<PsMnist> mnist;
  if (cfg.task == TaskKind::kPsMnist && !pending.empty()) {
    if (cfg.data_dir.empty()) throw InvalidArgument("run_grid: psmnist needs data_dir");
    PsMnistOptions mo;
    mo.permutation_seed = cfg.permutation_seed;
    mnist = load_psmnist(cfg.data_dir, mo);
  }

  std::ofstream out(records_path, std::ios::app);
  if (!out) throw DataError("run_grid: cannot append to '" + records_path.string() + "'");
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::size_t done = runs.size() - pending.size();
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= pending.size()) return;
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      const std::size_t i = pending[k];
      try {
        TrainOptions opts;
        opts.mnist = mnist ? &*mnist : nullptr;
        if (cfg.save_checkpoints) opts.checkpoint_path = ckpt_dir / (runs[i].run_id() + ".ckpt");
        RunRecord rec = train_run(runs[i], opts);
        // Stored relative to the output directory so the directory can be moved.
        nlohmann::json line = rec;
        if (!rec.checkpoint.empty()) line["checkpoint"] = "checkpoints/" + runs[i].run_id() + ".ckpt";
        std::lock_guard lock(mu);
        out << line.dump() << '\n';
        out.flush();
        ++done;
        if (progress) progress(done, runs.size(), rec);
        results[i] = std::move(rec);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), pending.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<RunRecord> records;
  records.reserve(runs.size());
  for (auto& r : results) records.push_back(std::move(*r));
  return records;
}

std::vector<SuccessCount> success_summary(const std::vector<RunRecord>& records) {
  std::vector<SuccessCount> out;
  for (const auto& rec : records) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const SuccessCount& s) { return s.init == rec.config.init.kind; });
    if (it == out.end()) {
      out.push_back({rec.config.init.kind, 0, 0});
      it = out.end() - 1;
    }
    ++it->runs;
    if (rec.success) ++it->successes;
  }
  return out;
}

BetaSweep beta_sweep(const std::vector<RunRecord>& records) {
  std::map<double, std::vector<double>> by_beta;
  for (const auto& rec : records) {
    if (rec.config.init.kind != InitKind::kFeedbackChain) continue;
    const double final_loss = rec.final_validation_loss();
    if (std::isfinite(final_loss) && final_loss < rec.baseline) by_beta[rec.config.init.beta].push_back(final_loss);
  }
  BetaSweep sweep;
  for (const auto& [beta, losses] : by_beta) {
    BetaRow row;
    row.beta = beta;
    row.runs = static_cast<int>(losses.size());
    row.mean_loss = std::accumulate(losses.begin(), losses.end(), 0.0) / row.runs;
    if (row.runs > 1) {
      double ss = 0.0;
      for (double x : losses) ss += (x - row.mean_loss) * (x - row.mean_loss);
      row.sem = std::sqrt(ss / (row.runs - 1) / row.runs);
    }
    sweep.rows.push_back(row);
  }
  if (sweep.rows.empty()) sweep.notice = "no feedback_chain run finished below the random baseline";
  return sweep;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("spearman: need two equal-length samples");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace nonnormal
