// voidp command-line tool. Exit codes: 0 ok, 2 validation, 3 infeasible,
// 4 I/O or schema.

#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "voidp/error.hpp"
#include "voidp/experiment.hpp"
#include "voidp/io.hpp"
#include "voidp/learn.hpp"
#include "voidp/multi_sensor.hpp"
#include "voidp/oracles.hpp"
#include "voidp/server.hpp"

using namespace voidp;

namespace {

struct Common {
  std::string model;
  std::string reward;
  std::string costs;
  std::optional<int> budget;
  std::string mode = "smoothing";
  std::string out;
};

void add_common(CLI::App& cmd, Common& c, bool with_mode = true) {
  cmd.add_option("--model", c.model, "voidp-model/1 file")->required();
  cmd.add_option("--reward", c.reward, "voidp-reward/1 file (default: residual entropy)");
  cmd.add_option("--costs", c.costs, "voidp-costs/1 file (default: unit costs, no penalties)");
  cmd.add_option("--budget", c.budget, "budget B (overrides the cost file)");
  if (with_mode) cmd.add_option("--mode", c.mode, "filtering|smoothing")->check(CLI::IsMember({"filtering", "smoothing"}));
  cmd.add_option("-o,--out", c.out, "output file (default: stdout)");
}

struct Loaded {
  ChainModel model;
  RewardSpec spec;
  CostModel costs;
  Mode mode = Mode::Smoothing;
};

Loaded load(const Common& c) {
  Loaded l;
  l.model = model_from_json(read_json(c.model));
  require_valid(l.model);
  const int n = l.model.size();
  l.spec = c.reward.empty() ? RewardSpec::uniform(ResidualEntropy{}, n) : reward_spec_from_json(read_json(c.reward), n);
  require_valid(l.spec, l.model);
  l.costs = c.costs.empty() ? CostModel::uniform(n, 0) : costs_from_json(read_json(c.costs), n);
  if (c.budget) l.costs.budget = *c.budget;
  require_valid(l.costs, l.model);
  l.mode = mode_from_string(c.mode);
  return l;
}

void emit(const std::string& path, const Json& doc) {
  if (path.empty() || path == "-") {
    std::cout << doc.dump(1) << '\n';
  } else {
    write_json(path, doc);
  }
}

std::vector<int> parse_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ValidationError("not an integer: '" + item + "'");
    }
  }
  return out;
}

int validate_file(const std::string& path, const std::string& model_path) {
  const Json doc = read_json(path);
  const std::string format = document_format(doc);
  ValidationReport report;
  std::optional<ChainModel> model;
  if (!model_path.empty()) model = model_from_json(read_json(model_path));
  if (format == kModelFormat) {
    report = validate_model(model_from_json(doc));
  } else if (format == kMultiFormat) {
    report = validate_multi(multi_from_json(doc));
  } else if (format == kHmmFormat) {
    report = validate_hmm(hmm_from_json(doc));
  } else if (format == kRewardFormat) {
    const auto spec = reward_spec_from_json(doc, model ? std::optional<int>(model->size()) : std::nullopt);
    if (model) report = validate_reward_spec(spec, *model);
  } else if (format == kCostsFormat) {
    const auto costs = costs_from_json(doc, model ? std::optional<int>(model->size()) : std::nullopt);
    if (model) report = validate_costs(costs, *model);
  } else if (format == kPlanFormat) {
    const auto plan = plan_from_json(doc);
    report = validate_model(plan.model());
    if (report.ok()) {
      for (auto& v : validate_reward_spec(plan.spec(), plan.model()).violations) report.violations.push_back(v);
      for (auto& v : validate_costs(plan.costs(), plan.model()).violations) report.violations.push_back(v);
    }
  } else if (format == kSubsetFormat) {
    subset_from_json(doc);
  } else if (format == kScheduleFormat) {
    schedule_from_json(doc);
  } else if (format == kEpisodeFormat) {
    episode_from_json(doc);
  } else if (format == kAssignmentFormat) {
    assignment_from_json(doc);
  } else {
    throw SchemaError("/format", "unknown format '" + format + "'");
  }
  if (report.ok()) {
    std::cout << path << ": ok (" << format << ")\n";
    return 0;
  }
  std::cout << path << ": invalid (" << format << ")\n";
  for (const auto& v : report.violations) std::cout << "  " << v << '\n';
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Value-of-information observation selection on chain models"};
  app.require_subcommand(1);
  int status = 0;

  // validate
  std::vector<std::string> validate_files;
  std::string validate_model_path;
  auto* validate = app.add_subcommand("validate", "check documents against their schema and invariants");
  validate->add_option("files", validate_files)->required();
  validate->add_option("--model", validate_model_path, "model to size and check reward/cost files against");

  // learn
  std::string csv;
  int synthetic_days = 0;
  std::uint64_t seed = 0;
  BinSpec bins;
  bool quantile = false;
  std::optional<double> origin, width;
  double alpha = 0.5;
  int tying_blocks = 0;
  std::string tying;
  std::string learn_out;
  auto* learn = app.add_subcommand("learn", "estimate a chain from time series");
  auto* csv_opt = learn->add_option("--csv", csv, "CSV, one sequence per row");
  auto* syn_opt = learn->add_option("--synthetic-days", synthetic_days, "use synthetic diurnal data instead");
  csv_opt->excludes(syn_opt);
  int synthetic_steps = 24;
  learn->add_option("--steps", synthetic_steps, "steps per synthetic sequence");
  learn->add_option("--seed", seed, "seed for synthetic data");
  learn->add_option("--bins", bins.count, "bin count")->check(CLI::Range(2, 1000));
  learn->add_flag("--quantile", quantile, "quantile bins instead of fixed width");
  learn->add_option("--origin", origin, "left edge of the first fixed-width bin");
  learn->add_option("--width", width, "fixed bin width");
  learn->add_option("--alpha", alpha, "pseudocount");
  learn->add_option("--tying-blocks", tying_blocks, "share transitions within this many contiguous blocks");
  learn->add_option("--tying", tying, "explicit bucket per transition, comma separated");
  learn->add_option("-o,--out", learn_out);

  // fold
  std::string hmm_path, emissions;
  std::string fold_out;
  auto* fold = app.add_subcommand("fold", "condition an HMM on an emission sequence");
  fold->add_option("--hmm", hmm_path, "voidp-hmm/1 file")->required();
  fold->add_option("--emissions", emissions, "comma-separated emission symbols")->required();
  fold->add_option("-o,--out", fold_out);

  // select / plan
  Common select_c, plan_c, oracle_c, experiment_c;
  auto* select = app.add_subcommand("select", "optimal observation subset");
  add_common(*select, select_c);
  auto* plan = app.add_subcommand("plan", "optimal conditional plan");
  add_common(*plan, plan_c);

  // exec
  std::string exec_plan, replay, exec_out;
  bool interactive = false;
  std::optional<std::uint64_t> exec_seed;
  auto* exec = app.add_subcommand("exec", "execute a plan");
  exec->add_option("--plan", exec_plan, "voidp-plan/1 file")->required();
  auto* inter = exec->add_flag("--interactive", interactive, "prompt for each observation");
  auto* rep = exec->add_option("--replay", replay, "voidp-assignment/1 file");
  auto* sd = exec->add_option("--seed", exec_seed, "sample the hidden assignment from the model");
  inter->excludes(rep)->excludes(sd);
  rep->excludes(sd);
  exec->add_option("-o,--out", exec_out);

  // schedule
  std::string multi_path, sched_costs, sched_out, init = "independent";
  std::optional<int> sched_budget;
  bool exact = false;
  int samples = 0;
  std::optional<std::uint64_t> sched_seed;
  ScheduleOptions sched_opts;
  auto* schedule = app.add_subcommand("schedule", "coordinate multiple sensors");
  schedule->add_option("--multi", multi_path, "voidp-multi/1 file")->required();
  schedule->add_option("--costs", sched_costs, "voidp-costs/1 file applied to every sensor");
  schedule->add_option("--budget", sched_budget, "per-sensor budget");
  auto* ex = schedule->add_flag("--exact", exact, "exact cross-sensor inference (default)");
  auto* sm = schedule->add_option("--samples", samples, "Monte-Carlo samples per expectation")->check(CLI::PositiveNumber);
  ex->excludes(sm);
  schedule->add_option("--seed", sched_seed, "seed for sampling and random init");
  schedule->add_option("--max-iters", sched_opts.max_iters);
  schedule->add_option("--tol", sched_opts.delta_tol);
  schedule->add_option("--init", init)->check(CLI::IsMember({"independent", "random"}));
  schedule->add_option("-o,--out", sched_out);

  // oracle
  std::string query = "subset", subset_text;
  auto* oracle = app.add_subcommand("oracle", "exhaustive reference values (small models)");
  add_common(*oracle, oracle_c);
  oracle->add_option("--query", query)->check(CLI::IsMember({"total", "subset", "plan"}));
  oracle->add_option("--set", subset_text, "observed indices for --query total, comma separated");

  // experiment
  std::string methods = "uniform,greedy,optimal_subset,optimal_plan";
  int k_min = 0;
  std::optional<int> k_max;
  auto* experiment = app.add_subcommand("experiment", "compare methods over observation counts (CSV)");
  add_common(*experiment, experiment_c);
  experiment->add_option("--methods", methods);
  experiment->add_option("--k-min", k_min);
  experiment->add_option("--k-max", k_max);

  // serve
  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "HTTP plan-execution sessions");
  serve->add_option("--host", host);
  serve->add_option("--port", port);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*validate) {
      for (const auto& f : validate_files) status = std::max(status, validate_file(f, validate_model_path));
    } else if (*learn) {
      SeriesDataset data;
      if (!csv.empty()) {
        data.sequences = read_series_csv(csv);
      } else if (synthetic_days > 0) {
        data.sequences = synthetic_diurnal(synthetic_days, synthetic_steps, seed);
      } else {
        throw ValidationError("learn needs --csv or --synthetic-days");
      }
      if (data.sequences.empty()) throw ValidationError("empty dataset");
      bins.mode = quantile ? BinMode::Quantile : BinMode::FixedWidth;
      bins.origin = origin;
      bins.width = width;
      data.bins = bins;
      const int steps = static_cast<int>(data.sequences.front().size());
      if (!tying.empty()) data.tying = parse_list(tying);
      if (tying_blocks > 0) data.tying = block_tying(steps, tying_blocks);
      emit(learn_out, to_json(learn_chain(data, alpha).model));
    } else if (*fold) {
      const auto hmm = hmm_from_json(read_json(hmm_path));
      const auto y = parse_list(emissions);
      emit(fold_out, to_json(fold_hmm(hmm, y)));
    } else if (*select) {
      const auto l = load(select_c);
      emit(select_c.out, to_json(select_subset(l.model, l.spec, l.costs, l.mode)));
    } else if (*plan) {
      const auto l = load(plan_c);
      emit(plan_c.out, to_json(build_plan(l.model, l.spec, l.costs, l.mode)));
    } else if (*exec) {
      const auto tables = plan_from_json(read_json(exec_plan));
      require_valid(tables.model());
      EpisodeRecord record;
      if (interactive) {
        InteractiveSource source(tables.model(), std::cin, std::cerr);
        record = execute_plan(tables, source);
      } else if (!replay.empty()) {
        std::map<Index, State> answers;
        for (const auto& o : assignment_from_json(read_json(replay))) answers[o.index] = o.state;
        RecordedSource source(std::move(answers));
        record = execute_plan(tables, source);
      } else {
        std::mt19937_64 rng(exec_seed.value_or(0));
        SamplerSource source(tables.model(), rng);
        record = execute_plan(tables, source);
      }
      emit(exec_out, to_json(record));
    } else if (*schedule) {
      auto model = multi_from_json(read_json(multi_path));
      require_valid(model);
      std::vector<CostModel> costs;
      for (const auto& s : model.sensors) {
        CostModel c = sched_costs.empty() ? CostModel::uniform(s.size(), 0) : costs_from_json(read_json(sched_costs), s.size());
        if (sched_budget) c.budget = *sched_budget;
        costs.push_back(std::move(c));
      }
      sched_opts.cross.samples = samples;
      sched_opts.cross.seed = sched_seed;
      sched_opts.init = init == "random" ? ScheduleInit::Random : ScheduleInit::Independent;
      sched_opts.init_seed = sched_seed.value_or(0);
      emit(sched_out, to_json(schedule_multi(model, costs, sched_opts)));
    } else if (*oracle) {
      const auto l = load(oracle_c);
      const auto joint = joint_from_chain(l.model);
      Json out{{"query", query}, {"mode", to_string(l.mode)}};
      if (query == "total") {
        const auto set = parse_list(subset_text);
        out["selected"] = set;
        out["value"] = oracle_total_reward(joint, l.spec, l.costs, set, l.mode);
      } else if (query == "subset") {
        const auto best = oracle_best_subset(joint, l.spec, l.costs, l.mode);
        out["selected"] = best.selected;
        out["value"] = best.value;
      } else {
        out["value"] = oracle_best_plan(joint, l.spec, l.costs, l.mode);
      }
      emit(oracle_c.out, out);
    } else if (*experiment) {
      const auto l = load(experiment_c);
      std::vector<Method> list;
      std::stringstream ss(methods);
      std::string item;
      while (std::getline(ss, item, ',')) list.push_back(method_from_string(item));
      const auto table = run_experiment(l.model, l.spec, l.costs, l.mode, list, k_min, k_max.value_or(l.model.size()));
      if (experiment_c.out.empty() || experiment_c.out == "-") {
        write_csv(std::cout, table);
      } else {
        std::ofstream f(experiment_c.out);
        if (!f) throw IoError("cannot write '" + experiment_c.out + "'");
        write_csv(f, table);
      }
    } else if (*serve) {
      SessionService service;
      httplib::Server server;
      mount_session_routes(server, service);
      std::cerr << "listening on " << host << ':' << port << '\n';
      if (!server.listen(host, port)) throw IoError("cannot listen on " + host + ":" + std::to_string(port));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return 3;
  }
  return status;
}
