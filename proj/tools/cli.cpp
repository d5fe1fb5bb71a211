#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>

#include "sonarr/filter.hpp"
#include "sonarr/model_io.hpp"
#include "sonarr/pathstore.hpp"
#include "sonarr/scheduler.hpp"
#include "sonarr/summary.hpp"
#include "sonarr/synth.hpp"

namespace sonarr::cli {
namespace fs = std::filesystem;

namespace {

class CommandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Options shared by run and compare.
struct RunOptions {
  std::string model;
  Id start = 0;
  Id end = 0;
  std::string filter;
  std::vector<Id> omit_rules;
  std::vector<std::string> set_facts;
  std::string mode = "multi";
  std::optional<std::uint32_t> workers;
  std::uint32_t threshold = 10;
  std::uint32_t rule_limit = 10;
  std::optional<std::uint64_t> max_final_paths;
  std::string time_limit;
  std::string out_dir;
  bool execute_actions = false;
};

void add_model_options(CLI::App& cmd, RunOptions& o) {
  cmd.add_option("--model", o.model, "Model file (JSON)")->required();
  cmd.add_option("--start", o.start, "Start container ID")->required();
  cmd.add_option("--end", o.end, "End container ID")->required();
  cmd.add_option("--filter", o.filter, "Completion filter, e.g. \"F4:T and F5:T\"");
  cmd.add_option("--omit-rule", o.omit_rules, "Rule ID to leave out (repeatable)")->take_all();
  cmd.add_option("--set-fact", o.set_facts, "Fact override ID=true|false (repeatable)")->take_all();
  cmd.add_option("--workers", o.workers, "Worker count (multi mode)")->check(CLI::PositiveNumber);
  cmd.add_option("--redistribution-threshold", o.threshold, "Stack size that triggers a transfer")
      ->check(CLI::Range(2u, 1u << 30));
  cmd.add_option("--rule-limit", o.rule_limit, "Generic rules allowed per connection")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--max-final-paths", o.max_final_paths, "Stop after this many final paths");
  cmd.add_option("--time-limit", o.time_limit, "Stop after this long (1500ms, 30s, 5m, 2h)");
  cmd.add_option("--out", o.out_dir, "Output directory (default $SONARR_OUT, else sonarr-out)");
  cmd.add_flag("--execute-actions", o.execute_actions, "Run rule actions through the shell");
}

std::string default_out_dir(const std::string& given) {
  if (!given.empty()) return given;
  if (const char* env = std::getenv("SONARR_OUT"); env != nullptr && *env != '\0') return env;
  return "sonarr-out";
}

Network prepared_network(const RunOptions& o) {
  Network net = load_network_file(o.model);
  for (const auto& text : o.set_facts) {
    const auto ov = parse_fact_override(text);
    net = apply_fact_override(net, ov.fact, ov.value);
  }
  for (Id rule : o.omit_rules) net = omit_rule(net, rule);
  return net;
}

EngineConfig engine_config(const RunOptions& o) {
  EngineConfig config;
  config.worker_count = o.workers.value_or(default_worker_count());
  config.redistribution_threshold = o.threshold;
  config.traversal.start = o.start;
  config.traversal.end = o.end;
  config.traversal.generic_rule_limit = o.rule_limit;
  if (!o.filter.empty()) config.traversal.completion_filter = parse_filter(o.filter);
  config.traversal.stop_max_final_paths = o.max_final_paths;
  if (!o.time_limit.empty()) config.traversal.stop_wall_clock = parse_duration(o.time_limit);
  config.traversal.action_mode = o.execute_actions ? ActionMode::Execute : ActionMode::DryRun;
  return config;
}

std::string chain_text(const ChainExtreme& c) {
  if (c.count == 0) return "-";
  return std::to_string(c.length) + " (x" + std::to_string(c.count) + ")";
}

void print_summary(std::ostream& out, const RunSummary& s) {
  out << "final paths:      " << s.total_final_paths << "\n"
      << "connections:      " << s.total_connections << "\n"
      << "rules triggered:  " << s.total_rules_triggered << "\n"
      << "longest chain:    " << chain_text(s.longest_chain) << "\n"
      << "shortest chain:   " << chain_text(s.shortest_chain) << "\n"
      << "expansions:       " << s.expansions << "\n"
      << "workers:          " << s.worker_count << "\n"
      << "stop reason:      " << stop_reason_name(s.stop_reason) << "\n"
      << "traversal time:   " << s.elapsed.count() << " ms\n"
      << "sort/merge time:  " << s.sort_merge_elapsed.count() << " ms\n";
  if (s.actions_dispatched > 0) {
    out << "actions:          " << s.actions_dispatched << " (" << s.action_failures << " failed)\n";
  }
}

int cmd_run(const RunOptions& o, std::ostream& out, std::ostream& err) {
  if (o.mode != "single" && o.mode != "multi") throw CommandError("--mode must be single or multi");
  if (o.mode == "single" && o.workers) throw CommandError("--workers is not allowed with --mode single");
  const IndexedNetwork net(prepared_network(o));
  EngineConfig config = engine_config(o);
  config.progress = [&err](std::uint64_t n) { err << "... " << n << " final paths\n"; };
  const fs::path dir = default_out_dir(o.out_dir);
  const EngineResult result = o.mode == "single" ? single_threaded_to_files(net, config, dir)
                                                 : multi_threaded_search(net, config, dir);
  print_summary(out, result.summary);
  out << "output:           " << dir.string() << "\n";
  return 0;
}

int cmd_query(const std::string& dir_text, const std::string& key_text, std::size_t k,
              std::ostream& out) {
  const auto key = parse_sort_key(key_text);
  if (!key) throw CommandError("unknown sort key '" + key_text + "'");
  const fs::path dir = default_out_dir(dir_text);
  const bool built = !fs::exists(merged_file(dir, sort_key_title(*key)));
  const auto rows = query_sorted(dir, *key, k);
  out << "# sort: " << sort_key_title(*key) << (built ? " (built)" : " (cached)") << "\n";
  out << "rank\tpath_id\tconnections\tvalue\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << i + 1 << "\t" << rows[i].path.id << "\t" << rows[i].path.connections.size() << "\t";
    if (*key == SortKey::Id) {
      out << static_cast<std::int64_t>(rows[i].value);
    } else {
      out << std::setprecision(6) << rows[i].value;
    }
    out << "\n";
  }
  return 0;
}

struct GenOptions {
  std::string topology = "chain";
  int n = 2;
  int width = 1;
  int depth = 1;
  std::string rule_template = "no_link_retraversal";
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gen(const GenOptions& g, std::ostream& out) {
  SyntheticModel model;
  if (g.topology == "random") {
    model = random_network(g.seed);
  } else {
    SyntheticSpec spec;
    const auto topo = parse_topology(g.topology);
    if (!topo) throw CommandError("unknown topology '" + g.topology + "'");
    const auto tmpl = parse_rule_template(g.rule_template);
    if (!tmpl) throw CommandError("unknown rule template '" + g.rule_template + "'");
    spec.topology = *topo;
    spec.n = g.n;
    spec.width = g.width;
    spec.depth = g.depth;
    spec.rule_template = *tmpl;
    spec.seed = g.seed;
    model = generate(spec);
  }
  const std::string text = render_network(model.network);
  if (g.out.empty() || g.out == "-") {
    out << text;
  } else {
    std::ofstream file(g.out, std::ios::trunc);
    file << text;
    if (!file) throw CommandError("cannot write " + g.out);
    out << "wrote " << g.out << " (start " << model.start << ", end " << model.end << ")\n";
  }
  return 0;
}

int cmd_compare(const RunOptions& o, std::ostream& out) {
  const IndexedNetwork net(prepared_network(o));
  EngineConfig config = engine_config(o);
  // Timing comparison: the merge/sort stage stays off in both modes.
  config.sort_and_merge = false;
  const fs::path dir = default_out_dir(o.out_dir);

  EngineConfig single = config;
  single.worker_count = 1;
  const auto a = single_threaded_to_files(net, single, dir / "single");
  const auto b = multi_threaded_search(net, config, dir / "multi");
  const bool equal = canonical_path_set(read_all_paths(dir / "single")) ==
                     canonical_path_set(read_all_paths(dir / "multi"));
  out << "mode\tworkers\tfinal_paths\ttraversal_ms\n"
      << "single\t1\t" << a.summary.total_final_paths << "\t" << a.summary.elapsed.count() << "\n"
      << "multi\t" << b.summary.worker_count << "\t" << b.summary.total_final_paths << "\t"
      << b.summary.elapsed.count() << "\n";
  if (a.summary.elapsed.count() > 0) {
    out << "ratio (multi/single): " << std::setprecision(3)
        << static_cast<double>(b.summary.elapsed.count()) / static_cast<double>(a.summary.elapsed.count())
        << "\n";
  }
  const bool stopped_early =
      a.summary.stop_reason != StopReason::Exhausted || b.summary.stop_reason != StopReason::Exhausted;
  if (stopped_early) out << "note: a stop condition fired; path sets may legitimately differ\n";
  out << "verdict: " << (equal ? "PASS" : "FAIL") << "\n";
  return equal ? 0 : 1;
}

int cmd_validate(const std::string& model, std::ostream& out) {
  const Network net = parse_network(read_text_file(model));
  const auto violations = validate_network(net);
  if (violations.empty()) {
    out << "OK\n";
    return 0;
  }
  for (const auto& v : violations) out << v << "\n";
  return 1;
}

int cmd_export_dot(const std::string& model, const std::string& file, std::ostream& out) {
  const std::string dot = export_dot(load_network_file(model));
  if (file.empty() || file == "-") {
    out << dot;
    return 0;
  }
  std::ofstream f(file, std::ios::trunc);
  f << dot;
  if (!f) throw CommandError("cannot write " + file);
  return 0;
}

}  // namespace

std::chrono::milliseconds parse_duration(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && (std::isdigit(static_cast<unsigned char>(text[i])) || text[i] == '.')) ++i;
  if (i == 0) throw std::invalid_argument("bad duration '" + std::string(text) + "'");
  double value = 0.0;
  try {
    value = std::stod(std::string(text.substr(0, i)));
  } catch (const std::exception&) {
    throw std::invalid_argument("bad duration '" + std::string(text) + "'");
  }
  const std::string unit = lower(text.substr(i));
  double scale = 0.0;
  if (unit.empty() || unit == "s") {
    scale = 1000.0;
  } else if (unit == "ms") {
    scale = 1.0;
  } else if (unit == "m") {
    scale = 60'000.0;
  } else if (unit == "h") {
    scale = 3'600'000.0;
  } else {
    throw std::invalid_argument("bad duration unit '" + unit + "'");
  }
  return std::chrono::milliseconds(static_cast<std::int64_t>(value * scale));
}

FactOverride parse_fact_override(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw std::invalid_argument("fact override must be ID=true|false, got '" + std::string(text) + "'");
  }
  FactOverride ov;
  try {
    std::size_t used = 0;
    const std::string id(text.substr(0, eq));
    ov.fact = std::stoi(id, &used);
    if (used != id.size()) throw std::invalid_argument(id);
  } catch (const std::exception&) {
    throw std::invalid_argument("fact override ID must be an integer, got '" + std::string(text) + "'");
  }
  const std::string v = lower(text.substr(eq + 1));
  if (v == "true") {
    ov.value = true;
  } else if (v == "false") {
    ov.value = false;
  } else {
    throw std::invalid_argument("fact override value must be true or false, got '" + v + "'");
  }
  return ov;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attack-path enumeration over rule-fact network models", "sonarr"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Enumerate every path from start to end");
  add_model_options(*run_cmd, run);
  run_cmd->add_option("--mode", run.mode, "single or multi")->check(CLI::IsMember({"single", "multi"}));

  std::string query_dir;
  std::string query_key = "id";
  std::size_t query_k = 10;
  auto* query_cmd = app.add_subcommand("query", "Print the top paths of a finished run by a metric");
  query_cmd->add_option("--out", query_dir, "Run output directory (default $SONARR_OUT)");
  query_cmd->add_option("--sort", query_key,
                        "id, availability, confidentiality, integrity, total-run-time, "
                        "traversability-chance");
  query_cmd->add_option("--top,-k", query_k, "Number of rows");

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic model");
  gen_cmd->add_option("--topology", gen.topology, "chain, complete, layered or random");
  gen_cmd->add_option("--n", gen.n, "Containers (chain, complete)");
  gen_cmd->add_option("--width", gen.width, "Layer width (layered)");
  gen_cmd->add_option("--depth", gen.depth, "Layer count (layered)");
  gen_cmd->add_option("--template", gen.rule_template,
                      "pass_through, no_link_retraversal or node_simple");
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_option("--out", gen.out, "Model file to write (default stdout)");

  RunOptions cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "Run single and multi mode and compare path sets");
  add_model_options(*cmp_cmd, cmp);

  std::string validate_model;
  auto* validate_cmd = app.add_subcommand("validate", "Check a model for invariant violations");
  validate_cmd->add_option("--model", validate_model, "Model file")->required();

  std::string dot_model;
  std::string dot_out;
  auto* dot_cmd = app.add_subcommand("export-dot", "Render the model topology as Graphviz");
  dot_cmd->add_option("--model", dot_model, "Model file")->required();
  dot_cmd->add_option("--out", dot_out, "Output file (default stdout)");

  std::vector<std::string> argv_rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(argv_rest.begin(), argv_rest.end());
  try {
    app.parse(argv_rest);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (*run_cmd) return cmd_run(run, out, err);
    if (*query_cmd) return cmd_query(query_dir, query_key, query_k, out);
    if (*gen_cmd) return cmd_gen(gen, out);
    if (*cmp_cmd) return cmd_compare(cmp, out);
    if (*validate_cmd) return cmd_validate(validate_model, out);
    if (*dot_cmd) return cmd_export_dot(dot_model, dot_out, out);
  } catch (const ValidationError& e) {
    err << "error: model is invalid\n";
    for (const auto& v : e.violations()) err << "  " << v << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace sonarr::cli
