#include "qualinet/cli.hpp"

#include "qualinet/analysis.hpp"
#include "qualinet/api_server.hpp"
#include "qualinet/compiler.hpp"
#include "qualinet/quality_model.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

namespace qualinet {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot read '{}'", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
  auto log = std::make_shared<spdlog::logger>("qualinet", sink);
  log->set_pattern("%l: %v");
  log->set_level(spdlog::level::warn);
  if (const char* env = std::getenv("QUALINET_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to "off"; keep the default instead.
    if (level != spdlog::level::off || std::string_view(env) == "off") log->set_level(level);
  }
  return log;
}

struct Options {
  std::string model;
  std::string network;
  std::vector<std::string> scenarios;
  std::string output;
  std::string goal;
  std::string target;
  std::string state;
  std::string base;
  std::string static_dir;
  std::string host = "127.0.0.1";
  std::vector<std::string> candidates;
  std::vector<std::string> evidence;
  bool pretty = false;
  bool csv = false;
  int seed = 0;
  int port = 8080;
};

class Runner {
 public:
  Runner(const Options& opt, std::ostream& out, std::shared_ptr<spdlog::logger> log)
      : opt_(opt), out_(out), log_(std::move(log)) {}

  void validate() {
    const QualityModel m = load_model();
    const std::string summary = fmt::format("{} activities, {} facts, {} impacts, {} indicators", m.activities.size(),
                                            m.facts.size(), m.impacts.size(), m.indicators.size());
    if (opt_.pretty) return emit(summary + "\n");
    json goals = json::array();
    for (const auto& g : m.goals) goals.push_back(g.name);
    emit_json({{"name", m.name},
               {"activities", m.activities.size()},
               {"facts", m.facts.size()},
               {"impacts", m.impacts.size()},
               {"indicators", m.indicators.size()},
               {"goals", goals},
               {"summary", summary}});
  }

  void matrix() {
    const MatrixView v = export_matrix(load_model());
    if (opt_.pretty) return emit(v.to_text());
    json rows = json::array();
    for (const auto& r : v.rows) rows.push_back(r.str());
    json cells = json::array();
    for (const auto& row : v.cells) {
      json line = json::array();
      for (Cell c : row) line.push_back(c == Cell::Positive ? "+" : c == Cell::Negative ? "-" : "");
      cells.push_back(std::move(line));
    }
    emit_json({{"rows", rows}, {"columns", v.columns}, {"cells", cells}});
  }

  void compile() {
    const QualityModel m = load_model();
    const GoalSpec& goal = resolve_goal(m, opt_.goal);
    log_->info("compiling '{}' for goal '{}'", m.name, goal.name);
    const CompiledNetwork net = compile_model(m, goal.name);
    log_->info("{} nodes", net.size());
    emit(net.to_json());
  }

  void infer() {
    const CompiledNetwork net = load_network();
    Scenario s{"inline", {}};
    for (const auto& item : opt_.evidence) {
      const auto eq = item.find('=');
      if (eq == std::string::npos || eq == 0)
        throw InvalidEvidenceError(fmt::format("evidence '{}' is not of the form NODE=VALUE", item));
      s.evidence.insert_or_assign(item.substr(0, eq), parse_value(item.substr(eq + 1)));
    }
    report(net, s);
  }

  void scenario() {
    const CompiledNetwork net = load_network();
    report(net, load_scenario(opt_.scenarios.front()));
  }

  void compare() {
    const CompiledNetwork net = load_network();
    std::vector<Scenario> scenarios;
    for (const auto& path : opt_.scenarios) scenarios.push_back(load_scenario(path));
    const Comparison c = compare_scenarios(net, scenarios);
    if (opt_.csv) return emit(to_csv(c));
    if (opt_.pretty) return emit(to_text(c));
    emit_json(to_json(c));
  }

  void sensitivity() {
    const CompiledNetwork net = load_network();
    const Node& target = net.node(opt_.target);
    std::optional<int> state;
    if (!opt_.state.empty()) state = target_state(net, target);
    std::vector<std::string> candidates = opt_.candidates;
    if (candidates.empty())
      for (const auto& id : net.fact_indicators())
        if (id != target.id) candidates.push_back(id);
    const Evidence base = base_evidence(net);
    const std::vector<Swing> result = qualinet::sensitivity(net, target.id, candidates, base, state);
    if (opt_.pretty) {
      std::string text;
      for (const auto& s : result) text += fmt::format("{:<28} {:10.4f}  [{:.4f}, {:.4f}]\n", s.node, s.swing, s.low, s.high);
      return emit(text);
    }
    emit_json({{"target", target.id}, {"swings", to_json(std::span<const Swing>(result))}});
  }

  void explain() {
    const CompiledNetwork net = load_network();
    const Node& target = net.node(opt_.target);
    const Explanation e = explain_target(net, target.id, target_state(net, target), base_evidence(net));
    if (opt_.pretty) {
      std::string text = fmt::format("{} = {}  (joint probability {:.6g})\n", e.target, target.states[e.target_state],
                                     e.probability);
      for (const auto& [id, s] : e.assignment) text += fmt::format("  {} = {}\n", id, net.node(id).states[s]);
      return emit(text);
    }
    emit_json(to_json(net, e));
  }

  int serve() {
    ApiServer server(load_network(),
                     opt_.static_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(opt_.static_dir));
    log_->warn("serving '{}' on http://{}:{}", server.network().name(), opt_.host, opt_.port);
    if (!server.listen(opt_.host, opt_.port)) throw Error(fmt::format("cannot listen on {}:{}", opt_.host, opt_.port));
    return 0;
  }

 private:
  QualityModel load_model() const { return parse_model(read_file(opt_.model)); }

  CompiledNetwork load_network() const {
    log_->debug("loading network {}", opt_.network);
    return CompiledNetwork::from_json(read_file(opt_.network));
  }

  Scenario load_scenario(const std::string& path) const {
    json doc;
    try {
      doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
      throw InvalidEvidenceError(fmt::format("{}: malformed JSON: {}", path, e.what()));
    }
    Scenario s = scenario_from_json(doc);
    if (s.name.empty()) s.name = std::filesystem::path(path).stem().string();
    return s;
  }

  Evidence base_evidence(const CompiledNetwork& net) const {
    if (opt_.base.empty()) return {};
    ResolvedEvidence r = resolve_evidence(net, load_scenario(opt_.base));
    for (const auto& w : r.warnings) log_->warn("{}", w);
    return r.evidence;
  }

  /// A state label, or a raw value inside the target's intervals.
  int target_state(const CompiledNetwork& net, const Node& target) const {
    if (target.has_bounds()) {
      const EvidenceValue v = parse_value(opt_.state);
      if (const auto* x = std::get_if<double>(&v)) {
        const IntervalLookup hit = interval_of(target, *x);
        if (hit.clamped) log_->warn("value {} for '{}' clamped to {}", *x, target.id, target.states[hit.state]);
        return hit.state;
      }
    }
    return net.state_index(target.id, opt_.state);
  }

  static EvidenceValue parse_value(const std::string& text) {
    try {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used == text.size()) return v;
    } catch (const std::logic_error&) {
    }
    return text;
  }

  void report(const CompiledNetwork& net, const Scenario& s) {
    const ScenarioReport r = run_scenario(net, s);
    for (const auto& w : r.warnings) log_->warn("{}", w);
    if (opt_.pretty) return emit(to_text(r));
    emit_json(to_json(r));
  }

  void emit_json(const json& doc) { emit(doc.dump(2) + "\n"); }

  void emit(const std::string& text) {
    if (opt_.output.empty()) {
      out_ << text;
      return;
    }
    std::ofstream file(opt_.output, std::ios::binary);
    if (!(file << text)) throw Error(fmt::format("cannot write '{}'", opt_.output));
    log_->info("wrote {}", opt_.output);
  }

  const Options& opt_;
  std::ostream& out_;
  std::shared_ptr<spdlog::logger> log_;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto log = make_logger(err);
  Options opt;

  CLI::App app{"Compile activity-based quality models into Bayesian networks and query them.", "qualinet"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "qualinet 0.1.0");

  const auto common = [&](CLI::App* sub) {
    sub->add_option("-o,--output", opt.output, "Write the result to this file instead of stdout");
    sub->add_flag("--pretty", opt.pretty, "Human-readable output instead of JSON");
    sub->add_option("--seed", opt.seed, "Reserved; exact inference is deterministic");
  };
  const auto model_cmd = [&](std::string_view name, std::string_view help) {
    CLI::App* sub = app.add_subcommand(std::string(name), std::string(help));
    sub->add_option("model", opt.model, "Quality model source (.qm)")->required()->check(CLI::ExistingFile);
    common(sub);
    return sub;
  };
  const auto net_cmd = [&](std::string_view name, std::string_view help) {
    CLI::App* sub = app.add_subcommand(std::string(name), std::string(help));
    sub->add_option("network", opt.network, "Compiled network (.json)")->required()->check(CLI::ExistingFile);
    common(sub);
    return sub;
  };

  CLI::App* validate = model_cmd("validate", "Parse and check a quality model");
  validate->add_option("--goal", opt.goal, "Ignored by validate; accepted for symmetry with compile");
  CLI::App* matrix = model_cmd("matrix", "Print the fact x activity impact matrix");
  CLI::App* compile = model_cmd("compile", "Compile a quality model for one goal");
  compile->add_option("--goal", opt.goal, "Goal name, target activity or metric");

  CLI::App* infer = net_cmd("infer", "Posterior marginals under inline evidence");
  infer->add_option("-e,--evidence", opt.evidence, "NODE=VALUE (state label, or raw value on indicators)")
      ->check(CLI::Validator(
          [](const std::string& v) {
            const auto eq = v.find('=');
            return eq == 0 || eq == std::string::npos || eq + 1 == v.size() ? "expected NODE=VALUE" : "";
          },
          "NODE=VALUE"));
  CLI::App* scenario = net_cmd("scenario", "Run one scenario file");
  scenario->add_option("scenario", opt.scenarios, "Scenario (.json)")->required()->expected(1)->check(CLI::ExistingFile);
  CLI::App* compare = net_cmd("compare", "Compare scenarios against the first one");
  compare->add_option("scenarios", opt.scenarios, "Scenarios (.json), first is the reference")
      ->required()
      ->expected(2, -1)
      ->check(CLI::ExistingFile);
  compare->add_flag("--csv", opt.csv, "CSV table instead of JSON");

  CLI::App* sens = net_cmd("sensitivity", "One-way swings of candidate nodes on a target");
  sens->add_option("--target", opt.target, "Target node")->required();
  sens->add_option("--state", opt.state, "Target state for probability swings (ranked targets)");
  sens->add_option("--candidates", opt.candidates, "Candidate nodes (default: fact indicators)")->delimiter(',');
  sens->add_option("--scenario", opt.base, "Base evidence held fixed")->check(CLI::ExistingFile);

  CLI::App* explain = net_cmd("explain", "Most probable fact-indicator values for a desired target state");
  explain->add_option("--target", opt.target, "Target node")->required();
  explain->add_option("--state", opt.state, "Desired state label, or a value inside the target's intervals")->required();
  explain->add_option("--scenario", opt.base, "Base evidence held fixed")->check(CLI::ExistingFile);

  CLI::App* serve = net_cmd("serve", "Serve the network over HTTP");
  serve->add_option("--port", opt.port, "TCP port")->check(CLI::Range(1, 65535));
  serve->add_option("--host", opt.host, "Bind address");
  serve->add_option("--static", opt.static_dir, "Directory with the UI bundle")->check(CLI::ExistingDirectory);

  std::vector<std::string> storage{"qualinet"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  Runner run(opt, out, log);
  try {
    if (validate->parsed()) run.validate();
    else if (matrix->parsed()) run.matrix();
    else if (compile->parsed()) run.compile();
    else if (infer->parsed()) run.infer();
    else if (scenario->parsed()) run.scenario();
    else if (compare->parsed()) run.compare();
    else if (sens->parsed()) run.sensitivity();
    else if (explain->parsed()) run.explain();
    else if (serve->parsed()) return run.serve();
  } catch (const ModelError& e) {
    const std::string& path = opt.model;
    for (const auto& d : e.diagnostics()) err << path << ':' << d.str() << '\n';
    return 1;
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return 1;
  }
  return 0;
}

}  // namespace qualinet
