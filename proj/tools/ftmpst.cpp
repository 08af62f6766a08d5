#include "ftmpst/consensus.hpp"
#include "ftmpst/parse.hpp"
#include "ftmpst/print.hpp"
#include "ftmpst/projection.hpp"
#include "ftmpst/syntax.hpp"
#include "ftmpst/verifier.hpp"
#include "ftmpst/wellformed.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

using namespace ftmpst;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kOk = 0, kFailed = 1, kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_input(const std::string& path) {
  if (path == "-") return {std::istreambuf_iterator<char>(std::cin), {}};
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

template <class F>
auto parsed(const std::string& path, F&& parse) {
  try {
    return parse(read_input(path));
  } catch (const SyntaxError& e) {
    throw UsageError(path + ":" + std::to_string(e.line) + ":" + std::to_string(e.column) + ": " + e.what());
  }
}

struct Options {
  bool json = false;
  std::string oracle = "cond1";
  std::optional<std::uint64_t> seed;
  std::optional<int> crash_budget;
  std::uint64_t gst = 200;
  std::size_t steps = 2000;
  std::size_t seeds = 1;
  unsigned threads = 1;
  std::vector<std::string> inputs;
  std::string trace_out;
  std::optional<Role> role;
  int n = 3;
  std::string beliefs;
  std::string kind;
};

std::uint64_t base_seed(const Options& o) {
  if (o.seed) return *o.seed;
  if (const char* env = std::getenv("FTMPST_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError(std::string("FTMPST_SEED is not a number: ") + env);
    }
  }
  return 0;
}

OracleFactory oracle_factory(const Options& o, int default_budget = 1) {
  int budget = o.crash_budget.value_or(default_budget);
  if (o.oracle == "reliable") return [](std::uint64_t) { return reliable_oracle(); };
  if (o.oracle == "chaos") return [](std::uint64_t s) { return chaotic_oracle(s); };
  if (o.oracle == "cond1")
    return [budget](std::uint64_t s) {
      Cond1Params p;
      p.seed = s;
      p.crash_budget = budget;
      return condition1_oracle(p);
    };
  if (o.oracle == "diamond-s")
    return [budget, gst = o.gst](std::uint64_t s) {
      DiamondSParams p;
      p.seed = s;
      p.crash_budget = budget;
      p.gst = gst;
      return diamond_s_oracle(p);
    };
  throw UsageError("unknown oracle " + o.oracle);
}

// Shared channels in order of first use.
std::vector<std::string> shared_channels(const Process& p) {
  std::vector<std::string> out;
  std::function<void(const Process&)> walk = [&](const Process& q) {
    if ((q->kind == PKind::Req || q->kind == PKind::Acc) &&
        std::find(out.begin(), out.end(), q->shared) == out.end())
      out.push_back(q->shared);
    if (q->cont) walk(q->cont);
    if (q->alt) walk(q->alt);
    for (auto& [l, b] : q->branches) walk(b);
  };
  walk(p);
  return out;
}

struct Program {
  Process process;
  GlobalEnv gamma;
  std::vector<std::pair<std::string, std::string>> globals;  // (name or empty, path)
};

// `name=file.gt` binds explicitly; a bare `.gt` takes the next unbound shared channel.
Program load_program(const std::vector<std::string>& inputs) {
  Program prog;
  std::optional<std::string> proc_path;
  for (auto& in : inputs) {
    auto eq = in.find('=');
    if (ends_with(in, ".gt")) {
      if (eq != std::string::npos) prog.globals.emplace_back(in.substr(0, eq), in.substr(eq + 1));
      else prog.globals.emplace_back("", in);
    } else {
      if (proc_path) throw UsageError("more than one process given");
      proc_path = in;
    }
  }
  if (!proc_path) throw UsageError("no process (.proc) given");
  prog.process = parsed(*proc_path, [](const std::string& t) { return parse_process(t); });
  auto channels = shared_channels(prog.process);
  std::set<std::string> bound;
  for (auto& [name, path] : prog.globals)
    if (!name.empty()) bound.insert(name);
  auto next = channels.begin();
  for (auto& [name, path] : prog.globals) {
    if (name.empty()) {
      while (next != channels.end() && bound.count(*next)) ++next;
      if (next == channels.end()) throw UsageError("no shared channel left for " + path);
      name = *next++;
      bound.insert(name);
    }
    Global g = parsed(path, [](const std::string& t) { return parse_global(t); });
    prog.gamma.add_shared(name, g);
  }
  return prog;
}

ojson rejection_json(const TypeRejection& r) {
  return {{"rule", r.rule}, {"path", r.path}, {"expected", r.expected}, {"found", r.found},
          {"message", r.message}, {"subject", r.subject}};
}

ojson verdict_json(const Verdict& v) {
  ojson j{{"property", v.property}, {"status", to_string(v.status)}};
  j["step"] = v.step ? ojson(*v.step) : ojson(nullptr);
  j["message"] = v.message;
  j["witness_length"] = v.witness.size();
  return j;
}

ojson coverage_json(const std::map<Rule, std::size_t>& cov) {
  ojson j = ojson::object();
  for (Rule r : all_rules()) j[to_string(r)] = cov.count(r) ? cov.at(r) : 0;
  return j;
}

void emit(const Options& o, const ojson& j, const std::string& text) {
  if (o.json) std::cout << j.dump(2) << "\n";
  else std::cout << text;
}

// ---------------------------------------------------------------- subcommands

int cmd_parse(const Options& o) {
  ojson items = ojson::array();
  std::string text;
  for (auto& path : o.inputs) {
    std::string kind = o.kind;
    if (kind.empty()) kind = ends_with(path, ".gt") ? "global" : ends_with(path, ".lt") ? "local" : "process";
    std::string canon;
    if (kind == "global") canon = to_string(parsed(path, [](const std::string& t) { return parse_global(t); }));
    else if (kind == "local") canon = to_string(parsed(path, [](const std::string& t) { return parse_local(t); }));
    else if (kind == "process") canon = to_string(parsed(path, [](const std::string& t) { return parse_process(t); }));
    else throw UsageError("unknown kind " + kind);
    items.push_back({{"input", path}, {"kind", kind}, {"text", canon}});
    text += canon + "\n";
  }
  emit(o, {{"command", "parse"}, {"ok", true}, {"items", items}}, text);
  return kOk;
}

int cmd_project(const Options& o) {
  if (o.inputs.size() != 1) throw UsageError("project expects one global type");
  Global g = parsed(o.inputs[0], [](const std::string& t) { return parse_global(t); });
  ojson j{{"command", "project"}};
  std::string text;
  WfReport wf = check_global_wf(g);
  if (!wf.ok) {
    j["ok"] = false;
    j["projections"] = ojson::object();
    j["error"] = {{"role", nullptr}, {"cause", "ill-formed"}, {"path", wf.violations.front().path},
                  {"message", to_string(wf)}};
    emit(o, j, "ill-formed: " + to_string(wf) + "\n");
    return kFailed;
  }
  try {
    std::map<Role, Local> locals;
    if (o.role) locals[*o.role] = project(g, *o.role);
    else locals = project_all(g);
    ojson ps = ojson::object();
    for (auto& [r, l] : locals) {
      ps[std::to_string(r)] = to_string(l);
      text += std::to_string(r) + ": " + to_string(l) + "\n";
    }
    j["ok"] = true;
    j["projections"] = ps;
    j["error"] = nullptr;
    emit(o, j, text);
    return kOk;
  } catch (const NotProjectable& e) {
    j["ok"] = false;
    j["projections"] = ojson::object();
    j["error"] = {{"role", e.role}, {"cause", e.cause}, {"path", e.path}, {"message", e.what()}};
    emit(o, j, std::string("not projectable: ") + e.what() + "\n");
    return kFailed;
  }
}

int cmd_check(const Options& o) {
  bool has_proc = std::any_of(o.inputs.begin(), o.inputs.end(), [](const std::string& s) { return !ends_with(s, ".gt"); });
  if (!has_proc) {
    // Global types alone: well-formedness and projectability.
    ojson items = ojson::array();
    std::string text;
    bool all = true;
    for (auto& path : o.inputs) {
      Global g = parsed(path, [](const std::string& t) { return parse_global(t); });
      WfReport wf = check_global_wf(g);
      std::string problem;
      if (!wf.ok) {
        problem = to_string(wf);
      } else {
        try {
          project_all(g);
        } catch (const NotProjectable& e) {
          problem = e.what();
        }
      }
      all &= problem.empty();
      items.push_back({{"input", path}, {"ok", problem.empty()}, {"message", problem}});
      text += path + ": " + (problem.empty() ? "well-formed and projectable" : problem) + "\n";
    }
    emit(o, {{"command", "check"}, {"ok", all}, {"items", items}}, text);
    return all ? kOk : kFailed;
  }
  Program prog = load_program(o.inputs);
  TypeResult r = typecheck(prog.gamma, prog.process, {});
  ojson j{{"command", "check"}, {"ok", r.ok}};
  j["rejection"] = r.rejection ? rejection_json(*r.rejection) : ojson(nullptr);
  j["derivation_steps"] = r.derivation.size();
  std::string text = r.ok ? "ok: well-typed (" + std::to_string(r.derivation.size()) + " derivation steps)\n"
                          : "rejected: " + to_string(*r.rejection) + "\n";
  emit(o, j, text);
  return r.ok ? kOk : kFailed;
}

int cmd_run(const Options& o) {
  Program prog = load_program(o.inputs);
  auto oracle = oracle_factory(o)(base_seed(o));
  RunOptions ro;
  ro.seed = base_seed(o);
  ro.max_steps = o.steps;
  RunResult r = run(prog.process, prog.gamma, *oracle, ro);
  if (!o.trace_out.empty()) {
    std::ofstream out(o.trace_out, std::ios::binary);
    if (!out) throw UsageError("cannot write " + o.trace_out);
    out << to_jsonl(r.trace);
  }
  ojson verdicts = ojson::array();
  std::string text = "oracle " + r.trace.oracle + ", " + std::to_string(r.trace.events.size()) + " steps, " +
                     (r.terminal ? "terminated" : r.quiescent ? "quiescent" : "step cap reached") + "\n";
  // run() reports only what did not pass; the rest held on every step.
  for (const char* prop : {"linearity", "error-freedom", "subject-reduction", "progress"}) {
    auto it = std::find_if(r.verdicts.begin(), r.verdicts.end(), [&](const Verdict& v) { return v.property == prop; });
    Verdict v = it != r.verdicts.end() ? *it : Verdict{prop, Status::Pass, std::nullopt, "", {}};
    verdicts.push_back(verdict_json(v));
    text += v.property + ": " + to_string(v.status) + (v.step ? " at step " + std::to_string(*v.step) : "") +
            (v.message.empty() ? "" : " (" + v.message + ")") + "\n";
  }
  text += r.passed() ? "PASS\n" : "FAIL\n";
  ojson j{{"command", "run"},          {"seed", ro.seed},        {"oracle", r.trace.oracle},
          {"steps", r.trace.events.size()}, {"terminal", r.terminal}, {"passed", r.passed()},
          {"verdicts", verdicts},      {"coverage", coverage_json(r.coverage)}};
  emit(o, j, text);
  return r.passed() ? kOk : kFailed;
}

int cmd_fuzz(const Options& o) {
  Program prog = load_program(o.inputs);
  if (o.seeds == 0) throw UsageError("--seeds must be positive");
  FuzzOptions fo;
  for (std::size_t i = 0; i < o.seeds; ++i) fo.seeds.push_back(base_seed(o) + i);
  fo.max_steps = o.steps;
  fo.threads = o.threads;
  FuzzSummary s = fuzz(prog.process, prog.gamma, oracle_factory(o), fo);
  ojson failures = ojson::array();
  std::string text = std::to_string(s.runs) + " runs, " + std::to_string(s.steps) + " steps, " +
                     std::to_string(s.terminal_runs) + " terminated, " + std::to_string(s.unchecked_runs) +
                     " with unchecked progress\n";
  for (auto& [seed, v] : s.failures) {
    ojson f = verdict_json(v);
    f["seed"] = seed;
    failures.push_back(f);
    text += "seed " + std::to_string(seed) + ": " + v.property + " fails at step " + std::to_string(v.step.value_or(0)) +
            " (" + v.message + "), witness of " + std::to_string(v.witness.size()) + " steps\n";
  }
  ojson missing = ojson::array();
  text += "coverage:";
  for (Rule r : all_rules()) text += " " + to_string(r) + "=" + std::to_string(s.coverage.count(r) ? s.coverage.at(r) : 0);
  text += "\n";
  for (Rule r : missing_rules(s.coverage)) missing.push_back(to_string(r));
  text += s.passed() ? "PASS\n" : "FAIL\n";
  ojson j{{"command", "fuzz"},
          {"runs", s.runs},
          {"steps", s.steps},
          {"terminal_runs", s.terminal_runs},
          {"unchecked_runs", s.unchecked_runs},
          {"passed", s.passed()},
          {"failures", failures},
          {"coverage", coverage_json(s.coverage)},
          {"missing_rules", missing}};
  emit(o, j, text);
  return s.passed() ? kOk : kFailed;
}

int cmd_replay(const Options& o) {
  if (o.inputs.empty()) throw UsageError("replay expects a trace file");
  Trace t;
  try {
    t = trace_from_jsonl(read_input(o.inputs[0]));
  } catch (const TraceFormatError& e) {
    throw UsageError(o.inputs[0] + ": " + e.what());
  }
  ReplayResult r = replay(t);
  ojson j{{"command", "replay"}, {"ok", r.ok}, {"steps", r.steps}, {"events", t.events.size()}, {"message", r.message}};
  std::string text = r.ok ? "ok: " + std::to_string(r.steps) + " steps replayed, all digests match\n"
                          : "diverged: " + r.message + "\n";
  // Extra global types turn on the subject-reduction check of the replayed trace.
  if (r.ok && o.inputs.size() > 1) {
    std::vector<std::string> rest(o.inputs.begin() + 1, o.inputs.end());
    GlobalEnv gamma;
    auto channels = shared_channels(parse_process(t.program));
    auto next = channels.begin();
    for (auto& in : rest) {
      auto eq = in.find('=');
      std::string name = eq == std::string::npos ? (next == channels.end() ? "" : *next++) : in.substr(0, eq);
      std::string path = eq == std::string::npos ? in : in.substr(eq + 1);
      if (name.empty()) throw UsageError("no shared channel left for " + path);
      gamma.add_shared(name, parsed(path, [](const std::string& s) { return parse_global(s); }));
    }
    Verdict v = check_subject_reduction(t, gamma);
    j["subject_reduction"] = verdict_json(v);
    text += "subject-reduction: " + to_string(v.status) + (v.message.empty() ? "" : " (" + v.message + ")") + "\n";
    if (v.failed()) r.ok = false;
    j["ok"] = r.ok;
  }
  emit(o, j, text);
  return r.ok ? kOk : kFailed;
}

std::map<Role, int> parse_beliefs(const std::string& s, int n) {
  std::map<Role, int> out;
  std::stringstream ss(s);
  std::string item;
  Role r = 1;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      int v = std::stoi(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      out[r++] = v;
    } catch (const std::exception&) {
      throw UsageError("belief '" + item + "' is not a natural number");
    }
  }
  if (static_cast<int>(out.size()) != n)
    throw UsageError("expected " + std::to_string(n) + " beliefs, got " + std::to_string(out.size()));
  return out;
}

int cmd_consensus(const Options& o) {
  if (o.n < 2) throw UsageError("--n must be at least 2");
  std::map<Role, int> beliefs;
  if (o.beliefs.empty())
    for (Role r = 1; r <= o.n; ++r) beliefs[r] = r % 2;
  else beliefs = parse_beliefs(o.beliefs, o.n);
  Process p = build_rc_system(o.n, beliefs);
  GlobalEnv gamma;
  gamma.add_shared("a", build_grc(o.n));
  auto make = oracle_factory(o, (o.n - 1) / 2);
  ojson runs = ojson::array();
  std::string text;
  std::size_t term = 0, agree = 0, valid = 0, origin = 0;
  for (std::size_t i = 0; i < o.seeds; ++i) {
    std::uint64_t seed = base_seed(o) + i;
    auto oracle = make(seed);
    RunOptions ro;
    ro.seed = seed;
    ro.max_steps = o.steps;
    ro.check = false;
    RunResult r = run(p, gamma, *oracle, ro);
    ConsensusVerdict v = verify_consensus(r.trace, o.n, beliefs);
    term += v.termination;
    agree += v.agreement;
    valid += v.validity;
    origin += v.single_origin;
    ojson d = ojson::object();
    for (auto& [role, dec] : v.decisions) d[std::to_string(role)] = dec ? ojson(*dec) : ojson(nullptr);
    runs.push_back({{"seed", seed},
                    {"steps", r.trace.events.size()},
                    {"termination", v.termination},
                    {"agreement", v.agreement},
                    {"validity", v.validity},
                    {"single_origin", v.single_origin},
                    {"decisions", d}});
    text += "seed " + std::to_string(seed) + ": " + to_string(v) + " steps=" + std::to_string(r.trace.events.size()) + "\n";
  }
  auto pct = [&](std::size_t k) { return std::to_string(k) + "/" + std::to_string(o.seeds); };
  text += "\nproperty       holds\ntermination    " + pct(term) + "\nagreement      " + pct(agree) +
          "\nvalidity       " + pct(valid) + "\nsingle-origin  " + pct(origin) + "\n";
  bool all = term == o.seeds && agree == o.seeds && valid == o.seeds && origin == o.seeds;
  ojson bj = ojson::array();
  for (auto& [r, b] : beliefs) bj.push_back(b);
  ojson j{{"command", "consensus"},
          {"n", o.n},
          {"beliefs", bj},
          {"oracle", o.oracle},
          {"runs", runs},
          {"summary",
           {{"runs", o.seeds}, {"termination", term}, {"agreement", agree}, {"validity", valid}, {"single_origin", origin}}},
          {"passed", all}};
  emit(o, j, text);
  return all ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Session calculus with crashes and message loss: parse, check, project, simulate and verify"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* c) { c->add_flag("--json", o.json, "Machine-readable output"); };
  auto oracle_flags = [&](CLI::App* c) {
    c->add_option("--oracle", o.oracle, "Failure oracle")
        ->check(CLI::IsMember({"reliable", "chaos", "cond1", "diamond-s"}));
    c->add_option("--seed", o.seed, "Seed (overrides FTMPST_SEED)");
    c->add_option("--crash-budget", o.crash_budget, "Crashes allowed per session")->check(CLI::NonNegativeNumber);
    c->add_option("--gst", o.gst, "Stabilisation step of the diamond-s oracle");
    c->add_option("--steps", o.steps, "Step cap per run");
  };

  auto* parse = app.add_subcommand("parse", "Parse .gt/.lt/.proc files and print them canonically");
  parse->add_option("inputs", o.inputs, "Input files ('-' for stdin)")->required();
  parse->add_option("--kind", o.kind, "Force the input kind")->check(CLI::IsMember({"global", "local", "process"}));
  common(parse);

  auto* check = app.add_subcommand("check", "Typecheck a process against global types, or check global types");
  check->add_option("inputs", o.inputs, "[name=]G.gt ... [P.proc]")->required();
  common(check);

  auto* project = app.add_subcommand("project", "Project a global type onto its roles");
  project->add_option("input", o.inputs, "G.gt")->required();
  project->add_option("--role", o.role, "Only this role");
  common(project);

  auto* runc = app.add_subcommand("run", "Simulate one run with per-step property checks");
  runc->add_option("inputs", o.inputs, "[name=]G.gt ... P.proc")->required();
  runc->add_option("--trace", o.trace_out, "Write the JSON-lines trace here");
  oracle_flags(runc);
  common(runc);

  auto* fuzzc = app.add_subcommand("fuzz", "Run many seeds with all property checks");
  fuzzc->add_option("inputs", o.inputs, "[name=]G.gt ... P.proc")->required();
  fuzzc->add_option("--seeds", o.seeds, "Number of seeds, counted from --seed");
  fuzzc->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  oracle_flags(fuzzc);
  common(fuzzc);

  auto* replayc = app.add_subcommand("replay", "Replay a trace and compare digests");
  replayc->add_option("inputs", o.inputs, "trace.jsonl [[name=]G.gt ...]")->required();
  common(replayc);

  auto* cons = app.add_subcommand("consensus", "Simulate the rotating coordinator protocol");
  cons->add_option("--n", o.n, "Number of processes");
  cons->add_option("--beliefs", o.beliefs, "Initial beliefs, comma separated");
  cons->add_option("--seeds", o.seeds, "Number of seeds, counted from --seed");
  oracle_flags(cons);
  common(cons);

  o.steps = 2000;
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (cons->parsed()) {
    if (cons->count("--oracle") == 0) o.oracle = "diamond-s";
    if (cons->count("--steps") == 0) o.steps = 20000;
  }
  try {
    if (parse->parsed()) return cmd_parse(o);
    if (check->parsed()) return cmd_check(o);
    if (project->parsed()) return cmd_project(o);
    if (runc->parsed()) return cmd_run(o);
    if (fuzzc->parsed()) return cmd_fuzz(o);
    if (replayc->parsed()) return cmd_replay(o);
    if (cons->parsed()) return cmd_consensus(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const LinearityViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
