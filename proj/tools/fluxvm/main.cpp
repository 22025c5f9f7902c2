#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "fluxvm/agent/agent.hpp"
#include "fluxvm/agent/server.hpp"
#include "fluxvm/bench/bench.hpp"
#include "fluxvm/bytecode/assembler.hpp"
#include "fluxvm/bytecode/codec.hpp"
#include "fluxvm/corpus.hpp"
#include "fluxvm/transformer/transformer.hpp"
#include "fluxvm/vm/exec_context.hpp"

using namespace fluxvm;

namespace {

enum Exit : int { kOk = 0, kFault = 1, kLoad = 2, kUsage = 3 };

/// Reported with a specific exit code.
struct Failure {
  int code;
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kUsage, fmt::format("cannot read {}", path)};
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Failure{kUsage, fmt::format("cannot write {}", path)};
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// `.fxa` files are assembled, anything else is decoded as `.fxb`.
ModuleFile read_module(const std::string& path) {
  auto data = read_file(path);
  try {
    if (ends_with(path, ".fxa")) return assemble(data);
    return decode(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
  } catch (const AssembleError& e) {
    std::string msg = fmt::format("{}:{}", path, e.what());
    for (const auto& d : e.diagnostics()) msg += "\n  " + d.str();
    throw Failure{kUsage, msg};
  } catch (const Error& e) {
    throw Failure{kLoad, fmt::format("{}: {}", path, e.what())};
  }
}

Value parse_arg(const std::string& s) {
  std::int64_t i = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), i);
  if (ec == std::errc() && p == s.data() + s.size()) return Value::integer(i);
  if (s.find_first_of(".eE") != std::string::npos || s == "inf" || s == "-inf" || s == "nan") {
    try {
      std::size_t used = 0;
      double d = std::stod(s, &used);
      if (used == s.size()) return Value::real(d);
    } catch (const std::exception&) {
    }
  }
  if (s == "true" || s == "false") return Value::boolean(s == "true");
  if (s == "null") return Value::null();
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return Value::string(s.substr(1, s.size() - 2));
  return Value::string(s);
}

int cmd_asm(const std::string& in, const std::string& out) {
  auto m = read_module(in);
  write_file(out, encode(m));
  return kOk;
}

int cmd_dis(const std::string& in) {
  std::cout << disassemble(read_module(in));
  return kOk;
}

int cmd_transform(const std::string& in, const std::string& out, bool stats) {
  auto m = read_module(in);
  TransformResult r;
  try {
    r = transform_module(m);
  } catch (const Error& e) {
    throw Failure{kLoad, e.what()};
  }
  write_file(out, encode(r.module));
  if (stats) {
    std::cout << fmt::format("classes {} methods {} sites {} elapsed {:.3f} ms\n", r.stats.classes_transformed,
                             r.stats.methods_transformed, r.stats.sites_rewritten, r.stats.elapsed_ms);
  }
  return kOk;
}

struct RunOptions {
  std::string program;
  bool transform = false;
  std::string agent;
  std::string entry;
  std::vector<std::string> args;
  std::vector<std::string> extra;
  bool mutable_sites = false;
  bool print_result = false;
  bool no_aspects = false;
};

int cmd_run(const RunOptions& o) {
  ImageOptions io;
  io.site_semantics = o.mutable_sites ? Semantics::Mutable : Semantics::Volatile;
  io.event_source = []() -> std::optional<std::int64_t> {
    std::string line;
    while (std::getline(std::cin, line)) {
      try {
        return std::stoll(line);
      } catch (const std::exception&) {
        std::cerr << "fluxvm: ignoring non-integer event '" << line << "'\n";
      }
    }
    return -1;
  };
  RuntimeImage image(io);
  auto program = read_module(o.program);
  try {
    if (!o.no_aspects) image.load(corpus_module(kAspectsModule), false);
    for (const auto& path : o.extra) image.load(read_module(path), false);
    image.load(program, o.transform);
  } catch (const LoadError& e) {
    throw Failure{kLoad, e.what()};
  }

  std::string entry = o.entry;
  if (entry.empty()) entry = program.entry_name().value_or("main");
  std::vector<Value> args;
  for (const auto& a : o.args) args.push_back(parse_arg(a));

  std::unique_ptr<Agent> agent;
  std::unique_ptr<AgentServer> server;
  if (!o.agent.empty()) {
    Endpoint where;
    try {
      where = Endpoint::parse(o.agent);
    } catch (const std::invalid_argument& e) {
      throw Failure{kUsage, e.what()};
    }
    agent = std::make_unique<Agent>(image);
    try {
      server = std::make_unique<AgentServer>(*agent, where);
    } catch (const std::exception& e) {
      throw Failure{kUsage, fmt::format("cannot listen on {}: {}", o.agent, e.what())};
    }
    std::cerr << "agent listening on " << server->endpoint().str() << std::endl;
  }

  try {
    Value r = run(image, entry, args);
    if (o.print_result) std::cout << render(r) << "\n";
  } catch (const VmError& e) {
    std::cout.flush();
    if (e.code() == VmErrc::BadArgument) throw Failure{kUsage, e.what()};
    throw Failure{e.code() == VmErrc::LinkError ? kLoad : kFault, e.what()};
  }
  return kOk;
}

int cmd_bench(const bench::BenchConfig& cfg, const std::string& out) {
  bench::BenchReport report;
  try {
    report = bench::run_bench(cfg);
  } catch (const bench::BenchError& e) {
    throw Failure{kUsage, e.what()};
  }
  std::cout << (out == "json" ? bench::render_json(report) : bench::render_table(report));
  return kOk;
}

nlohmann::ordered_json ctl_request(const std::string& op, const std::vector<std::string>& params) {
  static const std::map<std::string, std::vector<std::string>> names{
      {"changeCallSiteTarget", {"methodType", "oldTarget", "newTarget"}},
      {"applyBeforeAspect", {"callSitesKey", "aspectClass", "aspectMethod"}},
      {"applyAfterAspect", {"callSitesKey", "aspectClass", "aspectMethod"}},
      {"listCallSites", {"pattern"}},
      {"resetCallSite", {"key"}},
      {"metrics", {}},
  };
  nlohmann::ordered_json req;
  req["op"] = op;
  auto it = names.find(op);
  if (it == names.end()) {
    if (!params.empty()) throw Failure{kUsage, fmt::format("unknown operation '{}' takes no parameters here", op)};
    return req;
  }
  const auto& keys = it->second;
  bool optional = op == "listCallSites";
  if (params.size() > keys.size() || (!optional && params.size() != keys.size())) {
    std::string usage;
    for (const auto& k : keys) usage += " <" + k + ">";
    throw Failure{kUsage, fmt::format("usage: ctl --connect host:port {}{}", op, usage)};
  }
  nlohmann::ordered_json p = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < params.size(); ++i) p[keys[i]] = params[i];
  req["params"] = p;
  return req;
}

int cmd_ctl(const std::string& connect, bool ws, const std::vector<std::string>& words) {
  if (words.empty()) throw Failure{kUsage, "ctl needs an operation name"};
  Endpoint where;
  try {
    where = Endpoint::parse(connect);
  } catch (const std::invalid_argument& e) {
    throw Failure{kUsage, e.what()};
  }
  auto req = ctl_request(words[0], {words.begin() + 1, words.end()}).dump();
  std::string reply;
  try {
    reply = ws ? WsClient(where).request(req) : tcp_request(where, req);
  } catch (const std::exception& e) {
    throw Failure{kFault, fmt::format("cannot reach agent at {}: {}", connect, e.what())};
  }
  std::cout << reply << "\n";
  auto parsed = nlohmann::json::parse(reply, nullptr, false);
  return parsed.is_object() && parsed.value("ok", false) ? kOk : kFault;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fluxvm: stack bytecode VM with live call-site rebinding"};
  app.require_subcommand(1);

  std::string in, out;
  auto* asm_cmd = app.add_subcommand("asm", "Assemble .fxa text into a .fxb binary");
  asm_cmd->add_option("input", in, "Source file")->required();
  asm_cmd->add_option("-o,--output", out, "Output file")->required();

  auto* dis_cmd = app.add_subcommand("dis", "Disassemble a module");
  dis_cmd->add_option("input", in, "Module file")->required();

  bool stats = false;
  auto* tr_cmd = app.add_subcommand("transform", "Rewrite classic invokes into dynamic call sites");
  tr_cmd->add_option("input", in, "Module file")->required();
  tr_cmd->add_option("-o,--output", out, "Output file")->required();
  tr_cmd->add_flag("--stats", stats, "Print transformation statistics");

  RunOptions ro;
  auto* run_cmd = app.add_subcommand("run", "Load and run a program");
  run_cmd->add_option("program", ro.program, "Module file (.fxb or .fxa)")->required();
  run_cmd->add_flag("--transform", ro.transform, "Transform the program at load time");
  run_cmd->add_option("--agent", ro.agent, "Serve management requests on host:port");
  run_cmd->add_option("--entry", ro.entry, "Entry function (default: the module's entry, else main)");
  run_cmd->add_option("--args", ro.args, "Entry arguments: integers, floats, booleans, strings");
  run_cmd->add_option("--load", ro.extra, "Additional module loaded untransformed before the program");
  run_cmd->add_flag("--mutable-sites", ro.mutable_sites, "Link call sites with mutable publication");
  run_cmd->add_flag("--print-result", ro.print_result, "Print the entry function's return value");
  run_cmd->add_flag("--no-aspects", ro.no_aspects, "Do not preload the standard advice module");

  bench::BenchConfig bc;
  std::string bench_out = "table";
  std::vector<std::string> configs;
  auto* bench_cmd = app.add_subcommand("bench", "Time a corpus program across configurations");
  bench_cmd->add_option("--program", bc.program, "Corpus program")->capture_default_str();
  bench_cmd->add_option("--n", bc.n, "Entry argument")->capture_default_str();
  bench_cmd->add_option("--reps", bc.repetitions, "Timed repetitions")->capture_default_str();
  bench_cmd->add_option("--warmups", bc.warmups, "Warmup runs")->capture_default_str();
  bench_cmd->add_option("--config", configs, "Configuration subset (repeatable)");
  bench_cmd->add_option("--out", bench_out, "Output format")
      ->check(CLI::IsMember({"table", "json"}))
      ->capture_default_str();

  std::string connect;
  bool use_ws = false;
  std::vector<std::string> words;
  auto* ctl_cmd = app.add_subcommand("ctl", "Send one management request to a running agent");
  ctl_cmd->add_option("--connect", connect, "Agent host:port")->required();
  ctl_cmd->add_flag("--ws", use_ws, "Use the WebSocket endpoint instead of line-delimited TCP");
  ctl_cmd->add_option("request", words, "<op> <params...>");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*asm_cmd) return cmd_asm(in, out);
    if (*dis_cmd) return cmd_dis(in);
    if (*tr_cmd) return cmd_transform(in, out, stats);
    if (*run_cmd) return cmd_run(ro);
    if (*bench_cmd) {
      if (!configs.empty()) {
        bc.configurations.clear();
        for (const auto& c : configs) {
          auto parsed = bench::configuration_from_name(c);
          if (!parsed) throw Failure{kUsage, fmt::format("unknown configuration '{}'", c)};
          bc.configurations.push_back(*parsed);
        }
      }
      return cmd_bench(bc, bench_out);
    }
    if (*ctl_cmd) return cmd_ctl(connect, use_ws, words);
  } catch (const Failure& f) {
    std::cerr << "fluxvm: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "fluxvm: " << e.what() << "\n";
    return kFault;
  }
  return kUsage;
}
