#include "doctest.h"

#include <functional>
#include <sstream>

#include "fluxvm/agent/agent.hpp"
#include "helpers.hpp"

using namespace fluxvm;
using namespace fluxvm::test;
using nlohmann::json;

namespace {

std::string agent_error(const std::function<void()>& f) {
  try {
    f();
  } catch (const AgentError& e) {
    return e.code();
  }
  FAIL("no AgentError raised");
  return {};
}

VmErrc vm_error(const std::function<void()>& f) {
  try {
    f();
  } catch (const VmError& e) {
    return e.code();
  }
  FAIL("no VmError raised");
  return VmErrc::BadArgument;
}

/// Transformed program plus the advice module, run once so its sites link.
struct Live {
  CapturedImage img;
  Agent agent{*img};
  std::string program;
  std::vector<Value> args;

  Live(std::string_view name, std::vector<Value> a) : program(name), args(std::move(a)) {
    img->load(corpus_module(kAspectsModule), false);
    img->load(corpus_module(name), true);
    run_once();
  }

  std::string run_once() {
    img.take();
    run(*img, corpus_module(program).entry_name().value_or("main"), args);
    return img.take();
  }

  std::vector<std::string> lines() {
    std::vector<std::string> out;
    std::istringstream in(run_once());
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
  }
};

const char* kFib = "static:Fib.classicfibo:(I)I";

}  // namespace

TEST_CASE("listCallSites after a fib run") {
  Live live("classicfibo", ints({10}));
  auto snap = live.agent.list_callsites();
  REQUIRE(snap.site_count >= 1);
  bool found = false;
  for (const auto& s : snap.sites) found |= s.key == kFib;
  CHECK(found);
  CHECK(live.agent.list_callsites("virtual:*").site_count == 0);
  CHECK(live.agent.list_callsites(kFib).site_count == 3);
}

TEST_CASE("changeCallSiteTarget swaps the listener handler") {
  Live live("listener", {});
  CHECK(live.run_once().find("picture") != std::string::npos);
  auto n = live.agent.change_callsite_target("virtual", "Listener.counterIncrement:(LListener;)V",
                                             "Listener.pictureSwitch:()V");
  CHECK(n == 1);
  auto out = live.run_once();
  CHECK(out.find("count") == std::string::npos);
  CHECK(out == "picture 1\npicture 0\npicture 1\npicture 0\npicture 1\npicture 0\npicture 1\npicture 0\n");

  // The explicit receiver-prepended form resolves to the same target.
  CHECK(live.agent.change_callsite_target("virtual", "Listener.counterIncrement:(LListener;)V",
                                          "Listener.counterIncrement:(LListener;)V") == 1);
  CHECK(live.run_once().find("count 1\ncount 2\npicture") != std::string::npos);
}

TEST_CASE("changeCallSiteTarget to the current target changes nothing observable") {
  Live live("classicfibo", ints({10}));
  auto before = live.run_once();
  CHECK(live.agent.change_callsite_target("static", "Fib.classicfibo:(I)I", "Fib.classicfibo:(I)I") >= 1);
  CHECK(live.run_once() == before);
}

TEST_CASE("changeCallSiteTarget errors") {
  Live live("listener", {});
  auto& a = live.agent;
  CHECK(agent_error([&] { a.change_callsite_target("virtual", "Listener.nothing:(LListener;)V", "Listener.pictureSwitch:()V"); }) ==
        "unknown-key");
  CHECK(agent_error([&] { a.change_callsite_target("static", "Listener.counterIncrement:(LListener;)V", "Listener.pictureSwitch:()V"); }) ==
        "unknown-key");
  CHECK(agent_error([&] { a.change_callsite_target("virtual", "Listener.counterIncrement:(LListener;)V", "Listener.gone:()V"); }) ==
        "no-such-method");
  CHECK(agent_error([&] { a.change_callsite_target("virtual", "Listener.counterIncrement:(LListener;)V", "Listener.actionPerformed:(I)V"); }) ==
        "type-incompatible-target");
  CHECK(agent_error([&] { a.change_callsite_target("dynamic", "Listener.counterIncrement:(LListener;)V", "Listener.pictureSwitch:()V"); }) ==
        "bad-params");
  CHECK(agent_error([&] { a.change_callsite_target("virtual", "Listener.counterIncrement:(LListener;)V", "garbage"); }) ==
        "bad-params");
  // No failed request corrupts the site.
  CHECK(live.run_once().find("count 1") != std::string::npos);
}

TEST_CASE("Dumpers aspects bracket fib(10)") {
  Live live("classicfibo", ints({10}));
  auto plain = live.run_once();
  CHECK(live.agent.apply_before_aspect(kFib, "Dumpers", "onCall") == 3);
  CHECK(live.agent.apply_after_aspect(kFib, "Dumpers", "onReturn") == 3);
  auto lines = live.lines();
  REQUIRE(lines.size() >= 3);
  CHECK(lines.front() == ">>> [10]");
  CHECK(lines[lines.size() - 2] == "<<< 55");
  CHECK(lines.back() == "55");
  auto calls = fib_calls_oracle(10);
  std::size_t opens = 0, closes = 0;
  for (const auto& l : lines) {
    opens += l.rfind(">>> ", 0) == 0;
    closes += l.rfind("<<< ", 0) == 0;
  }
  CHECK(opens == calls);
  CHECK(closes == calls);

  auto snap = live.agent.list_callsites(kFib);
  for (const auto& s : snap.sites) {
    CHECK(s.aspects == std::vector<std::string>{"before:Dumpers.onCall", "after:Dumpers.onReturn"});
    CHECK(s.target != s.key);
  }

  CHECK(live.agent.reset_callsite(kFib) == 3);
  CHECK(live.run_once() == plain);
  CHECK(live.agent.reset_callsite(kFib) == 3);
  CHECK(live.run_once() == plain);
  for (const auto& s : live.agent.list_callsites(kFib).sites) CHECK(s.aspects.empty());
}

TEST_CASE("the newest aspect is outermost") {
  Live live("classicfibo", ints({1}));
  live.agent.apply_before_aspect(kFib, "Validate", "before");
  live.agent.apply_before_aspect(kFib, "Trace", "before");
  live.agent.apply_after_aspect(kFib, "Validate", "after");
  live.agent.apply_after_aspect(kFib, "Trace", "after");
  CHECK(live.run_once() == "trace [1]\nvalidate [1]\nvalidate-ret 1\ntrace-ret 1\n1\n");
}

TEST_CASE("identity aspects are transparent in any stacking order") {
  Live live("shapes", {});
  auto plain = live.run_once();
  live.agent.apply_before_aspect("*", "Empty", "before");
  live.agent.apply_after_aspect("*", "Empty", "after");
  CHECK(live.run_once() == plain);
  live.agent.apply_before_aspect("*", "Empty", "before");
  live.agent.apply_before_aspect("*", "Empty", "before");
  CHECK(live.run_once() == plain);
}

TEST_CASE("misbehaving advice fails at the next invocation") {
  Live drop("classicfibo", ints({5}));
  drop.agent.apply_before_aspect(kFib, "Tamper", "drop");
  CHECK(vm_error([&] { drop.run_once(); }) == VmErrc::SpreadMismatch);
  drop.agent.reset_callsite(kFib);
  CHECK(drop.run_once() == "5\n");

  Live str("classicfibo", ints({5}));
  str.agent.apply_after_aspect(kFib, "Tamper", "stringify");
  CHECK(vm_error([&] { str.run_once(); }) == VmErrc::CastError);
}

TEST_CASE("aspect errors") {
  Live live("listener", {});
  auto& a = live.agent;
  CHECK(agent_error([&] { a.apply_before_aspect("static:Nothing.*", "Dumpers", "onCall"); }) == "no-match");
  CHECK(agent_error([&] { a.apply_after_aspect("static:Nothing.*", "Dumpers", "onReturn"); }) == "no-match");
  CHECK(agent_error([&] { a.apply_after_aspect("virtual:Listener.*", "Dumpers", "onReturn"); }) == "void-return-site");
  CHECK(agent_error([&] { a.apply_before_aspect("virtual:Listener.*", "Dumpers", "onReturn"); }) == "type-incompatible-target");
  CHECK(agent_error([&] { a.apply_before_aspect("virtual:Listener.*", "Nobody", "onCall"); }) == "no-such-method");
  CHECK(agent_error([&] { a.reset_callsite("virtual:Nothing.x:()V"); }) == "unknown-key");
  for (const auto& s : a.list_callsites().sites) CHECK(s.aspects.empty());
}

TEST_CASE("before advice sees the receiver first for instance sites") {
  Live live("points", {});
  live.agent.apply_before_aspect("virtual:Point.norm2:(LPoint;)I", "Dumpers", "onCall");
  auto out = live.run_once();
  CHECK(out.find(">>> [Point{x=3, y=4}]") != std::string::npos);
  CHECK(out.find(">>> [Point{x=2, y=6}]") != std::string::npos);
}

TEST_CASE("wire protocol") {
  Live live("classicfibo", ints({10}));
  auto& a = live.agent;

  auto r = a.handle(json{{"id", "1"}, {"op", "listCallSites"}, {"params", json::object()}});
  CHECK(r["id"] == "1");
  CHECK(r["ok"] == true);
  CHECK(r["result"]["siteCount"] == 3);
  auto site = r["result"]["sites"][0];
  for (const char* field : {"key", "siteId", "kind", "semantics", "type", "invocationCount", "bootstrapCount",
                            "target", "aspects"}) {
    CAPTURE(field);
    CHECK(site.contains(field));
  }
  CHECK(site["key"] == kFib);
  CHECK(site["kind"] == "static");
  CHECK(site["semantics"] == "volatile");
  CHECK(site["type"] == "(I)I");
  CHECK(site["bootstrapCount"] == 1);

  auto listed = a.handle(json{{"id", 2}, {"op", "listCallSites"}, {"params", {{"pattern", "virtual:*"}}}});
  CHECK(listed["id"] == 2);
  CHECK(listed["result"]["siteCount"] == 0);

  auto applied = a.handle(json{{"id", "3"},
                               {"op", "applyBeforeAspect"},
                               {"params", {{"callSitesKey", kFib}, {"aspectClass", "Dumpers"}, {"aspectMethod", "onCall"}}}});
  CHECK(applied.dump() == R"({"id":"3","ok":true,"result":{"sitesChanged":3}})");

  auto after = a.handle(json{{"op", "applyAfterAspect"},
                             {"params", {{"callSitesKey", kFib}, {"aspectClass", "Dumpers"}, {"aspectMethod", "onReturn"}}}});
  CHECK(after.dump() == R"({"ok":true,"result":{"sitesChanged":3}})");

  auto reset = a.handle(json{{"id", "4"}, {"op", "resetCallSite"}, {"params", {{"key", kFib}}}});
  CHECK(reset["result"]["sitesChanged"] == 3);

  auto swap = a.handle(json{{"id", "5"},
                            {"op", "changeCallSiteTarget"},
                            {"params", {{"methodType", "static"}, {"oldTarget", "Fib.classicfibo:(I)I"}, {"newTarget", "Fib.classicfibo:(I)I"}}}});
  CHECK(swap["result"]["sitesChanged"] == 3);

  auto m = a.handle(json{{"id", "6"}, {"op", "metrics"}});
  CHECK(m["ok"] == true);
  CHECK(m["result"]["siteCount"] == 3);
  CHECK(m["result"]["bootstraps"] == 3);
  CHECK(m["result"].contains("methodLookups"));
  CHECK(m["result"].contains("registryLookups"));

  auto unknown = a.handle(json{{"id", "7"}, {"op", "frobnicate"}});
  CHECK(unknown["ok"] == false);
  CHECK(unknown["id"] == "7");
  CHECK(unknown["error"]["code"] == "unknown-op");
  CHECK(unknown["error"].contains("message"));

  auto missing = a.handle(json{{"id", "8"}, {"op", "resetCallSite"}, {"params", json::object()}});
  CHECK(missing["error"]["code"] == "bad-params");
  auto no_op = a.handle(json{{"id", "9"}});
  CHECK(no_op["ok"] == false);
  auto unknown_key = a.handle(json{{"id", "10"}, {"op", "resetCallSite"}, {"params", {{"key", "static:X.y:()V"}}}});
  CHECK(unknown_key["error"]["code"] == "unknown-key");

  auto line = a.handle_line("{not json");
  auto parsed = json::parse(line);
  CHECK(parsed["ok"] == false);
  CHECK(parsed["error"]["code"] == "bad-params");
  CHECK(line.find('\n') == std::string::npos);

  auto echoed = json::parse(a.handle_line(R"({"id":"x1","op":"metrics","params":{}})"));
  CHECK(echoed["id"] == "x1");
  auto keys = std::vector<std::string>{};
  for (auto it = echoed.begin(); it != echoed.end(); ++it) keys.push_back(it.key());
  CHECK(keys.size() == 3);
}

TEST_CASE("response field order is id, ok, result") {
  Live live("classicfibo", ints({3}));
  auto r = live.agent.handle_line(R"({"id":"a","op":"resetCallSite","params":{"key":"static:Fib.classicfibo:(I)I"}})");
  CHECK(r == R"({"id":"a","ok":true,"result":{"sitesChanged":3}})");
  auto e = live.agent.handle_line(R"({"id":"b","op":"nope"})");
  CHECK(e.rfind(R"({"id":"b","ok":false,"error":{"code":"unknown-op","message":)", 0) == 0);
}
