#include "doctest.h"

#include "fluxvm/callsite/registry.hpp"
#include "handle_fixture.hpp"
#include "helpers.hpp"

using namespace fluxvm;
using namespace fluxvm::test;

namespace {

const SiteKey kFibKey = SiteKey::parse("static:Fib.classicfibo:(I)I");

}  // namespace

TEST_CASE("make_site builds a well-formed unregistered site") {
  HandleFixture fx;
  auto fib = fx.fn("Fib", "classicfibo", "(I)I");
  auto v = make_site(kFibKey, fib.type(), Semantics::Volatile, fib);
  auto m = make_site(kFibKey, fib.type(), Semantics::Mutable, fib);
  CHECK(v->key_text() == "static:Fib.classicfibo:(I)I");
  CHECK(v->type() == fib.type());
  CHECK(v->semantics() == Semantics::Volatile);
  CHECK(m->semantics() == Semantics::Mutable);
  CHECK(v->id() != m->id());
  CHECK(v->invocation_count() == 0);
  CHECK(v->bootstrap_count() == 0);
  CHECK(v->target().same_as(fib));
  CHECK(v->initial_target().same_as(fib));
  CHECK(v->aspects().empty());
  CHECK(semantics_name(Semantics::Volatile) == "volatile");
  CHECK(semantics_name(Semantics::Mutable) == "mutable");

  CHECK_THROWS_AS(make_site(kFibKey, fib.type(), Semantics::Volatile, fx.fn("Ops", "show", "(I)S")), CallSiteError);
  CHECK_THROWS_AS(make_site(kFibKey, fib.type(), Semantics::Volatile, FunctionHandle{}), CallSiteError);
}

TEST_CASE("set_target swaps behavior and enforces the declared type") {
  HandleFixture fx;
  auto fib = fx.fn("Fib", "classicfibo", "(I)I");
  auto site = make_site(kFibKey, fib.type(), Semantics::Volatile, fib);
  auto call = [&](std::int64_t n) { return site->target().invoke({Value::integer(n)}, fx.ctx); };
  CHECK(call(10) == Value::integer(55));

  auto answer = fx.fn("Ops", "answer", "(I)I");
  site->set_target(answer);
  CHECK(call(10) == Value::integer(42));
  CHECK(site->target_node() == answer.node());

  site->set_target(fib);
  CHECK(call(10) == Value::integer(55));
  site->set_target(fib);
  CHECK(call(10) == Value::integer(55));

  CHECK_THROWS_AS(site->set_target(fx.fn("Ops", "sub", "(II)I")), CallSiteError);
  CHECK_THROWS_AS(site->set_target(fx.fn("Ops", "show", "(I)S")), CallSiteError);
  CHECK(site->type() == fib.type());
  CHECK(call(10) == Value::integer(55));
}

TEST_CASE("aspect labels") {
  HandleFixture fx;
  auto fib = fx.fn("Fib", "classicfibo", "(I)I");
  auto site = make_site(kFibKey, fib.type(), Semantics::Volatile, fib);
  site->push_aspect("before:A.x");
  site->push_aspect("after:B.y");
  CHECK(site->aspects() == std::vector<std::string>{"before:A.x", "after:B.y"});
  site->clear_aspects();
  CHECK(site->aspects().empty());
}

TEST_CASE("pattern matching") {
  CHECK(key_matches("static:Fib.classicfibo:(I)I", "static:Fib.classicfibo:(I)I"));
  CHECK_FALSE(key_matches("static:Fib.classicfibo:(I)I", "static:Fib.classicfibo:(I)V"));
  CHECK(key_matches("virtual:Listener.*", "virtual:Listener.counterIncrement:(LListener;)V"));
  CHECK_FALSE(key_matches("virtual:Listener.*", "static:Listener.make:()LListener;"));
  CHECK(key_matches("*", "anything"));
  CHECK_FALSE(key_matches("", "x"));
}

TEST_CASE("registry") {
  HandleFixture fx;
  auto fib = fx.fn("Fib", "classicfibo", "(I)I");
  auto who = fx.fn("Base", "who", "(LBase;)I", InvocationKind::Virtual);
  auto a = make_site(kFibKey, fib.type(), Semantics::Volatile, fib);
  auto b = make_site(kFibKey, fib.type(), Semantics::Volatile, fib);
  auto c = make_site(SiteKey::parse("virtual:Base.who:(LBase;)I"), who.type(), Semantics::Mutable, who);

  SiteRegistry r;
  CHECK(r.size() == 0);
  CHECK(metrics(r).site_count == 0);
  r.register_site(*c);
  r.register_site(*a);
  r.register_site(*b);
  CHECK_THROWS_AS(r.register_site(*a), CallSiteError);
  CHECK(r.size() == 3);

  auto fibs = r.sites_matching("static:Fib.classicfibo:(I)I");
  REQUIRE(fibs.size() == 2);
  CHECK(fibs[0] == a.get());
  CHECK(fibs[1] == b.get());
  CHECK(r.sites_matching("virtual:Base.*").size() == 1);
  CHECK(r.sites_matching("*").size() == 3);
  CHECK(r.sites_matching("virtual:Nothing.*").empty());
  CHECK(r.sites_matching("static:Fib.classicfibo").empty());

  auto before = r.lookup_count();
  r.sites_matching("*");
  CHECK(r.lookup_count() == before + 1);

  a->count_invocation();
  a->count_invocation();
  a->push_aspect("before:Dumpers.onCall");
  auto snap = metrics(r);
  REQUIRE(snap.site_count == 3);
  CHECK(snap.sites[0].id < snap.sites[1].id);
  CHECK(snap.sites[1].id < snap.sites[2].id);
  const SiteMetrics* ma = nullptr;
  for (const auto& s : snap.sites) {
    if (s.id == a->id()) ma = &s;
  }
  REQUIRE(ma);
  CHECK(ma->invocation_count == 2);
  CHECK(ma->type == "(I)I");
  CHECK(ma->aspects == std::vector<std::string>{"before:Dumpers.onCall"});
  CHECK(ma->target.find("classicfibo") != std::string::npos);
  CHECK(metrics(r, "virtual:*").sites.at(0).semantics == Semantics::Mutable);
}

TEST_CASE("invocation counting") {
  HandleFixture fx;
  auto fib = fx.fn("Fib", "classicfibo", "(I)I");
  auto site = make_site(kFibKey, fib.type(), Semantics::Volatile, fib);
  for (int i = 0; i < 5; ++i) site->count_invocation();
  CHECK(site->invocation_count() == 5);
}
