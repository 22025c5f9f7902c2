#include "fluxvm/agent/agent.hpp"

#include <fmt/format.h>

namespace fluxvm {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string_view kind_of_key(std::string_view key) { return key.substr(0, key.find(':')); }

AgentError from_handle_error(const HandleError& e) {
  return AgentError(e.code() == HandleErrc::NoSuchMethod ? "no-such-method" : "type-incompatible-target", e.what());
}

std::string param(const json& params, const char* name) {
  auto it = params.find(name);
  if (it == params.end() || !it->is_string())
    throw AgentError("bad-params", fmt::format("missing string parameter '{}'", name));
  return it->get<std::string>();
}

}  // namespace

std::vector<DynamicCallSite*> Agent::require_sites(std::string_view pattern, const char* code) const {
  auto sites = image_.registry().sites_matching(pattern);
  if (sites.empty()) throw AgentError(code, fmt::format("no call site matches '{}'", pattern));
  return sites;
}

FunctionHandle Agent::advice(std::string_view owner, std::string_view method, const FunctionType& type) const {
  try {
    return lookup_direct(InvocationKind::Static, owner, method, type, image_);
  } catch (const HandleError& e) {
    throw from_handle_error(e);
  }
}

std::size_t Agent::change_callsite_target(std::string_view method_type, std::string_view old_target,
                                          std::string_view new_target) {
  std::lock_guard lock(mu_);
  auto kind = kind_from_name(method_type);
  if (!kind) throw AgentError("bad-params", fmt::format("unknown method type '{}'", method_type));
  MethodRef ref;
  try {
    ref = MethodRef::parse(new_target);
  } catch (const DescriptorError& e) {
    throw AgentError("bad-params", e.what());
  }
  auto sites = require_sites(fmt::format("{}:{}", method_type, old_target), "unknown-key");

  FunctionHandle target;
  std::optional<AgentError> first_error;
  std::vector<FunctionType> candidates;
  if (*kind != InvocationKind::Static && !ref.owner.empty())
    candidates.push_back(ref.type.with_receiver(TypeDescriptor::instance(ref.owner)));
  candidates.push_back(ref.type);
  for (const auto& t : candidates) {
    try {
      target = lookup_direct(*kind, ref.owner, ref.method, t, image_);
      break;
    } catch (const HandleError& e) {
      if (!first_error || first_error->code() == "no-such-method") first_error = from_handle_error(e);
    }
  }
  if (!target) throw *first_error;
  for (auto* s : sites) {
    if (!(s->type() == target.type()))
      throw AgentError("type-incompatible-target",
                       fmt::format("{} has type {}, site {} expects {}", new_target, target.type().str(),
                                   s->key_text(), s->type().str()));
  }
  for (auto* s : sites) {
    s->set_target(target);
    s->clear_aspects();
  }
  return sites.size();
}

std::size_t Agent::apply_before_aspect(std::string_view pattern, std::string_view owner, std::string_view method) {
  std::lock_guard lock(mu_);
  auto sites = require_sites(pattern, "no-match");
  auto arr = TypeDescriptor::any_array();
  auto adv = advice(owner, method, FunctionType{{arr}, arr});
  std::vector<std::pair<DynamicCallSite*, FunctionHandle>> plan;
  try {
    for (auto* s : sites) {
      auto t = s->target();
      auto n = t.arity();
      FunctionType erased{std::vector<TypeDescriptor>(n, TypeDescriptor::any()), t.type().ret};
      auto spread = as_spreader(as_type(t, erased), n);
      auto wrapped = as_type(as_collector(filter_arguments(spread, 0, {adv}), n), t.type());
      plan.emplace_back(s, std::move(wrapped));
    }
  } catch (const HandleError& e) {
    throw AgentError("type-incompatible-target", e.what());
  }
  auto label = fmt::format("before:{}.{}", owner, method);
  for (auto& [s, h] : plan) {
    s->set_target(h);
    s->push_aspect(label);
  }
  return plan.size();
}

std::size_t Agent::apply_after_aspect(std::string_view pattern, std::string_view owner, std::string_view method) {
  std::lock_guard lock(mu_);
  auto sites = require_sites(pattern, "no-match");
  auto any = TypeDescriptor::any();
  auto adv = advice(owner, method, FunctionType{{any}, any});
  std::vector<std::pair<DynamicCallSite*, FunctionHandle>> plan;
  try {
    for (auto* s : sites) {
      auto t = s->target();
      if (!t.type().returns_value()) continue;
      auto r = t.type().ret;
      plan.emplace_back(s, filter_return_value(t, as_type(adv, FunctionType{{r}, r})));
    }
  } catch (const HandleError& e) {
    throw AgentError("type-incompatible-target", e.what());
  }
  if (plan.empty())
    throw AgentError("void-return-site", fmt::format("every site matching '{}' returns void", pattern));
  auto label = fmt::format("after:{}.{}", owner, method);
  for (auto& [s, h] : plan) {
    s->set_target(h);
    s->push_aspect(label);
  }
  return plan.size();
}

std::size_t Agent::reset_callsite(std::string_view key) {
  std::lock_guard lock(mu_);
  auto sites = require_sites(key, "unknown-key");
  for (auto* s : sites) {
    s->set_target(s->initial_target());
    s->clear_aspects();
  }
  return sites.size();
}

MetricsSnapshot Agent::list_callsites(std::string_view pattern) const {
  std::lock_guard lock(mu_);
  return metrics(image_.registry(), pattern);
}

ordered_json site_json(const SiteMetrics& m) {
  ordered_json j;
  j["key"] = m.key;
  j["siteId"] = m.id;
  j["kind"] = std::string(kind_of_key(m.key));
  j["semantics"] = std::string(semantics_name(m.semantics));
  j["type"] = m.type;
  j["invocationCount"] = m.invocation_count;
  j["bootstrapCount"] = m.bootstrap_count;
  j["target"] = m.target;
  j["aspects"] = m.aspects;
  return j;
}

ordered_json snapshot_json(const MetricsSnapshot& s) {
  ordered_json j;
  j["siteCount"] = s.site_count;
  j["sites"] = ordered_json::array();
  for (const auto& m : s.sites) j["sites"].push_back(site_json(m));
  return j;
}

ordered_json Agent::handle(const json& request) {
  ordered_json response;
  bool has_id = request.is_object() && request.contains("id");
  if (has_id) response["id"] = request["id"];
  try {
    if (!request.is_object()) throw AgentError("bad-params", "request must be a JSON object");
    auto op_it = request.find("op");
    if (op_it == request.end() || !op_it->is_string()) throw AgentError("bad-params", "missing string field 'op'");
    const auto op = op_it->get<std::string>();
    json params = request.value("params", json::object());
    if (!params.is_object()) throw AgentError("bad-params", "'params' must be an object");

    ordered_json result;
    auto changed = [&](std::size_t n) { result["sitesChanged"] = n; };
    if (op == "changeCallSiteTarget") {
      changed(change_callsite_target(param(params, "methodType"), param(params, "oldTarget"),
                                     param(params, "newTarget")));
    } else if (op == "applyBeforeAspect") {
      changed(apply_before_aspect(param(params, "callSitesKey"), param(params, "aspectClass"),
                                  param(params, "aspectMethod")));
    } else if (op == "applyAfterAspect") {
      changed(apply_after_aspect(param(params, "callSitesKey"), param(params, "aspectClass"),
                                 param(params, "aspectMethod")));
    } else if (op == "resetCallSite") {
      changed(reset_callsite(param(params, "key")));
    } else if (op == "listCallSites") {
      std::string pattern = "*";
      if (params.contains("pattern")) pattern = param(params, "pattern");
      result = snapshot_json(list_callsites(pattern));
    } else if (op == "metrics") {
      result = snapshot_json(list_callsites("*"));
      result["bootstraps"] = image_.stats().bootstraps.load();
      result["methodLookups"] = image_.stats().method_lookups.load();
      result["registryLookups"] = image_.registry().lookup_count();
    } else {
      throw AgentError("unknown-op", fmt::format("unknown operation '{}'", op));
    }
    response["ok"] = true;
    response["result"] = std::move(result);
  } catch (const AgentError& e) {
    response["ok"] = false;
    response["error"] = {{"code", e.code()}, {"message", e.what()}};
  } catch (const std::exception& e) {
    response["ok"] = false;
    response["error"] = {{"code", "bad-params"}, {"message", e.what()}};
  }
  return response;
}

std::string Agent::handle_line(std::string_view line) {
  json request;
  try {
    request = json::parse(line);
  } catch (const json::parse_error& e) {
    ordered_json response;
    response["ok"] = false;
    response["error"] = {{"code", "bad-params"}, {"message", std::string("malformed JSON: ") + e.what()}};
    return response.dump();
  }
  return handle(request).dump();
}

}  // namespace fluxvm
