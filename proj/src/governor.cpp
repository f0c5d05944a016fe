#include "harness/governor.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace harness {

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

bool SanityCheck::guards(const TaskRecord& t) const {
  if (t.scale != guard_scale) return false;
  return t.id.find(guard_keyword) != std::string::npos ||
         t.question.find(guard_keyword) != std::string::npos;
}

json SanityCheck::to_json() const {
  return json{{"id", id},
              {"guard_keyword", guard_keyword},
              {"guard_scale", to_string(guard_scale)},
              {"cost_units", cost_units},
              {"origin_spend", origin_spend}};
}

SanityCheck SanityCheck::from_json(const json& j) {
  SanityCheck s;
  s.id = j.at("id").get<std::string>();
  s.guard_keyword = j.at("guard_keyword").get<std::string>();
  s.guard_scale = scale_from(j.at("guard_scale").get<std::string>());
  s.cost_units = j.at("cost_units").get<double>();
  s.origin_spend = j.at("origin_spend").get<std::string>();
  return s;
}

json Spend::to_json() const {
  return json{{"task_id", task_id},
              {"units", units},
              {"outcome", to_string(outcome)},
              {"seq", seq}};
}

Spend Spend::from_json(const json& j) {
  Spend s;
  s.task_id = j.at("task_id").get<std::string>();
  s.units = j.at("units").get<double>();
  s.outcome = spend_outcome_from(j.at("outcome").get<std::string>());
  s.seq = j.at("seq").get<std::uint64_t>();
  return s;
}

double BudgetLedger::spent() const {
  double sum = 0;
  for (const auto& s : spends) sum += s.units;
  return sum;
}

double BudgetLedger::remaining() const { return total_units - spent(); }

json BudgetLedger::to_json() const {
  json sp = json::array(), sc = json::array();
  for (const auto& s : spends) sp.push_back(s.to_json());
  for (const auto& c : sanity_checks) sc.push_back(c.to_json());
  return json{{"schema_version", kSchemaVersion},
              {"total_units", total_units},
              {"spends", sp},
              {"sanity_checks", sc}};
}

BudgetLedger BudgetLedger::from_json(const json& j) {
  BudgetLedger l;
  l.total_units = j.at("total_units").get<double>();
  for (const auto& s : j.value("spends", json::array()))
    l.spends.push_back(Spend::from_json(s));
  for (const auto& c : j.value("sanity_checks", json::array()))
    l.sanity_checks.push_back(SanityCheck::from_json(c));
  return l;
}

std::optional<std::size_t>
ScheduleResult::layer_of(const std::string& id) const {
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (std::find(layers[i].begin(), layers[i].end(), id) != layers[i].end())
      return i;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// governor
// ---------------------------------------------------------------------------

ResourceGovernor::ResourceGovernor(Workspace& ws) : ws_(ws) {
  fs::path f = ws_.registry_dir() / "budget" / "ledger.json";
  if (fs::exists(f)) ledger_ = BudgetLedger::from_json(read_json_file(f));
}

void ResourceGovernor::persist() {
  fs::create_directories(ws_.registry_dir() / "budget");
  write_json_file(ws_.registry_dir() / "budget" / "ledger.json",
                  ledger_.to_json());
}

void ResourceGovernor::set_total(double units) {
  if (units < ledger_.spent())
    throw UsageError("total below the amount already spent");
  ledger_.total_units = units;
  persist();
}

ScheduleResult ResourceGovernor::schedule(const Plan& plan) const {
  if (!plan_is_acyclic(plan)) throw UsageError("plan has a dependency cycle");
  ScheduleResult result;

  // Checks become virtual prerequisites of the tasks they guard.
  std::map<std::string, std::vector<std::string>> deps;
  std::map<std::string, double> cost;
  std::set<std::string> check_ids;
  for (const auto& t : plan) {
    deps[t.id] = t.dependencies;
    cost[t.id] = t.budget_units;
  }
  for (const auto& c : ledger_.sanity_checks)
    for (const auto& t : plan)
      if (c.guards(t)) {
        deps[c.id]; // ensure node
        cost[c.id] = c.cost_units;
        check_ids.insert(c.id);
        deps[t.id].push_back(c.id);
      }

  // Longest-path depth over the augmented DAG.
  std::map<std::string, int> depth;
  std::function<int(const std::string&)> depth_of =
      [&](const std::string& id) -> int {
    auto it = depth.find(id);
    if (it != depth.end()) return it->second;
    int d = 0;
    for (const auto& dep : deps[id])
      if (deps.count(dep)) d = std::max(d, depth_of(dep) + 1);
    depth[id] = d;
    return d;
  };
  for (const auto& [id, _] : deps) depth_of(id);

  // Budget: allocate in layer order; an over-budget task defers, and so
  // does anything depending on it.
  std::vector<std::pair<int, std::string>> ordered;
  for (const auto& [id, d] : depth) ordered.push_back({d, id});
  std::sort(ordered.begin(), ordered.end());
  std::set<std::string> deferred;
  double allocatable = ledger_.remaining();
  for (const auto& [d, id] : ordered) {
    std::string blocked_on;
    for (const auto& dep : deps[id])
      if (deferred.count(dep)) blocked_on = dep;
    if (!blocked_on.empty()) {
      deferred.insert(id);
      result.deferred.push_back({id, "depends on deferred " + blocked_on});
      continue;
    }
    if (cost[id] > allocatable) {
      deferred.insert(id);
      result.deferred.push_back(
          {id, "budget " + std::to_string(cost[id]) + " exceeds remaining " +
                   std::to_string(allocatable)});
      continue;
    }
    allocatable -= cost[id];
    if (static_cast<std::size_t>(d) >= result.layers.size())
      result.layers.resize(d + 1);
    result.layers[d].push_back(id);
  }
  for (auto& layer : result.layers) std::sort(layer.begin(), layer.end());
  return result;
}

SpendResult ResourceGovernor::record_outcome(
    const TaskRecord& task, double units, SpendOutcome outcome,
    const std::vector<std::string>& evidence_refs) {
  SpendResult result;
  if (units > ledger_.remaining()) {
    result.accepted = false;
    result.reason = "spend " + std::to_string(units) + " exceeds remaining " +
                    std::to_string(ledger_.remaining());
    EventRecord ev;
    ev.iteration = ws_.current_iteration();
    ev.stage = ws_.current_stage();
    ev.kind = EventKind::budget_spend;
    ev.payload = json{{"task", task.id},
                      {"units", units},
                      {"rejected", true},
                      {"reason", result.reason}};
    ev.hf = {HarnessFunction::h6};
    ws_.append_event(std::move(ev));
    return result;
  }

  EventRecord ev;
  ev.iteration = ws_.current_iteration();
  ev.stage = ws_.current_stage();
  ev.kind = EventKind::budget_spend;
  ev.payload = json{{"task", task.id},
                    {"units", units},
                    {"outcome", to_string(outcome)}};
  ev.cause_refs = evidence_refs;
  ev.hf = {HarnessFunction::h6};
  std::uint64_t seq = ws_.append_event(std::move(ev));

  ledger_.spends.push_back({task.id, units, outcome, seq});
  result.accepted = true;

  if (outcome == SpendOutcome::wasteful && task.proxy_check) {
    bool already = false;
    for (const auto& c : ledger_.sanity_checks)
      if (c.guard_keyword == task.proxy_check->guard_keyword &&
          c.guard_scale == task.proxy_check->guard_scale)
        already = true;
    if (!already) {
      SanityCheck check;
      check.id = ws_.next_record_id("sc");
      check.guard_keyword = task.proxy_check->guard_keyword;
      check.guard_scale = task.proxy_check->guard_scale;
      check.cost_units = task.proxy_check->cost_units;
      check.origin_spend = "event:" + std::to_string(seq);
      ledger_.sanity_checks.push_back(check);
      result.registered_check = check;

      EventRecord up;
      up.iteration = ws_.current_iteration();
      up.stage = ws_.current_stage();
      up.kind = EventKind::harness_update;
      up.payload = json{{"update", "sanity-check"},
                        {"check", check.to_json()},
                        {"task", task.id}};
      up.cause_refs = evidence_refs;
      up.cause_refs.push_back(check.origin_spend);
      up.hf = {HarnessFunction::h6, HarnessFunction::h7};
      ws_.append_event(std::move(up));
    }
  }
  persist();
  return result;
}

} // namespace harness
