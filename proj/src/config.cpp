#include "harness/config.hpp"

#include <algorithm>

namespace harness {

std::vector<std::string> actions::all() {
  return {emit_artifact,    create_claim,  promote_claim,
          downgrade_claim,  validate_claim, raise_objection,
          resolve_objection, mutate_plan,   scoped_allow,
          record_spend,     apply_harness_update};
}

// ---------------------------------------------------------------------------
// StagePolicy
// ---------------------------------------------------------------------------

bool StagePolicy::allows(StageId from, StageId to) const {
  auto it = transitions.find(from);
  if (it == transitions.end()) return false;
  return std::find(it->second.begin(), it->second.end(), to) !=
         it->second.end();
}

bool StagePolicy::guarded(StageId from, StageId to) const {
  std::string key = to_string(from) + "->" + to_string(to);
  return std::find(gate_guarded.begin(), gate_guarded.end(), key) !=
         gate_guarded.end();
}

json StagePolicy::to_json() const {
  json t = json::object();
  for (const auto& [from, tos] : transitions) {
    json arr = json::array();
    for (auto s : tos) arr.push_back(to_string(s));
    t[to_string(from)] = arr;
  }
  return json{{"schema_version", kSchemaVersion},
              {"transitions", t},
              {"gate_guarded", gate_guarded},
              {"iteration_close", to_string(iteration_close)},
              {"iteration_open", to_string(iteration_open)}};
}

StagePolicy StagePolicy::from_json(const json& j) {
  StagePolicy p;
  for (const auto& [from, tos] : j.at("transitions").items()) {
    std::vector<StageId> v;
    for (const auto& s : tos) v.push_back(stage_from(s.get<std::string>()));
    p.transitions[stage_from(from)] = v;
  }
  p.gate_guarded = j.at("gate_guarded").get<std::vector<std::string>>();
  p.iteration_close = stage_from(j.at("iteration_close").get<std::string>());
  p.iteration_open = stage_from(j.at("iteration_open").get<std::string>());
  return p;
}

// ---------------------------------------------------------------------------
// GateConfig
// ---------------------------------------------------------------------------

bool GateConfig::is_enabled(ValidatorId v) const {
  return std::find(enabled.begin(), enabled.end(), v) != enabled.end();
}

RecommendedAction GateConfig::action_for(ValidatorId v) const {
  auto it = action_map.find(v);
  return it == action_map.end() ? RecommendedAction::downgrade : it->second;
}

json GateConfig::to_json() const {
  json en = json::array();
  for (auto v : enabled) en.push_back(to_string(v));
  json am = json::object();
  for (const auto& [v, a] : action_map) am[to_string(v)] = to_string(a);
  return json{{"schema_version", kSchemaVersion},
              {"enabled_validators", en},
              {"action_map", am},
              {"stale_tolerance", stale_tolerance}};
}

GateConfig GateConfig::from_json(const json& j) {
  GateConfig g;
  for (const auto& v : j.at("enabled_validators"))
    g.enabled.push_back(validator_from(v.get<std::string>()));
  for (const auto& [k, v] : j.at("action_map").items())
    g.action_map[validator_from(k)] = action_from(v.get<std::string>());
  g.stale_tolerance = j.at("stale_tolerance").get<double>();
  return g;
}

// ---------------------------------------------------------------------------
// RoutingTable
// ---------------------------------------------------------------------------

const std::vector<RoleId>& RoutingTable::roles_for(IssueCategory c) const {
  auto it = routes.find(c);
  if (it == routes.end())
    throw UsageError("routing table has no entry for category " + to_string(c));
  return it->second;
}

void RoutingTable::validate_total() const {
  for (auto c : all_categories()) {
    auto it = routes.find(c);
    if (it == routes.end() || it->second.empty())
      throw UsageError("routing table missing category " + to_string(c));
  }
}

json RoutingTable::to_json() const {
  json r = json::object();
  for (const auto& [c, roles] : routes) {
    json arr = json::array();
    for (auto role : roles) arr.push_back(to_string(role));
    r[to_string(c)] = arr;
  }
  return json{{"schema_version", kSchemaVersion}, {"routes", r}};
}

RoutingTable RoutingTable::from_json(const json& j) {
  RoutingTable t;
  for (const auto& [c, roles] : j.at("routes").items()) {
    std::vector<RoleId> v;
    for (const auto& r : roles) v.push_back(role_from(r.get<std::string>()));
    t.routes[category_from(c)] = v;
  }
  return t;
}

// ---------------------------------------------------------------------------
// AuthorityMatrix
// ---------------------------------------------------------------------------

bool AuthorityMatrix::allowed(RoleId role, const std::string& action) const {
  auto it = grants.find(role);
  if (it == grants.end())
    throw UsageError("authority matrix has no row for " + to_string(role));
  auto jt = it->second.find(action);
  if (jt == it->second.end())
    throw UsageError("authority matrix has no entry for (" + to_string(role) +
                     ", " + action + ")");
  return jt->second;
}

void AuthorityMatrix::validate_total() const {
  for (auto role : all_roles())
    for (const auto& action : actions::all())
      (void)allowed(role, action);
}

json AuthorityMatrix::to_json() const {
  json g = json::object();
  for (const auto& [role, row] : grants) {
    json r = json::object();
    for (const auto& [action, ok] : row) r[action] = ok;
    g[to_string(role)] = r;
  }
  return json{{"schema_version", kSchemaVersion}, {"grants", g}};
}

AuthorityMatrix AuthorityMatrix::from_json(const json& j) {
  AuthorityMatrix m;
  for (const auto& [role, row] : j.at("grants").items())
    for (const auto& [action, ok] : row.items())
      m.grants[role_from(role)][action] = ok.get<bool>();
  return m;
}

// ---------------------------------------------------------------------------
// MemoryParams / EvolutionConfig / SchedulerConfig
// ---------------------------------------------------------------------------

json MemoryParams::to_json() const {
  return json{{"schema_version", kSchemaVersion},
              {"decay_halflife", decay_halflife},
              {"relevance_threshold", relevance_threshold},
              {"global_min_frequency", global_min_frequency},
              {"global_dir", global_dir}};
}

MemoryParams MemoryParams::from_json(const json& j) {
  MemoryParams m;
  m.decay_halflife = j.at("decay_halflife").get<double>();
  m.relevance_threshold = j.at("relevance_threshold").get<double>();
  m.global_min_frequency = j.at("global_min_frequency").get<int>();
  m.global_dir = j.at("global_dir").get<std::string>();
  return m;
}

UpdateKind EvolutionConfig::kind_for(const std::string& failure_class) const {
  auto it = kind_map.find(failure_class);
  return it == kind_map.end() ? fallback : it->second;
}

json EvolutionConfig::to_json() const {
  json km = json::object();
  for (const auto& [k, v] : kind_map) km[k] = to_string(v);
  return json{{"schema_version", kSchemaVersion},
              {"recurrence_threshold", recurrence_threshold},
              {"kind_map", km},
              {"fallback", to_string(fallback)}};
}

EvolutionConfig EvolutionConfig::from_json(const json& j) {
  EvolutionConfig e;
  e.recurrence_threshold = j.at("recurrence_threshold").get<int>();
  for (const auto& [k, v] : j.at("kind_map").items())
    e.kind_map[k] = update_kind_from(v.get<std::string>());
  e.fallback = update_kind_from(j.at("fallback").get<std::string>());
  return e;
}

json SchedulerConfig::to_json() const {
  return json{{"schema_version", kSchemaVersion},
              {"cheap_check_first", cheap_check_first}};
}

SchedulerConfig SchedulerConfig::from_json(const json& j) {
  SchedulerConfig s;
  s.cheap_check_first = j.at("cheap_check_first").get<bool>();
  return s;
}

// ---------------------------------------------------------------------------
// HarnessConfig
// ---------------------------------------------------------------------------

HarnessConfig HarnessConfig::defaults() {
  HarnessConfig c;

  c.stages.transitions = {
      {StageId::ideation, {StageId::planning}},
      {StageId::planning, {StageId::experiment}},
      {StageId::experiment, {StageId::experiment, StageId::validation}},
      {StageId::validation, {StageId::review}},
      {StageId::review, {StageId::review, StageId::reflection}},
      {StageId::reflection, {StageId::writing}},
      {StageId::writing, {StageId::writing, StageId::quality_gate}},
      {StageId::quality_gate, {StageId::ideation}},
  };
  c.stages.gate_guarded = {"writing->quality-gate"};

  c.gate.enabled = all_validators();
  c.gate.action_map = {
      {ValidatorId::duplicate_results, RecommendedAction::repair_task},
      {ValidatorId::ci_inversion, RecommendedAction::repair_task},
      {ValidatorId::stale_number, RecommendedAction::repair_task},
      {ValidatorId::manifest_mismatch, RecommendedAction::repair_task},
      {ValidatorId::unsupported_statistic, RecommendedAction::repair_task},
      {ValidatorId::missing_review, RecommendedAction::block},
      {ValidatorId::pilot_boundary, RecommendedAction::downgrade},
  };

  c.routing.routes = {
      {IssueCategory::experiment, {RoleId::experimenter, RoleId::planner}},
      {IssueCategory::analysis, {RoleId::supervisor, RoleId::critic}},
      {IssueCategory::writing, {RoleId::writer, RoleId::editor}},
      {IssueCategory::system, {RoleId::supervisor, RoleId::scheduler}},
      {IssueCategory::planning, {RoleId::planner}},
      {IssueCategory::pipeline, {RoleId::scheduler, RoleId::experimenter}},
      {IssueCategory::ideation, {RoleId::planner, RoleId::skeptic}},
      {IssueCategory::efficiency, {RoleId::scheduler}},
  };

  auto deny_all = [] {
    std::map<std::string, bool> row;
    for (const auto& a : actions::all()) row[a] = false;
    return row;
  };
  for (auto role : all_roles()) c.authority.grants[role] = deny_all();
  auto grant = [&](RoleId r, std::initializer_list<const char*> as) {
    for (auto a : as) c.authority.grants[r][a] = true;
  };
  grant(RoleId::planner, {actions::emit_artifact, actions::create_claim,
                          actions::mutate_plan, actions::raise_objection,
                          actions::resolve_objection});
  grant(RoleId::experimenter, {actions::emit_artifact, actions::create_claim,
                               actions::record_spend, actions::raise_objection});
  grant(RoleId::critic, {actions::emit_artifact, actions::raise_objection});
  grant(RoleId::skeptic, {actions::emit_artifact, actions::raise_objection});
  grant(RoleId::supervisor,
        {actions::emit_artifact, actions::create_claim, actions::scoped_allow,
         actions::downgrade_claim, actions::resolve_objection,
         actions::raise_objection});
  grant(RoleId::methodologist,
        {actions::emit_artifact, actions::validate_claim, actions::promote_claim,
         actions::raise_objection});
  grant(RoleId::writer, {actions::emit_artifact});
  grant(RoleId::editor, {actions::emit_artifact});
  grant(RoleId::scheduler, {actions::emit_artifact, actions::record_spend});

  c.evolution.kind_map = {
      {"duplicate-results", UpdateKind::gate},
      {"ci-inversion", UpdateKind::repair_task},
      {"stale-number", UpdateKind::gate},
      {"manifest-mismatch", UpdateKind::gate},
      {"unsupported-statistic", UpdateKind::gate},
      {"missing-output", UpdateKind::artifact_contract},
      {"wasteful-pilot", UpdateKind::scheduler_policy},
  };

  return c;
}

std::vector<std::string> HarnessConfig::sections() {
  return {"stages", "gate", "routing", "authority",
          "memory", "evolution", "scheduler"};
}

namespace {
json section_json(const HarnessConfig& c, const std::string& s) {
  if (s == "stages") return c.stages.to_json();
  if (s == "gate") return c.gate.to_json();
  if (s == "routing") return c.routing.to_json();
  if (s == "authority") return c.authority.to_json();
  if (s == "memory") return c.memory.to_json();
  if (s == "evolution") return c.evolution.to_json();
  if (s == "scheduler") return c.scheduler.to_json();
  throw UsageError("unknown config section " + s);
}
} // namespace

void HarnessConfig::install(const Workspace& ws) const {
  for (const auto& s : sections())
    write_json_file(ws.config_dir() / (s + ".json"), section_json(*this, s));
}

void HarnessConfig::save_section(const Workspace& ws,
                                 const std::string& section) const {
  write_json_file(ws.config_dir() / (section + ".json"),
                  section_json(*this, section));
}

HarnessConfig HarnessConfig::load(const Workspace& ws) {
  HarnessConfig c;
  const fs::path dir = ws.config_dir();
  c.stages = StagePolicy::from_json(read_json_file(dir / "stages.json"));
  c.gate = GateConfig::from_json(read_json_file(dir / "gate.json"));
  c.routing = RoutingTable::from_json(read_json_file(dir / "routing.json"));
  c.authority = AuthorityMatrix::from_json(read_json_file(dir / "authority.json"));
  c.memory = MemoryParams::from_json(read_json_file(dir / "memory.json"));
  c.evolution = EvolutionConfig::from_json(read_json_file(dir / "evolution.json"));
  c.scheduler = SchedulerConfig::from_json(read_json_file(dir / "scheduler.json"));
  c.routing.validate_total();
  c.authority.validate_total();
  return c;
}

} // namespace harness
