#include "harness/memory.hpp"

#include <algorithm>
#include <cmath>

namespace harness {

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

json IssueRecord::to_json() const {
  json roles = json::array();
  for (auto r : affected_roles) roles.push_back(to_string(r));
  return json{{"schema_version", kSchemaVersion},
              {"id", id},
              {"category", to_string(category)},
              {"severity", to_string(severity)},
              {"failure_class", failure_class},
              {"frequency", frequency},
              {"affected_roles", roles},
              {"suggested_action", suggested_action},
              {"source_refs", source_refs},
              {"status", to_string(status)},
              {"first_iteration", first_iteration},
              {"last_iteration", last_iteration}};
}

IssueRecord IssueRecord::from_json(const json& j) {
  IssueRecord i;
  i.id = j.at("id").get<std::string>();
  i.category = category_from(j.at("category").get<std::string>());
  i.severity = severity_from(j.at("severity").get<std::string>());
  i.failure_class = j.at("failure_class").get<std::string>();
  i.frequency = j.at("frequency").get<int>();
  for (const auto& r : j.value("affected_roles", json::array()))
    i.affected_roles.push_back(role_from(r.get<std::string>()));
  i.suggested_action = j.value("suggested_action", std::string{});
  i.source_refs = j.value("source_refs", std::vector<std::string>{});
  i.status = issue_status_from(j.at("status").get<std::string>());
  i.first_iteration = j.value("first_iteration", 0);
  i.last_iteration = j.value("last_iteration", 0);
  return i;
}

double LessonOverlay::decayed(int iteration) const {
  int delta = iteration - updated_iteration;
  if (delta <= 0) return relevance;
  return relevance * std::exp2(-static_cast<double>(delta) / decay_halflife);
}

json LessonOverlay::to_json() const {
  return json{{"schema_version", kSchemaVersion},
              {"id", id},
              {"role", to_string(role)},
              {"lesson", lesson},
              {"relevance", relevance},
              {"decay_halflife", decay_halflife},
              {"reopen_criteria", reopen_criteria},
              {"source_issues", source_issues},
              {"updated_iteration", updated_iteration}};
}

LessonOverlay LessonOverlay::from_json(const json& j) {
  LessonOverlay o;
  o.id = j.at("id").get<std::string>();
  o.role = role_from(j.at("role").get<std::string>());
  o.lesson = j.at("lesson").get<std::string>();
  o.relevance = j.at("relevance").get<double>();
  o.decay_halflife = j.at("decay_halflife").get<double>();
  o.reopen_criteria = j.value("reopen_criteria", std::string{});
  o.source_issues = j.value("source_issues", std::vector<std::string>{});
  o.updated_iteration = j.value("updated_iteration", 0);
  return o;
}

// ---------------------------------------------------------------------------
// router
// ---------------------------------------------------------------------------

namespace {

std::string normalize_class(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.erase(s.begin());
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.pop_back();
  return s;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                         prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

template <typename T>
void load_records(const fs::path& dir, std::vector<T>& out) {
  if (!fs::exists(dir)) return;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) out.push_back(T::from_json(read_json_file(f)));
}

} // namespace

MemoryRouter::MemoryRouter(Workspace& ws, const HarnessConfig& cfg)
    : ws_(ws), cfg_(cfg) {
  load_records(ws_.memory_dir() / "issues", issues_);
  load_records(ws_.memory_dir() / "overlays", overlays_);
}

fs::path MemoryRouter::global_dir() const {
  if (!cfg_.memory.global_dir.empty()) return cfg_.memory.global_dir;
  return ws_.memory_dir() / "global";
}

void MemoryRouter::persist_issue(const IssueRecord& i) {
  fs::create_directories(ws_.memory_dir() / "issues");
  write_json_file(ws_.memory_dir() / "issues" / (i.id + ".json"), i.to_json());
}

void MemoryRouter::persist_overlay(const LessonOverlay& o) {
  fs::create_directories(ws_.memory_dir() / "overlays");
  write_json_file(ws_.memory_dir() / "overlays" / (o.id + ".json"),
                  o.to_json());
}

void MemoryRouter::write_global(const IssueRecord& i) {
  fs::path dir = global_dir();
  fs::create_directories(dir);
  // Global records are keyed by content, not by workspace-local id.
  std::string key = to_string(i.category) + "--" + i.failure_class;
  std::replace_if(
      key.begin(), key.end(),
      [](char c) { return !std::isalnum(static_cast<unsigned char>(c)) && c != '-'; },
      '_');
  json j = i.to_json();
  if (fs::exists(dir / (key + ".json"))) {
    json prior = read_json_file(dir / (key + ".json"));
    j["frequency"] =
        std::max(i.frequency, prior.value("frequency", 0));
  }
  write_json_file(dir / (key + ".json"), j);
}

IssueRecord* MemoryRouter::find_by_key(IssueCategory c,
                                       const std::string& failure_class) {
  for (auto& i : issues_)
    if (i.category == c && i.failure_class == failure_class) return &i;
  return nullptr;
}

std::optional<IssueRecord>
MemoryRouter::find_issue(const std::string& id) const {
  for (const auto& i : issues_)
    if (i.id == id) return i;
  return std::nullopt;
}

IssueCategory MemoryRouter::coerce_category(const std::string& raw,
                                            bool& coerced) const {
  if (auto c = category_try_from(raw)) {
    coerced = false;
    return *c;
  }
  coerced = true;
  IssueCategory best = IssueCategory::system;
  std::size_t best_d = ~std::size_t{0};
  for (auto c : all_categories()) {
    std::size_t d = edit_distance(raw, to_string(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::vector<IssueRecord>
MemoryRouter::normalize(const ArtifactRecord& reflection) {
  json content = read_json_file(ws_.artifact_file(reflection));
  std::vector<IssueRecord> touched;
  int iteration = ws_.current_iteration();

  for (const auto& entry : content.value("issues", json::array())) {
    bool coerced = false;
    IssueCategory category =
        coerce_category(entry.value("category", std::string{"system"}),
                        coerced);
    std::string failure_class =
        normalize_class(entry.value("failure_class", std::string{}));
    Severity severity =
        severity_from(entry.value("severity", std::string{"minor"}));

    IssueRecord* existing = find_by_key(category, failure_class);
    IssueRecord* rec = nullptr;
    if (existing) {
      existing->frequency += 1;
      existing->last_iteration = iteration;
      if (existing->status == IssueStatus::addressed) {
        // Re-open criterion: the same failure class recurred.
        existing->status = IssueStatus::reopened;
        for (auto& o : overlays_)
          if (std::find(o.source_issues.begin(), o.source_issues.end(),
                        existing->id) != o.source_issues.end()) {
            o.relevance = 1.0;
            o.updated_iteration = iteration;
            persist_overlay(o);
          }
      }
      rec = existing;
    } else {
      IssueRecord i;
      i.id = ws_.next_record_id("i");
      i.category = category;
      i.severity = severity;
      i.failure_class = failure_class;
      i.suggested_action = entry.value("suggested_action", std::string{});
      i.first_iteration = iteration;
      i.last_iteration = iteration;
      issues_.push_back(i);
      rec = &issues_.back();
    }
    for (const auto& r : entry.value("refs", json::array()))
      rec->source_refs.push_back(r.get<std::string>());
    if (rec->source_refs.empty()) rec->source_refs.push_back(reflection.id);
    for (auto role : cfg_.routing.roles_for(category))
      if (std::find(rec->affected_roles.begin(), rec->affected_roles.end(),
                    role) == rec->affected_roles.end())
        rec->affected_roles.push_back(role);
    persist_issue(*rec);
    if (rec->frequency >= cfg_.memory.global_min_frequency) write_global(*rec);

    EventRecord ev;
    ev.iteration = iteration;
    ev.stage = ws_.current_stage();
    ev.kind = EventKind::task_update;
    ev.payload = json{{"action", "issue"},
                      {"issue", rec->id},
                      {"category", to_string(category)},
                      {"failure_class", failure_class},
                      {"frequency", rec->frequency}};
    if (coerced) ev.payload["note"] = "category coerced";
    ev.payload_refs = rec->source_refs;
    ev.hf = {HarnessFunction::h4};
    ws_.append_event(std::move(ev));

    touched.push_back(*rec);
  }
  return touched;
}

std::vector<LessonOverlay> MemoryRouter::route(const IssueRecord& issue) {
  std::vector<LessonOverlay> out;
  int iteration = ws_.current_iteration();
  for (auto role : cfg_.routing.roles_for(issue.category)) {
    LessonOverlay* existing = nullptr;
    for (auto& o : overlays_)
      if (o.role == role &&
          std::find(o.source_issues.begin(), o.source_issues.end(), issue.id) !=
              o.source_issues.end())
        existing = &o;
    if (existing) {
      existing->relevance = 1.0; // reinforcement resets decay
      existing->updated_iteration = iteration;
      persist_overlay(*existing);
      out.push_back(*existing);
      continue;
    }
    LessonOverlay o;
    o.id = ws_.next_record_id("ov");
    o.role = role;
    o.lesson = issue.suggested_action.empty() ? issue.failure_class
                                              : issue.suggested_action;
    o.relevance = 1.0;
    o.decay_halflife = cfg_.memory.decay_halflife;
    o.reopen_criteria = "recurrence of failure class '" + issue.failure_class +
                        "' re-opens this lesson";
    o.source_issues = {issue.id};
    o.updated_iteration = iteration;
    overlays_.push_back(o);
    persist_overlay(o);
    out.push_back(o);
  }
  return out;
}

std::vector<LessonOverlay> MemoryRouter::overlays_for(RoleId role,
                                                      int iteration) const {
  std::vector<LessonOverlay> out;
  for (const auto& o : overlays_) {
    if (o.role != role) continue;
    double r = o.decayed(iteration);
    if (r < cfg_.memory.relevance_threshold) continue;
    LessonOverlay copy = o;
    copy.relevance = r;
    out.push_back(copy);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const LessonOverlay& a, const LessonOverlay& b) {
                     if (a.relevance != b.relevance)
                       return a.relevance > b.relevance;
                     return a.id < b.id;
                   });
  return out;
}

std::map<IssueCategory, int> MemoryRouter::digest() const {
  std::map<IssueCategory, int> counts;
  for (auto c : all_categories()) counts[c] = 0;
  for (const auto& i : issues_) counts[i.category] += 1;
  return counts;
}

void MemoryRouter::close_issue(const std::string& id) {
  for (auto& i : issues_)
    if (i.id == id) {
      i.status = IssueStatus::addressed;
      persist_issue(i);
      return;
    }
  throw UsageError("no such issue: " + id);
}

std::vector<IssueRecord> MemoryRouter::sync_global() {
  std::vector<IssueRecord> imported;
  fs::path dir = global_dir();
  if (!fs::exists(dir)) return imported;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    IssueRecord g = IssueRecord::from_json(read_json_file(f));
    if (find_by_key(g.category, g.failure_class)) continue;
    IssueRecord local = g;
    local.id = ws_.next_record_id("i");
    local.first_iteration = ws_.current_iteration();
    local.last_iteration = ws_.current_iteration();
    local.source_refs = {"global:" + f.filename().string()};
    issues_.push_back(local);
    persist_issue(local);
    route(local);
    imported.push_back(local);
  }
  return imported;
}

} // namespace harness
