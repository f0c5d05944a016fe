#include "harness/auditor.hpp"

#include <algorithm>
#include <set>

namespace harness {

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

json ConversionEvent::to_json() const {
  json tags = json::array();
  for (auto h : harness_functions) tags.push_back(to_string(h));
  return json{{"kind", to_string(kind)},
              {"signal_ref", signal_ref},
              {"signal_iteration", signal_iteration},
              {"trace_path", trace_path},
              {"update_ref", update_ref},
              {"update_iteration", update_iteration},
              {"latency", latency},
              {"harness_functions", tags}};
}

int TransitionMatrix::at(StageGroup from, StageGroup to) const {
  auto it = counts.find({from, to});
  return it == counts.end() ? 0 : it->second;
}

int TransitionMatrix::total() const {
  int sum = 0;
  for (const auto& [_, n] : counts) sum += n;
  return sum;
}

json TransitionMatrix::to_json() const {
  json rows = json::array();
  for (const auto& [key, n] : counts)
    rows.push_back(json{{"from", to_string(key.first)},
                        {"to", to_string(key.second)},
                        {"count", n}});
  return rows;
}

json ReviewActionRow::to_json() const {
  json j{{"iteration", iteration}, {"movement", movement}};
  if (!project.empty()) j["project"] = project;
  if (score) j["score"] = *score;
  if (delta) j["delta"] = *delta;
  if (high_severity_issue_count)
    j["high_severity_issue_count"] = *high_severity_issue_count;
  if (focus_item_count) j["focus_item_count"] = *focus_item_count;
  if (next_plan_task_mix) j["next_plan_task_mix"] = *next_plan_task_mix;
  return j;
}

json FailureRow::to_json() const {
  json j{{"finding_id", finding_id},
         {"failure_class", failure_class},
         {"signal_artifacts", signal_artifacts},
         {"catch_mechanism", catch_mechanism},
         {"later_update", later_update}};
  if (latency >= 0) j["latency"] = latency;
  return j;
}

// ---------------------------------------------------------------------------
// auditor
// ---------------------------------------------------------------------------

ConversionAuditor::ConversionAuditor(const fs::path& root)
    : ws_(Workspace::open(root, Workspace::Mode::read_only)) {}

namespace {

struct SignalInfo {
  int iteration = 0;
  std::vector<std::string> artifacts;
  HfSet hf;
};

HfSet hf_union(const HfSet& a, const HfSet& b) {
  std::set<int> seen;
  for (auto h : a) seen.insert(static_cast<int>(h));
  for (auto h : b) seen.insert(static_cast<int>(h));
  HfSet out;
  for (int v : seen) out.push_back(static_cast<HarnessFunction>(v));
  return out;
}

// Signal classes by citation strength; an update converts the strongest
// class it cites, weaker refs join the trace path.
int ref_priority(const std::string& ref) {
  if (ref.rfind("finding:", 0) == 0) return 1;
  if (ref.rfind("issue:", 0) == 0) return 2;
  if (ref.rfind("objection:", 0) == 0) return 3;
  if (ref.rfind("event:", 0) == 0) return 4;
  if (ref.rfind("artifact:", 0) == 0) return 5;
  return 9;
}

bool is_update_event(const EventRecord& e) {
  if (e.kind == EventKind::harness_update) return true;
  if (e.kind == EventKind::rollback)
    return !e.payload.value("noop", false);
  if (e.kind == EventKind::task_update) {
    std::string action = e.payload.value("action", std::string{});
    return action == "plan-mutation" || action == "claim-demote";
  }
  return false;
}

std::vector<json> load_record_files(const fs::path& dir) {
  std::vector<json> out;
  if (!fs::exists(dir)) return out;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) out.push_back(read_json_file(f));
  return out;
}

} // namespace

ConversionReport ConversionAuditor::extract_conversions() const {
  ConversionReport report;
  const auto& events = ws_.events();

  // Signal indexes.
  std::map<std::string, SignalInfo> signals;
  for (const auto& e : events) {
    if (e.kind == EventKind::validator_finding) {
      std::string id = e.payload.value("id", std::string{});
      if (id.empty()) continue;
      SignalInfo s;
      s.iteration = e.iteration;
      s.artifacts = e.payload.value("offending_artifacts",
                                    std::vector<std::string>{});
      s.hf = e.hf;
      signals["finding:" + id] = s;
    }
    if (e.kind == EventKind::task_update &&
        e.payload.value("action", std::string{}) == "issue") {
      std::string id = e.payload.value("issue", std::string{});
      if (id.empty() || signals.count("issue:" + id)) continue;
      SignalInfo s;
      s.iteration = e.iteration;
      s.artifacts = e.payload_refs;
      s.hf = e.hf;
      signals["issue:" + id] = s;
    }
    if (e.kind == EventKind::task_update &&
        e.payload.value("action", std::string{}) == "objection-raised") {
      std::string id = e.payload.value("objection", std::string{});
      if (id.empty()) continue;
      SignalInfo s;
      s.iteration = e.iteration;
      s.hf = e.hf;
      signals["objection:" + id] = s;
    }
  }
  // Issue records may predate this workspace's events (global imports).
  for (const auto& j : load_record_files(ws_.memory_dir() / "issues")) {
    std::string key = "issue:" + j.value("id", std::string{});
    if (signals.count(key)) continue;
    SignalInfo s;
    s.iteration = j.value("first_iteration", 0);
    s.artifacts = j.value("source_refs", std::vector<std::string>{});
    s.hf = {HarnessFunction::h4};
    signals[key] = s;
  }

  auto resolve_signal = [&](const std::string& ref)
      -> std::optional<SignalInfo> {
    auto it = signals.find(ref);
    if (it != signals.end()) return it->second;
    if (ref.rfind("artifact:", 0) == 0) {
      auto a = ws_.find_artifact(ref.substr(9));
      if (!a) return std::nullopt;
      SignalInfo s;
      s.iteration = a->iteration;
      return s;
    }
    if (ref.rfind("event:", 0) == 0) {
      std::uint64_t seq = std::stoull(ref.substr(6));
      for (const auto& e : events)
        if (e.seq == seq) {
          SignalInfo s;
          s.iteration = e.iteration;
          s.hf = e.hf;
          for (const auto& r : e.cause_refs)
            if (r.rfind("artifact:", 0) == 0) s.artifacts.push_back(r.substr(9));
          return s;
        }
      return std::nullopt;
    }
    return std::nullopt;
  };

  std::vector<int> latencies;
  for (const auto& e : events) {
    if (!is_update_event(e) || e.cause_refs.empty()) continue;

    int best = 10;
    for (const auto& r : e.cause_refs)
      best = std::min(best, ref_priority(r));

    for (const auto& r : e.cause_refs) {
      if (ref_priority(r) != best) continue;
      auto signal = resolve_signal(r);
      if (!signal) {
        report.broken_traces.push_back("event:" + std::to_string(e.seq) +
                                       " cites unresolvable " + r);
        continue;
      }
      int latency = e.iteration - signal->iteration;
      if (latency < 0) {
        report.broken_traces.push_back("event:" + std::to_string(e.seq) +
                                       " precedes its signal " + r);
        continue;
      }
      ConversionEvent c;
      c.kind = e.kind == EventKind::harness_update ? ConversionKind::harness
                                                   : ConversionKind::behavior;
      c.signal_ref = r;
      c.signal_iteration = signal->iteration;
      c.trace_path.push_back(r);
      for (const auto& a : signal->artifacts)
        c.trace_path.push_back(a.rfind(':') == std::string::npos
                                   ? "artifact:" + a
                                   : a);
      for (const auto& other : e.cause_refs)
        if (other != r && ref_priority(other) > best)
          c.trace_path.push_back(other);
      c.update_ref = "event:" + std::to_string(e.seq);
      c.trace_path.push_back(c.update_ref);
      c.update_iteration = e.iteration;
      c.latency = latency;
      c.harness_functions = hf_union(signal->hf, e.hf);
      latencies.push_back(latency);
      report.events.push_back(std::move(c));
    }
  }

  report.summary.count = static_cast<int>(report.events.size());
  if (!latencies.empty()) {
    std::sort(latencies.begin(), latencies.end());
    report.summary.median_latency = latencies[(latencies.size() - 1) / 2];
    report.summary.max_latency = latencies.back();
  }
  return report;
}

TransitionMatrix ConversionAuditor::transition_matrix() const {
  TransitionMatrix m;
  const auto& events = ws_.events();
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].kind != EventKind::stage_end) continue;
    for (std::size_t j = i + 1; j < events.size(); ++j) {
      if (events[j].kind != EventKind::stage_start) continue;
      m.counts[{stage_group(events[i].stage), stage_group(events[j].stage)}]++;
      break;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// review-to-action
// ---------------------------------------------------------------------------

std::string classify_task_category(const std::string& text) {
  auto contains_any = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys)
      if (text.find(k) != std::string::npos) return true;
    return false;
  };
  if (contains_any({"validat", "verif", "artifact", "cross-check",
                    "consistency", "integrity", "manifest", "repair"}))
    return "validation/artifact";
  if (contains_any({"gate", "telemetry", "scheduler", "harness", "infra",
                    "pipeline", "overlay", "sanity"}))
    return "harness/system";
  if (contains_any({"claim", "writ", "draft", "scope", "narrative", "paper"}))
    return "claim/writing";
  if (contains_any({"experiment", "ablation", "baseline", "control", "sweep",
                    "replicat", "pilot", "run", "train", "measure"}))
    return "experiment/control";
  return "other";
}

ReviewActionReport ConversionAuditor::review_to_action() const {
  ReviewActionReport report;

  struct ReviewDoc {
    int iteration;
    std::string project;
    std::optional<double> score;
    std::optional<int> high_sev;
  };
  struct PlanDoc {
    int iteration;
    std::string project;
    std::vector<std::string> task_texts;
  };
  std::vector<ReviewDoc> reviews;
  std::map<std::pair<std::string, int>, std::optional<int>> focus; // action plans
  std::vector<PlanDoc> plans;

  for (const auto& a : ws_.artifacts()) {
    json content;
    try {
      content = read_json_file(ws_.artifact_file(a));
    } catch (const IoError&) {
      continue;
    }
    if (!content.is_object()) continue;
    std::string project = content.value("project", std::string{});
    if (a.kind == ArtifactKind::review) {
      ReviewDoc d;
      d.iteration = a.iteration;
      d.project = project;
      if (content.contains("score") && content["score"].is_number())
        d.score = content["score"].get<double>();
      if (content.contains("issues")) {
        int n = 0;
        for (const auto& issue : content["issues"]) {
          std::string sev = issue.value("severity", std::string{});
          if (sev == "high" || sev == "critical") ++n;
        }
        d.high_sev = n;
      }
      reviews.push_back(d);
    } else if (a.kind == ArtifactKind::action_plan) {
      auto key = std::make_pair(project, a.iteration);
      if (content.contains("focus_items"))
        focus[key] = static_cast<int>(content["focus_items"].size());
      else if (!focus.count(key))
        focus[key] = std::nullopt;
    } else if (a.kind == ArtifactKind::plan) {
      PlanDoc d;
      d.iteration = content.value("iteration", a.iteration);
      d.project = project;
      for (const auto& t : content.value("tasks", json::array()))
        d.task_texts.push_back(t.value("id", std::string{}) + " " +
                               t.value("question", std::string{}));
      plans.push_back(d);
    }
  }
  std::stable_sort(reviews.begin(), reviews.end(),
                   [](const ReviewDoc& a, const ReviewDoc& b) {
                     if (a.project != b.project) return a.project < b.project;
                     return a.iteration < b.iteration;
                   });

  for (const auto& r : reviews) {
    auto fkey = std::make_pair(r.project, r.iteration);
    if (!focus.count(fkey)) continue; // review without an action plan: no row
    if (!r.score) continue;           // unscored reviews are not rows

    ReviewActionRow row;
    row.iteration = r.iteration;
    row.project = r.project;
    row.score = r.score;
    row.high_severity_issue_count = r.high_sev;
    row.focus_item_count = focus[fkey];

    std::optional<double> prior;
    for (const auto& earlier : reviews)
      if (earlier.project == r.project && earlier.iteration < r.iteration &&
          earlier.score)
        prior = earlier.score;
    if (!prior) {
      row.movement = "no-prior";
    } else {
      double delta = *r.score - *prior;
      row.delta = delta;
      if (std::abs(delta) <= kReviewFlatThreshold)
        row.movement = "flat";
      else
        row.movement = delta < 0 ? "down" : "up";
    }

    for (const auto& p : plans) {
      if (p.project != r.project || p.iteration != r.iteration + 1) continue;
      std::map<std::string, int> mix;
      for (const auto& text : p.task_texts) mix[classify_task_category(text)]++;
      row.next_plan_task_mix = mix;
      break;
    }
    report.rows.push_back(std::move(row));
  }

  for (const auto& movement : {"down", "flat", "up", "no-prior"}) {
    MovementAggregate agg;
    double delta_sum = 0, hs_sum = 0, focus_sum = 0;
    int hs_n = 0, focus_n = 0, delta_n = 0;
    for (const auto& row : report.rows) {
      if (row.movement != movement) continue;
      agg.rows++;
      if (row.delta) {
        delta_sum += *row.delta;
        delta_n++;
      }
      if (row.high_severity_issue_count) {
        hs_sum += *row.high_severity_issue_count;
        hs_n++;
      }
      if (row.focus_item_count) {
        focus_sum += *row.focus_item_count;
        focus_n++;
      }
      if (row.next_plan_task_mix) {
        agg.visible_plans++;
        for (const auto& [cat, n] : *row.next_plan_task_mix)
          agg.task_mix[cat] += n;
      }
    }
    agg.mean_delta = delta_n ? delta_sum / delta_n : 0.0;
    agg.mean_high_severity = hs_n ? hs_sum / hs_n : 0.0;
    agg.mean_focus_items = focus_n ? focus_sum / focus_n : 0.0;
    report.by_movement[movement] = agg;
  }
  return report;
}

std::vector<FailureRow> ConversionAuditor::failure_registry() const {
  std::vector<FailureRow> rows;
  ConversionReport conversions = extract_conversions();
  for (const auto& e : ws_.events()) {
    if (e.kind != EventKind::validator_finding) continue;
    if (e.payload.value("severity", std::string{}) != "critical") continue;
    FailureRow row;
    row.finding_id = e.payload.value("id", std::string{});
    row.failure_class = e.payload.value("failure_class", std::string{});
    row.signal_artifacts =
        e.payload.value("offending_artifacts", std::vector<std::string>{});
    row.catch_mechanism = e.payload.value("validator", std::string{});
    row.later_update = "unconverted";
    for (const auto& c : conversions.events)
      if (c.signal_ref == "finding:" + row.finding_id) {
        row.later_update = c.update_ref;
        row.latency = c.latency;
        break;
      }
    rows.push_back(std::move(row));
  }
  return rows;
}

} // namespace harness
