"""Smoke tests for the pyharness extension module."""

import json
import os
import shutil
import sys
import tempfile

import pyharness


def main() -> int:
    scratch = tempfile.mkdtemp(prefix="pyharness-smoke-")
    scenario_dir = os.environ["HARNESS_SCENARIO_DIR"]
    try:
        # Workspace lifecycle and artifact registration.
        ws = pyharness.Workspace.init(os.path.join(scratch, "ws"))
        assert ws.iteration == 0 and ws.stage == "ideation"
        record = ws.register_artifact(
            "results/metrics.json", "result-table", "experimenter", 0,
            {"values": {"accuracy": 0.91}})
        assert record["id"].startswith("a-")
        assert len(record["content_hash"]) == 64
        assert any(a["id"] == record["id"] for a in ws.artifacts())
        assert ws.events()[0]["kind"] == "stage-start"
        snapshot = ws.state_snapshot()
        del ws
        reopened = pyharness.Workspace.open(os.path.join(scratch, "ws"))
        assert reopened.state_snapshot() == snapshot

        # A full scripted run plus the audit surface.
        report = pyharness.run_scenario(
            os.path.join(scenario_dir, "five-class-injection.scenario.json"),
            os.path.join(scratch, "run"))
        assert report["passed"], json.dumps(report, indent=2)
        assert report["critical_findings"] == 5

        audit = pyharness.audit(os.path.join(scratch, "run"))
        assert len(audit["failures"]) == 5
        assert all(row["later_update"] != "unconverted"
                   for row in audit["failures"])

        # Fixture generation reproduces the published statistics.
        manifests = pyharness.build_fixtures(os.path.join(scratch, "fx"))
        names = {m["name"] for m in manifests}
        assert "conversion-sample" in names and "issue-digest" in names
        digest_ws = pyharness.Workspace.open(
            os.path.join(scratch, "fx", "issue-digest"))
        digest = digest_ws.memory_digest()
        assert digest["experiment"] == 212 and sum(digest.values()) == 416

        conv = pyharness.audit(os.path.join(scratch, "fx", "conversion-sample"))
        assert conv["summary"]["count"] == 8
        assert conv["summary"]["median_latency"] == 1
        assert conv["summary"]["max_latency"] == 3

        print("pyharness smoke: ok")
        return 0
    finally:
        shutil.rmtree(scratch, ignore_errors=True)


if __name__ == "__main__":
    sys.exit(main())
