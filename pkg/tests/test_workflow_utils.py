import json

import numpy as np

from utils.io_utils import write_csv, write_json
from utils.workflow_utils import StepStatus, WorkflowState, WorkflowStatus, format_workflow_report


def make_state():
    state = WorkflowState("verify")
    state.start_workflow()
    state.add_step("nu_trace", "trace of nu", '§3, "This follows from a direct computation"', 1e-10)
    state.add_step("heat_oracle", "heat decay", '§7, "The family Hermite--Einstein flow is"', 5e-3)
    state.add_step("l_operator", "spectrum of L", '§6.2 Proposition, "is a self-adjoint second order elliptic"')
    return state


def test_status_follows_the_steps():
    state = make_state()
    state.start_step("nu_trace")
    state.complete_step("nu_trace", {"measured": 1e-15}, measured=1e-15)
    state.complete_step("heat_oracle", error="measured 1.000e-02 against tolerance 5.0e-03", measured=1e-2)
    state.skip_step("l_operator", "grid too large")
    state.complete_workflow()

    assert state.status == WorkflowStatus.PARTIAL
    assert state.get_step_status("heat_oracle") == StepStatus.FAILED
    assert state.get_step_result("nu_trace") == {"measured": 1e-15}
    assert state.get_step_result("heat_oracle") is None
    summary = state.get_summary()
    assert (summary["completed_steps"], summary["failed_steps"], summary["skipped_steps"]) == (1, 1, 1)


def test_all_passed_is_success_and_nothing_passed_is_failure():
    state = make_state()
    for name in list(state.steps):
        state.complete_step(name, {}, measured=0.0)
    state.complete_workflow()
    assert state.status == WorkflowStatus.SUCCESS

    state = make_state()
    state.complete_step("nu_trace", error="boom")
    state.complete_workflow()
    assert state.status == WorkflowStatus.FAILED


def test_check_rows():
    state = make_state()
    state.complete_step("nu_trace", {}, measured=2e-16)
    rows = state.check_rows()
    assert [row["check"] for row in rows] == ["nu_trace", "heat_oracle", "l_operator"]
    assert rows[0] == {"check": "nu_trace", "statement": '§3, "This follows from a direct computation"',
                       "measured": 2e-16, "tolerance": 1e-10, "status": "success"}
    assert rows[2]["status"] == "pending"


def test_markdown_report_lists_every_check():
    state = make_state()
    state.complete_step("nu_trace", {}, measured=2e-16)
    state.complete_step("heat_oracle", error="rate off")
    state.complete_workflow()
    text = format_workflow_report(state)
    assert '| ✅ | nu_trace | §3, "This follows from a direct computation" | 2.000e-16 | 1.0e-10 |' in text
    assert "**heat_oracle:** rate off" in text
    assert "PARTIAL" in text


def test_state_file_is_json(tmp_path):
    state = make_state()
    state.complete_workflow()
    with open(state.save_to_file(str(tmp_path)), encoding="utf-8") as f:
        data = json.load(f)
    assert set(data["steps"]) == {"nu_trace", "heat_oracle", "l_operator"}


def test_json_writer_handles_numpy(tmp_path):
    path = write_json({"b": np.float64(1.5), "a": np.arange(3), "c": 2j, "d": np.bool_(True)},
                      "out.json", str(tmp_path))
    with open(path, encoding="utf-8") as f:
        text = f.read()
    assert json.loads(text) == {"a": [0, 1, 2], "b": 1.5, "c": {"re": 0.0, "im": 2.0}, "d": True}
    assert text.index('"a"') < text.index('"b"')


def test_csv_writer_keeps_full_precision(tmp_path):
    path = write_csv([{"t": 0.1, "value": 1.0 / 3.0}, {"t": 0.2}], "rows.csv", str(tmp_path), ["t", "value"])
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    assert lines == ["t,value", f"0.1,{1.0 / 3.0!r}", "0.2,"]
