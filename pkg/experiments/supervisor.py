import logging
import os
import time
from dataclasses import dataclass
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional, Sequence

from config import RunConfig, config
from utils.errors import LabError
from utils.io_utils import build_manifest, save_to_file, write_json
from utils.workflow_utils import (
    StepStatus,
    WorkflowState,
    WorkflowStatus,
    format_workflow_report,
    log_workflow_step,
)

logger = logging.getLogger("fhe_lab")

BANNER = "=" * 70


@dataclass
class LabStep:
    """One unit of work: a verify check or a stage of an experiment.

    ``run`` returns a dict.  The keys ``measured`` and ``passed`` are read by the
    supervisor; a non-empty ``failures`` list also fails the step.  Everything
    else is kept as the step result.
    """

    name: str
    description: str
    run: Callable[[], Dict[str, Any]]
    statement: str = ""
    tolerance: Optional[float] = None


class LabSupervisor:
    """
    Orchestrates one laboratory run.

    Responsibilities:
    - Execute checks and experiment stages in order
    - Track step state, measured values and tolerances
    - Keep going after a failed step when configured to
    - Save intermediate results and the final report and manifest
    """

    def __init__(self, subcommand: str, out_dir: str, run_config: Optional[RunConfig] = None,
                 seed: Optional[int] = None):
        self.subcommand = subcommand
        self.out_dir = out_dir
        self.run_config = run_config
        self.seed = seed if seed is not None else (run_config.seed if run_config else config.default_seed)
        self.workflow_state = WorkflowState(subcommand)
        self.config = config
        self.logs_dir = os.path.join(out_dir, config.logs_subdirectory)
        self.results: Dict[str, Any] = {}
        self.files: List[str] = []
        self._started = time.perf_counter()

    def execute_step(self, step: LabStep) -> Optional[Dict[str, Any]]:
        """
        Execute a step and record its outcome.

        Args:
            step: the step to run

        Returns:
            The step result, or None if the step failed
        """
        state = self.workflow_state
        if step.name not in state.steps:
            state.add_step(step.name, step.description, step.statement, step.tolerance)
        log_workflow_step(step.name, f"Running: {step.description}", "INFO")
        state.start_step(step.name)

        try:
            result = step.run() or {}
        except LabError as e:
            error_msg = f"{type(e).__name__}: {e}"
            log_workflow_step(step.name, error_msg, "ERROR")
            state.complete_step(step.name, error=error_msg)
            if not self.config.continue_on_failure:
                log_workflow_step(step.name, "Run terminated due to failure", "ERROR")
                raise
            log_workflow_step(step.name, "Continuing run despite failure", "WARNING")
            return None

        if result.get("skipped"):
            state.skip_step(step.name, str(result["skipped"]))
            log_workflow_step(step.name, f"Skipped: {result['skipped']}", "WARNING")
            self.results[step.name] = result
            return result

        measured = result.get("measured")
        failures = list(result.get("failures") or [])
        if result.get("passed", True) is False:
            failures.insert(0, self._tolerance_message(step, measured))
        if failures:
            error_msg = "; ".join(failures)
            log_workflow_step(step.name, error_msg, "ERROR")
            state.complete_step(step.name, error=error_msg, measured=measured)
            self.results[step.name] = result
            return None

        state.complete_step(step.name, result, measured=measured)
        self.results[step.name] = result
        detail = "" if measured is None else f" (measured {measured:.3e})"
        log_workflow_step(step.name, f"Completed{detail}", "SUCCESS")
        if self.config.save_intermediate_results:
            self._save_intermediate_result(step.name, result)
        return result

    @staticmethod
    def _tolerance_message(step: LabStep, measured: Optional[float]) -> str:
        if measured is None or step.tolerance is None:
            return "check failed"
        return f"measured {measured:.3e} against tolerance {step.tolerance:.1e}"

    def _save_intermediate_result(self, step_name: str, result: Dict[str, Any]):
        """Save intermediate result into the logs directory"""
        try:
            timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
            path = write_json(result, f"{step_name}_{timestamp}.json", self.logs_dir)
            log_workflow_step(step_name, f"Intermediate result saved to {os.path.basename(path)}", "DEBUG")
        except (OSError, TypeError, ValueError) as e:
            log_workflow_step(step_name, f"Failed to save intermediate result: {e}", "WARNING")

    def record_file(self, path: str) -> str:
        self.files.append(path)
        return path

    def compile_final_output(self, extra: Optional[Dict[str, Any]] = None) -> Dict[str, str]:
        """Write report.json and manifest.json into the output directory, the markdown report and state into logs/."""
        summary = self.workflow_state.get_summary()
        report = {
            "subcommand": self.subcommand,
            "status": summary["status"],
            "total_checks": summary["total_steps"],
            "passed": summary["completed_steps"],
            "failed": summary["failed_steps"],
            "skipped": summary["skipped_steps"],
            "checks": self.workflow_state.check_rows(),
            "results": self.results,
        }
        if extra:
            report.update(extra)
        paths = {"report": self.record_file(write_json(report, "report.json", self.out_dir))}

        config_echo = self.run_config.to_dict() if self.run_config is not None else {}
        manifest = build_manifest(self.subcommand, config_echo, self.seed, self._started, self.files)
        paths["manifest"] = write_json(manifest, "manifest.json", self.out_dir)

        paths["markdown"] = save_to_file(format_workflow_report(self.workflow_state),
                                         f"{self.subcommand}_report.md", self.logs_dir)
        paths["state"] = self.workflow_state.save_to_file(self.logs_dir)
        log_workflow_step("final_output", f"Report written to {paths['report']}", "SUCCESS")
        return paths

    def run(self, steps: Sequence[LabStep],
            finalize: Optional[Callable[["LabSupervisor"], Optional[Dict[str, Any]]]] = None) -> WorkflowState:
        """
        Execute every step, then compile the outputs.

        Args:
            steps: steps in execution order
            finalize: optional hook run after the steps; it may write extra files
                and return extra report fields

        Returns:
            The final workflow state
        """
        state = self.workflow_state
        for step in steps:
            state.add_step(step.name, step.description, step.statement, step.tolerance)

        logger.info(BANNER)
        logger.info("🧮 FAMILY HERMITE-EINSTEIN LAB: %s", self.subcommand.upper())
        logger.info(BANNER)
        state.start_workflow()
        try:
            for step in steps:
                self.execute_step(step)
            extra = finalize(self) if finalize is not None else None
        except LabError:
            state.complete_workflow(WorkflowStatus.FAILED)
            self.compile_final_output()
            raise
        state.complete_workflow()
        self.compile_final_output(extra)

        summary = state.get_summary()
        logger.info(BANNER)
        logger.info("📊 %s: %d passed, %d failed, %d skipped in %.2fs",
                    summary["status"].upper(), summary["completed_steps"], summary["failed_steps"],
                    summary["skipped_steps"], summary["duration"] or 0.0)
        logger.info(BANNER)
        return state

    @property
    def succeeded(self) -> bool:
        return all(step["status"] != StepStatus.FAILED for step in self.workflow_state.steps.values())
