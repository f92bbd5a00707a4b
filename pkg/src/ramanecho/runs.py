"""Scenario orchestration: check conditions, run both stages, write files.

The reversal-condition report produced at load time rides along into the
recall drivers, so strict scenarios refuse to run the reading stage when
a condition fails and report-only scenarios attach the report to the
echo record for inspection.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .conditions import (
    ConditionReport,
    check_strong_conditions,
    check_weak_conditions,
)
from .numerics import write_text_atomic
from .records import EchoRecord, measure_efficiency
from .scenario import (
    Scenario,
    build_controls,
    build_ensemble,
    build_grids,
    build_medium,
    build_probe,
    build_protocol,
    stage_setups,
)
from .strongfield import run_retrieval, run_storage
from .weakfield import recall_weak, run_weak_storage


def scenario_report(scenario: Scenario) -> ConditionReport:
    """Run the regime's reversal-condition checker on the two stages."""
    stage1, stage2 = stage_setups(scenario)
    if scenario.run.regime == "strong":
        return check_strong_conditions(stage1, stage2)
    ctl1, ctl2 = build_controls(scenario)
    proto = build_protocol(scenario, ctl1, ctl2)
    k = scenario.protocol.k if scenario.protocol.name == "reafc" else 0
    return check_weak_conditions(stage1, stage2,
                                 protocol=scenario.protocol.name,
                                 k=k, t1=proto.t1, t2=proto.t2)


@dataclass
class RunResult:
    scenario: Scenario
    report: ConditionReport
    record: EchoRecord
    efficiency: float
    fidelity: float
    storage_audit: float
    transmitted_fraction: float

    def summary_lines(self) -> list[str]:
        rec = self.record
        return [
            rec.summary_line(),
            f"transmitted_fraction = {self.transmitted_fraction:.6e}",
            f"storage_audit = {self.storage_audit:.6e}",
            f"conditions {'pass' if self.report.overall else 'fail'}",
        ]


def run_scenario(scenario: Scenario,
                 report: ConditionReport | None = None) -> RunResult:
    """Storage plus recall for one scenario file.

    Raises ConditionsUnmet before the reading stage when the scenario is
    strict and `report` (computed here when not supplied) has a failure.
    """
    if report is None:
        report = scenario_report(scenario)
    ens = build_ensemble(scenario)
    med = build_medium(scenario, ens)
    probe = build_probe(scenario)
    ctl1, ctl2 = build_controls(scenario)
    grid1, grid2 = build_grids(scenario)
    proto = build_protocol(scenario, ctl1, ctl2)
    if scenario.run.regime == "strong":
        out = run_storage(probe, ctl1, ens, med, grid1)
        record = run_retrieval(
            out.state, ctl2, proto, ens, med, grid2,
            tau_input=out.tau, input_envelope=out.input_envelope,
            gap_time=scenario.protocol.gap_time, conditions=report,
            transmitted_fraction=out.transmitted_fraction)
    else:
        out = run_weak_storage(probe, ctl1, ens, med, grid1)
        record = recall_weak(
            out.state, proto, ctl2, ens, med, grid2,
            tau_input=out.tau, input_envelope=out.input_envelope,
            gap_time=scenario.protocol.gap_time, conditions=report,
            transmitted_fraction=out.transmitted_fraction)
    efficiency, fidelity = measure_efficiency(record)
    return RunResult(scenario=scenario, report=report, record=record,
                     efficiency=efficiency, fidelity=fidelity,
                     storage_audit=out.audit_residual,
                     transmitted_fraction=out.transmitted_fraction)


def write_outputs(result: RunResult, out_dir: str) -> dict[str, str]:
    """Write the run's flat-file artifacts; every write is atomic."""
    os.makedirs(out_dir, exist_ok=True)
    record = result.record
    paths = {
        "input": os.path.join(out_dir, "input.csv"),
        "echo": os.path.join(out_dir, "echo.csv"),
        "summary": os.path.join(out_dir, "summary.txt"),
        "conditions": os.path.join(out_dir, "conditions.txt"),
    }
    record.write_input_csv(paths["input"])
    record.write_echo_csv(paths["echo"])
    record.write_summary(paths["summary"])
    write_text_atomic(paths["conditions"], result.report.as_text() + "\n")
    return paths
