"""Command pipelines behind the CLI."""

import logging
from typing import Callable, Dict, List, Union

import numpy as np

from ..config import AM_R_MAX, SLOPE_TOL
from ..errors import InvalidParameter, SingularWeights, Unsupported
from ..models import (
    CheckReport,
    Command,
    ConvergenceStudy,
    ExperimentResult,
    ExperimentSpec,
    FlatGarkTableau,
    MrGarkScheme,
    OrderReport,
    OutputFormat,
    Partitioning,
    Severity,
)
from .integrator import integrate
from .monotonicity import monotonicity_report
from .order import (
    additive_order_residuals,
    decoupled_order_residuals,
    mrk_order_residuals,
    observed_order,
    order_reports,
    remaining_order3_report,
)
from .problems import get_problem, list_problems
from .schemes import BASE_TABLEAUS, get_entry, list_entries, make
from .stability import stability_report
from .storage import storage
from .tableau import classify_structure, internal_consistency_residuals, validate_rk

logger = logging.getLogger(__name__)

Scheme = Union[MrGarkScheme, FlatGarkTableau]


def resolve_scheme(spec: ExperimentSpec) -> Scheme:
    """Scheme named by the spec: a tableau file wins over a catalog key."""
    if spec.scheme_file is not None:
        return storage.load_scheme(spec.scheme_file)
    if spec.scheme is None:
        raise InvalidParameter("a scheme name or a tableau file is required")
    sid = spec.scheme
    return make(sid.name, sid.M, sid.variant)


def resolve_partitioning(spec: ExperimentSpec) -> Partitioning:
    """Requested partitioning, else the catalog entry's, else additive."""
    if spec.partitioning is not None:
        return spec.partitioning
    if spec.scheme is not None and spec.scheme_file is None:
        return get_entry(spec.scheme.name).partitioning
    return Partitioning.ADDITIVE


def _label(scheme: Scheme, spec: ExperimentSpec) -> str:
    if spec.scheme is not None:
        return spec.scheme.name
    return scheme.name or str(spec.scheme_file)


def _optional_reports(sch: MrGarkScheme, notes: List[str]) -> List[OrderReport]:
    reports = []
    builders: List[Callable[[MrGarkScheme], OrderReport]] = [
        decoupled_order_residuals,
        remaining_order3_report,
        mrk_order_residuals,
        additive_order_residuals,
    ]
    for build in builders:
        try:
            reports.append(build(sch))
        except (Unsupported, SingularWeights) as exc:
            logger.debug("Skipping %s: %s", build.__name__, exc.message)
            notes.append(f"{build.__name__}: {exc.message}")
    return reports


def check_scheme(scheme: Scheme, label: str, spec: ExperimentSpec) -> CheckReport:
    notes: List[str] = []
    classifying = order_reports(scheme)
    order = min(r.classified_order for r in classifying)

    tag = consistency = consistent = None
    extra: List[OrderReport] = []
    if isinstance(scheme, MrGarkScheme):
        for label_, tab in (("fast", scheme.fast), ("slow", scheme.slow)):
            notes.extend(
                f"{label_}: {f.message}" for f in validate_rk(tab).findings if f.severity is not Severity.INFO
            )
        tag = classify_structure(scheme).value
        consistency = internal_consistency_residuals(scheme)
        consistent = max(consistency) <= classifying[0].tolerance
        extra = _optional_reports(scheme, notes)

    r_max = spec.r_max or AM_R_MAX
    return CheckReport(
        scheme=label,
        M=scheme.M,
        structure_tag=tag,
        classified_order=order,
        expected_order=spec.expect_order,
        internal_consistency=consistency,
        internally_consistent=consistent,
        order=classifying + extra,
        stability=stability_report(scheme, resolve_partitioning(spec), spec.mu, r_max),
        monotonicity=monotonicity_report(scheme, spec.rho, r_max),
        notes=notes,
    )


def _check(spec: ExperimentSpec) -> ExperimentResult:
    scheme = resolve_scheme(spec)
    report = check_scheme(scheme, _label(scheme, spec), spec)
    return ExperimentResult(
        command=spec.command,
        exit_code=0 if report.passed else 1,
        payload={**report.model_dump(mode="json"), "passed": report.passed},
        rows=[
            {"id": r.id, "order": r.order, "partition": r.partition.value, "residual": r.residual}
            for rep in report.order
            for r in rep.residuals
        ],
    )


def _converge(spec: ExperimentSpec) -> ExperimentResult:
    scheme = resolve_scheme(spec)
    if spec.problem is None:
        raise InvalidParameter("converge needs --problem")
    ivp = get_problem(spec.problem)
    slope, errors = observed_order(scheme, ivp, spec.H_list, spec.t_end)
    study = ConvergenceStudy(
        scheme=_label(scheme, spec), problem=ivp.name, M=scheme.M,
        H=list(spec.H_list), errors=errors, slope=slope,
    )
    passed = spec.expect_order is None or slope >= spec.expect_order - SLOPE_TOL
    if not passed:
        logger.warning("Observed slope %.3f below expected order %d", slope, spec.expect_order)
    return ExperimentResult(
        command=spec.command,
        exit_code=0 if passed else 1,
        payload=study.model_dump(mode="json"),
        rows=[{"H": h, "error": e} for h, e in zip(spec.H_list, errors)],
    )


def _stability(spec: ExperimentSpec) -> ExperimentResult:
    scheme = resolve_scheme(spec)
    mu = spec.mu
    if mu is None and spec.problem is not None:
        mu = get_problem(spec.problem).metadata.mu
    report = stability_report(scheme, resolve_partitioning(spec), mu, spec.r_max or AM_R_MAX)
    return ExperimentResult(command=spec.command, payload=report.model_dump(mode="json"))


def _monotonicity(spec: ExperimentSpec) -> ExperimentResult:
    scheme = resolve_scheme(spec)
    rho = spec.rho
    if rho is None and spec.problem is not None:
        rho = get_problem(spec.problem).metadata.certified_rho(scheme.M)
    report = monotonicity_report(scheme, rho, spec.r_max or AM_R_MAX)
    return ExperimentResult(command=spec.command, payload=report.model_dump(mode="json"))


def _integrate(spec: ExperimentSpec) -> ExperimentResult:
    scheme = resolve_scheme(spec)
    if spec.problem is None:
        raise InvalidParameter("integrate needs --problem")
    if len(spec.H_list) != 1:
        raise InvalidParameter(f"integrate needs exactly one step size, got {len(spec.H_list)}")
    ivp = get_problem(spec.problem)
    H = spec.H_list[0]
    trajectory = integrate(scheme, ivp, spec.t_end, H, record_micro=spec.record_micro)

    payload: Dict = {
        "scheme": _label(scheme, spec),
        "problem": ivp.name,
        "M": scheme.M,
        "H": H,
        "steps": len(trajectory.times) - 1,
        "final": trajectory.final.tolist(),
        "stats": trajectory.stats.model_dump(),
    }
    if ivp.exact is not None:
        payload["error"] = float(np.max(np.abs(trajectory.final - ivp.exact(spec.t_end))))

    artifacts = []
    if spec.output is not None:
        fmt = OutputFormat.JSON if spec.format is OutputFormat.JSON else OutputFormat.CSV
        artifacts.append(str(storage.export_trajectory(trajectory, spec.output, fmt)))
    rows = [
        {"t": t, **{f"y{i}": float(v) for i, v in enumerate(y)}}
        for t, y in zip(trajectory.times, trajectory.states)
    ]
    return ExperimentResult(command=spec.command, payload=payload, rows=rows, artifacts=artifacts)


def _list(spec: ExperimentSpec) -> ExperimentResult:
    schemes = [
        {
            "name": e.name,
            "summary": e.summary,
            "variants": e.variants,
            "expected_order": e.expected_order,
        }
        for e in list_entries()
    ]
    payload = {
        "schemes": schemes,
        "bases": sorted(BASE_TABLEAUS),
        "problems": [{"name": n, "summary": s} for n, s in list_problems()],
    }
    return ExperimentResult(command=spec.command, payload=payload, rows=schemes)


def _export(spec: ExperimentSpec) -> ExperimentResult:
    scheme = resolve_scheme(spec)
    artifacts = []
    if spec.output is not None:
        artifacts.append(str(storage.save_scheme(scheme, spec.output)))
    return ExperimentResult(command=spec.command, payload=storage.dump_scheme(scheme), artifacts=artifacts)


HANDLERS: Dict[Command, Callable[[ExperimentSpec], ExperimentResult]] = {
    Command.CHECK: _check,
    Command.CONVERGE: _converge,
    Command.STABILITY: _stability,
    Command.MONOTONICITY: _monotonicity,
    Command.INTEGRATE: _integrate,
    Command.LIST: _list,
    Command.EXPORT: _export,
}


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run one command. Numerical and usage errors propagate as MrGarkError."""
    logger.debug("Running %s", spec.command.value)
    result = HANDLERS[spec.command](spec)
    if spec.output is not None and not result.artifacts and spec.command is not Command.LIST:
        result.artifacts.append(str(storage.save_report(result.payload, spec.output)))
    return result
