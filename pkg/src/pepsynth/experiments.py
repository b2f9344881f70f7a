"""Regeneration of the published parameter table and worst-case curves.

Every quantity is computed with smoothness normalized to ``L = 1`` and
unit initial distance, so a bound ``omega`` reads ``f_N - f_* <= L R^2 omega``
and the table reports the denominator ``1 / omega``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional

import numpy as np

from .classes import SmoothStronglyConvex
from .pep import OPTIMAL, build_fixed_step_pep, build_gfom_pep
from .runners.methods import FGM, unroll_canonical
from .sdp import SolverOptions, extract_certificate, solve
from .synthesis import CanonicalForm, FactoredForm, expand, factorize, synthesize_steps, to_canonical

TABLE_OPTIONS = SolverOptions(gap_tol=1e-10, feas_tol=1e-10)


class PipelineError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


def parse_kappa(text) -> float:
    k = float(text)
    if not (k > 1.0):
        raise ValueError(f"condition number must exceed 1 (or be 'inf'), got {text}")
    return k


def kappa_label(kappa: float) -> str:
    return "inf" if math.isinf(kappa) else f"{kappa:g}"


def smooth_class(kappa: float, L: float = 1.0) -> SmoothStronglyConvex:
    return SmoothStronglyConvex(0.0 if math.isinf(kappa) else L / kappa, L)


def _stage(name, fn, *args, **kw):
    try:
        out = fn(*args, **kw)
    except PipelineError:
        raise
    except Exception as exc:  # noqa: BLE001 - relabelled and re-raised
        raise PipelineError(name, f"{type(exc).__name__}: {exc}") from exc
    status = getattr(out, "status", OPTIMAL)
    if status != OPTIMAL:
        raise PipelineError(name, f"solver returned status {status!r}")
    return out


def pep_bound(cls, N: int, h, options: Optional[SolverOptions] = None, R: float = 1.0) -> float:
    """Worst-case value of the fixed-step method ``h`` on ``cls``."""
    return _stage("solve fixed-step PEP", solve, build_fixed_step_pep(cls, N, R, h), options or TABLE_OPTIONS).value


def gfom_bound(cls, N: int, options: Optional[SolverOptions] = None, R: float = 1.0) -> float:
    return _stage("solve GFOM PEP", solve, build_gfom_pep(cls, N, R), options or TABLE_OPTIONS).value


@dataclass
class SynthesisResult:
    kappa: float
    N: int
    gfom_value: float
    canonical: CanonicalForm
    factored: Optional[FactoredForm]


def synthesize_method(kappa: float, N: int, options: Optional[SolverOptions] = None,
                      factor: bool = True) -> SynthesisResult:
    """GFOM PEP, certificate, steps, canonical form and (optionally) factored form."""
    options = options or TABLE_OPTIONS
    cls = smooth_class(kappa)
    problem = build_gfom_pep(cls, N, 1.0)
    sol = _stage("solve GFOM PEP", solve, problem, options)
    cert = _stage("extract certificate", extract_certificate, problem, sol, options.feas_tol)
    steps = _stage("synthesize steps", synthesize_steps, cert)
    form = _stage("canonical form", to_canonical, steps)
    fac = _stage("factorize", factorize, form, 1.0) if factor else None
    return SynthesisResult(kappa, N, sol.value, form, fac)


@dataclass
class Table1Column:
    kappa: float
    N: int
    factored: FactoredForm
    gfom_value: float
    unfactored_value: float
    factored_value: float

    @property
    def residual(self) -> float:
        return self.factored.residual

    @property
    def denominators(self):
        return tuple(1.0 / v for v in (self.gfom_value, self.unfactored_value, self.factored_value))


def table1_column(kappa: float, N: int = 10, options: Optional[SolverOptions] = None) -> Table1Column:
    options = options or TABLE_OPTIONS
    res = synthesize_method(kappa, N, options)
    cls = smooth_class(kappa)
    v_unf = pep_bound(cls, N, res.canonical, options)
    v_fac = pep_bound(cls, N, _stage("expand", expand, res.factored), options)
    return Table1Column(kappa, N, res.factored, res.gfom_value, v_unf, v_fac)


def table1(kappas: Iterable[float] = (math.inf, 1000.0, 100.0, 50.0), N: int = 10,
           options: Optional[SolverOptions] = None) -> List[Table1Column]:
    return [table1_column(parse_kappa(k), N, options) for k in kappas]


def table1_csv(columns: List[Table1Column]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kappa", "i", "zeta", "eta"])
    for col in columns:
        for i in range(col.N):
            w.writerow([kappa_label(col.kappa), i + 1, f"{col.factored.zeta[i]:.6g}", f"{col.factored.eta[i]:.6g}"])
    w.writerow([])
    w.writerow(["kappa", "gfom_denominator", "unfactored_denominator", "factored_denominator", "max_h_residual"])
    for col in columns:
        w.writerow([kappa_label(col.kappa), *(f"{d:.6g}" for d in col.denominators), f"{col.residual:.6g}"])
    return buf.getvalue()


def fgm_canonical(kappa: float, N: int, L: float = 1.0) -> np.ndarray:
    """Canonical steps of the constant-momentum fast gradient method."""
    mu = 0.0 if math.isinf(kappa) else L / kappa
    return unroll_canonical(FGM(mu, L), N)


@dataclass
class Figure1Row:
    N: int
    fgm: float
    gfom: float
    ssep: float


def figure1(kappa: float = 100.0, Ns: Iterable[int] = range(2, 16),
            options: Optional[SolverOptions] = None) -> List[Figure1Row]:
    kappa = parse_kappa(kappa)
    options = options or TABLE_OPTIONS
    cls = smooth_class(kappa)
    rows = []
    for N in Ns:
        if N < 1:
            raise ValueError(f"N must be >= 1, got {N}")
        res = synthesize_method(kappa, N, options, factor=False)
        ssep = pep_bound(cls, N, res.canonical, options)
        fgm = pep_bound(cls, N, fgm_canonical(kappa, N), options)
        rows.append(Figure1Row(N, fgm, res.gfom_value, ssep))
    return rows


def figure1_csv(rows: List[Figure1Row]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "FGM", "GFOM", "SSEP"])
    for r in rows:
        w.writerow([r.N, f"{r.fgm:.6g}", f"{r.gfom:.6g}", f"{r.ssep:.6g}"])
    return buf.getvalue()
