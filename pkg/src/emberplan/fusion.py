"""Citizen-report ingestion, expert review and ignition-location belief.

Reports are noisy point evidence with an explicit location sigma; nothing
touches the belief until a human accepts it and a belief update is requested.
The belief is a single-event location posterior over burnable cells.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .raster import GridGeometry, RasterGrid

OBSERVATION_FLOOR = 0.01
NORMALIZATION_TOL = 1e-9


class ReportStatus(str, Enum):
    PENDING = "PENDING"
    ACCEPTED = "ACCEPTED"
    REJECTED = "REJECTED"


class DuplicateReportError(ValueError):
    pass


class ReviewError(ValueError):
    pass


@dataclass(frozen=True)
class CitizenReport:
    report_id: str
    timestamp: float
    x: float
    y: float
    sigma: float            # location uncertainty in meters
    phenomenon: str
    confidence: float
    status: ReportStatus = ReportStatus.PENDING

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not 0.0 < self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside (0, 1]")


def report_from_ndjson_line(line: str) -> CitizenReport:
    """Parse one report from the NDJSON wire format."""
    doc = json.loads(line)
    return CitizenReport(
        report_id=doc["id"],
        timestamp=float(doc["t"]),
        x=float(doc["x"]),
        y=float(doc["y"]),
        sigma=float(doc["sigma_m"]),
        phenomenon=doc.get("phenomenon", "unknown"),
        confidence=float(doc["confidence"]),
    )


def report_to_document(r: CitizenReport) -> dict:
    return {
        "id": r.report_id, "t": r.timestamp, "x": r.x, "y": r.y,
        "sigma_m": r.sigma, "phenomenon": r.phenomenon,
        "confidence": r.confidence, "status": r.status.value,
    }


@dataclass(frozen=True)
class RemoteSensingObservation:
    obs_id: str
    acquired_at: float
    available_at: float
    detection: RasterGrid     # per-cell detection score in [0, 1]

    def __post_init__(self):
        if self.available_at < self.acquired_at:
            raise ValueError("availability precedes acquisition")
        v = self.detection.values
        if np.any(v < 0) or np.any(v > 1):
            raise ValueError("detection scores must lie in [0, 1]")


@dataclass
class ReviewQueue:
    """Ingestion-ordered report store with a single PENDING->decision step."""

    reports: dict[str, CitizenReport] = field(default_factory=dict)
    order: list[str] = field(default_factory=list)
    decisions: list[tuple[str, str, str]] = field(default_factory=list)  # (id, decision, reviewer)

    def ingest(self, report: CitizenReport) -> int:
        if report.status is not ReportStatus.PENDING:
            raise ValueError("only PENDING reports can be ingested")
        if report.report_id in self.reports:
            raise DuplicateReportError(f"duplicate report id {report.report_id!r}")
        self.reports[report.report_id] = report
        self.order.append(report.report_id)
        return self.order.index(report.report_id)

    def review(self, report_id: str, decision: str, reviewer: str) -> CitizenReport:
        if report_id not in self.reports:
            raise ReviewError(f"unknown report {report_id!r}")
        current = self.reports[report_id]
        if current.status is not ReportStatus.PENDING:
            raise ReviewError(
                f"report {report_id!r} already reviewed ({current.status.value})")
        if decision not in ("ACCEPT", "REJECT"):
            raise ReviewError(f"unknown decision {decision!r}")
        status = ReportStatus.ACCEPTED if decision == "ACCEPT" else ReportStatus.REJECTED
        updated = replace(current, status=status)
        self.reports[report_id] = updated
        self.decisions.append((report_id, decision, reviewer))
        return updated

    def pending(self) -> list[CitizenReport]:
        return [self.reports[i] for i in self.order
                if self.reports[i].status is ReportStatus.PENDING]

    def with_status(self, status: ReportStatus) -> list[CitizenReport]:
        return [self.reports[i] for i in self.order
                if self.reports[i].status is status]


@dataclass(frozen=True)
class IgnitionBelief:
    geom: GridGeometry
    burnable: np.ndarray        # bool mask
    posterior: np.ndarray       # sums to 1 over burnable cells, 0 elsewhere
    generation: int = 0
    incorporated: tuple[str, ...] = ()

    def __post_init__(self):
        b = np.ascontiguousarray(self.burnable, dtype=bool)
        p = np.ascontiguousarray(self.posterior, dtype=float)
        if b.shape != self.geom.shape or p.shape != self.geom.shape:
            raise ValueError("belief arrays do not match grid shape")
        if np.any(p[~b] != 0.0):
            raise ValueError("posterior mass on unburnable cells")
        if abs(p.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"posterior sums to {p.sum()}, expected 1")
        b.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "burnable", b)
        object.__setattr__(self, "posterior", p)

    def digest(self) -> str:
        h = hashlib.blake2b(digest_size=16)
        h.update(self.posterior.tobytes())
        h.update(str(self.generation).encode())
        return h.hexdigest()

    def as_raster(self) -> RasterGrid:
        return RasterGrid(geom=self.geom, values=self.posterior.copy())


def uniform_belief(geom: GridGeometry, burnable: np.ndarray) -> IgnitionBelief:
    burnable = np.asarray(burnable, dtype=bool)
    n = int(burnable.sum())
    if n == 0:
        raise ValueError("no burnable cells")
    post = np.where(burnable, 1.0 / n, 0.0)
    return IgnitionBelief(geom=geom, burnable=burnable, posterior=post)


def _gaussian_kernel(geom: GridGeometry, burnable: np.ndarray,
                     x: float, y: float, sigma: float) -> np.ndarray:
    """Grid-discretized isotropic Gaussian, normalized over burnable cells."""
    X, Y = geom.cell_centers()
    d2 = (X - x) ** 2 + (Y - y) ** 2
    g = np.exp(-d2 / (2.0 * sigma ** 2))
    g[~burnable] = 0.0
    total = g.sum()
    if total == 0.0:
        # kernel numerically vanished everywhere burnable; fall back to uniform
        return np.where(burnable, 1.0 / burnable.sum(), 0.0)
    return g / total


def report_likelihood(belief: IgnitionBelief, report: CitizenReport) -> np.ndarray:
    n_burn = int(belief.burnable.sum())
    g = _gaussian_kernel(belief.geom, belief.burnable, report.x, report.y, report.sigma)
    like = (1.0 - report.confidence) / n_burn + report.confidence * g
    like[~belief.burnable] = 0.0
    return like


def observation_likelihood(belief: IgnitionBelief,
                           obs: RemoteSensingObservation) -> np.ndarray:
    if obs.detection.geom != belief.geom:
        raise ValueError("observation raster does not match belief grid")
    like = OBSERVATION_FLOOR + (1.0 - OBSERVATION_FLOOR) * obs.detection.values
    return np.where(belief.burnable, like, 0.0)


def update_belief(belief: IgnitionBelief,
                  reports: Sequence[CitizenReport] = (),
                  observations: Sequence[RemoteSensingObservation] = (),
                  now: float | None = None) -> IgnitionBelief:
    """Assimilate accepted reports and available observations.

    No evidence -> belief returned unchanged (generation kept). Rejects
    evidence already incorporated, non-ACCEPTED reports and observations not
    yet available at `now`.
    """
    fresh_reports = []
    for r in reports:
        if r.status is not ReportStatus.ACCEPTED:
            raise ValueError(f"report {r.report_id!r} is {r.status.value}, not ACCEPTED")
        if r.report_id in belief.incorporated:
            raise ValueError(f"report {r.report_id!r} already incorporated")
        fresh_reports.append(r)
    fresh_obs = []
    for o in observations:
        if o.obs_id in belief.incorporated:
            raise ValueError(f"observation {o.obs_id!r} already incorporated")
        if now is not None and o.available_at > now:
            raise ValueError(f"observation {o.obs_id!r} not yet available")
        fresh_obs.append(o)
    if not fresh_reports and not fresh_obs:
        return belief

    post = belief.posterior.copy()
    for r in fresh_reports:
        post *= report_likelihood(belief, r)
    for o in fresh_obs:
        post *= observation_likelihood(belief, o)
    total = post.sum()
    if total <= 0.0:
        raise ValueError("evidence annihilated the posterior")
    post /= total
    ids = tuple(r.report_id for r in fresh_reports) + tuple(o.obs_id for o in fresh_obs)
    return IgnitionBelief(
        geom=belief.geom, burnable=belief.burnable, posterior=post,
        generation=belief.generation + 1,
        incorporated=belief.incorporated + ids,
    )


def extract_ignitions(belief: IgnitionBelief, *, top_k: int | None = None,
                      threshold: float | None = None) -> list[tuple[tuple[int, int], float]]:
    """Candidate ignition cells, probability-descending, ties by (row, col)."""
    if (top_k is None) == (threshold is None):
        raise ValueError("give exactly one of top_k / threshold")
    cells = []
    rows, cols = np.nonzero(belief.burnable)
    for r, c in zip(rows.tolist(), cols.tolist()):
        cells.append(((r, c), float(belief.posterior[r, c])))
    cells.sort(key=lambda rc: (-rc[1], rc[0]))
    if top_k is not None:
        return cells[:top_k]
    return [rc for rc in cells if rc[1] >= threshold]
