"""Fidelity measurement between scan paths, dumps, and the engine.

Three error statistics are tracked over a batch of samples, all on the
Mamba-layer output (or optionally the logits): the average per-sample
max absolute error, the average per-sample mean absolute error, and the
worst per-sample max absolute error. Prediction agreement is reported
alongside as a fraction of matching argmax labels.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import HarnessError
from .model_zoo import ClassifierConfig, ClassifierParams, ForwardTrace, classifier_trace
from .ssm_core import ScanWorkspace, fused_state_bytes, unfused_intermediate_bytes
from .tensor_core import argmax

COMPARE_MODES = ("fused_vs_reference", "engine_vs_dump")
COMPARE_POINTS = ("mamba_out", "logits")


@dataclass
class FidelityReport:
    """Batch error statistics plus prediction agreement."""

    mode: str
    at: str
    n_samples: int
    avg_linf: float
    avg_mean_err: float
    worst_linf: float
    agreement: float

    def to_text(self) -> str:
        lines = [
            f"#fidelity\tv1\tmode={self.mode}\tat={self.at}\terr=abs",
            f"n_samples\t{self.n_samples}",
            f"avg_linf\t{float(self.avg_linf)!r}",
            f"avg_mean_err\t{float(self.avg_mean_err)!r}",
            f"worst_linf\t{float(self.worst_linf)!r}",
            f"agreement\t{float(self.agreement)!r}",
        ]
        return "\n".join(lines) + "\n"


def parse_report(text: str) -> FidelityReport:
    """Inverse of FidelityReport.to_text."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#fidelity\tv1\t"):
        raise HarnessError("fidelity text: missing '#fidelity\\tv1' header")
    header = dict(
        part.split("=", 1) for part in lines[0].split("\t")[2:] if "=" in part
    )
    fields: dict[str, str] = {}
    for ln in lines[1:]:
        key, value = ln.split("\t")
        fields[key] = value
    try:
        return FidelityReport(
            mode=header["mode"],
            at=header["at"],
            n_samples=int(fields["n_samples"]),
            avg_linf=float(fields["avg_linf"]),
            avg_mean_err=float(fields["avg_mean_err"]),
            worst_linf=float(fields["worst_linf"]),
            agreement=float(fields["agreement"]),
        )
    except KeyError as exc:
        raise HarnessError(f"fidelity text: missing field {exc}") from exc


def summarize_diffs(pairs) -> tuple[float, float, float]:
    """(avg max-abs, avg mean-abs, worst max-abs) over (got, want) pairs."""
    linfs = []
    means = []
    for got, want in pairs:
        got64 = np.asarray(got, dtype=np.float64)
        want64 = np.asarray(want, dtype=np.float64)
        if got64.shape != want64.shape:
            raise HarnessError(f"compared shapes differ: {got64.shape} vs {want64.shape}")
        diff = np.abs(got64 - want64)
        linfs.append(float(diff.max()))
        means.append(float(diff.mean()))
    if not linfs:
        raise HarnessError("no samples to compare")
    return float(np.mean(linfs)), float(np.mean(means)), float(max(linfs))


def run_samples(
    params: ClassifierParams,
    config: ClassifierConfig,
    samples,
    scan: str = "fused",
    jobs: int = 1,
) -> list[ForwardTrace]:
    """Forward every sample; with jobs > 1, samples run on a thread pool."""
    if jobs <= 1:
        m = config.mamba
        workspace = ScanWorkspace(m.d_inner, m.d_state) if scan == "fused" else None
        return [
            classifier_trace(params, s, config, scan=scan, workspace=workspace)
            for s in samples
        ]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(
            pool.map(lambda s: classifier_trace(params, s, config, scan=scan), samples)
        )


def compare_fused_vs_reference(
    params: ClassifierParams,
    config: ClassifierConfig,
    samples,
    at: str = "mamba_out",
    jobs: int = 1,
) -> FidelityReport:
    """Run both scan paths on every sample and measure their divergence."""
    if at not in COMPARE_POINTS:
        raise HarnessError(f"unknown comparison point {at!r}; choose from {COMPARE_POINTS}")
    fused = run_samples(params, config, samples, scan="fused", jobs=jobs)
    reference = run_samples(params, config, samples, scan="reference", jobs=jobs)
    pick = (lambda t: t.mamba_out) if at == "mamba_out" else (lambda t: t.logits)
    avg_linf, avg_mean, worst = summarize_diffs(
        [(pick(f), pick(r)) for f, r in zip(fused, reference)]
    )
    matches = sum(
        1 for f, r in zip(fused, reference) if argmax(f.logits) == argmax(r.logits)
    )
    return FidelityReport(
        mode="fused_vs_reference",
        at=at,
        n_samples=len(samples),
        avg_linf=avg_linf,
        avg_mean_err=avg_mean,
        worst_linf=worst,
        agreement=matches / len(samples),
    )


def compare_engine_vs_dump(
    params: ClassifierParams,
    config: ClassifierConfig,
    samples,
    dumped,
    dump_labels,
    at: str = "mamba_out",
    jobs: int = 1,
) -> FidelityReport:
    """Measure the engine against externally produced activations.

    ``dumped`` holds one matrix per sample at the chosen point (the
    Mamba-layer output, or the logits as a 1-row matrix) and
    ``dump_labels`` the producer's predicted class per sample; agreement
    compares those labels against the engine's own argmax.
    """
    if at not in COMPARE_POINTS:
        raise HarnessError(f"unknown comparison point {at!r}; choose from {COMPARE_POINTS}")
    if len(dumped) != len(samples):
        raise HarnessError(f"{len(dumped)} dumped matrices for {len(samples)} samples")
    if dump_labels is None:
        raise HarnessError("dump carries no labels; prediction agreement needs them")
    traces = run_samples(params, config, samples, scan="fused", jobs=jobs)
    if at == "mamba_out":
        pairs = [(t.mamba_out, d) for t, d in zip(traces, dumped)]
    else:
        pairs = [(t.logits, np.asarray(d).reshape(-1)) for t, d in zip(traces, dumped)]
    avg_linf, avg_mean, worst = summarize_diffs(pairs)
    matches = sum(
        1 for t, lab in zip(traces, dump_labels) if argmax(t.logits) == int(lab)
    )
    return FidelityReport(
        mode="engine_vs_dump",
        at=at,
        n_samples=len(samples),
        avg_linf=avg_linf,
        avg_mean_err=avg_mean,
        worst_linf=worst,
        agreement=matches / len(samples),
    )


@dataclass
class BenchResult:
    """Min and median per-sample wall times plus scan working-set sizes."""

    fused_min_seconds: float
    fused_median_seconds: float
    reference_min_seconds: float
    reference_median_seconds: float
    fused_scan_bytes: int
    unfused_scan_bytes: int
    n_samples: int
    repeats: int

    def to_text(self) -> str:
        lines = [
            "#bench\tv1",
            f"n_samples\t{self.n_samples}",
            f"repeats\t{self.repeats}",
            f"fused_min_seconds\t{float(self.fused_min_seconds)!r}",
            f"fused_median_seconds\t{float(self.fused_median_seconds)!r}",
            f"reference_min_seconds\t{float(self.reference_min_seconds)!r}",
            f"reference_median_seconds\t{float(self.reference_median_seconds)!r}",
            f"fused_scan_bytes\t{self.fused_scan_bytes}",
            f"unfused_scan_bytes\t{self.unfused_scan_bytes}",
        ]
        return "\n".join(lines) + "\n"


def bench_paths(
    params: ClassifierParams, config: ClassifierConfig, samples, repeats: int = 3
) -> BenchResult:
    """Time both scan paths over the batch for the requested repeats.

    Wall time per repeat is divided by the sample count; the min and the
    median over repeats are both reported. Repeats are interleaved between
    the two paths, alternating which goes first, so background load drifts
    onto both rather than biasing whichever ran last. The fused path runs
    with one preallocated workspace whose size never depends on sequence
    length.
    """
    if repeats < 1:
        raise HarnessError(f"repeats must be >= 1, got {repeats}")
    if not samples:
        raise HarnessError("no samples to benchmark")
    m = config.mamba
    per_sample: dict[str, list[float]] = {"fused": [], "reference": []}
    pair = ("fused", "reference")
    for r in range(repeats):
        for scan in pair if r % 2 == 0 else reversed(pair):
            start = time.perf_counter()
            run_samples(params, config, samples, scan=scan)
            per_sample[scan].append((time.perf_counter() - start) / len(samples))
    return BenchResult(
        fused_min_seconds=min(per_sample["fused"]),
        fused_median_seconds=float(np.median(per_sample["fused"])),
        reference_min_seconds=min(per_sample["reference"]),
        reference_median_seconds=float(np.median(per_sample["reference"])),
        fused_scan_bytes=fused_state_bytes(m.d_inner, m.d_state),
        unfused_scan_bytes=unfused_intermediate_bytes(m.d_inner, m.d_state, config.seq_len),
        n_samples=len(samples),
        repeats=repeats,
    )
