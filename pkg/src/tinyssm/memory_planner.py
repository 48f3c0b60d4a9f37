"""Static arena planning for the classifier's intermediate buffers.

The forward pass is described as a short operator schedule. Each step
names the buffers it reads and writes, so buffer lifetimes fall out of
the step ordering: a buffer is live from the step that first writes it
through the last step that touches it. Offsets are then assigned either
end-to-end (every buffer gets its own slot) or with lifetime reuse
(buffers whose lifetimes never overlap may share bytes). The gap between
those two arena sizes is where the memory savings come from, and the
fused scan variant widens it further by never materializing the per-step
discretization tensors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ScheduleError

F32_BYTES = 4
ALLOWED_ALIGNMENTS = (4, 8, 16)
PLAN_STRATEGIES = ("no_reuse", "lifetime_reuse")
SCAN_VARIANTS = ("unfused", "fused")

_NAME_FORBIDDEN = set("\t\n ,:")


def _check_name(name: str) -> str:
    if not name or _NAME_FORBIDDEN & set(name):
        raise ScheduleError(f"buffer or op name {name!r} is empty or contains tab/space/comma/colon")
    return name


def _align_up(value: int, align: int) -> int:
    return -(-value // align) * align


@dataclass(frozen=True)
class BufferSpec:
    """One intermediate buffer with its size and lifetime in step indices."""

    id: str
    size: int
    first_use: int
    last_use: int
    align: int = 4

    def __post_init__(self):
        _check_name(self.id)
        if self.size < 1:
            raise ScheduleError(f"buffer {self.id!r}: size must be >= 1, got {self.size}")
        if self.first_use < 0 or self.last_use < self.first_use:
            raise ScheduleError(
                f"buffer {self.id!r}: invalid lifetime [{self.first_use}, {self.last_use}]"
            )
        if self.align not in ALLOWED_ALIGNMENTS:
            raise ScheduleError(f"buffer {self.id!r}: alignment {self.align} not in {ALLOWED_ALIGNMENTS}")

    def overlaps_lifetime(self, other: "BufferSpec") -> bool:
        return self.first_use <= other.last_use and other.first_use <= self.last_use


@dataclass(frozen=True)
class ScheduleStep:
    """A single operator invocation with the buffers it touches."""

    op: str
    reads: tuple[str, ...]
    writes: tuple[str, ...]

    def __post_init__(self):
        _check_name(self.op)
        for name in self.reads + self.writes:
            _check_name(name)


@dataclass
class OpSchedule:
    """Ordered operator steps plus the byte size of every written buffer."""

    steps: list[ScheduleStep]
    sizes: dict[str, int]


@dataclass(frozen=True)
class PlacedBuffer:
    spec: BufferSpec
    offset: int

    @property
    def end(self) -> int:
        return self.offset + self.spec.size


@dataclass
class MemoryPlan:
    """Byte offsets for every buffer plus the resulting arena size."""

    placements: list[PlacedBuffer]
    arena_size: int
    strategy: str

    @property
    def offsets(self) -> dict[str, int]:
        return {p.spec.id: p.offset for p in self.placements}

    def validate(self) -> None:
        """Reject misaligned, out-of-arena, or live-overlapping placements."""
        for p in self.placements:
            if p.offset % p.spec.align != 0:
                raise ScheduleError(f"plan: buffer {p.spec.id!r} offset {p.offset} is misaligned")
            if p.offset < 0 or p.end > self.arena_size:
                raise ScheduleError(
                    f"plan: buffer {p.spec.id!r} at [{p.offset}, {p.end}) exceeds arena {self.arena_size}"
                )
        for i, a in enumerate(self.placements):
            for b in self.placements[i + 1 :]:
                if not a.spec.overlaps_lifetime(b.spec):
                    continue
                if a.offset < b.end and b.offset < a.end:
                    raise ScheduleError(
                        f"plan: live buffers {a.spec.id!r} and {b.spec.id!r} share bytes"
                    )


def derive_lifetimes(schedule: OpSchedule) -> list[BufferSpec]:
    """Lifetime of each buffer: first write through last read-or-write.

    Raises ScheduleError when a step reads a buffer nothing has written
    yet, or writes a buffer with no size entry.
    """
    first: dict[str, int] = {}
    last: dict[str, int] = {}
    for index, step in enumerate(schedule.steps):
        for name in step.reads:
            if name not in first:
                raise ScheduleError(
                    f"schedule: step {index} ({step.op}) reads {name!r} before any write"
                )
            last[name] = index
        for name in step.writes:
            if name not in schedule.sizes:
                raise ScheduleError(
                    f"schedule: step {index} ({step.op}) writes {name!r} which has no size"
                )
            first.setdefault(name, index)
            last[name] = index
    specs = [
        BufferSpec(id=name, size=schedule.sizes[name], first_use=first[name], last_use=last[name])
        for name in first
    ]
    specs.sort(key=lambda s: (s.first_use, s.id))
    return specs


def plan_offsets(buffers: list[BufferSpec], strategy: str = "lifetime_reuse") -> MemoryPlan:
    """Assign byte offsets under the chosen strategy.

    ``no_reuse`` lays buffers out end-to-end in (first_use, id) order.
    ``lifetime_reuse`` places buffers in decreasing size order, each at
    the lowest aligned offset that does not collide with an already
    placed buffer whose lifetime overlaps.
    """
    if strategy not in PLAN_STRATEGIES:
        raise ScheduleError(f"unknown planning strategy {strategy!r}; choose from {PLAN_STRATEGIES}")
    stable = sorted(buffers, key=lambda s: (s.first_use, s.id))
    placements: list[PlacedBuffer] = []
    if strategy == "no_reuse":
        cursor = 0
        for spec in stable:
            offset = _align_up(cursor, spec.align)
            placements.append(PlacedBuffer(spec=spec, offset=offset))
            cursor = offset + spec.size
    else:
        order = sorted(buffers, key=lambda s: (-s.size, s.first_use, s.id))
        for spec in order:
            conflicts = sorted(
                (p for p in placements if p.spec.overlaps_lifetime(spec)),
                key=lambda p: p.offset,
            )
            offset = 0
            for p in conflicts:
                if p.offset < offset + spec.size and offset < p.end:
                    offset = _align_up(p.end, spec.align)
            placements.append(PlacedBuffer(spec=spec, offset=offset))
        by_id = {p.spec.id: p for p in placements}
        placements = [by_id[s.id] for s in stable]
    arena = max((p.end for p in placements), default=0)
    plan = MemoryPlan(placements=placements, arena_size=arena, strategy=strategy)
    plan.validate()
    return plan


def liveness_lower_bound(buffers: list[BufferSpec]) -> int:
    """Largest total size of simultaneously live buffers; ignores alignment.

    No plan that keeps every live buffer resident can use a smaller
    arena, so this bounds any offset assignment from below.
    """
    peak = 0
    for probe in buffers:
        t = probe.first_use
        live = sum(b.size for b in buffers if b.first_use <= t <= b.last_use)
        peak = max(peak, live)
    return peak


def build_schedule(config, variant: str = "fused", inplace: bool = False) -> OpSchedule:
    """Operator schedule of one classifier forward pass.

    ``variant`` picks the scan stage: ``unfused`` materializes the full
    decay and drive tensors (4*L*d_inner*d_state bytes each) before a
    separate scan step, while ``fused`` replaces them with a recurrent
    state of 4*d_inner*d_state bytes plus one 4*d_inner staging row,
    independent of sequence length. ``inplace`` lets the activation and
    gating steps overwrite their inputs instead of allocating fresh
    buffers.
    """
    if variant not in SCAN_VARIANTS:
        raise ScheduleError(f"unknown scan variant {variant!r}; choose from {SCAN_VARIANTS}")
    m = config.mamba
    L, F, D, C = config.seq_len, config.input_dim, config.d_model, config.num_classes
    DI, N, R = m.d_inner, m.d_state, m.dt_rank

    steps: list[ScheduleStep] = []
    sizes: dict[str, int] = {}

    def buf(name: str, nbytes: int) -> str:
        sizes[name] = nbytes
        return name

    def emit(op: str, reads: tuple[str, ...], writes: tuple[str, ...]) -> None:
        steps.append(ScheduleStep(op=op, reads=reads, writes=writes))

    emit("input", (), (buf("input", F32_BYTES * L * F),))
    emit("in_proj", ("input",), (buf("proj_out", F32_BYTES * L * D),))
    emit("mamba_in_proj", ("proj_out",), (buf("xz", F32_BYTES * L * 2 * DI),))
    emit("conv", ("xz",), (buf("conv_out", F32_BYTES * L * DI),))
    if inplace:
        u = "conv_out"
        emit("conv_act", ("conv_out",), ("conv_out",))
    else:
        u = buf("conv_act_out", F32_BYTES * L * DI)
        emit("conv_act", ("conv_out",), (u,))
    emit("x_proj", (u,), (buf("xproj_out", F32_BYTES * L * (R + 2 * N)),))
    emit("dt_proj", ("xproj_out",), (buf("dt_out", F32_BYTES * L * DI),))
    if inplace:
        delta = "dt_out"
        emit("dt_act", ("dt_out",), ("dt_out",))
    else:
        delta = buf("delta", F32_BYTES * L * DI)
        emit("dt_act", ("dt_out",), (delta,))
    scan_out = buf("scan_out", F32_BYTES * L * DI)
    if variant == "unfused":
        pair = (buf("a_bar", F32_BYTES * L * DI * N), buf("b_bar_u", F32_BYTES * L * DI * N))
        emit("discretize", (delta, u, "xproj_out"), pair)
        emit("scan", (*pair, "xproj_out", u), (scan_out,))
    else:
        state = buf("scan_state", F32_BYTES * DI * N)
        row = buf("scan_row", F32_BYTES * DI)
        emit("scan_fused", (delta, u, "xproj_out"), (scan_out, state, row))
    if inplace:
        emit("gate_act", ("xz",), ("xz",))
        gated = scan_out
        emit("gate_mul", (scan_out, "xz"), (scan_out,))
    else:
        gate = buf("gate_out", F32_BYTES * L * DI)
        emit("gate_act", ("xz",), (gate,))
        gated = buf("gated", F32_BYTES * L * DI)
        emit("gate_mul", (scan_out, gate), (gated,))
    emit("out_proj", (gated,), (buf("mamba_out", F32_BYTES * L * D),))
    emit("pool", ("mamba_out",), (buf("pooled", F32_BYTES * D),))
    emit("head", ("pooled",), (buf("logits", F32_BYTES * C),))
    emit("output", ("logits",), ())
    return OpSchedule(steps=steps, sizes=sizes)


def arena_bytes(config, variant: str, strategy: str, inplace: bool = False) -> int:
    """Arena size of one (variant, strategy) combination."""
    schedule = build_schedule(config, variant=variant, inplace=inplace)
    return plan_offsets(derive_lifetimes(schedule), strategy=strategy).arena_size


@dataclass
class PlanReport:
    """Arena sizes of all scan-variant / strategy combinations."""

    arenas: dict[tuple[str, str], int] = field(default_factory=dict)
    reduction: float = 0.0


def peak_ram_report(config, inplace: bool = False) -> PlanReport:
    """Plan every variant and strategy; reduction compares the extremes.

    ``reduction`` is 1 - fused-with-reuse over unfused-without-reuse,
    the fraction of peak intermediate RAM removed by applying operator
    fusion and lifetime reuse together.
    """
    report = PlanReport()
    for variant in SCAN_VARIANTS:
        for strategy in PLAN_STRATEGIES:
            report.arenas[(variant, strategy)] = arena_bytes(
                config, variant, strategy, inplace=inplace
            )
    baseline = report.arenas[("unfused", "no_reuse")]
    best = report.arenas[("fused", "lifetime_reuse")]
    report.reduction = 1.0 - best / baseline
    return report


def format_plan(plan: MemoryPlan) -> str:
    """Tab-separated plan text: one id/size/first/last/offset record per
    buffer in (first_use, id) order, closed by an ``#arena`` line."""
    lines = []
    for p in sorted(plan.placements, key=lambda p: (p.spec.first_use, p.spec.id)):
        s = p.spec
        lines.append(f"{s.id}\t{s.size}\t{s.first_use}\t{s.last_use}\t{p.offset}")
    lines.append(f"#arena\t{plan.arena_size}")
    return "\n".join(lines) + "\n"


def parse_plan(text: str, strategy: str = "unknown") -> MemoryPlan:
    """Inverse of format_plan; validates the reconstructed plan.

    The text carries no strategy marker, so the caller may label the
    result via ``strategy``.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    placements = []
    arena = None
    for ln in lines:
        if ln.startswith("#arena\t"):
            arena = int(ln.split("\t")[1])
            continue
        parts = ln.split("\t")
        if len(parts) != 5:
            raise ScheduleError(f"plan text: malformed line {ln!r}")
        name, size, first, last, offset = parts
        placements.append(
            PlacedBuffer(
                spec=BufferSpec(
                    id=name, size=int(size), first_use=int(first), last_use=int(last)
                ),
                offset=int(offset),
            )
        )
    if arena is None:
        raise ScheduleError("plan text: missing '#arena' line")
    plan = MemoryPlan(placements=placements, arena_size=arena, strategy=strategy)
    plan.validate()
    return plan


def format_schedule(schedule: OpSchedule) -> str:
    """Tab-separated schedule text with buffer sizes up front."""
    lines = ["#schedule\tv1"]
    for name in sorted(schedule.sizes):
        lines.append(f"#buffer\t{name}\t{schedule.sizes[name]}")
    for index, step in enumerate(schedule.steps):
        reads = ",".join(step.reads)
        writes = ",".join(step.writes)
        lines.append(f"{index}\t{step.op}\treads:{reads}\twrites:{writes}")
    return "\n".join(lines) + "\n"


def parse_schedule(text: str) -> OpSchedule:
    """Inverse of format_schedule."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "#schedule\tv1":
        raise ScheduleError("schedule text: missing '#schedule\\tv1' header")
    sizes: dict[str, int] = {}
    steps: list[ScheduleStep] = []
    expected_index = 0
    for ln in lines[1:]:
        if ln.startswith("#buffer\t"):
            _, name, size = ln.split("\t")
            sizes[name] = int(size)
            continue
        parts = ln.split("\t")
        if len(parts) != 4 or not parts[2].startswith("reads:") or not parts[3].startswith("writes:"):
            raise ScheduleError(f"schedule text: malformed line {ln!r}")
        index, op, reads, writes = parts
        if int(index) != expected_index:
            raise ScheduleError(f"schedule text: step index {index} out of order")
        expected_index += 1

        def names(token: str) -> tuple[str, ...]:
            body = token.split(":", 1)[1]
            return tuple(body.split(",")) if body else ()

        steps.append(ScheduleStep(op=op, reads=names(reads), writes=names(writes)))
    return OpSchedule(steps=steps, sizes=sizes)


def format_plan_report(report: PlanReport) -> str:
    """Tab-separated peak-RAM summary across variants and strategies."""
    lines = ["#peakram\tv1"]
    for variant in SCAN_VARIANTS:
        for strategy in PLAN_STRATEGIES:
            lines.append(f"{variant}\t{strategy}\t{report.arenas[(variant, strategy)]}")
    lines.append(f"#reduction\t{report.reduction!r}")
    return "\n".join(lines) + "\n"


def parse_plan_report(text: str) -> PlanReport:
    """Inverse of format_plan_report."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "#peakram\tv1":
        raise ScheduleError("peak-RAM text: missing '#peakram\\tv1' header")
    report = PlanReport()
    for ln in lines[1:]:
        if ln.startswith("#reduction\t"):
            report.reduction = float(ln.split("\t")[1])
            continue
        variant, strategy, size = ln.split("\t")
        report.arenas[(variant, strategy)] = int(size)
    return report
