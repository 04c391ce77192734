"""Timing harness for the Poisson -> dense -> LIF pipeline, with optional STDP.

Usage::

    bench pdl --neurons 1000 --steps 1000 --out pdl.csv
    bench stdp-pdl --neurons 500 --steps 1000 --format json --out stdp.json
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .connections import LinearDense
from .encode import poisson_encode
from .learn import STDP, StdpConfig
from .network import SerialLayer
from .neurons import LIF
from .synapses import DeltaSynapse
from .updaters import Accumulator, FullBounding, Sharp, Updater

__all__ = ["BenchConfig", "BenchRecord", "run_pdl", "run_stdp_pdl", "write_csv", "read_csv", "main"]

BENCHMARKS = ("pdl", "stdp_pdl")
FORMATS = ("csv", "json")
FIELDS = ("benchmark", "neurons", "run", "phase", "ms", "spikes")


@dataclass
class BenchConfig:
    """Benchmark settings. ``q_spike`` is the charge (pC) delivered per input spike."""

    benchmark: str = "pdl"
    neurons: int = 100
    steps: int = 1000
    dt: float = 1.0
    seed: int = 0
    warmup_runs: int = 5
    timed_runs: int = 10
    rate_max: float = 250.0
    eta: float = 1e-3
    tau_trace: float = 20.0
    q_spike: float = 20.0
    output: Optional[str] = None
    format: str = "csv"

    def __post_init__(self):
        self.benchmark = self.benchmark.replace("-", "_")
        if self.benchmark not in BENCHMARKS:
            raise ValueError(f"benchmark must be one of {BENCHMARKS}, got {self.benchmark!r}")
        if self.neurons < 1:
            raise ValueError(f"neurons must be at least 1, got {self.neurons}")
        if self.steps < 0:
            raise ValueError(f"steps must be nonnegative, got {self.steps}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")
        if self.warmup_runs < 0:
            raise ValueError(f"warm-up runs must be nonnegative, got {self.warmup_runs}")
        if self.timed_runs < 1:
            raise ValueError(f"timed runs must be at least 1, got {self.timed_runs}")
        if not self.rate_max >= 0:
            raise ValueError(f"rate_max must be nonnegative, got {self.rate_max}")
        if not self.tau_trace > 0:
            raise ValueError(f"tau_trace must be positive, got {self.tau_trace}")
        if not self.q_spike >= 0:
            raise ValueError(f"q_spike must be nonnegative, got {self.q_spike}")
        if self.format not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}, got {self.format!r}")


@dataclass(frozen=True)
class BenchRecord:
    """Timing of one phase of one run. Warm-up runs have negative indices."""

    benchmark: str
    neurons: int
    run: int
    phase: str
    ms: float
    spikes: int


@dataclass
class BenchResult:
    config: BenchConfig
    records: list[BenchRecord]
    weight_stats: Optional[dict] = None
    extra: dict = field(default_factory=dict)

    def timed(self) -> list[BenchRecord]:
        return [r for r in self.records if r.run >= 0]

    def summary(self) -> dict:
        cfg = self.config
        out: dict = {
            "benchmark": cfg.benchmark,
            "neurons": cfg.neurons,
            "steps": cfg.steps,
            "dt": cfg.dt,
            "timed_runs": cfg.timed_runs,
            "warmup_runs": cfg.warmup_runs,
            "phases": {},
        }
        timed = self.timed()
        for phase in dict.fromkeys(r.phase for r in timed):
            ms = np.array([r.ms for r in timed if r.phase == phase])
            spikes = np.array([r.spikes for r in timed if r.phase == phase])
            out["phases"][phase] = {
                "runs": int(ms.size),
                "mean_ms": float(ms.mean()),
                "std_ms": float(ms.std()),
                "mean_spikes": float(spikes.mean()),
            }
        forward = [r.spikes for r in timed if r.phase == "forward"]
        duration_s = cfg.steps * cfg.dt / 1000.0
        out["mean_rate_hz"] = float(np.mean(forward)) / (cfg.neurons * duration_s) if duration_s > 0 else 0.0
        if self.weight_stats is not None:
            out["weights"] = self.weight_stats
        return out


def _build(cfg: BenchConfig):
    rng = np.random.default_rng(cfg.seed)
    rates = rng.uniform(0.0, cfg.rate_max, cfg.neurons)
    weight = rng.uniform(0.0, 1.0, (cfg.neurons, cfg.neurons)).astype(np.float32)
    conn = LinearDense(
        cfg.neurons, cfg.neurons, cfg.dt, synapse=DeltaSynapse.partialconstructor(cfg.q_spike), weight=weight
    )
    layer = SerialLayer(conn, LIF(cfg.neurons, cfg.dt))
    return rates, weight, layer


def _run(cfg: BenchConfig, train: bool) -> BenchResult:
    rates, weight, layer = _build(cfg)
    records: list[BenchRecord] = []
    trainer = None
    if train:
        layer.connection.updater = Updater(
            weight=Accumulator(layer.connection.weight_shape, full_bound=FullBounding(Sharp(1.0), Sharp(0.0)))
        )
        trainer = STDP(StdpConfig(cfg.eta, cfg.eta, cfg.tau_trace, cfg.tau_trace))
        trainer.register_cell("feedforward", layer.cell)

    for run in range(-cfg.warmup_runs, cfg.timed_runs):
        layer.reset()
        layer.connection.weight = weight
        if trainer is not None:
            trainer.clear()

        t0 = time.perf_counter()
        inputs = poisson_encode(rates, cfg.steps, cfg.dt, cfg.seed)
        t_encode = time.perf_counter() - t0

        t_forward = t_train = 0.0
        out_spikes = 0
        for step in range(cfg.steps):
            t0 = time.perf_counter()
            out = layer(inputs[step][None])
            t1 = time.perf_counter()
            t_forward += t1 - t0
            out_spikes += int(out.sum())
            if trainer is not None:
                trainer()
                layer.update()
                t_train += time.perf_counter() - t1

        name, n = cfg.benchmark, cfg.neurons
        records.append(BenchRecord(name, n, run, "encode", t_encode * 1e3, int(inputs.sum())))
        records.append(BenchRecord(name, n, run, "forward", t_forward * 1e3, out_spikes))
        if trainer is not None:
            records.append(BenchRecord(name, n, run, "train", t_train * 1e3, out_spikes))

    stats = None
    if trainer is not None:
        w = layer.connection.weight
        stats = {
            "min": float(w.min()),
            "max": float(w.max()),
            "mean": float(w.mean()),
            "mean_change": float((w - weight).mean()),
        }
    return BenchResult(cfg, records, stats)


def run_pdl(cfg: BenchConfig) -> BenchResult:
    """Poisson encoding of N rates, an N x N dense connection and N LIF neurons.

    Every run (warm-up and timed) replays the same seed, so spike totals
    repeat exactly across runs.
    """
    return _run(dataclasses.replace(cfg, benchmark="pdl"), train=False)


def run_stdp_pdl(cfg: BenchConfig) -> BenchResult:
    """The PDL pipeline with per-step STDP and weights hard-bounded to [0, 1].

    Each run restarts from the same initial weights; ``weight_stats`` holds
    the final weights of the last timed run.
    """
    return _run(dataclasses.replace(cfg, benchmark="stdp_pdl"), train=True)


def write_csv(records: Sequence[BenchRecord], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(FIELDS)
    for r in records:
        writer.writerow([r.benchmark, r.neurons, r.run, r.phase, repr(float(r.ms)), r.spikes])


def read_csv(stream) -> list[BenchRecord]:
    reader = csv.DictReader(stream)
    if tuple(reader.fieldnames or ()) != FIELDS:
        raise ValueError(f"unexpected header {reader.fieldnames}")
    return [
        BenchRecord(row["benchmark"], int(row["neurons"]), int(row["run"]), row["phase"], float(row["ms"]), int(row["spikes"]))
        for row in reader
    ]


def render(result: BenchResult, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        write_csv(result.records, buf)
        return buf.getvalue()
    doc = {
        "config": dataclasses.asdict(result.config),
        "records": [dataclasses.asdict(r) for r in result.records],
        "summary": result.summary(),
    }
    return json.dumps(doc, indent=2) + "\n"


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bench", description=__doc__.splitlines()[0])
    p.add_argument("benchmark", choices=["pdl", "stdp-pdl"])
    p.add_argument("--neurons", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--warmup", dest="warmup_runs", type=int)
    p.add_argument("--runs", dest="timed_runs", type=int)
    p.add_argument("--rate-max", dest="rate_max", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--tau-trace", dest="tau_trace", type=float)
    p.add_argument("--q-spike", dest="q_spike", type=float, help="charge per input spike in pC (default 20)")
    p.add_argument("--out", dest="output")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--config", help="JSON file with BenchConfig fields; flags override it")
    return p


def load_config(args: argparse.Namespace) -> BenchConfig:
    values: dict = {}
    if args.config:
        with open(args.config) as f:
            doc = json.load(f)
        if not isinstance(doc, dict):
            raise ValueError("config file must hold a JSON object")
        known = {f.name for f in dataclasses.fields(BenchConfig)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        values.update(doc)
    for name, value in vars(args).items():
        if name != "config" and value is not None:
            values[name] = value
    return BenchConfig(**values)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except (OSError, ValueError, TypeError) as exc:
        print(f"bench: configuration error: {exc}", file=sys.stderr)
        return 2

    sink = None
    if cfg.output:
        try:
            sink = open(cfg.output, "w", newline="")
        except OSError as exc:
            print(f"bench: cannot write {cfg.output}: {exc}", file=sys.stderr)
            return 2

    result = run_stdp_pdl(cfg) if cfg.benchmark == "stdp_pdl" else run_pdl(cfg)
    text = render(result, cfg.format)
    summary = result.summary()
    lines = [
        f"{summary['benchmark']}: N={cfg.neurons} steps={cfg.steps} dt={cfg.dt} "
        f"timed_runs={cfg.timed_runs} warmup_runs={cfg.warmup_runs}"
    ]
    for phase, s in summary["phases"].items():
        lines.append(f"  {phase:8s} {s['mean_ms']:10.2f} ms +/- {s['std_ms']:.2f}  spikes {s['mean_spikes']:.0f}")
    lines.append(f"  output rate {summary['mean_rate_hz']:.2f} Hz")
    if result.weight_stats is not None:
        w = result.weight_stats
        lines.append(f"  weights min {w['min']:.4f} max {w['max']:.4f} mean {w['mean']:.4f}")

    if sink is not None:
        with sink:
            sink.write(text)
        print("\n".join(lines))
    else:
        sys.stdout.write(text)
        print("\n".join(lines), file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
