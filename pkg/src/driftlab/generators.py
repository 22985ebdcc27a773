"""Seeded synthetic streams standing in for non-redistributable datasets.

Two generators live here:

* :func:`generate_text_stream` produces token-bearing records (think
  "libraries used by an app") whose malicious vocabulary is swapped at
  every drift point while the benign vocabulary stays put.
* :func:`generate_traces` produces system-call traces from a Markov
  chain; anomalous traces carry one burst of calls from a separate
  distribution and are otherwise indistinguishable from normal ones.

Both are pure functions of their config (including the seed), so equal
configs give byte-identical output.
"""

from __future__ import annotations

import bisect
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from driftlab.records import BENIGN, MALICIOUS, Stream, StreamFormatError, StreamRecord
from driftlab.validation import check_fraction, check_positive_int

NORMAL = "normal"
ANOMALOUS = "anomalous"

_NORMAL_CALLS = (
    "read", "write", "open", "close", "stat", "fstat", "lstat", "poll", "lseek",
    "mmap", "mprotect", "munmap", "brk", "ioctl", "pread64", "pwrite64", "readv",
    "writev", "access", "pipe", "select", "sched_yield", "mremap", "msync",
    "dup", "dup2", "nanosleep", "getpid", "socket", "connect", "accept", "sendto",
    "recvfrom", "sendmsg", "recvmsg", "bind", "listen", "getsockname", "clone",
    "fork", "wait4", "fcntl", "flock", "fsync", "getdents", "getcwd", "chdir",
    "rename", "mkdir", "rmdir", "futex", "epoll_wait", "epoll_ctl", "gettid",
)
_ANOMALY_CALLS = (
    "ptrace", "setuid", "setgid", "chmod", "chown", "unlink", "kill", "execve",
    "init_module", "delete_module", "mount", "umount2", "reboot", "kexec_load",
    "setns", "unshare", "personality", "iopl", "ioperm", "swapon",
)


@dataclass(frozen=True)
class GeneratorConfig:
    """Parameters of the vocabulary-drift text stream.

    ``drift_at`` lists the days at which the malicious vocabulary is
    replaced. ``noise`` is the probability that a token is drawn from the
    other class's current vocabulary. ``subclass_schedule`` is a list of
    per-period ``{subclass: weight}`` mixtures; period ``k`` covers days
    ``[k * period_days, (k + 1) * period_days)`` and the last mixture
    applies to every later day.
    """

    n_records: int = 20_000
    class_ratio: float = 0.18
    drift_at: tuple = ()
    vocab_size: int = 20
    tokens_per_record: int = 10
    noise: float = 0.0
    subclass_schedule: Optional[tuple] = None
    subclass_token_share: float = 0.5
    period_days: int = 30
    days: int = 730
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "drift_at", tuple(int(d) for d in self.drift_at))
        if self.subclass_schedule is not None:
            object.__setattr__(
                self, "subclass_schedule", tuple(dict(m) for m in self.subclass_schedule)
            )
        self.validate()

    def validate(self):
        check_positive_int(self.n_records, "n_records")
        check_fraction(self.class_ratio, "class_ratio", closed=False)
        check_positive_int(self.vocab_size, "vocab_size")
        check_positive_int(self.tokens_per_record, "tokens_per_record")
        check_positive_int(self.period_days, "period_days")
        check_positive_int(self.days, "days")
        if not 0.0 <= self.noise < 1.0:
            raise ValueError(f"noise must lie in [0, 1), got {self.noise}")
        if not 0.0 <= self.subclass_token_share <= 1.0:
            raise ValueError("subclass_token_share must lie in [0, 1]")
        prev = 0
        for d in self.drift_at:
            if d <= prev or d >= self.days:
                raise ValueError(
                    f"drift_at must be strictly increasing inside (0, {self.days}), got {self.drift_at}"
                )
            prev = d
        if self.subclass_schedule is not None:
            if not self.subclass_schedule:
                raise ValueError("subclass_schedule must not be empty")
            for mix in self.subclass_schedule:
                if not mix or any(w < 0 for w in mix.values()) or sum(mix.values()) <= 0:
                    raise ValueError(f"invalid subclass mixture {mix!r}")


@dataclass(frozen=True)
class TraceConfig:
    """Parameters of the system-call trace generator.

    With ``disjoint=True`` bursts use calls that never occur in normal
    traces; otherwise bursts draw uniformly from the normal alphabet.
    """

    n_traces: int = 200
    trace_length_range: tuple = (200, 600)
    syscall_alphabet_size: int = 20
    anomaly_ratio: float = 0.2
    anomaly_burst_length: int = 20
    anomaly_alphabet_size: int = 8
    disjoint: bool = True
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "trace_length_range", tuple(self.trace_length_range))
        self.validate()

    def validate(self):
        check_positive_int(self.n_traces, "n_traces")
        lo, hi = self.trace_length_range
        if not 1 <= lo <= hi:
            raise ValueError(f"invalid trace_length_range {self.trace_length_range}")
        if not 2 <= self.syscall_alphabet_size <= len(_NORMAL_CALLS):
            raise ValueError(f"syscall_alphabet_size must lie in [2, {len(_NORMAL_CALLS)}]")
        if not 1 <= self.anomaly_alphabet_size <= len(_ANOMALY_CALLS):
            raise ValueError(f"anomaly_alphabet_size must lie in [1, {len(_ANOMALY_CALLS)}]")
        if not 0.0 <= self.anomaly_ratio <= 1.0:
            raise ValueError("anomaly_ratio must lie in [0, 1]")
        if not 1 <= self.anomaly_burst_length <= lo:
            raise ValueError("anomaly_burst_length must lie in [1, min trace length]")

    @property
    def normal_alphabet(self):
        return _NORMAL_CALLS[: self.syscall_alphabet_size]

    @property
    def anomaly_alphabet(self):
        if self.disjoint:
            return _ANOMALY_CALLS[: self.anomaly_alphabet_size]
        return self.normal_alphabet


@dataclass
class Trace:
    calls: list
    label: str
    burst: Optional[tuple] = None  # (start, stop) of the anomalous segment
    id: str = ""

    def __iter__(self):
        return iter((self.calls, self.label))


def benign_token(j: int) -> str:
    return f"ben_{j:03d}"


def malicious_token(concept: int, j: int) -> str:
    return f"mal{concept}_{j:03d}"


def subclass_token(name: str, j: int) -> str:
    return f"sub_{name}_{j:03d}"


def generate_text_stream(cfg: GeneratorConfig) -> Stream:
    """Generate the vocabulary-drift token stream described by ``cfg``."""
    rng = np.random.default_rng(cfg.seed)
    n, k = cfg.n_records, cfg.tokens_per_record
    timestamps = np.sort(rng.integers(0, cfg.days, size=n))
    n_mal = int(round(cfg.class_ratio * n))
    is_mal = np.zeros(n, dtype=bool)
    is_mal[rng.permutation(n)[:n_mal]] = True

    picks = rng.integers(0, cfg.vocab_size, size=(n, k))
    leak = rng.random((n, k)) < cfg.noise
    schedule = cfg.subclass_schedule
    if schedule is not None:
        names = sorted({name for mix in schedule for name in mix})
        use_sub = rng.random((n, k)) < cfg.subclass_token_share
        sub_u = rng.random(n)
        cdfs = []
        for mix in schedule:
            w = np.array([mix.get(name, 0.0) for name in names], dtype=float)
            cdfs.append(np.cumsum(w / w.sum()))

    records = []
    drift_at = list(cfg.drift_at)
    for i in range(n):
        ts = int(timestamps[i])
        concept = bisect.bisect_right(drift_at, ts)
        mal = bool(is_mal[i])
        subclass = None
        if schedule is not None:
            period = min(ts // cfg.period_days, len(schedule) - 1)
            idx = int(np.searchsorted(cdfs[period], sub_u[i], side="right"))
            subclass = names[min(idx, len(names) - 1)]
        tokens = []
        for j in range(k):
            v = int(picks[i, j])
            if subclass is not None and use_sub[i, j]:
                tokens.append(subclass_token(subclass, v))
            elif mal != bool(leak[i, j]):
                tokens.append(malicious_token(concept, v))
            else:
                tokens.append(benign_token(v))
        records.append(StreamRecord(
            id=f"r{i:07d}",
            timestamp=ts,
            tokens=tuple(tokens),
            true_label=MALICIOUS if mal else BENIGN,
            label_available_at=ts,
            subclass=subclass,
        ))
    return Stream(tuple(records), frozenset((BENIGN, MALICIOUS)))


def _transition_matrix(rng, size):
    # sparse-ish rows give the chain recognisable call patterns
    return rng.dirichlet(np.full(size, 0.3), size=size)


def generate_traces(cfg: TraceConfig) -> list:
    """Generate labeled system-call traces.

    Each anomalous trace is a normal trace with one contiguous segment of
    ``anomaly_burst_length`` calls overwritten by anomaly calls.
    """
    rng = np.random.default_rng(cfg.seed)
    alphabet = cfg.normal_alphabet
    a = len(alphabet)
    trans = _transition_matrix(rng, a)
    cum = np.cumsum(trans, axis=1)
    start = rng.dirichlet(np.ones(a))
    burst_alphabet = cfg.anomaly_alphabet
    n_anom = int(round(cfg.anomaly_ratio * cfg.n_traces))
    is_anom = np.zeros(cfg.n_traces, dtype=bool)
    is_anom[rng.permutation(cfg.n_traces)[:n_anom]] = True
    lo, hi = cfg.trace_length_range

    traces = []
    for t in range(cfg.n_traces):
        length = int(rng.integers(lo, hi + 1))
        u = rng.random(length)
        state = int(np.searchsorted(np.cumsum(start), u[0], side="right"))
        state = min(state, a - 1)
        seq = [state]
        for step in range(1, length):
            state = min(int(np.searchsorted(cum[state], u[step], side="right")), a - 1)
            seq.append(state)
        calls = [alphabet[s] for s in seq]
        burst = None
        if is_anom[t]:
            b = cfg.anomaly_burst_length
            begin = int(rng.integers(0, length - b + 1))
            picks = rng.integers(0, len(burst_alphabet), size=b)
            calls[begin: begin + b] = [burst_alphabet[p] for p in picks]
            burst = (begin, begin + b)
        traces.append(Trace(calls, ANOMALOUS if is_anom[t] else NORMAL, burst, f"t{t:05d}"))
    return traces


def trace_to_json(trace: Trace) -> dict:
    return {
        "id": trace.id,
        "label": trace.label,
        "calls": list(trace.calls),
        "burst": list(trace.burst) if trace.burst is not None else None,
    }


def traces_to_jsonl(traces) -> str:
    lines = [json.dumps(trace_to_json(t), sort_keys=True, separators=(",", ":")) for t in traces]
    return "".join(line + "\n" for line in lines)


def write_traces(traces, path) -> None:
    Path(path).write_text(traces_to_jsonl(traces), encoding="utf-8")


def load_traces(path) -> list:
    """Read traces written by :func:`write_traces`."""
    traces = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                burst = obj.get("burst")
                traces.append(Trace(list(obj["calls"]), obj["label"],
                                    tuple(burst) if burst else None, obj.get("id", "")))
            except (ValueError, KeyError, TypeError) as exc:
                raise StreamFormatError(f"bad trace: {exc}", lineno) from None
    return traces


def sha256_of_traces(traces) -> str:
    return hashlib.sha256(traces_to_jsonl(traces).encode("utf-8")).hexdigest()
