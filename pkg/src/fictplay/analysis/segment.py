"""Split a trace into phases and sync-split pairs."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Phase:
    """Maximal run of rounds with the same type ``(i, j)`` (0-based actions)."""

    start_t: int
    length: int
    i: int
    j: int

    @property
    def end_t(self) -> int:
        return self.start_t + self.length - 1

    @property
    def is_sync(self) -> bool:
        return self.i == self.j

    @property
    def kind(self) -> str:
        return "sync" if self.is_sync else "split"

    def label(self) -> str:
        """1-based label such as ``sync(2)`` or ``split(1,2)``."""
        if self.is_sync:
            return f"sync({self.i + 1})"
        return f"split({self.i + 1},{self.j + 1})"


@dataclass(frozen=True)
class SyncSplitPair:
    """A sync(i) phase followed by its split(j, i) phase, i.e. a transition ``i -> j``."""

    s: int
    T_s: int
    from_action: int
    to_action: int
    sync_len: int
    split_len: int
    psi_start: object
    psi_end: object

    @property
    def length(self) -> int:
        return self.sync_len + self.split_len

    @property
    def next_start(self) -> int:
        return self.T_s + self.length

    @property
    def epsilon(self):
        return self.psi_end - self.psi_start


@dataclass
class Segmentation:
    phases: list
    pairs: list
    prologue: list = field(default_factory=list)
    epilogue: list = field(default_factory=list)
    anomalies: list = field(default_factory=list)

    @property
    def T1(self) -> int | None:
        for ph in self.phases:
            if ph.is_sync:
                return ph.start_t
        return None

    @property
    def pair_starts(self) -> list[int]:
        """``T_1, T_2, ...``: every known pair start, including the start of a trailing sync phase."""
        starts = [p.T_s for p in self.pairs]
        if self.pairs:
            nxt = self.pairs[-1].next_start
            if not starts or starts[-1] != nxt:
                starts.append(nxt)
        elif self.T1 is not None:
            starts.append(self.T1)
        return starts

    def pair_actions(self) -> list[int]:
        """``i_1, i_2, ...`` matching :attr:`pair_starts`."""
        acts = [p.from_action for p in self.pairs]
        if self.pairs:
            acts.append(self.pairs[-1].to_action)
        elif self.T1 is not None:
            acts.append(next(ph.i for ph in self.phases if ph.is_sync))
        return acts

    def round_types(self) -> list[tuple[int, int]]:
        out = []
        for ph in self.phases:
            out.extend([(ph.i, ph.j)] * ph.length)
        return out


def find_phases(i: np.ndarray, j: np.ndarray) -> list[Phase]:
    i = np.asarray(i)
    j = np.asarray(j)
    if i.size == 0:
        return []
    change = np.nonzero((i[1:] != i[:-1]) | (j[1:] != j[:-1]))[0] + 1
    starts = np.concatenate([[0], change])
    ends = np.concatenate([change, [i.size]])
    return [Phase(int(s) + 1, int(e - s), int(i[s]), int(j[s])) for s, e in zip(starts, ends)]


def segment_phases(trace) -> Segmentation:
    """Phases, complete sync-split pairs, prologue and epilogue of a trace.

    A pair is complete when its split phase is followed by another round,
    so its length and end gap are final.  Phases before the first sync are
    the prologue; a trailing sync (or sync + unfinished split) is the
    epilogue.  Successions that break the sync/split alternation are listed
    in ``anomalies`` (they can occur for non-diagonal matrices).
    """
    phases = find_phases(trace.i, trace.j)
    seg = Segmentation(phases, [])
    if not phases:
        return seg
    first_sync = next((k for k, ph in enumerate(phases) if ph.is_sync), len(phases))
    seg.prologue = phases[:first_sync]

    for a, b in zip(phases, phases[1:]):
        if a.is_sync and not (not b.is_sync and b.j == a.i):
            seg.anomalies.append(f"t={b.start_t}: {a.label()} followed by {b.label()}")
        if not a.is_sync and not (b.is_sync and b.i == a.i):
            seg.anomalies.append(f"t={b.start_t}: {a.label()} followed by {b.label()}")

    k = first_sync
    last = len(phases) - 1
    while k <= last:
        ph = phases[k]
        if not ph.is_sync:
            k += 1
            continue
        if k == last:
            seg.epilogue = [ph]
            break
        nxt = phases[k + 1]
        if nxt.is_sync or nxt.j != ph.i:
            k += 1
            continue
        if k + 1 == last:
            seg.epilogue = [ph, nxt]
            break
        T_s = ph.start_t
        end = nxt.end_t + 1
        seg.pairs.append(SyncSplitPair(
            len(seg.pairs) + 1, T_s, ph.i, nxt.i, ph.length, nxt.length,
            trace.psi_value(T_s), trace.psi_value(end)))
        k += 2
    return seg
