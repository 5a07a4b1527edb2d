"""Passive eavesdropper that re-links pseudonymous trajectories.

The attacker records broadcast messages inside its coverage, chains
observations that share a station identifier into tracklets, then tries to
stitch tracklets across identifier changes: first by quasi-identifier
(semantic) matching, then by minimum-cost kinematic assignment across silence
gaps. Scoring compares the stitched hypotheses against ground truth.

The kinematic stage solves a rectangular assignment problem with a no-match
option; among cost ties the lexicographically smallest assignment by station
identifier wins, so results are reproducible bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

Point = tuple[float, float]

_BIG = 1e15  # infeasible-edge sentinel; must dwarf any plausible no-match cost


@dataclass(frozen=True)
class Observation:
    """One overheard broadcast, as transmitted (reported position, not truth)."""

    t: float
    station_id: str
    scope: str
    position: Point
    velocity: Point
    quasi_ids: Optional[tuple[float, float]] = None


@dataclass(frozen=True)
class NoticeSighting:
    t: float
    station_id: str
    scope: str


class ObservationStore:
    """Time-ordered log of everything the eavesdropper heard."""

    def __init__(self):
        self.observations: list[Observation] = []
        self.notices: list[NoticeSighting] = []

    def add(self, obs: Observation) -> None:
        self.observations.append(obs)

    def add_notice(self, notice: NoticeSighting) -> None:
        self.notices.append(notice)

    def finalize(self) -> None:
        self.observations.sort(key=lambda o: (o.t, o.station_id))
        self.notices.sort(key=lambda n: (n.t, n.station_id))


@dataclass(frozen=True)
class CoveragePost:
    x: float
    y: float
    radius_m: float


class Eavesdropper:
    """Coverage filter plus observation log.

    ``posts=None`` means global coverage. Coverage is evaluated against the
    sender's true position (the attacker either hears a transmission or not);
    what gets recorded is the broadcast content.
    """

    def __init__(self, posts: Optional[Sequence[CoveragePost]] = None):
        self.posts = list(posts) if posts is not None else None
        self.store = ObservationStore()

    def covers(self, true_position: Point) -> bool:
        if self.posts is None:
            return True
        return any(
            math.dist((p.x, p.y), true_position) <= p.radius_m for p in self.posts
        )

    def hear(self, obs: Observation, true_position: Point) -> bool:
        if not self.covers(true_position):
            return False
        self.store.add(obs)
        return True

    def hear_notice(self, notice: NoticeSighting, true_position: Point) -> bool:
        if not self.covers(true_position):
            return False
        self.store.add_notice(notice)
        return True


# --- tracklets ----------------------------------------------------------------


@dataclass
class Tracklet:
    station_id: str
    scope: str
    t_first: float
    t_last: float
    pos_first: Point
    pos_last: Point
    vel_last: Point
    count: int
    quasi_ids: Optional[tuple[float, float]]

    @property
    def duration(self) -> float:
        return self.t_last - self.t_first


def build_tracklets(store: ObservationStore) -> list[Tracklet]:
    """Syntactic chaining: one tracklet per station identifier."""
    by_id: dict[str, Tracklet] = {}
    for obs in store.observations:
        tr = by_id.get(obs.station_id)
        if tr is None:
            by_id[obs.station_id] = Tracklet(
                station_id=obs.station_id,
                scope=obs.scope,
                t_first=obs.t,
                t_last=obs.t,
                pos_first=obs.position,
                pos_last=obs.position,
                vel_last=obs.velocity,
                count=1,
                quasi_ids=obs.quasi_ids,
            )
        else:
            tr.t_last = obs.t
            tr.pos_last = obs.position
            tr.vel_last = obs.velocity
            tr.count += 1
    return sorted(by_id.values(), key=lambda tr: (tr.t_first, tr.station_id))


# --- kinematic association -----------------------------------------------------


@dataclass(frozen=True)
class MotionModel:
    """Constant-velocity extrapolation with gap-widening uncertainty.

    The position uncertainty after a gap of g seconds is
    ``sigma0_m + beta_m_per_s * g``; the cost of pairing an ending tracklet
    with a starting one is the squared extrapolation miss divided by the
    squared uncertainty. ``no_match_cost`` is what leaving a tracklet
    unpaired costs, and gaps above ``max_gap_s`` are never considered.
    """

    sigma0_m: float = 1.0
    beta_m_per_s: float = 2.0
    no_match_cost: float = 50.0
    max_gap_s: float = 30.0


def gap_cost(ending: Tracklet, starting: Tracklet, model: MotionModel) -> float:
    """Cost of hypothesizing that ``starting`` continues ``ending``."""
    gap = starting.t_first - ending.t_last
    if gap <= 0.0 or gap > model.max_gap_s:
        return _BIG
    px = ending.pos_last[0] + ending.vel_last[0] * gap
    py = ending.pos_last[1] + ending.vel_last[1] * gap
    dx = starting.pos_first[0] - px
    dy = starting.pos_first[1] - py
    sigma = model.sigma0_m + model.beta_m_per_s * gap
    return (dx * dx + dy * dy) / (sigma * sigma)


@dataclass
class GapAssignment:
    """Outcome of one assignment subproblem (one connected component)."""

    ending_ids: list[str]
    starting_ids: list[str]
    pairs: list[tuple[str, str]]
    unmatched_endings: list[str]
    unmatched_startings: list[str]
    total_cost: float


def _canonical_total(
    cost: np.ndarray,
    match: dict[int, Optional[int]],
    no_match_cost: float,
    n_start: int,
) -> float:
    """Sum in fixed (row) order so equal assignments give equal floats."""
    total = 0.0
    matched_cols = set()
    for i in sorted(match):
        j = match[i]
        if j is None:
            total += no_match_cost
        else:
            total += float(cost[i, j])
            matched_cols.add(j)
    total += no_match_cost * (n_start - len(matched_cols))
    return total


def _canonicalize_ties(
    cost: np.ndarray,
    match: dict[int, Optional[int]],
    starting_ids: Sequence[str],
) -> None:
    """Rewrite ``match`` in place to the lexicographically smallest optimum.

    Rows arrive sorted by ending id and columns by starting id. Among
    assignments of exactly equal cost the preferred one gives earlier rows
    matches over no-matches and smaller column ids; only exact float ties are
    touched, so unique optima pass through untouched.
    """
    rows = sorted(match)
    changed = True
    guard = 0
    while changed and guard < 4 * (len(rows) ** 2 + 1):
        changed = False
        guard += 1
        matched_cols = {j for j in match.values() if j is not None}
        # prefer smaller column id when a row could swap to an equal-cost free column
        for i in rows:
            j = match[i]
            if j is None:
                continue
            for j2 in range(len(starting_ids)):
                if j2 in matched_cols or j2 == j:
                    continue
                if cost[i, j2] == cost[i, j] and starting_ids[j2] < starting_ids[j]:
                    match[i] = j2
                    matched_cols.discard(j)
                    matched_cols.add(j2)
                    j = j2
                    changed = True
        # prefer assigning the earlier of two rows when costs tie
        for a_idx in range(len(rows)):
            for b_idx in range(a_idx + 1, len(rows)):
                a, b = rows[a_idx], rows[b_idx]
                ja, jb = match[a], match[b]
                if ja is None and jb is not None and cost[a, jb] == cost[b, jb]:
                    match[a], match[b] = jb, None
                    changed = True
                elif ja is not None and jb is not None:
                    # swap targets when the 2x2 minor is an exact tie
                    if (
                        cost[a, ja] + cost[b, jb] == cost[a, jb] + cost[b, ja]
                        and cost[a, jb] < _BIG / 2
                        and cost[b, ja] < _BIG / 2
                        and starting_ids[jb] < starting_ids[ja]
                    ):
                        match[a], match[b] = jb, ja
                        changed = True


def associate_across_gap(
    endings: Sequence[Tracklet],
    startings: Sequence[Tracklet],
    model: MotionModel,
) -> GapAssignment:
    """Minimum-cost pairing of ending and starting tracklets.

    Every tracklet may stay unmatched at ``no_match_cost``. The problem is
    solved as a square assignment with padding rows/columns; ties between
    equal-cost optima are broken toward lexicographically smaller station
    identifiers.
    """
    endings = sorted(endings, key=lambda tr: tr.station_id)
    startings = sorted(startings, key=lambda tr: tr.station_id)
    n_e, n_s = len(endings), len(startings)
    if n_e == 0 or n_s == 0:
        return GapAssignment(
            ending_ids=[tr.station_id for tr in endings],
            starting_ids=[tr.station_id for tr in startings],
            pairs=[],
            unmatched_endings=[tr.station_id for tr in endings],
            unmatched_startings=[tr.station_id for tr in startings],
            total_cost=model.no_match_cost * (n_e + n_s),
        )

    cost = np.empty((n_e, n_s), dtype=float)
    for i, e in enumerate(endings):
        for j, s in enumerate(startings):
            cost[i, j] = gap_cost(e, s, model)

    size = n_e + n_s
    padded = np.full((size, size), model.no_match_cost, dtype=float)
    padded[:n_e, :n_s] = cost
    padded[n_e:, n_s:] = 0.0

    row_ind, col_ind = linear_sum_assignment(padded)
    match: dict[int, Optional[int]] = {i: None for i in range(n_e)}
    for r, c in zip(row_ind, col_ind):
        if r < n_e and c < n_s and padded[r, c] < _BIG / 2:
            match[r] = c

    starting_ids = [tr.station_id for tr in startings]
    _canonicalize_ties(cost, match, starting_ids)

    pairs = [
        (endings[i].station_id, starting_ids[j])
        for i, j in sorted(match.items())
        if j is not None
    ]
    matched_cols = {j for j in match.values() if j is not None}
    return GapAssignment(
        ending_ids=[tr.station_id for tr in endings],
        starting_ids=starting_ids,
        pairs=pairs,
        unmatched_endings=[
            endings[i].station_id for i in sorted(match) if match[i] is None
        ],
        unmatched_startings=[
            sid for j, sid in enumerate(starting_ids) if j not in matched_cols
        ],
        total_cost=_canonical_total(cost, match, model.no_match_cost, n_s),
    )


# --- semantic (quasi-identifier) matching ---------------------------------------


def _quasi_key(quasi: tuple[float, float], tol: float) -> tuple[int, int]:
    return (int(round(quasi[0] / tol)), int(round(quasi[1] / tol)))


def semantic_match(
    tracklets: Sequence[Tracklet], tol: float = 0.01
) -> list[tuple[str, str]]:
    """Merge tracklets that broadcast identical quasi-identifiers.

    Vehicle dimensions ride along in every awareness message; tracklets whose
    dimensions agree within ``tol`` and whose lifetimes do not overlap are
    chained in time order. Any overlap inside a group (two vehicles sharing
    the same dimensions on the road at once) makes the group ambiguous and it
    is left to the kinematic stage. Returns predicted (old, new) pairs.
    """
    groups: dict[tuple[int, int], list[Tracklet]] = {}
    for tr in tracklets:
        if tr.quasi_ids is None:
            continue
        groups.setdefault(_quasi_key(tr.quasi_ids, tol), []).append(tr)
    pairs: list[tuple[str, str]] = []
    for key in sorted(groups):
        members = sorted(groups[key], key=lambda tr: (tr.t_first, tr.station_id))
        if len(members) < 2:
            continue
        ambiguous = any(
            a.t_last >= b.t_first
            for a, b in zip(members, members[1:])
        )
        if ambiguous:
            continue
        pairs.extend(
            (a.station_id, b.station_id) for a, b in zip(members, members[1:])
        )
    return pairs


# --- full linkage pipeline -------------------------------------------------------


@dataclass
class TrackHypothesis:
    """One reconstructed vehicle track: tracklet ids in time order."""

    station_ids: list[str]
    score: float


@dataclass
class LinkageResult:
    tracklets: list[Tracklet]
    predicted_pairs: list[tuple[str, str]]
    semantic_pairs: list[tuple[str, str]]
    assignments: list[GapAssignment]
    chains: list[TrackHypothesis]

    def to_obj(self) -> dict:
        return {
            "tracklet_count": len(self.tracklets),
            "predicted_pairs": [list(p) for p in self.predicted_pairs],
            "semantic_pairs": [list(p) for p in self.semantic_pairs],
            "chains": [
                {"station_ids": c.station_ids, "score": c.score} for c in self.chains
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_obj(), sort_keys=True, indent=2)


def link(
    store: ObservationStore,
    model: Optional[MotionModel] = None,
    *,
    use_quasi_identifiers: bool = True,
) -> LinkageResult:
    """Run the whole attack pipeline over one observation log.

    After semantic matching, kinematic association runs as a forward sweep
    over change epochs: every instant at which new identifiers first appear
    forms one epoch, and those appearances are jointly assigned against the
    identifiers that have fallen silent within the lookback window and are
    not yet explained. Identifiers an epoch leaves unexplained stay available
    to later epochs until the window runs out.
    """
    model = model or MotionModel()
    tracklets = build_tracklets(store)
    by_id = {tr.station_id: tr for tr in tracklets}

    semantic_pairs: list[tuple[str, str]] = []
    if use_quasi_identifiers:
        for scope in sorted({tr.scope for tr in tracklets}):
            semantic_pairs.extend(
                semantic_match([tr for tr in tracklets if tr.scope == scope])
            )
    has_succ = {old for old, _ in semantic_pairs}
    has_pred = {new for _, new in semantic_pairs}

    predicted = list(semantic_pairs)
    assignments: list[GapAssignment] = []
    for scope in sorted({tr.scope for tr in tracklets}):
        scoped = [tr for tr in tracklets if tr.scope == scope]
        open_endings = [tr for tr in scoped if tr.station_id not in has_succ]
        epochs: dict[float, list[Tracklet]] = {}
        for tr in scoped:
            if tr.station_id not in has_pred:
                epochs.setdefault(tr.t_first, []).append(tr)
        matched_endings: set[str] = set()
        for t_epoch in sorted(epochs):
            startings = epochs[t_epoch]
            candidates = [
                e
                for e in open_endings
                if e.station_id not in matched_endings
                and 0.0 < t_epoch - e.t_last <= model.max_gap_s
            ]
            if not candidates:
                continue
            assignment = associate_across_gap(candidates, startings, model)
            assignments.append(assignment)
            predicted.extend(assignment.pairs)
            matched_endings.update(old for old, _ in assignment.pairs)

    chains = _chain(predicted, by_id, assignments, model)
    return LinkageResult(
        tracklets=tracklets,
        predicted_pairs=predicted,
        semantic_pairs=semantic_pairs,
        assignments=assignments,
        chains=chains,
    )


def _chain(
    predicted: list[tuple[str, str]],
    by_id: dict[str, Tracklet],
    assignments: list[GapAssignment],
    model: MotionModel,
) -> list[TrackHypothesis]:
    succ = dict(predicted)
    has_pred = {new for _, new in predicted}
    pair_cost: dict[tuple[str, str], float] = {}
    for a in assignments:
        for old, new in a.pairs:
            pair_cost[(old, new)] = gap_cost(by_id[old], by_id[new], model)
    chains = []
    heads = sorted(
        (sid for sid in succ if sid not in has_pred),
        key=lambda sid: (by_id[sid].t_first, sid),
    )
    for head in heads:
        ids = [head]
        score = 0.0
        cur = head
        while cur in succ:
            nxt = succ[cur]
            score += pair_cost.get((cur, nxt), 0.0)
            ids.append(nxt)
            cur = nxt
        chains.append(TrackHypothesis(station_ids=ids, score=score))
    return chains


# --- scoring ---------------------------------------------------------------------


@dataclass(frozen=True)
class TruthData:
    """What the simulator knows and the attacker is judged against."""

    owner_of: Mapping[str, int]  # station id -> vehicle id
    truth_pairs: Sequence[tuple[str, str]]  # consecutive (old, new) per change
    changes: Sequence  # ChangeRecord-like, for anonymity sets
    silence_of: Mapping[int, Sequence[tuple[float, float, Point]]]
    # per vehicle: (silence start, silence end, change position)


@dataclass(frozen=True)
class AttackMetrics:
    link_accuracy: float
    traceability: float
    mean_anonymity_set: float
    n_truth_pairs: int
    n_correct_pairs: int
    n_predicted_pairs: int

    def to_obj(self) -> dict:
        return {
            "link_accuracy": self.link_accuracy,
            "traceability": self.traceability,
            "mean_anonymity_set": self.mean_anonymity_set,
            "n_truth_pairs": self.n_truth_pairs,
            "n_correct_pairs": self.n_correct_pairs,
            "n_predicted_pairs": self.n_predicted_pairs,
        }


def evaluate_attack(
    linkage: LinkageResult,
    truth: TruthData,
    anonymity_region_m: float = 500.0,
) -> AttackMetrics:
    """Score a linkage result against ground truth.

    link_accuracy: fraction of true consecutive identifier pairs (both sides
    actually observed) that the attacker predicted. traceability: per vehicle,
    the longest correctly-chained run of its awareness tracklets as a fraction
    of its total observed time, averaged over vehicles. mean_anonymity_set:
    for each change, how many vehicles were simultaneously silent nearby
    (itself included); degenerate cases (nothing observed, no changes) score
    the metric at its trivial value 1.0.
    """
    observed = {tr.station_id for tr in linkage.tracklets}
    eligible = [
        (old, new) for old, new in truth.truth_pairs if old in observed and new in observed
    ]
    predicted = set(linkage.predicted_pairs)
    correct = sum(1 for p in eligible if p in predicted)
    link_accuracy = correct / len(eligible) if eligible else 1.0

    succ = dict(linkage.predicted_pairs)
    by_vehicle: dict[int, list[Tracklet]] = {}
    for tr in linkage.tracklets:
        if tr.scope != "CAM":
            continue
        owner = truth.owner_of.get(tr.station_id)
        if owner is None:
            continue
        by_vehicle.setdefault(owner, []).append(tr)
    ratios: list[float] = []
    for vid in sorted(by_vehicle):
        trs = sorted(by_vehicle[vid], key=lambda tr: tr.t_first)
        total = sum(tr.duration for tr in trs)
        if total <= 0.0:
            ratios.append(1.0)
            continue
        best = run = trs[0].duration
        for prev, nxt in zip(trs, trs[1:]):
            if succ.get(prev.station_id) == nxt.station_id:
                run += nxt.duration
            else:
                run = nxt.duration
            best = max(best, run)
        ratios.append(best / total)
    traceability = sum(ratios) / len(ratios) if ratios else 1.0

    sizes: list[int] = []
    for rec in truth.changes:
        if not rec.old_ids:
            continue
        start = rec.t
        end = rec.t + rec.silence_s
        cx, cy = rec.position
        members = set()
        for vid, intervals in truth.silence_of.items():
            for (s0, s1, pos) in intervals:
                if s0 <= end and start <= s1:
                    if math.dist((cx, cy), pos) <= anonymity_region_m:
                        members.add(vid)
                        break
        sizes.append(max(1, len(members)))
    mean_anon = sum(sizes) / len(sizes) if sizes else 1.0

    return AttackMetrics(
        link_accuracy=link_accuracy,
        traceability=traceability,
        mean_anonymity_set=mean_anon,
        n_truth_pairs=len(eligible),
        n_correct_pairs=correct,
        n_predicted_pairs=len(predicted),
    )


# --- helpers for experiments and trace replay ------------------------------------


def relabel_station_ids(
    store: ObservationStore, rng: np.random.Generator
) -> tuple[ObservationStore, dict[str, str]]:
    """Rename every station identifier with a random fresh label.

    Keeps structure and timing, randomizes which identifier string plays
    which role; useful for measuring how often tie-breaks fall either way.
    Returns the relabeled store and the old-to-new mapping so ground truth
    can be carried across.
    """
    old_ids = sorted(
        {o.station_id for o in store.observations}
        | {n.station_id for n in store.notices}
    )
    mapping: dict[str, str] = {}
    used: set[str] = set()
    for old in old_ids:
        while True:
            candidate = f"{rng.integers(0, 2**64, dtype=np.uint64):016x}"
            if candidate not in used:
                used.add(candidate)
                mapping[old] = candidate
                break
    out = ObservationStore()
    for o in store.observations:
        out.add(
            Observation(
                t=o.t,
                station_id=mapping[o.station_id],
                scope=o.scope,
                position=o.position,
                velocity=o.velocity,
                quasi_ids=o.quasi_ids,
            )
        )
    for n in store.notices:
        out.add_notice(NoticeSighting(t=n.t, station_id=mapping[n.station_id], scope=n.scope))
    out.finalize()
    return out, mapping


def load_trace(path: str) -> ObservationStore:
    """Rebuild an observation store from an exported trace file.

    Ground-truth fields in the rows (sender vehicle id) are ignored; the
    attacker only gets what was broadcast.
    """
    store = ObservationStore()
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            kind = row.get("kind")
            if kind == "notice":
                store.add_notice(
                    NoticeSighting(
                        t=float(row["t"]),
                        station_id=row["station_id"],
                        scope=row["scope"],
                    )
                )
            elif kind in ("CAM", "DENM"):
                quasi = row.get("quasi_ids")
                store.add(
                    Observation(
                        t=float(row["t"]),
                        station_id=row["station_id"],
                        scope=kind,
                        position=(float(row["x"]), float(row["y"])),
                        velocity=(float(row["vx"]), float(row["vy"])),
                        quasi_ids=tuple(quasi) if quasi is not None else None,
                    )
                )
    store.finalize()
    return store
