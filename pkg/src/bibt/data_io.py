"""Reading comparison data and writing posterior outputs.

Input formats (UTF-8 CSV with a header row):

* ``game-log``: one row per game with columns ``winner,loser`` and an
  optional ``date``.
* ``aggregated``: one row per pair with columns
  ``label_i,label_j,wins_i,trials``.

Entity labels are sorted lexicographically to fix indices. Numeric output
uses 17 significant digits so values survive a text round trip.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import os
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .complex import build_complex
from .measures import MeasureSummary, global_intransitivity, summarize
from .sampler import ComparisonData, PosteriorDraws

FORMAT_VERSION = 1
FORMATS = ("game-log", "aggregated")


class DataError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass(frozen=True)
class GameRecord:
    winner: str
    loser: str
    date: str | None = None

    def __post_init__(self):
        if not self.winner or not self.loser:
            raise DataError("winner and loser labels must be non-empty")
        if self.winner == self.loser:
            raise DataError(f"winner equals loser ({self.winner!r})")


def fmt(x) -> str:
    return "%.17g" % x


def _read_rows(path, required):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(row for row in fh if not row.startswith("#"))
            if reader.fieldnames is None:
                raise DataError(f"{path}: missing header row")
            header = [h.strip() for h in reader.fieldnames]
            missing = [c for c in required if c not in header]
            if missing:
                raise DataError(f"{path}: header lacks column(s) {', '.join(missing)}")
            reader.fieldnames = header
            rows = [(reader.line_num, row) for row in reader]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    return rows


def aggregate_games(games, labels=None) -> ComparisonData:
    """Count wins and meetings per unordered pair; order of games is irrelevant."""
    games = list(games)
    labels = sorted({g.winner for g in games} | {g.loser for g in games}) if labels is None else labels
    if len(labels) < 3:
        raise DataError(f"need at least 3 entities, found {len(labels)}")
    pos = {lab: i for i, lab in enumerate(labels)}
    idx = build_complex(len(labels))
    wins = np.zeros(idx.n_edges, dtype=np.int64)
    trials = np.zeros(idx.n_edges, dtype=np.int64)
    for g in games:
        i, j = pos[g.winner], pos[g.loser]
        e = idx.edge_index(i, j)
        trials[e] += 1
        if i < j:
            wins[e] += 1
    return ComparisonData(len(labels), wins, trials, list(labels))


def load_games(path, format: str = "game-log") -> ComparisonData:
    if format not in FORMATS:
        raise DataError(f"unknown format {format!r}; expected one of {FORMATS}")
    if format == "game-log":
        games = []
        for line, row in _read_rows(path, ("winner", "loser")):
            winner, loser = (row.get("winner") or "").strip(), (row.get("loser") or "").strip()
            try:
                games.append(GameRecord(winner, loser, (row.get("date") or "").strip() or None))
            except DataError as exc:
                raise DataError(f"{path}:{line}: {exc}") from None
        if not games:
            raise DataError(f"{path}: no entities (file has no games)")
        return aggregate_games(games)

    pairs = {}
    for line, row in _read_rows(path, ("label_i", "label_j", "wins_i", "trials")):
        a, b = row["label_i"].strip(), row["label_j"].strip()
        try:
            wins_a, n = int(row["wins_i"]), int(row["trials"])
        except (TypeError, ValueError):
            raise DataError(f"{path}:{line}: wins_i and trials must be integers") from None
        if not a or not b or a == b:
            raise DataError(f"{path}:{line}: need two distinct non-empty labels")
        if not 0 <= wins_a <= n:
            raise DataError(f"{path}:{line}: need 0 <= wins_i <= trials")
        if a > b:
            a, b, wins_a = b, a, n - wins_a
        if (a, b) in pairs:
            raise DataError(f"{path}:{line}: duplicate pair ({a}, {b})")
        pairs[(a, b)] = (wins_a, n)
    labels = sorted({p for pair in pairs for p in pair})
    if not labels:
        raise DataError(f"{path}: no entities")
    if len(labels) < 3:
        raise DataError(f"{path}: need at least 3 entities, found {len(labels)}")
    idx = build_complex(len(labels))
    pos = {lab: i for i, lab in enumerate(labels)}
    wins = np.zeros(idx.n_edges, dtype=np.int64)
    trials = np.zeros(idx.n_edges, dtype=np.int64)
    for (a, b), (y, n) in pairs.items():
        e = idx.edge_index(pos[a], pos[b])
        wins[e], trials[e] = y, n
    return ComparisonData(len(labels), wins, trials, labels)


def _atomic_write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# format_version={FORMAT_VERSION}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_csv(path, header, rows):
    _atomic_write(path, _csv_text(header, rows))


def write_json(path, payload):
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=False) + "\n")


def draws_to_csv(draws: PosteriorDraws) -> str:
    N, K = draws.s.shape[1], draws.w.shape[1]
    header = [f"s_{i + 1}" for i in range(N)] + [f"w_{l + 1}" for l in range(K)]
    return _csv_text(header, (list(map(float, row)) for row in np.hstack([draws.s, draws.w])))


def read_draws(path):
    """Return (s, w) arrays from a draws CSV."""
    rows = _read_rows(path, ())
    if not rows:
        raise DataError(f"{path}: no draws")
    header = list(rows[0][1].keys())
    s_cols = [c for c in header if c.startswith("s_")]
    w_cols = [c for c in header if c.startswith("w_")]
    try:
        s = np.array([[float(r[c]) for c in s_cols] for _, r in rows])
        w = np.array([[float(r[c]) for c in w_cols] for _, r in rows]).reshape(len(rows), len(w_cols))
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}: non-numeric draw value ({exc})") from None
    return s, w


def _summary_rows(summary: MeasureSummary, index_cols):
    levels = sorted(summary.quantiles)
    for c, label in enumerate(summary.component_labels):
        row = list(index_cols(c)) + [label, float(summary.mean[c]), float(summary.sd[c])]
        row += [float(summary.quantiles[p][c]) for p in levels]
        if summary.flags is not None:
            row.append(int(summary.flags[c]))
        yield row


def summary_to_csv(summary: MeasureSummary) -> str:
    levels = sorted(summary.quantiles)
    header = ["component", "mean", "sd"] + [f"q{p!r}" for p in levels]
    if summary.flags is not None:
        header.append("ci_excludes_zero")
    return _csv_text(header, _summary_rows(summary, lambda c: ()))


def write_summaries(draws: PosteriorDraws, summaries: dict, path_prefix, metadata=None,
                    timestamp: bool = True) -> list[Path]:
    """Write the five output files for one fit; returns their paths.

    ``summaries`` maps quantity names to :class:`MeasureSummary`; missing
    quantities needed for the exports are computed from ``draws``.
    """
    if draws.n_draws == 0:
        raise ValueError("no draws to write")
    prefix = str(path_prefix)
    N = draws.s.shape[1]
    idx = build_complex(N)
    names = draws.entity_labels or [str(i + 1) for i in range(N)]
    summaries = dict(summaries)
    for q in ("global_measure", "scores", "matchup", "grad_flow", "curl_flow", "vorticity"):
        if q not in summaries:
            summaries[q] = summarize(draws, q, idx=idx)

    paths = {key: Path(f"{prefix}_{key}.{ext}") for key, ext in
             (("draws", "csv"), ("summary", "json"), ("matchup", "csv"),
              ("vorticity", "csv"), ("global_measure", "csv"))}

    _atomic_write(paths["draws"], draws_to_csv(draws))

    meta = {
        "format_version": FORMAT_VERSION,
        "model": draws.model,
        "n_entities": N,
        "n_draws": draws.n_draws,
        "entity_labels": list(names),
        "hyperparams": asdict(draws.hyperparams) if draws.hyperparams else None,
    }
    if metadata:
        meta.update(metadata)
    if timestamp:
        meta["created"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
        meta["wall_clock_seconds"] = draws.wall_clock
    meta["summaries"] = {q: s.to_json() for q, s in summaries.items()}
    write_json(paths["summary"], meta)

    g, c, m = (summaries[q] for q in ("grad_flow", "curl_flow", "matchup"))
    write_csv(
        paths["matchup"],
        ["i", "j", "label_i", "label_j", "grad_mean", "curl_mean", "matchup_mean"],
        ([int(i) + 1, int(j) + 1, names[i], names[j], float(g.mean[e]), float(c.mean[e]),
          float(m.mean[e])] for e, (i, j) in enumerate(idx.edges)),
    )

    vort = summaries["vorticity"]
    levels = sorted(vort.quantiles)
    rank = np.empty(len(vort.mean), dtype=int)
    rank[vort.top(len(vort.mean))] = np.arange(1, len(vort.mean) + 1)
    write_csv(
        paths["vorticity"],
        ["i", "j", "k", "label_i", "label_j", "label_k", "mean", "sd"]
        + [f"q{p!r}" for p in levels] + ["ci_excludes_zero", "abs_mean_rank"],
        ([int(i) + 1, int(j) + 1, int(k) + 1, names[i], names[j], names[k],
          float(vort.mean[t]), float(vort.sd[t])]
         + [float(vort.quantiles[p][t]) for p in levels]
         + [int(vort.flags[t]), int(rank[t])]
         for t, (i, j, k) in enumerate(idx.triangles)),
    )

    trace = global_intransitivity(draws.M_grad, draws.M_curl)
    write_csv(paths["global_measure"], ["draw", "global_intransitivity"],
              ([d + 1, float(v)] for d, v in enumerate(trace)))
    return list(paths.values())


def read_edge_flow(path):
    """Edge flow from a CSV with columns ``i,j,value`` (1-based vertices).

    Either orientation may be given; (j, i) rows are negated. Unlisted edges
    are zero. Returns ``(n_entities, values)``.
    """
    rows = _read_rows(path, ("i", "j", "value"))
    if not rows:
        raise DataError(f"{path}: empty flow file")
    parsed = []
    for line, row in rows:
        try:
            i, j, v = int(row["i"]) - 1, int(row["j"]) - 1, float(row["value"])
        except (TypeError, ValueError):
            raise DataError(f"{path}:{line}: expected integer i, j and real value") from None
        if i < 0 or j < 0 or i == j:
            raise DataError(f"{path}:{line}: need distinct 1-based vertices")
        parsed.append((line, i, j, v))
    n = max(max(i, j) for _, i, j, _ in parsed) + 1
    if n < 3:
        raise DataError(f"{path}: need at least 3 vertices")
    idx = build_complex(n)
    values = np.zeros(idx.n_edges)
    seen = set()
    for line, i, j, v in parsed:
        e = idx.edge_index(i, j)
        if e in seen:
            raise DataError(f"{path}:{line}: edge ({i + 1}, {j + 1}) listed twice")
        seen.add(e)
        values[e] = v if i < j else -v
    return n, values


def write_matrix(path, matrix):
    write_csv(path, [f"c{c + 1}" for c in range(matrix.shape[1])],
              (list(map(float, row)) for row in matrix))
