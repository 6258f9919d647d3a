"""CSV output with fixed column order and a flat ``key = value`` config format."""
from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

from .experiment import RegretCurve, SummaryRow

CURVE_COLUMNS = ("experiment", "agent", "env", "param_n", "epsilon", "beta", "sigma",
                 "prior_draw", "seed", "episode", "regret", "cum_regret")
SUMMARY_COLUMNS = ("experiment", "agent", "env", "param_n", "metric", "value", "stderr",
                   "samples")


def fmt(x) -> str:
    """Floats with 17 significant digits so they parse back exactly; '' for None."""
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _csv_text(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def summary_csv(rows: Iterable[SummaryRow]) -> str:
    return _csv_text(SUMMARY_COLUMNS, ((r.experiment, r.agent, r.env, r.param_n, r.metric,
                                        float(r.value), float(r.stderr), r.samples)
                                       for r in rows))


def curve_csv(curves: Iterable[RegretCurve], experiment: str, param_n: int,
              epsilon: float | None = None) -> str:
    def rows():
        for c in curves:
            beta = c.params.get("beta")
            sigma = c.params.get("sigma")
            cum = c.cumulative
            for ell, (r, cr) in enumerate(zip(c.regret, cum), start=1):
                yield (experiment, c.agent, c.env, param_n, epsilon,
                       None if beta is None else float(beta),
                       None if sigma is None else float(sigma),
                       c.draw, c.seed, ell, float(r), float(cr))
    return _csv_text(CURVE_COLUMNS, rows())


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the same directory, renamed on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_summary_csv(text: str) -> list[SummaryRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != SUMMARY_COLUMNS:
        raise ValueError(f"unexpected columns {reader.fieldnames}")
    return [SummaryRow(r["experiment"], r["agent"], r["env"], int(r["param_n"]), r["metric"],
                       float(r["value"]), float(r["stderr"]), int(r["samples"]))
            for r in reader]


def read_config(path: str | os.PathLike) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are skipped.

    Keys use dashes or underscores interchangeably and are returned with
    underscores. Values stay strings; the caller converts them.
    """
    out: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or not key:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        out[key] = value.strip()
    return out
