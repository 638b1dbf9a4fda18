"""Text chain files and JSON partition/filtration/blockmap/report files.

Chain files::

    tpchain 1 N beta
    T: t1 t2 ...
    x y p
    ...

Entries are sorted by ``x`` then ``y``, probabilities written with 17
significant digits so binary64 values round-trip. Probabilities may also be
given as exact rationals ``a/b``. Lines starting with ``#`` are comments;
the writer uses one to record input lineage.
"""

import hashlib
import json
import math
from fractions import Fraction
from typing import Iterable, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .chain import Filtration, Partition, TargetProblem

CHAIN_MAGIC = "tpchain"
CHAIN_VERSION = 1
JSON_VERSION = 1


class FormatError(ValueError):
    """Malformed or inconsistent input file."""


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    with open(path, "rb") as fh:
        return sha256_bytes(fh.read())


def _num(v: float) -> str:
    return "%.17g" % v


def format_chain(problem: TargetProblem, comments: Iterable[str] = ()) -> str:
    m = sp.csr_matrix(problem.matrix)
    m.eliminate_zeros()
    m.sort_indices()
    lines = [f"{CHAIN_MAGIC} {CHAIN_VERSION} {problem.n_states} {_num(problem.beta)}"]
    lines += ["# " + c for c in comments]
    lines.append("T: " + " ".join(str(int(t)) for t in problem.target))
    for x in range(m.shape[0]):
        for k in range(m.indptr[x], m.indptr[x + 1]):
            lines.append(f"{x} {m.indices[k]} {_num(m.data[k])}")
    return "\n".join(lines) + "\n"


def write_chain(problem: TargetProblem, path, comments: Iterable[str] = ()) -> str:
    """Write ``problem`` and return the sha256 of the written bytes."""
    data = format_chain(problem, comments).encode("ascii")
    with open(path, "wb") as fh:
        fh.write(data)
    return sha256_bytes(data)


def _parse_prob(tok: str) -> Tuple[float, bool]:
    if "/" in tok:
        a, b = tok.split("/", 1)
        return float(Fraction(int(a), int(b))), True
    return float(tok), False


def parse_chain(text: str) -> Tuple[TargetProblem, bool]:
    """Parse chain text; the flag is True when every probability was a rational ``a/b``."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if len(lines) < 2:
        raise FormatError("chain file too short")
    head = lines[0].split()
    if len(head) != 4 or head[0] != CHAIN_MAGIC:
        raise FormatError(f"bad header {lines[0]!r}")
    if int(head[1]) != CHAIN_VERSION:
        raise FormatError(f"unsupported chain version {head[1]}")
    try:
        n = int(head[2])
        beta = float(head[3])
    except ValueError as exc:
        raise FormatError(f"bad header {lines[0]!r}") from exc
    if n < 1:
        raise FormatError("state count must be >= 1")
    if not lines[1].startswith("T:"):
        raise FormatError("second line must list targets as 'T: ...'")
    target = [int(t) for t in lines[1][2:].split()]
    rows, cols, vals = [], [], []
    rational = True
    seen = set()
    for ln in lines[2:]:
        parts = ln.split()
        if len(parts) != 3:
            raise FormatError(f"bad entry line {ln!r}")
        try:
            x, y = int(parts[0]), int(parts[1])
            p, exact = _parse_prob(parts[2])
        except (ValueError, ZeroDivisionError) as exc:
            raise FormatError(f"bad entry line {ln!r}") from exc
        if not (0 <= x < n and 0 <= y < n):
            raise FormatError(f"entry ({x}, {y}) out of range")
        if (x, y) in seen:
            raise FormatError(f"duplicate entry ({x}, {y})")
        seen.add((x, y))
        rational &= exact
        rows.append(x)
        cols.append(y)
        vals.append(p)
    m = sp.csr_matrix((np.array(vals, dtype=np.float64), (np.array(rows, dtype=np.int64),
                                                          np.array(cols, dtype=np.int64))), shape=(n, n))
    return TargetProblem(m, target, beta), rational and bool(vals)


def read_chain(path) -> Tuple[TargetProblem, bool, str]:
    """Read a chain file; returns ``(problem, rational, sha256)``."""
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise FormatError("chain file is not ASCII text") from exc
    problem, rational = parse_chain(text)
    return problem, rational, sha256_bytes(data)


def dump_json(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=1, allow_nan=False) + "\n").encode("ascii")


def write_json(obj, path) -> str:
    data = dump_json(obj)
    with open(path, "wb") as fh:
        fh.write(data)
    return sha256_bytes(data)


def read_json(path, kind: str) -> Tuple[dict, str]:
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        obj = json.loads(data)
    except ValueError as exc:
        raise FormatError(f"{path}: not JSON") from exc
    if not isinstance(obj, dict) or obj.get("format") != kind:
        raise FormatError(f"{path}: expected a {kind} file")
    if obj.get("version") != JSON_VERSION:
        raise FormatError(f"{path}: unsupported version {obj.get('version')!r}")
    return obj, sha256_bytes(data)


def _eps_out(e: float):
    return "infinity" if math.isinf(e) else e


def _eps_in(e) -> float:
    return math.inf if e == "infinity" else float(e)


def partition_to_json(partition: Partition) -> dict:
    return {"n_blocks": partition.n_blocks, "block_of": partition.block_of.tolist()}


def partition_from_json(obj: dict, target_mask: Optional[np.ndarray] = None) -> Partition:
    block_of = np.asarray(obj["block_of"], dtype=np.int64)
    part = Partition.from_labels(block_of, target_mask=target_mask)
    if not np.array_equal(part.block_of, block_of) or part.n_blocks != obj.get("n_blocks", part.n_blocks):
        raise FormatError("partition is not in canonical block order")
    return part


def filtration_to_json(filt: Filtration, chain_sha256: str, settings: dict) -> dict:
    return {
        "format": "tpfiltration",
        "version": JSON_VERSION,
        "chain_sha256": chain_sha256,
        "settings": settings,
        "converged": filt.converged,
        "steps": [dict(epsilon=_eps_out(e), **partition_to_json(p)) for e, p in filt.steps],
    }


def filtration_from_json(obj: dict, target_mask: Optional[np.ndarray] = None) -> Filtration:
    steps: List[Tuple[float, Partition]] = []
    for s in obj["steps"]:
        steps.append((_eps_in(s["epsilon"]), partition_from_json(s, target_mask)))
    return Filtration(steps=steps, converged=bool(obj.get("converged", False)))
