"""Walk and density spec files.

Walk spec (``.spec``), one JSON object per line; blank lines and lines
starting with ``#`` are ignored::

    {"k": 2, "n": 2, "label": "example"}
    {"to": 1, "from": 1, "matrix": [[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]}
    ...

The first object is the header.  Every following object is one effect
``B_{to,from}``; sites are 1-based and complex entries are ``[re, im]``
pairs.  Duplicate ``(to, from)`` pairs are rejected.

Density spec, as given on the command line:

* ``bloch:SITE,X1,X2,X3`` -- ``(I + x.sigma) / 2`` at one site (``n = 2``);
* a path to a JSON file holding either
  ``{"blocks": [{"site": 1, "matrix": [[[re, im], ...], ...]}, ...]}`` or
  ``{"bloch": {"site": 1, "x1": 0.5, "x2": 0, "x3": 0}}``.
"""

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .builders import bloch_density
from .model import OqwModel, SiteState


class ParseError(ValueError):
    """Malformed walk or density spec."""


def _complex_grid(grid, n, where):
    if not isinstance(grid, list) or len(grid) != n:
        raise ParseError(f"{where}: expected {n} rows")
    out = np.zeros((n, n), dtype=complex)
    for a, row in enumerate(grid):
        if not isinstance(row, list) or len(row) != n:
            raise ParseError(f"{where}: row {a + 1} must have {n} entries")
        for b, entry in enumerate(row):
            ok = (isinstance(entry, list) and len(entry) == 2
                  and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry))
            if not ok:
                raise ParseError(f"{where}: entry ({a + 1},{b + 1}) must be a [re, im] pair, got {entry!r}")
            out[a, b] = complex(entry[0], entry[1])
    return out


def parse_walk(text, source="<walk>"):
    """Parse walk spec text into an :class:`~oqwalk.model.OqwModel` (0-based)."""
    header = None
    effects = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        where = f"{source}:{lineno}"
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{where}: invalid JSON ({exc.msg} at column {exc.colno})") from None
        if not isinstance(obj, dict):
            raise ParseError(f"{where}: expected a JSON object")
        if header is None:
            try:
                k, n = int(obj["k"]), int(obj["n"])
            except (KeyError, TypeError, ValueError):
                raise ParseError(f"{where}: header must give integer 'k' and 'n'") from None
            if k < 1 or n < 1:
                raise ParseError(f"{where}: k and n must be positive")
            header = {"k": k, "n": n, "label": str(obj.get("label", ""))}
            continue
        try:
            to, frm = obj["to"], obj["from"]
        except KeyError:
            raise ParseError(f"{where}: transition needs 'to', 'from' and 'matrix'") from None
        if not all(isinstance(s, int) and 1 <= s <= header["k"] for s in (to, frm)):
            raise ParseError(f"{where}: sites must be integers in 1..{header['k']}")
        if (to, frm) in effects:
            raise ParseError(f"{where}: duplicate transition to={to} from={frm}")
        effects[(to, frm)] = _complex_grid(obj.get("matrix"), header["n"], where)
    if header is None:
        raise ParseError(f"{source}: empty walk spec")
    return OqwModel(header["k"], header["n"],
                    {(t - 1, f - 1): m for (t, f), m in effects.items()}, label=header["label"])


def _pair(z):
    z = complex(z)
    return [float(z.real), float(z.imag)]


def dump_walk(model):
    """Walk spec text for ``model`` (inverse of :func:`parse_walk`)."""
    lines = [json.dumps({"k": model.k, "n": model.n, "label": model.label})]
    for (i, j), b in sorted(model.effects.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        grid = [[_pair(x) for x in row] for row in b]
        lines.append(json.dumps({"to": i + 1, "from": j + 1, "matrix": grid}))
    return "\n".join(lines) + "\n"


def bundled_specs():
    """Names of the walk specs shipped with the package."""
    root = resources.files("oqwalk") / "specs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".spec"))


def load_walk(name_or_path):
    """Load a walk from a file path or the name of a bundled spec."""
    path = Path(name_or_path)
    if path.is_file():
        return parse_walk(path.read_text(encoding="utf-8"), str(path))
    stem = name_or_path[:-5] if name_or_path.endswith(".spec") else name_or_path
    res = resources.files("oqwalk") / "specs" / f"{stem}.spec"
    if res.is_file():
        return parse_walk(res.read_text(encoding="utf-8"), f"{stem}.spec")
    raise ParseError(f"no walk spec file or bundled spec named {name_or_path!r} "
                     f"(bundled: {', '.join(bundled_specs())})")


def _bloch_state(k, site, x1, x2, x3):
    if not 1 <= site <= k:
        raise ParseError(f"site {site} outside 1..{k}")
    try:
        return SiteState.concentrated(k, site - 1, bloch_density(x1, x2, x3))
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def parse_density(spec, k, n):
    """Parse a density spec into a :class:`~oqwalk.model.SiteState`."""
    if spec.startswith("bloch:"):
        if n != 2:
            raise ParseError("the bloch: shorthand needs degree n = 2")
        parts = spec[len("bloch:"):].split(",")
        if len(parts) != 4:
            raise ParseError(f"bloch spec must be bloch:SITE,X1,X2,X3, got {spec!r}")
        try:
            site = int(parts[0])
            xs = [float(p) for p in parts[1:]]
        except ValueError:
            raise ParseError(f"bloch spec has non-numeric fields: {spec!r}") from None
        return _bloch_state(k, site, *xs)
    path = Path(spec)
    if not path.is_file():
        raise ParseError(f"density spec {spec!r} is neither bloch:... nor an existing file")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    if "bloch" in obj:
        b = obj["bloch"]
        if n != 2:
            raise ParseError("bloch densities need degree n = 2")
        return _bloch_state(k, int(b["site"]), float(b.get("x1", 0)), float(b.get("x2", 0)), float(b.get("x3", 0)))
    if "blocks" not in obj:
        raise ParseError(f"{path}: density file needs 'blocks' or 'bloch'")
    blocks = [np.zeros((n, n), dtype=complex) for _ in range(k)]
    for t, entry in enumerate(obj["blocks"]):
        site = entry.get("site")
        if not isinstance(site, int) or not 1 <= site <= k:
            raise ParseError(f"{path}: blocks[{t}] site must be in 1..{k}")
        blocks[site - 1] = _complex_grid(entry.get("matrix"), n, f"{path}: blocks[{t}]")
    try:
        return SiteState(tuple(blocks))
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None


def concentrated_site(state, tol=1e-12):
    """``(site, rho)`` for a state supported on a single site."""
    support = [i for i, b in enumerate(state.blocks) if np.max(np.abs(b)) > tol]
    if len(support) != 1:
        raise ParseError(f"density must sit on exactly one site, found support {[s + 1 for s in support]}")
    return support[0], state.blocks[support[0]]
