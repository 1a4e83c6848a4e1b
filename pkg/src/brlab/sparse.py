"""Dyadic mesh, stopping-time selection, sparsity certificates, bilinear forms.

The recursion follows the level-set construction: at a node ``Q`` with
input ``f`` (supported in ``6Q``), the exceptional set

    E = { x in Q : star(f) + starstar(f) + M_{p0}(f) > C (avg_{6Q} |f|^{p0})^{1/p0} }

is thresholded with an adaptive constant (``C`` doubles until
``|E| <= |Q|/2``), covered by maximal dyadic cubes of ``D(Q)``, and the
recursion descends on ``(f * 1_{6Q_j}, Q_j)``.  Because ``|E| <= |Q|/2`` is
certified before selection, the collection is sparse by construction, and
the certificate is verified in exact integer arithmetic on cell counts
(cube measures are ``cells^n * dx^n`` with dyadic ``cells``).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .grid import Box, GridSpec, SampledField, cube_average, mask_to_box
from .maximal import MaximalConfig, MaximalEngine
from .multiplier import apply_bochner_riesz

__all__ = [
    "ThresholdFailure",
    "DyadicCube",
    "SparseCollection",
    "SelectionTrace",
    "TraceNode",
    "ExceptionalResult",
    "root_cube",
    "exceptional_set",
    "build_sparse",
    "sparse_form",
    "bilinear_pairing",
    "off_diagonal_check",
    "collection_to_csv",
    "trace_to_json",
]

RECURSION_FLOOR_CELLS = 4  # cubes below 4 cells per axis (4^n samples) are never selected


class ThresholdFailure(RuntimeError):
    """Raised when no admissible threshold constant achieves |E| <= |Q|/2."""


@dataclass(frozen=True)
class DyadicCube:
    """Address in the dyadic mesh D(Q0): root low corner (grid index), root
    side in cells, depth, and integer coordinates at that depth."""

    spec: GridSpec
    root_lo: tuple[int, ...]
    root_cells: int
    level: int
    index: tuple[int, ...]

    def __post_init__(self):
        if self.root_cells & (self.root_cells - 1):
            raise ValueError("root side must be a power-of-two number of cells")
        if self.root_cells >> self.level << self.level != self.root_cells:
            raise ValueError(f"level {self.level} too deep for root of {self.root_cells} cells")
        if not all(0 <= ix < (1 << self.level) for ix in self.index):
            raise ValueError(f"index {self.index} out of range at level {self.level}")

    @property
    def cells(self) -> int:
        return self.root_cells >> self.level

    @property
    def cell_count(self) -> int:
        return self.cells ** self.spec.n

    @property
    def lo_px(self) -> tuple[int, ...]:
        return tuple(self.root_lo[i] + self.index[i] * self.cells
                     for i in range(self.spec.n))

    @property
    def side(self) -> float:
        return self.cells * self.spec.dx

    @property
    def measure(self) -> float:
        return self.side ** self.spec.n

    def box(self) -> Box:
        dx, half = self.spec.dx, self.spec.N // 2
        lo = tuple((p - half) * dx for p in self.lo_px)
        return Box(lo, tuple(l + self.side for l in lo))

    def box6(self) -> Box:
        return self.box().dilate(6.0)

    def children(self) -> list["DyadicCube"]:
        kids = []
        for bits in itertools.product((0, 1), repeat=self.spec.n):
            kids.append(DyadicCube(self.spec, self.root_lo, self.root_cells,
                                   self.level + 1,
                                   tuple(2 * self.index[i] + bits[i]
                                         for i in range(self.spec.n))))
        return kids

    def parent(self) -> "DyadicCube":
        if self.level == 0:
            raise ValueError("root cube has no parent in D(Q0)")
        return DyadicCube(self.spec, self.root_lo, self.root_cells,
                          self.level - 1, tuple(ix // 2 for ix in self.index))

    @property
    def addr(self) -> tuple:
        return (self.level,) + self.index

    def window(self) -> tuple[tuple[int, int], ...]:
        return tuple((p, p + self.cells) for p in self.lo_px)


def root_cube(f: SampledField, g: SampledField | None = None) -> DyadicCube:
    """Smallest grid-aligned power-of-two cube Q0, centered in the domain,
    with ``supp f (and g) inside 6 Q0`` and ``6 Q0`` inside the domain."""
    boxes = [h.support for h in (f, g) if h is not None and h.support is not None]
    if not boxes:
        raise ValueError("root_cube needs at least one declared support box")
    union = boxes[0]
    for b in boxes[1:]:
        union = union.union(b)
    spec = f.spec
    corner_max = max(max(abs(l), abs(h)) for l, h in zip(union.lo, union.hi))
    min_cells = corner_max / (3.0 * spec.dx)
    m0 = RECURSION_FLOOR_CELLS
    while m0 < min_cells - 1e-9:
        m0 *= 2
    if 6 * m0 > spec.N:
        raise ValueError(
            f"supports too large for domain: 6 Q0 needs {6 * m0} cells > N = {spec.N}"
        )
    lo = (spec.N // 2 - m0 // 2,) * spec.n
    return DyadicCube(spec, lo, m0, 0, (0,) * spec.n)


@dataclass(frozen=True)
class ExceptionalResult:
    """Adaptive threshold constant, selected maximal cubes, and diagnostics."""

    c: float
    cubes: tuple[DyadicCube, ...]
    threshold: float            # C * (avg_{6Q} |f|^{p0})^{1/p0}
    e_cells: int                # grid samples in the super-level set
    flagged: tuple[DyadicCube, ...]  # floor-terminated cubes (mass absorbed)

    def e_ratio(self, cube: DyadicCube) -> Fraction:
        return Fraction(self.e_cells, cube.cell_count)


def _superlevel_mask(phi_w: np.ndarray, threshold: float) -> np.ndarray:
    return phi_w > threshold  # strict, as the level-set definition is written


def _box_count(prefix: np.ndarray, lo: tuple[int, ...], hi: tuple[int, ...]) -> int:
    """Inclusion-exclusion on an (n-dim) integral image with leading zero pad."""
    n = prefix.ndim
    total = 0
    for bits in itertools.product((0, 1), repeat=n):
        idx = tuple(hi[i] if bits[i] == 0 else lo[i] for i in range(n))
        total += (-1) ** sum(bits) * int(prefix[idx])
    return total


def _maximal_cubes(root: DyadicCube, e_mask: np.ndarray,
                   floor_cells: int = RECURSION_FLOOR_CELLS
                   ) -> tuple[list[DyadicCube], list[DyadicCube]]:
    """Maximal dyadic cubes of D(root) fully inside the level set, recursion
    stopping at the 4-cell floor (floor-terminated partial cubes flagged)."""
    prefix = e_mask.astype(np.int64)
    for axis in range(e_mask.ndim):
        prefix = np.cumsum(prefix, axis=axis)
    prefix = np.pad(prefix, [(1, 0)] * e_mask.ndim)

    selected: list[DyadicCube] = []
    flagged: list[DyadicCube] = []
    root_lo = root.lo_px
    stack = [root]
    while stack:
        cube = stack.pop()
        lo = tuple(cube.lo_px[i] - root_lo[i] for i in range(cube.spec.n))
        hi = tuple(l + cube.cells for l in lo)
        cnt = _box_count(prefix, lo, hi)
        if cnt == 0:
            continue
        if cnt == cube.cell_count and cube is not root:
            selected.append(cube)
        elif cube.cells // 2 >= floor_cells:
            stack.extend(sorted(cube.children(), key=lambda c: c.addr, reverse=True))
        else:
            flagged.append(cube)
    selected.sort(key=lambda c: c.addr)
    flagged.sort(key=lambda c: c.addr)
    return selected, flagged


def exceptional_set(f: SampledField, q0_cube: DyadicCube, delta: float,
                    p0: float, cfg: MaximalConfig | None = None, *,
                    c_init: float = 8.0, c_max: float = 2.0 ** 20,
                    floor_cells: int = RECURSION_FLOOR_CELLS
                    ) -> ExceptionalResult:
    """Threshold the sum of the three maximal operators on the cube's grid.

    Starts at ``c_init`` and doubles the constant until the super-level set
    covers at most half of the cube; raises :class:`ThresholdFailure` past
    ``c_max`` (a sign that delta sits below the operators' boundedness
    range, or of grid pathology).
    """
    cfg = cfg if cfg is not None else MaximalConfig(p0=p0)
    window = q0_cube.window()
    wsl = tuple(slice(l, h) for l, h in window)

    base = cube_average(f, q0_cube.box6(), p0)
    if not np.any(f.values):
        return ExceptionalResult(c_init, (), c_init * base, 0, ())

    engine = MaximalEngine(f, delta, cfg)
    phi = engine.star_values(window) + engine.starstar_values(window)
    phi = phi + engine.hl_values(p0, window)
    phi_w = phi[wsl]

    half = q0_cube.cell_count // 2
    c = float(c_init)
    while True:
        mask = _superlevel_mask(phi_w, c * base)
        e_cells = int(np.count_nonzero(mask))
        if e_cells <= half:
            break
        c *= 2.0
        if c > c_max:
            raise ThresholdFailure(
                f"threshold failure: |E| > |Q|/2 up to C = {c_max}"
            )
    cubes, flagged = _maximal_cubes(q0_cube, mask, floor_cells)
    return ExceptionalResult(c, tuple(cubes), c * base, e_cells, tuple(flagged))


@dataclass(frozen=True)
class TraceNode:
    cube: DyadicCube
    c: float
    threshold: float
    e_ratio: Fraction
    children: tuple[DyadicCube, ...]
    flagged: tuple[DyadicCube, ...]
    off_diagonal: tuple[float, ...] | None = None


@dataclass(frozen=True)
class SelectionTrace:
    nodes: tuple[TraceNode, ...]

    @property
    def depth(self) -> int:
        return max((n.cube.level for n in self.nodes), default=0) + 1

    @property
    def max_c(self) -> float:
        return max((n.c for n in self.nodes), default=0.0)


@dataclass(frozen=True)
class SparseCollection:
    """Rooted forest of selected cubes with its sparsity certificate."""

    root: DyadicCube
    cubes: tuple[DyadicCube, ...]
    children: dict  # DyadicCube -> tuple[DyadicCube, ...]

    def certificate(self) -> dict:
        """Per-cube ratio sum(|child|)/|cube| as an exact Fraction."""
        out = {}
        for cube in self.cubes:
            kids = self.children.get(cube, ())
            out[cube] = Fraction(sum(k.cell_count for k in kids), cube.cell_count)
        return out

    def verify(self) -> bool:
        """Exact sparsity check: every ratio <= 1/2, children disjoint and
        strictly inside their parent."""
        for cube, ratio in self.certificate().items():
            if ratio > Fraction(1, 2):
                return False
            kids = self.children.get(cube, ())
            seen = set()
            for k in kids:
                if not (k.level > cube.level and _contains(cube, k)):
                    return False
                lo, hi = k.lo_px, tuple(p + k.cells for p in k.lo_px)
                for other in seen:
                    if _overlap(lo, hi, other):
                        return False
                seen.add((lo, hi))
        return True


def _contains(parent: DyadicCube, kid: DyadicCube) -> bool:
    shift = kid.level - parent.level
    return all(kid.index[i] >> shift == parent.index[i] for i in range(parent.spec.n))


def _overlap(lo, hi, other) -> bool:
    olo, ohi = other
    return all(l < oh and ol < h for l, h, ol, oh in zip(lo, hi, olo, ohi))


def build_sparse(f: SampledField, g: SampledField | None, delta: float,
                 p0: float = 1.2, q0: float = 2.0,
                 cfg: MaximalConfig | None = None, *,
                 c_init: float = 8.0, c_max: float = 2.0 ** 20,
                 floor_cells: int = RECURSION_FLOOR_CELLS,
                 collect_offdiag: bool = False
                 ) -> tuple[SparseCollection, SelectionTrace]:
    """Iterative driver for the stopping-time selection.

    Pushes ``(f * 1_{6 Q0}, Q0)`` and, at each node, adds the cube to the
    collection and recurses on ``(f * 1_{6 Q_j}, Q_j)`` over the node's
    exceptional cubes.  Terminates because every child covers at most half
    its parent and the 4-cell floor halts descent.
    """
    cfg = cfg if cfg is not None else MaximalConfig(p0=p0, q0=q0)
    q0_cube = root_cube(f, g)
    cubes: list[DyadicCube] = []
    children: dict = {}
    nodes: list[TraceNode] = []

    stack = [(q0_cube, mask_to_box(f, q0_cube.box6()))]
    while stack:
        cube, f_node = stack.pop()
        res = exceptional_set(f_node, cube, delta, p0, cfg,
                              c_init=c_init, c_max=c_max,
                              floor_cells=floor_cells)
        offdiag = None
        if collect_offdiag and g is not None:
            offdiag = tuple(
                _offdiag_term(f_node, g, kid, delta) for kid in res.cubes
            )
        cubes.append(cube)
        children[cube] = res.cubes
        nodes.append(TraceNode(cube, res.c, res.threshold, res.e_ratio(cube),
                               res.cubes, res.flagged, offdiag))
        for kid in reversed(res.cubes):
            stack.append((kid, mask_to_box(f_node, kid.box6())))

    order = sorted(range(len(cubes)), key=lambda i: cubes[i].addr)
    coll = SparseCollection(q0_cube, tuple(cubes[i] for i in order), children)
    trace = SelectionTrace(tuple(nodes[i] for i in order))
    return coll, trace


def _offdiag_term(f_node: SampledField, g: SampledField, kid: DyadicCube,
                  delta: float) -> float:
    f_out = f_node - mask_to_box(f_node, kid.box6())
    bf = apply_bochner_riesz(SampledField(f_node.spec, f_out.values,
                                          support=f_node.support), delta)
    wsl = tuple(slice(l, h) for l, h in kid.window())
    spec = f_node.spec
    return abs(complex(np.sum(bf.values[wsl] * np.conj(g.values[wsl]))
                       * spec.dx ** spec.n))


def sparse_form(coll: SparseCollection, f: SampledField, g: SampledField,
                p0: float, q0_dual: float) -> float:
    """``sum_Q (avg_{6Q} |f|^{p0})^{1/p0} (avg_{6Q} |g|^{q0'})^{1/q0'} |Q|``."""
    if p0 < 1 or q0_dual < 1:
        raise ValueError("form exponents must be >= 1")
    total = 0.0
    for cube in coll.cubes:
        b6 = cube.box6()
        total += (cube_average(f, b6, p0) * cube_average(g, b6, q0_dual)
                  * cube.measure)
    return total


def bilinear_pairing(f: SampledField, g: SampledField, delta: float) -> complex:
    """``<B f, g> = int B(f) conj(g) dx`` by Riemann sum."""
    bf = apply_bochner_riesz(f, delta)
    spec = f.spec
    return complex(np.sum(bf.values * np.conj(g.values)) * spec.dx ** spec.n)


@dataclass(frozen=True)
class OffDiagReport:
    lhs: float
    rhs: float
    ratio: float
    terms: tuple[float, ...]
    n_cubes: int


def off_diagonal_check(f: SampledField, g: SampledField, q0_cube: DyadicCube,
                       delta: float, p0: float,
                       cfg: MaximalConfig | None = None, *,
                       c_init: float = 8.0) -> OffDiagReport:
    """Top-level tail estimate: compare
    ``sum_j |int_{Q_j} B(f 1_{(6Q_j)^c}) conj(g)|`` against
    ``(avg_{6Q0}|f|^{p0})^{1/p0} (avg_{6Q0}|g|^2)^{1/2} |Q0|``."""
    cfg = cfg if cfg is not None else MaximalConfig(p0=p0)
    f0 = mask_to_box(f, q0_cube.box6())
    res = exceptional_set(f0, q0_cube, delta, p0, cfg, c_init=c_init)
    terms = tuple(_offdiag_term(f0, g, kid, delta) for kid in res.cubes)
    lhs = float(sum(terms))
    b6 = q0_cube.box6()
    rhs = (cube_average(f0, b6, p0) * cube_average(g, b6, 2.0)
           * q0_cube.measure)
    ratio = lhs / rhs if rhs > 0 else math.inf if lhs > 0 else 0.0
    return OffDiagReport(lhs, rhs, ratio, terms, len(res.cubes))


def collection_to_csv(coll: SparseCollection) -> str:
    """CSV serialization: ``level,ix,iy,side,certificate_ratio`` (index
    columns grow with the dimension)."""
    n = coll.root.spec.n
    idx_cols = ",".join(f"i{'xyz'[i] if i < 3 else i}" for i in range(n))
    lines = [f"level,{idx_cols},side,certificate_ratio"]
    cert = coll.certificate()
    for cube in coll.cubes:
        idx = ",".join(str(i) for i in cube.index)
        lines.append(f"{cube.level},{idx},{cube.side!r},{float(cert[cube])!r}")
    return "\n".join(lines) + "\n"


def trace_to_json(trace: SelectionTrace) -> str:
    payload = []
    for node in trace.nodes:
        payload.append({
            "level": node.cube.level,
            "index": list(node.cube.index),
            "c": node.c,
            "threshold": node.threshold,
            "e_ratio": str(node.e_ratio),
            "children": [list(k.index) + [k.level] for k in node.children],
            "flagged": len(node.flagged),
            "off_diagonal": list(node.off_diagonal) if node.off_diagonal is not None else None,
        })
    return json.dumps({"nodes": payload, "depth": trace.depth,
                       "max_c": trace.max_c}, indent=2, sort_keys=True)
