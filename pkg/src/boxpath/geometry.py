"""Box geometry: faces, entry probabilities, and face-pair classification.

A trajectory enters a rectangular box through one face and exits through
another.  The 30 ordered (entry, exit) face pairs collapse, by symmetry,
onto 9 canonical classes: 3 with parallel (opposing) faces and 6 with
perpendicular (adjacent) faces.  Each class fixes an index triple (i, j, k)
where j is the entry-face axis; the canonical frame places the entry face
on the plane x_j = 0, an opposing exit on x_j = X_j, and an adjacent exit
on x_k = 0.  Mapping any concrete pair onto its class is a composition of
axis reflections, which this module provides in both directions.

Axes are numbered 1..3 in the public API.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np

__all__ = [
    "ALL_FACES",
    "BoxDims",
    "FaceId",
    "FacePairClass",
    "IndexTriple",
    "PairKind",
    "Side",
    "canonical_classes",
    "canonical_pdf_count",
    "classify_pair",
    "entry_probability",
]


class Side(IntEnum):
    """Which of the two parallel planes perpendicular to an axis."""

    LOW = 0
    HIGH = 1


class PairKind(Enum):
    """Relative orientation of an ordered (entry, exit) face pair."""

    OPPOSING = "opposing"
    ADJACENT = "adjacent"


@dataclass(frozen=True)
class BoxDims:
    """Edge lengths of the box, all strictly positive and finite."""

    x1: float
    x2: float
    x3: float

    def __post_init__(self) -> None:
        for name, value in (("x1", self.x1), ("x2", self.x2), ("x3", self.x3)):
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"box dimension {name} must be positive and finite, got {value!r}")

    @classmethod
    def from_any(cls, dims: "BoxDims | tuple | list | np.ndarray") -> "BoxDims":
        if isinstance(dims, BoxDims):
            return dims
        arr = [float(v) for v in dims]
        if len(arr) != 3:
            raise ValueError(f"expected 3 box dimensions, got {len(arr)}")
        return cls(*arr)

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3], dtype=float)

    def dim(self, axis: int) -> float:
        """Edge length along a 1-based axis."""
        return (self.x1, self.x2, self.x3)[_check_axis(axis) - 1]

    @property
    def diagonal(self) -> float:
        return float(np.hypot(np.hypot(self.x1, self.x2), self.x3))

    @property
    def surface_area(self) -> float:
        return 2.0 * (self.x1 * self.x2 + self.x1 * self.x3 + self.x2 * self.x3)


def _check_axis(axis: int) -> int:
    if axis not in (1, 2, 3):
        raise ValueError(f"axis must be 1, 2 or 3, got {axis!r}")
    return axis


@dataclass(frozen=True)
class FaceId:
    """One of the six faces: the plane where coordinate `axis` is 0 or X."""

    axis: int
    side: Side

    def __post_init__(self) -> None:
        _check_axis(self.axis)
        object.__setattr__(self, "side", Side(self.side))

    @property
    def code(self) -> int:
        """Stable small-integer encoding, 0..5."""
        return (self.axis - 1) * 2 + int(self.side)

    @classmethod
    def from_code(cls, code: int) -> "FaceId":
        if not 0 <= code <= 5:
            raise ValueError(f"face code must be in 0..5, got {code!r}")
        return cls(axis=code // 2 + 1, side=Side(code % 2))

    @property
    def plane_axes(self) -> tuple[int, int]:
        """The two in-plane axes, ascending; local coordinates follow this order."""
        return tuple(a for a in (1, 2, 3) if a != self.axis)  # type: ignore[return-value]

    def area(self, box: BoxDims) -> float:
        p, q = self.plane_axes
        return box.dim(p) * box.dim(q)

    def normal_value(self, box: BoxDims) -> float:
        """Coordinate of the face plane along its axis."""
        return 0.0 if self.side == Side.LOW else box.dim(self.axis)

    def __str__(self) -> str:
        return f"x{self.axis}={'X' + str(self.axis) if self.side == Side.HIGH else '0'}"


ALL_FACES: tuple[FaceId, ...] = tuple(FaceId.from_code(c) for c in range(6))


def entry_probability(box: BoxDims, face: FaceId) -> float:
    """Probability that a uniform surface point falls on `face`.

    Proportional to face area: X_p X_q / (2 (X1 X2 + X1 X3 + X2 X3)).
    The six values sum to one.
    """
    box = BoxDims.from_any(box)
    return face.area(box) / box.surface_area


# Even permutations of (1, 2, 3) keyed by their middle element.  For an
# opposing pair only the entry axis j is distinguished, so the canonical
# index triple is pinned to the even permutation with j in the middle.
_EVEN_BY_MIDDLE = {1: (3, 1, 2), 2: (1, 2, 3), 3: (2, 3, 1)}


@dataclass(frozen=True)
class IndexTriple:
    """Canonical axis roles: i in-plane, j entry axis, k third axis.

    For opposing pairs (i, j, k) is the even permutation of (1, 2, 3) with
    the entry axis in the middle; for adjacent pairs k is the exit axis and
    any of the six permutations can occur.
    """

    i: int
    j: int
    k: int

    def __post_init__(self) -> None:
        if sorted((self.i, self.j, self.k)) != [1, 2, 3]:
            raise ValueError(f"(i, j, k) must be a permutation of (1, 2, 3), got {(self.i, self.j, self.k)}")

    @property
    def as_tuple(self) -> tuple[int, int, int]:
        return (self.i, self.j, self.k)

    def __str__(self) -> str:
        return f"(i={self.i}, j={self.j}, k={self.k})"


@dataclass(frozen=True)
class FacePairClass:
    """An ordered face pair together with its reduction onto a canonical class.

    `reflected_axes` lists the axes whose coordinate must be mirrored
    (v -> X_v - v) to move the pair into the canonical frame; the map is an
    involution, so it also converts canonical coordinates back.
    """

    kind: PairKind
    indices: IndexTriple
    entry_face: FaceId
    exit_face: FaceId
    reflected_axes: frozenset[int]

    @property
    def canonical_key(self) -> tuple[PairKind, tuple[int, int, int]]:
        """Hashable class identity shared by all pairs pooled together."""
        return (self.kind, self.indices.as_tuple)

    @property
    def label(self) -> str:
        if self.kind is PairKind.OPPOSING:
            return f"opposing-entry{self.indices.j}"
        return f"adjacent-entry{self.indices.j}-exit{self.indices.k}"

    @property
    def exit_axis_names(self) -> tuple[str, str]:
        """Names of the two canonical exit-plane coordinates."""
        i, j, k = self.indices.as_tuple
        return (f"x{i}", f"x{k}" if self.kind is PairKind.OPPOSING else f"x{j}")

    # The canonical exit coordinates are (x_i, x_k) on the plane x_j = X_j
    # for opposing pairs and (x_i, x_j) on the plane x_k = 0 for adjacent
    # pairs; entry coordinates are (x_i, x_k) on x_j = 0 for both kinds.

    def _exit_canonical_axes(self) -> tuple[int, int]:
        i, j, k = self.indices.as_tuple
        return (i, k) if self.kind is PairKind.OPPOSING else (i, j)

    def _reflect(self, box: BoxDims, pts: np.ndarray) -> np.ndarray:
        out = pts.copy()
        for axis in self.reflected_axes:
            out[:, axis - 1] = box.dim(axis) - out[:, axis - 1]
        return out

    def _local_to_points(self, face: FaceId, box: BoxDims, ab: np.ndarray) -> np.ndarray:
        ab = np.atleast_2d(np.asarray(ab, dtype=float))
        pts = np.empty((ab.shape[0], 3), dtype=float)
        p, q = face.plane_axes
        pts[:, p - 1] = ab[:, 0]
        pts[:, q - 1] = ab[:, 1]
        pts[:, face.axis - 1] = face.normal_value(box)
        return pts

    @staticmethod
    def _points_to_local(face: FaceId, pts: np.ndarray) -> np.ndarray:
        p, q = face.plane_axes
        return np.stack([pts[:, p - 1], pts[:, q - 1]], axis=1)

    def exit_local_to_canonical(self, box: BoxDims, ab: np.ndarray) -> np.ndarray:
        """Map exit-face local coordinates (ascending-axis order) to canonical ones."""
        box = BoxDims.from_any(box)
        pts = self._reflect(box, self._local_to_points(self.exit_face, box, ab))
        u, v = self._exit_canonical_axes()
        return np.stack([pts[:, u - 1], pts[:, v - 1]], axis=1)

    def canonical_to_exit_local(self, box: BoxDims, uv: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`exit_local_to_canonical`."""
        box = BoxDims.from_any(box)
        uv = np.atleast_2d(np.asarray(uv, dtype=float))
        i, j, k = self.indices.as_tuple
        pts = np.empty((uv.shape[0], 3), dtype=float)
        u, v = self._exit_canonical_axes()
        pts[:, u - 1] = uv[:, 0]
        pts[:, v - 1] = uv[:, 1]
        if self.kind is PairKind.OPPOSING:
            pts[:, j - 1] = box.dim(j)
        else:
            pts[:, k - 1] = 0.0
        return self._points_to_local(self.exit_face, self._reflect(box, pts))

    def entry_local_to_canonical(self, box: BoxDims, ab: np.ndarray) -> np.ndarray:
        """Map entry-face local coordinates to canonical (x_i, x_k) on x_j = 0."""
        box = BoxDims.from_any(box)
        pts = self._reflect(box, self._local_to_points(self.entry_face, box, ab))
        i, _, k = self.indices.as_tuple
        return np.stack([pts[:, i - 1], pts[:, k - 1]], axis=1)

    def canonical_to_entry_local(self, box: BoxDims, uv: np.ndarray) -> np.ndarray:
        box = BoxDims.from_any(box)
        uv = np.atleast_2d(np.asarray(uv, dtype=float))
        i, _, k = self.indices.as_tuple
        pts = np.zeros((uv.shape[0], 3), dtype=float)
        pts[:, i - 1] = uv[:, 0]
        pts[:, k - 1] = uv[:, 1]
        return self._points_to_local(self.entry_face, self._reflect(box, pts))


def classify_pair(entry: FaceId, exit: FaceId) -> FacePairClass:
    """Reduce an ordered (entry, exit) face pair to its canonical class.

    Raises ValueError for a same-face pair, which has no traversal class.
    """
    if entry == exit:
        raise ValueError(f"entry and exit coincide ({entry}); same-face pairs carry no traversal")
    reflected: set[int] = set()
    if entry.side == Side.HIGH:
        reflected.add(entry.axis)
    if entry.axis == exit.axis:
        kind = PairKind.OPPOSING
        indices = IndexTriple(*_EVEN_BY_MIDDLE[entry.axis])
        # Reflecting the entry axis also carries the opposing exit onto x_j = X_j.
    else:
        kind = PairKind.ADJACENT
        j, k = entry.axis, exit.axis
        indices = IndexTriple(6 - j - k, j, k)
        if exit.side == Side.HIGH:
            reflected.add(exit.axis)
    return FacePairClass(
        kind=kind,
        indices=indices,
        entry_face=entry,
        exit_face=exit,
        reflected_axes=frozenset(reflected),
    )


def canonical_classes() -> list[FacePairClass]:
    """The 9 canonical classes via their reflection-free representative pairs."""
    reps: list[FacePairClass] = []
    for j in (1, 2, 3):
        reps.append(classify_pair(FaceId(j, Side.LOW), FaceId(j, Side.HIGH)))
    for j, k in itertools.permutations((1, 2, 3), 2):
        reps.append(classify_pair(FaceId(j, Side.LOW), FaceId(k, Side.LOW)))
    return reps


def canonical_pdf_count() -> tuple[int, int]:
    """Count distinct canonical classes over all 30 ordered face pairs.

    Returns (opposing, adjacent); enumeration, not a hard-coded constant.
    """
    keys = {
        classify_pair(e, x).canonical_key
        for e, x in itertools.permutations(ALL_FACES, 2)
        if e != x
    }
    n_opp = sum(1 for kind, _ in keys if kind is PairKind.OPPOSING)
    return (n_opp, len(keys) - n_opp)
