"""Length distributions combined over entry faces and exit faces.

The combined law mixes the nine canonical face-pair classes with their
multiplicities (each opposing class covers 2 ordered face pairs, each
adjacent class covers 4).  Component length laws enter as sub-densities,
carrying their own face-exit mass, weighted by entry-face probabilities
(ray model) or by pair probabilities P_entry * P_exit /
(1 - P_entry) (chord model).  With sub-density weighting the
mixture integrates to one by construction; the alternative of
renormalizing every component first does not, and the constructor picks
whichever mode lands closer to unit mass and records it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import chords, rays
from .density import GridDensity1D
from .geometry import (
    BoxDims,
    FaceId,
    IndexTriple,
    PairKind,
    Side,
    canonical_classes,
    classify_pair,
    entry_probability,
)

__all__ = [
    "CombinedLengthPdf",
    "ComponentTerm",
    "combined_length_pdf_rays",
    "combined_length_pdf_chords",
    "expected_length",
    "single_face_length_pdf",
]


@dataclass(frozen=True)
class ComponentTerm:
    """One canonical class's contribution to a combined length law."""

    label: str
    kind: PairKind
    indices: IndexTriple
    multiplicity: int
    weight: float
    mass: float


@dataclass(frozen=True)
class CombinedLengthPdf:
    """A combined length density with its bookkeeping.

    `integral` is the grid integral of `density` before any rescaling; a
    value near one confirms the sub-density mixture is a probability
    density on its own.
    """

    density: GridDensity1D
    mode: str
    integral: float
    terms: tuple[ComponentTerm, ...]

    def normalized(self) -> GridDensity1D:
        return self.density.normalized(force=True)


def _mix(
    parts: list[tuple[ComponentTerm, GridDensity1D]],
    n_lo: float,
    n_hi: float,
    n_nodes: int,
) -> CombinedLengthPdf:
    grid = np.linspace(n_lo, n_hi, n_nodes)
    sub = np.zeros(n_nodes)
    renorm = np.zeros(n_nodes)
    for term, dens in parts:
        vals = dens.interp(grid)
        sub += term.weight * vals
        renorm += term.weight * vals / term.mass if term.mass > 0 else 0.0
    d_sub = GridDensity1D(n_lo, n_hi, sub)
    d_ren = GridDensity1D(n_lo, n_hi, renorm)
    # Select the weighting that yields a unit-mass mixture; with sub-density
    # components the masses already encode exit probabilities, so this is
    # expected to pick "subdensity".
    i_sub, i_ren = d_sub.integral(), d_ren.integral()
    if abs(i_sub - 1.0) <= abs(i_ren - 1.0):
        chosen, mode, integral = d_sub, "subdensity", i_sub
    else:
        chosen, mode, integral = d_ren, "per-component-normalized", i_ren
    return CombinedLengthPdf(chosen, mode, integral, tuple(t for t, _ in parts))


def combined_length_pdf_rays(
    box: BoxDims,
    n_nodes: int = 1025,
    angle_nodes: int = 2048,
    elevation_nodes: int = 256,
) -> CombinedLengthPdf:
    """Length density over all entries for the face-interior model.

    f(n) = sum over entry faces of P_entry times the per-entry length law,
    expanded into 2 opposing + 4 adjacent weighted class marginals.
    """
    box = BoxDims.from_any(box)
    parts: list[tuple[ComponentTerm, GridDensity1D]] = []
    for cls in canonical_classes():
        p_entry = entry_probability(box, cls.entry_face)
        if cls.kind is PairKind.OPPOSING:
            dens = rays.length_marginal_opposing(box, cls.indices, n_nodes, angle_nodes)
            mult = 2
        else:
            dens = rays.length_marginal_adjacent(
                box, cls.indices, n_nodes, angle_nodes // 2, elevation_nodes
            )
            mult = 4
        term = ComponentTerm(cls.label, cls.kind, cls.indices, mult, mult * p_entry, dens.integral())
        parts.append((term, dens))
    return _mix(parts, 0.0, box.diagonal, n_nodes)


def combined_length_pdf_chords(
    box: BoxDims,
    n_nodes: int = 1025,
    s_nodes: int = 2048,
) -> CombinedLengthPdf:
    """Length density over all surface-chord pairs (same-face pairs excluded).

    Pair weights are P_entry * P_exit / (1 - P_entry) summed over the
    ordered pairs pooled into each canonical class; the class laws are
    unit densities, so the weights themselves sum to one.
    """
    box = BoxDims.from_any(box)
    parts: list[tuple[ComponentTerm, GridDensity1D]] = []
    for cls in canonical_classes():
        p_f = entry_probability(box, cls.entry_face)
        p_g = entry_probability(box, cls.exit_face)
        mult = 2 if cls.kind is PairKind.OPPOSING else 4
        weight = mult * p_f * p_g / (1.0 - p_f)
        dens = chords.pair_length_pdf(box, cls.kind, cls.indices, n_nodes, s_nodes)
        term = ComponentTerm(cls.label, cls.kind, cls.indices, mult, weight, dens.integral())
        parts.append((term, dens))
    return _mix(parts, 0.0, box.diagonal, n_nodes)


def single_face_length_pdf(
    box: BoxDims,
    entry_face: FaceId,
    model: str = "rays",
    n_nodes: int = 1025,
    **kwargs,
) -> CombinedLengthPdf:
    """Length density conditional on one entry face.

    `model` selects one of: "rays" (uniform entry on the face,
    component-uniform direction) or "chords" (exit uniform on the
    remaining surface).  The five exit faces contribute one opposing and
    four adjacent terms; adjacent exit faces pair up by axis.
    """
    box = BoxDims.from_any(box)
    j = entry_face.axis
    parts: list[tuple[ComponentTerm, GridDensity1D]] = []
    exits = [FaceId(j, Side.HIGH if entry_face.side == Side.LOW else Side.LOW)]
    exits += [FaceId(axis, side) for axis in (1, 2, 3) if axis != j for side in (Side.LOW, Side.HIGH)]
    if model == "rays":
        for exit_face in exits:
            cls = classify_pair(entry_face, exit_face)
            if cls.kind is PairKind.OPPOSING:
                dens = rays.length_marginal_opposing(box, cls.indices, n_nodes, kwargs.get("angle_nodes", 2048))
            else:
                dens = rays.length_marginal_adjacent(
                    box,
                    cls.indices,
                    n_nodes,
                    kwargs.get("angle_nodes", 2048) // 2,
                    kwargs.get("elevation_nodes", 256),
                )
            term = ComponentTerm(cls.label, cls.kind, cls.indices, 1, 1.0, dens.integral())
            parts.append((term, dens))
    elif model == "chords":
        p_f = entry_probability(box, entry_face)
        for exit_face in exits:
            cls = classify_pair(entry_face, exit_face)
            weight = entry_probability(box, exit_face) / (1.0 - p_f)
            dens = chords.pair_length_pdf(box, cls.kind, cls.indices, n_nodes, kwargs.get("s_nodes", 2048))
            term = ComponentTerm(cls.label, cls.kind, cls.indices, 1, weight, dens.integral())
            parts.append((term, dens))
    else:
        raise ValueError(f"unknown model {model!r}; use 'rays' or 'chords'")
    return _mix(parts, 0.0, box.diagonal, n_nodes)


def expected_length(density: GridDensity1D) -> float:
    """Mean of a length density (first moment over mass)."""
    return density.mean()
