"""Command-line interface.

Subcommands:

* ``presets``  - write example configuration files.
* ``analytic`` - evaluate the analytic exit/joint/length densities on
  grids and save them (npz, optional CSV) with a manifest.
* ``sample``   - run the Monte Carlo samplers, save pooled histograms,
  length histograms, and optionally raw trajectory spills.
* ``compare``  - compute distance reports between an analytic directory
  and a sample directory.
* ``figures``  - render SVG/CSV figures from saved artifacts.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical
failure, 4 missing or corrupt artifacts.  All outputs are deterministic
for a fixed configuration, including byte-identical npz/CSV/SVG files.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import zipfile
from pathlib import Path

import numpy as np

from . import __version__, chords, combined, compare, geometry, io as bio, montecarlo, rays, svg
from .errors import EmptyCellError, IncompatibleGridError, NumericalError
from .geometry import ALL_FACES, BoxDims, FaceId, PairKind, Side, canonical_classes

__all__ = ["build_parser", "main"]


@dataclasses.dataclass
class RunConfig:
    """Tunable knobs shared by the subcommands; JSON-serializable."""

    box: tuple[float, float, float] = (1.0, 1.0, 1.0)
    seed: int = 20260813
    samples: int = 1_000_000
    direction_model: str = "cube-components"
    workers: int = 0  # 0 = use BOXPATH_WORKERS or 1
    grid_nodes_3d: int = 64
    grid_nodes_2d: int = 129
    grid_nodes_1d: int = 1025
    bins_joint: tuple[int, int, int] = (8, 8, 8)
    bins_length: int = 128
    angle_nodes: int = 2048
    slope_nodes: int = 2048
    s_nodes_joint: int = 512
    s_nodes_conditional: int = 2048

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["box"] = list(self.box)
        d["bins_joint"] = list(self.bins_joint)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        merged = cls().to_dict()
        merged.update(data)
        cfg = cls(**{**merged, "box": tuple(merged["box"]), "bins_joint": tuple(merged["bins_joint"])})
        cfg.validate()
        return cfg

    def validate(self) -> None:
        BoxDims.from_any(self.box)
        if self.samples <= 0:
            raise ValueError("samples must be positive")
        if self.direction_model not in montecarlo.DIRECTION_MODELS:
            raise ValueError(f"direction_model must be one of {montecarlo.DIRECTION_MODELS}")
        for name in ("grid_nodes_3d", "grid_nodes_2d", "grid_nodes_1d", "angle_nodes", "slope_nodes", "s_nodes_joint", "s_nodes_conditional", "bins_length"):
            if getattr(self, name) < 4:
                raise ValueError(f"{name} is too small")
        if len(self.bins_joint) != 3 or any(b < 2 for b in self.bins_joint):
            raise ValueError("bins_joint needs three entries of at least 2")

    @property
    def box_dims(self) -> BoxDims:
        return BoxDims.from_any(self.box)

    def resolved_workers(self) -> int:
        if self.workers > 0:
            return self.workers
        env = os.environ.get("BOXPATH_WORKERS", "")
        if env.strip():
            try:
                value = int(env)
            except ValueError as exc:
                raise ValueError(f"BOXPATH_WORKERS must be an integer, got {env!r}") from exc
            if value > 0:
                return value
        return 1


def _load_config(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            data = json.load(fh)
    cfg = RunConfig.from_dict(data)
    if getattr(args, "box", None):
        cfg = dataclasses.replace(cfg, box=tuple(args.box))
    for name in ("seed", "samples", "workers"):
        value = getattr(args, name, None)
        if value is not None:
            cfg = dataclasses.replace(cfg, **{name: value})
    if getattr(args, "direction_model", None):
        cfg = dataclasses.replace(cfg, direction_model=args.direction_model)
    cfg.validate()
    return cfg


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# presets


def _cmd_presets(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    presets = {
        "cube.json": RunConfig(box=(1.0, 1.0, 1.0)),
        "slab.json": RunConfig(box=(1.0, 0.1, 1.0)),
        "rod.json": RunConfig(box=(0.2, 1.0, 0.2)),
    }
    for name, cfg in presets.items():
        _write_json(out / name, cfg.to_dict())
        print(f"wrote {out / name}")
    return 0


# ---------------------------------------------------------------------------
# analytic


def _jacobian_agreement(box: BoxDims) -> float:
    """Max relative gap between the two adjacent-face Jacobian forms."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(7)))
    worst = 0.0
    indices = geometry.IndexTriple(1, 2, 3)
    for _ in range(32):
        entry = rng.uniform(0.05, 0.95, 2) * [box.dim(1), box.dim(3)]
        direction = rng.uniform(0.05, 1.0, 3) * [1.0, 1.0, -1.0]
        a = rays.jacobian_adjacent(box, indices, entry, direction, form="quartic")
        b = rays.jacobian_adjacent(box, indices, entry, direction, form="cubic")
        worst = max(worst, abs(a - b) / max(abs(a), abs(b)))
    return worst


def _cmd_analytic(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    box = cfg.box_dims
    workers = cfg.resolved_workers()
    n3 = cfg.grid_nodes_3d
    outputs: list[str] = []

    for cls in canonical_classes():
        if cls.kind is PairKind.OPPOSING:
            joint = rays.joint_pdf_opposing(box, cls.indices, n3, n3, n3, cfg.angle_nodes, workers)
            exit_pdf = rays.exit_pdf_opposing(box, cls.indices, cfg.grid_nodes_2d, cfg.grid_nodes_2d, cfg.slope_nodes)
            cjoint = chords.joint_pdf_opposing(box, cls.indices, n3, n3, n3, cfg.s_nodes_joint)
        else:
            joint = rays.joint_pdf_adjacent(box, cls.indices, n3, n3, n3, cfg.angle_nodes // 2, workers)
            exit_pdf = rays.exit_pdf_adjacent(box, cls.indices, cfg.grid_nodes_2d, cfg.grid_nodes_2d, cfg.slope_nodes)
            cjoint = chords.joint_pdf_adjacent(box, cls.indices, n3, n3, n3, cfg.s_nodes_joint)
        for stem, pdf in (
            (f"rays_joint_{cls.label}", joint),
            (f"chords_joint_{cls.label}", cjoint),
        ):
            bio.save_density(
                out / f"{stem}.npz",
                pdf.density,
                {"label": cls.label, "kind": pdf.kind.value, "indices": list(pdf.indices.as_tuple), "mass": pdf.mass},
            )
            outputs.append(f"{stem}.npz")
        bio.save_density(
            out / f"rays_exit_{cls.label}.npz",
            exit_pdf.density,
            {"label": cls.label, "kind": exit_pdf.kind.value, "indices": list(exit_pdf.indices.as_tuple), "mass": exit_pdf.mass},
        )
        outputs.append(f"rays_exit_{cls.label}.npz")
        if args.csv:
            bio.write_density_csv(out / f"rays_exit_{cls.label}.csv", exit_pdf.density)
            outputs.append(f"rays_exit_{cls.label}.csv")

    modes = {}
    for model, builder in (("rays", combined.combined_length_pdf_rays), ("chords", combined.combined_length_pdf_chords)):
        if model == "rays":
            comb = builder(box, cfg.grid_nodes_1d, cfg.angle_nodes)
        else:
            comb = builder(box, cfg.grid_nodes_1d, cfg.s_nodes_conditional)
        meta = {
            "mode": comb.mode,
            "integral": comb.integral,
            "terms": [
                {"label": t.label, "multiplicity": t.multiplicity, "weight": t.weight, "mass": t.mass}
                for t in comb.terms
            ],
        }
        bio.save_density(out / f"combined_{model}.npz", comb.density, meta)
        outputs.append(f"combined_{model}.npz")
        modes[model] = comb.mode
        if args.csv:
            bio.write_density_csv(out / f"combined_{model}.csv", comb.density)
            outputs.append(f"combined_{model}.csv")
        for axis in (1, 2, 3):
            face = FaceId(axis, Side.LOW)
            single = combined.single_face_length_pdf(box, face, model, cfg.grid_nodes_1d)
            bio.save_density(
                out / f"single_face_{model}_axis{axis}.npz",
                single.density,
                {"mode": single.mode, "integral": single.integral, "entry_axis": axis},
            )
            outputs.append(f"single_face_{model}_axis{axis}.npz")

    manifest = {
        "command": "analytic",
        "config": cfg.to_dict(),
        "config_hash": bio.config_hash(cfg.to_dict()),
        "version": __version__,
        "direction_model": cfg.direction_model,
        "combination_modes": modes,
        "adjacent_jacobian_forms_max_gap": _jacobian_agreement(box),
        "outputs": sorted(outputs),
    }
    _write_json(out / "manifest.json", manifest)
    print(f"analytic artifacts written to {out} ({len(outputs)} files)")
    return 0


# ---------------------------------------------------------------------------
# sample


def _cmd_sample(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    box = cfg.box_dims
    workers = cfg.resolved_workers()
    nb, ub, vb = cfg.bins_joint
    outputs: list[str] = []
    stats: dict = {}

    batches = {
        "rays": montecarlo.sample_rays(box, cfg.samples, cfg.seed, cfg.direction_model, workers),
        "chords": montecarlo.sample_chords(box, cfg.samples, cfg.seed + 1, workers),
    }
    length_arrays: dict[str, np.ndarray] = {}
    for name, batch in batches.items():
        hists = montecarlo.canonical_histograms(batch, nb, ub, vb)
        bio.save_histograms(out / f"sample_{name}_hists.npz", hists, {"sampler": name, **batch.meta})
        outputs.append(f"sample_{name}_hists.npz")
        edges, counts = montecarlo.length_histogram(batch, cfg.bins_length)
        length_arrays[f"{name}/edges"] = edges
        length_arrays[f"{name}/counts"] = counts
        for axis in (1, 2, 3):
            _, axis_counts = montecarlo.length_histogram(batch, cfg.bins_length, entry_axis=axis)
            length_arrays[f"{name}_axis{axis}/counts"] = axis_counts
        entry_counts, exit_counts = montecarlo.face_counts(batch)
        stats[name] = {
            "meta": batch.meta,
            "entry_face_counts": entry_counts.tolist(),
            "exit_face_counts": exit_counts.tolist(),
        }
        if args.spill:
            bio.write_trajectories(out / f"{name}.bin", batch)
            outputs.append(f"{name}.bin")
    bio.write_npz(out / "sample_lengths.npz", length_arrays)
    outputs.append("sample_lengths.npz")

    manifest = {
        "command": "sample",
        "config": cfg.to_dict(),
        "config_hash": bio.config_hash(cfg.to_dict()),
        "version": __version__,
        "stream_count": montecarlo.STREAM_COUNT,
        "stats": stats,
        "outputs": sorted(outputs),
    }
    _write_json(out / "manifest.json", manifest)
    print(f"sample artifacts written to {out} ({len(outputs)} files)")
    return 0


# ---------------------------------------------------------------------------
# compare


def _cmd_compare(args: argparse.Namespace) -> int:
    analytic_dir = Path(args.analytic)
    sample_dir = Path(args.sample)
    report: dict = {"joint": {}, "length": {}}
    for model in ("rays", "chords"):
        hists, _ = bio.load_histograms(sample_dir / f"sample_{model}_hists.npz")
        for label, hist in sorted(hists.items()):
            density, meta = bio.load_density(analytic_dir / f"{model}_joint_{label}.npz")
            rep = compare.compare_joint(hist, density)
            report["joint"][f"{model}/{label}"] = rep.to_dict()
    with np.load(sample_dir / "sample_lengths.npz") as z:
        for model in ("rays", "chords"):
            density, _ = bio.load_density(analytic_dir / f"combined_{model}.npz")
            rep = compare.compare_length(z[f"{model}/edges"], z[f"{model}/counts"], density)
            report["length"][f"combined_{model}"] = rep.to_dict()
    worst_l1 = max(entry["l1"] for section in report.values() for entry in section.values())
    report["summary"] = {"worst_l1": worst_l1}
    _write_json(Path(args.out), report)
    print(f"comparison report written to {args.out} (worst L1 {worst_l1:.4f})")
    return 0


# ---------------------------------------------------------------------------
# figures


def _load_joint(analytic_dir: Path, model: str, label: str):
    return bio.load_density(analytic_dir / f"{model}_joint_{label}.npz")


def _figure_band(analytic_dir: Path, out: Path, band: tuple[float, float], files: list[str]) -> None:
    """Exit-face maps of chords whose length falls in a diagonal band."""
    density, meta = _load_joint(analytic_dir, "chords", "opposing-entry2")
    (n_lo, n_hi) = density.domain[0]
    diag = n_hi
    lo, hi = band[0] * diag, band[1] * diag
    for label in ("opposing-entry2", "adjacent-entry2-exit1"):
        density, meta = _load_joint(analytic_dir, "chords", label)
        sheet = density.band_integral(0, lo, hi)
        stem = f"band_map_{label}"
        bio.write_density_csv(out / f"{stem}.csv", sheet, value_name="band_mass")
        svg.heatmap_svg(
            out / f"{stem}.svg",
            sheet.values,
            sheet.domain,
            title=f"chord exit map, length in [{lo:.3f}, {hi:.3f}]",
            xlabel=sheet.axis_names[0],
            ylabel=sheet.axis_names[1],
        )
        files += [f"{stem}.csv", f"{stem}.svg"]


def _figure_elevation(analytic_dir: Path, out: Path, files: list[str]) -> None:
    """Length-elevation heatmaps on an adjacent exit face, both models."""
    for model in ("rays", "chords"):
        density, meta = _load_joint(analytic_dir, model, "adjacent-entry2-exit1")
        sheet = density.integrate_out(1)
        stem = f"elevation_profile_{model}"
        bio.write_density_csv(out / f"{stem}.csv", sheet, value_name="density")
        svg.heatmap_svg(
            out / f"{stem}.svg",
            sheet.values,
            sheet.domain,
            title=f"{model}: length vs exit elevation",
            xlabel="path length",
            ylabel="elevation above shared edge",
        )
        files += [f"{stem}.csv", f"{stem}.svg"]


def _pooled_location_pdf(analytic_dir: Path, model: str, box: BoxDims, exit_face: FaceId, cell) -> "object":
    """Mix entry faces for the length law at one exit-face cell."""
    from .density import GridDensity1D

    acc = None
    grid = None
    for entry in ALL_FACES:
        if entry == exit_face:
            continue
        cls = geometry.classify_pair(entry, exit_face)
        density, meta = _load_joint(analytic_dir, model, cls.label)
        uv = cls.exit_local_to_canonical(box, np.array([[cell[0], cell[1]]]))[0]
        u_dom, v_dom = density.domain[1], density.domain[2]
        a0, a1 = max(u_dom[0], uv[0] - cell[2]), min(u_dom[1], uv[0] + cell[2])
        b0, b1 = max(v_dom[0], uv[1] - cell[2]), min(v_dom[1], uv[1] + cell[2])
        if not (a1 > a0 and b1 > b0):
            continue
        part = density.band_integral(1, a0, a1).band_integral(1, b0, b1)
        weight = geometry.entry_probability(box, entry) * meta["mass"]
        if acc is None:
            grid = np.linspace(0.0, box.diagonal, 513)
            acc = np.zeros_like(grid)
        acc += weight * part.interp(grid)
    if acc is None or acc.sum() <= 0:
        raise NumericalError("location cell has no analytic mass; widen the cell")
    return GridDensity1D(0.0, box.diagonal, acc).normalized(force=True)


def _figure_location(
    analytic_dir: Path,
    sample_dir: Path | None,
    out: Path,
    box: BoxDims,
    face_code: int,
    cell: tuple[float, float, float],
    files: list[str],
) -> None:
    """Length-law overlay at a small exit-location cell, both models."""
    exit_face = FaceId.from_code(face_code)
    series = []
    columns: dict[str, np.ndarray] = {}
    for model, dash in (("rays", False), ("chords", True)):
        dens = _pooled_location_pdf(analytic_dir, model, box, exit_face, cell)
        x = dens.nodes
        series.append({"x": x, "y": dens.values, "label": f"{model} analytic", "dash": dash})
        columns["n"] = x
        columns[f"{model}_density"] = dens.values
    if sample_dir is not None:
        for model in ("rays", "chords"):
            spill = sample_dir / f"{model}.bin"
            if not spill.exists():
                continue
            batch = bio.read_trajectories(spill)
            rows = batch.exit_code == face_code
            ab = batch.exit_ab[rows]
            inside = (np.abs(ab[:, 0] - cell[0]) <= cell[2]) & (np.abs(ab[:, 1] - cell[1]) <= cell[2])
            lengths = batch.length[rows][inside]
            if lengths.size == 0:
                raise EmptyCellError(f"no {model} samples in the requested cell", 0)
            counts, edges = np.histogram(lengths, bins=32, range=(0.0, box.diagonal))
            centers = 0.5 * (edges[:-1] + edges[1:])
            dens_vals = counts / counts.sum() / np.diff(edges)
            series.append({"x": centers, "y": dens_vals, "label": f"{model} sampled"})
    bio.write_series_csv(out / "location_length.csv", columns)
    svg.line_svg(
        out / "location_length.svg",
        series,
        title=f"length law at cell on face {exit_face} around ({cell[0]}, {cell[1]})",
        xlabel="path length",
        ylabel="density",
    )
    files += ["location_length.csv", "location_length.svg"]


def _figure_lengths(analytic_dir: Path, sample_dir: Path | None, out: Path, files: list[str]) -> None:
    """Combined and per-entry-axis length overlays for both models."""
    specs = [("all", "combined_{model}.npz", "{model}/")] + [
        (f"axis{j}", "single_face_{model}_axis" + str(j) + ".npz", "{model}_axis" + str(j) + "/")
        for j in (1, 2, 3)
    ]
    lengths = None
    if sample_dir is not None and (sample_dir / "sample_lengths.npz").exists():
        lengths = np.load(sample_dir / "sample_lengths.npz")
    try:
        for tag, npz_tpl, hist_tpl in specs:
            series = []
            columns: dict[str, np.ndarray] = {}
            for model, dash in (("rays", False), ("chords", True)):
                dens, meta = bio.load_density(analytic_dir / npz_tpl.format(model=model))
                series.append({"x": dens.nodes, "y": dens.values, "label": f"{model} analytic", "dash": dash})
                columns["n"] = dens.nodes
                columns[f"{model}_density"] = dens.values
                if lengths is not None:
                    counts = lengths[hist_tpl.format(model=model) + "counts"]
                    edges = lengths[f"{model}/edges"]
                    centers = 0.5 * (edges[:-1] + edges[1:])
                    dens_vals = counts / max(1, counts.sum()) / np.diff(edges)
                    series.append({"x": centers, "y": dens_vals, "label": f"{model} sampled"})
            stem = f"length_overlay_{tag}"
            bio.write_series_csv(out / f"{stem}.csv", columns)
            svg.line_svg(
                out / f"{stem}.svg",
                series,
                title=f"path-length laws ({tag})",
                xlabel="path length",
                ylabel="density",
            )
            files += [f"{stem}.csv", f"{stem}.svg"]
    finally:
        if lengths is not None:
            lengths.close()


def _cmd_figures(args: argparse.Namespace) -> int:
    analytic_dir = Path(args.analytic)
    sample_dir = Path(args.sample) if args.sample else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(analytic_dir / "manifest.json") as fh:
        manifest = json.load(fh)
    box = BoxDims.from_any(manifest["config"]["box"])
    which = set(args.which.split(",")) if args.which else {"band", "elevation", "location", "lengths"}
    unknown = which - {"band", "elevation", "location", "lengths"}
    if unknown:
        raise ValueError(f"unknown figures: {sorted(unknown)}")
    files: list[str] = []
    if "band" in which:
        _figure_band(analytic_dir, out, (args.band[0], args.band[1]), files)
    if "elevation" in which:
        _figure_elevation(analytic_dir, out, files)
    if "location" in which:
        _figure_location(analytic_dir, sample_dir, out, box, args.cell_face, tuple(args.cell), files)
    if "lengths" in which:
        _figure_lengths(analytic_dir, sample_dir, out, files)
    _write_json(out / "figures_manifest.json", {"command": "figures", "outputs": sorted(files)})
    print(f"figures written to {out} ({len(files)} files)")
    return 0


# ---------------------------------------------------------------------------
# parser / entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boxpath",
        description="Analytic and Monte Carlo path-length laws for a rectangular box.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("presets", help="write example configuration files")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_presets)

    def add_config_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--box", nargs=3, type=float, metavar=("X1", "X2", "X3"))
        p.add_argument("--seed", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--direction-model", dest="direction_model", choices=montecarlo.DIRECTION_MODELS)

    p = sub.add_parser("analytic", help="evaluate analytic densities onto grids")
    add_config_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--csv", action="store_true", help="also write CSV tables")
    p.set_defaults(func=_cmd_analytic)

    p = sub.add_parser("sample", help="run the Monte Carlo samplers")
    add_config_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--spill", action="store_true", help="also write raw trajectory records")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("compare", help="compare sampled histograms with analytic grids")
    p.add_argument("--analytic", required=True)
    p.add_argument("--sample", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("figures", help="render figures from saved artifacts")
    p.add_argument("--analytic", required=True)
    p.add_argument("--sample", help="sample directory for Monte Carlo overlays")
    p.add_argument("--out", required=True)
    p.add_argument("--which", help="comma list: band,elevation,location,lengths")
    p.add_argument("--band", nargs=2, type=float, default=(0.675, 0.705), metavar=("LO", "HI"), help="length band as fractions of the diagonal")
    p.add_argument("--cell-face", dest="cell_face", type=int, default=3, help="exit face code 0..5 for the location figure")
    p.add_argument("--cell", nargs=3, type=float, default=(1.0, 0.25, 0.02), metavar=("A", "B", "HALF"), help="cell center and half width in face-local coordinates")
    p.set_defaults(func=_cmd_figures)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (NumericalError, IncompatibleGridError, EmptyCellError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (FileNotFoundError, KeyError, zipfile.BadZipFile, json.JSONDecodeError) as exc:
        print(f"missing or corrupt artifact: {exc!r}", file=sys.stderr)
        return 4
    except (ValueError, TypeError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
