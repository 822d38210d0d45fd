"""CSV data files for scattering sweeps and retrieval results.

All files are plain CSV with one header row; lines starting with ``#``
are comments.  Complex quantities are stored as separate Re/Im columns.
Floats are written with 17 significant digits so that a write/read round
trip reproduces every value bit for bit, and nothing time- or
machine-dependent goes into the data files (run metadata lives in a
``<name>.meta`` sidecar).
"""

from __future__ import annotations

from pathlib import Path

from tubegap.errors import ConfigError
from tubegap.retrieval import RetrievedProperties
from tubegap.types import ScatteringData

TR_COLUMNS = ["f_hz", "re_t", "im_t", "re_r", "im_r"]
RESULT_COLUMNS = [
    "f_hz",
    "re_n1",
    "im_n1",
    "re_z1",
    "im_z1",
    "z1_over_z2_mag",
    "branch_m",
    "sign",
    "condition_number",
    "flags",
]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_tr_csv(path: str | Path, data: list[ScatteringData], comments: list[str] = ()) -> None:
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(TR_COLUMNS))
    for d in data:
        lines.append(
            ",".join(
                [
                    _fmt(d.f),
                    _fmt(d.transmission.real),
                    _fmt(d.transmission.imag),
                    _fmt(d.reflection.real),
                    _fmt(d.reflection.imag),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_tr_csv(path: str | Path) -> list[ScatteringData]:
    """Parse a scattering sweep file, reporting the line of any defect."""
    rows: list[ScatteringData] = []
    header_seen = False
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if not header_seen:
            cols = [c.strip() for c in stripped.split(",")]
            if cols != TR_COLUMNS:
                raise ConfigError(
                    f"{path}:{lineno}: expected header {','.join(TR_COLUMNS)!r}, got {stripped!r}"
                )
            header_seen = True
            continue
        parts = stripped.split(",")
        if len(parts) != len(TR_COLUMNS):
            raise ConfigError(
                f"{path}:{lineno}: expected {len(TR_COLUMNS)} columns, got {len(parts)}"
            )
        try:
            f, re_t, im_t, re_r, im_r = (float(p) for p in parts)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: non-numeric value in {stripped!r}") from exc
        rows.append(
            ScatteringData(f=f, transmission=complex(re_t, im_t), reflection=complex(re_r, im_r))
        )
    if not header_seen:
        raise ConfigError(f"{path}: no header row found")
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    return rows


def write_results_csv(
    path: str | Path,
    results: list[RetrievedProperties],
    z2: complex,
    comments: list[str] = (),
) -> None:
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(RESULT_COLUMNS))
    for r in results:
        ratio = abs(r.z1 / z2)
        lines.append(
            ",".join(
                [
                    _fmt(r.f),
                    _fmt(r.n1.real),
                    _fmt(r.n1.imag),
                    _fmt(r.z1.real),
                    _fmt(r.z1.imag),
                    _fmt(ratio),
                    str(r.branch_m),
                    str(r.sign_choice),
                    _fmt(r.condition_number),
                    ";".join(r.flags),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_results_csv(path: str | Path) -> list[dict]:
    """Read a results file back as dict rows (floats, ints, flag tuple)."""
    rows: list[dict] = []
    header_seen = False
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if not header_seen:
            if [c.strip() for c in stripped.split(",")] != RESULT_COLUMNS:
                raise ConfigError(f"{path}:{lineno}: unexpected results header {stripped!r}")
            header_seen = True
            continue
        parts = stripped.split(",")
        if len(parts) != len(RESULT_COLUMNS):
            raise ConfigError(f"{path}:{lineno}: expected {len(RESULT_COLUMNS)} columns")
        rows.append(
            {
                "f": float(parts[0]),
                "n1": complex(float(parts[1]), float(parts[2])),
                "z1": complex(float(parts[3]), float(parts[4])),
                "z1_over_z2_mag": float(parts[5]),
                "branch_m": int(parts[6]),
                "sign": int(parts[7]),
                "condition_number": float(parts[8]),
                "flags": tuple(p for p in parts[9].split(";") if p),
            }
        )
    if not header_seen:
        raise ConfigError(f"{path}: no header row found")
    return rows


def write_sidecar(path: str | Path, config_dump: str, extra: dict[str, str] = ()) -> None:
    """Run metadata next to a data file; deliberately timestamp-free."""
    lines = ["# run metadata"]
    for key, value in dict(extra or {}).items():
        lines.append(f"{key} = {value}")
    lines.append("# resolved configuration")
    lines.append(config_dump.rstrip("\n"))
    Path(str(path) + ".meta").write_text("\n".join(lines) + "\n")


def write_field_csv(path: str | Path, x, r, p) -> None:
    """Raster dump of a complex pressure field as x, r, Re p, Im p rows."""
    lines = ["x_m,r_m,re_p,im_p"]
    for i, xv in enumerate(x):
        for j, rv in enumerate(r):
            val = p[i, j]
            lines.append(f"{_fmt(xv)},{_fmt(rv)},{_fmt(val.real)},{_fmt(val.imag)}")
    Path(path).write_text("\n".join(lines) + "\n")
