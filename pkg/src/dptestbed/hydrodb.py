"""Frequency-domain hydrodynamic database: types, file I/O, synthetic generator.

The database carries everything the time-domain model needs: a frequency grid
(Hz), per-frequency added mass A(f) and radiation damping B(f), the hydrostatic
restoring matrix C, the rigid-body mass matrix M_RB and first-order wave force
RAOs per relative wave heading. All values are SI (kg, N, m, rad) at the scale
the file declares.

File format (plain text, '#' starts a comment):

    [FREQ]
    0.01 0.0165 ...                    # ascending, Hz
    [M_RB]
    <6 rows of 6 numbers>
    [C]
    <6 rows of 6 numbers>
    [A]
    f = 0.01
    <6 rows of 6 numbers>              # one block per grid frequency
    ...
    [B]
    f = 0.01
    <6 rows>
    ...
    [RAO]
    dir = 0.0                          # relative heading, rad, 0 = head sea
    0.01 a1 p1 a2 p2 ... a6 p6         # per grid frequency: amplitude, phase
    ...

Relative heading convention: the direction the waves come FROM, measured from
the bow, positive toward starboard. M_RB and C must be symmetric; asymmetry is
rejected with a diagnostic naming the offending entry.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kinematics import wrap_angle

RHO_WATER = 1025.0
RHO_AIR = 1.225
GRAVITY = 9.81


class HydroDatabaseError(ValueError):
    """Structurally invalid hydrodynamic database."""


class InsufficientFrequencyGrid(HydroDatabaseError):
    """Frequency grid too short or not strictly ascending."""


def _check_symmetric(mat: np.ndarray, name: str, rel_tol: float = 1e-9) -> None:
    for i in range(mat.shape[0]):
        for j in range(i + 1, mat.shape[1]):
            scale = max(1.0, abs(mat[i, j]), abs(mat[j, i]))
            if abs(mat[i, j] - mat[j, i]) > rel_tol * scale:
                raise HydroDatabaseError(
                    f"{name} not symmetric at ({i},{j}): "
                    f"{mat[i, j]!r} vs {mat[j, i]!r}"
                )


def check_frequency_grid(freq_grid: np.ndarray) -> None:
    f = np.asarray(freq_grid, dtype=float)
    if f.ndim != 1 or len(f) < 8:
        raise InsufficientFrequencyGrid(
            f"need at least 8 frequencies, got {f.size}"
        )
    if np.any(f <= 0.0) or np.any(np.diff(f) <= 0.0):
        raise InsufficientFrequencyGrid("frequency grid must be ascending and > 0")


@dataclass
class HydroDatabase:
    """Frequency-dependent hydrodynamic coefficients of one vessel.

    Attributes
    ----------
    freq_grid : (nf,) ascending wave frequencies, Hz
    added_mass : (nf, 6, 6) A(f), kg / kg m / kg m^2
    damping : (nf, 6, 6) B(f), N s/m etc.; symmetric PSD at each frequency
    restoring : (6, 6) hydrostatic stiffness C, symmetric
    mass_rb : (6, 6) rigid-body mass matrix, symmetric positive definite
    rao_dirs : (nd,) relative wave headings of the RAO table, rad in (-pi, pi]
    force_rao : (nd, nf, 6) complex force per unit wave amplitude, N/m (N m/m)
    """

    freq_grid: np.ndarray
    added_mass: np.ndarray
    damping: np.ndarray
    restoring: np.ndarray
    mass_rb: np.ndarray
    rao_dirs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    force_rao: np.ndarray = field(default_factory=lambda: np.zeros((0, 0, 6), complex))

    def __post_init__(self):
        self.freq_grid = np.asarray(self.freq_grid, dtype=float)
        self.added_mass = np.asarray(self.added_mass, dtype=float)
        self.damping = np.asarray(self.damping, dtype=float)
        self.restoring = np.asarray(self.restoring, dtype=float)
        self.mass_rb = np.asarray(self.mass_rb, dtype=float)
        self.rao_dirs = np.asarray(self.rao_dirs, dtype=float)
        self.force_rao = np.asarray(self.force_rao, dtype=complex)

    def validate(self) -> "HydroDatabase":
        check_frequency_grid(self.freq_grid)
        nf = len(self.freq_grid)
        if self.added_mass.shape != (nf, 6, 6):
            raise HydroDatabaseError(f"added mass shape {self.added_mass.shape}")
        if self.damping.shape != (nf, 6, 6):
            raise HydroDatabaseError(f"damping shape {self.damping.shape}")
        _check_symmetric(self.mass_rb, "M_RB")
        _check_symmetric(self.restoring, "C")
        eig = np.linalg.eigvalsh(self.mass_rb)
        if eig.min() <= 0.0:
            raise HydroDatabaseError(
                f"M_RB not positive definite (min eigenvalue {eig.min():.3e})"
            )
        for k, f in enumerate(self.freq_grid):
            _check_symmetric(self.damping[k], f"B(f={f:g})", rel_tol=1e-7)
            beig = np.linalg.eigvalsh(self.damping[k])
            scale = max(1.0, float(np.abs(self.damping[k]).max()))
            if beig.min() < -1e-6 * scale:
                raise HydroDatabaseError(
                    f"B(f={f:g}) not positive semidefinite "
                    f"(min eigenvalue {beig.min():.3e})"
                )
        if self.force_rao.size:
            nd = len(self.rao_dirs)
            if self.force_rao.shape != (nd, nf, 6):
                raise HydroDatabaseError(f"RAO shape {self.force_rao.shape}")
        return self


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------

_SECTIONS = ("FREQ", "M_RB", "C", "A", "B", "RAO")


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_hydro_database(text: str) -> HydroDatabase:
    """Parse the database format described in the module docstring.

    Accepts the file content as a string; see `load_hydro_database` for paths.
    """
    lines = [_strip(ln) for ln in text.splitlines()]
    section = None
    freq: list[float] = []
    plain: dict[str, list[list[float]]] = {"M_RB": [], "C": []}
    blocks: dict[str, dict[float, list[list[float]]]] = {"A": {}, "B": {}}
    rao: dict[float, list[tuple[float, list[float]]]] = {}
    cur_f = None
    cur_dir = None

    for lineno, ln in enumerate(lines, start=1):
        if not ln:
            continue
        if ln.startswith("[") and ln.endswith("]"):
            section = ln[1:-1].strip()
            if section not in _SECTIONS:
                raise HydroDatabaseError(f"line {lineno}: unknown section [{section}]")
            cur_f = None
            cur_dir = None
            continue
        if section is None:
            raise HydroDatabaseError(f"line {lineno}: data before any section")
        if section == "FREQ":
            freq.extend(float(tok) for tok in ln.split())
        elif section in ("M_RB", "C"):
            plain[section].append([float(tok) for tok in ln.split()])
        elif section in ("A", "B"):
            if ln.replace(" ", "").startswith("f="):
                cur_f = float(ln.split("=", 1)[1])
                blocks[section][cur_f] = []
            else:
                if cur_f is None:
                    raise HydroDatabaseError(
                        f"line {lineno}: matrix row before 'f =' in [{section}]"
                    )
                blocks[section][cur_f].append([float(tok) for tok in ln.split()])
        elif section == "RAO":
            if ln.replace(" ", "").startswith("dir="):
                cur_dir = float(ln.split("=", 1)[1])
                rao[cur_dir] = []
            else:
                if cur_dir is None:
                    raise HydroDatabaseError(
                        f"line {lineno}: RAO row before 'dir =' in [RAO]"
                    )
                toks = [float(tok) for tok in ln.split()]
                if len(toks) != 13:
                    raise HydroDatabaseError(
                        f"line {lineno}: RAO row needs 13 numbers "
                        f"(f + 6 amplitude/phase pairs), got {len(toks)}"
                    )
                rao[cur_dir].append((toks[0], toks[1:]))

    freq_grid = np.asarray(freq, dtype=float)
    check_frequency_grid(freq_grid)
    nf = len(freq_grid)

    def as_matrix(rows, name):
        m = np.asarray(rows, dtype=float)
        if m.shape != (6, 6):
            raise HydroDatabaseError(f"{name} must be 6x6, got {m.shape}")
        return m

    mass_rb = as_matrix(plain["M_RB"], "M_RB")
    restoring = as_matrix(plain["C"], "C")
    _check_symmetric(mass_rb, "M_RB")
    _check_symmetric(restoring, "C")

    def as_stack(section):
        got = blocks[section]
        if len(got) != nf:
            raise HydroDatabaseError(
                f"[{section}] has {len(got)} blocks for {nf} grid frequencies"
            )
        stack = np.zeros((nf, 6, 6))
        for k, f in enumerate(freq_grid):
            match = [fv for fv in got if abs(fv - f) <= 1e-9 * max(1.0, abs(f))]
            if not match:
                raise HydroDatabaseError(f"[{section}] missing block for f={f!r}")
            stack[k] = as_matrix(got[match[0]], f"{section}(f={f!r})")
        return stack

    added_mass = as_stack("A")
    damping = as_stack("B")

    rao_dirs = np.asarray(sorted(rao), dtype=float)
    force = np.zeros((len(rao_dirs), nf, 6), dtype=complex)
    for d, dval in enumerate(rao_dirs):
        rows = rao[dval]
        if len(rows) != nf:
            raise HydroDatabaseError(
                f"[RAO] dir={dval!r} has {len(rows)} rows for {nf} frequencies"
            )
        for k, (f, vals) in enumerate(rows):
            if abs(f - freq_grid[k]) > 1e-9 * max(1.0, freq_grid[k]):
                raise HydroDatabaseError(
                    f"[RAO] dir={dval!r}: row {k} frequency {f!r} does not "
                    f"match grid value {freq_grid[k]!r}"
                )
            amp = np.asarray(vals[0::2])
            ph = np.asarray(vals[1::2])
            force[d, k] = amp * np.exp(1j * ph)

    return HydroDatabase(
        freq_grid=freq_grid,
        added_mass=added_mass,
        damping=damping,
        restoring=restoring,
        mass_rb=mass_rb,
        rao_dirs=rao_dirs,
        force_rao=force,
    ).validate()


def load_hydro_database(path) -> HydroDatabase:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_hydro_database(fh.read())


def format_hydro_database(db: HydroDatabase, comment: str = "") -> str:
    """Serialize a database to the text format (lossless float round trip)."""
    out = []
    if comment:
        out.extend(f"# {ln}" for ln in comment.splitlines())
    out.append("[FREQ]")
    out.extend(repr(float(f)) for f in db.freq_grid)

    def rows(mat):
        return [" ".join(repr(float(v)) for v in row) for row in mat]

    out.append("[M_RB]")
    out.extend(rows(db.mass_rb))
    out.append("[C]")
    out.extend(rows(db.restoring))
    for name, stack in (("A", db.added_mass), ("B", db.damping)):
        out.append(f"[{name}]")
        for f, mat in zip(db.freq_grid, stack):
            out.append(f"f = {float(f)!r}")
            out.extend(rows(mat))
    if db.force_rao.size:
        out.append("[RAO]")
        for dval, table in zip(db.rao_dirs, db.force_rao):
            out.append(f"dir = {float(dval)!r}")
            for f, vec in zip(db.freq_grid, table):
                pairs = []
                for c in vec:
                    pairs.append(repr(float(abs(c))))
                    pairs.append(repr(float(np.angle(c))))
                out.append(f"{float(f)!r} " + " ".join(pairs))
    return "\n".join(out) + "\n"


def save_hydro_database(db: HydroDatabase, path, comment: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_hydro_database(db, comment))


# ---------------------------------------------------------------------------
# synthetic database for tests and the shipped default vessel
# ---------------------------------------------------------------------------

# Shuttle-tanker principal dimensions, full scale.
ST_LENGTH = 137.0
ST_BEAM = 22.8
ST_DRAUGHT = 8.655
ST_MASS = 21.402e6
ST_FREEBOARD_AREA = 0.80 * ST_LENGTH * 8.0      # lateral windage, m^2
ST_FRONTAL_AREA = 0.85 * ST_BEAM * 8.0          # frontal windage, m^2


def _hump(f, f_peak):
    """Smooth unimodal shape peaking at 1 for f = f_peak, -> 0 at 0 and inf."""
    x = np.asarray(f) / f_peak
    return x**2 * np.exp(1.0 - x**2)


def synthetic_st_database(
    n_freq: int = 64,
    f_min: float = 0.005,
    f_max: float = 0.40,
    n_dir: int = 12,
) -> HydroDatabase:
    """Analytic stand-in for a panel-code run on the 137 m shuttle tanker.

    Smooth, symmetric, positive-semidefinite coefficient curves with
    magnitudes sized from the principal dimensions. Used by the test suite
    and as the shipped default plant.
    """
    f = np.linspace(f_min, f_max, n_freq)
    m = ST_MASS
    ix = m * (0.35 * ST_BEAM) ** 2
    iy = m * (0.25 * ST_LENGTH) ** 2
    iz = iy

    mass_rb = np.diag([m, m, m, ix, iy, iz])

    awp = 0.85 * ST_LENGTH * ST_BEAM
    c = np.zeros((6, 6))
    c[2, 2] = RHO_WATER * GRAVITY * awp
    c[3, 3] = m * GRAVITY * 1.2          # transverse GM 1.2 m
    c[4, 4] = m * GRAVITY * 160.0        # longitudinal GM 160 m
    c[2, 4] = c[4, 2] = RHO_WATER * GRAVITY * awp * 3.0   # LCF 3 m aft

    a_inf = np.diag([0.05 * m, 0.85 * m, 1.10 * m, 0.30 * ix, 0.90 * iy, 0.55 * iz])
    a_var = np.diag([0.02 * m, 0.25 * m, 0.60 * m, 0.10 * ix, 0.30 * iy, 0.20 * iz])
    a_inf[1, 5] = a_inf[5, 1] = 0.02 * m * ST_LENGTH
    a_var[1, 5] = a_var[5, 1] = 0.01 * m * ST_LENGTH
    decay = 1.0 / (1.0 + (f / 0.08) ** 2)
    added_mass = a_inf[None, :, :] + a_var[None, :, :] * decay[:, None, None]

    b_peak = np.array([8.0e5, 6.0e6, 1.4e7, 8.0e7, 1.2e10, 2.0e9])
    f_peak = np.array([0.08, 0.09, 0.11, 0.10, 0.11, 0.09])
    # horizontal-plane DOFs keep a low-frequency shoulder (viscous-like drift
    # damping a bare wave-radiation hump would miss)
    b_low = np.array([4.0e5, 1.0e6, 0.0, 0.0, 0.0, 1.6e9])
    damping = np.zeros((n_freq, 6, 6))
    for i in range(6):
        damping[:, i, i] = b_peak[i] * _hump(f, f_peak[i])
        damping[:, i, i] += b_low[i] * _hump(f, 0.025)
    coup = 0.15 * np.sqrt(damping[:, 1, 1] * damping[:, 5, 5])
    damping[:, 1, 5] = damping[:, 5, 1] = coup

    dirs = wrap_angle(np.linspace(0.0, 2.0 * np.pi, n_dir, endpoint=False))
    order = np.argsort(dirs)
    dirs = dirs[order]

    # First-order force RAO magnitudes per unit amplitude; heading dependence
    # through cos/sin so that mirroring the sea mirrors sway/roll/yaw forces.
    amp_scale = np.array([8.0e5, 5.0e6, 8.0e6, 4.0e7, 3.0e8, 6.0e7])
    rao_fpeak = np.array([0.13, 0.10, 0.09, 0.10, 0.12, 0.10])
    phase0 = np.array([0.3, -0.5, 0.0, 0.9, -1.1, 0.4])
    phase1 = np.array([1.0, 0.6, 0.8, -0.7, 0.5, -0.9])

    force = np.zeros((n_dir, n_freq, 6), dtype=complex)
    for d, beta in enumerate(dirs):
        head = np.array([
            np.cos(beta),            # surge: head/following seas
            np.sin(beta),            # sway: beam seas, odd in heading
            1.0,                     # heave: omnidirectional
            np.sin(beta),            # roll: beam seas
            np.cos(beta),            # pitch: head seas
            np.sin(2.0 * beta),      # yaw: oblique seas
        ])
        for i in range(6):
            mag = amp_scale[i] * _hump(f, rao_fpeak[i]) * head[i]
            ph = phase0[i] + phase1[i] * f / f_max
            force[d, :, i] = mag * np.exp(1j * ph)

    return HydroDatabase(
        freq_grid=f,
        added_mass=added_mass,
        damping=damping,
        restoring=c,
        mass_rb=mass_rb,
        rao_dirs=dirs,
        force_rao=force,
    ).validate()
