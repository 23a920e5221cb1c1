"""Linear-inversion state tomography built on the simulated measurement chain.

The measurement model is never transcribed by hand: each row is obtained by
pushing Hermitian basis matrices through rotation, FID simulation, Fourier
transform and peak integration.  Because that chain is linear in the density
matrix, the resulting coefficients reproduce any readout exactly.
"""

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .acquisition import acquire_gammas, default_params, peak_table
from .pulses import DEFAULT_OPTIONS, apply, named_sequence, sequence_unitary
from .qmat import ContractError, as_matrix, hermitian_basis, is_hermitian
from .spin import chloroform_1q, chloroform_2q

ROTATION_IDS = ("NONE", "PI1", "OMEGA1", "OMEGA2", "OMEGA3", "OMEGA4")
ROUTINE_1Q = ("NONE", "PI1")
ROUTINE_2Q = ("NONE", "OMEGA1", "OMEGA2", "OMEGA3", "OMEGA4")
CONDITION_LIMIT = 1e8
RANK_RTOL = 1e-10
STATE_TOL = 1e-9


class TomographyWarning(UserWarning):
    pass


def default_routine(system):
    return ROUTINE_1Q if system.n_spins == 1 else ROUTINE_2Q


@dataclass(frozen=True)
class TomographyReadout:
    rotation_id: str
    gammas: dict  # Gamma index (1-based) -> complex

    def __post_init__(self):
        if self.rotation_id not in ROTATION_IDS:
            raise ValueError(f"unknown rotation {self.rotation_id!r}; expected one of {ROTATION_IDS}")


@dataclass
class MeasurementModel:
    """Stacked linear map from basis coefficients to Gamma readouts.

    ``matrix[r, k]`` is the Gamma value in ``slots[r]`` produced by ``basis[k]``.
    """

    system: object
    rotations: tuple
    slots: list  # (rotation_id, gamma_index) per row
    matrix: np.ndarray  # complex, (n_rows, n_basis)
    basis: list
    params: object
    warnings: list = field(default_factory=list)

    @property
    def real_system(self):
        return np.vstack([self.matrix.real, self.matrix.imag])

    @property
    def singular_values(self):
        return np.linalg.svd(self.real_system, compute_uv=False)

    @property
    def rank(self):
        s = self.singular_values
        return int(np.sum(s > s[0] * RANK_RTOL)) if s.size and s[0] > 0 else 0

    @property
    def null_space_dim(self):
        return len(self.basis) - self.rank

    @property
    def condition_number(self):
        s = self.singular_values
        if self.null_space_dim:
            return float("inf")
        return float(s[0] / s[-1])

    @property
    def is_complete(self):
        return self.null_space_dim == 0

    def row(self, rotation_id, gamma_index):
        return self.matrix[self.slots.index((rotation_id, gamma_index))]

    def forward(self, rho):
        """Noise-free Gamma vector (slot order) for a traceless Hermitian ``rho``."""
        return self.matrix @ coefficients(rho, self.basis)


def coefficients(rho, basis):
    """Real expansion coefficients of a Hermitian matrix over an orthonormal basis."""
    rho = as_matrix(rho)
    return np.array([np.real(np.trace(e.conj().T @ rho)) for e in basis])


def rotation_unitary(rotation_id, system, options=DEFAULT_OPTIONS):
    return sequence_unitary(named_sequence(rotation_id), system, options)


def build_measurement_model(system, rotations=None, params=None):
    """Assemble the measurement model for ``rotations`` by driving the simulated chain.

    Rank deficiency is not an error here: it is recorded in ``model.warnings``
    together with the null-space dimension.
    """
    rotations = tuple(default_routine(system) if rotations is None else rotations)
    if not rotations:
        raise ContractError("build_measurement_model needs at least one rotation")
    for r in rotations:
        if r not in ROTATION_IDS:
            raise ValueError(f"unknown rotation {r!r}")
    params = (params or default_params(system)).replace(noise_sigma=0.0)
    peaks = peak_table(system, params)
    basis = hermitian_basis(system.dim, traceless=True)
    slots, rows = [], []
    for r in rotations:
        u = rotation_unitary(r, system)
        columns = [acquire_gammas(apply(u, e), system, params, peaks) for e in basis]
        for peak in peaks:
            slots.append((r, peak.gamma_index))
            rows.append([col[peak.gamma_index] for col in columns])
    model = MeasurementModel(system, rotations, slots, np.array(rows, dtype=complex), basis, params)
    if not model.is_complete:
        model.warnings.append(
            f"rank-deficient measurement model: rank {model.rank} of {len(basis)}, "
            f"null-space dimension {model.null_space_dim}"
        )
    return model


def simulate_readouts(rho, model, options=DEFAULT_OPTIONS, params=None, contamination=None, seed_path=(), record=None):
    """Acquire every rotation of ``model`` on ``rho``.

    ``options`` controls how the rotations are compiled for the experiment (for
    instance miscalibrated), independently of the ideal model.  ``contamination``
    maps rotation id to a channel -> Fid mapping added before the transform.
    ``record``, when a dict, collects rotation id -> list of (fid, spectrum).
    """
    params = params or model.params
    peaks = peak_table(model.system, params)
    out = []
    for k, r in enumerate(model.rotations):
        rotated = apply(rotation_unitary(r, model.system, options), rho)
        extra = (contamination or {}).get(r)
        sink = record.setdefault(r, []) if record is not None else None
        gammas = acquire_gammas(rotated, model.system, params, peaks, extra, seed_path=(*seed_path, k), record=sink)
        out.append(TomographyReadout(r, gammas))
    return out


def readouts_to_vector(model, readouts):
    by_rotation = {ro.rotation_id: ro for ro in readouts}
    values = []
    for r, g in model.slots:
        if r not in by_rotation:
            raise ContractError(f"missing readout for rotation {r}")
        if g not in by_rotation[r].gammas:
            raise ContractError(f"readout for rotation {r} lacks Gamma_{g}")
        values.append(by_rotation[r].gammas[g])
    return np.array(values, dtype=complex)


@dataclass
class Reconstruction:
    rho: np.ndarray
    warnings: list = field(default_factory=list)


def _solve(model, vectors):
    """Least squares on the stacked real system; ``vectors`` is (n_rows, n_exp) complex."""
    a = model.real_system
    b = np.vstack([vectors.real, vectors.imag])
    x, *_ = np.linalg.lstsq(a, b, rcond=None)
    return x


def _assemble(model, x):
    rho = sum(c * e for c, e in zip(x, model.basis))
    return (rho + rho.conj().T) / 2


def _solver_warnings(model):
    notes = list(model.warnings)
    cond = model.condition_number
    if cond > CONDITION_LIMIT:
        notes.append(f"ill-conditioned measurement model: condition number {cond:.3g}")
    return notes


def reconstruct(model, readouts):
    """Least-squares deviation matrix (Hermitian, traceless) from a set of readouts.

    The traceless basis makes both constraints structural.  Attached warnings
    flag rank deficiency or a condition number above ``CONDITION_LIMIT``.
    """
    vec = readouts_to_vector(model, readouts)
    x = _solve(model, vec[:, None])[:, 0]
    notes = _solver_warnings(model)
    for note in notes:
        warnings.warn(note, TomographyWarning, stacklevel=2)
    return Reconstruction(_assemble(model, x), notes)


def validate_peak_assignment(system, params=None, tol=1e-9):
    """Check that each native peak reads the density-matrix element named in the peak table.

    Runs without the T2 envelope: with decay the Lorentzian tails of the partner
    line leak into each window, which the full model absorbs but which would
    blur this element-by-element check.  Returns a list of (peak, proportionality
    constant) and raises ContractError if any row is not proportional.
    """
    params = (params or default_params(system)).replace(decoherence=False)
    model = build_measurement_model(system, ("NONE",), params)
    out = []
    for peak in peak_table(system, model.params):
        row = model.row("NONE", peak.gamma_index)
        i, j = peak.element
        target = np.array([e[i, j] for e in model.basis])
        scale = np.vdot(target, row) / np.vdot(target, target)
        if np.max(np.abs(row - scale * target)) > tol * max(1.0, np.max(np.abs(row))):
            raise ContractError(f"peak {peak} is not proportional to rho[{i + 1},{j + 1}]")
        out.append((peak, complex(scale)))
    return out


# Printed relations between Gamma readouts and matrix elements (1-based indices).
# Each entry: (key, system size, rotation, lhs, rhs, real_only).
def _r(rho, i, j):
    return rho[i - 1, j - 1]


_RELATIONS = (
    ("c1", 1, "NONE", lambda g: g[1], lambda p: _r(p, 2, 1), False),
    ("c2", 1, "PI1", lambda g: g[1], lambda p: 1j * (_r(p, 1, 1) - _r(p, 2, 2)) + np.real(_r(p, 1, 2)), False),
    ("gg1.G1", 2, "NONE", lambda g: g[1], lambda p: _r(p, 1, 3), False),
    ("gg1.G2", 2, "NONE", lambda g: g[2], lambda p: _r(p, 2, 4), False),
    ("gg1.G3", 2, "NONE", lambda g: g[3], lambda p: _r(p, 1, 2), False),
    ("gg1.G4", 2, "NONE", lambda g: g[4], lambda p: _r(p, 3, 4), False),
    ("omega1.G2", 2, "OMEGA1", lambda g: g[2], lambda p: 2 * _r(p, 1, 1) + 4 * _r(p, 2, 2) + 2 * _r(p, 3, 3), False),
    ("omega2.G3", 2, "OMEGA2", lambda g: g[3], lambda p: 2 * _r(p, 1, 1) - 2 * _r(p, 2, 2), False),
    ("omega2.G4", 2, "OMEGA2", lambda g: g[4], lambda p: 2 * _r(p, 1, 1) + 2 * _r(p, 2, 2) + 4 * _r(p, 3, 3), False),
    (
        "omega3.ReG1-G2", 2, "OMEGA3", lambda g: np.real(g[1] - g[2]),
        lambda p: 4 * (np.imag(_r(p, 1, 4)) - np.imag(_r(p, 2, 3))), True,
    ),
    (
        "omega3.ReG3-G4", 2, "OMEGA3", lambda g: np.real(g[3] - g[4]),
        lambda p: 4 * (np.imag(_r(p, 1, 4)) + np.imag(_r(p, 2, 3))), True,
    ),
    (
        "omega4.ReG1-G2", 2, "OMEGA4", lambda g: np.real(g[1] - g[2]),
        lambda p: 4 * (np.real(_r(p, 1, 4)) - np.real(_r(p, 2, 3))), True,
    ),
    (
        "omega4.ReG4-G3", 2, "OMEGA4", lambda g: np.real(g[4] - g[3]),
        lambda p: 4 * (np.real(_r(p, 1, 4)) + np.real(_r(p, 2, 3))), True,
    ),
)


@dataclass(frozen=True)
class RelationFinding:
    key: str
    rotation: str
    matches: bool
    variant: str  # "as printed", "transposed rho" or "none"
    scale: complex
    relative_residual: float
    diagonal_only: bool = False  # holds when rho is restricted to diagonal matrices

    def as_dict(self):
        return {
            "key": self.key,
            "rotation": self.rotation,
            "matches": self.matches,
            "variant": self.variant,
            "scale_re": float(np.real(self.scale)),
            "scale_im": float(np.imag(self.scale)),
            "relative_residual": float(self.relative_residual),
            "diagonal_only": self.diagonal_only,
        }


def _fit_scale(lhs, rhs, real_only):
    denom = np.vdot(rhs, rhs)
    if abs(denom) == 0:
        return 0.0, float("inf")
    scale = np.vdot(rhs, lhs) / denom
    if real_only:
        scale = np.real(scale)
    resid = np.linalg.norm(lhs - scale * rhs) / max(np.linalg.norm(lhs), 1e-300)
    return complex(scale), float(resid)


def paper_gamma_check(system, n_samples=24, seed=0, tol=1e-6):
    """Compare the simulator-derived readouts against the printed Gamma relations.

    Each relation is tested on random traceless Hermitian matrices, allowing one
    free proportionality constant and, as the convention switch, ``rho -> rho^T``
    (equivalently complex conjugation of every element).  The trace relation of
    the one-spin routine holds by construction and is listed as such.
    """
    from .qmat import random_hermitian

    rng = np.random.default_rng(seed)
    relations = [r for r in _RELATIONS if r[1] == system.n_spins]
    params = default_params(system, decoherence=False)  # keeps partner-line leakage out of the comparison
    model = build_measurement_model(system, tuple(dict.fromkeys(r[2] for r in relations)), params)
    samples = [random_hermitian(system.dim, rng, traceless=True) for _ in range(n_samples)]
    diagonal = [np.diag(np.diag(rho)) for rho in samples]
    n_peaks = len(peak_table(system, model.params))

    def evaluate(rot, lhs_fn, rhs_fn, real_only, mats):
        lhs = []
        for rho in mats:
            vec = model.forward(rho)
            lhs.append(lhs_fn({gi: vec[model.slots.index((rot, gi))] for gi in range(1, n_peaks + 1)}))
        lhs = np.array(lhs, dtype=complex)
        best = None
        for variant, transform in (("as printed", lambda m: m), ("transposed rho", lambda m: m.T)):
            rhs = np.array([rhs_fn(transform(rho)) for rho in mats], dtype=complex)
            scale, resid = _fit_scale(lhs, rhs, real_only)
            if best is None or resid < best[2]:
                best = (variant, scale, resid)
        return best

    findings = []
    for key, _, rot, lhs_fn, rhs_fn, real_only in relations:
        variant, scale, resid = evaluate(rot, lhs_fn, rhs_fn, real_only, samples)
        ok = resid < tol
        diag_ok = ok or evaluate(rot, lhs_fn, rhs_fn, real_only, diagonal)[2] < tol
        findings.append(RelationFinding(key, rot, ok, variant if ok else "none", scale, resid, diag_ok))
    if system.n_spins == 1:
        findings.append(RelationFinding("c3", "-", True, "by construction", 0j, 0.0, True))
    return findings


def reconstruct_state(rho, reference_index, mode="pseudo_pure"):
    """Read a state vector (amplitude, phase) per basis state out of a density matrix.

    ``reference_index`` is 1-based.  In ``"pseudo_pure"`` mode the matrix is
    first written as ``a * 1 + b * |psi><psi|`` (the eigenvalue standing
    furthest from the mean of the others fixes ``b``) and the state is read from
    ``(rho - a) / b``; ``"literal"`` mode reads ``rho`` itself.  Amplitudes are
    square roots of the diagonal, clamped at zero with a warning, and phases are
    ``Arg(P[i, ref])``.

    Returns ``(pairs, purity, warnings)``.
    """
    rho = as_matrix(rho)
    if not is_hermitian(rho, tol=1e-9):
        raise ContractError("reconstruct_state expects a Hermitian matrix")
    dim = len(rho)
    ref = int(reference_index) - 1
    if not 0 <= ref < dim:
        raise ContractError(f"reference_index must lie in 1..{dim}")
    rho = (rho + rho.conj().T) / 2
    notes = []
    if mode == "pseudo_pure":
        proj = _pseudo_pure_part(rho)
    elif mode == "literal":
        proj = rho
    else:
        raise ValueError("mode must be 'pseudo_pure' or 'literal'")
    diag = np.real(np.diag(proj))
    floor = STATE_TOL * max(1.0, float(np.max(np.abs(diag))))
    if diag[ref] <= floor:
        raise ContractError(f"reference element {reference_index} has non-positive weight; choose another index")
    if np.any(diag < -floor):
        notes.append("negative diagonal entries clamped to 0; the matrix is not close to a pure state")
    diag = np.where(np.abs(diag) <= floor, 0.0, diag)
    amplitudes = np.sqrt(np.clip(diag, 0, None))
    # a phase is only meaningful where the state has weight
    phases = np.where(amplitudes > 0, np.angle(proj[:, ref]), 0.0)
    phases[ref] = 0.0
    tr = np.real(np.trace(proj))
    if abs(tr) < 1e-12:
        purity = float("nan")
        notes.append("purity undefined for a traceless matrix")
    else:
        purity = float(np.real(np.trace(proj @ proj)) / tr**2)
    for note in notes:
        warnings.warn(note, TomographyWarning, stacklevel=2)
    return list(zip(amplitudes.tolist(), phases.tolist())), purity, notes


def _pseudo_pure_part(rho):
    evals = np.linalg.eigvalsh(rho)
    dim = len(evals)
    if dim == 1:
        return np.ones((1, 1), dtype=complex)
    best, best_gap = None, -1.0
    # iterate high to low so ties go to the larger eigenvalue
    for k in range(dim - 1, -1, -1):
        others = np.delete(evals, k)
        gap = abs(evals[k] - others.mean())
        if gap > best_gap + 1e-12:
            best, best_gap = k, gap
    a = np.delete(evals, best).mean()
    b = evals[best] - a
    if abs(b) < 1e-15:
        raise ContractError("matrix is proportional to the identity; no pseudo-pure component")
    return (rho - a * np.eye(dim)) / b


def normalize_scale(rho):
    """Rescale so the largest-magnitude diagonal element becomes +-1 with its sign kept."""
    rho = as_matrix(rho)
    d = np.real(np.diag(rho))
    k = int(np.argmax(np.abs(d)))
    if abs(d[k]) == 0:
        raise ContractError("cannot normalize: zero diagonal")
    return rho / abs(d[k])


def reconstruction_to_json(rho, purity=None, warnings_=()):
    """Fixed schema: dim, entries_re, entries_im, trace, purity, warnings."""
    rho = as_matrix(rho)
    tr = np.trace(rho)
    doc = {
        "dim": len(rho),
        "entries_re": rho.real.tolist(),
        "entries_im": rho.imag.tolist(),
        "trace": [float(tr.real), float(tr.imag)],
        "purity": None if purity is None or np.isnan(purity) else float(purity),
        "warnings": list(warnings_),
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def reconstruction_from_json(text):
    doc = json.loads(text)
    return np.array(doc["entries_re"]) + 1j * np.array(doc["entries_im"]), doc


def _validate_gamma_matrix(x, n_features):
    x = np.asarray(x)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ValueError(f"expected a 2-D array of Gamma readouts, got shape {x.shape}")
    if x.shape[1] != n_features:
        raise ValueError(f"expected {n_features} Gamma readouts per row, got {x.shape[1]}")
    x = x.astype(complex)
    if not np.all(np.isfinite(x)):
        raise ValueError("Gamma readouts contain NaN or infinity")
    return x


class StateTomography(TransformerMixin, BaseEstimator):
    """Estimator wrapper: ``fit`` builds the measurement model, ``transform`` inverts it.

    Each row of ``X`` holds the complex Gamma readouts of one experiment in
    ``slots_`` order; ``transform`` returns an array of shape (n, dim, dim).
    ``inverse_transform`` runs the forward model.
    """

    def __init__(self, n_spins=2, rotations=None, n_samples=4096, dwell=None, decoherence=True):
        self.n_spins = n_spins
        self.rotations = rotations
        self.n_samples = n_samples
        self.dwell = dwell
        self.decoherence = decoherence

    def _system(self):
        if self.n_spins == 1:
            return chloroform_1q()
        if self.n_spins == 2:
            return chloroform_2q()
        raise ValueError("n_spins must be 1 or 2")

    def fit(self, X=None, y=None):
        system = self._system()
        kwargs = {"n_samples": self.n_samples, "decoherence": self.decoherence}
        if self.dwell is not None:
            kwargs["dwell"] = self.dwell
        model = build_measurement_model(system, self.rotations, default_params(system, **kwargs))
        self.model_ = model
        self.slots_ = list(model.slots)
        self.n_features_in_ = len(model.slots)
        self.rank_ = model.rank
        if X is not None:
            _validate_gamma_matrix(X, self.n_features_in_)
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        x = _validate_gamma_matrix(X, self.n_features_in_)
        coeffs = _solve(self.model_, x.T)
        for note in _solver_warnings(self.model_):
            warnings.warn(note, TomographyWarning, stacklevel=2)
        return np.array([_assemble(self.model_, c) for c in coeffs.T])

    def inverse_transform(self, rhos):
        check_is_fitted(self, "model_")
        rhos = np.asarray(rhos, dtype=complex)
        if rhos.ndim == 2:
            rhos = rhos[None]
        return np.array([self.model_.forward(r) for r in rhos])

    def readouts_to_row(self, readouts):
        check_is_fitted(self, "model_")
        return readouts_to_vector(self.model_, readouts)
