"""Dense complex operator algebra for small electron-nucleus systems.

Everything here works on plain numpy arrays of shape (d, d). All frequencies
are angular (rad/s); all times are seconds. Operators are treated as immutable
values: functions return fresh arrays and never modify their inputs.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson

HERMITIAN_RTOL = 1e-12
UNITARY_ATOL = 1e-10


class DimensionError(ValueError):
    """Unsupported electron dimension (only 2 and 3 level systems exist here)."""


class ResolutionError(ValueError):
    """Quadrature grid too coarse for the requested time-dependent integral."""

    def __init__(self, steps, minimum):
        self.minimum = minimum
        super().__init__(
            f"{steps} quadrature steps cannot resolve the integrand; "
            f"need at least {minimum} (>= 20 samples per oscillation period)"
        )


def is_hermitian(a, rtol=HERMITIAN_RTOL):
    scale = max(np.abs(a).max(), 1.0)
    return np.abs(a - a.conj().T).max() <= rtol * scale


def is_unitary(u, atol=UNITARY_ATOL):
    d = u.shape[0]
    return np.linalg.norm(u.conj().T @ u - np.eye(d)) <= atol


def commutator(a, b):
    return a @ b - b @ a


def spin_ops(dim):
    """Spin matrices for a 2- or 3-level electron (or the spin-1/2 nucleus).

    dim=2 gives the Pauli matrices divided by two, dim=3 the standard spin-1
    angular momentum matrices. Returns a dict with keys 'x', 'y', 'z'.
    """
    if dim == 2:
        sx = np.array([[0, 1], [1, 0]], dtype=complex) / 2
        sy = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
        sz = np.array([[1, 0], [0, -1]], dtype=complex) / 2
    elif dim == 3:
        s = 1 / np.sqrt(2)
        sx = np.array([[0, s, 0], [s, 0, s], [0, s, 0]], dtype=complex)
        sy = np.array([[0, -1j * s, 0], [1j * s, 0, -1j * s], [0, 1j * s, 0]], dtype=complex)
        sz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    else:
        raise DimensionError(f"unsupported spin dimension {dim}")
    return {"x": sx, "y": sy, "z": sz}


def kron(a, b):
    """Tensor product, electron factor first."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def propagator(h, dt):
    """exp(-i h dt) for Hermitian h, exactly unitary via eigendecomposition."""
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h):
        raise ValueError("propagator requires a Hermitian generator")
    if dt < 0:
        raise ValueError("dt must be >= 0")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * dt)) @ v.conj().T


@dataclass(frozen=True)
class DressedFrame:
    """Unitary change to the drive eigenbasis and the spin operators there.

    ``basis_change`` maps bare-basis vectors to dressed-basis vectors
    (dressed = V @ bare). ``f_ops`` holds F_x, F_y, F_z expressed in the
    dressed basis; ``ftilde_plus`` exists for the three-level system only.
    """

    electron_dim: int
    basis_change: np.ndarray
    f_ops: dict
    ftilde_plus: np.ndarray | None = None


def dressed_frame(dim):
    """Dressed basis of the resonant drive: V Sx V† = F_z, V Sz V† = -F_x.

    For dim 2 the dressed states are |+> = (|+1/2> + |-1/2>)/sqrt2 and
    |-> = (|-1/2> - |+1/2>)/sqrt2 (the sign of |-> is fixed, up to a global
    phase, by the Sz -> -F_x convention). For dim 3 the rows of V are the
    Sx eigenvectors ordered u, D, d with F_z = diag(1, 0, -1).
    """
    f = spin_ops(dim)
    if dim == 2:
        v = np.array([[1, 1], [-1, 1]], dtype=complex) / np.sqrt(2)
        ftilde = None
    elif dim == 3:
        h = 0.5
        r = 1 / np.sqrt(2)
        # rows: <u|, <D|, <d| in the bare (+1, 0, -1) basis
        v = np.array([[h, r, h], [-r, 0, r], [h, -r, h]], dtype=complex)
        ftilde = np.sqrt(2) * np.array(
            [[0, 1, 0], [0, 0, -1], [0, 0, 0]], dtype=complex
        )
    else:
        raise DimensionError(f"unsupported electron dimension {dim}")
    return DressedFrame(electron_dim=dim, basis_change=v, f_ops=f, ftilde_plus=ftilde)


def _cumsimp(y, x):
    # scipy's cumulative_simpson silently casts complex input to real
    return cumulative_simpson(y.real, x=x, axis=0, initial=0) + 1j * cumulative_simpson(
        y.imag, x=x, axis=0, initial=0
    )


def _grid(h, t, steps, max_frequency):
    if t <= 0:
        raise ValueError("integration time must be positive")
    if max_frequency is not None and max_frequency > 0:
        minimum = int(np.ceil(20 * max_frequency * t / (2 * np.pi)))
        if steps < minimum:
            raise ResolutionError(steps, minimum)
    n = steps + steps % 2  # composite Simpson needs an even step count
    ts = np.linspace(0.0, t, n + 1)
    hs = np.stack([np.asarray(h(s), dtype=complex) for s in ts])
    return ts, hs


def second_order_average(h, t, steps, max_frequency=None):
    """Second-order effective Hamiltonian -(i/2t) iint_{t1>t2} [H(t1), H(t2)].

    Iterated composite-Simpson quadrature on the ordered simplex. Over a full
    common period of an oscillatory H(t) this converges to the secular
    second-order (AC Stark / effective coupling) Hamiltonian.
    """
    ts, hs = _grid(h, t, steps, max_frequency)
    g1 = _cumsimp(hs, ts)
    integrand = hs @ g1 - g1 @ hs
    total = _cumsimp(integrand, ts)[-1]
    return -0.5j * total / t


def magnus_third_order_numeric(h, t, steps, max_frequency=None):
    """Triple-commutator integral (1/6t) iiint ([H1,[H2,H3]] + [H3,[H2,H1]]).

    Integration runs over the ordered simplex t1 > t2 > t3 in [0, t] with
    iterated composite Simpson. The first commutator chain nests directly;
    the second places the outermost time inside the brackets, so its two
    middle-factor monomials are accumulated as d^2 x d^2 superoperators.
    Hermitian inputs give a Hermitian result up to quadrature error.
    """
    ts, hs = _grid(h, t, steps, max_frequency)
    d = hs.shape[1]

    g1 = _cumsimp(hs, ts)

    # term 1: [H(t1), int [H(t2), G1(t2)] dt2]
    inner = hs @ g1 - g1 @ hs
    b = _cumsimp(inner, ts)
    term1 = _cumsimp(hs @ b - b @ hs, ts)[-1]

    # term 2: [H(t3), [H(t2), H(t1)]] expanded into four t2-integrals:
    #   (int G1 H) H1  +  H1 (int H G1)  -  int G1 H1 H  -  int H H1 G1
    left = _cumsimp(g1 @ hs, ts)
    right = _cumsimp(hs @ g1, ts)
    phi = _cumsimp(
        np.einsum("kij,klm->kiljm", g1, hs.transpose(0, 2, 1)).reshape(-1, d * d, d * d), ts
    )
    psi = _cumsimp(
        np.einsum("kij,klm->kiljm", hs, g1.transpose(0, 2, 1)).reshape(-1, d * d, d * d), ts
    )
    hvec = hs.reshape(-1, d * d, 1)
    mid = ((phi + psi) @ hvec).reshape(-1, d, d)
    d_of_t1 = left @ hs + hs @ right - mid
    term2 = _cumsimp(d_of_t1, ts)[-1]

    return (term1 + term2) / (6 * t)
