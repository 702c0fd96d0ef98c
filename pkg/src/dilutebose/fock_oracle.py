"""Brute-force truncated Fock space for a handful of momentum modes.

The trial state is built by summing operator exponentials term by term on a
dense occupation tensor, and expectation values are obtained by applying
ladder operators to that tensor. Nothing here uses the closed-form moment
formulas, so it serves as an independent check of the analytic energy.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, VerificationError

MAX_TENSOR_ENTRIES = 5_000_000
_TOKEN = re.compile(r"^(a\+?)\(([^)]+)\)$")


def two_pair_modes(k1=(1, 0, 0), k2=(0, 1, 1)) -> dict:
    """Labels -> integer momentum vectors for {0, +-k1, +-k2} (p = 2 pi n / L)."""
    k1, k2 = np.asarray(k1, int), np.asarray(k2, int)
    return {"0": np.zeros(3, int), "k1": k1, "-k1": -k1, "k2": k2, "-k2": -k2}


def poisson_tail(mean: float, n: int) -> float:
    """P(X > n) for X ~ Poisson(mean)."""
    if mean == 0:
        return 0.0
    term = math.exp(-mean)
    cdf = term
    for k in range(1, n + 1):
        term *= mean / k
        cdf += term
    # summing the tail directly avoids 1 - cdf cancellation
    tail, term = 0.0, term * mean / (n + 1)
    k = n + 1
    while term > 1e-300 and k < n + 400:
        tail += term
        k += 1
        term *= mean / k
    return tail


def condensate_cutoff(N0: float, n_min: int, rel: float = 1e-15) -> int:
    n = n_min
    while poisson_tail(N0, n) > rel:
        n += 1
    return n


@dataclass(eq=False)
class TruncatedFockState:
    """Dense amplitudes over occupations (n_0, n_k1, n_-k1, ...).

    Axis i of ``amplitudes`` is mode ``labels[i]``; axis 0 is the
    condensate with its own cutoff ``n0_max`` (the coherent factor has a
    Poisson occupation profile and needs more room than the pairs).
    """

    labels: list
    vectors: np.ndarray
    c: dict
    sqrtN0: float
    n_max: int
    n0_max: int
    amplitudes: np.ndarray
    tail: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def axis(self, label) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise DomainError(f"mode {label!r} is not in the mode set {self.labels}") from None

    def analytic_norm2(self) -> float:
        return math.exp(self.sqrtN0 ** 2) * math.prod(1.0 / (1.0 - v * v) for v in self.c.values())


def _apply(tensor, axis, create: bool):
    """a+ or a on one axis of an occupation tensor (top level falls off)."""
    t = np.moveaxis(tensor, axis, 0)
    out = np.zeros_like(t)
    n = t.shape[0]
    if create:
        out[1:] = t[:-1] * np.sqrt(np.arange(1, n)).reshape(-1, *[1] * (t.ndim - 1))
    else:
        out[:-1] = t[1:] * np.sqrt(np.arange(1, n)).reshape(-1, *[1] * (t.ndim - 1))
    return np.moveaxis(out, 0, axis)


def _exp_series(tensor, op):
    """exp(op) applied term by term; op is nilpotent on the truncated space."""
    total = tensor.copy()
    term = tensor
    k = 1
    while True:
        term = op(term) / k
        if not np.any(term):
            return total
        total = total + term
        k += 1


def build_state(modes: dict, c: dict, sqrtN0: float, n_max: int = 12,
                n0_max: int | None = None) -> TruncatedFockState:
    """exp(sum_k c_k a+_k a+_-k + sqrt(N0) a+_0)|0> on the truncated space.

    Parameters
    ----------
    modes : dict
        Label -> integer vector; must contain "0" and be closed under p -> -p.
    c : dict
        Pair amplitude for each positive label (``c["k1"]`` couples k1 and -k1).
    sqrtN0 : float
        Coherent amplitude of the condensate.
    n_max : int
        Occupation cutoff of every nonzero mode.
    n0_max : int, optional
        Condensate cutoff; by default large enough that the dropped Poisson
        weight is below 1e-15.
    """
    labels = [str(k) for k in modes]
    if labels[0] != "0":
        raise ConfigError("the first mode must be the condensate '0'")
    vecs = np.array([np.asarray(modes[k]) for k in modes])
    for i, v in enumerate(vecs[1:], 1):
        if not any(np.array_equal(-v, w) for w in vecs):
            raise ConfigError(f"mode set not closed under p -> -p: {labels[i]}")
    for k, val in c.items():
        if abs(val) >= 1:
            raise DomainError(f"|c_{k}| must be < 1")
        if k not in labels or "-" + k not in labels:
            raise DomainError(f"pair {k} needs modes {k} and -{k}")
    N0 = sqrtN0 ** 2
    n0 = condensate_cutoff(N0, n_max) if n0_max is None else int(n0_max)
    shape = (n0 + 1,) + (n_max + 1,) * (len(labels) - 1)
    if math.prod(shape) > MAX_TENSOR_ENTRIES:
        raise DomainError(f"occupation tensor {shape} exceeds the memory budget "
                          f"({MAX_TENSOR_ENTRIES} entries)")
    # the factors act on disjoint modes: expand each one, then take the tensor product
    psi = np.zeros(n0 + 1)
    psi[0] = 1.0
    if sqrtN0:
        psi = _exp_series(psi, lambda t: sqrtN0 * _apply(t, 0, True))
    order = ["0"]
    for lab in labels[1:]:
        if lab in order:
            continue
        if lab in c:
            pair = np.zeros((n_max + 1, n_max + 1))
            pair[0, 0] = 1.0
            val = c[lab]
            pair = _exp_series(pair, lambda t, val=val: val * _apply(_apply(t, 1, True), 0, True))
            psi = np.multiply.outer(psi, pair)
            order += [lab, "-" + lab]
        else:
            vac = np.zeros(n_max + 1)
            vac[0] = 1.0
            psi = np.multiply.outer(psi, vac)
            order.append(lab)
    psi = np.ascontiguousarray(np.transpose(psi, [order.index(lab) for lab in labels]))
    tail = sum(abs(v) ** (2 * (n_max + 1)) for v in c.values()) + poisson_tail(N0, n0)
    return TruncatedFockState(labels=labels, vectors=vecs, c=dict(c), sqrtN0=float(sqrtN0),
                              n_max=n_max, n0_max=n0, amplitudes=psi, tail=tail)


def parse_operator(text: str) -> list:
    """'a+(k1) a(-k1)' -> [('+', 'k1'), ('-', '-k1')], leftmost first."""
    ops = []
    for tok in text.split():
        m = _TOKEN.match(tok)
        if not m:
            raise DomainError(f"cannot parse operator token {tok!r}")
        ops.append(("+" if m.group(1) == "a+" else "-", m.group(2)))
    return ops


def apply_string(state: TruncatedFockState, ops, vec=None):
    """Apply a product of ladder operators (rightmost first).

    Each axis is zero-padded by the number of creation operators acting on
    it, so nothing is lost at the occupation cutoff.
    """
    vec = state.amplitudes if vec is None else vec
    pad = [0] * vec.ndim
    for kind, label in ops:
        if kind == "+":
            pad[state.axis(label)] += 1
    if any(pad):
        vec = np.pad(vec, [(0, k) for k in pad])
    for kind, label in reversed(ops):
        vec = _apply(vec, state.axis(label), kind == "+")
    return vec


def _lower(state, labels):
    """a_x1 a_x2 ... Psi; annihilators commute, so results are cached by multiset."""
    key = ("lower",) + tuple(sorted(state.axis(lab) for lab in labels))
    if key not in state._cache:
        vec = state.amplitudes
        for ax in key[1:]:
            vec = _apply(vec, ax, False)
        state._cache[key] = vec
    return state._cache[key]


def expect_moment(state: TruncatedFockState, operator) -> float:
    """<Psi, O Psi> / <Psi, Psi> for a product of ladder operators.

    Normal-ordered strings a+_x1 ... a_y1 ... are evaluated as the overlap
    <a_x1 ... Psi, a_y1 ... Psi>; anything else is applied directly on a
    padded tensor.
    """
    ops = parse_operator(operator) if isinstance(operator, str) else list(operator)
    for _, label in ops:
        state.axis(label)
    kinds = "".join(k for k, _ in ops)
    if "-+" not in kinds:
        n_c = kinds.count("+")
        left = _lower(state, [lab for _, lab in ops[:n_c]])
        right = _lower(state, [lab for _, lab in reversed(ops[n_c:])])
        return float(np.vdot(left, right).real) / state.norm2
    out = apply_string(state, ops)
    psi = state.amplitudes
    sl = tuple(slice(0, n) for n in psi.shape)
    return float(np.vdot(psi, out[sl]).real) / state.norm2


def _phi(state, r, s):
    return _lower(state, [state.labels[r], state.labels[s]])


def hamiltonian_expectation(state: TruncatedFockState, L: float, vhat) -> dict:
    """Brute-force <H> over every momentum-conserving term inside the mode set.

    H = sum_p p^2 a+_p a_p + (1/2|Lambda|) sum V_hat(p - r) a+_p a+_q a_r a_s
    with p + q = r + s. Interaction terms are grouped by how many of the four
    operators act on nonzero momenta (E0: all four on the condensate).
    """
    vol = L ** 3
    kvec = 2 * math.pi / L * state.vectors
    nm = len(state.labels)
    norm2 = state.norm2
    psi = state.amplitudes
    kinetic = 0.0
    for i in range(1, nm):
        n = np.arange(psi.shape[i]).reshape([-1 if j == i else 1 for j in range(psi.ndim)])
        kinetic += float(kvec[i] @ kvec[i]) * float(np.sum(psi * psi * n)) / norm2
    chans = {0: 0.0, 1: 0.0, 2: 0.0, 3: 0.0, 4: 0.0}
    gram = {}
    iv = state.vectors
    for P in range(nm):
        for Q in range(nm):
            for r in range(nm):
                s_vec = iv[P] + iv[Q] - iv[r]
                for s in range(nm):
                    if not np.array_equal(iv[s], s_vec):
                        continue
                    key = ((min(P, Q), max(P, Q)), (min(r, s), max(r, s)))
                    if key not in gram:
                        gram[key] = float(np.vdot(_phi(state, P, Q), _phi(state, r, s)).real) / norm2
                    u = kvec[P] - kvec[r]
                    nonzero = sum(1 for m in (P, Q, r, s) if m != 0)
                    chans[nonzero] += vhat(np.linalg.norm(u)) * gram[key] / (2 * vol)
    total = kinetic + sum(chans.values())
    return {"total": total, "kinetic": kinetic, "E0": chans[0], "E1": chans[1],
            "E2": chans[2], "E3": chans[3], "E4": chans[4], "tail": state.tail}


# --------------------------------------------------------------------------
# analytic formulas and the oracle suite
# --------------------------------------------------------------------------

def _formulas(c, N0):
    d = 1 - c * c
    return {
        "pair_vacuum_norm": 1 / d,
        "state_norm": None,  # filled per state
        "condensate_number": N0,
        "condensate_quartic": N0 ** 2,
        "occupation": c * c / d,
        "pair_amplitude": c / d,
        "same_mode_pair_transfer": 0.0,
        "pair_quartic": c * c * (1 + c * c) / d ** 2,
        "same_mode_quartic": 2 * c ** 4 / d ** 2,
    }


FORMULAS = ("pair_vacuum_norm", "state_norm", "condensate_number", "condensate_quartic",
            "occupation", "pair_amplitude", "same_mode_pair_transfer", "pair_quartic",
            "same_mode_quartic")


@dataclass
class OracleCheck:
    formula: str
    brute: float
    analytic: float
    tail: float
    tol: float
    passed: bool


@dataclass
class OracleReport:
    checks: list
    n_draws: int

    @property
    def passed(self) -> bool:
        return all(ch.passed for ch in self.checks)

    def failures(self) -> list:
        return [ch.formula for ch in self.checks if not ch.passed]

    def worst(self) -> dict:
        """Per formula, the check with the largest relative error."""
        out = {}
        for ch in self.checks:
            err = abs(ch.brute - ch.analytic) / max(abs(ch.analytic), 1.0)
            if ch.formula not in out or err > out[ch.formula][0]:
                out[ch.formula] = (err, ch)
        return {k: v[1] for k, v in out.items()}

    def to_records(self) -> list:
        return [{"formula": ch.formula, "brute_force": ch.brute, "analytic": ch.analytic,
                 "tail_bound": ch.tail, "tolerance": ch.tol, "pass": ch.passed}
                for ch in self.worst().values()]


def _check(name, brute, analytic, tail, tol_floor, rel=True):
    tol = max(tol_floor, 10 * tail)
    scale = max(abs(analytic), 1.0) if rel else 1.0
    return OracleCheck(name, float(brute), float(analytic), tail, tol,
                       bool(abs(brute - analytic) <= tol * scale))


def check_moments(state: TruncatedFockState, tol: float = 1e-8, fault: str | None = None) -> list:
    """Compare brute-force moments with the closed forms for one state.

    ``fault`` flips the sign of one analytic formula (for testing the
    failure path).
    """
    out = []
    N0 = state.sqrtN0 ** 2
    sign = {name: (-1.0 if name == fault else 1.0) for name in FORMULAS}
    extra_sign = {name: (-1.0 if name == fault else 1.0)
                  for name in ("ab_rule", "cross_pair", "number", "variance", "hermiticity")}
    norm_exact = state.analytic_norm2()
    out.append(_check("state_norm", state.norm2 / norm_exact, sign["state_norm"], state.tail, tol))
    out.append(_check("condensate_number", expect_moment(state, "a+(0) a(0)"),
                      sign["condensate_number"] * N0, state.tail, tol))
    out.append(_check("condensate_quartic", expect_moment(state, "a+(0) a+(0) a(0) a(0)"),
                      sign["condensate_quartic"] * N0 ** 2, state.tail, tol))
    for k, cv in state.c.items():
        f = _formulas(cv, N0)
        m, mm = k, "-" + k
        single = build_state({"0": [0, 0, 0], m: state.vectors[state.axis(m)],
                              mm: state.vectors[state.axis(mm)]}, {k: cv}, 0.0, state.n_max)
        out.append(_check("pair_vacuum_norm", single.norm2,
                          sign["pair_vacuum_norm"] * f["pair_vacuum_norm"],
                          abs(cv) ** (2 * (state.n_max + 1)), tol))
        moments = {
            "occupation": f"a+({m}) a({m})",
            "pair_amplitude": f"a({m}) a({mm})",
            "same_mode_pair_transfer": f"a+({m}) a+({m}) a({mm}) a({mm})",
            "pair_quartic": f"a+({m}) a+({mm}) a({m}) a({mm})",
            "same_mode_quartic": f"a+({m}) a+({m}) a({m}) a({m})",
        }
        for name, op in moments.items():
            out.append(_check(name, expect_moment(state, op), sign[name] * f[name], state.tail, tol))
        # conjugate of the pair amplitude
        out.append(_check("pair_amplitude", expect_moment(state, f"a+({m}) a+({mm})"),
                          sign["pair_amplitude"] * f["pair_amplitude"], state.tail, tol))
        # (AB): an a_m flanked by operators free of a+_m and a_-m
        for op in (f"a({m})", f"a+(0) a({m}) a(0)", f"a+({mm}) a({m}) a({m})",
                   f"a({m}) a+({mm}) a({mm}) a({m})", f"a+(0) a+({mm}) a({m})"):
            out.append(_check("ab_rule", expect_moment(state, op), 0.0 * extra_sign["ab_rule"],
                              state.tail, tol, rel=False))
    keys = list(state.c)
    for i, k1 in enumerate(keys):
        for k2 in keys[i + 1:]:
            c1, c2 = state.c[k1], state.c[k2]
            out.append(_check("cross_pair",
                              expect_moment(state, f"a+({k1}) a+(-{k1}) a({k2}) a(-{k2})"),
                              extra_sign["cross_pair"] * c1 * c2 / ((1 - c1 * c1) * (1 - c2 * c2)),
                              state.tail, tol))
    n_total = sum(expect_moment(state, f"a+({lab}) a({lab})") for lab in state.labels)
    n_exact = N0 + 2 * sum(v * v / (1 - v * v) for v in state.c.values())
    out.append(_check("number", n_total, extra_sign["number"] * n_exact, state.tail, tol))
    # N^2 = sum_xy a+_x a+_y a_y a_x + N
    n2 = n_total + sum(expect_moment(state, f"a+({x}) a+({y}) a({y}) a({x})")
                       for x in state.labels for y in state.labels)
    var = n2 - n_total ** 2
    any_c = any(v != 0 for v in state.c.values())
    ok = (var > 0) if any_c else True
    out.append(OracleCheck("variance", var, 0.0, state.tail, 0.0,
                           bool(ok if extra_sign["variance"] > 0 else not ok)))
    # <O + O^dagger> = 2 Re <O>
    for k in state.c:
        o = expect_moment(state, f"a({k}) a(-{k})")
        od = expect_moment(state, f"a+(-{k}) a+({k})")
        out.append(_check("hermiticity", o + od, extra_sign["hermiticity"] * 2 * o,
                          state.tail, tol))
    return out


def analytic_energy(state: TruncatedFockState, L: float, potential) -> dict:
    """Closed-form energy of the same state from the variational module."""
    from .variational import ModeSum, energy_full, state_from_c

    labels = state.labels[1:]
    vecs = 2 * math.pi / L * state.vectors[1:]
    cvals = np.array([state.c[lab.lstrip("-")] for lab in labels])
    st = state_from_c(ModeSum(vecs, L), cvals, state.sqrtN0 ** 2)
    br = energy_full(st, potential)
    return {"total": br.E_total, **br.cases, "breakdown": br}


def check_hamiltonian(state: TruncatedFockState, L: float, potential, tol: float = 1e-6,
                      fault: str | None = None) -> list:
    brute = hamiltonian_expectation(state, L, potential.vhat)
    ana = analytic_energy(state, L, potential)
    sign = -1.0 if fault == "hamiltonian" else 1.0
    out = [_check("hamiltonian", brute["total"], sign * ana["total"], state.tail, tol)]
    for ch in ("kinetic", "E0", "E2", "E4"):
        out.append(_check(f"channel_{ch}", brute[ch], ana[ch], state.tail, tol))
    for ch in ("E1", "E3"):
        out.append(_check(f"channel_{ch}", brute[ch], 0.0, state.tail, tol, rel=False))
    return out


def run_oracle_suite(n_draws: int = 100, seed: int = 0, c_max: float = 0.3,
                     sqrtN0_max: float = 2.0, n_max: int = 12, L: float = 2 * math.pi,
                     potential=None, n_hamiltonian: int = 5, tol: float = 1e-8,
                     h_tol: float = 1e-6, fault: str | None = None,
                     zero_c: bool = False) -> OracleReport:
    """Random-draw oracle over the mode set {0, +-k1, +-k2}.

    Every draw checks the moment formulas; the first ``n_hamiltonian``
    draws also compare the full <H> and its channels.
    """
    from .potential import PotentialSpec

    if potential is None:
        potential = PotentialSpec("gaussian", 1.0, {"sigma": 1.0})
    rng = np.random.default_rng(seed)
    modes = two_pair_modes()
    checks = []
    for i in range(n_draws):
        if zero_c:
            c = {"k1": 0.0, "k2": 0.0}
        else:
            c = {"k1": float(rng.uniform(-c_max, c_max)), "k2": float(rng.uniform(-c_max, c_max))}
        sq = float(rng.uniform(0.0, sqrtN0_max))
        st = build_state(modes, c, sq, n_max)
        checks.extend(check_moments(st, tol, fault))
        if i < n_hamiltonian:
            checks.extend(check_hamiltonian(st, L, potential, h_tol, fault))
    return OracleReport(checks=checks, n_draws=n_draws)


def assert_oracle(report: OracleReport):
    if not report.passed:
        raise VerificationError("oracle mismatch in: " + ", ".join(sorted(set(report.failures()))))
