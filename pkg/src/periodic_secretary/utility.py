"""Set utility functions over observation samples.

Three kinds are provided: the GP entropy criterion (joint differential
entropy of the selected locations, computed by the chain rule), the mutual
information criterion (offline use only; needs a model of the whole
observation space), and a modular weighted sum. All kinds share the
convention f(empty set) = 0 so marginal gains telescope cleanly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .gp import (
    FactorizationError,
    GPConditioner,
    GPHyperparams,
    se_gram,
)
from .stream import Observation

__all__ = [
    "UtilityFunction",
    "UtilityEvaluator",
    "SubmodularityReport",
    "Counterexample",
    "entropy_criterion",
    "mutual_information_criterion",
    "marginal_gain",
    "check_submodular_monotone",
    "DEFAULT_MI_CAP",
]

DEFAULT_MI_CAP = 2000

SetFunction = Callable[[Sequence[Observation]], float]


def _features_of(observations: Sequence[Observation]) -> np.ndarray:
    if len(observations) == 0:
        return np.empty((0, 0))
    return np.vstack([o.features for o in observations])


def entropy_criterion(points: np.ndarray, hyper: GPHyperparams) -> float:
    """Joint differential entropy of a set of locations under the GP model.

    Computed by the chain rule: each point contributes its conditional
    entropy given the points before it, so the result is order-independent
    up to floating-point roundoff. The empty set evaluates to 0.
    """
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        return 0.0
    points = np.atleast_2d(points)
    cond = GPConditioner(hyper)
    total = 0.0
    for x in points:
        total += cond.entropy(x)
        cond.extend(x)
    return total


def _joint_entropy_det(points: np.ndarray, hyper: GPHyperparams) -> float:
    """Joint entropy via the log-determinant of the noisy Gram matrix."""
    m = points.shape[0]
    if m == 0:
        return 0.0
    sign, logdet = np.linalg.slogdet(se_gram(points, hyper))
    if sign <= 0:
        raise FactorizationError(f"Gram matrix of {m} points has non-positive determinant")
    return 0.5 * (m * math.log(2 * math.pi * math.e) + logdet)


def mutual_information_criterion(
    A: np.ndarray,
    V: np.ndarray,
    hyper: GPHyperparams,
    cap: int = DEFAULT_MI_CAP,
) -> float:
    """Mutual information between the sampled locations A and the rest of V.

    Requires A to be a literal subset of the rows of V. The O(|V|^3)
    determinant evaluation is refused above ``cap`` points; this criterion is
    for offline evaluation, not streaming selection.
    """
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if V.shape[0] > cap:
        raise ValueError(
            f"observation space has {V.shape[0]} points, above the configured cap {cap}"
        )
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    A = np.atleast_2d(A)
    rows = {np.ascontiguousarray(r).tobytes(): i for i, r in enumerate(V)}
    members: list[int] = []
    for r in A:
        key = np.ascontiguousarray(r).tobytes()
        if key not in rows:
            raise ValueError("sample set is not a subset of the observation space")
        members.append(rows[key])
    member_set = set(members)
    rest = V[[i for i in range(V.shape[0]) if i not in member_set]]
    return (
        _joint_entropy_det(rest, hyper)
        + _joint_entropy_det(A, hyper)
        - _joint_entropy_det(V, hyper)
    )


class UtilityEvaluator:
    """Stateful marginal-gain accumulator for one selector run.

    Tracks the running utility value f(A) and answers gain queries against
    the current set. ``accept`` is irrevocable: re-adding an index raises.
    """

    def __init__(self) -> None:
        self._value = 0.0
        self._indices: set[int] = set()

    @property
    def value(self) -> float:
        return self._value

    def __len__(self) -> int:
        return len(self._indices)

    def gain(self, obs: Observation) -> float:
        raise NotImplementedError

    def gains(self, observations: Sequence[Observation]) -> np.ndarray:
        return np.array([self.gain(o) for o in observations])

    def accept(self, obs: Observation) -> float:
        if obs.index in self._indices:
            raise ValueError(f"observation {obs.index} is already in the sample set")
        self._value += self.gain(obs)
        self._indices.add(obs.index)
        self._register(obs)
        return self._value

    def _register(self, obs: Observation) -> None:
        raise NotImplementedError


class _EntropyEvaluator(UtilityEvaluator):
    def __init__(self, hyper: GPHyperparams):
        super().__init__()
        self._cond = GPConditioner(hyper)

    def gain(self, obs: Observation) -> float:
        return self._cond.entropy(obs.features)

    def gains(self, observations: Sequence[Observation]) -> np.ndarray:
        if len(observations) == 0:
            return np.empty(0)
        return self._cond.entropies(_features_of(observations))

    def _register(self, obs: Observation) -> None:
        self._cond.extend(obs.features)


class _ModularEvaluator(UtilityEvaluator):
    def __init__(self, weights: np.ndarray):
        super().__init__()
        self._w = weights

    def _weight(self, obs: Observation) -> float:
        if obs.index >= self._w.shape[0]:
            raise ValueError(f"no weight for observation index {obs.index}")
        return float(self._w[obs.index])

    def gain(self, obs: Observation) -> float:
        return self._weight(obs)

    def gains(self, observations: Sequence[Observation]) -> np.ndarray:
        return np.array([self._weight(o) for o in observations])

    def _register(self, obs: Observation) -> None:
        pass


class _RecomputeEvaluator(UtilityEvaluator):
    """Fallback evaluator: gains by evaluating f twice. Used for MI."""

    def __init__(self, fn: SetFunction):
        super().__init__()
        self._fn = fn
        self._members: list[Observation] = []

    def gain(self, obs: Observation) -> float:
        return self._fn([*self._members, obs]) - self._value

    def _register(self, obs: Observation) -> None:
        self._members.append(obs)
        self._value = self._fn(self._members)  # keep exact, not accumulated


@dataclass(frozen=True)
class UtilityFunction:
    """A monotone set utility over observations, evaluated by kind.

    Use the factories: ``UtilityFunction.entropy(hyper)``,
    ``UtilityFunction.mutual_information(hyper, full_space)``,
    ``UtilityFunction.modular(weights)``.
    """

    kind: str
    hyper: GPHyperparams | None = None
    full_space: np.ndarray | None = None
    weights: np.ndarray | None = None
    mi_cap: int = DEFAULT_MI_CAP

    def __post_init__(self) -> None:
        if self.kind not in ("entropy", "mutual_information", "modular_sum"):
            raise ValueError(f"unknown utility kind {self.kind!r}")
        if self.kind in ("entropy", "mutual_information") and self.hyper is None:
            raise ValueError(f"{self.kind} utility requires GP hyperparameters")
        if self.kind == "mutual_information" and self.full_space is None:
            raise ValueError("mutual_information utility requires the full observation space")
        if self.kind == "modular_sum":
            if self.weights is None:
                raise ValueError("modular_sum utility requires per-index weights")
            w = np.asarray(self.weights, dtype=float).ravel()
            w.flags.writeable = False
            object.__setattr__(self, "weights", w)
        if self.full_space is not None:
            fs = np.atleast_2d(np.asarray(self.full_space, dtype=float))
            fs.flags.writeable = False
            object.__setattr__(self, "full_space", fs)

    @classmethod
    def entropy(cls, hyper: GPHyperparams) -> "UtilityFunction":
        return cls(kind="entropy", hyper=hyper)

    @classmethod
    def mutual_information(
        cls, hyper: GPHyperparams, full_space: np.ndarray, cap: int = DEFAULT_MI_CAP
    ) -> "UtilityFunction":
        return cls(kind="mutual_information", hyper=hyper, full_space=full_space, mi_cap=cap)

    @classmethod
    def modular(cls, weights: np.ndarray) -> "UtilityFunction":
        return cls(kind="modular_sum", weights=weights)

    def value(self, observations: Sequence[Observation]) -> float:
        """f(A) for an explicit sample set."""
        if self.kind == "entropy":
            return entropy_criterion(_features_of(observations), self.hyper)
        if self.kind == "mutual_information":
            return mutual_information_criterion(
                _features_of(observations), self.full_space, self.hyper, cap=self.mi_cap
            )
        return float(sum(self.weights[o.index] for o in observations))

    __call__ = value

    def evaluator(self) -> UtilityEvaluator:
        """Fresh stateful evaluator; one per selector run."""
        if self.kind == "entropy":
            return _EntropyEvaluator(self.hyper)
        if self.kind == "modular_sum":
            return _ModularEvaluator(self.weights)
        return _RecomputeEvaluator(self.value)


def marginal_gain(f: UtilityFunction, A: Sequence[Observation], x: Observation) -> float:
    """f(A + {x}) - f(A); rejects re-adding an index already in A."""
    if any(o.index == x.index for o in A):
        raise ValueError(f"observation {x.index} is already in the sample set")
    return f.value([*A, x]) - f.value(A)


@dataclass(frozen=True)
class Counterexample:
    """Witness of a diminishing-returns or monotonicity violation.

    Index tuples refer to observation indices; ``element`` is the added
    observation for a submodularity violation, None for monotonicity.
    """

    property_violated: str
    a_indices: tuple[int, ...]
    b_indices: tuple[int, ...]
    element: int | None = None


@dataclass(frozen=True)
class SubmodularityReport:
    submodular: bool
    monotone: bool
    witness: Counterexample | None


def check_submodular_monotone(
    f: "UtilityFunction | SetFunction",
    ground: Sequence[Observation],
    tol: float = 1e-8,
) -> SubmodularityReport:
    """Exhaustively test diminishing returns and monotonicity on a small ground set.

    Checks f(A + e) - f(A) >= f(B + e) - f(B) for every A subset of B and
    e outside B, and f(A) <= f(B) for every nested pair, both to ``tol``.
    The first violation found (in a fixed bitmask enumeration order) is
    returned as a witness; ground sets above 12 elements are refused.
    """
    n = len(ground)
    if n > 12:
        raise ValueError(f"ground set of {n} elements is too large for exhaustive checking (max 12)")
    fval: SetFunction = f.value if isinstance(f, UtilityFunction) else f

    vals = np.empty(1 << n)
    for mask in range(1 << n):
        subset = [ground[i] for i in range(n) if mask >> i & 1]
        vals[mask] = fval(subset)

    def indices(mask: int) -> tuple[int, ...]:
        return tuple(ground[i].index for i in range(n) if mask >> i & 1)

    submodular = True
    monotone = True
    sub_witness: Counterexample | None = None
    mono_witness: Counterexample | None = None
    for B in range(1 << n):
        outside = [e for e in range(n) if not (B >> e & 1)]
        A = B
        while True:
            if monotone and vals[A] > vals[B] + tol:
                monotone = False
                mono_witness = Counterexample("monotonicity", indices(A), indices(B))
            if submodular and A != B:
                for e in outside:
                    bit = 1 << e
                    if vals[A | bit] - vals[A] < vals[B | bit] - vals[B] - tol:
                        submodular = False
                        sub_witness = Counterexample(
                            "submodularity", indices(A), indices(B), ground[e].index
                        )
                        break
            if A == 0 or not (submodular or monotone):
                break
            A = (A - 1) & B
        if not (submodular or monotone):
            break
    return SubmodularityReport(
        submodular=submodular,
        monotone=monotone,
        witness=sub_witness if sub_witness is not None else mono_witness,
    )
