"""Layered network topologies.

A network is a hub (the preparer) plus an ordered list of layers; each
layer is a participant subset that must end up sharing one key, with a
reference-state dimension of its own. Every participant's local Hilbert
space dimension is the product of the reference dimensions of the layers
containing them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import prod
from pathlib import Path


@dataclass(frozen=True)
class Layer:
    members: tuple[int, ...]
    ref_dim: int = 2

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(int(m) for m in self.members))
        object.__setattr__(self, "ref_dim", int(self.ref_dim))


@dataclass(frozen=True)
class Network:
    names: tuple[str, ...]
    hub: int
    layers: tuple[Layer, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(str(n) for n in self.names))
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "hub", int(self.hub))

    @property
    def n(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown participant {name!r}") from None

    def membership(self, participant: int) -> tuple[int, ...]:
        """Indices of the layers containing a participant, in declared order."""
        return tuple(i for i, layer in enumerate(self.layers) if participant in layer.members)

    def ell(self, participant: int) -> int:
        return len(self.membership(participant))

    def local_dim(self, participant: int) -> int:
        return prod(self.layers[i].ref_dim for i in self.membership(participant))

    def non_hub(self) -> tuple[int, ...]:
        return tuple(j for j in range(self.n) if j != self.hub)

    def layer_non_hub(self, layer_id: int) -> tuple[int, ...]:
        return tuple(sorted(set(self.layers[layer_id].members) - {self.hub}))


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


class InvalidNetworkError(ValueError):
    """Raised by operations that require a valid network."""


def validate(network: Network) -> ValidationResult:
    """Check every structural invariant; violations are returned, not raised."""
    bad: list[str] = []
    n = network.n
    if n == 0:
        bad.append("no participants")
    if len(set(network.names)) != n:
        bad.append("duplicate participant names")
    if not 0 <= network.hub < n:
        bad.append(f"hub index {network.hub} out of range")
        return ValidationResult(tuple(bad))
    if not network.layers:
        bad.append("no layers")
    for i, layer in enumerate(network.layers):
        if not layer.members:
            bad.append(f"layer {i}: empty layer")
            continue
        if len(set(layer.members)) != len(layer.members):
            bad.append(f"layer {i}: repeated member")
        if any(not 0 <= m < n for m in layer.members):
            bad.append(f"layer {i}: member index out of range")
            continue
        if network.hub not in layer.members:
            bad.append(f"layer {i}: hub not in layer")
        if set(layer.members) == {network.hub}:
            bad.append(f"layer {i}: no members besides the hub")
        if layer.ref_dim < 2:
            bad.append(f"layer {i}: ref_dim {layer.ref_dim} < 2")
    covered = {m for layer in network.layers for m in layer.members}
    for j in range(n):
        if j != network.hub and j not in covered:
            bad.append(f"participant {network.names[j]}: belongs to no layer")
    return ValidationResult(tuple(bad))


def require_valid(network: Network) -> None:
    result = validate(network)
    if not result.ok:
        raise InvalidNetworkError("; ".join(result.violations))


def local_dimensions(network: Network) -> dict[int, int]:
    """Local Hilbert-space dimension of every non-hub participant."""
    require_valid(network)
    return {j: network.local_dim(j) for j in network.non_hub()}


def from_dict(doc: dict) -> Network:
    """Build a network from its JSON document form."""
    try:
        names = tuple(str(p) for p in doc["participants"])
        hub = names.index(str(doc["hub"]))
        layers = tuple(
            Layer(
                members=tuple(names.index(str(m)) for m in spec["members"]),
                ref_dim=int(spec.get("ref_dim", 2)),
            )
            for spec in doc["layers"]
        )
    except KeyError as exc:
        raise InvalidNetworkError(f"network config missing field {exc}") from None
    except ValueError as exc:
        raise InvalidNetworkError(f"network config references unknown participant: {exc}") from None
    return Network(names=names, hub=hub, layers=layers)


def to_dict(network: Network) -> dict:
    return {
        "participants": list(network.names),
        "hub": network.names[network.hub],
        "layers": [
            {"members": [network.names[m] for m in layer.members], "ref_dim": layer.ref_dim}
            for layer in network.layers
        ],
    }


def load(path: str | Path) -> Network:
    with open(path, "r", encoding="utf-8") as fh:
        return from_dict(json.load(fh))
