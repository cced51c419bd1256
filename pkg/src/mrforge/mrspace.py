"""Encodings of the MR search space.

A :class:`SingleMR` is one perturbation function with a repetition count, a
:class:`CmbMR` is an ordered AND-composition of single MRs and an
:class:`MRGroup` is the set of CmbMRs that forms one individual of the
search. All three are immutable values.

"""

import hashlib
import json
from dataclasses import dataclass, field
from ._compat import StrEnum
from functools import cached_property
from typing import Iterable, Sequence

from . import perturb
from .config import SearchConfig
from .errors import (
    CompositionFailed,
    EmptyResultError,
    InsufficientCatalog,
    InvalidGroup,
)
from .perturb import ContextType, PerturbationDescriptor
from .rng import SeededRng


class Bond(StrEnum):
    AND = "AND"
    OR = "OR"


@dataclass(frozen=True)
class SingleMR:
    perturbation_id: str
    intensity: int
    mr_index: int = field(default=-1, compare=False)

    @property
    def key(self) -> str:
        return f"{self.perturbation_id}:{self.intensity}"

    def to_dict(self) -> dict:
        return {
            "perturbation_id": self.perturbation_id,
            "intensity": self.intensity,
        }


@dataclass(frozen=True)
class CmbMR:
    parts: tuple[SingleMR, ...]

    def __post_init__(self):
        if not self.parts:
            raise InvalidGroup("a CmbMR needs at least one part")

    def __len__(self):
        return len(self.parts)

    @cached_property
    def id(self) -> str:
        return "&".join(p.key for p in self.parts)

    @property
    def perturbation_ids(self) -> tuple[str, ...]:
        return tuple(p.perturbation_id for p in self.parts)

    @property
    def context_types(self) -> set[ContextType]:
        return {
            perturb.descriptor(pid).context_type
            for pid in self.perturbation_ids
        }

    @property
    def sort_key(self) -> tuple:
        return (
            len(self.parts),
            self.perturbation_ids,
            tuple(p.intensity for p in self.parts),
        )

    def to_dict(self) -> dict:
        return {"parts": [p.to_dict() for p in self.parts]}


@dataclass(frozen=True)
class MRGroup:
    members: tuple[CmbMR, ...]

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    @cached_property
    def id(self) -> str:
        """Content hash of the canonical (member-sorted) form."""
        members = sorted(self.members, key=lambda m: m.sort_key)
        payload = json.dumps(
            [m.to_dict() for m in members], separators=(",", ":")
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def to_dict(self) -> dict:
        return {"id": self.id, "members": [m.to_dict() for m in self.members]}

    @classmethod
    def from_dict(
        cls, data: dict, set_mr: Sequence[SingleMR] = ()
    ) -> "MRGroup":
        index = {mr.key: mr for mr in set_mr}
        members = []
        for member in data["members"]:
            parts = []
            for part in member["parts"]:
                mr = SingleMR(part["perturbation_id"], int(part["intensity"]))
                parts.append(index.get(mr.key, mr))
            members.append(CmbMR(tuple(parts)))
        group = cls(tuple(members))
        if "id" in data and data["id"] != group.id:
            raise InvalidGroup(f"group id mismatch: {data['id']}")
        return group


def build_set_mr(
    descriptors: Iterable[PerturbationDescriptor], intensities: Iterable[int]
) -> list[SingleMR]:
    """Expand perturbation functions by repetition count into Set_MR."""
    intensities = list(intensities)
    set_mr = []
    for desc in descriptors:
        for intensity in intensities:
            if intensity > desc.max_intensity:
                continue
            set_mr.append(SingleMR(desc.id, intensity, len(set_mr)))
    return set_mr


def validate_group(group: MRGroup, config: SearchConfig):
    if not config.group_min <= len(group) <= config.group_max:
        raise InvalidGroup(
            f"group has {len(group)} members, expected "
            f"{config.group_min}..{config.group_max}"
        )
    for member in group:
        if len(member) > config.max_combo_depth:
            raise InvalidGroup(
                f"{member.id} exceeds depth {config.max_combo_depth}"
            )


def link(
    mrs: Sequence[SingleMR], bonds: Sequence[Bond], max_depth: int
) -> list[CmbMR]:
    """Join neighbouring MRs: AND merges, OR starts a new CmbMR.

    An AND that would exceed ``max_depth`` acts as OR.

    """
    if not mrs:
        return []
    if len(bonds) != len(mrs) - 1:
        raise ValueError("need exactly one bond between neighbouring MRs")
    members, current = [], [mrs[0]]
    for bond, mr in zip(bonds, mrs[1:]):
        if bond == Bond.AND and len(current) < max_depth:
            current.append(mr)
        else:
            members.append(CmbMR(tuple(current)))
            current = [mr]
    members.append(CmbMR(tuple(current)))
    return members


def repair(
    members: Sequence[CmbMR],
    set_mr: Sequence[SingleMR],
    config: SearchConfig,
    rng: SeededRng,
) -> list[CmbMR]:
    """Pad with fresh singleton CmbMRs or trim to a uniform subset."""
    members = list(members)
    if len(members) < config.group_min:
        used = {p for m in members for p in m.parts}
        pool = [mr for mr in set_mr if mr not in used]
        need = config.group_min - len(members)
        extra = rng.sample(pool, min(need, len(pool)))
        members += [CmbMR((mr,)) for mr in extra]
        while len(members) < config.group_min:
            members.append(CmbMR((rng.choice(set_mr),)))
    if len(members) > config.group_max:
        members = rng.subset(members, config.group_max)
    return members


def random_cmb_mr(
    set_mr: Sequence[SingleMR], config: SearchConfig, rng: SeededRng
) -> CmbMR:
    depth = rng.integers(1, min(config.max_combo_depth, len(set_mr)) + 1)
    return CmbMR(tuple(rng.sample(set_mr, depth)))


def comb_gen(
    set_mr: Sequence[SingleMR], config: SearchConfig, rng: SeededRng
) -> MRGroup:
    """Binary-permutation based generation of a random MR group."""
    if len(set_mr) < config.group_min:
        raise InsufficientCatalog(
            f"Set_MR has {len(set_mr)} MRs, need at least {config.group_min}"
        )
    selected = [
        mr for mr in set_mr if rng.bernoulli(config.selection_probability)
    ]
    ordered = rng.shuffled(selected)
    bonds = [
        Bond.AND if rng.bernoulli(config.and_probability) else Bond.OR
        for _ in range(max(len(ordered) - 1, 0))
    ]
    members = link(ordered, bonds, config.max_combo_depth)
    return MRGroup(tuple(repair(members, set_mr, config, rng)))


def compose(cmb: CmbMR, text: str, rng: SeededRng) -> str:
    """Apply the parts of a CmbMR left to right."""
    for i, part in enumerate(cmb.parts):
        try:
            text = perturb.apply(
                part.perturbation_id, text, part.intensity, rng.fork("part", i)
            )
        except EmptyResultError as e:
            raise CompositionFailed(f"{cmb.id}: part {i} failed: {e}") from e
    return text


def canonicalize(group: MRGroup) -> MRGroup:
    return MRGroup(tuple(sorted(group.members, key=lambda m: m.sort_key)))
