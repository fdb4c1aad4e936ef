"""Shared bounds configuration for checkers and the CLI."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import ValidationError


@dataclass(frozen=True)
class RunConfig:
    """Search bounds for every checker, plus output settings.

    Verdict semantics depend on these: a fail is definitive, a pass holds
    only relative to the recorded bounds.
    """

    powers: tuple[int, ...] = (1, 2)
    n_factors: int = 3
    gen_cap: int = 3
    clone_coord_budget: int = 64
    clone_size_budget: int = 100_000
    cong_size_guard: int = 12
    sys_len: int = 3
    closure_budget: int = 5000
    relation_gen_cap: int = 2
    relation_exhaustive_bits: int = 12
    relation_list_cap: int = 64
    relation_space_cap: int = 1296
    threads: int = 1
    out: str | None = None
    format: str = "json"

    def __post_init__(self):
        positives = {
            "n_factors": self.n_factors,
            "gen_cap": self.gen_cap,
            "clone_coord_budget": self.clone_coord_budget,
            "clone_size_budget": self.clone_size_budget,
            "cong_size_guard": self.cong_size_guard,
            "sys_len": self.sys_len,
            "closure_budget": self.closure_budget,
            "relation_gen_cap": self.relation_gen_cap,
            "relation_exhaustive_bits": self.relation_exhaustive_bits,
            "relation_list_cap": self.relation_list_cap,
            "relation_space_cap": self.relation_space_cap,
            "threads": self.threads,
        }
        for name, value in positives.items():
            if value < 1:
                raise ValidationError(f"bound {name} must be positive, got {value}")
        if not self.powers or any(p < 1 for p in self.powers):
            raise ValidationError("powers must be a nonempty list of positive integers")
        if self.format not in ("json", "text"):
            raise ValidationError(f"unknown format {self.format!r}")

    def with_(self, **kwargs) -> "RunConfig":
        return replace(self, **kwargs)
