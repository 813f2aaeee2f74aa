"""Property reports: pass/fail check lists returned by verification operations."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class PropertyCheck:
    """Outcome of a single named check.

    ``worst`` holds the worst violating (or closest-to-violating) sample
    when the check is quantitative, so failures point at concrete inputs.
    """

    name: str
    passed: bool
    detail: str = ""
    worst: float | None = None

    def as_dict(self) -> dict:
        out = {"name": self.name, "passed": self.passed, "detail": self.detail}
        if self.worst is not None:
            out["worst"] = self.worst
        return out


@dataclass
class PropertyReport:
    """An ordered collection of checks; failures are entries, not exceptions."""

    checks: list[PropertyCheck] = field(default_factory=list)

    def add(self, name: str, passed: bool, detail: str = "", worst: float | None = None) -> None:
        self.checks.append(PropertyCheck(name, bool(passed), detail, worst))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[PropertyCheck]:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> PropertyCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.as_dict() for c in self.checks]}
