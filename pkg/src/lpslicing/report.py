from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Check:
    """One numeric comparison; ``std_error`` is the joint Monte-Carlo error (0 if exact)."""

    name: str
    lhs: float
    rhs: float
    std_error: float
    passed: bool
    note: str = ""

    def to_dict(self):
        return dict(name=self.name, lhs=self.lhs, rhs=self.rhs, std_error=self.std_error,
                    passed=self.passed, note=self.note)


@dataclass
class VerificationReport:
    name: str
    checks: list = field(default_factory=list)
    seed: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {"name": self.name, "passed": self.passed,
                "checks": [c.to_dict() for c in self.checks],
                "seed": self.seed, "samples": self.samples, **self.extra}
