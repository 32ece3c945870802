"""Remainder field configuration schema."""

from enum import Enum as PyEnum
from typing import Literal

import numpy as np
from pydantic import Field, model_validator

from gaugelab.schemas.base import FrozenSchema


class RemainderKind(str, PyEnum):
    ZERO = "Zero"
    CONSTANT_DIRECTION = "ConstantDirection"
    LINEAR_MATRIX = "LinearMatrix"
    CURL_QUADRATIC = "CurlQuadratic"


# Named LinearMatrix families resolved against the data density
NAMED_MATRICES = ("gauge_rotation", "scaled_antisymmetric", "section4")

# Alternate spellings accepted in run configs
MATRIX_ALIASES = {"section4": "gauge_rotation"}


class RemainderConfig(FrozenSchema):
    """
    Remainder r in the model field ``s + r``.

    Config keys: ``remainder.kind``, ``remainder.epsilon`` (vector for
    ConstantDirection, one-element list for CurlQuadratic),
    ``remainder.matrix`` (row-major constants or a named family),
    ``remainder.generator`` (antisymmetric K for named families),
    ``remainder.scale``, ``remainder.r_of_t``, ``remainder.negate_base``.
    """

    kind: RemainderKind = RemainderKind.ZERO
    epsilon: tuple[float, ...] | None = None
    matrix: str | tuple[tuple[float, ...], ...] | None = None
    generator: tuple[tuple[float, ...], ...] | None = None
    scale: float = Field(default=1.0)
    r_of_t: Literal["one", "zero"] = "one"
    negate_base: bool = False

    @model_validator(mode="after")
    def check_kind_fields(self) -> "RemainderConfig":
        if self.kind == RemainderKind.CONSTANT_DIRECTION and not self.epsilon:
            raise ValueError("ConstantDirection needs epsilon")
        if self.kind == RemainderKind.CURL_QUADRATIC:
            if self.epsilon is None or len(self.epsilon) != 1:
                raise ValueError("CurlQuadratic needs a scalar epsilon (one-element list)")
        if self.kind == RemainderKind.LINEAR_MATRIX:
            if self.matrix is None:
                raise ValueError("LinearMatrix needs matrix")
            if isinstance(self.matrix, str) and self.matrix not in NAMED_MATRICES:
                raise ValueError(f"unknown named matrix {self.matrix!r}; valid: {list(NAMED_MATRICES)}")
            if not isinstance(self.matrix, str):
                rows = {len(r) for r in self.matrix}
                if rows != {len(self.matrix)}:
                    raise ValueError("matrix must be square")
        if self.generator is not None:
            k = np.asarray(self.generator, dtype=float)
            if k.ndim != 2 or k.shape[0] != k.shape[1] or np.max(np.abs(k + k.T)) > 1e-12:
                raise ValueError("generator must be a square antisymmetric matrix")
        return self
