"""
Base schemas for common patterns.

Provides base classes for all Pydantic schemas.
"""

from pydantic import BaseModel, ConfigDict


class BaseSchema(BaseModel):
    """
    Base schema with common configuration.

    Unknown keys are rejected so a misspelled config key fails validation
    instead of being silently ignored.
    """

    model_config = ConfigDict(
        populate_by_name=True,
        extra="forbid",
        use_enum_values=False,
        json_schema_extra={"example": {}},
    )


class FrozenSchema(BaseSchema):
    """Immutable schema; instances are hashable and safe to share across threads."""

    model_config = ConfigDict(frozen=True)
