"""Request/response bodies for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class PredictRequest(BaseModel):
    text: str


class RankedResultBody(BaseModel):
    claim_id: str
    score: float
    rank: int


class PredictResponse(BaseModel):
    gate: Literal["claim", "no_claim"]
    gate_probability: float
    results: list[RankedResultBody]


class NextPairResponse(BaseModel):
    tweet_id: str
    claim_id: str
    tweet_text: str
    claim_text: str
    claim_verdict: str
    similarity: float
    rank: int
    lease_expires_at: str


class LabelRequest(BaseModel):
    label: Literal["relevant", "not_relevant"]
    annotator: str = Field(min_length=1)
    relabel: bool = False


class LabelResponse(BaseModel):
    tweet_id: str
    claim_id: str
    label: str
    annotator: str
    labeled_at: Optional[str]


class ProgressResponse(BaseModel):
    labeled: int
    total: int
    relevant: int
    not_relevant: int
    per_annotator: dict[str, int]
    claims_covered: int
    claims_total: int


class ErrorBody(BaseModel):
    code: str
    message: str
