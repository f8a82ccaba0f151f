import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.core.types import FrameId
from src.utils.helpers import (
    BudgetExceedsPool,
    EmptyInput,
    FrameSelectionError,
    InvalidConfig,
    TooManyBatches,
)


@dataclass(frozen=True)
class ScoredFrame:
    id: FrameId
    score: float
    # (inter_norm, intra_norm) for the diversity strategies.
    components: Optional[Tuple[float, float]] = None


def min_max_normalize(scores: Sequence[float]) -> List[float]:
    values = np.asarray(scores, dtype=np.float64)
    if values.size == 0:
        raise EmptyInput("cannot normalize an empty score list")
    if not np.all(np.isfinite(values)):
        raise FrameSelectionError("scores must be finite")
    low, high = values.min(), values.max()
    if high == low:
        return [0.0] * values.size
    return ((values - low) / (high - low)).tolist()


def rank_frames(scored: Sequence[ScoredFrame]) -> List[ScoredFrame]:
    """Highest score first; ties go to the lower FrameId."""
    for item in scored:
        if not math.isfinite(item.score):
            raise FrameSelectionError("scores must be finite", {"frame": str(item.id)})
    return sorted(scored, key=lambda item: (-item.score, item.id))


def batch_bounds(n_items: int, n_batches: int) -> List[Tuple[int, int]]:
    """Contiguous near-equal batches; the first n_items % n_batches get one extra."""
    base, extra = divmod(n_items, n_batches)
    bounds, start = [], 0
    for b in range(n_batches):
        size = base + (1 if b < extra else 0)
        bounds.append((start, start + size))
        start += size
    return bounds


def batch_quotas(budget: int, n_batches: int) -> List[int]:
    per_batch, remainder = divmod(budget, n_batches)
    return [per_batch + (1 if b < remainder else 0) for b in range(n_batches)]


def batched_random_select(ranked: Sequence[FrameId], budget: int, n_batches: int,
                          rng: np.random.Generator) -> List[FrameId]:
    """Draw floor(budget / n_batches) frames uniformly from each contiguous batch
    of the ranked list; the leftover slots go one each to the top batches.

    Picks are returned batch by batch, in rank order within a batch.
    """
    if budget < 0 or n_batches < 1:
        raise InvalidConfig("budget must be >= 0 and n_batches >= 1",
                            {"budget": budget, "n_batches": n_batches})
    if budget > len(ranked):
        raise BudgetExceedsPool(f"budget {budget} exceeds the {len(ranked)} ranked frames",
                                {"budget": budget, "pool": len(ranked)})
    if n_batches > budget:
        raise TooManyBatches(f"{n_batches} batches for a budget of {budget}",
                             {"budget": budget, "n_batches": n_batches})

    selected: List[FrameId] = []
    for (start, stop), quota in zip(batch_bounds(len(ranked), n_batches),
                                    batch_quotas(budget, n_batches)):
        picks = rng.choice(stop - start, size=quota, replace=False)
        selected.extend(ranked[start + int(i)] for i in np.sort(picks))
    return selected
