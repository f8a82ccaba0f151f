"""Feature-space distances and the inter/intra diversity scores."""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from src.acquisition.ranking import ScoredFrame, min_max_normalize
from src.core.types import FrameId, Strategy
from src.utils.helpers import (
    DimensionMismatch,
    EmptyReferenceSet,
    FrameSelectionError,
    QueryNotInCandidates,
    ZeroVector,
)

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-12
METRICS = ("euclidean", "cosine")


def _metric_name(metric) -> str:
    name = metric.value if isinstance(metric, Strategy) else str(metric)
    if name not in METRICS:
        raise FrameSelectionError(f"unknown metric {name!r}", {"metric": name})
    return name


def _as_matrix(vectors, what: str) -> np.ndarray:
    matrix = np.asarray(vectors, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix[np.newaxis]
    if matrix.ndim != 2:
        raise DimensionMismatch(f"{what} must be vectors", {"shape": matrix.shape})
    return matrix


def _check_norms(matrix: np.ndarray, eps: float, ids: Optional[Sequence[FrameId]] = None) -> None:
    norms = np.linalg.norm(matrix, axis=1)
    small = np.flatnonzero(norms <= eps)
    if small.size:
        row = int(small[0])
        details = {"frame": str(ids[row])} if ids is not None else {"row": row}
        raise ZeroVector("cosine distance is undefined for a zero vector", details)


def distance_matrix(queries, references, metric, eps: float = DEFAULT_EPSILON,
                    query_ids: Optional[Sequence[FrameId]] = None) -> np.ndarray:
    """All pairwise distances, queries × references.

    Cosine distance is 1 - cosine similarity, clipped to [0, 2].
    """
    name = _metric_name(metric)
    q = _as_matrix(queries, "queries")
    r = _as_matrix(references, "references")
    if q.shape[1] != r.shape[1]:
        raise DimensionMismatch(f"dimension {q.shape[1]} vs {r.shape[1]}",
                                {"query_dim": q.shape[1], "reference_dim": r.shape[1]})
    if name == "euclidean":
        return cdist(q, r, metric="euclidean")
    _check_norms(q, eps, query_ids)
    _check_norms(r, eps)
    return np.clip(cdist(q, r, metric="cosine"), 0.0, 2.0)


def euclidean_distance(q, r) -> float:
    return float(distance_matrix(q, r, "euclidean")[0, 0])


def cosine_distance(q, r, eps: float = DEFAULT_EPSILON) -> float:
    return float(distance_matrix(q, r, "cosine", eps)[0, 0])


def inter_distance(q, labeled, metric, eps: float = DEFAULT_EPSILON) -> float:
    """Mean distance from a query to every labeled reference."""
    references = np.asarray(labeled, dtype=np.float64)
    if references.size == 0:
        raise EmptyReferenceSet("inter-distance needs at least one labeled frame")
    return float(distance_matrix(q, references, metric, eps).mean())


def intra_distance(q_id: FrameId, candidates: Sequence[Tuple[FrameId, np.ndarray]], metric,
                   eps: float = DEFAULT_EPSILON) -> float:
    """Mean distance from a frame to the other candidates of its video; 0 when alone."""
    ids = [frame for frame, _ in candidates]
    if q_id not in ids:
        raise QueryNotInCandidates("query frame is not among the candidates", {"frame": str(q_id)})
    foreign = [frame for frame in ids if frame.video != q_id.video]
    if foreign:
        raise QueryNotInCandidates("candidates must come from the query's video",
                                   {"frame": str(foreign[0]), "video": q_id.video})
    query = candidates[ids.index(q_id)][1]
    peers = [vector for frame, vector in candidates if frame != q_id]
    if not peers:
        return 0.0
    return float(distance_matrix(query, peers, metric, eps, query_ids=[q_id]).mean())


def diversity_scores(pool_frames: Sequence[Tuple[FrameId, np.ndarray]], labeled_features,
                     metric, eps: float = DEFAULT_EPSILON) -> List[ScoredFrame]:
    """Score candidates by normalized inter-distance plus normalized intra-distance.

    Both raw distances are computed in one pass over the candidate set and
    min-max normalized across it.
    """
    if not pool_frames:
        return []
    references = np.asarray(labeled_features, dtype=np.float64)
    if references.size == 0:
        raise EmptyReferenceSet("diversity scoring needs at least one labeled frame")
    ids = [frame for frame, _ in pool_frames]
    features = _as_matrix([vector for _, vector in pool_frames], "candidates")
    references = _as_matrix(references, "references")
    if features.shape[1] != references.shape[1]:
        raise DimensionMismatch("candidate and labeled features differ in dimension",
                                {"frame": str(ids[0]), "dimension": features.shape[1]})

    inter = distance_matrix(features, references, metric, eps, query_ids=ids).mean(axis=1)
    n = len(ids)
    if n > 1:
        within = distance_matrix(features, features, metric, eps, query_ids=ids)
        off_diagonal = ~np.eye(n, dtype=bool)
        intra = np.where(off_diagonal, within, 0.0).sum(axis=1) / (n - 1)
    else:
        intra = np.zeros(1)

    inter_norm = min_max_normalize(inter)
    intra_norm = min_max_normalize(intra)
    scored = [ScoredFrame(frame, a + b, (a, b))
              for frame, a, b in zip(ids, inter_norm, intra_norm)]
    logger.debug(f"Diversity scores ({_metric_name(metric)}): "
                 + ", ".join(f"{s.id}={s.score:.4f}" for s in scored))
    return scored
