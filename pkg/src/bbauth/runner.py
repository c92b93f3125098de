"""Matcher engine: turns a comparison list into a score map.

Each matcher prepares one artifact per session (template features,
wavelet image, alignment sequence, or embedding) exactly once, then
scores comparisons against the cached artifacts. Scoring may fan out
across worker threads; output order always follows the comparison
list, and every score lies in [0, 1] with higher meaning more genuine.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import DatasetSplit, Session, TaskKind
from .dwt import DwtImageConfig, dwt_score, task_image
from .errors import BBAuthError
from .keystroke import keystroke_score
from .preprocess import compute_target_lengths, stack_modalities
from .protocol import ComparisonList
from .siamese import (
    TrainConfig,
    build_pair_set,
    forward,
    minmax_postprocess,
    train,
)
from .softdtw import SoftDtwCalibration, calibrate, softdtw_score
from .touch import build_template, session_feature_vectors, template_score

MATCHERS = ("keystroke-ngram", "swipe-template", "dwt-distance", "softdtw", "siamese")


@dataclass
class RunConfig:
    matcher: str
    task: TaskKind
    seed: int = 0
    threads: int = 1
    # softdtw; 0.05 keeps the smoothed minimum sharp on [0,1]-scaled features
    gamma: float = 0.05
    tau: float | None = None  # calibrated from the training split when None
    # siamese
    margin: float = 1.0
    epochs: int = 50
    batch_size: int = 16
    learning_rate: float = 0.001
    target_len: int | None = None  # stacking length; from training averages when None
    # dwt
    dwt_length: int = 64
    dwt_width: int = 8
    # keystroke
    top_k: int | None = None

    def __post_init__(self) -> None:
        if self.matcher not in MATCHERS:
            raise ValueError(f"unknown matcher {self.matcher!r}")
        validate_matcher_task(self.matcher, self.task)


def validate_matcher_task(matcher: str, task: TaskKind) -> None:
    if matcher == "keystroke-ngram" and task is not TaskKind.Keystroke:
        raise ValueError("keystroke-ngram only applies to the keystroke task")


class _KeystrokeMatcher:
    def __init__(self, config: RunConfig, train_split):
        self.top_k = config.top_k

    def prepare(self, session: Session) -> Session:
        return session

    def score(self, enroll, verify) -> float:
        return keystroke_score(list(enroll), verify, top_k=self.top_k)


class _SwipeTemplateMatcher:
    def __init__(self, config: RunConfig, train_split):
        pass

    def prepare(self, session: Session):
        return session_feature_vectors(session)

    def score(self, enroll, verify) -> float:
        pooled = [vec for vectors in enroll for vec in vectors]
        return template_score(build_template(pooled), verify)


class _DwtMatcher:
    def __init__(self, config: RunConfig, train_split):
        self.image_config = DwtImageConfig(length=config.dwt_length, width=config.dwt_width)

    def prepare(self, session: Session):
        return task_image(session, self.image_config)

    def score(self, enroll, verify) -> float:
        return dwt_score(list(enroll), verify)


class _SoftDtwMatcher:
    def __init__(self, config: RunConfig, train_split: DatasetSplit | None):
        self.gamma = config.gamma
        self.task = config.task
        self.scale = None
        if config.tau is not None:
            self.tau = config.tau
        else:
            if train_split is None:
                raise ValueError("softdtw needs a training split to calibrate tau")
            calibration: SoftDtwCalibration = calibrate(train_split, config.task, config.gamma)
            self.tau = calibration.tau
            self.scale = calibration.scale

    def prepare(self, session: Session) -> Session:
        return session

    def score(self, enroll, verify) -> float:
        return softdtw_score(list(enroll), verify, self.task, self.gamma, self.tau, self.scale)


class _SiameseMatcher:
    postprocess = staticmethod(minmax_postprocess)

    def __init__(self, config: RunConfig, train_split: DatasetSplit | None):
        if train_split is None:
            raise ValueError("siamese needs a training split")
        self.task = config.task
        if config.target_len is not None:
            self.target_len = config.target_len
        else:
            self.target_len = compute_target_lengths(train_split.sessions)[config.task]
        by_subject: dict[str, list[np.ndarray]] = {}
        for s in train_split.sessions_for(config.task):
            if s.subject_id is None:
                continue
            by_subject.setdefault(s.subject_id, []).append(self._features(s))
        pairs = build_pair_set(by_subject, config.seed)
        train_config = TrainConfig(
            learning_rate=config.learning_rate,
            epochs=config.epochs,
            batch_size=config.batch_size,
            margin=config.margin,
            seed=config.seed,
        )
        self.params = train(pairs, train_config).params

    def _features(self, session: Session) -> np.ndarray:
        return stack_modalities(session, session.task, self.target_len).values.reshape(-1)

    def prepare(self, session: Session) -> np.ndarray:
        return forward(self.params, self._features(session), "infer")

    def score(self, enroll, verify) -> float:
        d = float(np.mean([np.linalg.norm(e - verify) for e in enroll]))
        return float(np.exp(-d))


_MATCHER_CLASSES = {
    "keystroke-ngram": _KeystrokeMatcher,
    "swipe-template": _SwipeTemplateMatcher,
    "dwt-distance": _DwtMatcher,
    "softdtw": _SoftDtwMatcher,
    "siamese": _SiameseMatcher,
}


@dataclass
class ScoreRun:
    scores: dict[str, float]  # in comparison-list order
    timings: dict[str, float] = field(default_factory=dict)


def score_comparisons(
    split: DatasetSplit,
    comparison_list: ComparisonList,
    config: RunConfig,
    train_split: DatasetSplit | None = None,
) -> ScoreRun:
    """Score every comparison in list order; deterministic per config."""
    validate_matcher_task(config.matcher, comparison_list.task)
    if config.task is not comparison_list.task:
        raise ValueError("run config task differs from the comparison list task")
    t0 = time.perf_counter()
    matcher = _MATCHER_CLASSES[config.matcher](config, train_split)
    t_setup = time.perf_counter() - t0

    sessions = split.by_id()
    needed: list[str] = []
    seen: set[str] = set()
    for c in comparison_list.comparisons:
        for sid in (*c.enrollment_session_ids, c.verification_session_id):
            if sid not in seen:
                seen.add(sid)
                needed.append(sid)
    missing = [sid for sid in needed if sid not in sessions]
    if missing:
        raise BBAuthError("comparison list names unknown sessions: " + ", ".join(sorted(missing)))

    t0 = time.perf_counter()
    artifacts = {sid: matcher.prepare(sessions[sid]) for sid in needed}
    t_prepare = time.perf_counter() - t0

    def one(comparison) -> float:
        enroll = [artifacts[sid] for sid in comparison.enrollment_session_ids]
        try:
            return matcher.score(enroll, artifacts[comparison.verification_session_id])
        except BBAuthError as exc:
            raise type(exc)(f"comparison {comparison.comparison_id!r}: {exc}") from None

    t0 = time.perf_counter()
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            values = list(pool.map(one, comparison_list.comparisons))
    else:
        values = [one(c) for c in comparison_list.comparisons]
    t_score = time.perf_counter() - t0

    postprocess = getattr(matcher, "postprocess", None)
    if postprocess is not None:
        values = postprocess(values)
    values = [min(max(float(v), 0.0), 1.0) for v in values]
    scores = {c.comparison_id: v for c, v in zip(comparison_list.comparisons, values)}
    return ScoreRun(
        scores,
        {"setup_s": t_setup, "prepare_s": t_prepare, "score_s": t_score,
         "comparisons": float(len(values))},
    )
