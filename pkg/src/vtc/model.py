"""End-to-end detect-then-correct network."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import tensor as T
from .corrector import CorrectionHead, joint_loss
from .detector import DetectionHead
from .encoder import EncodedSentence, TextEncoder
from .exceptions import CompatibilityError, ConfigError
from .tensor import Tensor


@dataclass
class ModelConfig:
    vocab_size: int
    beta: list[int]
    d_x: int = 64
    hidden: int = 64
    d_q: int = 128
    kernel_size: int = 5
    depth: int = 3
    max_len: int = 40
    d_v: int = 0
    visual: str = "none"
    paths: str = "conv+lstm"
    use_position: bool = True

    def validate(self) -> None:
        for name in ("vocab_size", "d_x", "hidden", "d_q", "kernel_size", "depth", "max_len"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.kernel_size % 2 == 0:
            raise ConfigError(f"kernel_size must be odd, got {self.kernel_size}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Batch:
    """Padded batch. ``answers`` hold vocabulary indices of the original words."""

    tokens: np.ndarray
    mask: np.ndarray
    omega: np.ndarray | None = None
    positions: np.ndarray | None = None
    answers: np.ndarray | None = None

    def __len__(self) -> int:
        return self.tokens.shape[0]


@dataclass
class ForwardOutput:
    encoded: EncodedSentence
    D: Tensor
    T_star: Tensor
    Q: Tensor
    u_q: Tensor
    u_V: Tensor
    logits: Tensor
    loss: Tensor | None = None
    l_d: Tensor | None = None
    l_f: Tensor | None = None
    extras: dict = field(default_factory=dict)


class VTCNetwork:
    def __init__(self, config: ModelConfig, seed: int = 0):
        config.validate()
        self.config = config
        rng = np.random.default_rng(seed)
        self.encoder = TextEncoder(
            config.vocab_size,
            d_x=config.d_x,
            hidden=config.hidden,
            kernel_size=config.kernel_size,
            depth=config.depth,
            n_max=config.max_len,
            paths=config.paths,
            use_position=config.use_position,
            rng=rng,
        )
        self.detector = DetectionHead(config.d_x, config.d_v, config.visual, rng=rng)
        self.corrector = CorrectionHead(
            config.d_x, config.beta, d_q=config.d_q, d_v=config.d_v, visual=config.visual != "none", rng=rng
        )

    @property
    def visual(self) -> bool:
        return self.config.visual != "none"

    def parameters(self) -> list[Tensor]:
        return self.encoder.params() + self.detector.params() + self.corrector.params()

    def named_parameters(self) -> dict[str, Tensor]:
        return {p.name: p for p in self.parameters()}

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters().items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        params = self.named_parameters()
        missing = set(params) - set(state)
        if missing:
            raise CompatibilityError(f"checkpoint lacks parameters {sorted(missing)}")
        for name, p in params.items():
            arr = np.asarray(state[name])
            if arr.shape != p.shape:
                raise CompatibilityError(f"parameter {name}: checkpoint shape {arr.shape} vs model {p.shape}")
            p.data = arr.astype(p.dtype).copy()

    def astype(self, dtype) -> "VTCNetwork":
        for p in self.parameters():
            p.data = p.data.astype(dtype)
        return self

    def forward(self, batch: Batch) -> ForwardOutput:
        mask = np.asarray(batch.mask, dtype=self.encoder.embedding.theta_x.dtype)
        omega = None
        if self.visual:
            if batch.omega is None:
                raise CompatibilityError("visual model needs video features for every sample")
            omega = Tensor(np.asarray(batch.omega, dtype=mask.dtype))
        enc = self.encoder(batch.tokens, mask)
        D = self.detector.scores(enc.X, enc.x_hat, omega, mask)
        T_star = T.softmax(D)
        Q = self.corrector.encode_candidates(enc.x_hat)
        u_q = self.corrector.attend(T_star, Q)
        u_V = self.corrector.encode_video(omega, (len(batch),))
        logits = self.corrector.logits(u_q, u_V)
        out = ForwardOutput(enc, D, T_star, Q, u_q, u_V, logits)
        if batch.positions is not None and batch.answers is not None:
            out.l_d = T.cross_entropy(D, batch.positions)
            out.loss, out.l_f = joint_loss(out.l_d, logits, self.corrector.target_index(batch.answers))
        return out

    def pair_scores(self, out: ForwardOutput) -> np.ndarray:
        """(B, N, |beta|) joint log-scores for every position/candidate pair."""
        return self.corrector.score_all_pairs(out.D, out.Q, out.u_V)


def pad_batch(sequences, pad: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Right-pad index sequences to the longest one; returns (tokens, mask)."""
    n = max(len(s) for s in sequences)
    tokens = np.full((len(sequences), n), pad, dtype=np.int64)
    mask = np.zeros((len(sequences), n), dtype=np.float32)
    for i, s in enumerate(sequences):
        tokens[i, : len(s)] = s
        mask[i, : len(s)] = 1.0
    return tokens, mask
