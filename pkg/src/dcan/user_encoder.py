"""Coverage-embedded multi-head attention stack and the candidate scoring head."""

from __future__ import annotations

import numpy as np

from . import numerics as nx
from .attention import TransformerBlock
from .coverage import CoverageState
from .numerics import LayerNorm, Linear, Module, Tensor, parameter, trunc_normal


def coverage_injections(state: CoverageState | None, assignment: list[str]) -> dict[int, Tensor]:
    """Map head index -> averaged augmentation for every head with an assignment."""
    if state is None:
        return {}
    out = {}
    for h, name in enumerate(assignment):
        if name != "none":
            out[h] = state.averaged(name)
    return out


class UserEncoder(Module):
    """Learned positions, then ``L`` post-norm blocks whose designated heads see coverage in [Value]."""

    def __init__(self, d: int, n_heads: int, num_layers: int, max_len: int, rng: np.random.Generator,
                 dropout: float = 0.0, assignment: list[str] | None = None, injection: str = "pre"):
        self.positions = parameter(trunc_normal(rng, (max_len, d)))
        self.input_norm = LayerNorm(d)
        self.blocks = [TransformerBlock(d, n_heads, rng, dropout, injection) for _ in range(num_layers)]
        self.assignment = list(assignment or ["none"] * n_heads)
        if len(self.assignment) != n_heads:
            raise ValueError(f"assignment has {len(self.assignment)} entries for {n_heads} heads")
        self.dropout = dropout

    def __call__(self, inputs: Tensor, key_mask: np.ndarray, state: CoverageState | None = None,
                 rng: np.random.Generator | None = None, offset: int = 0) -> Tensor:
        """``inputs`` is ``(batch, n, d)`` news representations of the padded slots.

        ``offset`` is the index of the first column within the full-length window
        when leading all-padding columns were trimmed.
        """
        n = inputs.shape[1]
        h = self.input_norm(inputs + self.positions[offset : offset + n])
        h = nx.dropout(h, self.dropout, self.training, rng)
        extra = coverage_injections(state, self.assignment)
        for block in self.blocks:
            h = block(h, key_mask=key_mask, value_extra=extra, rng=rng)
        return h


class PredictionHead(Module):
    """Logits ``GELU(o M_p + b_p) . r_c + b_o[c]`` for candidate news ``c``."""

    def __init__(self, d: int, num_news: int, rng: np.random.Generator):
        self.transform = Linear(d, d, rng)
        self.output_bias = parameter(np.zeros(num_news))

    def hidden(self, o: Tensor) -> Tensor:
        return nx.gelu(self.transform(o))

    def catalog_logits(self, o: Tensor, news: Tensor) -> Tensor:
        """``o`` is ``(P, d)``, ``news`` the full ``(num_news, d)`` catalog matrix."""
        return self.hidden(o) @ news.T + self.output_bias

    def candidate_logits(self, o: Tensor, news: Tensor, candidates: np.ndarray) -> Tensor:
        """Scores of ``(B, C)`` candidate ids for each of the ``B`` rows of ``o``."""
        candidates = np.asarray(candidates, dtype=np.int64)
        if candidates.ndim != 2 or candidates.shape[1] == 0:
            raise ValueError("candidate set must be a non-empty (batch, count) array")
        emb = nx.take_rows(news, candidates)  # (B, C, d)
        hid = self.hidden(o)
        b, d = hid.shape
        logits = (emb @ hid.reshape(b, d, 1)).reshape(b, candidates.shape[1])
        return logits + nx.take_rows(self.output_bias.reshape(-1, 1), candidates).reshape(candidates.shape)


def score_candidates(o: Tensor, head: PredictionHead, news: Tensor, candidate_ids) -> Tensor:
    """Softmax over exactly ``candidate_ids`` for a single output vector ``o``."""
    ids = np.asarray(candidate_ids, dtype=np.int64).reshape(1, -1)
    if ids.size == 0:
        raise ValueError("empty candidate set")
    logits = head.candidate_logits(nx.as_tensor(o).reshape(1, -1), news, ids)
    return nx.softmax(logits, axis=-1).reshape(-1)
