"""Keyword + template sentence generator.

Keywords are encoded independently by a two-layer tanh MLP, the template
by a bidirectional GRU over tag embeddings.  At each output position a
scalar gate λ (how well the current template tag matches any keyword tag)
blends the attended keyword context against the template context before
the decoder GRU and readout.

All keyword-indexed computation runs in canonical order (ascending keyword
id), so results are exactly invariant to the order keywords are given in.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .. import numerics as nx
from ..corpus.vocab import BOS, EOS, PAD
from ..numerics import Tensor
from .batch import Batch, EncodedExample, encode_ids, pad_batch
from .params import ModelConfig, ModelParams, init_params

EXCLUDED_IDS = (PAD, BOS)


class DecodingError(ArithmeticError):
    """Non-finite decoder state; decoding is aborted."""


@dataclass
class EncodedKeywords:
    H: Tensor  # [B, N, Dk]
    mask: np.ndarray  # [B, N]
    ids: np.ndarray


@dataclass
class EncodedTemplate:
    H: Tensor  # [B, M, Dk]
    mask: np.ndarray  # [B, M]
    lengths: np.ndarray


@dataclass
class StepOutputs:
    lam: Tensor  # [B]
    alpha: Tensor  # [B, N]
    context: Tensor  # [B, Dk]
    mixed: Tensor  # [B, Ds]
    logits: Tensor  # [B, V]


@dataclass
class TraceStep:
    token: int
    lam: float
    alpha: list[float]
    tag: int | None

    def to_dict(self) -> dict:
        return {"token": self.token, "lambda": self.lam, "alpha": self.alpha, "tag": self.tag}


@dataclass
class DecodeTrace:
    """Per-step record of one generation; keywords are in canonical order."""

    keywords: list[int]
    steps: list[TraceStep] = field(default_factory=list)

    @property
    def tokens(self) -> list[int]:
        return [s.token for s in self.steps]

    @property
    def lambdas(self) -> list[float]:
        return [s.lam for s in self.steps]

    def __len__(self) -> int:
        return len(self.steps)

    def to_dict(self) -> dict:
        return {"keywords": self.keywords, "steps": [s.to_dict() for s in self.steps]}


@dataclass
class Hypothesis:
    tokens: list[int]
    logprob: float
    state: np.ndarray
    trace: list[TraceStep] = field(default_factory=list)
    finished: bool = False


@dataclass
class _Context:
    """Everything the decoder needs that does not change across steps."""

    keywords: EncodedKeywords
    h_tt: Tensor  # [B, M, Dk]
    lam: Tensor  # [B, M]
    proj_k: Tensor  # [B, N, A]
    proj_t: Tensor  # [B, M, A]
    s0: Tensor  # [B, Ds]
    template: np.ndarray | None


def _rows(ids) -> np.ndarray:
    arr = np.asarray(ids, dtype=np.int64)
    return arr[None, :] if arr.ndim == 1 else arr


class TemplateGenerator:
    """The generator; owns a :class:`ModelParams` and its :class:`ModelConfig`."""

    def __init__(self, params: ModelParams, config: ModelConfig, vocab_size: int, tag_size: int):
        self.params = params
        self.config = config
        self.vocab_size = vocab_size
        self.tag_size = tag_size

    @classmethod
    def initialize(cls, config: ModelConfig, vocab_size: int, tag_size: int, seed: int = 0, dtype=np.float32):
        rng = np.random.default_rng(seed)
        return cls(init_params(config, vocab_size, tag_size, rng, dtype), config, vocab_size, tag_size)

    @property
    def no_template(self) -> bool:
        return self.config.no_template

    @property
    def dtype(self):
        return self.params["word_emb"].dtype

    def _p(self, name: str) -> Tensor:
        return self.params[name]

    # -- encoders -----------------------------------------------------------
    def encode_keywords(self, K, mask=None, train_mode: bool = False, rng=None) -> EncodedKeywords:
        """Row i of the result depends on keyword i only."""
        p = self._p
        K = _rows(K)
        mask = K != PAD if mask is None else np.asarray(mask, dtype=bool)
        E = nx.embedding(p("word_emb"), K)
        h = nx.tanh(nx.linear(E, p("kw_w1"), p("kw_b1")))
        h = nx.dropout(h, self.config.dropout, rng, train_mode)
        H = nx.tanh(nx.linear(h, p("kw_w2"), p("kw_b2")))
        return EncodedKeywords(H, mask, K)

    def _gru_scan(self, X: Tensor, mask: np.ndarray, prefix: str, reverse: bool) -> list[Tensor]:
        p = self._p
        B, M = mask.shape
        gx = nx.linear(X, p(prefix + "_wx"), p(prefix + "_bx"))
        h = Tensor(np.zeros((B, self.config.template_hidden), dtype=X.dtype))
        out: list[Tensor | None] = [None] * M
        for t in reversed(range(M)) if reverse else range(M):
            h_new = nx.gru_step(nx.select(gx, 1, t), h, p(prefix + "_wh"), p(prefix + "_bh"))
            # padded steps carry the previous state through unchanged
            h = h_new if mask[:, t].all() else nx.blend(mask[:, t], h_new, h)
            out[t] = h
        return out

    def encode_template(self, TT, mask=None) -> EncodedTemplate:
        if self.no_template:
            raise RuntimeError("no_template model has no template encoder")
        TT = _rows(TT)
        mask = np.ones(TT.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
        X = nx.embedding(self._p("tag_emb"), TT)
        fwd = self._gru_scan(X, mask, "tf", reverse=False)
        bwd = self._gru_scan(X, mask, "tb", reverse=True)
        both = nx.concat([nx.stack(fwd, axis=1), nx.stack(bwd, axis=1)], axis=-1)
        H = nx.tanh(nx.linear(both, self._p("tr_w"), self._p("tr_b")))
        return EncodedTemplate(H, mask, mask.sum(axis=1))

    def match_lambda(self, TT, KT, kt_mask=None) -> tuple[Tensor, np.ndarray]:
        """λ for every template position: sigmoid(W_s * max_j cos(E_t[tt], E_t[kt_j]) + b).

        Returns λ ([B, M]) and the index of the best-matching keyword tag.
        """
        TT, KT = _rows(TT), _rows(KT)
        kt_mask = np.ones(KT.shape, dtype=bool) if kt_mask is None else np.asarray(kt_mask, dtype=bool)
        table = self._p("tag_emb")
        cos = nx.pairwise_cosine(nx.embedding(table, TT), nx.embedding(table, KT))
        mask = np.broadcast_to(kt_mask[:, None, :], cos.shape)
        best, idx = nx.masked_max(cos, mask)
        lam = nx.sigmoid(nx.add(nx.mul(best, self._p("match_w")), self._p("match_b")))
        return lam, idx

    def initial_state(self, keywords: EncodedKeywords, h_last: Tensor) -> Tensor:
        mean = nx.masked_mean(keywords.H, keywords.mask)
        return nx.tanh(nx.linear(nx.concat([mean, h_last], axis=-1), self._p("init_w"), self._p("init_b")))

    # -- attention and decoding -------------------------------------------------
    def _attend(self, s_prev: Tensor, proj_k: Tensor, proj_t_t: Tensor, H_k: Tensor, mask) -> tuple[Tensor, Tensor]:
        N = H_k.shape[1]
        e = nx.add(nx.add(nx.expand(nx.linear(s_prev, self._p("att_ws")), 1, N), proj_k), nx.expand(proj_t_t, 1, N))
        energy = nx.reshape(nx.linear(nx.tanh(e), self._p("att_v")), e.shape[:2])
        alpha = nx.softmax(energy, mask)
        return alpha, nx.weighted_sum(alpha, H_k)

    def attend(self, s_prev: Tensor, H_k: Tensor, h_tt_t: Tensor, mask=None, keyword_ids=None):
        """Attention weights over keywords and the context vector.

        With ``keyword_ids`` the rows are first put in canonical order and the
        weights mapped back, so any permutation of the keywords permutes
        ``alpha`` identically and leaves the context bitwise unchanged.
        """
        B, N = H_k.shape[:2]
        mask = np.ones((B, N), dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
        if keyword_ids is None:
            order = np.tile(np.arange(N), (B, 1))
        else:
            ids = _rows(keyword_ids)
            # pads last, then ascending id; stable so equal ids keep their relative order
            order = np.lexsort((ids, ~mask), axis=-1)
        inverse = np.argsort(order, axis=-1)
        Hs = nx.take_rows(H_k, order)
        proj_k = nx.linear(Hs, self._p("att_wk"))
        proj_t = nx.linear(h_tt_t, self._p("att_wt"), self._p("att_b"))
        alpha_s, c = self._attend(s_prev, proj_k, proj_t, Hs, np.take_along_axis(mask, order, axis=1))
        return nx.take_rows(alpha_s, inverse), c

    def decode_step(
        self,
        y_prev,
        state: Tensor,
        H_k: Tensor,
        h_tt_t: Tensor,
        lam: Tensor,
        mask,
        train_mode: bool = False,
        rng=None,
        proj_k: Tensor | None = None,
        proj_t_t: Tensor | None = None,
    ) -> tuple[StepOutputs, Tensor]:
        """One decoder step: attention, λ mixing, GRU update, readout."""
        p = self._p
        y_prev = np.atleast_1d(np.asarray(y_prev, dtype=np.int64))
        if proj_k is None:
            proj_k = nx.linear(H_k, p("att_wk"))
        if proj_t_t is None:
            proj_t_t = nx.linear(h_tt_t, p("att_wt"), p("att_b"))
        alpha, c = self._attend(state, proj_k, proj_t_t, H_k, mask)
        one_minus = nx.sub(1.0, lam)
        m = nx.tanh(nx.linear(nx.concat([nx.rowscale(c, lam), nx.rowscale(h_tt_t, one_minus)]), p("mix_w"), p("mix_b")))
        e_prev = nx.embedding(p("word_emb"), y_prev)
        s = nx.gru_cell(nx.concat([e_prev, m]), state, p("dec_wx"), p("dec_wh"), p("dec_bx"), p("dec_bh"))
        if not np.isfinite(s.data).all():
            raise DecodingError("decoder state became non-finite")
        logits = self._readout(e_prev, s, m, train_mode, rng)
        return StepOutputs(lam, alpha, c, m, logits), s

    def _readout(self, e_prev: Tensor, s: Tensor, m: Tensor, train_mode: bool, rng) -> Tensor:
        p = self._p
        o = nx.tanh(nx.linear(nx.concat([e_prev, s, m]), p("ro_w"), p("ro_b")))
        o = nx.dropout(o, self.config.dropout, rng, train_mode)
        return nx.linear(o, p("out_w"), p("out_b"))

    # -- shared preparation ---------------------------------------------------
    def _context(
        self, K, k_mask, KT, kt_mask, TT, t_mask, steps: int | None = None, train_mode: bool = False, rng=None
    ) -> _Context:
        p = self._p
        keywords = self.encode_keywords(K, k_mask, train_mode, rng)
        B = keywords.H.shape[0]
        if self.no_template:
            M = int(steps)
            nt = nx.expand(nx.expand(p("nt_context"), 0, M), 0, B)
            h_tt = nt
            lam = Tensor(np.ones((B, M), dtype=self.dtype))
            h_last = nx.select(nt, 1, 0)
            TT = None
        else:
            template = self.encode_template(TT, t_mask)
            h_tt = template.H
            lam, _ = self.match_lambda(TT, KT, kt_mask)
            h_last = nx.gather_rows(h_tt, template.lengths - 1)
            TT = _rows(TT)
        return _Context(
            keywords,
            h_tt,
            lam,
            nx.linear(keywords.H, p("att_wk")),
            nx.linear(h_tt, p("att_wt"), p("att_b")),
            self.initial_state(keywords, h_last),
            TT,
        )

    def _step(self, ctx: _Context, t: int, y_prev, state: Tensor, train_mode=False, rng=None):
        t_idx = min(t, ctx.h_tt.shape[1] - 1)
        return self.decode_step(
            y_prev,
            state,
            ctx.keywords.H,
            nx.select(ctx.h_tt, 1, t_idx),
            nx.select(ctx.lam, 1, t_idx),
            ctx.keywords.mask,
            train_mode,
            rng,
            proj_k=ctx.proj_k,
            proj_t_t=nx.select(ctx.proj_t, 1, t_idx),
        )

    # -- training objective ---------------------------------------------------
    def forward_loss(self, batch: Batch, train_mode: bool = False, rng=None) -> Tensor:
        """Teacher-forced mean cross-entropy over real target positions."""
        if len(batch) == 0:
            raise ValueError("empty batch")
        p = self._p
        B, M = batch.reference.shape
        targets = batch.reference
        weights = batch.template_mask.astype(self.dtype)
        if self.no_template:
            # one extra step to predict EOS after the sentence
            targets = np.concatenate([targets, np.zeros((B, 1), dtype=np.int64)], axis=1)
            targets[np.arange(B), batch.lengths] = EOS
            weights = np.concatenate([weights, np.zeros((B, 1), dtype=self.dtype)], axis=1)
            weights[np.arange(B), batch.lengths] = 1.0
        steps = targets.shape[1]
        inputs = np.concatenate([np.full((B, 1), BOS, dtype=np.int64), targets[:, :-1]], axis=1)
        ctx = self._context(
            batch.keywords,
            batch.keyword_mask,
            batch.keyword_tags,
            batch.keyword_tag_mask,
            batch.template,
            batch.template_mask,
            steps=steps,
            train_mode=train_mode,
            rng=rng,
        )
        E_in = nx.embedding(p("word_emb"), inputs)
        s = ctx.s0
        states, mixes = [], []
        for t in range(steps):
            out_t = self._step_core(ctx, t, E_in, s)
            mixes.append(out_t[0])
            s = out_t[1]
            states.append(s)
        S = nx.stack(states, axis=1)
        Mx = nx.stack(mixes, axis=1)
        logits = self._readout(E_in, S, Mx, train_mode, rng)
        return nx.cross_entropy(logits, targets, weights)

    def _step_core(self, ctx: _Context, t: int, E_in: Tensor, s: Tensor) -> tuple[Tensor, Tensor]:
        """Mixed context and next state for teacher forcing (readout done in bulk)."""
        p = self._p
        t_idx = min(t, ctx.h_tt.shape[1] - 1)
        h_t = nx.select(ctx.h_tt, 1, t_idx)
        lam = nx.select(ctx.lam, 1, t_idx)
        _, c = self._attend(s, ctx.proj_k, nx.select(ctx.proj_t, 1, t_idx), ctx.keywords.H, ctx.keywords.mask)
        m = nx.tanh(
            nx.linear(nx.concat([nx.rowscale(c, lam), nx.rowscale(h_t, nx.sub(1.0, lam))]), p("mix_w"), p("mix_b"))
        )
        e_prev = nx.select(E_in, 1, t)
        s = nx.gru_cell(nx.concat([e_prev, m]), s, p("dec_wx"), p("dec_wh"), p("dec_bx"), p("dec_bh"))
        if not np.isfinite(s.data).all():
            raise DecodingError("decoder state became non-finite")
        return m, s

    # -- inference ----------------------------------------------------------------
    def _single_context(self, K, KT, TT, max_length: int | None) -> tuple[EncodedExample, _Context, int]:
        if len(K) == 0:
            raise ValueError("at least one keyword is required")
        if self.no_template:
            steps = max_length or self.config.max_length
            enc = encode_ids(K, KT or (0,), (0,))
        else:
            if len(TT) == 0:
                raise ValueError("template must be non-empty")
            if len(KT) == 0:
                raise ValueError("at least one keyword tag is required")
            enc = encode_ids(K, KT, TT)
            steps = len(enc.template)
        b = pad_batch([enc])
        ctx = self._context(b.keywords, b.keyword_mask, b.keyword_tags, b.keyword_tag_mask, b.template, b.template_mask, steps)
        return enc, ctx, steps

    def _logprobs(self, logits: np.ndarray) -> np.ndarray:
        lp = nx.log_softmax_np(logits.astype(np.float64))
        lp[..., list(EXCLUDED_IDS)] = -np.inf
        return lp

    def _trace_step(self, ctx: _Context, t: int, token: int, out: StepOutputs, row: int) -> TraceStep:
        tag = None if ctx.template is None else int(ctx.template[0, t])
        return TraceStep(int(token), float(out.lam.data[row]), [float(a) for a in out.alpha.data[row]], tag)

    def generate_greedy(self, K, KT, TT, max_length: int | None = None) -> tuple[list[int], DecodeTrace]:
        """Argmax decoding; one output token per template tag."""
        with nx.no_grad():
            enc, ctx, steps = self._single_context(K, KT, TT, max_length)
            trace = DecodeTrace(list(enc.keywords))
            s, y, score = ctx.s0, BOS, 0.0
            for t in range(steps):
                out, s = self._step(ctx, t, [y], s)
                # rank by cumulative score exactly as the beam does, so width 1 matches
                cand = score + self._logprobs(out.logits.data)[0]
                y = int(np.argmax(cand))
                score = float(cand[y])
                trace.steps.append(self._trace_step(ctx, t, y, out, 0))
                if self.no_template and y == EOS:
                    break
        tokens = trace.tokens
        if self.no_template and tokens and tokens[-1] == EOS:
            tokens = tokens[:-1]
        return tokens, trace

    def generate_beam(self, K, KT, TT, width: int = 5, max_length: int | None = None) -> tuple[list[int], DecodeTrace]:
        tokens, trace, _ = self.beam_search(K, KT, TT, width, max_length)
        return tokens, trace

    def beam_search(self, K, KT, TT, width: int = 5, max_length: int | None = None):
        """Length-synchronous beam search; returns tokens, trace and log-probability.

        Candidates are ranked by cumulative log-probability; ties go to the
        lower (hypothesis, token) index, which makes width 1 identical to
        greedy decoding.
        """
        if width < 1:
            raise ValueError("beam width must be at least 1")
        with nx.no_grad():
            enc, ctx, steps = self._single_context(K, KT, TT, max_length)
            beams = [Hypothesis([], 0.0, ctx.s0.data)]
            finished: list[Hypothesis] = []
            for t in range(steps):
                # each hypothesis is stepped on its own so its score is bitwise
                # the same as greedy decoding or score_sequence would give
                outs, states, rows = [], [], []
                for h in beams:
                    out, s = self._step(ctx, t, [h.tokens[-1] if h.tokens else BOS], Tensor(h.state))
                    outs.append(out)
                    states.append(s.data)
                    rows.append(h.logprob + self._logprobs(out.logits.data)[0])
                cand = np.stack(rows)
                flat = cand.reshape(-1)
                order = np.argsort(-flat, kind="stable")[:width]
                new_beams = []
                for k in order:
                    if not np.isfinite(flat[k]):
                        break
                    h_i, y = divmod(int(k), cand.shape[1])
                    parent = beams[h_i]
                    hyp = Hypothesis(
                        parent.tokens + [y],
                        float(flat[k]),
                        states[h_i],
                        parent.trace + [self._trace_step(ctx, t, y, outs[h_i], 0)],
                    )
                    if self.no_template and y == EOS:
                        hyp.finished = True
                        finished.append(hyp)
                    else:
                        new_beams.append(hyp)
                beams = new_beams
                if not beams:
                    break
            pool = finished + beams
            best = pool[0]
            for h in pool[1:]:
                if h.logprob > best.logprob:
                    best = h
        tokens = best.tokens[:-1] if best.finished else best.tokens
        return tokens, DecodeTrace(list(enc.keywords), best.trace), best.logprob

    def score_sequence(self, K, KT, TT, tokens: Sequence[int]) -> float:
        """Log-probability of ``tokens`` under inference-time scoring
        (PAD and BOS excluded from the distribution, as in decoding)."""
        with nx.no_grad():
            _, ctx, _ = self._single_context(K, KT, TT, len(tokens))
            s, y, total = ctx.s0, BOS, 0.0
            for t, tok in enumerate(tokens):
                out, s = self._step(ctx, t, [y], s)
                total += float(self._logprobs(out.logits.data)[0, tok])
                y = tok
        return total

    def generate(self, K, KT, TT, beam: int = 1, max_length: int | None = None) -> tuple[list[int], DecodeTrace]:
        if beam <= 1:
            return self.generate_greedy(K, KT, TT, max_length)
        return self.generate_beam(K, KT, TT, beam, max_length)
