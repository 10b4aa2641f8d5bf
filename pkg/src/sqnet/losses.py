"""Loss functions: triplet/quadruplet hinges, contrastive, cross-entropy,
and the stage objectives composed from them.

The quadruplet margins must satisfy an exact identity: when all three
distances coincide, loss1 + loss2 == lambda in floating point, not just
approximately. split_margin nudges m1 by ulps until fl(m1 + m2) == lambda
(a plain alpha*lambda / (1-alpha)*lambda split misses for ~11% of inputs,
and even one compensated correction is not always enough because some
(m1, lambda) pairs admit no representable m2 at all). The hinges are then
evaluated as m + (d_a - d_b), so equal distances cancel exactly and leave
the margins themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .autodiff.tensor import (
    Tensor,
    euclidean_rowwise,
    hinge,
    mean_all,
    mul,
    softmax_cross_entropy,
    sum_axis,
)


def split_margin(lam: float, alpha: float) -> tuple[float, float]:
    """Split lam into (m1, m2) with m1 ~ alpha*lam and fl(m1 + m2) == lam.

    m1 lands within 2 ulps of alpha*lam.
    """
    if not (lam > 0 and math.isfinite(lam)):
        raise ValueError(f"lambda must be positive and finite, got {lam}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    m1 = alpha * lam
    for _ in range(64):
        m2 = lam - m1
        if m1 + m2 == lam:
            return m1, m2
        err = (m1 + m2) - lam
        m2c = m2 - err
        if m1 + m2c == lam:
            return m1, m2c
        m1 = math.nextafter(m1, 0.0 if err > 0 else math.inf)
    raise AssertionError(f"no exact margin split found for lam={lam!r}, alpha={alpha!r}")


@dataclass(frozen=True)
class QuadrupletLossParams:
    lam: float = 1.5  # overall margin budget (lambda)
    alpha: float = 0.1  # fraction of the budget spent on the first hinge

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"lam must be positive and finite, got {self.lam}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")

    @property
    def margins(self) -> tuple[float, float]:
        return split_margin(self.lam, self.alpha)


def triplet_loss(d_pos: float, d_neg: float, lam: float) -> float:
    """max(0, d_pos + lam - d_neg)."""
    return max(0.0, d_pos + lam - d_neg)


def quadruplet_losses(
    d_pos: float, d_pn: float, d_neg: float, params: QuadrupletLossParams
) -> tuple[float, float]:
    """The two hinge losses over the distance chain d_pos, d_pn, d_neg.

    loss1 pushes d_pos below d_pn by alpha*lam; loss2 pushes d_pn below
    d_neg by the rest. Equal distances return exactly the margin pair.
    """
    m1, m2 = params.margins
    loss1 = max(0.0, m1 + (d_pos - d_pn))
    loss2 = max(0.0, m2 + (d_pn - d_neg))
    return loss1, loss2


def contrastive_loss(e1: np.ndarray, e2: np.ndarray, same_class: bool, margin: float = 1.0) -> float:
    """Same class pulls squared distance to 0; different pushes beyond margin."""
    e1 = np.asarray(e1, dtype=np.float64)
    e2 = np.asarray(e2, dtype=np.float64)
    d2 = float(((e1 - e2) ** 2).sum())
    if same_class:
        return d2
    gap = margin - math.sqrt(d2)
    return max(0.0, gap) ** 2


def cross_entropy(logits: np.ndarray, label: int) -> float:
    """-log softmax(logits)[label], evaluated stably."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1:
        raise ValueError(f"logits must be 1-d, got shape {z.shape}")
    if not 0 <= label < z.size:
        raise ValueError(f"label {label} outside [0, {z.size})")
    m = z.max()
    return float(m + math.log(np.exp(z - m).sum()) - z[label])


def beta_schedule(epoch: int, beta_init: float = 2.0, beta_increment: float = 0.5) -> float:
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    return beta_init + epoch * beta_increment


# ---- graph-building variants used by the training loop ----


def contrastive_term(
    emb1: Tensor, emb2: Tensor, same_class: np.ndarray, margin: float = 1.0
) -> Tensor:
    """Mean contrastive loss over a paired batch; same_class is a bool array."""
    same = np.asarray(same_class, dtype=bool)
    diff = emb1 - emb2
    d2 = sum_axis(mul(diff, diff), 1)
    d = euclidean_rowwise(emb1, emb2)
    pushed = hinge(margin - d)
    per_pair = mul(d2, Tensor(same.astype(np.float64))) + mul(
        mul(pushed, pushed), Tensor((~same).astype(np.float64))
    )
    return mean_all(per_pair)


def stage2_objective(
    sketch_out: tuple[Tensor, Tensor],
    photo_out: tuple[Tensor, Tensor],
    sketch_labels: np.ndarray,
    photo_labels: np.ndarray,
    same_class: np.ndarray,
    beta: float = 2.0,
    margin: float = 1.0,
) -> tuple[Tensor, dict]:
    """CE(sketch) + CE(photo) + beta * contrastive, with a term breakdown."""
    sk_emb, sk_logits = sketch_out
    ph_emb, ph_logits = photo_out
    ce_sk = softmax_cross_entropy(sk_logits, sketch_labels)
    ce_ph = softmax_cross_entropy(ph_logits, photo_labels)
    con = contrastive_term(sk_emb, ph_emb, same_class, margin)
    total = ce_sk + ce_ph + mul(Tensor(float(beta)), con)
    terms = {
        "ce_sketch": ce_sk.item(),
        "ce_photo": ce_ph.item(),
        "contrastive": con.item(),
        "beta": float(beta),
    }
    return total, terms


def quadruplet_hinge_terms(
    anchor_emb: Tensor,
    pos_emb: Tensor,
    pn_emb: Tensor,
    neg_emb: Tensor,
    params: QuadrupletLossParams,
) -> tuple[Tensor, Tensor]:
    """Batch-mean (loss1, loss2) hinge tensors over anchored distances."""
    m1, m2 = params.margins
    d_pos = euclidean_rowwise(anchor_emb, pos_emb)
    d_pn = euclidean_rowwise(anchor_emb, pn_emb)
    d_neg = euclidean_rowwise(anchor_emb, neg_emb)
    loss1 = mean_all(hinge(m1 + (d_pos - d_pn)))
    loss2 = mean_all(hinge(m2 + (d_pn - d_neg)))
    return loss1, loss2


def stage3_objective(
    anchor_out: tuple[Tensor, Tensor],
    pos_out: tuple[Tensor, Tensor],
    pn_out: tuple[Tensor, Tensor],
    neg_out: tuple[Tensor, Tensor],
    labels: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray],
    params: QuadrupletLossParams,
    beta: float,
) -> tuple[Tensor, dict]:
    """Four cross-entropies plus beta * (loss1 + loss2)."""
    outs = (anchor_out, pos_out, pn_out, neg_out)
    names = ("anchor", "positive", "positive_negative", "negative")
    ces = [softmax_cross_entropy(out[1], lab) for out, lab in zip(outs, labels)]
    loss1, loss2 = quadruplet_hinge_terms(
        anchor_out[0], pos_out[0], pn_out[0], neg_out[0], params
    )
    total = ces[0] + ces[1] + ces[2] + ces[3] + mul(Tensor(float(beta)), loss1 + loss2)
    terms = {f"ce_{n}": ce.item() for n, ce in zip(names, ces)}
    terms.update({"loss1": loss1.item(), "loss2": loss2.item(), "beta": float(beta)})
    return total, terms
