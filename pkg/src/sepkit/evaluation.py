"""Separation metrics: SI-SDR(i) and BSS-eval SDR/SIR/SAR, plus batch evaluation.

BSS-eval follows the usual time-invariant-filter decomposition

    est = s_target + e_interf + e_artif

where ``s_target`` is the projection of the estimate onto ``filter_len``-tap
FIR filterings of its own reference and ``s_target + e_interf`` the projection
onto filterings of all references. The projections are solved from the
block-Toeplitz correlation system, with correlations computed by FFT.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import toeplitz

from .losses import pairwise_matrix, pit_from_matrix, si_sdr
from .signal import SourceSet, Waveform, read_wav

METRICS = ("si_sdr", "si_sdr_i", "sdr", "sir", "sar")
BSS_METRICS = ("sdr", "sir", "sar")
DB_CAP = 100.0
DEFAULT_FILTER_LEN = 512
_DUPLICATE_TOL = 1e-10


class SingularReferencesError(np.linalg.LinAlgError):
    pass


def cap_db(value: float) -> float:
    """Clamp a dB value to [-100, 100] for reporting."""
    return float(min(DB_CAP, max(-DB_CAP, value)))


def _db(num, den):
    if den == 0:
        return math.inf if num > 0 else math.nan
    if num == 0:
        return -math.inf
    return 10.0 * math.log10(num / den)


def _as_matrix(sources):
    if isinstance(sources, SourceSet):
        return sources.as_array()
    return np.atleast_2d(np.stack([np.asarray(s, dtype=np.float64).reshape(-1) for s in sources]))


def _check_references(refs):
    energy = np.einsum("jt,jt->j", refs, refs)
    for j, e in enumerate(energy):
        if e == 0:
            raise SingularReferencesError(f"reference {j} is all zeros")
    J = refs.shape[0]
    for i in range(J):
        for k in range(i + 1, J):
            corr = abs(np.dot(refs[i], refs[k])) / math.sqrt(energy[i] * energy[k])
            if corr > 1.0 - _DUPLICATE_TOL:
                raise SingularReferencesError(
                    f"references {i} and {k} are linearly dependent; the correlation system is singular"
                )


def _solve(G, D):
    try:
        return np.linalg.solve(G, D)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(G, D, rcond=None)[0]


def bss_decompose(refs, est, j: int, filter_len: int = DEFAULT_FILTER_LEN):
    """Split ``est`` into ``(s_target, e_interf, e_artif)`` against reference ``j``.

    All three have length ``T + filter_len - 1``; the estimate is zero-padded
    to that length.
    """
    R = _as_matrix(refs)
    e = np.asarray(est, dtype=np.float64).reshape(-1)
    J, T = R.shape
    L = int(filter_len)
    if L < 1:
        raise ValueError(f"filter_len must be positive, got {filter_len}")
    if e.size != T:
        raise ValueError(f"estimate has {e.size} samples, references have {T}")
    _check_references(R)
    n_out = T + L - 1
    nfft = 1 << int(math.ceil(math.log2(n_out)))
    Rf = np.fft.rfft(R, nfft)
    Ef = np.fft.rfft(e, nfft)
    # xcorr[i, k][tau] = sum_u R_i[u] R_k[u + tau]
    lags_pos = np.arange(L)
    G = np.empty((J * L, J * L))
    for i in range(J):
        for k in range(J):
            xc = np.fft.irfft(np.conj(Rf[i]) * Rf[k], nfft)
            pos = xc[lags_pos]  # tau = 0..L-1
            neg = xc[(-lags_pos) % nfft]  # tau = 0..-(L-1)
            # G[(i, a), (k, b)] = xcorr_ik[a - b]
            G[i * L:(i + 1) * L, k * L:(k + 1) * L] = toeplitz(pos, neg)
    D = np.empty(J * L)
    for i in range(J):
        D[i * L:(i + 1) * L] = np.fft.irfft(np.conj(Rf[i]) * Ef, nfft)[:L]

    def project(coeffs, idx):
        out = np.zeros(n_out)
        for c, i in zip(coeffs, idx):
            out += np.fft.irfft(Rf[i] * np.fft.rfft(c, nfft), nfft)[:n_out]
        return out

    c_target = _solve(G[j * L:(j + 1) * L, j * L:(j + 1) * L], D[j * L:(j + 1) * L])
    s_target = project([c_target], [j])
    c_all = _solve(G, D).reshape(J, L)
    p_all = project(list(c_all), range(J))
    e_pad = np.zeros(n_out)
    e_pad[:T] = e
    return s_target, p_all - s_target, e_pad - p_all


def bss_eval(refs, ests, filter_len: int = DEFAULT_FILTER_LEN):
    """SDR, SIR and SAR (dB, uncapped) of each estimate against the same-index reference.

    Returns three arrays of length J.
    """
    R = _as_matrix(refs)
    E = _as_matrix(ests)
    if R.shape != E.shape:
        raise ValueError(f"references {R.shape} and estimates {E.shape} differ in shape")
    J = R.shape[0]
    sdr, sir, sar = np.empty(J), np.empty(J), np.empty(J)
    for j in range(J):
        s_target, e_interf, e_artif = bss_decompose(R, E[j], j, filter_len)
        t2 = float(np.dot(s_target, s_target))
        i2 = float(np.dot(e_interf, e_interf))
        a2 = float(np.dot(e_artif, e_artif))
        noise = e_interf + e_artif
        sdr[j] = _db(t2, float(np.dot(noise, noise)))
        sir[j] = _db(t2, i2)
        ti = s_target + e_interf
        sar[j] = _db(float(np.dot(ti, ti)), a2)
    return sdr, sir, sar


def si_sdr_improvement(est, ref, mixture) -> float:
    """SI-SDR of the estimate minus SI-SDR of the unprocessed mixture."""
    return si_sdr(est, ref) - si_sdr(mixture, ref)


# -- batch evaluation -------------------------------------------------------


@dataclass
class UtteranceResult:
    utt_id: str
    permutation: tuple
    metrics: dict  # metric name -> per-source capped values


@dataclass
class EvalReport:
    metrics: tuple
    utterances: list = field(default_factory=list)
    skipped: list = field(default_factory=list)  # (utt_id, reason)

    @property
    def aggregates(self) -> dict:
        """Mean of every per-utterance per-source value; empty without utterances."""
        if not self.utterances:
            return {}
        out = {}
        for name in self.metrics:
            values = [v for u in self.utterances for v in u.metrics[name]]
            out[name] = math.fsum(values) / len(values)
        return out

    def records(self):
        for u in self.utterances:
            for name in self.metrics:
                for j, v in enumerate(u.metrics[name], start=1):
                    yield {"utt_id": u.utt_id, "source_index": j, "metric": name, "value": v}

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r) + "\n" for r in self.records())

    def to_table(self) -> str:
        lines = [f"utterances evaluated: {len(self.utterances)}", f"utterances skipped: {len(self.skipped)}"]
        agg = self.aggregates
        if agg:
            lines.append("")
            lines.append(f"{'metric':<10} {'mean (dB)':>10}")
            lines.append(f"{'-' * 10} {'-' * 10}")
            for name in self.metrics:
                lines.append(f"{name:<10} {agg[name]:>10.3f}")
        for utt_id, reason in self.skipped:
            lines.append(f"skipped {utt_id}: {reason}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> tuple[Path, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        jsonl = out_dir / "final_metrics.jsonl"
        txt = out_dir / "final_metrics.txt"
        jsonl.write_text(self.to_jsonl())
        txt.write_text(self.to_table())
        return jsonl, txt


def load_manifest(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def evaluate_utterance(utt_id: str, mixture: Waveform, refs: SourceSet, ests: SourceSet,
                       metrics: Sequence[str] = METRICS,
                       filter_len: int = DEFAULT_FILTER_LEN) -> UtteranceResult:
    """Align estimates by best mean SI-SDR, then compute ``metrics`` (capped)."""
    unknown = set(metrics) - set(METRICS)
    if unknown:
        raise ValueError(f"unknown metrics {sorted(unknown)}; expected a subset of {METRICS}")
    if ests.n_sources != refs.n_sources:
        raise ValueError(f"{ests.n_sources} estimates for {refs.n_sources} references")
    if ests.n_samples != refs.n_samples or len(mixture) != refs.n_samples:
        raise ValueError(
            f"length mismatch: mixture {len(mixture)}, references {refs.n_samples}, estimates {ests.n_samples}"
        )
    _, perm = pit_from_matrix(pairwise_matrix("neg_si_sdr", ests, refs), "mean", "exhaustive")
    aligned = ests.permuted(perm)
    values = {}
    if "si_sdr" in metrics:
        values["si_sdr"] = [si_sdr(e, r) for e, r in zip(aligned, refs)]
    if "si_sdr_i" in metrics:
        values["si_sdr_i"] = [si_sdr_improvement(e, r, mixture) for e, r in zip(aligned, refs)]
    if any(m in metrics for m in BSS_METRICS):
        sdr, sir, sar = bss_eval(refs, aligned, filter_len)
        for name, arr in (("sdr", sdr), ("sir", sir), ("sar", sar)):
            if name in metrics:
                values[name] = [float(v) for v in arr]
    ordered = {name: [cap_db(v) for v in values[name]] for name in METRICS if name in metrics}
    return UtteranceResult(utt_id, tuple(perm), ordered)


def evaluate_set(manifest, estimates_dir, metrics: Iterable[str] = METRICS,
                 filter_len: int = DEFAULT_FILTER_LEN) -> EvalReport:
    """Evaluate every manifest entry against ``estimates_dir/<utt_id>/s<j>.wav``.

    ``manifest`` is a path to a line-delimited JSON file or a list of records.
    Utterances with missing or mismatched estimate files are skipped and
    listed in ``report.skipped``.
    """
    metrics = tuple(m for m in METRICS if m in set(metrics))
    records = load_manifest(manifest) if isinstance(manifest, (str, os.PathLike)) else list(manifest)
    estimates_dir = Path(estimates_dir)
    report = EvalReport(metrics)
    for rec in records:
        utt_id = rec["utt_id"]
        try:
            mixture = read_wav(rec["mixture"])
            refs = SourceSet(tuple(read_wav(p) for p in rec["sources"]))
            est_paths = [estimates_dir / utt_id / f"s{j}.wav" for j in range(1, refs.n_sources + 1)]
            missing = [str(p) for p in est_paths if not p.exists()]
            if missing:
                raise FileNotFoundError(f"missing estimate file(s): {', '.join(missing)}")
            est_waves = [read_wav(p) for p in est_paths]
            for p, w in zip(est_paths, est_waves):
                if len(w) != refs.n_samples:
                    raise ValueError(f"{p} has {len(w)} samples, expected {refs.n_samples}")
            ests = SourceSet(tuple(est_waves))
            report.utterances.append(evaluate_utterance(utt_id, mixture, refs, ests, metrics, filter_len))
        except (FileNotFoundError, ValueError) as exc:
            report.skipped.append((utt_id, str(exc)))
    return report
