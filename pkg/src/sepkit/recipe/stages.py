"""Recipe stages 0-4: provenance, generation, manifests, separation, evaluation.

Directory layout under the recipe root::

    data/{train,dev,test}.jsonl      stage 2 manifests
    exp/<name>/estimates/<utt>/      stage 3 output
    exp/<name>/final_metrics.*       stage 4 output
    logs/                            per-stage logs
"""
from __future__ import annotations

import json
import logging
import shutil
from pathlib import Path

import numpy as np

from ..evaluation import evaluate_set
from ..filterbanks import (
    apply_mask,
    encode,
    make_analytic_free_filterbank,
    make_free_filterbank,
    make_sinc_filterbank,
    make_stft_filterbank,
)
from ..masking import oracle_masks, oracle_separate
from ..phase import PhaseReconConfig, griffin_lim, misi
from ..signal import SourceSet, Waveform, WavFormatError, make_mixture, read_wav, write_wav
from .config import SEPARATION_METHODS, dump_config
from .synth import GENERATORS, background_noise, utterance_rng

log = logging.getLogger("sepkit.recipe")

SPLITS = (("train", 0.8), ("dev", 0.1), ("test", 0.1))
PEAK = 0.9


class StageError(RuntimeError):
    def __init__(self, stage: int, message: str):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage


def split_sizes(n: int) -> dict:
    n_train = int(round(SPLITS[0][1] * n))
    n_dev = int(round(SPLITS[1][1] * n))
    return {"train": n_train, "dev": n_dev, "test": n - n_train - n_dev}


def _root_dirs(root):
    root = Path(root)
    return root / "data", root / "logs"


def build_filterbank(cfg: dict):
    fbc = cfg["filterbank"]
    kind = fbc["kind"]
    if kind == "stft":
        return make_stft_filterbank(fbc["n_fft"], fbc["hop"], fbc["window"])
    if kind == "free":
        return make_free_filterbank(fbc["n_filters"], fbc["kernel_size"], fbc["stride"], fbc["seed"])
    if kind == "analytic_free":
        return make_analytic_free_filterbank(fbc["n_filters"], fbc["kernel_size"], fbc["stride"], fbc["seed"])
    if kind == "sinc":
        return make_sinc_filterbank(
            fbc["n_filters"], fbc["kernel_size"], fbc["stride"], cfg["data"]["sample_rate_hz"],
            fbc["min_low_hz"], fbc["min_band_hz"],
        )
    raise ValueError(f"unknown filterbank kind {kind!r}")


# -- stage 0 ----------------------------------------------------------------


def stage0_download(cfg: dict, root) -> None:
    print("stage 0: nothing to download; stage 1 synthesises seeded mixtures "
          f"(seed={cfg['main']['seed']}, generator={cfg['data']['generator']}).")


# -- stage 1 ----------------------------------------------------------------


def generate_utterance(cfg: dict, utt_id: str):
    """Synthesise one mixture; returns (mixture, rescaled sources, snrs, noise_snr)."""
    data = cfg["data"]
    rate = data["sample_rate_hz"]
    n = int(round(data["utterance_seconds"] * rate))
    rng = utterance_rng(cfg["main"]["seed"], utt_id)
    gen = GENERATORS[data["generator"]]
    sources = SourceSet(tuple(Waveform(gen(rng, j, n, rate), rate) for j in range(data["n_sources"])))
    lo, hi = data["snr_range_db"]
    snrs = [float(v) for v in rng.uniform(lo, hi, size=data["n_sources"] - 1)]
    noise = noise_snr = None
    if data["noise_enabled"]:
        nlo, nhi = data["noise_snr_range_db"]
        noise_snr = float(rng.uniform(nlo, nhi))
        noise = Waveform(background_noise(rng, n, rate), rate)
    mixture, rescaled = make_mixture(sources, snrs, noise, noise_snr)
    # One gain for everything keeps the mixture equal to the sum of its parts.
    peak = max(np.max(np.abs(mixture.samples)), np.max(np.abs(rescaled.as_array())))
    gain = PEAK / peak
    mixture = mixture.with_samples(gain * mixture.samples)
    rescaled = SourceSet(tuple(s.with_samples(gain * s.samples) for s in rescaled))
    return mixture, rescaled, snrs, noise_snr


def stage1_generate(cfg: dict, root) -> None:
    storage = Path(cfg["main"]["storage_dir"])
    if cfg["data"]["n_sources"] < 2:
        raise StageError(1, "n_sources must be >= 2")
    try:
        storage.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StageError(1, f"cannot create storage directory {storage}: {exc}") from exc
    for split, count in split_sizes(cfg["data"]["n_utterances"]).items():
        split_dir = storage / split
        if split_dir.exists():
            shutil.rmtree(split_dir)
        split_dir.mkdir(parents=True)
        info_lines = []
        for i in range(count):
            utt_id = f"{split}_{i:05d}"
            mixture, sources, snrs, noise_snr = generate_utterance(cfg, utt_id)
            utt_dir = split_dir / utt_id
            utt_dir.mkdir()
            write_wav(mixture, utt_dir / "mix.wav", "int16")
            for j, s in enumerate(sources, start=1):
                write_wav(s, utt_dir / f"s{j}.wav", "int16")
            info_lines.append(json.dumps({
                "utt_id": utt_id,
                "n_samples": len(mixture),
                "snrs_db": snrs,
                "noise_snr_db": noise_snr,
                "seed": cfg["main"]["seed"],
            }))
        (split_dir / "mixture_info.jsonl").write_text("".join(line + "\n" for line in info_lines))
        log.info("stage 1: wrote %d %s utterances to %s", count, split, split_dir)


# -- stage 2 ----------------------------------------------------------------


def stage2_manifest(cfg: dict, root) -> None:
    storage = Path(cfg["main"]["storage_dir"])
    data_dir, _ = _root_dirs(root)
    data_dir.mkdir(parents=True, exist_ok=True)
    J = cfg["data"]["n_sources"]
    problems = []
    manifests = {}
    for split, _ in SPLITS:
        info_path = storage / split / "mixture_info.jsonl"
        if not info_path.exists():
            raise StageError(2, f"{info_path} not found; run stage 1 first")
        records = []
        for line in info_path.read_text().splitlines():
            info = json.loads(line)
            utt_dir = storage / split / info["utt_id"]
            paths = [utt_dir / "mix.wav"] + [utt_dir / f"s{j}.wav" for j in range(1, J + 1)]
            for p in paths:
                try:
                    n = len(read_wav(p))
                except (OSError, WavFormatError, ValueError) as exc:
                    problems.append(f"{p}: {exc}")
                    continue
                if n != info["n_samples"]:
                    problems.append(f"{p}: {n} samples, expected {info['n_samples']}")
            records.append({
                "utt_id": info["utt_id"],
                "mixture": str(paths[0]),
                "sources": [str(p) for p in paths[1:]],
                "n_samples": info["n_samples"],
                "snrs_db": info["snrs_db"],
                "noise_snr_db": info["noise_snr_db"],
                "seed": info["seed"],
            })
        manifests[split] = records
    if problems:
        raise StageError(2, "invalid audio files:\n  " + "\n  ".join(problems))
    for split, records in manifests.items():
        path = data_dir / f"{split}.jsonl"
        path.write_text("".join(json.dumps(r) + "\n" for r in records))
        log.info("stage 2: %s has %d utterances", path, len(records))


# -- stage 3 ----------------------------------------------------------------


def separate_utterance(cfg: dict, fb, mixture: Waveform, truth: SourceSet) -> SourceSet:
    sep = cfg["separation"]
    method = sep["method"]
    if method.startswith("oracle:"):
        return oracle_separate(mixture, truth, fb, method.split(":", 1)[1])
    if fb.kind != "stft":
        raise ValueError(f"method {method} needs an stft filterbank, got {fb.kind}")
    pcfg = PhaseReconConfig(n_iters=sep["n_iters"], momentum=sep["momentum"], init_phase=sep["init_phase"])
    if method == "misi":
        mags = [np.abs(encode(fb, s).frames) for s in truth]
        return misi(mixture, mags, fb, pcfg)
    if method == "griffin_lim_oracle":
        X = encode(fb, mixture)
        masks = oracle_masks([encode(fb, s) for s in truth], "irm")
        out = []
        for m in masks:
            target = np.abs(apply_mask(X, m, "magnitude").frames)
            y, _ = griffin_lim(target, fb, pcfg, n_samples=len(mixture),
                               sample_rate_hz=mixture.sample_rate_hz, init_rep=X)
            out.append(y)
        return SourceSet(tuple(out))
    raise ValueError(f"unknown separation method {method!r}")


def stage3_separate(cfg: dict, root) -> None:
    method = cfg["separation"]["method"]
    if method not in SEPARATION_METHODS:
        raise StageError(3, f"unknown separation method {method!r}; expected one of {SEPARATION_METHODS}")
    data_dir, log_dir = _root_dirs(root)
    manifest = data_dir / "test.jsonl"
    if not manifest.exists():
        raise StageError(3, f"{manifest} not found; run stage 2 first")
    exp_dir = Path(cfg["main"]["exp_dir"])
    est_root = exp_dir / "estimates"
    if est_root.exists():
        shutil.rmtree(est_root)
    est_root.mkdir(parents=True)
    dump_config(cfg, exp_dir / "conf_resolved.yml")
    fb = build_filterbank(cfg)
    log_dir.mkdir(parents=True, exist_ok=True)
    failures = []
    records = [json.loads(line) for line in manifest.read_text().splitlines() if line.strip()]
    for rec in records:
        utt_id = rec["utt_id"]
        try:
            mixture = read_wav(rec["mixture"])
            truth = SourceSet(tuple(read_wav(p) for p in rec["sources"]))
            estimates = separate_utterance(cfg, fb, mixture, truth)
            out_dir = est_root / utt_id
            out_dir.mkdir()
            for j, est in enumerate(estimates, start=1):
                write_wav(est, out_dir / f"s{j}.wav", "float32")
        except Exception as exc:  # noqa: BLE001 - logged per utterance, stage continues
            failures.append(f"{utt_id}: {type(exc).__name__}: {exc}")
    (log_dir / "stage3_failures.log").write_text("".join(f + "\n" for f in failures))
    log.info("stage 3: separated %d/%d utterances with %s", len(records) - len(failures), len(records), method)
    if failures:
        raise StageError(3, f"{len(failures)} utterance(s) failed; see {log_dir / 'stage3_failures.log'}")


# -- stage 4 ----------------------------------------------------------------


def stage4_evaluate(cfg: dict, root):
    data_dir, _ = _root_dirs(root)
    manifest = data_dir / "test.jsonl"
    if not manifest.exists():
        raise StageError(4, f"{manifest} not found; run stage 2 first")
    exp_dir = Path(cfg["main"]["exp_dir"])
    est_root = exp_dir / "estimates"
    if not est_root.is_dir():
        raise StageError(4, f"no estimates in {est_root}; run stage 3 first")
    ev = cfg["evaluation"]
    report = evaluate_set(manifest, est_root, ev["metrics"], ev["filter_len"])
    report.write(exp_dir)
    print(report.to_table(), end="")
    return report


STAGES = (stage0_download, stage1_generate, stage2_manifest, stage3_separate, stage4_evaluate)
