"""Command-line interface: synthesis, training, streaming detection,
evaluation, benchmarking, and the geometry calculator.

Exit codes: 0 success (and, for eval/bench, thresholds met), 1 thresholds
not met, 2 invalid input or refused operation.
"""
from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import evaluation, fileio, modelio, synth
from .config import ENV_CONFIG_PATH, RunConfig, load_config
from .events import EventSpan
from .gate import ArtifactModel, fit_artifact_model
from .geometry import (
    DepthLevel,
    EyeConfig,
    GestureLabel,
    angle_delta,
    effective_focal_length,
    six_labels,
    stereo_disparity,
    vergence_angle,
)
from .gesture import classify_vergence_stream, fit_gesture_classifier
from .forest import ForestModel, predict
from .sigcond import Recording

GESTURE_KEYS = tuple(l.key for l in six_labels())


def _err(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return 2


def _load_pairs(args) -> list[tuple[Recording, list[EventSpan]]]:
    if len(args.recording) != len(args.events):
        raise ValueError("--recording and --events must be given in pairs")
    out = []
    for rp, ep in zip(args.recording, args.events):
        rec, _ = fileio.read_recording(rp)
        evs, _ = fileio.read_events(ep)
        out.append((rec, evs))
    return out


# ---------------------------------------------------------------------------
# synth


def cmd_synth(args, cfg: RunConfig) -> int:
    if args.artifact_kinds:
        kinds = args.artifact_kinds.split(",")
        unknown = [k for k in kinds if k not in synth.ARTIFACT_KINDS]
        if unknown:
            return _err(f"unknown artifact kinds: {', '.join(unknown)}")
        rec, truth = synth.gen_artifact_session(
            kinds,
            args.n_events,
            seed=args.seed,
            sample_rate=cfg.sample_rate,
            cue_interval_s=args.cue_interval,
            noise_floor_std_mv=args.noise_std,
        )
    else:
        try:
            spec = synth.SessionSpec(
                seed=args.seed,
                rounds=args.rounds,
                cue_interval_s=args.cue_interval,
                noise_floor_std_mv=args.noise_std,
                amplitude_gain=cfg.amplitude_gain_mv_per_deg,
                sample_rate=cfg.sample_rate,
                drift=synth.DriftSpec(gain_jitter=args.gain_jitter),
            )
        except ValueError as e:
            return _err(str(e))
        rec, truth = synth.gen_session(spec, EyeConfig(ipd_mm=cfg.ipd_mm))
    h = cfg.config_hash()
    fileio.write_recording(args.out_recording, rec, h)
    fileio.write_events(args.out_events, truth, h)
    print(f"wrote {args.out_recording} ({rec.duration_s:.1f} s) and "
          f"{args.out_events} ({len(truth)} events)")
    return 0


# ---------------------------------------------------------------------------
# train


def cmd_train(args, cfg: RunConfig) -> int:
    try:
        pairs = _load_pairs(args)
    except (OSError, ValueError) as e:
        return _err(str(e))
    if not pairs:
        return _err("no training inputs given")
    fspec = cfg.filter_spec()
    if args.kind == "gate":
        X: list[np.ndarray] = []
        y: list[int] = []
        for rec, evs in pairs:
            vergence_truth = any(e.label in GESTURE_KEYS for e in evs)
            rx, ry = evaluation.gate_rows_for_recording(rec, evs, vergence_truth, fspec)
            X += rx
            y += ry
        if not X:
            return _err("no active windows in the training inputs")
        try:
            model: ArtifactModel | ForestModel = fit_artifact_model(
                np.array(X), np.array(y, dtype=np.float64), l2=cfg.gate_l2
            )
        except ValueError as e:
            return _err(str(e))
        assert isinstance(model, ArtifactModel)
        p = np.array([model.probability(x) for x in X])
        pred = (p > 0.5).astype(int)
        yv = np.array(y)
        acc = float(np.mean(pred == yv))
        fn = int(np.sum((yv == 1) & (pred == 0)))
        fp = int(np.sum((yv == 0) & (pred == 1)))
        print(f"gate: {len(y)} windows ({int(yv.sum())} vergence), "
              f"train accuracy {acc:.4f}, FN {fn}, FP {fp}, "
              f"{model.n_iter} iterations")
    else:
        present: set[str] = set()
        for _, evs in pairs:
            for e in evs:
                if e.label not in GESTURE_KEYS:
                    return _err(f"unknown gesture label {e.label!r}")
                present.add(e.label)
        if not present:
            return _err("no labeled gesture events in the training inputs")
        keys = tuple(k for k in GESTURE_KEYS if k in present)
        X = []
        yk: list[int] = []
        for rec, evs in pairs:
            rx, ry = evaluation.gesture_rows_for_recording(rec, evs, keys, filter_spec=fspec)
            X += rx
            yk += ry
        if not X:
            return _err("no detectable gesture segments in the training inputs")
        model = fit_gesture_classifier(
            np.array(X),
            np.array(yk),
            keys,
            n_trees=cfg.n_trees,
            seed=cfg.seed,
            max_depth=cfg.max_depth,
            bootstrap=cfg.bootstrap,
        )
        stats = model.norm_stats
        Z = (np.array(X) - stats.mean) / stats.std if stats is not None else np.array(X)
        acc = float(np.mean(predict(model, Z) == np.array(yk)))
        print(f"gesture: {len(yk)} segments over {len(keys)} classes, "
              f"train accuracy {acc:.4f}")
    modelio.save_model(args.out, model, cfg.config_hash())
    print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# run


def cmd_run(args, cfg: RunConfig) -> int:
    try:
        rec, _ = fileio.read_recording(args.recording)
        gate_model, gate_hash = modelio.load_model(args.gate_model)
        forest_model, forest_hash = modelio.load_model(args.gesture_model)
    except (OSError, ValueError) as e:
        return _err(str(e))
    if not isinstance(gate_model, ArtifactModel):
        return _err(f"{args.gate_model} is not a gate model")
    if not isinstance(forest_model, ForestModel):
        return _err(f"{args.gesture_model} is not a gesture model")
    h = cfg.config_hash()
    stale = [
        (p, mh)
        for p, mh in ((args.gate_model, gate_hash), (args.gesture_model, forest_hash))
        if mh and mh != h
    ]
    if stale and not args.force:
        for p, mh in stale:
            print(
                f"error: {p} was trained under config {mh[:12]}..., the active "
                f"config hashes to {h[:12]}...; results would not be comparable. "
                f"Pass --force to run anyway.",
                file=sys.stderr,
            )
        return 2
    events = classify_vergence_stream(
        rec,
        gate_model,
        forest_model,
        filter_spec=cfg.filter_spec(),
        gate_multiplier=cfg.gate_multiplier,
        peak_threshold_mv=cfg.peak_threshold_mv,
        min_separation_s=cfg.min_separation_s,
        preamble=args.preamble,
        brow_threshold_mv=cfg.brow_threshold_mv,
        refractory_s=cfg.refractory_s,
        onset_frac=cfg.onset_walkback_frac,
        window_s=cfg.window_s,
        step_s=cfg.step_s,
    )
    if args.live:
        # detections are computed offline (they are deterministic either
        # way); live mode replays them at the stride cadence, each event
        # becoming visible when its source window completes
        t_start = time.monotonic()
        for e in events:
            due = e.window_start_s - rec.start_time + cfg.window_s
            lag = due - (time.monotonic() - t_start)
            if lag > 0:
                time.sleep(lag)
            print(f"{e.timestamp_s!r},{e.label},{e.confidence!r},{e.window_start_s!r}")
            sys.stdout.flush()
    else:
        for e in events:
            print(f"{e.timestamp_s!r},{e.label},{e.confidence!r},{e.window_start_s!r}")
    if args.out:
        fileio.write_detections(args.out, events, h)
        print(f"wrote {args.out} ({len(events)} events)", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# eval


def _write_report(report, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.txt"), "w") as f:
        f.write(report.to_text() + "\n")
    with open(os.path.join(out_dir, "confusion.csv"), "w") as f:
        f.write(report.confusion_csv())


def _dataset_from_pairs(pairs, keys=None) -> evaluation.LabeledDataset:
    present: set[str] = set()
    for _, evs in pairs:
        present.update(e.label for e in evs if e.label in GESTURE_KEYS)
    if keys is None:
        keys = tuple(k for k in GESTURE_KEYS if k in present)
    X: list[np.ndarray] = []
    y: list[int] = []
    g: list[int] = []
    for gid, (rec, evs) in enumerate(pairs):
        rx, ry = evaluation.gesture_rows_for_recording(rec, evs, keys)
        X += rx
        y += ry
        g += [gid] * len(rx)
    return evaluation.LabeledDataset(np.array(X), np.array(y), np.array(g), keys)


def cmd_eval(args, cfg: RunConfig) -> int:
    thr = cfg.thresholds
    try:
        if args.protocol == "kfold":
            if args.synthetic:
                ds = evaluation.make_gesture_dataset()
            else:
                ds = _dataset_from_pairs(_load_pairs(args))
            report = evaluation.kfold_cv(ds, k=args.k, seed=cfg.seed, n_trees=cfg.n_trees)
            _write_report(report, args.out_dir)
            print(report.to_text())
            return 0 if report.accuracy_mean >= thr.kfold_accuracy else 1
        if args.protocol == "cross-session":
            pairs = _load_pairs(args)
            if len(pairs) != 2:
                return _err("cross-session needs exactly two recording/events pairs")
            keys = None
            a = _dataset_from_pairs(pairs[:1], keys)
            b = _dataset_from_pairs(pairs[1:], a.class_keys)
            report = evaluation.cross_session_eval(a, b, n_trees=cfg.n_trees, seed=cfg.seed)
            _write_report(report, args.out_dir)
            print(report.to_text())
            return 0 if report.accuracy_mean >= thr.cross_session_accuracy else 1
        if args.protocol == "cross-user":
            pairs = _load_pairs(args)
            if len(pairs) < 2:
                return _err("cross-user needs at least two recording/events pairs")
            first = _dataset_from_pairs(pairs[:1])
            users = {"user0": first}
            for i, p in enumerate(pairs[1:], start=1):
                users[f"user{i}"] = _dataset_from_pairs([p], first.class_keys)
            report = evaluation.leave_one_user_out(users, n_trees=cfg.n_trees, seed=cfg.seed)
            _write_report(report, args.out_dir)
            print(report.to_text())
            return 0 if report.accuracy_mean >= thr.cross_user_accuracy else 1
        if args.protocol == "fpr":
            pairs = _load_pairs(args)
            if len(pairs) != 1:
                return _err("fpr needs exactly one recording/events pair")
            rec, evs = pairs[0]
            vergent = [e for e in evs if e.label in GESTURE_KEYS]
            if vergent:
                return _err(
                    f"fpr input must contain no vergence events; found {len(vergent)}"
                )
            gate_model, _ = modelio.load_model(args.gate_model)
            forest_model, _ = modelio.load_model(args.gesture_model)
            assert isinstance(gate_model, ArtifactModel)
            assert isinstance(forest_model, ForestModel)
            res = evaluation.false_positive_rate(
                rec, gate_model, forest_model, args.preamble, cfg.filter_spec()
            )
            rate_txt = "undefined (no active windows)" if res.undefined else f"{res.rate:.4f}"
            print(
                f"false positives: {res.n_events} events over "
                f"{res.n_active_windows} active windows; rate {rate_txt}; "
                f"{res.events_per_minute:.2f} events/min"
            )
            if args.preamble:
                return 0 if res.rate <= thr.fpr_preamble else 1
            return 0
        if args.protocol == "snr":
            pairs = _load_pairs(args)
            if len(pairs) != 1:
                return _err("snr needs exactly one recording/events pair")
            rec, evs = pairs[0]
            per, mean = evaluation.snr_db(rec, evs)
            for i, v in enumerate(per):
                tag = "excluded" if not np.isfinite(v) else f"{v:.2f} dB"
                print(f"event {i} [{evs[i].label}]: {tag}")
            print(f"mean SNR: {mean:.2f} dB over {int(np.isfinite(per).sum())} events")
            return 0 if mean >= thr.snr_min_db else 1
    except (OSError, ValueError) as e:
        return _err(str(e))
    return _err(f"unknown protocol {args.protocol!r}")


# ---------------------------------------------------------------------------
# bench


def cmd_bench(args, cfg: RunConfig) -> int:
    if args.windows <= 0:
        return _err("--windows must be positive")
    gate_ds = evaluation.make_gate_dataset(
        gesture_seeds=(1001, 1002), artifact_seeds=(2001,), rounds=2, n_artifact_events=20
    )
    gate_model = evaluation.train_gate(gate_ds)
    ges_ds = evaluation.make_gesture_dataset(seeds=(501, 502), rounds=3)
    forest_model = fit_gesture_classifier(
        ges_ds.features, ges_ds.labels, ges_ds.class_keys, n_trees=cfg.n_trees, seed=cfg.seed
    )
    mean, std = evaluation.latency_bench(
        gate_model, forest_model, n_windows=args.windows, filter_spec=cfg.filter_spec()
    )
    margin = cfg.step_s * 1000.0 - mean
    print(f"{mean:.3f} +/- {std:.3f} ms/window over {args.windows} windows")
    print(f"real-time margin vs {cfg.step_s * 1000.0:.0f} ms stride: {margin:.3f} ms")
    return 0 if mean < 100.0 else 1


# ---------------------------------------------------------------------------
# geometry


def cmd_geometry(args, cfg: RunConfig) -> int:
    eye = EyeConfig(ipd_mm=args.ipd if args.ipd is not None else cfg.ipd_mm)
    try:
        if args.gsub == "angle":
            v = vergence_angle(eye, args.dist)
        elif args.gsub == "delta":
            # reported as the convergence delta, far -> near, so it is positive
            label = GestureLabel(DepthLevel("far", args.far), DepthLevel("near", args.near))
            v = angle_delta(eye, label)
        elif args.gsub == "stereo":
            v = stereo_disparity(args.L, args.d, args.e)
        else:
            v = effective_focal_length(args.d, args.dprime)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        print("hint: distances must be positive; see --help", file=sys.stderr)
        return 2
    print(f"{v:.3f}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="vergekit",
        description="Two-channel EOG vergence gesture toolkit",
    )
    p.add_argument(
        "--config",
        default=None,
        help=f"config JSON path (default: ${ENV_CONFIG_PATH} or built-in defaults)",
    )
    sub = p.add_subparsers(dest="cmd", required=True)

    ps = sub.add_parser("synth", help="generate a synthetic session")
    ps.add_argument("--out-recording", required=True)
    ps.add_argument("--out-events", required=True)
    ps.add_argument("--seed", type=int, default=7)
    ps.add_argument("--rounds", type=int, default=10)
    ps.add_argument("--cue-interval", type=float, default=3.0)
    ps.add_argument("--noise-std", type=float, default=2.0)
    ps.add_argument("--gain-jitter", type=float, default=0.0)
    ps.add_argument(
        "--artifact-kinds",
        default=None,
        help="comma-separated kinds; emits an artifact-only session instead",
    )
    ps.add_argument("--n-events", type=int, default=20, help="artifact session events")
    ps.set_defaults(fn=cmd_synth)

    pt = sub.add_parser("train", help="fit the gate or the gesture classifier")
    pt.add_argument("--kind", choices=("gate", "gesture"), required=True)
    pt.add_argument("--recording", action="append", default=[], help="repeatable")
    pt.add_argument("--events", action="append", default=[], help="repeatable, paired")
    pt.add_argument("--out", required=True)
    pt.set_defaults(fn=cmd_train)

    pr = sub.add_parser("run", help="stream detection over a recording")
    pr.add_argument("--recording", required=True)
    pr.add_argument("--gate-model", required=True)
    pr.add_argument("--gesture-model", required=True)
    pr.add_argument("--out", default=None)
    mode = pr.add_mutually_exclusive_group()
    mode.add_argument("--live", action="store_true", help="pace output at the stride")
    mode.add_argument("--offline", action="store_true", help="emit immediately (default)")
    pr.add_argument("--preamble", action="store_true")
    pr.add_argument("--force", action="store_true", help="ignore config hash mismatch")
    pr.set_defaults(fn=cmd_run)

    pe = sub.add_parser("eval", help="run an evaluation protocol")
    pe.add_argument(
        "--protocol",
        choices=("kfold", "cross-session", "cross-user", "fpr", "snr"),
        required=True,
    )
    pe.add_argument("--recording", action="append", default=[])
    pe.add_argument("--events", action="append", default=[])
    pe.add_argument("--synthetic", action="store_true", help="use the built-in corpus")
    pe.add_argument("--k", type=int, default=5)
    pe.add_argument("--out-dir", default=".")
    pe.add_argument("--gate-model")
    pe.add_argument("--gesture-model")
    pe.add_argument("--preamble", action="store_true")
    pe.set_defaults(fn=cmd_eval)

    pb = sub.add_parser("bench", help="per-window latency benchmark")
    pb.add_argument("--windows", type=int, default=2500)
    pb.set_defaults(fn=cmd_bench)

    pg = sub.add_parser("geometry", help="vergence geometry calculator")
    gsub = pg.add_subparsers(dest="gsub", required=True)
    ga = gsub.add_parser("angle")
    ga.add_argument("--ipd", type=float, default=None)
    ga.add_argument("--dist", type=float, required=True, help="cm")
    gd = gsub.add_parser("delta")
    gd.add_argument("--ipd", type=float, default=None)
    gd.add_argument("--near", type=float, required=True, help="cm")
    gd.add_argument("--far", type=float, required=True, help="cm")
    gs = gsub.add_parser("stereo")
    gs.add_argument("--ipd", type=float, default=None)
    gs.add_argument("--L", type=float, required=True, help="screen distance, cm")
    gs.add_argument("--d", type=float, required=True, help="eye separation, cm")
    gs.add_argument("--e", type=float, required=True, help="target depth, cm")
    gf = gsub.add_parser("focal")
    gf.add_argument("--ipd", type=float, default=None)
    gf.add_argument("--d", type=float, required=True, help="object distance, cm")
    gf.add_argument("--dprime", type=float, required=True, help="image distance, cm")
    pg.set_defaults(fn=cmd_geometry)

    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (OSError, ValueError) as e:
        return _err(str(e))
    return args.fn(args, cfg)


if __name__ == "__main__":
    sys.exit(main())
