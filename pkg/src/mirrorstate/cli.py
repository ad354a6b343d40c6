"""Command-line front end: ``mirrorstate <subcommand> [options]``.

Every run writes its outputs plus a ``manifest.json`` echo into
``--out-dir``.  CSV files use 12 significant digits; figures are SVG.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import analysis, covariance, one_mode, spectra, steady_state, two_mode, wiener
from .config import ConfigError, load_params_file, table1, table1_path

TWO_PI = 2 * math.pi
PRESETS = ("fig8", "fig9", "fig10", "fig11", "fig12", "fig13")


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def parse_range(text: str) -> np.ndarray:
    """``"a:b:n"`` -> ``n`` evenly spaced values from ``a`` to ``b``."""
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b:n, got {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("n must be at least 1")
    return np.linspace(a, b, n)


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    return f"{float(x):.12g}"


def write_csv(path: Path, header, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "mirrorstate"
    import matplotlib.pyplot as plt

    return plt


def write_svg_lines(path: Path, x, ys: dict, xlabel: str, ylabel: str, logx=False) -> Path:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for label, y in ys.items():
        ax.plot(x, y, label=label)
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def write_svg_ellipses(path: Path, ellipses: dict, labels=("q", "p")) -> Path:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    t = np.linspace(0, TWO_PI, 256)
    ax.plot(math.sqrt(2) * np.cos(t), math.sqrt(2) * np.sin(t), "k--", lw=0.8, label="vacuum")
    for label, e in ellipses.items():
        pts = np.vstack([e.points, e.points[:1]])
        ax.plot(pts[:, 0], pts[:, 1], label=label)
    ax.set_aspect("equal")
    ax.set_xlabel(f"normalized {labels[0]}")
    ax.set_ylabel(f"normalized {labels[1]}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _pmap(fn, items, jobs: int):
    """Map preserving input order; process pool when ``jobs > 1``."""
    items = list(items)
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# covariance selection shared by several subcommands
# ---------------------------------------------------------------------------

def _covariances(p, delta, eta, filt="two-mode", ngamma=1.0, discard=None,
                 backend="residue", mode="pendulum"):
    m = spectra.build_model(p, delta, "two", eta)
    if filt == "two-mode":
        if backend == "quadrature":
            if discard:
                raise ValueError("pole discarding needs the residue backend")
            return covariance.quadrature_oracle(m, mode)
        return covariance.model_covariance(m, mode, discard)
    if mode != "pendulum":
        raise ValueError("one-mode filters exist only for the pendulum")
    filters = one_mode.one_mode_filters(p, delta, ngamma, eta)
    if backend == "quadrature":
        if discard:
            raise ValueError("pole discarding needs the residue backend")
        return covariance.quadrature_oracle(m, mode, filters)
    return covariance.filtered_covariance(m, filters, mode, discard)


class _Purity:
    """Picklable worker computing one purity."""

    def __init__(self, p, eta, filt, ngamma, discard, backend):
        self.args = (p, eta, filt, ngamma, discard, backend)

    def __call__(self, delta):
        p, eta, filt, ngamma, discard, backend = self.args
        return analysis.purity(_covariances(p, delta, eta, filt, ngamma, discard, backend))


class _NScan:
    def __init__(self, p, delta, eta, discard):
        self.args = (p, delta, eta, discard)

    def __call__(self, N):
        p, delta, eta, discard = self.args
        return float(one_mode.mismatched_nscan(p, delta, [N], eta, discard)[0])


class _Neg:
    def __init__(self, p, ratio, eta):
        self.args = (p, ratio, eta)

    def __call__(self, delta):
        p, ratio, eta = self.args
        r = analysis.negativity(p, delta, ratio, eta)
        return r.log_negativity, r.nu_min


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_steady(a, p, out):
    st = steady_state.steady_state(p, a.delta)
    q_exact, q_approx = steady_state.mirror_offset(p, a.delta)
    rows = [(k, v) for k, v in asdict(st).items()] + [("qbar_closed_form", q_exact)]
    files = [write_csv(out / "steady.csv", ("quantity", "value"), rows)]
    sig = np.linspace(0, p.beam_length, a.points)
    ex, ap, _ = steady_state.beam_profile(p, a.delta, sig)
    files.append(write_csv(out / "beam_profile.csv", ("sigma_cm", "Xbar_exact_cm", "Xbar_approx_cm"),
                           zip(sig, ex, ap)))
    print(f"n_c = {st.photon_number:.12g}  qbar = {st.qbar:.12g} cm")
    return files


def cmd_modes(a, p, out):
    rows = []
    for d in a.delta_range:
        nm = two_mode.normal_modes(p, d)
        mc = two_mode.couplings_lowfreq(p, d)
        rows.append((d, nm.w0_plus / TWO_PI, nm.w0_minus / TWO_PI, nm.gamma_r / TWO_PI,
                     math.sqrt(mc.wAR2) / TWO_PI, math.sqrt(mc.DBR2) / TWO_PI,
                     two_mode.separation_ratio(mc)))
    hdr = ("delta", "w0p_Hz", "w0m_Hz", "gamma_r_Hz", "wAR_Hz", "DBR_Hz",
           "separation_ratio")
    files = [write_csv(out / "modes.csv", hdr, rows)]
    print(f"Gamma_r(Omega)/Gamma (derived) = "
          f"{two_mode.derived_gamma_r_at_pendulum(p) / p.mech_decay:.6g}")
    return files


def cmd_spectra(a, p, out):
    f = a.freq_range
    w = TWO_PI * f
    m = spectra.build_model(p, a.delta, "two", a.eta)
    cols = {
        "S_XX": m.spectrum("X", "X", w).real,
        "S_qq": m.spectrum("q", "q", w).real,
        "S_pp": m.spectrum("p", "p", w).real,
        "S_qp": m.spectrum("q", "p", w).real,
        "S_phiphi": m.spectrum("phi", "phi", w).real,
        "S_pipi": m.spectrum("pi", "pi", w).real,
        "ReS_Xq": m.spectrum("X", "q", w).real,
        "ImS_Xq": m.spectrum("X", "q", w).imag,
    }
    rows = zip(f, *cols.values())
    files = [write_csv(out / "spectra.csv", ("freq_Hz", *cols), rows)]
    files.append(write_svg_lines(out / "spectra.svg", f,
                                 {"S_XX": cols["S_XX"]}, "frequency (Hz)", "S_XX", logx=True))
    return files


def cmd_filter(a, p, out):
    f = a.freq_range
    m = spectra.build_model(p, a.delta, "two", a.eta)
    target = {"dq": "q", "dp": "p", "dphi": "phi", "dpi": "pi"}[a.target]
    H = wiener.wiener_filter(m, target)(TWO_PI * f)
    return [write_csv(out / f"filter_{a.target}.csv", ("freq_Hz", "ReH", "ImH", "absH"),
                      zip(f, H.real, H.imag, np.abs(H)))]


def cmd_covariance(a, p, out):
    filt = a.filter
    rows = []
    modes = ["pendulum"] if filt == "one-mode" else ["pendulum", "rotational"]
    for mode in modes:
        V = _covariances(p, a.delta, a.eta, filt, a.ngamma, a.discard, a.backend, mode)
        Vn = V.normalized()
        pur = analysis.purity(Vn)
        ev = np.linalg.eigvalsh(Vn)
        print(f"{mode}: normalized V = [[{Vn[0, 0]:.12g}, {Vn[0, 1]:.12g}], "
              f"[{Vn[1, 0]:.12g}, {Vn[1, 1]:.12g}]]  purity = {pur:.12g}")
        rows.append((mode, V.v11, V.v12, V.v22, Vn[0, 0], Vn[0, 1], Vn[1, 1], ev[0], ev[1], pur))
    hdr = ("mode", "V11", "V12", "V22", "V11_n", "V12_n", "V22_n", "eig_min", "eig_max",
           "purity")
    return [write_csv(out / "covariance.csv", hdr, rows)]


def cmd_sweep(a, p, out):
    deltas = a.delta_range
    two = _pmap(_Purity(p, a.eta, "two-mode", 1.0, a.discard, a.backend), deltas, a.jobs)
    one = _pmap(_Purity(p, a.eta, "one-mode", a.ngamma, a.discard, a.backend), deltas, a.jobs)
    files = [write_csv(out / "sweep.csv", ("delta", "purity_two_mode", "purity_one_mode"),
                       zip(deltas, two, one))]
    files.append(write_svg_lines(out / "sweep.svg", deltas,
                                 {"two-mode": two, f"one-mode ({a.ngamma:g} Gamma)": one},
                                 "delta", "purity"))
    return files


def cmd_nscan(a, p, out):
    Ns = a.n_range
    pur = _pmap(_NScan(p, a.delta, a.eta, a.discard), Ns, a.jobs)
    print(f"argmax N = {Ns[int(np.argmax(pur))]:.12g}")
    return [write_csv(out / "nscan.csv", ("N", "purity"), zip(Ns, pur)),
            write_svg_lines(out / "nscan.svg", Ns, {"purity": pur}, "N", "purity")]


def cmd_wigner(a, p, out):
    labels = ("q", "p") if a.mode == "pendulum" else ("phi", "pi")
    filt = "two-mode" if a.filter in ("two", "two-mode") else "one-mode"
    V = _covariances(p, a.delta, a.eta, filt, a.ngamma, None, a.backend, a.mode)
    e = analysis.wigner_ellipse(V, a.points)
    path = Path(a.out_file) if a.out_file else out / f"wigner_{a.mode}_{filt}.svg"
    files = [write_svg_ellipses(path, {filt: e}, labels)]
    files.append(write_csv(out / f"wigner_{a.mode}_{filt}.csv", labels, e.points))
    return files


def cmd_negativity(a, p, out):
    res = _pmap(_Neg(p, a.kappa_ratio, a.eta), a.delta_range, a.jobs)
    rows = [(d, en, nu) for d, (en, nu) in zip(a.delta_range, res)]
    return [write_csv(out / "negativity.csv", ("delta", "EN", "nu_min"), rows),
            write_svg_lines(out / "negativity.svg", a.delta_range,
                            {"E_N": [r[1] for r in rows]}, "delta", "log negativity")]


def cmd_preset(a, p, out):
    name = a.name
    ratio = p.mech_decay_rot / p.mech_decay
    if name == "fig8":
        deltas = np.linspace(0.02, 1.0, a.points)
        two = _pmap(_Purity(p, a.eta, "two-mode", 1.0, None, a.backend), deltas, a.jobs)
        one = _pmap(_Purity(p, a.eta, "one-mode", 1.0, None, a.backend), deltas, a.jobs)
        one418 = _pmap(_Purity(p, a.eta, "one-mode", ratio, None, a.backend), deltas, a.jobs)
        hdr = ("delta", "purity_two_mode", "purity_one_mode", "purity_one_mode_418G")
        return [write_csv(out / "fig8.csv", hdr, zip(deltas, two, one, one418)),
                write_svg_lines(out / "fig8.svg", deltas,
                                {"two-mode": two, "one-mode": one,
                                 f"one-mode {ratio:.3g} Gamma": one418},
                                "delta", "purity")]
    if name in ("fig9", "fig10"):
        mode = "pendulum" if name == "fig9" else "rotational"
        labels = ("q", "p") if mode == "pendulum" else ("phi", "pi")
        ell = {"two-mode": analysis.wigner_ellipse(
            _covariances(p, 0.2, a.eta, "two-mode", mode=mode, backend=a.backend))}
        if mode == "pendulum":
            ell["one-mode"] = analysis.wigner_ellipse(
                _covariances(p, 0.2, a.eta, "one-mode", backend=a.backend))
        files = [write_svg_ellipses(out / f"{name}.svg", ell, labels)]
        rows = []
        for k, e in ell.items():
            rows += [(k, x, y) for x, y in e.points]
        files.append(write_csv(out / f"{name}.csv", ("filter", *labels), rows))
        return files
    if name in ("fig11", "fig13"):
        Ns = np.arange(1, 11) if name == "fig11" else np.arange(1, 101)
        discard = "rotational" if name == "fig11" else None
        pur = _pmap(_NScan(p, 0.2, a.eta, discard), Ns, a.jobs)
        print(f"argmax N = {int(Ns[int(np.argmax(pur))])}")
        return [write_csv(out / f"{name}.csv", ("N", "purity"), zip(Ns, pur)),
                write_svg_lines(out / f"{name}.svg", Ns, {"purity": pur}, "N", "purity")]
    if name == "fig12":
        deltas = np.linspace(0.01, 0.5, a.points)
        res = _pmap(_Neg(p, 3.0, a.eta), deltas, a.jobs)
        return [write_csv(out / "fig12.csv", ("delta", "EN", "nu_min"),
                          [(d, en, nu) for d, (en, nu) in zip(deltas, res)]),
                write_svg_lines(out / "fig12.svg", deltas, {"E_N": [r[0] for r in res]},
                                "delta", "log negativity")]
    raise ValueError(f"unknown preset {name!r}")


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mirrorstate",
                                 description="Conditional states of a suspended mirror.")
    ap.add_argument("--config", default=None,
                    help="parameter file (default: the shipped table1.cfg)")
    ap.add_argument("--out-dir", default="out", help="output directory")
    ap.add_argument("--backend", choices=("residue", "quadrature"), default="residue",
                    help="covariance integration backend")
    ap.add_argument("--eta", type=float, default=None, help="detection efficiency override")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("steady", help="steady state and beam profile")
    s.add_argument("--delta", type=float, default=None)
    s.add_argument("--points", type=int, default=101)
    s.set_defaults(func=cmd_steady)

    s = sub.add_parser("modes", help="normal modes and structural damping vs detuning")
    s.add_argument("--delta-range", type=parse_range, default=parse_range("0:1:21"))
    s.set_defaults(func=cmd_modes)

    s = sub.add_parser("spectra", help="spectral densities vs frequency")
    s.add_argument("--delta", type=float, default=None)
    s.add_argument("--freq-range", type=parse_range, default=parse_range("1:3000:600"))
    s.set_defaults(func=cmd_spectra)

    s = sub.add_parser("filter", help="Wiener filter response")
    s.add_argument("--delta", type=float, default=None)
    s.add_argument("--target", choices=("dq", "dp", "dphi", "dpi"), default="dq")
    s.add_argument("--freq-range", type=parse_range, default=parse_range("1:3000:600"))
    s.set_defaults(func=cmd_filter)

    s = sub.add_parser("covariance", help="normalized conditional covariances and purity")
    s.add_argument("--delta", type=float, default=None)
    s.add_argument("--discard", choices=("rotational", "pendulum"), default=None)
    s.add_argument("--filter", choices=("two-mode", "one-mode"), default="two-mode")
    s.add_argument("--ngamma", type=float, default=1.0)
    s.set_defaults(func=cmd_covariance)

    s = sub.add_parser("sweep", help="purity vs detuning")
    s.add_argument("--delta-range", type=parse_range, default=parse_range("0.02:1:50"))
    s.add_argument("--discard", choices=("rotational", "pendulum"), default=None)
    s.add_argument("--ngamma", type=float, default=1.0)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("nscan", help="purity under one-mode filters with N Gamma")
    s.add_argument("--delta", type=float, default=None)
    s.add_argument("--n-range", type=parse_range, default=parse_range("1:100:100"))
    s.add_argument("--discard", choices=("rotational", "pendulum"), default=None)
    s.set_defaults(func=cmd_nscan)

    s = sub.add_parser("wigner", help="Wigner-function contour as SVG")
    s.add_argument("--delta", type=float, default=None)
    s.add_argument("--mode", choices=("pendulum", "rotational"), default="pendulum")
    s.add_argument("--filter", choices=("one", "two", "one-mode", "two-mode"), default="two")
    s.add_argument("--ngamma", type=float, default=1.0)
    s.add_argument("--points", type=int, default=256)
    s.add_argument("--out", dest="out_file", default=None)
    s.set_defaults(func=cmd_wigner)

    s = sub.add_parser("negativity", help="two-mirror logarithmic negativity vs detuning")
    s.add_argument("--delta-range", type=parse_range, default=parse_range("0.01:0.5:50"))
    s.add_argument("--kappa-ratio", type=float, default=3.0)
    s.set_defaults(func=cmd_negativity)

    s = sub.add_parser("preset", help="figure-reproduction presets")
    s.add_argument("name", choices=PRESETS)
    s.add_argument("--points", type=int, default=50)
    s.set_defaults(func=cmd_preset)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    try:
        p = load_params_file(a.config) if a.config else table1()
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if getattr(a, "delta", "absent") is None:
        a.delta = p.detuning_norm
    out = Path(a.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        files = a.func(a, p, out)
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    manifest = {
        "config": str(a.config or table1_path().name),
        "subcommand": a.command,
        "arguments": {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                      for k, v in vars(a).items() if k not in ("func",)},
        "backend": a.backend,
        "eta": a.eta if a.eta is not None else p.detection_eff,
        "outputs": [str(Path(f).name) for f in files],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8")
    for f in files:
        print(f"wrote {f}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
