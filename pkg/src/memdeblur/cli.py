"""Command-line entry point.

Every flag can also be given in a ``--config`` file of ``key = value`` lines
(keys are flag names without the leading dashes); flags on the command line
take precedence.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .conv_op import ConvOperator, blur, check_nonsingular, singular_extrema
from .fista_reform import fista_solve
from .image_core import (Image, Kernel, SymbologyMask, add_gaussian_noise, psnr, read_image,
                         read_kernel, write_image, write_kernel)
from .kernel_est import DEFAULT_GAMMA, KernelProblem, blind_deblur, estimate_kernel
from .mem_dual import DEFAULT_ALPHA, SolverConfig, deconvolve
from .postprocess import PipelineConfig, parse_post, parse_pre
from .priors import DEFAULT_EPSILON, DEFAULT_POISSON_RATE, PriorSpec
from .stability_check import fidelity_csv, fidelity_sweep, verify_stability

log = logging.getLogger("memdeblur")


def _kernel_from_args(args, default=None) -> Kernel:
    if getattr(args, "kernel_file", None):
        return read_kernel(args.kernel_file)
    if getattr(args, "gaussian", None) is not None:
        size = args.size or (2 * int(np.ceil(3 * args.gaussian)) + 1)
        return Kernel.gaussian(size, args.gaussian)
    if getattr(args, "motion", None):
        try:
            length, angle = (float(v) for v in args.motion.split(","))
        except ValueError as exc:
            raise ValueError(f"--motion expects LENGTH,ANGLE, got {args.motion!r}") from exc
        return Kernel.motion(length, angle, args.size)
    if default is not None:
        return default
    raise ValueError("no kernel given (use --kernel-file, --gaussian or --motion)")


def _solver_cfg(args) -> SolverConfig:
    return SolverConfig(memory=args.lbfgs_memory, tol=args.tol, max_iter=args.max_iters)


def _prior(args) -> PriorSpec:
    return PriorSpec.parse(args.prior, epsilon=args.epsilon)


def _pipeline(args) -> PipelineConfig:
    return PipelineConfig(pre=parse_pre(args.pre), post=parse_post(args.post),
                          solver=getattr(args, "solver", "dual"),
                          invert_intensity=getattr(args, "invert_intensity", False))


def _report_psnr(label, img, args):
    if getattr(args, "truth", None):
        truth = read_image(args.truth)
        print(f"{label} PSNR: {psnr(img.clamped(), truth):.4f} dB")


def cmd_blur(args):
    img = read_image(args.input)
    kernel = _kernel_from_args(args)
    out = add_gaussian_noise(blur(img, kernel), args.noise, args.seed)
    write_image(out, args.output)
    kpath = args.kernel_out or str(Path(args.output).with_suffix(".kernel.txt"))
    write_kernel(kernel, kpath)
    log.info("wrote %s and %s", args.output, kpath)


def _deblur_image(b: Image, kernel: Kernel, args, pipe: PipelineConfig) -> Image:
    op = ConvOperator(kernel, b.height, b.width)
    if not check_nonsingular(op):
        log.warning("blur operator is numerically singular (sigma_min %.3g); proceeding",
                    singular_extrema(op)[0])
    prior = _prior(args)
    if pipe.solver == "fista":
        planes = []
        for c in range(b.channels):
            res = fista_solve(op, b.channel(c), prior.build(op.size), args.alpha, args.fista_iters)
            planes.append(res.x.reshape(b.height, b.width))
        return Image.from_channels(planes)
    out, states = deconvolve(b, kernel, prior, args.alpha, _solver_cfg(args), full_output=True)
    for c, s in enumerate(states):
        log.info("channel %d: %d iterations, |grad|_inf %.3g, %s", c, s.iterations, s.grad_norm, s.message)
    return out


def cmd_deconv(args):
    pipe = _pipeline(args)
    b = pipe.run_pre(read_image(args.input))
    if pipe.invert_intensity:
        b = Image(1.0 - b.data)
    raw = _deblur_image(b, read_kernel(args.kernel), args, pipe)
    if pipe.invert_intensity:
        raw = Image(1.0 - raw.data)
    out = pipe.run_post(raw)
    _report_psnr("raw", raw, args)
    _report_psnr("postprocessed", out, args)
    if args.raw_output:
        write_image(raw, args.raw_output)
    write_image(out, args.output)


def _symbology(args, b: Image):
    if args.k is None:
        raise ValueError("--k (kernel size) is required")
    mask = SymbologyMask(read_image(args.mask).to_gray() > 0)
    mask.check_matches(b)
    return mask, read_image(args.symbology)


def cmd_estimate_kernel(args):
    b = read_image(args.input)
    mask, sym = _symbology(args, b)
    kp = KernelProblem(sym.to_gray(), b.to_gray(), mask, args.k, args.gamma,
                       args.kernel_prior, args.epsilon, args.poisson_rate)
    kernel = estimate_kernel(kp, _solver_cfg(args))
    write_kernel(kernel, args.output)


def cmd_blind(args):
    pipe = _pipeline(args)
    b = read_image(args.input)
    mask, sym = _symbology(args, b)
    b = pipe.run_pre(b)
    raw, kernel = blind_deblur(b, mask, sym, args.k, args.gamma, args.alpha, _solver_cfg(args),
                               _prior(args), args.kernel_prior)
    out = pipe.run_post(raw)
    if args.kernel_out:
        write_kernel(kernel, args.kernel_out)
    _report_psnr("raw", raw, args)
    _report_psnr("postprocessed", out, args)
    if args.raw_output:
        write_image(raw, args.raw_output)
    write_image(out, args.output)


def cmd_psnr(args):
    print(f"{psnr(read_image(args.a), read_image(args.b)):.4f}")


def cmd_verify(args):
    kernel = _kernel_from_args(args, default=Kernel.gaussian(3, 1.0))
    prior = _prior(args)
    report = verify_stability(kernel, prior, args.alpha, args.trials, args.seed,
                              (args.height, args.width), args.delta)
    print(report.summary())
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    if args.sweep:
        alphas = sorted(float(a) for a in args.sweep.split(","))
        rng = np.random.default_rng(args.seed)
        op = ConvOperator(kernel, args.height, args.width)
        b = op.apply(rng.random(op.size)).reshape(args.height, args.width)
        print(fidelity_csv(fidelity_sweep(b, kernel, prior, alphas)), end="")
    if not report.passed:
        return 1
    return 0


def _add_solver_flags(p, alpha=DEFAULT_ALPHA):
    p.add_argument("--alpha", type=float, default=alpha, help="image fidelity parameter")
    p.add_argument("--prior", default="uniform", help="uniform | exponential[:RATE] | poisson[:RATE]")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON, help="box buffer of the uniform prior")
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-8, help="gradient tolerance, scaled by 1+|b|_inf")
    p.add_argument("--lbfgs-memory", type=int, default=10)


def _add_pipeline_flags(p):
    p.add_argument("--pre", default="none", help="none | gaussian:SIGMA | extern:CMD")
    p.add_argument("--post", default="none", help="none | tv:WEIGHT:ITERS | threshold:LEVEL")
    p.add_argument("--truth", help="ground truth image; prints raw and postprocessed PSNR")
    p.add_argument("--raw-output", help="also write the image before post-processing")


def _add_kernel_source(p):
    p.add_argument("--kernel-file")
    p.add_argument("--gaussian", type=float, metavar="SIGMA")
    p.add_argument("--motion", metavar="LENGTH,ANGLE")
    p.add_argument("--size", type=int, help="kernel size for --gaussian/--motion")


def _add_kernel_est_flags(p):
    p.add_argument("--k", "--kernel-size", dest="k", type=int, help="kernel size (odd, required)")
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA, help="kernel fidelity parameter")
    p.add_argument("--kernel-prior", choices=("uniform", "poisson"), default="uniform")
    p.add_argument("--poisson-rate", type=float, default=DEFAULT_POISSON_RATE)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="memdeblur", description="Maximum entropy on the mean deblurring toolkit.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="key = value file mirroring the flags")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("blur", help="synthesize a blurred (and noisy) image")
    p.add_argument("input")
    p.add_argument("output")
    _add_kernel_source(p)
    p.add_argument("--noise", type=float, default=0.0, help="Gaussian noise in percent of unit range")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kernel-out", help="where to write the kernel (default OUTPUT.kernel.txt)")
    p.set_defaults(func=cmd_blur)

    p = sub.add_parser("deconv", help="non-blind deconvolution with a known kernel")
    p.add_argument("input")
    p.add_argument("kernel")
    p.add_argument("output")
    _add_solver_flags(p)
    _add_pipeline_flags(p)
    p.add_argument("--solver", choices=("dual", "fista"), default="dual")
    p.add_argument("--invert-intensity", action="store_true")
    p.add_argument("--fista-iters", type=int, default=500)
    p.set_defaults(func=cmd_deconv)

    p = sub.add_parser("estimate-kernel", help="estimate the PSF from a known symbology")
    p.add_argument("input")
    p.add_argument("mask")
    p.add_argument("symbology")
    p.add_argument("output")
    _add_kernel_est_flags(p)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_estimate_kernel)

    p = sub.add_parser("blind", help="kernel estimation followed by deconvolution")
    p.add_argument("input")
    p.add_argument("mask")
    p.add_argument("symbology")
    p.add_argument("output")
    _add_kernel_est_flags(p)
    _add_solver_flags(p)
    _add_pipeline_flags(p)
    p.add_argument("--kernel-out")
    p.set_defaults(func=cmd_blind)

    p = sub.add_parser("psnr", help="PSNR between two images (peak 1.0)")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_psnr)

    p = sub.add_parser("verify", help="check the stability bound and the fidelity sweep")
    _add_kernel_source(p)
    _add_solver_flags(p, alpha=1e4)
    p.add_argument("--height", type=int, default=16)
    p.add_argument("--width", type=int, default=16)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta", type=float, default=1e-3, help="perturbation scale")
    p.add_argument("--csv", help="write per-trial ratios as CSV")
    p.add_argument("--sweep", help="comma-separated alphas for a fidelity sweep")
    p.set_defaults(func=cmd_verify)
    return parser


def read_config(path) -> dict:
    values = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{n}: expected key = value")
        values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


def _apply_config(parser, argv, config_path):
    """Install config values as defaults of the chosen subcommand, then reparse."""
    values = read_config(config_path)
    probe = parser.parse_args(argv)
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sp = subparsers.choices[probe.command]
    actions = {a.dest: a for a in sp._actions}
    for a in sp._actions:
        for opt in a.option_strings:
            actions.setdefault(opt.lstrip("-").replace("-", "_"), a)
    defaults = {}
    for key, raw in values.items():
        if key not in actions:
            raise ValueError(f"unknown config key {key!r} for '{probe.command}'")
        action = actions[key]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[action.dest] = raw.lower() in ("1", "true", "yes", "on")
        else:
            defaults[action.dest] = action.type(raw) if action.type else raw
        action.required = False
    sp.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if args.config:
            args = _apply_config(parser, argv, args.config)
        return args.func(args) or 0
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"memdeblur: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
