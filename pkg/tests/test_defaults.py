import inspect

from memdeblur import PriorSpec
from memdeblur.cli import build_parser
from memdeblur.fista_reform import fista_deblur
from memdeblur.kernel_est import DEFAULT_GAMMA, DEFAULT_GAMMA_NOISY
from memdeblur.mem_dual import DEFAULT_ALPHA
from memdeblur.priors import DEFAULT_EPSILON


def test_published_parameter_values():
    # noiseless: gamma 1e5, alpha 1e6; noisy: gamma 1e3 (with alpha 1e4)
    assert DEFAULT_ALPHA == 1e6
    assert DEFAULT_GAMMA == 1e5
    assert DEFAULT_GAMMA_NOISY == 1e3


def test_text_deblurring_defaults():
    sig = inspect.signature(fista_deblur)
    assert sig.parameters["alpha"].default == 1e4
    assert PriorSpec.parse("exponential").build(1).rate[0] == 400.0


def test_cli_defaults():
    args = build_parser().parse_args(["deconv", "in.png", "k.txt", "out.png"])
    assert args.alpha == 1e6 and args.epsilon == DEFAULT_EPSILON == 0.01
    args = build_parser().parse_args(["blind", "b.png", "m.png", "s.png", "o.png"])
    assert args.gamma == 1e5
