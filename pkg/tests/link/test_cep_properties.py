"""Monte Carlo orderings of OS decoding on the length-128 extended BCH codes."""

import pytest

from src.domain.models import DecoderConfig
from src.link.codec import bch_code
from src.link.os_decoder import estimate_cep
from src.utils.units import db_to_linear

pytestmark = pytest.mark.slow

SEED = 2024
TRIALS = 10_000
TARGET_ERRORS = 200


@pytest.fixture(scope="module")
def codes():
    return {64: bch_code(7, 10), 71: bch_code(7, 9)}


def cep(code, s: int, snr_db: float, target_errors: int = TARGET_ERRORS):
    return estimate_cep(
        code, DecoderConfig(s=s, fast=True), db_to_linear(snr_db), TRIALS, target_errors, SEED,
        threads=2, snr_db=snr_db,
    )


def assert_clearly_below(better, worse):
    assert better.ci_high < worse.ci_low, (better, worse)


def test_higher_order_decodes_better(codes):
    assert_clearly_below(cep(codes[64], 2, 3.0), cep(codes[64], 0, 3.0))


def test_every_order_step_decodes_no_worse(codes):
    # no early stop: all orders see the same 10^4 noise draws
    s0, s1, s2 = (cep(codes[64], s, 3.0, target_errors=0) for s in (0, 1, 2))
    assert s0.trials == s1.trials == s2.trials == TRIALS
    assert s0.cep >= s1.cep >= s2.cep
    assert_clearly_below(s2, s0)


def test_more_power_decodes_better(codes):
    assert_clearly_below(cep(codes[64], 1, 4.0), cep(codes[64], 1, 1.0))


def test_more_information_bits_decode_worse(codes):
    assert_clearly_below(cep(codes[64], 1, 2.5), cep(codes[71], 1, 2.5))
