import numpy as np
import pytest

from src.domain.errors import CodeFormatError, DomainError, InfeasibleError, ValidationError
from src.link.codec import (
    bch_code,
    bch_dimension,
    bch_generator,
    build_field,
    cyclic_generator_matrix,
    cyclotomic_coset,
    encode,
    extend_code,
    format_code,
    hard_decision,
    make_code,
    minimal_polynomial,
    modulate,
    parse_code,
    poly_degree,
    poly_mod,
    read_code,
    transmit,
    write_code,
)
from src.link.gf2 import min_distance


def test_field_generator_order_m3():
    field = build_field(3, 0xB)
    assert field.order == 7
    powers = [field.power(i) for i in range(7)]
    assert sorted(powers) == list(range(1, 8))
    assert field.power(7) == 1


def test_field_generator_order_m7():
    field = build_field(7)
    assert field.order == 127
    assert len(set(int(v) for v in field.antilog)) == 127


def test_field_rejects_non_primitive_polynomial():
    # x^4 + x^3 + x^2 + x + 1 is irreducible but alpha has order 5
    with pytest.raises(ValidationError):
        build_field(4, 0x1F)


def test_field_rejects_bad_degree():
    with pytest.raises(DomainError):
        build_field(1)
    with pytest.raises(ValidationError):
        build_field(4, 0xB)


def test_field_multiplication():
    field = build_field(4)
    for x in range(1, 16):
        assert field.mul(x, 1) == x
        assert field.mul(x, 0) == 0
    a = field.power(3)
    b = field.power(14)
    assert field.mul(a, b) == field.power(2)


def test_cyclotomic_coset():
    field = build_field(4)
    assert cyclotomic_coset(field, 1) == [1, 2, 4, 8]
    assert cyclotomic_coset(field, 5) == [5, 10]


def test_minimal_polynomial_of_alpha_is_the_field_polynomial():
    field = build_field(4)
    assert minimal_polynomial(field, 1) == 0x13


def test_hamming_generator_degree():
    g = bch_generator(4, 1)
    assert poly_degree(g) == 4
    assert bch_dimension(4, 1) == 11


@pytest.mark.parametrize("t, k", [(10, 64), (9, 71)])
def test_bch_dimensions_m7(t, k):
    assert bch_dimension(7, t) == k
    code = bch_code(7, t)
    assert (code.n, code.k) == (128, k)
    assert code.parent is not None and code.parent.extended


def test_generator_divides_x_n_plus_one():
    for m, t in [(4, 2), (5, 3), (7, 10)]:
        g = bch_generator(m, t)
        n = (1 << m) - 1
        assert poly_mod((1 << n) | 1, g) == 0


def test_generator_exhausting_the_code_is_infeasible():
    with pytest.raises(InfeasibleError):
        bch_generator(3, 4)


def test_cyclic_generator_rows_are_shifts():
    G = cyclic_generator_matrix(0xB, 7)
    assert G.shape == (4, 7)
    np.testing.assert_array_equal(G[0], [1, 1, 0, 1, 0, 0, 0])
    np.testing.assert_array_equal(G[3], [0, 0, 0, 1, 1, 0, 1])


@pytest.mark.parametrize("m, n, k", [(3, 8, 4), (4, 16, 11)])
def test_extended_hamming_distance(m, n, k):
    code = bch_code(m, 1)
    assert (code.n, code.k) == (n, k)
    assert min_distance(code.matrix) == 4
    assert not (code.matrix.sum(axis=1) % 2).any()


def test_extend_requires_cyclic_length():
    code = make_code(np.eye(4, 8, dtype=np.uint8))
    with pytest.raises(DomainError):
        extend_code(code)


def test_make_code_rejects_dependent_rows():
    with pytest.raises(CodeFormatError):
        make_code([[1, 0, 1], [1, 0, 1]])


def test_encode_linearity():
    code = bch_code(4, 2)
    assert not encode(code, np.zeros(code.k, dtype=np.uint8)).any()
    rng = np.random.default_rng(3)
    a = rng.integers(0, 2, code.k, dtype=np.uint8)
    b = rng.integers(0, 2, code.k, dtype=np.uint8)
    np.testing.assert_array_equal(encode(code, a ^ b), encode(code, a) ^ encode(code, b))
    with pytest.raises(ValidationError):
        encode(code, np.zeros(code.k + 1, dtype=np.uint8))


def test_bpsk_mapping():
    np.testing.assert_array_equal(modulate([0, 1, 1]), [1.0, -1.0, -1.0])
    np.testing.assert_array_equal(hard_decision([0.3, -0.1, 0.0]), [0, 1, 0])


def test_transmit_zero_snr_is_unit_noise():
    y = transmit(np.zeros(100_000, dtype=np.uint8), 0.0, seed=11)
    assert float(np.var(y)) == pytest.approx(1.0, abs=0.02)


def test_transmit_is_seeded():
    word = np.zeros(64, dtype=np.uint8)
    np.testing.assert_array_equal(transmit(word, 2.0, seed=5, trial=3), transmit(word, 2.0, seed=5, trial=3))
    assert not np.array_equal(transmit(word, 2.0, seed=5, trial=3), transmit(word, 2.0, seed=5, trial=4))


def test_transmit_signal_mean():
    rho = 2.0
    count = 1_000_000
    word = np.random.default_rng(8).integers(0, 2, count, dtype=np.uint8)
    y = transmit(word, rho, seed=17)
    estimate = float(np.mean(y * modulate(word)))
    assert estimate == pytest.approx(np.sqrt(rho), abs=3.0 / np.sqrt(count))


def test_code_file_round_trip(tmp_path):
    code = bch_code(4, 2)
    path = write_code(tmp_path / "bch.txt", code)
    back = read_code(path)
    assert (back.n, back.k) == (code.n, code.k)
    np.testing.assert_array_equal(back.generator, code.generator)
    assert back.parent == code.parent
    assert back.digest == code.digest


def test_code_file_layout():
    text = format_code(bch_code(3, 1))
    lines = text.splitlines()
    assert lines[0] == "# bch m=3 t=1 extended=1"
    assert lines[1] == "8 4"
    assert len(lines) == 6
    assert all(len(row) == 2 for row in lines[2:])


def test_parse_code_without_parent_line():
    code = parse_code("3 1\n7\n")
    assert (code.n, code.k) == (3, 1)
    np.testing.assert_array_equal(code.matrix, [[1, 1, 1]])
    assert code.parent is None


@pytest.mark.parametrize(
    "text",
    [
        "",
        "8\n0f\n",
        "8 two\n0f\n",
        "8 2\n0f\n",
        "8 1\nzz\n",
        "4 1\n1f\n",
        "4 2\n3\n3\n",
    ],
)
def test_parse_code_rejects_malformed_files(text):
    with pytest.raises(CodeFormatError):
        parse_code(text)
