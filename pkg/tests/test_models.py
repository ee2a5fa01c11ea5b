import numpy as np
import pytest
from hypothesis import given, strategies as st

from hdqss.errors import InvalidChannelModel, InvalidLength, LengthMismatch, PermutationWithheld
from hdqss.models import (
    Basis,
    ChannelModel,
    ControlledState,
    EveModel,
    Key,
    Permutation,
    SessionResult,
    fnv1a_64,
    xor_all,
)


class TestKey:
    def test_from_bits_and_str(self):
        key = Key.from_bits('1011')
        assert key.bits == (1, 0, 1, 1)
        assert str(key) == '1011'
        assert len(key) == 4

    def test_int_and_hex(self):
        key = Key.from_int(0xA5, 8)
        assert str(key) == '10100101'
        assert key.to_int() == 0xA5
        assert key.to_hex() == 'a5'
        assert Key.from_hex('a5', 8) == key

    def test_hex_digit_count_must_match_length(self):
        with pytest.raises(LengthMismatch):
            Key.from_hex('ff', 12)
        assert Key.from_hex('fff', 12).to_int() == 0xFFF

    def test_hex_rejects_prefixes_and_separators(self):
        """16進数字以外（0x・アンダースコア・符号）は受け付けない"""
        for text in ('0x1f', '1_ff', '+fff', ' fff'):
            with pytest.raises(ValueError):
                Key.from_hex(text, 16)

    def test_value_too_large(self):
        with pytest.raises(LengthMismatch):
            Key.from_int(16, 4)

    def test_zero_length_rejected(self):
        with pytest.raises(InvalidLength):
            Key.zeros(0)
        with pytest.raises(InvalidLength):
            Key.from_bits('')

    def test_xor_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            Key.from_bits('10') ^ Key.from_bits('101')

    def test_flip_changes_one_bit(self):
        key = Key.from_bits('0000')
        assert str(key.flip(2)) == '0010'
        assert key.is_zero()

    def test_xor_all_empty_is_zero(self):
        assert xor_all([], 5) == Key.zeros(5)

    def test_fingerprint_is_fnv1a(self):
        """FNV-1a 64の既知ベクトルで確認"""
        assert fnv1a_64(b'') == 0xcbf29ce484222325
        assert fnv1a_64(b'a') == 0xaf63dc4c8601ec8c
        assert Key.from_int(ord('a'), 8).fingerprint() == 'af63dc4c8601ec8c'
        assert len(Key.zeros(128).fingerprint()) == 16

    @given(st.lists(st.integers(0, 1), min_size=1, max_size=64), st.lists(st.integers(0, 1), min_size=1, max_size=64))
    def test_xor_is_an_involution(self, a, b):
        n = min(len(a), len(b))
        x, y = Key.from_bits(a[:n]), Key.from_bits(b[:n])
        assert (x ^ y) ^ y == x
        assert (x ^ x).is_zero()


class TestChannelModel:
    def test_noise_must_be_probability(self):
        with pytest.raises(InvalidChannelModel):
            ChannelModel(flip_probability=1.5)

    def test_fixed_eve_needs_basis(self):
        with pytest.raises(InvalidChannelModel):
            ChannelModel(eve=EveModel.INTERCEPT_RESEND_FIXED)
        with pytest.raises(InvalidChannelModel):
            ChannelModel(eve=EveModel.NONE, eve_basis=Basis.Z)

    def test_describe(self):
        model = ChannelModel(eve=EveModel.INTERCEPT_RESEND_FIXED, eve_basis=Basis.X, flip_probability=0.05)
        assert model.describe() == 'eve=intercept-resend-fixed(X) noise=0.05'


class TestPermutation:
    def test_reverse_apply(self):
        assert str(Permutation.reverse(4).apply(Key.from_bits('1100'))) == '0011'

    def test_bit_moves_to_mapped_position(self):
        permutation = Permutation((2, 0, 1))
        assert str(permutation.apply(Key.from_bits('100'))) == '001'

    def test_not_a_bijection(self):
        with pytest.raises(ValueError):
            Permutation((0, 0, 1))

    def test_fixes(self):
        permutation = Permutation.reverse(4)
        assert permutation.fixes(Key.from_bits('1001'))
        assert not permutation.fixes(Key.from_bits('1000'))

    def test_random_is_seeded(self):
        a = Permutation.random(16, np.random.default_rng(7))
        b = Permutation.random(16, np.random.default_rng(7))
        assert a == b


class TestControlledState:
    def test_permutation_withheld_until_disclosed(self):
        lock = ControlledState('David', Permutation.reverse(3))
        with pytest.raises(PermutationWithheld):
            lock.permutation
        assert lock.boss_permutation() == Permutation.reverse(3)
        lock.disclosed = True
        assert lock.permutation == Permutation.reverse(3)


class TestSessionResult:
    def test_sift_rate_and_dict(self):
        result = SessionResult(protocol='bb84', key_initiator=None, key_responder=None,
                               qber=0.3, qubits_sent=100, check_bits_used=24,
                               sifted_bits=48, aborted=True, abort_reason='QberExceeded')
        assert result.sift_rate == 0.48
        assert result.to_dict()['abort_reason'] == 'QberExceeded'
