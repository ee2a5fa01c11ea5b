import threading
from concurrent.futures import ThreadPoolExecutor, wait
from itertools import combinations, permutations

import numpy as np
import pytest

from hdqss.errors import (
    AlreadyDisclosed,
    AlreadyLocked,
    EmptyTree,
    InvalidLength,
    LengthMismatch,
    MissingParticipant,
    NotPrimary,
    UnknownAgent,
)
from hdqss.keytree import new_tree
from hdqss.models import IdealOracle, Key, Permutation
from hdqss.sharing import (
    agent_contribution,
    broadcast_message,
    collusion_xor,
    disclose,
    lock_agent,
    recover_master,
    recover_message,
)


ORACLE = IdealOracle()


class TestRecoverMaster:
    def test_all_primaries_recover(self, small_tree):
        assert recover_master(small_tree, ['Bob', 'Charlie', 'David']) == small_tree.master_key

    def test_missing_primary(self, small_tree):
        with pytest.raises(MissingParticipant) as excinfo:
            recover_master(small_tree, ['Bob', 'David'])
        assert excinfo.value.who == 'Charlie'

    def test_included_sub_agent_is_required(self, small_tree, rng):
        small_tree.join_secondary('Charlie', 'Erin', ORACLE, rng)
        with pytest.raises(MissingParticipant) as excinfo:
            recover_master(small_tree, ['Bob', 'Charlie', 'David'])
        assert excinfo.value.who == 'Erin'
        assert recover_master(small_tree, ['Bob', 'Charlie', 'David', 'Erin']) == small_tree.master_key

    def test_extra_participants_are_ignored(self, small_tree, rng):
        small_tree.join_secondary('Charlie', 'Erin', ORACLE, rng)
        small_tree.set_inclusion('Charlie', 'Erin', False)
        assert recover_master(small_tree, ['Bob', 'Charlie', 'David', 'Erin']) == small_tree.master_key

    def test_unknown_participant(self, small_tree):
        with pytest.raises(UnknownAgent):
            recover_master(small_tree, ['Bob', 'Charlie', 'David', 'Zed'])

    def test_empty_tree(self):
        with pytest.raises(EmptyTree):
            recover_master(new_tree('Alice', 4), [])


class TestCollusion:
    def test_empty_collusion(self):
        with pytest.raises(InvalidLength):
            collusion_xor([])

    def test_subsets_learn_nothing(self):
        """n=2ビット・一次エージェント3人の全割当てで部分集合の一致率は1/4"""
        rng = np.random.default_rng(0)
        agents = ['Bob', 'Charlie', 'David']
        matches = {s: 0 for size in (1, 2) for s in combinations(agents, size)}
        total = 0
        for values in np.ndindex(4, 4, 4):
            tree = new_tree('Alice', 2)
            for agent, value in zip(agents, values):
                tree.join_primary(agent, IdealOracle(Key.from_int(int(value), 2)), rng)
            total += 1
            for subset in matches:
                pooled = collusion_xor([agent_contribution(tree, a) for a in subset])
                matches[subset] += pooled == tree.master_key

        assert total == 64
        assert all(count == 16 for count in matches.values())


class TestBroadcast:
    def test_round_trip(self):
        """1000組のランダムな(K_M, M)で往復が一致"""
        rng = np.random.default_rng(5)
        for _ in range(1000):
            tree = new_tree('Alice', 32)
            tree.join_primary('Bob', ORACLE, rng)
            tree.join_primary('Charlie', ORACLE, rng)
            message = Key.random(32, rng)
            s_a = broadcast_message(tree, message)
            recovered = recover_master(tree, ['Bob', 'Charlie'])
            assert recover_message(s_a, recovered) == message

    def test_single_bit_corruption(self, small_tree):
        message = Key.from_bits('1111')
        s_a = broadcast_message(small_tree, message)
        for position in range(4):
            corrupted = small_tree.master_key.flip(position)
            assert recover_message(s_a, corrupted) == message.flip(position)

    def test_zero_master_key_leaks_message(self, rng):
        tree = new_tree('Alice', 4)
        tree.join_primary('Bob', IdealOracle(Key.from_bits('0000')), rng)
        assert broadcast_message(tree, Key.from_bits('1010')) == Key.from_bits('1010')

    def test_length_mismatch(self, small_tree):
        with pytest.raises(LengthMismatch):
            broadcast_message(small_tree, Key.from_bits('101'))

    def test_empty_tree(self):
        with pytest.raises(EmptyTree):
            broadcast_message(new_tree('Alice', 4), Key.from_bits('1010'))


class TestPermutationLock:
    def test_locked_recovery_waits_for_disclosure(self, small_tree, rng):
        everyone = ['Bob', 'Charlie', 'David']
        lock = lock_agent(small_tree, 'David', rng, permutation=Permutation.reverse(4))

        # 0011 reversed is 1100, so the lock actually changes K_M
        assert small_tree.master_key == Key.from_bits('1010') ^ Key.from_bits('0110') ^ Key.from_bits('1100')
        assert recover_master(small_tree, everyone) != small_tree.master_key

        assert disclose(lock) == Permutation.reverse(4)
        assert recover_master(small_tree, everyone) == small_tree.master_key

    def test_identity_lock_is_degenerate(self, small_tree, rng):
        before = small_tree.master_key
        lock_agent(small_tree, 'Bob', rng, permutation=Permutation.identity(4))
        assert small_tree.master_key == before
        assert recover_master(small_tree, ['Bob', 'Charlie', 'David']) == before

    def test_secondary_cannot_be_locked(self, small_tree, rng):
        small_tree.join_secondary('Bob', 'Erin', ORACLE, rng)
        with pytest.raises(NotPrimary):
            lock_agent(small_tree, 'Erin', rng)
        with pytest.raises(NotPrimary):
            lock_agent(small_tree, 'Alice', rng)

    def test_double_lock_and_double_disclose(self, small_tree, rng):
        lock = lock_agent(small_tree, 'Bob', rng)
        with pytest.raises(AlreadyLocked):
            lock_agent(small_tree, 'Bob', rng)
        disclose(lock)
        with pytest.raises(AlreadyDisclosed):
            disclose(lock)

    def test_disclose_waits_for_tree_mutex(self, small_tree, rng):
        """開示はツリーのロックを取得してから状態を変更する"""
        lock = lock_agent(small_tree, 'Bob', rng, permutation=Permutation.reverse(4))
        assert lock.mutex is small_tree.mutex

        holding = threading.Event()
        release = threading.Event()

        def hold_tree():
            with small_tree.mutex:
                holding.set()
                release.wait(5)

        holder = threading.Thread(target=hold_tree)
        holder.start()
        assert holding.wait(5)
        with ThreadPoolExecutor(max_workers=1) as executor:
            future = executor.submit(disclose, lock)
            done, _ = wait([future], timeout=0.2)
            assert not done
            assert not lock.disclosed
            release.set()
            assert future.result(timeout=5) == Permutation.reverse(4)
        holder.join()
        assert lock.disclosed

    def test_wrong_permutation_length(self, small_tree, rng):
        with pytest.raises(LengthMismatch):
            lock_agent(small_tree, 'Bob', rng, permutation=Permutation.identity(3))

    def test_two_independent_locks(self, small_tree, rng):
        first = lock_agent(small_tree, 'Bob', rng, permutation=Permutation((1, 2, 3, 0)))
        second = lock_agent(small_tree, 'David', rng, permutation=Permutation.reverse(4))
        everyone = ['Bob', 'Charlie', 'David']
        disclose(first)
        assert recover_master(small_tree, everyone) != small_tree.master_key
        disclose(second)
        assert recover_master(small_tree, everyone) == small_tree.master_key

    def test_revoking_locked_agent_removes_permuted_term(self, small_tree, rng):
        lock_agent(small_tree, 'David', rng, permutation=Permutation.reverse(4))
        small_tree.revoke('David')
        assert small_tree.master_key == Key.from_bits('1010') ^ Key.from_bits('0110')
        assert small_tree.locks == {}
        assert small_tree.invariant_violations() == []

    @pytest.mark.slow
    def test_exhaustive_three_bit_gating(self):
        """n=3: 全K_D × 全3!置換で、開示前の復元はΠがK_Dを固定する時だけ成功"""
        rng = np.random.default_rng(11)
        fixed_pairs = 0
        cases = 0
        for mapping in permutations(range(3)):
            permutation = Permutation(mapping)
            for value in range(8):
                david = Key.from_int(value, 3)
                tree = new_tree('Alice', 3)
                tree.join_primary('Bob', ORACLE, rng)
                tree.join_primary('Charlie', ORACLE, rng)
                tree.join_primary('David', IdealOracle(david), rng)
                lock = lock_agent(tree, 'David', rng, permutation=permutation)

                everyone = ['Bob', 'Charlie', 'David']
                before = recover_master(tree, everyone) == tree.master_key
                assert before == permutation.fixes(david)
                disclose(lock)
                assert recover_master(tree, everyone) == tree.master_key

                cases += 1
                fixed_pairs += before
        assert cases == 48
        # identity fixes 8, each transposition 4, each 3-cycle 2
        assert fixed_pairs == 8 + 3 * 4 + 2 * 2
