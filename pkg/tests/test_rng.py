from hypothesis import given
from hypothesis import strategies as st

from osa.rng import MASK64, Xoshiro256, mix_seed, splitmix64


def test_splitmix64_reference_value():
    # first output of splitmix64 from state 0 in the reference C code
    assert splitmix64(0)[1] == 0xE220A8397B1DCDAF


def test_xoshiro_reference_stream():
    g = Xoshiro256(0)
    g._s = [1, 2, 3, 4]
    assert [g.next_u64() for _ in range(4)] == [11520, 0, 1509978240, 1215971899390074240]


def test_seeded_stream_is_frozen():
    g = Xoshiro256(42)
    assert [g.next_u64() for _ in range(3)] == [1546998764402558742, 6990951692964543102, 12544586762248559009]


@given(st.integers(0, MASK64))
def test_random_in_unit_interval(seed):
    g = Xoshiro256(seed)
    for _ in range(20):
        assert 0.0 <= g.random() < 1.0


@given(st.integers(0, MASK64), st.integers(1, 1000))
def test_below_in_range(seed, bound):
    g = Xoshiro256(seed)
    assert all(0 <= g.below(bound) < bound for _ in range(20))


def test_below_roughly_uniform():
    g = Xoshiro256(7)
    counts = [0] * 6
    for _ in range(6000):
        counts[g.below(6)] += 1
    assert all(900 < c < 1100 for c in counts)


@given(st.integers(0, MASK64), st.integers(0, 12))
def test_sample_is_distinct_subset(seed, k):
    pop = list(range(12))
    s = Xoshiro256(seed).sample(pop, k)
    assert len(s) == k and len(set(s)) == k and set(s) <= set(pop)


def test_mix_seed_order_sensitive():
    assert mix_seed(1, 2) != mix_seed(2, 1)
    assert mix_seed(1, 2) == mix_seed(1, 2)
