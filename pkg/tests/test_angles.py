from fractions import Fraction

from hypothesis import given, strategies as st

from critmax.angles import Angle, angle_orbit, angles_with_period, in_arc

dens = st.integers(1, 10_000)


def brute(num, den, m):
    seen = {}
    x, k = num % den, 0
    while x not in seen:
        seen[x] = k
        x, k = x * m % den, k + 1
    return seen[x], k - seen[x]


def test_orbit_examples():
    o = angle_orbit(Angle(1, 3), 2)
    assert (o.preperiod, o.period) == (0, 2)
    o = angle_orbit(Angle(1, 2), 2)
    assert (o.preperiod, o.period) == (1, 1)
    assert angle_orbit(Angle(1, 7), 3).period == 6


def test_parse_and_str():
    assert str(Angle.parse("3/2")) == "1/2"
    assert Angle(-1, 4) == Angle(3, 4)
    assert Angle(1, 4).times(3) == Angle(3, 4)


@given(dens, st.integers(0, 10**6), st.integers(2, 7))
def test_orbit_matches_brute_force(den, num, m):
    o = angle_orbit(Angle(num, den), m)
    t = Angle(num, den)
    assert (o.preperiod, o.period) == brute(t.num, t.den, m)
    assert t.is_periodic(m) == (o.preperiod == 0)


def test_orbit_exhaustive_small():
    for den in range(1, 120):
        for num in range(den):
            for m in (2, 3):
                o = angle_orbit(Angle(num, den), m)
                assert (o.preperiod, o.period) == brute(Angle(num, den).num, Angle(num, den).den, m)


@given(dens, st.integers(0, 10**6), st.integers(2, 7))
def test_preimages(den, num, m):
    t = Angle(num, den)
    pre = t.preimages(m)
    assert len(set(pre)) == m
    assert all(p.times(m) == t for p in pre)


@given(st.integers(2, 5), st.integers(1, 4))
def test_angles_with_period(m, p):
    for a in angles_with_period(m, p):
        assert angle_orbit(a, m).period == p and angle_orbit(a, m).preperiod == 0


def test_in_arc():
    assert in_arc(Angle(0), Angle(3, 4), Fraction(1, 2))
    assert not in_arc(Angle(1, 2), Angle(3, 4), Fraction(1, 2))
