"""Smoke test for the cuspgroup extension module."""

import json
import sys

import cuspgroup


def main():
    assert cuspgroup.order(5) == 1
    assert cuspgroup.order(13) == 1183
    assert cuspgroup.structure(13) == [13, 91]
    assert cuspgroup.bernoulli_order(19) == cuspgroup.order(19) == 10020999

    r = cuspgroup.compute(17, factor=True, structure=True)
    assert r.order == 235824
    assert r.factorization == [(2, 4), (3, 1), (17, 3)]
    assert r.factorization_complete
    prod = 1
    for x in r.invariant_factors:
        prod *= x
    assert prod == r.order
    rec = json.loads(r.to_json())
    assert rec["order"] == "235824" and rec["p"] == 17

    big = cuspgroup.order(43)
    assert big == 2**2 * 19 * 29 * 43**9 * 463 * 1051 * 416532733

    level = cuspgroup.CartanLevel(5)
    assert level.n == 2
    assert level.theta_prime() == [(-3, 1), (-2, 1)]
    assert cuspgroup.CartanLevel(13, epsilon=11).order() == 1183
    assert cuspgroup.order(5, 2) == 1969140625

    assert cuspgroup.genus(11) == 1
    assert cuspgroup.cusps(5, 2) == 10
    assert cuspgroup.factorize(2**61 * 3) == ([(2, 61), (3, 1)], True)

    lines = cuspgroup.verify(7, structure=True, analytic=True)
    bad = [line for line in lines if not line[2]]
    assert not bad, bad

    ok, report = cuspgroup.crosscheck(29)
    assert ok, report

    for bad_args in [(4,), (3,), (9,)]:
        try:
            cuspgroup.order(*bad_args)
        except ValueError:
            pass
        else:
            raise AssertionError(f"order{bad_args} should raise ValueError")

    print(f"cuspgroup {cuspgroup.__version__}: smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
