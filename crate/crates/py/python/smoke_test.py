"""Smoke test for the pyarithfact extension module.

Build and run:
    maturin develop -m crates/py/Cargo.toml && python crates/py/python/smoke_test.py
"""

import json
import math

import pyarithfact as af


def main():
    sieve = af.Sieve(100_000)
    assert sieve.prime_count(100) == 25
    assert sieve.prime_count_ap(100, 4, 1) == 11
    assert sieve.interval_primes(10, 1) == [7]

    assert af.legendre(10, 2) == 8
    assert af.digit_sum(26, 3) == 6
    assert abs(af.log_integral(1e6) - 78626.5039956821) < 1e-4

    assert af.factorial(12, sieve).value() == math.factorial(12)
    assert af.phi_factorial(5, sieve).items() == {2: 5}
    assert af.sigma0_factorial(4, sieve).value() == 8
    assert af.sigma_k_value(3, 2, sieve) == 50
    part, cofactor, kind = af.sigma_k_factorial(10, 1, sieve)
    assert part.value() * cofactor == 15334088 and kind == "unit"

    part, cofactor, kind = af.factor(2**62 - 1)
    assert part.value() * cofactor == 2**62 - 1 and kind == "unit"

    six = af.Factored({2: 1, 3: 1})
    assert (six * six).value() == 36 and six.divides(six * six)
    assert json.loads(six.to_json()) == {"2": "1", "3": "1"}

    assert af.bhargava_factorial("ap:2,0", 3).value() == 48
    assert af.bhargava_factorial("squares", 2).value() == 12
    assert af.bhargava_factorial("explicit:0,1,4,9,16,25,36,49", 3).value() == 360

    rep = af.search("phi", "1", ["Z"], 100, sieve)
    assert rep.solutions == [(1, [1]), (2, [1]), (3, [2])], rep.solutions
    assert rep.complete and rep.last_solution_n == 3
    assert rep.to_csv().splitlines()[0] == "n,m1"
    rep8 = af.search("sigma:0", "1", ["Z", "Z"], 300, sieve, workers=8)
    assert (3, [2, 2]) in rep8.solutions
    assert rep8.to_json() == af.search("sigma:0", "1", ["Z", "Z"], 300, sieve).to_json()

    exact, counting, main = af.nu_q_prime_product(10, 2, sieve)
    assert exact == counting == 4

    ver = af.verify("stewart", sieve, stewart_max=40)
    assert ver.passed and ver.checks_run == 34
    assert ver.rows("stewart")[0][0] == "N"

    for bad in (lambda: af.search("phi", "0/1", ["Z"], 10, sieve),
                lambda: sieve.prime_count(10**6)):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print("pyarithfact smoke test passed")


if __name__ == "__main__":
    main()
