"""Smoke test for the Python bindings.

Build the extension and place it next to this script first:

    cargo build --release -p aoi-mimo-py --features extension-module
    cp target/release/libaoi_mimo_py.so python/aoi_mimo_py.so
    python3 python/smoke_test.py
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import aoi_mimo_py as am


def close(a, b, rel):
    return abs(a - b) <= rel * abs(b)


def main():
    cfg = am.SystemConfig(8, 8, 0.5, 1.0, 0.1, 1.0)
    assert cfg.derive() == (1.0, 1.0, 0.1 / 1.0)
    assert am.SystemConfig.parse(
        "n_users=8\nn_antennas=8\nattempt_prob=0.5\ntx_power=1\nnoise_var=0.1\nspectral_eff=1\n"
    ).n_users == 8

    exact = am.exact_pep(cfg)
    assert exact.method == "exact"
    assert close(exact.p_e, 0.104992634049215983, 1e-12), exact

    mc = am.empirical_pep(cfg, 200_000, seed=3)
    assert mc.method == "monte_carlo"
    assert abs(mc.p_e - exact.p_e) <= mc.ci_halfwidth, (mc.p_e, mc.ci_halfwidth)

    asym = am.asymptotic_pep(cfg)
    assert 0.0 < asym.p_e < 1.0
    assert close(am.asymptotic_aoi(cfg), 1.0 / (0.5 * (1.0 - asym.p_e)), 1e-12)

    assert close(am.simulate_aoi(cfg, 200_000, gamma=0.3), 1 / 0.3, 0.02)

    assert am.q_func(0.0) == 0.5
    assert close(am.q_inv(0.01), 2.326347874040841, 1e-12)
    assert close(am.age_limited_capacity(1.0, 0.7), math.log2(1.7), 1e-14)
    assert am.supremum_rho(0.01, 10**6, 0.7, 0.5) < math.log2(2.4)
    tau, delta = am.aoi_at_fixed_error(0.01, am.rho_min(0.01, 1000, 0.7), 0.7, 1000)
    assert tau == 1.0 and close(delta, 1 / 0.99, 1e-9)
    assert am.aoi_curve_csv(0.01, 0.7, [100, None]).startswith("n_users,rho,tau_eps,delta\n")

    for bad in (lambda: am.SystemConfig(8, 0, 0.5, 1.0, 0.1, 1.0), lambda: am.q_inv(1.5)):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")
    try:
        am.supremum_rho(0.01, 100, 0.001, 0.5)
    except ArithmeticError:
        pass
    else:
        raise AssertionError("expected ArithmeticError")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
