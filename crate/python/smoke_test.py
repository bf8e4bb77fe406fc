"""Smoke test for the exact_simon_py extension module."""

import json

import exact_simon_py as es


def main():
    oracle = es.Oracle.random(6, subgroup=["101000", "010100"], seed=7)
    oracle.verify_promise()
    hidden = es.span_basis(6, oracle.hidden_basis)

    for mode in ("exact", "exact-opt", "zqp"):
        report = es.solve(oracle, mode=mode, seed=1)
        assert es.span_basis(6, report.basis) == hidden, (mode, report)
        print(mode, report)

    again = es.Oracle.from_json(oracle.to_json())
    assert json.loads(again.to_json()) == json.loads(oracle.to_json())
    assert again.evaluate("000000") == again.evaluate("101000")

    assert es.distinguish(es.Oracle.bijection(5, seed=3)) == "BIJECTION"
    assert es.distinguish(es.Oracle.random(5, rank=2, seed=3)) == "PROMISE"

    dist = es.subroutine_distribution(oracle)
    assert abs(sum(dist.values()) - 1.0) < 1e-9
    perp = es.orthogonal_complement(6, hidden)
    assert all(es.span_basis(6, perp + [z]) == es.span_basis(6, perp) for z, p in dist.items() if p > 1e-12)

    k, l = es.amplified_coefficients(0.25)
    assert abs(abs(k) ** 2 * 0.25 + abs(l) ** 2 * 0.75 - 1.0) < 1e-9

    defeat = es.defeat_experiment(12, 2000, 16, seed=5)
    print(defeat)
    assert defeat.within_bounds

    holds, pairs, defect = es.check_commutative_laws([4, 3], seed=2)
    assert holds and defect < 1e-9

    elements, samples, queries = es.hidden_subgroup([4, 6], [[2, 3]], seed=4)
    assert sorted(elements) == sorted([[0, 0], [2, 3]])
    assert queries >= samples

    r, _ = es.discrete_log(13, 2, pow(2, 7, 13), seed=9)
    assert r == 7

    try:
        es.Oracle.random(100, seed=0)
    except (es.CapError, ValueError) as err:
        print("rejected:", err)
    else:
        raise AssertionError("oversized oracle accepted")

    print("smoke test OK")


if __name__ == "__main__":
    main()
