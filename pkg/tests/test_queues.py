import math

import numpy as np
import pytest

from ondemand_pricing import (
    CustomerClass,
    ExponentialDiscount,
    ExponentialDuration,
    MixtureDiscount,
    ModelMismatch,
    Scenario,
    SingularSystem,
    UniformValuation,
    discounted_value,
    effective_load,
    first_step_solve,
    hybrid_solve,
    mixture_horizon_optimize,
    mixture_horizon_value,
    queue_optimize,
    queue_rate,
)
from tests.conftest import queue_scenario, unit_uniform_class


def random_queue_scenario(rng):
    return Scenario(
        classes=(
            unit_uniform_class(
                arrival_rate=rng.uniform(0.2, 3.0),
                service_rate=rng.uniform(0.2, 3.0),
                high=rng.uniform(0.5, 2.0),
            ),
            unit_uniform_class(
                arrival_rate=rng.uniform(0.2, 3.0),
                service_rate=rng.uniform(0.2, 3.0),
                high=rng.uniform(0.5, 2.0),
            ),
        ),
        queue_capacity=1,
    )


def test_closed_form_matches_first_step_randomized():
    rng = np.random.default_rng(101)
    for _ in range(300):
        scn = random_queue_scenario(rng)
        pa = rng.uniform(0.05, 0.95 * scn.classes[0].valuation.upper)
        pb = rng.uniform(0.05, 0.95 * scn.classes[1].valuation.upper)
        closed = queue_rate(scn, pa, pb)
        renewal = first_step_solve(scn, pa, pb).rate
        assert closed == pytest.approx(renewal, abs=1e-12)


def test_first_step_single_class_reduction():
    # choke class B: A-side recursion collapses to one class plus one buffer slot
    scn = queue_scenario(0.5)
    pa, pb = 0.4, 1.0
    sol = first_step_solve(scn, pa, pb)
    lam_a = 1.0 * (1.0 - pa)
    mu_a, mu_b = 1.0, 0.5
    t_a = (lam_a + mu_a) / mu_a**2
    e_a = (pa / mu_a) * (lam_a + mu_a) / mu_a
    assert sol.time_from_a == pytest.approx(t_a, abs=1e-12)
    assert sol.earning_from_a == pytest.approx(e_a, abs=1e-12)
    # hypothetical B start: B job runs fully, buffered A work may pile behind it
    t_b = 1.0 / mu_b + lam_a / (lam_a + mu_b) * t_a
    e_b = pb / mu_b + lam_a / (lam_a + mu_b) * e_a
    assert sol.time_from_b == pytest.approx(t_b, abs=1e-12)
    assert sol.earning_from_b == pytest.approx(e_b, abs=1e-12)
    # closed form still agrees when one class is shut off
    assert queue_rate(scn, pa, pb) == pytest.approx(sol.rate, abs=1e-12)


def test_first_step_symmetric_classes():
    scn = queue_scenario(1.0)
    sol = first_step_solve(scn, 0.6, 0.6)
    assert sol.earning_from_a == pytest.approx(sol.earning_from_b, abs=1e-12)
    assert sol.time_from_a == pytest.approx(sol.time_from_b, abs=1e-12)


def test_first_step_singular_when_no_demand():
    scn = queue_scenario(0.5)
    with pytest.raises(SingularSystem):
        first_step_solve(scn, 1.0, 1.0)


def test_queue_rate_zero_at_choke_prices():
    scn = queue_scenario(0.5)
    assert queue_rate(scn, 1.0, 1.0) == 0.0


def test_queue_rate_model_guards(two_class_scenario, single_class_scenario):
    with pytest.raises(ModelMismatch):
        queue_rate(two_class_scenario, 0.5, 0.5)
    one = Scenario(classes=single_class_scenario.classes, queue_capacity=1)
    with pytest.raises(ModelMismatch):
        queue_rate(one, 0.5, 0.5)


QUEUE_OPTIMA = {
    # frozen from a dense two-dimensional scan of the closed form
    0.1: (0.603441, 0.640400),
    0.5: (0.619969, 0.621679),
    1.0: (0.620106, 0.620106),
    10.0: (0.640400, 0.603441),
}


@pytest.mark.parametrize("r", sorted(QUEUE_OPTIMA))
def test_queue_optimize_known_optima(r):
    scn = queue_scenario(r)
    (pa, pb), rate = queue_optimize(scn)
    want_a, want_b = QUEUE_OPTIMA[r]
    assert pa == pytest.approx(want_a, abs=1e-4)
    assert pb == pytest.approx(want_b, abs=1e-4)
    assert rate == pytest.approx(queue_rate(scn, pa, pb), abs=1e-12)


def test_queue_price_ordering_tracks_service_speed():
    # slower second class waits longer in the buffer, so it pays a premium
    for r, sign in ((0.25, 1.0), (0.5, 1.0), (1.0, 0.0), (4.0, -1.0), (10.0, -1.0)):
        (pa, pb), _ = queue_optimize(queue_scenario(r))
        if sign == 0.0:
            assert abs(pb - pa) < 1e-5
        else:
            assert math.copysign(1.0, pb - pa) == sign


def test_queue_optimize_beats_random_and_local_moves():
    scn = queue_scenario(0.5)
    (pa, pb), rate = queue_optimize(scn)
    rng = np.random.default_rng(51)
    for _ in range(1_000):
        assert queue_rate(scn, rng.uniform(0, 1), rng.uniform(0, 1)) <= rate + 1e-10
    for da, db in ((1e-4, 0), (-1e-4, 0), (0, 1e-4), (0, -1e-4), (1e-4, 1e-4)):
        assert queue_rate(scn, pa + da, pb + db) <= rate + 1e-10


def test_queue_time_rescaling_swaps_classes():
    # speeding both classes up by 10x and swapping them reproduces r=0.1 prices
    (pa_fast, pb_fast), rate_fast = queue_optimize(queue_scenario(10.0))
    (pa_slow, pb_slow), _ = queue_optimize(queue_scenario(0.1))
    assert pa_fast == pytest.approx(pb_slow, abs=1e-5)
    assert pb_fast == pytest.approx(pa_slow, abs=1e-5)


def test_hybrid_benchmark_instance():
    on_demand = unit_uniform_class()
    patient = unit_uniform_class(arrival_rate=0.5)
    sol = hybrid_solve(on_demand, patient)
    assert sol.on_demand_price == pytest.approx(2.0 - math.sqrt(2.0), abs=1e-9)
    assert sol.idle_fraction == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-9)
    assert sol.feasible
    assert sol.patient_price == pytest.approx(0.5, abs=1e-9)


def test_hybrid_infeasible_when_patient_demand_exceeds_idle_capacity():
    on_demand = unit_uniform_class()
    patient = unit_uniform_class(arrival_rate=0.9)
    sol = hybrid_solve(on_demand, patient)
    assert not sol.feasible
    assert sol.patient_price is None
    # on-demand side is untouched by the patient overload
    assert sol.on_demand_price == pytest.approx(2.0 - math.sqrt(2.0), abs=1e-9)


def test_hybrid_feasibility_threshold():
    on_demand = unit_uniform_class()
    phi = 1.0 / math.sqrt(2.0)
    assert hybrid_solve(on_demand, unit_uniform_class(arrival_rate=phi - 1e-6)).feasible
    assert not hybrid_solve(on_demand, unit_uniform_class(arrival_rate=phi + 1e-6)).feasible


def test_mixture_single_branch_at_rate_one_matches_discounted_value():
    cls = unit_uniform_class()
    mix = Scenario(classes=(cls,), discount=MixtureDiscount((1.0,), (1.0,)))
    disc = Scenario(classes=(cls,), discount=ExponentialDiscount(1.0))
    for p in np.linspace(0.05, 0.95, 20):
        assert mixture_horizon_value(mix, (p,)) == pytest.approx(
            discounted_value(disc, (p,)), abs=1e-15
        )


def test_mixture_value_matches_hand_formula(mixture_scenario):
    rng = np.random.default_rng(77)
    for _ in range(50):
        prices = tuple(rng.uniform(0.05, 0.95, 2))
        total = 0.0
        for w, g in ((0.5, 1.0), (0.5, 2.0)):
            num = den = 0.0
            for cls, p in zip(mixture_scenario.classes, prices):
                load = effective_load(cls, g) * cls.valuation.tail(p)
                num += load * p
                den += load
            total += w * num / (1.0 + den)
        assert mixture_horizon_value(mixture_scenario, prices) == pytest.approx(
            total, abs=1e-12
        )


def test_mixture_value_zero_at_choke_prices(mixture_scenario):
    assert mixture_horizon_value(mixture_scenario, (1.0, 1.0)) == 0.0


def test_mixture_weight_linearity(mixture_scenario):
    classes = mixture_scenario.classes

    def branch_value(g, prices):
        single = Scenario(classes=classes, discount=MixtureDiscount((1.0,), (g,)))
        return mixture_horizon_value(single, prices)

    prices = (0.55, 0.6)
    for w in (0.2, 0.5, 0.9):
        mix = Scenario(
            classes=classes, discount=MixtureDiscount((w, 1.0 - w), (1.0, 3.0))
        )
        want = w * branch_value(1.0, prices) + (1.0 - w) * branch_value(3.0, prices)
        assert mixture_horizon_value(mix, prices) == pytest.approx(want, abs=1e-14)


def test_mixture_optimize_benchmark(mixture_scenario):
    (pa, pb), value = mixture_horizon_optimize(mixture_scenario)
    assert pa == pytest.approx(0.56761, abs=1e-3)
    assert pb == pytest.approx(0.567089, abs=1e-3)
    # same valuation law, yet the optimum genuinely separates the class prices
    assert abs(pa - pb) > 1e-7
    assert value == pytest.approx(mixture_horizon_value(mixture_scenario, (pa, pb)), abs=1e-12)


def test_mixture_optimize_degenerate_branches_restore_uniform_pricing(mixture_scenario):
    # equal branch rates collapse to one exponential horizon, where identical
    # valuation laws must share one price again
    mix = Scenario(
        classes=mixture_scenario.classes,
        discount=MixtureDiscount((0.5, 0.5), (2.0, 2.0)),
    )
    (pa, pb), _ = mixture_horizon_optimize(mix)
    assert pa == pytest.approx(pb, abs=1e-7)


def test_mixture_requires_mixture_discount(single_class_scenario, discounted_scenario):
    with pytest.raises(ModelMismatch):
        mixture_horizon_value(single_class_scenario, (0.5,))
    with pytest.raises(ModelMismatch):
        mixture_horizon_value(discounted_scenario, (0.5,))
