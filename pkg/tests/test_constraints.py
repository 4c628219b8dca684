"""Admissibility constraint solver over all 36 unknown-pair choices."""

import numpy as np
import pytest

from mayleonard import (IllConditionedError, OutcomeKind, ProblemInstance,
                        Slot, SpecialSolution, assignment_to_system,
                        extract_coeffs, linear_forms, make_special,
                        random_admissible_instance, residuals, solve_pair)
from mayleonard.constraints import _ALL_PAIRS, _quadratic_roots

COUPLING_SLOTS = (Slot.A12, Slot.A13, Slot.A21, Slot.A23, Slot.A31, Slot.A32)
STATE_SLOTS = (Slot.X1, Slot.X2, Slot.X3)


def full_assignment(**overrides):
    values = {s: 1.0 for s in Slot}
    for name, v in overrides.items():
        values[Slot(name)] = v
    return values


def instance_for(unknowns, **known_overrides):
    known = full_assignment(**known_overrides)
    for s in unknowns:
        known.pop(s)
    return ProblemInstance(known=known, unknowns=unknowns)


def random_instance(rng):
    pair = _ALL_PAIRS[rng.integers(len(_ALL_PAIRS))]
    known = {s: float(rng.uniform(0.1, 2.0)) for s in Slot if s not in pair}
    return ProblemInstance(known=known, unknowns=pair)


class TestResiduals:
    def test_symmetric_couplings_vanish(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            x = rng.uniform(-2, 2, size=3)
            asg = full_assignment(x1=x[0], x2=x[1], x3=x[2])
            r1, r2 = residuals(asg)
            assert abs(r1) < 1e-15 and abs(r2) < 1e-15

    def test_hand_case(self):
        assert residuals(full_assignment(a12=2.0)) == (1.0, 0.0)

    def test_zero_state(self):
        asg = full_assignment(x1=0.0, x2=0.0, x3=0.0, a12=1.7, a31=0.2)
        assert residuals(asg) == (0.0, 0.0)

    def test_missing_slot_rejected(self):
        asg = full_assignment()
        del asg[Slot.A23]
        with pytest.raises(ValueError, match="a23"):
            residuals(asg)


class TestProblemInstance:
    def test_duplicate_unknowns_rejected(self):
        known = {s: 1.0 for s in Slot if s != Slot.A12}
        with pytest.raises(ValueError):
            ProblemInstance(known=known, unknowns=(Slot.A12, Slot.A12))

    def test_known_set_must_be_complementary(self):
        known = {s: 1.0 for s in Slot if s not in (Slot.A12, Slot.A21, Slot.X1)}
        with pytest.raises(ValueError):
            ProblemInstance(known=known, unknowns=(Slot.A12, Slot.A21))

    def test_nonfinite_known_rejected(self):
        known = {s: 1.0 for s in Slot if s not in (Slot.A12, Slot.A21)}
        known[Slot.X1] = float("inf")
        with pytest.raises(ValueError):
            ProblemInstance(known=known, unknowns=(Slot.A12, Slot.A21))


class TestAssignmentToSystem:
    def test_layout(self):
        asg = full_assignment(a12=2.0, a13=3.0, a21=4.0, a23=5.0, a31=6.0,
                              a32=7.0, x1=0.1, x2=0.2, x3=0.3)
        params, x0 = assignment_to_system(asg, eta=1.5)
        expected = np.array([[1.0, 2.0, 3.0],
                             [4.0, 1.0, 5.0],
                             [6.0, 7.0, 1.0]])
        assert np.array_equal(params.a, expected)
        assert np.array_equal(x0, [0.1, 0.2, 0.3])
        assert params.eta == 1.5


class TestExtractCoeffs:
    def test_hand_coefficients_linear_pair(self):
        inst = instance_for((Slot.A12, Slot.A21))
        cf = extract_coeffs(inst)
        assert cf.r1 == (0.0, 1.0, -1.0, 0.0)
        assert cf.r2 == (-1.0, 0.0, 1.0, 0.0)

    def test_bilinear_term_present(self):
        inst = instance_for((Slot.A12, Slot.X2))
        cf = extract_coeffs(inst)
        assert cf.r1[3] == 1.0
        assert cf.r2[3] == 0.0

    def test_delta_is_always_zero_or_unit(self):
        rng = np.random.default_rng(37)
        for pair in _ALL_PAIRS:
            known = {s: float(rng.uniform(0.1, 2.0)) for s in Slot
                     if s not in pair}
            cf = extract_coeffs(ProblemInstance(known=known, unknowns=pair))
            for delta in (cf.r1[3], cf.r2[3]):
                assert min(abs(delta - k) for k in (-1.0, 0.0, 1.0)) < 1e-12

    @staticmethod
    def e_scale(asg):
        # Both evaluation routes round at the magnitude of the row forms, so
        # ulp bounds are stated at that scale (the residual itself can pass
        # through zero).
        params, x0 = assignment_to_system(asg)
        return max(1.0, max(abs(e) for e in linear_forms(params, x0)))

    def test_interpolation_at_two_three(self):
        inst = instance_for((Slot.A12, Slot.X2), x1=1.3, x3=0.7, a13=0.4,
                            a21=0.9, a23=1.1, a31=0.6, a32=0.5)
        cf = extract_coeffs(inst)
        rec = cf.evaluate(2.0, 3.0)
        asg = dict(inst.known)
        asg[Slot.A12], asg[Slot.X2] = 2.0, 3.0
        direct = residuals(asg)
        bound = 4.0 * np.spacing(self.e_scale(asg))
        for r, d in zip(rec, direct):
            assert abs(r - d) <= bound

    def test_reconstruction_at_random_points(self):
        rng = np.random.default_rng(53)
        for pair in _ALL_PAIRS:
            known = {s: float(rng.uniform(0.1, 2.0)) for s in Slot
                     if s not in pair}
            inst = ProblemInstance(known=known, unknowns=pair)
            cf = extract_coeffs(inst)
            for _ in range(20):
                u = float(rng.uniform(-2.0, 2.0))
                v = float(rng.uniform(-2.0, 2.0))
                rec = cf.evaluate(u, v)
                asg = dict(known)
                asg[pair[0]], asg[pair[1]] = u, v
                direct = residuals(asg)
                bound = 8.0 * np.spacing(self.e_scale(asg))
                for r, d in zip(rec, direct):
                    assert abs(r - d) <= bound


class TestSolvePairLinear:
    def test_unique_symmetric_forcing(self):
        out = solve_pair(instance_for((Slot.A12, Slot.A21)))
        assert out.kind == OutcomeKind.UNIQUE
        u, v = out.solutions[0]
        assert abs(u - 1.0) < 1e-12 and abs(v - 1.0) < 1e-12

    @pytest.mark.parametrize("c", [0.3, 1.0, 1.7])
    def test_degenerate_family_on_symmetric_state(self, c):
        inst = instance_for((Slot.A12, Slot.A13), x1=c, x2=c, x3=c)
        out = solve_pair(inst)
        assert out.kind == OutcomeKind.DEGENERATE_FAMILY
        u, v = out.solutions[0]
        assert abs((u + v) - 2.0) < 1e-12
        # The family direction (1, -1) keeps both residuals at zero.
        for s in (-0.7, 0.4, 1.3):
            asg = dict(inst.known)
            asg[Slot.A12], asg[Slot.A13] = u + s, v - s
            r1, r2 = residuals(asg)
            assert max(abs(r1), abs(r2)) < 1e-12

    def test_inconsistent_when_fixed_rows_disagree(self):
        # Unknowns touch E1 only; E2 != E3 is decided by the knowns alone.
        inst = instance_for((Slot.A12, Slot.A13), a23=2.0, x3=2.0)
        out = solve_pair(inst)
        assert out.kind == OutcomeKind.INCONSISTENT
        assert out.solutions == ()

    def test_every_returned_solution_verifies(self):
        rng = np.random.default_rng(71)
        checked = 0
        for _ in range(300):
            inst = random_instance(rng)
            try:
                out = solve_pair(inst)
            except IllConditionedError:
                continue
            for u, v in out.solutions:
                asg = dict(inst.known)
                asg[inst.unknowns[0]], asg[inst.unknowns[1]] = u, v
                r1, r2 = residuals(asg)
                params, x0 = assignment_to_system(asg)
                scale = 1.0 + max(abs(e) for e in linear_forms(params, x0))
                assert max(abs(r1), abs(r2)) < 1e-12 * scale
                checked += 1
        assert checked > 100


class TestSolvePairBilinear:
    def test_unique_by_back_substitution(self):
        inst = instance_for((Slot.A12, Slot.X2), x1=1.0, x3=1.0, a13=0.5,
                            a21=2.0, a23=0.5, a31=0.5, a32=2.0)
        out = solve_pair(inst)
        assert out.kind == OutcomeKind.UNIQUE
        u, v = out.solutions[0]
        assert abs(u - 2.0) < 1e-12
        assert abs(v - 1.0) < 1e-12

    def test_spurious_resultant_root_is_dropped(self):
        # The resultant of a matching (coupling, state) pair always carries
        # the root v = 0 where the lift denominator vanishes; it must not be
        # reported unless it genuinely solves both residuals.
        inst = instance_for((Slot.A12, Slot.X2), x1=1.3, x3=0.7, a13=0.4,
                            a21=0.9, a23=1.1, a31=0.6, a32=0.5)
        out = solve_pair(inst)
        assert out.kind == OutcomeKind.UNIQUE
        assert len(out.solutions) == 1
        assert abs(out.solutions[0][1]) > 1e-6

    def test_degenerate_family_when_state_zero_is_consistent(self):
        # With x2 = 0 admissible on the remaining data, a12 drops out and the
        # family in a12 must be reported, not a fabricated unique value.
        inst = instance_for((Slot.A12, Slot.X2), x1=1.0, x3=1.0, a13=1.0,
                            a21=1.0, a23=1.0, a31=1.0, a32=1.0)
        # knowns give E1 = x1 + a13 x3 = 2, E2 = 2, E3 = 2 at x2 = 0
        out = solve_pair(inst)
        assert out.kind == OutcomeKind.DEGENERATE_FAMILY

    def test_matching_pairs_across_random_knowns(self):
        pairs = [(Slot.A12, Slot.X2), (Slot.A32, Slot.X2), (Slot.A13, Slot.X3),
                 (Slot.A23, Slot.X3), (Slot.A21, Slot.X1), (Slot.A31, Slot.X1)]
        rng = np.random.default_rng(97)
        for pair in pairs:
            for _ in range(20):
                known = {s: float(rng.uniform(0.2, 1.8)) for s in Slot
                         if s not in pair}
                inst = ProblemInstance(known=known, unknowns=pair)
                try:
                    out = solve_pair(inst)
                except IllConditionedError:
                    continue
                assert out.kind in (OutcomeKind.UNIQUE,
                                    OutcomeKind.DEGENERATE_FAMILY,
                                    OutcomeKind.INCONSISTENT)
                for u, v in out.solutions:
                    asg = dict(known)
                    asg[pair[0]], asg[pair[1]] = u, v
                    r1, r2 = residuals(asg)
                    assert max(abs(r1), abs(r2)) < 1e-10

    def test_reversed_unknown_order(self):
        inst = instance_for((Slot.X2, Slot.A12), x1=1.0, x3=1.0, a13=0.5,
                            a21=2.0, a23=0.5, a31=0.5, a32=2.0)
        out = solve_pair(inst)
        assert out.kind == OutcomeKind.UNIQUE
        v_state, u_coupling = out.solutions[0]
        assert abs(u_coupling - 2.0) < 1e-12
        assert abs(v_state - 1.0) < 1e-12


class TestQuadraticRoots:
    # The TwoRoots classification needs two verified roots, which the
    # admissibility algebra never produces (the resultant of a matching pair
    # factors as v times a linear term).  The root finder itself still has to
    # handle the general quadratic for the classifier to be trustworthy.

    def test_distinct_real_roots(self):
        r = sorted(_quadratic_roots(1.0, -3.0, 2.0, "real"))
        assert abs(r[0] - 1.0) < 1e-14 and abs(r[1] - 2.0) < 1e-14

    def test_negative_discriminant_real_mode(self):
        assert _quadratic_roots(1.0, 0.0, 1.0, "real") == ()

    def test_negative_discriminant_complex_mode(self):
        r = _quadratic_roots(1.0, 0.0, 1.0, "complex")
        assert sorted(z.imag for z in r) == [-1.0, 1.0]

    def test_cancellation_resistant_small_root(self):
        # Classic catastrophic-cancellation pair: roots 1e-12 and 1e12.
        r = sorted(_quadratic_roots(1.0, -(1e12 + 1e-12), 1.0, "real"))
        assert abs(r[0] - 1e-12) < 1e-24
        assert abs(r[1] - 1e12) < 1e-2

    def test_double_root(self):
        r = _quadratic_roots(1.0, -2.0, 1.0, "real")
        assert len(r) == 2
        assert max(abs(x - 1.0) for x in r) < 1e-14


class TestModeHandling:
    def test_real_mode_rejects_complex_knowns(self):
        known = {s: 1.0 for s in Slot if s not in (Slot.A12, Slot.A21)}
        known[Slot.X1] = 1.0 + 0.5j
        inst = ProblemInstance(known=known, unknowns=(Slot.A12, Slot.A21))
        with pytest.raises(ValueError, match="complex"):
            solve_pair(inst, mode="real")

    def test_complex_mode_solves_complex_instance(self):
        rng = np.random.default_rng(5)
        known = {s: complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
                 for s in Slot if s not in (Slot.A12, Slot.X2)}
        inst = ProblemInstance(known=known, unknowns=(Slot.A12, Slot.X2))
        out = solve_pair(inst, mode="complex")
        for u, v in out.solutions:
            asg = dict(known)
            asg[Slot.A12], asg[Slot.X2] = u, v
            r1, r2 = residuals(asg)
            assert max(abs(r1), abs(r2)) < 1e-10

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            solve_pair(instance_for((Slot.A12, Slot.A21)), mode="rational")


class TestIllConditioned:
    def test_ambiguous_second_pivot_raises(self):
        # Linear pair (X2, X3) tuned so the eliminated pivot sits inside the
        # ambiguous band: rows (1, 1) and (1, 1 + 3e-12).
        d = 3e-12
        inst = instance_for((Slot.X2, Slot.X3), a12=2.0, a13=3.0 + d,
                            a23=2.0 + d, a32=0.0, x1=1.0, a21=1.0, a31=1.0)
        with pytest.raises(IllConditionedError):
            solve_pair(inst)


class TestRandomAdmissibleInstance:
    def test_deterministic_per_seed(self):
        p1, x1 = random_admissible_instance(123)
        p2, x2 = random_admissible_instance(123)
        assert np.array_equal(p1.a, p2.a)
        assert p1.eta == p2.eta
        assert np.array_equal(x1, x2)

    def test_distinct_seeds_differ(self):
        p1, x1 = random_admissible_instance(1)
        p2, x2 = random_admissible_instance(2)
        assert not np.array_equal(x1, x2)

    def test_outputs_pass_make_special(self):
        for seed in range(40):
            params, x0 = random_admissible_instance(seed)
            sol = make_special(params, x0)
            assert isinstance(sol, SpecialSolution)
            e = linear_forms(params, x0)
            scale = 1.0 + max(abs(v) for v in e)
            assert max(abs(e[0] - e[1]), abs(e[1] - e[2])) < 1e-12 * scale

    def test_eta_drawn_from_contract_set(self):
        etas = {random_admissible_instance(seed)[0].eta for seed in range(60)}
        assert etas <= {0.5, 1.0, 2.0}
        assert len(etas) == 3

    def test_complex_mode(self):
        params, x0 = random_admissible_instance(7, mode="complex")
        assert params.eta in (1j, 2j)
        assert np.iscomplexobj(x0)
        sol = make_special(params, x0)
        assert isinstance(sol, SpecialSolution)
