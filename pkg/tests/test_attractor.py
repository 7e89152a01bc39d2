import numpy as np
import pytest

import statattract as sa
from statattract.attractor import AlphaUnreachableError, default_ladder
from statattract.bowen import BOWEN_LADDER, CELL_X1, CELL_X2


class TestLadder:
    def test_default_shape(self):
        g = sa.Grid(sa.CIRCLE, 1024)
        lad = default_ladder(g)
        assert lad == (0.2, 0.1, 0.05, 2.0 / 1024)

    def test_default_collapses_on_coarse_grids(self):
        lad = default_ladder(sa.Grid(sa.INTERVAL, 8))
        assert lad == (0.25,)

    def test_rejects_bad_ladders(self, two_basin_traces):
        _, g, traces = two_basin_traces
        K = g.full_set()
        with pytest.raises(ValueError):
            sa.in_basin(traces[0], K, ladder=(0.1, 0.2))
        with pytest.raises(ValueError):
            sa.in_basin(traces[0], K, ladder=(0.1, 0.0001))
        with pytest.raises(ValueError):
            sa.in_basin(traces[0], K, ladder=())


class TestInBasin:
    def test_orbit_converging_to_fixed_point(self, two_basin_traces):
        _, g, traces = two_basin_traces
        tr = next(t for t in traces if 0.0 < t.x0 < 0.5)
        K = sa.CellSet.of(g, [g.cell_of(0.25)])
        assert sa.in_basin(tr, K).in_basin

    def test_full_space_always_true(self, two_basin_traces):
        _, g, traces = two_basin_traces
        for tr in traces[:10]:
            v = sa.in_basin(tr, g.full_set())
            assert v.in_basin
            assert all(s >= 1.0 - 1e-12 for s in v.scores.values())

    def test_wrong_basin_false(self, two_basin_traces):
        _, g, traces = two_basin_traces
        tr = next(t for t in traces if 0.0 < t.x0 < 0.5)
        K = sa.CellSet.of(g, [g.cell_of(0.75)])
        assert not sa.in_basin(tr, K).in_basin

    def test_bowen_c_vs_x2_false(self, bowen_ledgers):
        trace = sa.symbolic_trace(bowen_ledgers["C"])
        K = sa.CellSet.of(trace.grid, [CELL_X2])
        verdict = sa.in_basin(trace, K, ladder=BOWEN_LADDER)
        assert not verdict.in_basin

    def test_bowen_a_vs_x2_true(self, bowen_ledgers):
        trace = sa.symbolic_trace(bowen_ledgers["A"])
        K = sa.CellSet.of(trace.grid, [CELL_X2])
        assert sa.in_basin(trace, K, ladder=BOWEN_LADDER).in_basin

    def test_empty_K_rejected(self, two_basin_traces):
        _, g, traces = two_basin_traces
        with pytest.raises(ValueError):
            sa.in_basin(traces[0], sa.CellSet.of(g, []))

    def test_K_monotonicity(self, two_basin_traces, rng):
        # K subset of K' makes membership only easier, exactly
        _, g, traces = two_basin_traces
        for _ in range(15):
            cells = rng.choice(g.size, size=40, replace=False).tolist()
            K = sa.CellSet.of(g, cells[:20])
            K2 = sa.CellSet.of(g, cells)
            for tr in traces[:8]:
                if sa.in_basin(tr, K).in_basin:
                    assert sa.in_basin(tr, K2).in_basin

    def test_forward_intersection_law(self, two_basin_traces, rng):
        # membership in the basin of an intersection forces membership in
        # both basins
        _, g, traces = two_basin_traces
        fp = [g.cell_of(0.25), g.cell_of(0.75)]
        for _ in range(15):
            base = rng.choice(g.size, size=60, replace=False).tolist()
            K1 = sa.CellSet.of(g, base[:40] + fp)
            K2 = sa.CellSet.of(g, base[20:] + fp)
            inter = K1.intersection(K2)
            for tr in traces[:8]:
                if sa.in_basin(tr, inter).in_basin:
                    assert sa.in_basin(tr, K1).in_basin
                    assert sa.in_basin(tr, K2).in_basin


class TestBasinFraction:
    def test_full_space(self, two_basin_traces):
        _, g, traces = two_basin_traces
        assert sa.basin_fraction(traces, g.full_set()) == 1.0

    def test_two_basin_split(self, two_basin_traces):
        _, g, traces = two_basin_traces
        K = sa.CellSet.of(g, [g.cell_of(0.25)])
        frac = sa.basin_fraction(traces, K)
        assert abs(frac - 0.5) < 0.05

    def test_empty_K_rejected(self, two_basin_traces):
        _, g, traces = two_basin_traces
        with pytest.raises(ValueError):
            sa.basin_fraction(traces, sa.CellSet.of(g, []))


class TestMinimalAlphaAttractor:
    def test_contraction_single_cell(self, contraction_traces):
        sys_map, g, traces = contraction_traces
        report = sa.minimal_alpha_attractor(traces, 1.0, g, map_sys=sys_map)
        assert report.cells.members == frozenset({0})
        assert report.fraction == 1.0
        assert report.diagnostics["f_image_occupancy"] > 0.99

    def test_doubling_retains_all_cells(self, doubling_traces):
        sys_map, g, traces = doubling_traces
        report = sa.minimal_alpha_attractor(traces, 1.0, g, map_sys=sys_map)
        assert len(report.cells) == g.size
        assert report.removal_trace == ()

    def test_two_basin_single_cell_at_low_alpha(self, two_basin_traces):
        sys_map, g, traces = two_basin_traces
        report = sa.minimal_alpha_attractor(traces, 0.4, g, map_sys=sys_map)
        assert len(report.cells) == 1
        cell = next(iter(report.cells.members))
        assert cell in (g.cell_of(0.25), g.cell_of(0.75))
        assert 0.4 <= report.fraction <= 0.6

    def test_alpha_validation(self, two_basin_traces):
        _, g, traces = two_basin_traces
        with pytest.raises(ValueError):
            sa.minimal_alpha_attractor(traces, 1.5, g)
        with pytest.raises(ValueError):
            sa.minimal_alpha_attractor(traces, 0.0, g)

    def test_local_minimality_certificate(self, two_basin_traces,
                                          contraction_traces):
        for fixture in (two_basin_traces, contraction_traces):
            sys_map, g, traces = fixture
            report = sa.minimal_alpha_attractor(traces, 1.0, g)
            assert report.certificate != ""
            assert report.fraction >= 1.0


class TestMinimalRestricted:
    def test_full_mask_reduces_to_plain(self, two_basin_traces):
        _, g, traces = two_basin_traces
        mask = np.ones(len(traces), dtype=bool)
        a = sa.minimal_alpha_attractor(traces, 0.4, g)
        b = sa.minimal_restricted(traces, mask, 0.4, g)
        assert a.cells.members == b.cells.members

    def test_left_half_mask(self, two_basin_traces):
        _, g, traces = two_basin_traces
        mask = np.array([0.0 < t.x0 < 0.5 for t in traces])
        report = sa.minimal_restricted(traces, mask, 0.4, g)
        assert report.cells.members == frozenset({g.cell_of(0.25)})

    def test_small_mask_unreachable(self, two_basin_traces):
        _, g, traces = two_basin_traces
        mask = np.zeros(len(traces), dtype=bool)
        mask[:10] = True
        with pytest.raises(AlphaUnreachableError, match="alpha unreachable"):
            sa.minimal_restricted(traces, mask, 0.4, g)


class TestMinimalAttracting:
    def test_single_trace_fixed_point(self, two_basin_traces):
        _, g, traces = two_basin_traces
        idx = next(i for i, t in enumerate(traces) if 0.5 < t.x0 < 1.0)
        mask = np.zeros(len(traces), dtype=bool)
        mask[idx] = True
        report = sa.minimal_attracting(traces, mask)
        assert report.cells.members == frozenset({g.cell_of(0.75)})
        assert report.support_symmetric_difference.members == frozenset()

    def test_contraction_constructions_agree(self, contraction_traces):
        _, g, traces = contraction_traces
        report = sa.minimal_attracting(traces)
        assert report.cells.members == frozenset({0})
        assert report.support_cells.members == frozenset({0})
        assert report.support_symmetric_difference.members == frozenset()

    def test_doubling_constructions_agree(self, doubling_traces):
        _, g, traces = doubling_traces
        report = sa.minimal_attracting(traces)
        assert len(report.cells) == g.size
        assert len(report.support_symmetric_difference) == 0

    def test_bowen_c_gives_both_saddles(self, bowen_ledgers):
        trace = sa.symbolic_trace(bowen_ledgers["C"])
        report = sa.minimal_attracting([trace], ladder=BOWEN_LADDER)
        assert report.cells.members == frozenset({CELL_X1, CELL_X2})
        assert report.support_cells.members == frozenset({CELL_X1, CELL_X2})
        assert len(report.support_symmetric_difference) == 0

    def test_bowen_a_gives_x2(self, bowen_ledgers):
        trace = sa.symbolic_trace(bowen_ledgers["A"])
        report = sa.minimal_attracting([trace], ladder=BOWEN_LADDER)
        assert report.cells.members == frozenset({CELL_X2})

    def test_empty_mask_rejected(self, two_basin_traces):
        _, _, traces = two_basin_traces
        with pytest.raises(ValueError):
            sa.minimal_attracting(traces, np.zeros(len(traces), dtype=bool))


class TestDecompose:
    def test_two_basin_two_attractors(self, two_basin_traces):
        sys_map, g, traces = two_basin_traces
        deco = sa.decompose(traces, 0.4, g, map_sys=sys_map)
        assert len(deco.entries) == 2
        assert deco.covered_fraction >= 0.99
        for entry in deco.entries:
            assert 0.4 <= entry.basin_fraction <= 0.6
            assert entry.alpha_i == 0.4
            assert len(entry.report.cells) == 1

    def test_single_global_attractor(self, contraction_traces):
        _, g, traces = contraction_traces
        deco = sa.decompose(traces, 0.5, g)
        assert len(deco.entries) == 1
        assert deco.covered_fraction == 1.0

    @pytest.mark.parametrize("alpha", [0.3, 0.4, 0.5, 1.0])
    def test_budget_respected(self, two_basin_traces, contraction_traces,
                              doubling_traces, alpha):
        for fixture in (two_basin_traces, contraction_traces, doubling_traces):
            _, g, traces = fixture
            deco = sa.decompose(traces, alpha, g)
            assert len(deco.entries) <= int(1.0 / alpha) + 1

    def test_alpha_one_unique_across_seeds(self):
        # the alpha = 1 attractor is unique; different Monte Carlo seeds must
        # agree up to a few cells
        g = sa.Grid(sa.CIRCLE, 1024)
        sys_map = sa.make_map("two_basin")
        cells = []
        for seed in (11, 12):
            x0s = sa.sample_lebesgue(g, 60, seed)
            traces = sa.run_orbits(sys_map, x0s, 50_000, g)
            deco = sa.decompose(traces, 1.0, g)
            assert len(deco.entries) == 1
            cells.append(deco.entries[0].report.cells.members)
        diff = cells[0] ^ cells[1]
        assert len(diff) <= 0.05 * max(len(cells[0]), len(cells[1]))

    def test_residuals_decrease(self, two_basin_traces):
        _, g, traces = two_basin_traces
        deco = sa.decompose(traces, 0.4, g)
        residuals = [e.residual_fraction for e in deco.entries]
        assert all(b <= a for a, b in zip(residuals, residuals[1:]))
