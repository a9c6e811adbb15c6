import numpy as np
from django.test import SimpleTestCase

from catenary.curve_utils.fitting import FitConfig
from wires.ml_utils.refinement import UNASSIGNED, RefineConfig, WireRefiner, refine

CONFIG = RefineConfig(fit=FitConfig(wind_correction=False))


def hanging_wire(offset=0.0, a=200.0, x_range=(-50.0, 50.0), spacing=0.5, noise=0.02, seed=0, height=30.0):
    """Points on z = height + a (cosh(x / a) - 1) in the plane y = offset."""
    rng = np.random.default_rng(seed)
    x = np.arange(x_range[0], x_range[1] + spacing / 2, spacing)
    xyz = np.column_stack([x, np.full_like(x, offset), height + a * (np.cosh(x / a) - 1.0)])
    return xyz + rng.normal(0.0, noise, xyz.shape)


def member_sets(clusters):
    return sorted(frozenset(c.member_indices.tolist()) for c in clusters)


class RefineConfigTests(SimpleTestCase):
    def test_validation(self):
        with self.assertRaises(ValueError):
            RefineConfig(wire_separation=0.0)
        with self.assertRaises(ValueError):
            RefineConfig(max_rounds=0)
        with self.assertRaises(ValueError):
            RefineConfig(merge_rms_factor=-1.0)
        with self.assertRaises(ValueError):
            RefineConfig(max_seed_loss=1.0)


class WireRefinerTests(SimpleTestCase):
    def setUp(self):
        self.first = hanging_wire(0.0, seed=1)
        self.second = hanging_wire(2.0, seed=2)
        self.xyz = np.vstack([self.first, self.second])
        self.truth = [np.arange(len(self.first)), np.arange(len(self.first), len(self.xyz))]

    def test_parallel_wires_stay_apart(self):
        clusters, unassigned = refine(self.xyz, self.truth, CONFIG)
        self.assertEqual(len(clusters), 2)
        self.assertEqual(member_sets(clusters), member_sets_of(self.truth))
        self.assertEqual(unassigned.size, 0)

    def test_correct_start_is_stable(self):
        clusters, _ = WireRefiner(self.xyz, CONFIG).refine(self.truth)
        self.assertTrue(all(c.stable for c in clusters))

    def test_recovers_from_cross_talk(self):
        rng = np.random.default_rng(9)
        first, second = (g.copy() for g in self.truth)
        swap = rng.choice(len(first), size=len(first) // 50, replace=False)
        first[swap], second[swap] = second[swap].copy(), first[swap].copy()
        clusters, unassigned = refine(self.xyz, [first, second], CONFIG)
        self.assertEqual(member_sets(clusters), member_sets_of(self.truth))
        self.assertEqual(unassigned.size, 0)

    def test_halves_of_one_wire_merge(self):
        xyz = self.first
        half = len(xyz) // 2
        clusters, unassigned = refine(xyz, [np.arange(half), np.arange(half, len(xyz))], CONFIG)
        self.assertEqual(len(clusters), 1)
        self.assertEqual(clusters[0].size, len(xyz))
        self.assertEqual(clusters[0].cluster_id, 0)

    def test_short_wire_dissolved(self):
        x = np.linspace(-1.5, 1.5, 61)
        xyz = np.column_stack([x, np.zeros_like(x), 10.0 + np.cosh(x)])
        refiner = WireRefiner(xyz, CONFIG)
        clusters, unassigned = refiner.refine([np.arange(len(xyz))])
        self.assertEqual(clusters, [])
        self.assertEqual(unassigned.tolist(), list(range(len(xyz))))
        self.assertEqual([d['reason'] for d in refiner.dissolved], ['too_short'])

    def test_straight_group_dissolved(self):
        x = np.linspace(0, 20, 40)
        xyz = np.column_stack([x, np.zeros_like(x), np.full_like(x, 5.0)])
        refiner = WireRefiner(xyz, CONFIG)
        clusters, released = refiner.fit_groups([np.arange(len(xyz))])
        self.assertEqual(clusters, [])
        self.assertEqual(released.size, len(xyz))
        self.assertTrue(refiner.dissolved[0]['reason'].startswith('not_catenary:'))

    def test_ties_go_to_lower_index(self):
        refiner = WireRefiner(self.first, CONFIG)
        group = np.arange(len(self.first))
        clusters, _ = refiner.fit_groups([group, group])
        labels = refiner.assign_points(clusters)
        self.assertTrue(np.all(labels == 0))
        self.assertEqual(clusters[1].size, 0)

    def test_points_beyond_reach_are_unassigned(self):
        far = np.array([[0.0, 5.0, 30.0], [200.0, 0.0, 150.0]])
        refiner = WireRefiner(np.vstack([self.first, far]), CONFIG)
        clusters, _ = refiner.fit_groups([np.arange(len(self.first))])
        labels = refiner.assign_points(clusters)
        self.assertEqual(labels[-2:].tolist(), [UNASSIGNED, UNASSIGNED])
        nearest, dist, _ = refiner.nearest_curves(clusters)
        self.assertTrue(np.isinf(dist[-1]))
        self.assertEqual(nearest[-1], UNASSIGNED)

    def test_end_search_attaches_points_past_the_end(self):
        xyz = hanging_wire(0.0, x_range=(-50.0, 55.0), noise=0.01, seed=3)
        inner = np.flatnonzero(xyz[:, 0] <= 50.0)
        outer = np.flatnonzero(xyz[:, 0] > 50.0)
        refiner = WireRefiner(xyz, CONFIG)
        clusters, _ = refiner.fit_groups([inner])
        before = clusters[0].curve.length
        labels = np.full(len(xyz), UNASSIGNED)
        labels[clusters[0].member_indices] = 0
        labels = refiner.extend_ends(clusters, labels)
        self.assertTrue(np.all(labels[outer] == 0))
        self.assertGreater(clusters[0].curve.length, before + 4.0)
        self.assertEqual(clusters[0].size, len(xyz))

    def test_objective_is_small_for_good_fits(self):
        refiner = WireRefiner(self.xyz, CONFIG)
        clusters, _ = refiner.fit_groups(self.truth)
        self.assertLess(refiner.objective(clusters), len(self.xyz) * 0.01)

    def test_refine_records_one_objective_per_round(self):
        refiner = WireRefiner(self.xyz, CONFIG)
        refiner.refine(self.truth)
        self.assertTrue(refiner.stable)
        self.assertEqual(len(refiner.objective_trace), refiner.rounds)
        self.assertLess(refiner.objective_trace[-1], len(self.xyz) * 0.01)

    def test_unchanged_clusters_are_not_refit(self):
        refiner = WireRefiner(self.xyz, CONFIG)
        clusters, _ = refiner.fit_groups(self.truth)
        refiner.assign_points(clusters)
        self.assertTrue(all(c.current for c in clusters))
        refreshed = refiner.update_curves(clusters)
        self.assertEqual(len(refreshed), 2)
        for before, after in zip(clusters, refreshed):
            self.assertIs(before, after)

        clusters[0].member_indices = clusters[0].member_indices[:-3]
        refreshed = refiner.update_curves(clusters)
        self.assertIsNot(refreshed[0], clusters[0])
        self.assertIs(refreshed[1], clusters[1])
        self.assertEqual([c.cluster_id for c in refreshed], [c.cluster_id for c in clusters])

    def test_merge_candidates_skip_distant_curves(self):
        far = hanging_wire(50.0, seed=4)
        xyz = np.vstack([self.first, far])
        refiner = WireRefiner(xyz, CONFIG)
        clusters, _ = refiner.fit_groups([np.arange(len(self.first)), np.arange(len(self.first), len(xyz))])
        self.assertEqual(refiner.merge_candidates(clusters), [])
        near, _ = WireRefiner(self.xyz, CONFIG).fit_groups(self.truth)
        self.assertEqual(WireRefiner(self.xyz, CONFIG).merge_candidates(near), [(0, 1)])

    def test_rejected_merge_is_not_refit(self):
        refiner = WireRefiner(self.xyz, CONFIG)
        clusters, _ = refiner.fit_groups(self.truth)
        self.assertEqual(len(refiner.merge_similar(clusters)), 2)
        rejected = len(refiner._rejected)
        self.assertGreater(rejected, 0)
        self.assertEqual(len(refiner.merge_similar(clusters)), 2)
        self.assertEqual(len(refiner._rejected), rejected)


class SeedTests(SimpleTestCase):
    """Partitions too straight to fit alone, as sub-span pieces of a shallow wire are."""

    @staticmethod
    def quarters(xyz, offset=0):
        x = xyz[:, 0]
        return [offset + np.flatnonzero((x >= lo) & (x < hi))
                for lo, hi in ((-60.0, -25.0), (-25.0, 0.0), (0.0, 25.0), (25.0, 60.0))]

    def test_straight_pieces_join_into_one_wire(self):
        xyz = hanging_wire(0.0, a=500.0, seed=5)
        refiner = WireRefiner(xyz, CONFIG)
        clusters, _ = refiner.fit_groups(self.quarters(xyz))
        self.assertEqual(clusters, [])

        refiner = WireRefiner(xyz, CONFIG)
        clusters, unassigned = refiner.refine(self.quarters(xyz))
        self.assertEqual(len(clusters), 1)
        self.assertEqual(clusters[0].size, len(xyz))
        self.assertEqual(clusters[0].cluster_id, 0)
        self.assertEqual(unassigned.size, 0)
        self.assertEqual(refiner.dissolved, [])

    def test_pieces_of_parallel_wires_stay_on_their_wire(self):
        first = hanging_wire(0.0, a=500.0, seed=6)
        second = hanging_wire(2.0, a=500.0, seed=7)
        xyz = np.vstack([first, second])
        groups = self.quarters(first) + self.quarters(second, offset=len(first))
        clusters, unassigned = refine(xyz, groups, CONFIG)
        truth = [np.arange(len(first)), np.arange(len(first), len(xyz))]
        self.assertEqual(member_sets(clusters), member_sets_of(truth))
        self.assertEqual(unassigned.size, 0)

    def test_tiny_group_joins_its_neighbour(self):
        xyz = hanging_wire(0.0, seed=8)
        refiner = WireRefiner(xyz, CONFIG)
        clusters = refiner.seed([np.arange(len(xyz) - 6), np.arange(len(xyz) - 6, len(xyz))])
        self.assertEqual(len(clusters), 1)
        self.assertEqual(clusters[0].size, len(xyz))
        self.assertEqual(refiner.dissolved, [])

    def test_lone_straight_group_is_dissolved(self):
        x = np.linspace(0, 20, 40)
        xyz = np.column_stack([x, np.zeros_like(x), np.full_like(x, 5.0)])
        refiner = WireRefiner(xyz, CONFIG)
        self.assertEqual(refiner.seed([np.arange(20), np.arange(20, 40)]), [])
        self.assertEqual(len(refiner.dissolved), 1)
        self.assertEqual(refiner.dissolved[0]['points'], 40)
        self.assertTrue(refiner.dissolved[0]['reason'].startswith('not_catenary:'))


class BoundedAssignmentTests(SimpleTestCase):
    """A curve only claims points over its extent; past an end it is measured to the end point."""

    def setUp(self):
        full = hanging_wire(0.6, a=200.0, noise=0.0, seed=10)
        short = hanging_wire(0.0, a=200.0, x_range=(-50.0, 0.0), noise=0.0, seed=11)
        # on the short wire's curve, three meters past its end
        beyond = np.array([[3.0, 0.0, 30.0 + 200.0 * (np.cosh(3.0 / 200.0) - 1.0)]])
        self.xyz = np.vstack([full, short, beyond])
        self.groups = [np.arange(len(full)), np.arange(len(full), len(full) + len(short))]
        self.beyond = len(self.xyz) - 1

    def test_point_past_an_end_goes_to_the_wire_that_spans_it(self):
        refiner = WireRefiner(self.xyz, CONFIG)
        clusters, _ = refiner.fit_groups(self.groups)
        _, free_dist = refiner.fitter.distances(clusters[1].curve, self.xyz[[self.beyond]])
        self.assertLess(free_dist[0], 0.05)
        nearest, dist, _ = refiner.nearest_curves(clusters)
        self.assertEqual(nearest[self.beyond], 0)
        self.assertAlmostEqual(dist[self.beyond], 0.6, delta=0.05)
        labels = refiner.assign_points(clusters)
        self.assertEqual(labels[self.beyond], 0)

    def test_point_past_an_end_with_no_rival_extends_the_wire(self):
        xyz = self.xyz[len(self.groups[0]):]
        short = self.groups[1] - len(self.groups[0])
        refiner = WireRefiner(xyz, CONFIG)
        clusters, _ = refiner.fit_groups([short])
        labels = refiner.assign_points(clusters)
        self.assertEqual(labels[-1], UNASSIGNED)
        labels = refiner.extend_ends(clusters, labels)
        self.assertEqual(labels[-1], 0)
        self.assertGreaterEqual(clusters[0].curve.x_max - clusters[0].curve.x_min, 52.0)


def member_sets_of(groups):
    return sorted(frozenset(np.asarray(g).tolist()) for g in groups)
