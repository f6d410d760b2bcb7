mod common;

use common::{cubic_field, operator, power_map};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stable_conley::compressed_flow::{compress_field, FiniteField};
use stable_conley::conley_engine::{
    build_index_pair, build_outer_map, check_isolation, closed_cells, conley_index, invariant_part,
    linear_index_shortcut, product_index_pair, relative_chain_complex, relative_homology, CombinatorialIndexPair,
    CubeSet, CubicalGrid, EngineConfig, HomologicalIndex, OuterMap,
};
use stable_conley::spectral_model::{Frame, Neighborhood, PermissibleField};
use stable_conley::subspace_lab::signature;

/// `v̇ = v − v³` on `e₀`.
fn bistable() -> FiniteField<f64> {
    compress_field(&cubic_field(&[-1.0], 1.0), &Frame::leading(1))
}

fn interval_grid(n: usize) -> (CubicalGrid<f64>, FiniteField<f64>) {
    let grid = CubicalGrid::new(vec![2.0], vec![n], 2).unwrap();
    let f = bistable().with_domain(vec![4.0]).unwrap();
    (grid, f)
}

/// Hull of `|S|` on a one-dimensional grid.
fn hull(grid: &CubicalGrid<f64>, s: &CubeSet) -> (f64, f64) {
    let lo = grid.bounds(*s.first().unwrap()).0[0];
    let hi = grid.bounds(*s.last().unwrap()).1[0];
    (lo, hi)
}

#[test]
fn bistable_invariant_set_covers_the_connecting_orbits() {
    let (grid, f) = interval_grid(64);
    let m = build_outer_map(&f, &grid, 0.5, 1e-10).unwrap();
    let region: CubeSet = (0..grid.len()).collect();
    let s = invariant_part(&m, &region);
    let (lo, hi) = hull(&grid, &s);
    let h = grid.cube_size(0);
    assert!(lo <= -1.0 && hi >= 1.0, "|S| = [{lo}, {hi}] misses [-1, 1]");
    assert!(lo >= -1.0 - h - 1e-12 && hi <= 1.0 + h + 1e-12, "|S| = [{lo}, {hi}] exceeds one cube");
    // A fine grid gives a subset of the coarse enclosure.
    let (fine, ff) = interval_grid(1024);
    let mf = build_outer_map(&ff, &fine, 0.5, 1e-10).unwrap();
    let sf = invariant_part(&mf, &(0..fine.len()).collect());
    let (flo, fhi) = hull(&fine, &sf);
    assert!(lo <= flo && fhi <= hi);
    assert!((flo + 1.0).abs() <= fine.cube_size(0) && (fhi - 1.0).abs() <= fine.cube_size(0));
}

#[test]
fn isolation_decisions_on_the_bistable_flow() {
    let (grid, f) = interval_grid(64);
    let m = build_outer_map(&f, &grid, 0.5, 1e-10).unwrap();
    assert!(check_isolation(&m, &grid.region(&Neighborhood::cube(0.5).unwrap())).isolated);
    assert!(!check_isolation(&m, &grid.region(&Neighborhood::cube(1.0).unwrap())).isolated);
    let cfg = EngineConfig::default();
    assert_eq!(
        conley_index(&bistable(), &Neighborhood::cube(2.0).unwrap(), &cfg).unwrap().homology,
        HomologicalIndex::sphere(0)
    );
    assert_eq!(
        conley_index(&bistable(), &Neighborhood::cube(0.5).unwrap(), &cfg).unwrap().homology,
        HomologicalIndex::sphere(1)
    );
}

/// Cubes whose closure contains `p`, or `None` off the grid.
fn cubes_at(grid: &CubicalGrid<f64>, p: &[f64]) -> Option<Vec<usize>> {
    let (cubes, outside) = grid.cubes_meeting(p, p);
    if outside || cubes.is_empty() {
        None
    } else {
        Some(cubes)
    }
}

fn check_samples(grid: &CubicalGrid<f64>, m: &OuterMap, flow: impl Fn(&[f64]) -> Vec<f64>, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..1000 {
        let c = rng.random_range(0..grid.len());
        let (lo, hi) = grid.bounds(c);
        let x: Vec<f64> = lo.iter().zip(&hi).map(|(&a, &b)| rng.random_range(a..b)).collect();
        let y = flow(&x);
        let image = m.image(c);
        match cubes_at(grid, &y) {
            Some(cubes) => assert!(cubes.iter().any(|t| image.contains(t)), "φ({x:?}) = {y:?} missed by m({c})"),
            None => assert!(image.contains(&m.outside()), "φ({x:?}) left the grid but m({c}) stays"),
        }
    }
}

#[test]
fn outer_map_contains_exact_images() {
    let (grid, f) = interval_grid(64);
    let m = build_outer_map(&f, &grid, 0.5, 1e-10).unwrap();
    // Closed form of v̇ = v − v³.
    let exact = |x: &[f64]| {
        let (v, e) = (x[0], 1.0f64.exp());
        vec![v * e.sqrt() / (1.0 + v * v * (e - 1.0)).sqrt()]
    };
    check_samples(&grid, &m, exact, 7);
}

fn rk4(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], t: f64, steps: usize) -> Vec<f64> {
    let h = t / steps as f64;
    let mut y = x.to_vec();
    let axpy = |y: &[f64], k: &[f64], s: f64| y.iter().zip(k).map(|(a, b)| a + s * b).collect::<Vec<_>>();
    for _ in 0..steps {
        let k1 = f(&y);
        let k2 = f(&axpy(&y, &k1, h / 2.0));
        let k3 = f(&axpy(&y, &k2, h / 2.0));
        let k4 = f(&axpy(&y, &k3, h));
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

#[test]
fn outer_map_contains_integrated_images_in_two_dimensions() {
    // f = diag(1, −1)v + (0, v₀²): saddle with a quadratic coupling.
    let field = PermissibleField::new(operator(&[1.0, -1.0]), power_map(&[(1, 0, 2, 1.0)], vec![0], 8.0));
    let x = Neighborhood::ball(1.0).unwrap();
    let grid = CubicalGrid::around(&x, 2, 16, 2).unwrap();
    let f = compress_field(&field, &Frame::leading(2))
        .with_domain(grid.half_widths().iter().map(|w| 2.0 * w).collect())
        .unwrap();
    let m = build_outer_map(&f, &grid, 0.5, 1e-10).unwrap();
    let rhs = |v: &[f64]| vec![-v[0], v[1] - v[0] * v[0]];
    check_samples(&grid, &m, |p| rk4(&rhs, p, 0.5, 2000), 11);
}

#[test]
fn linear_shortcut_matches_the_pipeline() {
    let l = operator(&[1.0, -1.0, 2.0]);
    let sig = signature(&l, &Frame::leading(3), None);
    assert_eq!(linear_index_shortcut(&sig).unwrap(), HomologicalIndex::sphere(1));
    let f = compress_field(&PermissibleField::linear(l), &Frame::leading(2));
    let idx = conley_index(&f, &Neighborhood::cube(1.0).unwrap(), &EngineConfig::default()).unwrap();
    assert_eq!(
        idx.homology,
        linear_index_shortcut(&signature(&operator(&[1.0, -1.0]), &Frame::leading(2), None)).unwrap()
    );
    let degenerate = signature(&operator(&[0.0, 1.0]), &Frame::leading(2), None);
    assert!(linear_index_shortcut(&degenerate).is_err());
}

fn pair(shape: usize, support: usize, p1: &[usize], p0: &[usize]) -> CombinatorialIndexPair {
    CombinatorialIndexPair::new(vec![shape], vec![support], p1.iter().copied().collect(), p0.iter().copied().collect())
        .unwrap()
}

#[test]
fn products_of_index_pairs() {
    let interval = pair(8, 0, &[2, 3, 4, 5], &[2, 5]);
    assert_eq!(relative_homology(&interval).unwrap(), HomologicalIndex::sphere(1));
    let square =
        product_index_pair(&interval, &CombinatorialIndexPair { support: vec![1], ..interval.clone() }).unwrap();
    let h = relative_homology(&square).unwrap();
    assert_eq!(h.rational(), vec![0, 0, 1]);
    assert_eq!(h, HomologicalIndex::sphere(1).kunneth(&HomologicalIndex::sphere(1)));
    let point = pair(8, 1, &[3], &[]);
    let with_point = product_index_pair(&interval, &point).unwrap();
    assert_eq!(relative_homology(&with_point).unwrap(), HomologicalIndex::sphere(1));
    let attractor = pair(8, 1, &[3, 4], &[]);
    assert_eq!(
        relative_homology(&product_index_pair(&interval, &attractor).unwrap()).unwrap(),
        HomologicalIndex::sphere(1)
    );
}

/// `Inv` by counting: `c` has forward and backward paths of length `|region|`
/// inside the region.
fn brute_invariant(adj: &[Vec<usize>], region: &CubeSet) -> CubeSet {
    let n = region.len();
    let mut fwd = region.clone();
    let mut bwd = region.clone();
    for _ in 0..n {
        fwd = region.iter().copied().filter(|&c| adj[c].iter().any(|t| fwd.contains(t))).collect();
        bwd = region
            .iter()
            .copied()
            .filter(|&c| region.iter().any(|&p| bwd.contains(&p) && adj[p].contains(&c)))
            .collect();
    }
    fwd.intersection(&bwd).copied().collect()
}

fn random_map() -> impl Strategy<Value = (Vec<usize>, Vec<Vec<usize>>, CubeSet)> {
    (1usize..=12, prop::option::of(1usize..=12)).prop_flat_map(|(a, b)| {
        let shape: Vec<usize> = std::iter::once(a).chain(b).collect();
        let n: usize = shape.iter().product();
        let adj = prop::collection::vec(prop::collection::vec(0..=n, 1..4), n);
        let region = prop::collection::btree_set(0..n, 0..=n);
        (Just(shape), adj, region)
    })
}

fn grid_shape(d: usize, n: usize) -> impl Strategy<Value = (Vec<usize>, CubeSet, CubeSet)> {
    let total = n.pow(d as u32);
    (prop::collection::btree_set(0..total, 1..total), any::<u64>()).prop_map(move |(p1, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p0 = p1.iter().copied().filter(|_| rng.random_bool(0.3)).collect();
        (vec![n; d], p1, p0)
    })
}

fn euler(cells: &std::collections::BTreeSet<Vec<u32>>) -> i64 {
    cells.iter().map(|c| if c.iter().filter(|&&k| k % 2 == 1).count() % 2 == 0 { 1 } else { -1 }).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scc_invariant_part_matches_brute_force((shape, adj, region) in random_map()) {
        let m = OuterMap::from_adjacency(shape.clone(), (0..shape.len()).collect(), adj.clone()).unwrap();
        prop_assert_eq!(invariant_part(&m, &region), brute_invariant(&adj, &region));
    }

    #[test]
    fn relative_euler_characteristic_is_consistent((shape, p1, p0) in grid_shape(2, 6)) {
        let pair = CombinatorialIndexPair::new(shape.clone(), vec![0, 1], p1.clone(), p0.clone()).unwrap();
        let h = relative_homology(&pair).unwrap();
        let cc = relative_chain_complex(&shape, &p1, &p0);
        let chi_cells = euler(&closed_cells(&shape, &p1)) - euler(&closed_cells(&shape, &p0));
        prop_assert_eq!(h.euler_characteristic(), cc.euler_characteristic());
        prop_assert_eq!(h.euler_characteristic(), chi_cells);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn emitted_pairs_satisfy_the_axioms(a in 0.5f64..2.0, b in 0.5f64..2.0, sa in any::<bool>(), sb in any::<bool>()) {
        let core = [if sa { a } else { -a }, if sb { b } else { -b }];
        let f = compress_field(&PermissibleField::linear(operator(&core)), &Frame::leading(2));
        let x = Neighborhood::cube(1.0).unwrap();
        let grid = CubicalGrid::around(&x, 2, 16, 2).unwrap();
        let f = f.with_domain(grid.half_widths().iter().map(|w| 2.0 * w).collect()).unwrap();
        let m = build_outer_map(&f, &grid, 0.5, 1e-10).unwrap();
        let pair = build_index_pair(&m, &grid.region(&x)).unwrap();
        prop_assert!(pair.violations(&m).is_empty());
        let unstable = core.iter().filter(|&&l| l < 0.0).count();
        prop_assert_eq!(relative_homology(&pair).unwrap(), HomologicalIndex::sphere(unstable));
    }
}
