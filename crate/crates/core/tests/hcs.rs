use dstsp_core::dynamics::{DynamicsModel, Sigma};
use dstsp_core::hcs::{build_cover, build_hcs, estimate_branching, measure_alpha, BoxRegion, HcsError, HcsNode};
use dstsp_core::rng;
use rand::Rng;

fn unit_square() -> BoxRegion {
    BoxRegion { lo: [0.0; 3], hi: [1.0, 1.0, 0.0] }
}

fn car() -> DynamicsModel {
    DynamicsModel::ReedsShepp { c_pi: 1.0, r_min: 1.0 }
}

#[test]
fn located_cells_contain_their_points() {
    let mut r = rng::from_seed(31);
    for model in [DynamicsModel::euclidean2(), car()] {
        let cover = build_cover(&model, &unit_square(), 0.1, 2).unwrap();
        for _ in 0..2000 {
            let x = [r.random::<f64>(), r.random::<f64>(), 0.0];
            let (root, path) = cover.locate_path(&x, 3).unwrap();
            let cell = cover.cell_at(&model, root, path.stored());
            let reg = &cell.region;
            // the last tile also owns the upper support boundary
            assert!((0..2).all(|a| x[a] >= reg.lo[a] - 1e-12 && x[a] <= reg.hi[a] + 1e-12), "{x:?} {reg:?}");
            assert_eq!(cell.depth, 3);
        }
        assert!(matches!(cover.locate_root(&[1.5, 0.5, 0.0]), Err(HcsError::OutOfSupport(_))));
    }
}

#[test]
fn cover_tiles_the_support() {
    let model = DynamicsModel::euclidean2();
    let cover = build_cover(&model, &unit_square(), 0.3, 2).unwrap();
    assert_eq!(cover.counts, vec![4, 4]);
    let area: f64 = cover.roots.iter().map(|c| c.region.volume(2)).sum();
    assert!(area >= 1.0);
    let json = cover.to_json();
    assert_eq!(json["roots"].as_array().unwrap().len(), 16);
    assert!(json["roots"][0]["box"]["lo"].is_array() && json["gamma"] == 2);
}

#[test]
fn car_cells_lie_inside_reachable_sets() {
    let model = car();
    let mut r = rng::from_seed(32);
    let tree = build_hcs(&model, [0.3, 0.4, 0.0], 0.2, 2, 2).unwrap();
    fn walk(node: &HcsNode, out: &mut Vec<dstsp_core::hcs::Cell>) {
        out.push(node.cell.clone());
        node.children.iter().for_each(|c| walk(c, out));
    }
    let mut cells = Vec::new();
    walk(&tree, &mut cells);
    assert_eq!(cells.len(), 1 + 8 + 64);
    for cell in cells.iter().step_by(7) {
        let m = measure_alpha(cell, &model, 1.0, 400, &mut r).unwrap();
        assert!(m.reachable_fraction >= 0.99);
    }
}

#[test]
fn euclidean_alpha_and_branching() {
    let model = DynamicsModel::euclidean2();
    let mut r = rng::from_seed(33);
    let cover = build_cover(&model, &unit_square(), 0.1, 2).unwrap();
    let m = measure_alpha(&cover.roots[5], &model, std::f64::consts::PI, 2000, &mut r).unwrap();
    assert_eq!(m.reachable_fraction, 1.0);
    assert!((m.alpha - 1.0 / std::f64::consts::PI).abs() < 1e-9);
    // covering a disk of radius 2 by unit disks needs at least 4 and the
    // hexagonal arrangement manages with 7
    let b = estimate_branching(&model, &[0.5, 0.5, 0.0], 0.1, 4000, &mut r).unwrap();
    assert!((5..=16).contains(&b), "{b}");
}

#[test]
fn scaled_cells_use_the_slowest_speed() {
    let model = DynamicsModel::ScaledEuclidean2 { c_pi: 1.0, sigma: Sigma::SplitX { x_split: 0.5, left: 1.0, right: 2.0 } };
    let cover = build_cover(&model, &unit_square(), 0.25, 2).unwrap();
    assert_eq!(cover.counts, vec![4, 4]);
    let mut r = rng::from_seed(34);
    for cell in &cover.roots {
        assert!(measure_alpha(cell, &model, std::f64::consts::PI, 300, &mut r).is_ok());
    }
}

#[test]
fn diff_drive_has_no_cell_shape() {
    let dd = DynamicsModel::DiffDrive { c_pi: 1.0, omega_max: 1.0 };
    assert!(matches!(build_cover(&dd, &unit_square(), 0.1, 2), Err(HcsError::UnsupportedModel(_))));
}
