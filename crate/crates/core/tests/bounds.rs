use dstsp_core::bounds::{
    beta_constant, cost_field, holder_gap, integral_of_inverse, interaction_integral, lower_reg, lucrativity,
    sample_density, upper_reg, worst_case_density,
};
use dstsp_core::field::GridField;
use dstsp_core::{rng, Field, Field32};
use rand::Rng;

fn line(k: usize, f: impl Fn(f64) -> f64) -> Field {
    GridField::from_fn(vec![0.0], 1.0 / k as f64, vec![k], |c| f(c[0])).unwrap()
}

fn random_field<R: Rng>(r: &mut R, k: usize, mut draw: impl FnMut(&mut R) -> f64) -> Field {
    let values = (0..k * k).map(|_| draw(r)).collect();
    Field::unit_square(k, |_| 0.0).with_values(values).unwrap()
}

fn two_valued_g(k: usize) -> Field {
    Field::unit_square(k, |c| if c[0] < 0.5 { 1.0 } else { 4.0 })
}

// Brute-force sup-convolution on an arbitrary set of probe points.
fn sup_conv(xs: &[f64], hs: &[f64], zeta: f64, y: f64) -> f64 {
    xs.iter().zip(hs).map(|(x, h)| h.max(zeta) - (y - x).abs() / zeta).fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn step_envelope_matches_direct_convolution() {
    // centers at multiples of 1/400 from 0 to 1
    let k = 401;
    let h = 1.0 / 400.0;
    let vals: Vec<f64> = (0..k).map(|i| if i <= 200 { 1.0 } else { 0.0 }).collect();
    let step = GridField::new(vec![-h / 2.0], h, vec![k], vals).unwrap();
    let up = upper_reg(&step, 0.1).unwrap();
    let xs: Vec<f64> = (0..k).map(|i| step.center(i)[0]).collect();
    for (i, &x) in xs.iter().enumerate() {
        assert!((up.values()[i] - sup_conv(&xs, step.values(), 0.1, x)).abs() < 1e-12);
    }
    assert!((up.values()[220] - 0.5).abs() < 1e-9);
    assert!((up.values()[240] - 0.1).abs() < 1e-9);
    // mirrored for the lower envelope
    let flipped = step.map(|v| 1.0 - v);
    let lo = lower_reg(&flipped, 0.1).unwrap();
    assert!((lo.values()[220] - 0.5).abs() < 1e-9);
    assert!((lo.values()[240] - 1.0).abs() < 1e-9);
}

#[test]
fn regularization_invariants() {
    let mut r = rng::from_seed(21);
    let k = 24;
    let fields: Vec<Field> = vec![
        Field::unit_square(k, |c| if c[0] < 0.3 && c[1] > 0.6 { 3.0 } else { 0.02 }),
        Field::unit_square(k, |c| 1.0 + (6.0 * c[0]).sin() * (4.0 * c[1]).cos()),
        random_field(&mut r, k, |r| r.random_range(0.0..5.0)),
    ];
    for h in &fields {
        for &zeta in &[0.05, 0.1, 0.3] {
            let up = upper_reg(h, zeta).unwrap();
            let lo = lower_reg(h, zeta).unwrap();
            let bound = h.cell_size() / zeta + 1e-12;
            for i in 0..h.len() {
                assert!(up.values()[i] >= h.values()[i].max(zeta));
                assert!(lo.values()[i] <= h.values()[i].min(1.0 / zeta));
                for j in [i + 1, i + k] {
                    if j < h.len() && (j == i + k || (i + 1) % k != 0) {
                        assert!((up.values()[i] - up.values()[j]).abs() <= bound);
                        assert!((lo.values()[i] - lo.values()[j]).abs() <= bound);
                    }
                }
            }
            let again = upper_reg(&up, zeta).unwrap();
            assert!(again.values().iter().zip(up.values()).all(|(a, b)| (a - b).abs() < 1e-12));
            let again = lower_reg(&lo, zeta).unwrap();
            assert!(again.values().iter().zip(lo.values()).all(|(a, b)| (a - b).abs() < 1e-12));
        }
        // the upper envelope grows with zeta and the lower one shrinks
        for w in [0.05, 0.1, 0.3].windows(2) {
            let (a, b) = (upper_reg(h, w[0]).unwrap(), upper_reg(h, w[1]).unwrap());
            assert!(a.values().iter().zip(b.values()).all(|(x, y)| x <= y));
            let (a, b) = (lower_reg(h, w[0]).unwrap(), lower_reg(h, w[1]).unwrap());
            assert!(a.values().iter().zip(b.values()).all(|(x, y)| x >= y));
        }
    }
}

#[test]
fn envelopes_converge_at_continuity_cells() {
    let h = line(400, |x| 0.5 + 0.3 * (5.0 * x).sin() + if x > 0.7 { 1.0 } else { 0.0 });
    let mut prev = f64::INFINITY;
    for &zeta in &[0.2, 0.1, 0.05, 0.01] {
        let up = upper_reg(&h, zeta).unwrap();
        // cells well inside the smooth part
        let gap = (0..h.len())
            .filter(|&i| (h.center(i)[0] - 0.7).abs() > 0.1)
            .map(|i| up.values()[i] - h.values()[i])
            .fold(0.0, f64::max);
        assert!(gap <= prev);
        prev = gap;
    }
    assert!(prev < 1e-9);
}

#[test]
fn interaction_integral_closed_forms() {
    let uniform = Field::unit_square(64, |_| 1.0);
    let g1 = Field::unit_square(64, |_| 1.0);
    let gpi = Field::unit_square(64, |_| std::f64::consts::PI);
    assert!((interaction_integral(&uniform, &g1, 2.0).unwrap() - 1.0).abs() < 1e-12);
    assert!((interaction_integral(&uniform, &gpi, 2.0).unwrap() - std::f64::consts::PI.powf(-0.5)).abs() < 1e-12);
    let linear = Field::unit_square(128, |c| 2.0 * c[0]);
    let j = interaction_integral(&linear, &Field::unit_square(128, |_| 1.0), 2.0).unwrap();
    // int_0^1 sqrt(2x) dx = (2/3) sqrt 2
    assert!((j - 2.0 / 3.0 * 2f64.sqrt()).abs() < 1e-4);
    let f32_uniform = Field32::unit_square(16, |_| 1.0);
    let j32 = interaction_integral(&f32_uniform, &f32_uniform, 3.0).unwrap();
    assert!((j32 - 1.0).abs() < 1e-5);
}

#[test]
fn beta_branches_meet_at_the_boundary() {
    for (gamma, sym) in [(2.0, true), (3.0, true), (2.0, false)] {
        let r: f64 = if sym { 1.5 } else { 2.0 };
        let rg = r.powf(gamma);
        // both branches give xi = 3 when ln b = r^gamma
        let xi = |lb: f64| if lb > rg { 3.0 * lb / rg } else { 3.0 * (lb / rg).sqrt() };
        assert!((xi(rg * (1.0 + 1e-12)) - xi(rg)).abs() < 1e-9);
        for b in 2..200u64 {
            let (x, beta) = beta_constant(b, gamma, sym);
            assert!((x - xi((b as f64).ln())).abs() < 1e-12);
            assert!((beta - (1.0 + x) * rg).abs() < 1e-12);
        }
    }
}

fn random_density<R: Rng>(r: &mut R, k: usize) -> Field {
    random_field(r, k, |r| if r.random_bool(0.2) { 0.0 } else { r.random_range(0.0..1.0f64).powi(3) })
        .normalized()
        .unwrap()
}

#[test]
fn holder_inequality_sweep() {
    let mut r = rng::from_seed(22);
    let k = 16;
    for _ in 0..5 {
        let g = random_field(&mut r, k, |r| r.random_range(0.2..8.0));
        let cap = integral_of_inverse(&g, None).sqrt();
        for _ in 0..100 {
            let f = random_density(&mut r, k);
            assert!(interaction_integral(&f, &g, 2.0).unwrap() <= cap + 1e-9);
            assert!(holder_gap(&f, &g, 2.0, None).unwrap() >= -1e-9);
        }
        let fstar = worst_case_density(&g, None).unwrap();
        assert!((fstar.integral() - 1.0).abs() < 1e-9);
        assert!(holder_gap(&fstar, &g, 2.0, None).unwrap().abs() < 1e-6);
    }
}

#[test]
fn two_valued_agility_examples() {
    let g = two_valued_g(32);
    assert!((integral_of_inverse(&g, None) - 0.625).abs() < 1e-12);
    let fstar = worst_case_density(&g, None).unwrap();
    assert!((fstar.value_at(&[0.2, 0.5]).unwrap() - 1.6).abs() < 1e-12);
    assert!((fstar.value_at(&[0.8, 0.5]).unwrap() - 0.4).abs() < 1e-12);
    assert!((interaction_integral(&fstar, &g, 2.0).unwrap() - 0.625f64.sqrt()).abs() < 1e-12);
    let uniform = Field::unit_square(32, |_| 1.0);
    let gap = holder_gap(&uniform, &g, 2.0, None).unwrap();
    assert!((gap - (0.625f64.sqrt() - 0.75)).abs() < 1e-12);

    let mut rr = rng::from_seed(23);
    let pts = sample_density(&fstar, 100_000, &mut rr).unwrap();
    let left = pts.iter().filter(|p| p[0] < 0.5).count() as f64;
    let ratio = left / (pts.len() as f64 - left);
    assert!((ratio / 4.0 - 1.0).abs() < 0.02, "{ratio}");
}

#[test]
fn uniform_sampler_passes_chi_square() {
    let f = Field::unit_square(64, |_| 1.0);
    let n = 100_000;
    let pts = sample_density(&f, n, &mut rng::from_seed(24)).unwrap();
    let mut counts = [0usize; 16];
    for p in &pts {
        let i = (p[0] * 4.0).floor().min(3.0) as usize + 4 * (p[1] * 4.0).floor().min(3.0) as usize;
        counts[i] += 1;
    }
    let e = n as f64 / 16.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    // 0.999 quantile of chi-square with 15 degrees of freedom
    assert!(chi2 < 37.70, "{chi2}");
}

#[test]
fn cost_field_dominates_lucrativity_and_converges() {
    let f = Field::unit_square(32, |c| if c[0] < 0.5 { 0.0 } else { 2.0 });
    let g = Field::unit_square(32, |c| 1.0 + c[1]);
    let star = lucrativity(&f, &g, 2.0).unwrap();
    let mut prev = f64::INFINITY;
    for &zeta in &[0.2, 0.1, 0.05] {
        let c = cost_field(&f, &g, zeta, 2.0).unwrap();
        assert!(c.values().iter().all(|&v| v >= zeta - 1e-15));
        assert!(c.values().iter().zip(star.values()).all(|(a, b)| a >= b));
        let gap = (0..c.len())
            .filter(|&i| (f.center(i)[0] - 0.5).abs() > 0.3)
            .map(|i| c.values()[i] - star.values()[i])
            .fold(0.0, f64::max);
        assert!(gap <= prev);
        prev = gap;
    }
}
