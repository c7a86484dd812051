use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ternary::coreshell::*;
use ternary::energy::{InteractionMatrix, SurfaceTensions};
use ternary::sharp::MassPair;

fn degenerate() -> SurfaceTensions {
    SurfaceTensions::new(1.0, 2.0, 1.0).unwrap()
}

#[test]
fn disk_self_interaction_scaling_identity() {
    let r = 0.37;
    let lambda: f64 = 2.0;
    let lhs = i22(lambda * r);
    let rhs = lambda.powi(4) * i22(r) - lambda.powi(4) * lambda.ln() * (PI * r * r).powi(2) / (2.0 * PI);
    assert!((lhs - rhs).abs() < 1e-8 * lhs.abs().max(1e-3));
}

#[test]
fn disk_self_interaction_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 10_000_000usize;
    let mut point = || loop {
        let x: f64 = rng.gen_range(-1.0..1.0);
        let y: f64 = rng.gen_range(-1.0..1.0);
        if x * x + y * y < 1.0 {
            return (x, y);
        }
    };
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let (a, b) = (point(), point());
        let v = -0.5 * ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).ln();
        s += v;
        s2 += v * v;
    }
    let mean = s / n as f64;
    let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
    // I = (1/2π) |B|² E[log 1/|x−y|].
    let scale = PI * PI / (2.0 * PI);
    let est = scale * mean;
    assert!((i22(1.0) - est).abs() < 3.0 * scale * se, "{} vs {est} ± {}", i22(1.0), scale * se);
}

#[test]
fn outer_potential_matches_radial_reduction() {
    for r1 in [0.2, 0.5, 1.3] {
        let g = CoreShellGeometry::new(r1, 0.1, 0.0).unwrap();
        // Radial quadrature by the midpoint rule on a fine mesh.
        let n = 200_000;
        let h = r1 / n as f64;
        let radial: f64 = (0..n)
            .map(|k| {
                let s = (k as f64 + 0.5) * h;
                2.0 * PI * s * (1.0 / s).ln() * h
            })
            .sum();
        let closed = PI * r1 * r1 * (0.5 - r1.ln());
        let v = outer_disk_potential_at_core(&g);
        assert!((v - closed).abs() < 1e-9 * closed.abs());
        assert!((radial - closed).abs() < 1e-7 * closed.abs());
    }
}

#[test]
fn interaction_even_and_decreasing_in_offset() {
    let base = CoreShellGeometry::from_masses(0.3, 0.1, 0.0).unwrap();
    let span = base.max_offset();
    let at = |t: f64| i12(&CoreShellGeometry { t, ..base });
    for k in 1..=10 {
        let t = span * k as f64 / 10.0;
        assert!((at(t) - at(-t)).abs() < 1e-12);
    }
    let ts: Vec<f64> = (0..=40).map(|k| span * k as f64 / 40.0).collect();
    for w in ts.windows(2) {
        let (a, b) = (at(w[0]), at(w[1]));
        assert!(a - b > 10.0 * QUAD_TOL * a.abs(), "I12({}) = {a}, I12({}) = {b}", w[0], w[1]);
    }
}

#[test]
fn derivative_negative_and_matches_differences() {
    let base = CoreShellGeometry::from_masses(0.3, 0.1, 0.0).unwrap();
    let span = base.max_offset();
    for k in 1..=20 {
        let g = CoreShellGeometry { t: span * k as f64 / 20.0, ..base };
        assert!(di12_dt(&g) < 0.0);
    }
    let t = 0.5 * span;
    let h = 1e-4 * span;
    let fd = (i12(&CoreShellGeometry { t: t + h, ..base }) - i12(&CoreShellGeometry { t: t - h, ..base })) / (2.0 * h);
    let d = di12_dt(&CoreShellGeometry { t, ..base });
    assert!((fd - d).abs() < 1e-6, "{fd} vs {d}");
}

#[test]
fn shell_identity_holds_for_every_offset() {
    let base = CoreShellGeometry::from_masses(0.25, 0.15, 0.0).unwrap();
    let whole = i_b1b1(&base);
    for k in 0..=8 {
        let g = CoreShellGeometry { t: base.max_offset() * k as f64 / 8.0, ..base };
        let sum = i11(&g) + 2.0 * i12(&g) + i22(g.r2);
        assert!((sum - whole).abs() < 1e-7, "t = {}: {sum} vs {whole}", g.t);
    }
}

#[test]
fn objective_is_affine_in_core_interaction() {
    let big = InteractionMatrix::new(40.0, 15.0, 70.0).unwrap();
    let base = CoreShellGeometry::from_masses(0.25, 0.15, 0.0).unwrap();
    let rows: Vec<(f64, f64)> = (0..=8)
        .map(|k| {
            let g = CoreShellGeometry { t: base.max_offset() * k as f64 / 8.0, ..base };
            (placement_objective(&g, &big), -(big.g11 - big.g12) * i12(&g))
        })
        .collect();
    let c = rows[0].0 - rows[0].1;
    for (obj, lin) in rows {
        assert!((obj - lin - c).abs() < 1e-7);
    }
}

#[test]
fn dichotomy_over_interaction_grid() {
    let s = degenerate();
    let m = MassPair::new(0.2, 0.08).unwrap();
    for a in 0..10 {
        for b in 0..10 {
            let g11 = 10.0 + 10.0 * a as f64;
            let g12 = 15.0 + 10.0 * b as f64;
            let big = InteractionMatrix::new(g11, g12, 50.0).unwrap();
            let r = f0(m, &s, &big).unwrap();
            let want = if g11 > g12 { Placement::Concentric } else { Placement::Tangent };
            assert_eq!(r.placement, want, "Γ11 = {g11}, Γ12 = {g12}");
            // The chosen offset is optimal among sampled ones.
            let base = CoreShellGeometry::from_masses(m.m1, m.m2, 0.0).unwrap();
            for t in [0.0, 0.5 * base.max_offset(), base.max_offset()] {
                let v = placement_objective(&CoreShellGeometry { t, ..base }, &big);
                assert!(r.value <= v + 1e-7);
            }
        }
    }
}

#[test]
fn indifferent_when_coefficients_match() {
    let s = degenerate();
    let big = InteractionMatrix::new(30.0, 30.0, 10.0).unwrap();
    let m = MassPair::new(0.2, 0.1).unwrap();
    assert_eq!(f0(m, &s, &big).unwrap().placement, Placement::OffsetIndifferent);
    let base = CoreShellGeometry::from_masses(0.2, 0.1, 0.0).unwrap();
    let a = placement_objective(&base, &big);
    let b = placement_objective(&CoreShellGeometry { t: base.max_offset(), ..base }, &big);
    assert!((a - b).abs() < 10.0 * QUAD_TOL * a.abs());
}

#[test]
fn relabeling_species_changes_value() {
    let s = degenerate();
    let big = InteractionMatrix::new(40.0, 0.0, 90.0).unwrap();
    let swapped = InteractionMatrix::new(90.0, 0.0, 40.0).unwrap();
    let a = f0(MassPair::new(0.3, 0.1).unwrap(), &s, &big).unwrap();
    let b = f0(MassPair::new(0.1, 0.3).unwrap(), &s, &swapped).unwrap();
    assert!((a.value - b.value).abs() > 1e-6);
}

#[test]
fn single_species_is_disk_energy() {
    let s = degenerate();
    let big = InteractionMatrix::new(40.0, 3.0, 90.0).unwrap();
    let r = f0(MassPair::new(0.0, 0.2).unwrap(), &s, &big).unwrap();
    let rad = (0.2 / PI).sqrt();
    let closed = 0.5 * PI * rad.powi(4) * (0.25 - rad.ln());
    let expect = 0.5 * 90.0 * (closed + 0.04 * ternary::ewald::green_regular_part_origin());
    assert!((r.value - expect).abs() < 1e-8 * expect.abs());
}
