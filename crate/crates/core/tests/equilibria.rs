use std::f64::consts::PI;
use wavectl_core::equilibria::{
    default_seeds, enumerate_equilibria, find_equilibrium, interpolate, stability_spectrum,
};
use wavectl_core::{Grid, Nonlinearity};

mod common;
use common::{shoot, shooting_roots};

#[test]
fn positive_equilibrium_matches_shooting() {
    let n = 255;
    let g = Grid::with_defaults(n).unwrap();
    let nl = Nonlinearity::cubic(15.0);
    let eq = find_equilibrium(&g.sample(|x| 0.8 * (PI * x).sin()), &g, &nl).unwrap();
    assert!(eq.residual_inf < 1e-10);
    let roots = shooting_roots(n, 15.0);
    let s = roots.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(s > 0.0);
    let (_, profile) = shoot(s, n, 15.0);
    let max_oracle = profile.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let max_ours = eq.e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!((max_oracle - max_ours).abs() < 1e-6, "{max_oracle} vs {max_ours}");
}

#[test]
fn enumeration_counts_match_shooting() {
    let g = Grid::with_defaults(127).unwrap();
    for (lambda, expected) in [(15.0, 3usize), (5.0, 1)] {
        let nl = Nonlinearity::cubic(lambda);
        let en = enumerate_equilibria(&g, &nl, &default_seeds(&g)).unwrap();
        assert_eq!(en.equilibria.len(), expected, "lambda {lambda}");
        assert_eq!(shooting_roots(127, lambda).len(), expected, "oracle at {lambda}");
    }
    let en = enumerate_equilibria(&g, &Nonlinearity::linear(), &default_seeds(&g)).unwrap();
    assert_eq!(en.equilibria.len(), 1);
    assert!(en.equilibria[0].is_trivial());
}

#[test]
fn default_instance_structure() {
    let g = Grid::with_defaults(127).unwrap();
    let nl = Nonlinearity::cubic(15.0);
    let en = enumerate_equilibria(&g, &nl, &default_seeds(&g)).unwrap();
    let eqs = &en.equilibria;
    let morse: Vec<usize> = eqs.iter().map(|e| e.morse_index).collect();
    assert_eq!(morse, vec![0, 0, 1]);
    assert!(eqs[0].first_mode(&g) < 0.0 && eqs[1].first_mode(&g) > 0.0);
    assert!(eqs[2].is_trivial());
    for (i, e) in eqs.iter().enumerate() {
        assert_eq!(e.id, i);
        assert!(e.residual_inf < 1e-10);
        assert!(e.spectrum.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(e.morse_index, e.spectrum.iter().filter(|&&m| m < 0.0).count());
    }
    // oddness of the enumerated set
    for e in eqs {
        let best = eqs
            .iter()
            .map(|o| o.e.iter().zip(&e.e).fold(0.0f64, |m, (a, b)| m.max((a + b).abs())))
            .fold(f64::INFINITY, f64::min);
        assert!(best < 1e-9);
    }
    let zero = &eqs[2];
    let ev = stability_spectrum(zero, 3, &g, &nl).unwrap();
    assert!((ev[0] - (PI * PI - 15.0)).abs() < 1e-2);
    assert!(ev[1] > 0.0);
}

#[test]
fn enumeration_is_order_independent() {
    let g = Grid::with_defaults(63).unwrap();
    let nl = Nonlinearity::cubic(15.0);
    let seeds = default_seeds(&g);
    let mut rev = seeds.clone();
    rev.reverse();
    let a = enumerate_equilibria(&g, &nl, &seeds).unwrap();
    let b = enumerate_equilibria(&g, &nl, &rev).unwrap();
    assert_eq!(a.equilibria.len(), b.equilibria.len());
    for (x, y) in a.equilibria.iter().zip(&b.equilibria) {
        assert_eq!(x.id, y.id);
        assert_eq!(x.label, y.label);
        assert!(x.e.iter().zip(&y.e).all(|(p, q)| (p - q).abs() < 1e-6));
    }
}

#[test]
fn refinement_needs_few_newton_steps() {
    let coarse = Grid::with_defaults(255).unwrap();
    let fine = Grid::with_defaults(511).unwrap();
    let nl = Nonlinearity::cubic(15.0);
    let eq = find_equilibrium(&coarse.sample(|x| 0.8 * (PI * x).sin()), &coarse, &nl).unwrap();
    let guess = interpolate(&eq.e, &coarse, &fine);
    let refined = find_equilibrium(&guess, &fine, &nl).unwrap();
    assert!(refined.newton_iterations <= 5, "{}", refined.newton_iterations);
    assert!(refined.residual_inf < 1e-10);
}

#[test]
fn bad_guess_rejected() {
    let g = Grid::with_defaults(15).unwrap();
    let nl = Nonlinearity::cubic(15.0);
    assert!(find_equilibrium(&[1.0; 3], &g, &nl).is_err());
    let mut bad = vec![0.0; 15];
    bad[3] = f64::NAN;
    assert!(find_equilibrium(&bad, &g, &nl).is_err());
}
