//! Structural properties of the assembled step on small meshes.

use std::f64::consts::PI;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use poroflow::constitutive::{validate_smallness, MaterialParams};
use poroflow::fem::{nodal_interpolate, CsrMatrix};
use poroflow::manufactured::{ManufacturedCase, Theta};
use poroflow::mesh::unit_square;
use poroflow::solver::{
    residual_check, time_loop, Assembler, DirectSolver, ProblemSetup, RunOptions, SystemState, TimeStepper,
};

fn random_admissible(rng: &mut StdRng) -> MaterialParams {
    loop {
        let e1 = rng.gen_range(0.2..2.0);
        let p = MaterialParams {
            alpha: rng.gen_range(0.1..3.0),
            nu: rng.gen_range(0.1..3.0),
            rho: rng.gen_range(0.1..3.0),
            rho_s: 1.0,
            e1,
            e2: -rng.gen_range(0.01..0.45) * e1,
            lambda1: rng.gen_range(-3.0..3.0),
            lambda2: rng.gen_range(-3.0..3.0),
            delta: rng.gen_range(0.05..0.4),
            dim: 2,
        };
        if p.validate().is_ok() && validate_smallness(&p).admissible {
            return p;
        }
    }
}

/// Random displacement with `|div u|` well inside any truncation threshold.
fn random_state(setup: &ProblemSetup, rng: &mut StdRng) -> SystemState {
    let mut s = SystemState::zeros(setup);
    s.u.iter_mut().for_each(|x| *x = rng.gen_range(-0.02..0.02));
    s.v.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
    s
}

fn scaled(matrix: &CsrMatrix, scale: &[f64]) -> CsrMatrix {
    let mut a = matrix.clone();
    for (i, s) in scale.iter().enumerate() {
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            a.values[k] *= s;
        }
    }
    a
}

#[test]
fn zero_data_step_is_zero_and_system_is_nonsingular() {
    let mut rng = StdRng::seed_from_u64(7);
    let setup = ProblemSetup::new(unit_square(2).unwrap(), 0.1, 1);
    let assembler = Assembler::new(&setup).unwrap();
    let lay = assembler.layout;
    for _ in 0..20 {
        let params = random_admissible(&mut rng);
        // Coefficients frozen at an arbitrary previous displacement.
        let prev = random_state(&setup, &mut rng);
        let sys = assembler.assemble_step(&prev, &setup, &params).unwrap();
        let solver = DirectSolver::symmetric(assembler.pattern(), lay.symmetrizing_scale(setup.dt), lay.pivot_signs())
            .unwrap();
        let x = solver.solve(&sys.matrix, &vec![0.0; lay.n_total()]).unwrap();
        assert!(x.iter().all(|v| v.abs() <= 1e-10));

        let b: Vec<f64> = (0..lay.n_total()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = solver.solve(&sys.matrix, &b).unwrap();
        let r = sys.matrix.matvec(&y);
        let err = r.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "residual {err}");

        // Zero data from rest: the full step returns zero.
        let stepper = TimeStepper::new(&setup, &params).unwrap();
        let (next, _) = stepper.step(&SystemState::zeros(&setup)).unwrap();
        assert!(next.u.iter().chain(&next.v).chain(&next.p).all(|v| v.abs() <= 1e-10));
    }
}

#[test]
fn scaled_system_is_symmetric() {
    let mut rng = StdRng::seed_from_u64(11);
    let case = ManufacturedCase::new(Theta::Sin, MaterialParams::manufactured());
    for form in [poroflow::solver::ViscousForm::GradGrad, poroflow::solver::ViscousForm::SymGrad] {
        let mut setup = case.setup(2, 5).unwrap();
        setup.viscous_form = form;
        let assembler = Assembler::new(&setup).unwrap();
        let scale = assembler.layout.symmetrizing_scale(setup.dt);
        let prev = random_state(&setup, &mut rng);
        let (raw, _, _) = assembler.assemble_raw(&prev, &setup, &case.params).unwrap();
        let a = scaled(&raw, &scale);
        assert!(a.max_abs_diff(&a.transpose()) <= 1e-12 * a.max_abs());
        let sys = assembler.assemble_step(&prev, &setup, &case.params).unwrap();
        let a = scaled(&sys.matrix, &scale);
        assert!(a.max_abs_diff(&a.transpose()) <= 1e-12 * a.max_abs());
    }
}

#[test]
fn residual_and_discrete_divergence_of_every_step() {
    let case = ManufacturedCase::new(Theta::Exp, MaterialParams::manufactured());
    let setup = case.setup(2, 4).unwrap();
    let out = time_loop(
        &setup,
        &case.params,
        case.initial_state(&setup),
        RunOptions { keep_history: true },
        |_, _| Ok(()),
    )
    .unwrap();
    assert_eq!(out.history.len(), 5);
    let assembler = Assembler::new(&setup).unwrap();
    let lay = assembler.layout;
    for w in out.history.windows(2) {
        let r = residual_check(&w[1], &w[0], &setup, &case.params).unwrap();
        assert!(r <= 1e-9, "residual {r}");

        let (raw, _, _) = assembler.assemble_raw(&w[0], &setup, &case.params).unwrap();
        for i in lay.p_offset()..lay.p_offset() + lay.np {
            let bv: f64 = raw
                .row(i)
                .filter(|&(j, _)| j >= lay.v_offset() && j < lay.p_offset())
                .map(|(j, a)| a * w[1].v[j - lay.v_offset()])
                .sum();
            assert!(bv.abs() <= 1e-9, "row {i}: {bv}");
        }
    }
    for d in &out.diagnostics {
        assert!(d.residual <= 1e-9);
    }
}

#[test]
fn time_loop_matches_repeated_steps() {
    let case = ManufacturedCase::new(Theta::Sin, MaterialParams::manufactured());
    let setup = case.setup(2, 3).unwrap();
    let init = case.initial_state(&setup);
    let out = time_loop(&setup, &case.params, init.clone(), RunOptions::default(), |_, _| Ok(())).unwrap();
    let stepper = TimeStepper::new(&setup, &case.params).unwrap();
    let mut s = init;
    let mut accumulated = vec![0.0; s.p.len()];
    for _ in 0..3 {
        s = stepper.step(&s).unwrap().0;
        accumulated.iter_mut().zip(&s.p).for_each(|(a, p)| *a += setup.dt * p);
    }
    assert_eq!(out.final_state, s);
    assert_eq!(out.diagnostics.len(), 3);
    let last = &out.diagnostics[2].averaged_pressure;
    for (a, b) in last.iter().zip(&accumulated) {
        assert!((a - b).abs() <= 1e-14 * (1.0 + b.abs()));
    }
}

#[test]
fn single_step_run_equals_one_step() {
    let case = ManufacturedCase::new(Theta::Exp, MaterialParams::manufactured());
    let setup = case.setup(2, 1).unwrap();
    let init = case.initial_state(&setup);
    let out = time_loop(&setup, &case.params, init.clone(), RunOptions::default(), |_, _| Ok(())).unwrap();
    let (next, _) = TimeStepper::new(&setup, &case.params).unwrap().step(&init).unwrap();
    assert_eq!(out.final_state, next);
    assert!((next.time - 1.0).abs() < 1e-15);
}

#[test]
fn linear_elastic_block_matches_lame_form() {
    // E1 = 1/8, E2 = -3/64 correspond to mu = 4, lambda = 12. From rest the
    // coefficients reduce to the linear law for any (lambda1, lambda2).
    for l in [0.0, 3.0] {
        let params = MaterialParams::practical(l);
        let setup = ProblemSetup::new(unit_square(2).unwrap(), 1.0, 1);
        let assembler = Assembler::new(&setup).unwrap();
        let (raw, _, _) = assembler.assemble_raw(&SystemState::zeros(&setup), &setup, &params).unwrap();
        let nu = assembler.layout.nu;
        let k = raw.block(0..nu, 0..nu);
        let u = nodal_interpolate(|x| [x[0] * x[0], x[0] * x[1]], &setup.u_map);
        let w = nodal_interpolate(|x| [x[0] * x[1], x[1] * x[1]], &setup.u_map);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        // alpha/dt * int u.w + 2 mu int eps(u):eps(w) + lambda int div u div w
        let expected = 1.0 * 0.25 + 2.0 * 4.0 * 1.125 + 12.0 * 2.25;
        assert!((dot(&u, &k.matvec(&w)) - expected).abs() < 1e-11);
        assert!((dot(&w, &k.matvec(&u)) - expected).abs() < 1e-11);
    }
}

#[test]
fn viscous_forms_differ_only_by_cross_term() {
    // For v = (sin(pi x), 0): int grad v : grad v = pi^2/2 and the symmetric
    // form adds int (d1 v1)^2 = pi^2/2.
    let case = ManufacturedCase::new(Theta::Exp, MaterialParams::manufactured());
    let mut setup = case.setup(4, 1).unwrap();
    let v = nodal_interpolate(|x| [(PI * x[0]).sin(), 0.0], &setup.v_map);
    let mut quad = [0.0; 2];
    for (k, form) in [poroflow::solver::ViscousForm::GradGrad, poroflow::solver::ViscousForm::SymGrad]
        .into_iter()
        .enumerate()
    {
        setup.viscous_form = form;
        let assembler = Assembler::new(&setup).unwrap();
        let (raw, _, _) = assembler.assemble_raw(&SystemState::zeros(&setup), &setup, &case.params).unwrap();
        let lay = assembler.layout;
        let a = raw.block(lay.v_offset()..lay.p_offset(), lay.v_offset()..lay.p_offset());
        quad[k] = v.iter().zip(a.matvec(&v)).map(|(x, y)| x * y).sum();
    }
    assert!((quad[1] - quad[0] - PI * PI / 2.0).abs() < 1e-3);
}
