//! The checked-in configs parse and describe the published experiment grids.

use std::path::PathBuf;

use poroflow::io::{load_config, ProblemKind};
use poroflow::manufactured::Theta;
use poroflow::solver::ViscousForm;

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn manufactured_tables() {
    let t1 = load_config(&config("table1.json")).unwrap();
    assert_eq!(t1.theta, Theta::Exp);
    assert_eq!(t1.rows.len(), 9);
    assert!(t1.rows.contains(&(6, 80)));

    let t2 = load_config(&config("table2.json")).unwrap();
    assert_eq!(t2.theta, Theta::Sin);
    assert!(t2.rows.iter().all(|&(_, n)| [20, 80, 160].contains(&n)));

    for (name, theta) in [("table3_exp.json", Theta::Exp), ("table3_sin.json", Theta::Sin)] {
        let t3 = load_config(&config(name)).unwrap();
        assert_eq!(t3.theta, theta);
        assert_eq!(t3.rows, vec![(4, 10), (5, 40), (6, 160)]);
    }
}

#[test]
fn practical_table() {
    let t4 = load_config(&config("table4.json")).unwrap();
    assert_eq!(t4.problem, ProblemKind::Practical);
    assert_eq!((t4.nx, t4.ny, t4.n_steps), (128, 64, 10));
    assert_eq!(t4.lambdas, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
    assert_eq!(t4.viscous_form, ViscousForm::SymGrad);
    let p = t4.practical(Some(3.0));
    assert_eq!((p.params.lambda1, p.params.lambda2), (3.0, 3.0));
}
